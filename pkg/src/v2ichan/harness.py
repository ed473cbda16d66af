"""
Experiment orchestration: datasets from simulated drives, MLP training
runs, and the MSE / BER / histogram / regression metrics.

Randomness is keyed, never shared. Every trajectory, split and Monte Carlo
trial seeds its own generator from ``SeedSequence(seed, spawn_key=...)``,
so a result depends only on the configuration and the seed.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import channel as chn
from .errors import InputShapeError, MissingModelError, UndefinedMetricError
from .estimators import (
    ChannelCovariance,
    PilotObservation,
    cfr_to_time,
    equalize,
    mmse_estimate,
    sample_covariance,
)
from .mlp import ChannelPredictor, Standardizer, TrainConfig, init_network, train
from .ofdm import OfdmConfig, generate_pilot, ofdm_demodulate, ofdm_modulate, qam_demap, qam_map, random_bits

SPLITS = ("train", "validation", "test")
SPLIT_FRACTIONS = (0.70, 0.15, 0.15)
ESTIMATORS = ("perfect", "ls", "mmse", "outdated_ls", "mlp")

# spawn keys for the independent random streams
_KEY_TRAJ, _KEY_SPLIT, _KEY_SWEEP, _KEY_COV = 0, 1, 2, 3


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass(frozen=True)
class ChannelConfig:
    """Everything needed to simulate one drive.

    ``step_samples`` is the sample spacing between consecutive positions
    (pilot frames) on the trajectory.
    """

    profile: chn.MultipathProfile = field(default_factory=chn.MultipathProfile)
    trajectory: chn.Trajectory = field(default_factory=chn.Trajectory)
    large_scale: chn.LargeScaleParams = field(default_factory=chn.LargeScaleParams)
    step_samples: int = 80
    block_steps: int = None

    def drive(self, ofdm: OfdmConfig, n_steps: int, rng):
        return chn.evolve_trajectory(
            self.trajectory, self.profile, self.large_scale, n_steps, rng,
            num_subcarriers=ofdm.num_subcarriers, step_samples=self.step_samples,
            block_steps=self.block_steps)


@dataclass
class Dataset:
    """Per-subcarrier (input, target) pairs with a 70/15/15 split.

    Rows of ``inputs`` hold (real, imag) of the LS observation ``Y/X``;
    rows of ``targets`` the true channel coefficient, ``horizon`` positions
    later. ``split`` labels each row 0 (train), 1 (validation) or 2 (test).
    """

    inputs: np.ndarray
    targets: np.ndarray
    split: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.inputs)

    @property
    def split_indices(self) -> dict:
        return {name: np.flatnonzero(self.split == i) for i, name in enumerate(SPLITS)}

    def subset(self, name: str):
        idx = np.flatnonzero(self.split == SPLITS.index(name))
        return self.inputs[idx], self.targets[idx]


class BitErrors(NamedTuple):
    rate: float
    errors: int
    total: int


class RegressionStats(NamedTuple):
    slope: float
    intercept: float
    r: float


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    estimator: str
    metric: str
    value: float
    trial_count: int
    error_count: int


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def get(self, estimator: str, snr_db: float, metric: str = "ber") -> SweepRow:
        for row in self.rows:
            if row.estimator == estimator and row.snr_db == snr_db and row.metric == metric:
                return row
        raise KeyError((estimator, snr_db, metric))

    def curve(self, estimator: str, metric: str = "ber"):
        rows = sorted((r for r in self.rows if r.estimator == estimator and r.metric == metric),
                      key=lambda r: r.snr_db)
        return [r.snr_db for r in rows], [r.value for r in rows]


@dataclass
class TrainRun:
    predictor: ChannelPredictor
    history: list
    best_epoch: int
    snr_db: float = float("nan")


def split_labels(n: int, seed, fractions=SPLIT_FRACTIONS) -> np.ndarray:
    """Shuffle ``n`` rows into train/validation/test with the given fractions."""
    n_train = round(fractions[0] * n)
    n_val = round(fractions[1] * n)
    labels = np.full(n, 2, dtype=np.int8)
    perm = _rng(seed, _KEY_SPLIT).permutation(n)
    labels[perm[:n_train]] = 0
    labels[perm[n_train:n_train + n_val]] = 1
    return labels


def _pairs(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex).ravel()
    return np.stack([z.real, z.imag], axis=1)


def _complex(pairs) -> np.ndarray:
    p = np.asarray(pairs, dtype=float)
    return p[..., 0] + 1j * p[..., 1]


def build_dataset(channel: ChannelConfig, ofdm: OfdmConfig, snr_db: float, n_frames: int, seed,
                  *, frames_per_trajectory: int = None, horizon: int = 0) -> Dataset:
    """Transmit pilot frames along simulated drives and collect training pairs.

    Frames are grouped into independent drives of ``frames_per_trajectory``
    positions (one drive when None). At each position a random 4-QAM pilot
    frame is sent through the channel; every subcarrier gives one sample
    whose input is the LS observation there and whose target is the true
    channel coefficient ``horizon`` positions later (0 for estimation,
    1 for one-step prediction).
    """
    if n_frames < 10:
        raise ValueError("n_frames must be >= 10")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    per_traj = n_frames if frames_per_trajectory is None else frames_per_trajectory
    if per_traj < 1:
        raise ValueError("frames_per_trajectory must be >= 1")
    channel.profile.check_cyclic_prefix(ofdm)

    inputs, targets = [], []
    done = 0
    j = 0
    while done < n_frames:
        count = min(per_traj, n_frames - done)
        rng = _rng(seed, _KEY_TRAJ, j)
        chans = channel.drive(ofdm, count + horizon, rng)
        for i in range(count):
            pilot = generate_pilot(ofdm, rng)
            rx = chn.apply_channel(ofdm_modulate(pilot, ofdm), chans[i], ofdm, snr_db, rng)
            h_ls = ofdm_demodulate(rx, ofdm) / pilot
            inputs.append(_pairs(h_ls))
            targets.append(_pairs(chans[i + horizon].effective_cfr))
        done += count
        j += 1

    X = np.concatenate(inputs)
    T = np.concatenate(targets)
    provenance = {
        "seed": seed,
        "snr_db": snr_db,
        "n_frames": n_frames,
        "frames_per_trajectory": per_traj,
        "horizon": horizon,
        "num_subcarriers": ofdm.num_subcarriers,
        "cp_len": ofdm.cp_len,
        "tap_delays": channel.profile.tap_delays,
        "tap_powers": channel.profile.tap_powers,
        "doppler_hz": channel.profile.doppler_hz,
        "speed_mps": channel.trajectory.speed_mps,
        "step_samples": channel.step_samples,
    }
    return Dataset(X, T, split_labels(len(X), seed), provenance)


def nmse(estimates, truths) -> float:
    """Energy-normalized squared error ``sum|e - t|^2 / sum|t|^2``."""
    e = np.asarray(estimates)
    t = np.asarray(truths)
    if e.shape != t.shape:
        raise InputShapeError(f"estimates {e.shape} and truths {t.shape} differ")
    energy = float(np.sum(np.abs(t) ** 2))
    if energy == 0.0:
        raise UndefinedMetricError("NMSE is undefined for zero-energy truth")
    return float(np.sum(np.abs(e - t) ** 2)) / energy


def ber(tx_bits, rx_bits) -> BitErrors:
    tx = np.asarray(tx_bits).ravel()
    rx = np.asarray(rx_bits).ravel()
    if tx.shape != rx.shape or tx.size == 0:
        raise InputShapeError(f"bit streams must be non-empty and equal length ({tx.size} vs {rx.size})")
    errors = int(np.count_nonzero(tx != rx))
    return BitErrors(errors / tx.size, errors, int(tx.size))


def ber_sigma(rate: float, total: int) -> float:
    """Binomial standard error of a BER estimate."""
    return math.sqrt(max(rate * (1.0 - rate), 0.0) / total) if total else float("inf")


def at_most(a: BitErrors, b: BitErrors, k: float = 2.0) -> bool:
    """True when ``a.rate <= b.rate`` up to ``k`` combined standard errors."""
    tol = k * math.hypot(ber_sigma(a.rate, a.total), ber_sigma(b.rate, b.total))
    return a.rate <= b.rate + tol


def rotate_quarter_turns(inputs, targets):
    """Stack the four copies of each pair rotated by 0, 90, 180 and 270 degrees.

    The channel law is invariant under multiplication by ``j``, so the
    rotated pairs are equally likely samples. Training on all four makes
    the empirical mean exactly zero, which a bias-free network needs.
    """
    z = _complex(inputs)
    w = _complex(targets)
    turns = [1, 1j, -1, -1j]
    return (np.concatenate([_pairs(z * q) for q in turns]),
            np.concatenate([_pairs(w * q) for q in turns]))


def train_predictor(dataset: Dataset, cfg: TrainConfig, n_h: int = 10, augment: bool = True) -> TrainRun:
    """Fit a predictor on the train split, tracking NMSE on every split.

    Inputs and targets share one scale-only (uncentred) scaling fitted on
    the training inputs. With ``augment`` the training split is extended by its quarter
    turn rotations. The returned predictor holds the weights of the epoch
    with the lowest validation cost.
    """
    X_tr, T_tr = dataset.subset("train")
    if augment:
        X_tr, T_tr = rotate_quarter_turns(X_tr, T_tr)
    scaler = Standardizer.fit(X_tr, center=False)
    X_val, T_val = dataset.subset("validation")
    net = init_network(n_h, cfg.seed, cfg.init_scale)
    splits = {name: dataset.subset(name) for name in SPLITS}

    def track(epoch, network):
        probe = ChannelPredictor(network, scaler)
        return {name: nmse(probe.predict(x), t) for name, (x, t) in splits.items() if len(x)}

    validation = (scaler.transform(X_val), scaler.transform(T_val)) if len(X_val) else None
    result = train(net, scaler.transform(X_tr), scaler.transform(T_tr), cfg,
                   validation=validation, callback=track)
    return TrainRun(ChannelPredictor(result.network, scaler), result.history, result.best_epoch,
                    float(dataset.provenance.get("snr_db", float("nan"))))


def mse_vs_epoch(run: TrainRun, snr_db: float = None):
    """Rows ``(epoch, snr_db, split, nmse, is_best)`` for a training run."""
    snr = run.snr_db if snr_db is None else snr_db
    rows = []
    for rec in run.history:
        for name in SPLITS:
            if name in rec.extra:
                rows.append((rec.epoch, snr, name, rec.extra[name], rec.epoch == run.best_epoch))
    return rows


def error_histogram(outputs, targets, bin_count: int = 20, split=None):
    """Histogram of ``targets - outputs`` with bins shared across splits.

    Both (real, imag) components count as separate errors. Returns rows
    ``(bin_lo, bin_hi, count, split_name)``. If every error is identical a
    single zero-width bin holds all of them.
    """
    if bin_count < 2:
        raise ValueError("bin_count must be >= 2")
    o = np.asarray(outputs, dtype=float)
    t = np.asarray(targets, dtype=float)
    if o.shape != t.shape:
        raise InputShapeError("outputs and targets differ in shape")
    err = (t - o).reshape(len(t), -1)
    labels = np.zeros(len(t), dtype=int) if split is None else np.asarray(split)
    names = {0: "all"} if split is None else dict(enumerate(SPLITS))
    lo, hi = float(err.min()), float(err.max())
    edges = np.array([lo, hi]) if lo == hi else np.linspace(lo, hi, bin_count + 1)
    rows = []
    for code, name in names.items():
        e = err[labels == code].ravel()
        if lo == hi:
            counts = np.array([e.size])
        else:
            counts, _ = np.histogram(e, bins=edges)
        rows.extend((float(a), float(b), int(c), name) for a, b, c in zip(edges[:-1], edges[1:], counts))
    return rows


def regression_stats(outputs, targets) -> RegressionStats:
    """Least-squares line of outputs against targets and their correlation."""
    o = np.asarray(outputs, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if o.shape != t.shape or o.size < 2:
        raise InputShapeError("need at least two paired points")
    tc = t - t.mean()
    oc = o - o.mean()
    sxx = float(tc @ tc)
    if sxx == 0.0:
        raise UndefinedMetricError("regression is undefined for constant targets")
    slope = float(tc @ oc) / sxx
    intercept = float(o.mean() - slope * t.mean())
    syy = float(oc @ oc)
    r = float(tc @ oc) / math.sqrt(sxx * syy) if syy > 0 else 0.0
    return RegressionStats(slope, intercept, max(-1.0, min(1.0, r)))


def split_regression(predictor: ChannelPredictor, dataset: Dataset) -> dict:
    """Regression statistics for every split plus ``all``."""
    out = {}
    for name in SPLITS:
        x, t = dataset.subset(name)
        if len(x) >= 2:
            out[name] = regression_stats(predictor.predict(x), t)
    out["all"] = regression_stats(predictor.predict(dataset.inputs), dataset.targets)
    return out


def estimate_covariance(channel: ChannelConfig, ofdm: OfdmConfig, seed, n_realizations: int = 2000
                        ) -> ChannelCovariance:
    """Sample covariance of ``g = F^H h`` over independent drives."""
    gs = []
    for j in range(n_realizations):
        ch = channel.drive(ofdm, 1, _rng(seed, _KEY_COV, j))[0]
        gs.append(cfr_to_time(ch.effective_cfr))
    return sample_covariance(np.array(gs))


def _predictor_for(predictor, snr_db):
    if isinstance(predictor, dict):
        if snr_db not in predictor:
            raise MissingModelError(f"no trained model for {snr_db} dB")
        return predictor[snr_db]
    return predictor


def ber_sweep(channel: ChannelConfig, ofdm: OfdmConfig, snr_grid, estimators=ESTIMATORS,
              frames_per_point: int = 2000, seed=0, *, predictor=None, covariance=None,
              frames_per_trajectory: int = 1, horizon: int = 0, data_symbols: int = 4) -> SweepResult:
    """Monte Carlo BER (and NMSE) of each estimator over an SNR grid.

    Each trial is one drive of ``frames_per_trajectory + 1`` positions. At
    every position a pilot symbol and ``data_symbols`` 4-QAM data symbols
    go through the channel with the same realization. Position 0 only
    supplies history, errors are counted from position 1 on. All estimators
    see the same frames and noise.

    Estimators
    ----------
    perfect
        true channel.
    ls, mmse
        current pilot.
    outdated_ls
        LS estimate from the previous position.
    mlp
        ``predictor`` applied to the LS estimate ``horizon`` positions back.
        ``predictor`` may be a dict keyed by SNR.
    """
    estimators = tuple(estimators)
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown:
        raise ValueError(f"unknown estimators {sorted(unknown)}")
    if "mlp" in estimators and predictor is None:
        raise MissingModelError("the mlp estimator needs a trained model")
    if not 0 <= horizon <= 1:
        raise ValueError("horizon must be 0 or 1")
    if frames_per_trajectory < 1 or data_symbols < 1 or frames_per_point < 1:
        raise ValueError("frame counts must be positive")
    channel.profile.check_cyclic_prefix(ofdm)
    if "mmse" in estimators and covariance is None:
        covariance = estimate_covariance(channel, ofdm, seed)

    n_trials = math.ceil(frames_per_point / frames_per_trajectory)
    N = ofdm.num_subcarriers
    result = SweepResult()
    for si, snr in enumerate(snr_grid):
        model = _predictor_for(predictor, snr) if "mlp" in estimators else None
        errors = dict.fromkeys(estimators, 0)
        err_energy = dict.fromkeys(estimators, 0.0)
        true_energy = 0.0
        total_bits = 0
        for trial in range(n_trials):
            rng = _rng(seed, _KEY_SWEEP, si, trial)
            chans = channel.drive(ofdm, frames_per_trajectory + 1, rng)
            h_ls_prev = None
            for p, ch in enumerate(chans):
                pilot = generate_pilot(ofdm, rng)
                bits = random_bits(2 * N * data_symbols, rng)
                data = qam_map(bits).reshape(data_symbols, N)
                burst = np.concatenate([ofdm_modulate(s, ofdm) for s in (pilot, *data)])
                clean = chn.convolve_channel(burst, ch, ofdm)
                var = chn.noise_variance(clean, snr)
                rx = chn.awgn(clean, snr, rng).reshape(data_symbols + 1, ofdm.frame_len)
                Y = np.array([ofdm_demodulate(r, ofdm) for r in rx])
                h_ls = Y[0] / pilot
                if p > 0:
                    truth = ch.effective_cfr
                    true_energy += float(np.sum(np.abs(truth) ** 2))
                    total_bits += bits.size
                    for name in estimators:
                        h_hat = _estimate(name, truth, h_ls, h_ls_prev, pilot, Y[0], var,
                                          covariance, model, horizon)
                        err_energy[name] += float(np.sum(np.abs(h_hat - truth) ** 2))
                        x_hat, _ = equalize(Y[1:], h_hat)
                        errors[name] += int(np.count_nonzero(qam_demap(x_hat) != bits))
                h_ls_prev = h_ls
        n_frames = n_trials * frames_per_trajectory
        for name in estimators:
            result.rows.append(SweepRow(float(snr), name, "ber", errors[name] / total_bits,
                                        n_frames, errors[name]))
            result.rows.append(SweepRow(float(snr), name, "nmse", err_energy[name] / true_energy,
                                        n_frames, 0))
    return result


def _estimate(name, truth, h_ls, h_ls_prev, pilot, y, var, covariance, model, horizon):
    if name == "perfect":
        return truth
    if name == "ls":
        return h_ls
    if name == "outdated_ls":
        return h_ls_prev
    if name == "mmse":
        return mmse_estimate(PilotObservation(pilot, y, var), covariance)
    source = h_ls_prev if horizon == 1 else h_ls
    return model.predict_complex(source)
