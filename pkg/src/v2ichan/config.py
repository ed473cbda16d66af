"""
Run configuration: INI sections ``[ofdm]``, ``[channel]``, ``[mlp]`` and
``[experiment]``.

Every option is optional and falls back to the packaged defaults
(``data/default.ini``). Unknown sections or options are rejected, and each
validation failure raises :class:`~v2ichan.errors.ConfigError` naming the
offending ``section.option``.
"""

import configparser
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from . import channel as chn
from .errors import ConfigError
from .harness import ESTIMATORS, ChannelConfig
from .mlp import TrainConfig
from .ofdm import OfdmConfig


@dataclass(frozen=True)
class MlpSection:
    n_h: int = 10
    train: TrainConfig = field(default_factory=TrainConfig)
    augment: bool = True


@dataclass(frozen=True)
class ExperimentSection:
    seed: int = 1
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    train_snr_db: float = 10.0
    n_frames: int = 100
    frames_per_trajectory: int = 1
    horizon: int = 0
    frames_per_point: int = 2000
    data_symbols: int = 4
    estimators: tuple = ("perfect", "ls", "mmse", "mlp")
    hist_bins: int = 20
    output_dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    mlp: MlpSection = field(default_factory=MlpSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy with both the data seed and the network seed replaced."""
        return replace(self,
                       mlp=replace(self.mlp, train=replace(self.mlp.train, seed=seed)),
                       experiment=replace(self.experiment, seed=seed))


_SCHEMA = {
    "ofdm": ("num_subcarriers", "cp_len", "bits_per_symbol"),
    "channel": ("tap_delays", "tap_powers", "doppler_hz", "carrier_freq_hz", "sample_period_s",
                "step_samples", "block_steps", "pathloss_constant", "pathloss_exponent",
                "shadow_sigma_db", "fast_fading_mean", "initial_distance_m", "speed_mps",
                "bs_offset_m"),
    "mlp": ("n_h", "learning_rate", "epochs", "init_scale", "seed", "augment"),
    "experiment": ("seed", "snr_db", "train_snr_db", "n_frames", "frames_per_trajectory", "horizon",
                   "frames_per_point", "data_symbols", "estimators", "hist_bins", "output_dir"),
}


def default_config_text() -> str:
    return resources.files("v2ichan").joinpath("data/default.ini").read_text()


class _Reader:
    def __init__(self, parser):
        self.p = parser

    def raw(self, section, key):
        return self.p.get(section, key).strip()

    def _conv(self, section, key, fn, what):
        text = self.raw(section, key)
        try:
            return fn(text)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}", f"expected {what}, got {text!r}") from None

    def int(self, section, key, minimum=None):
        v = self._conv(section, key, int, "an integer")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{section}.{key}", f"must be >= {minimum}, got {v}")
        return v

    def float(self, section, key, positive=False, nonneg=False):
        v = self._conv(section, key, float, "a number")
        if not math.isfinite(v):
            raise ConfigError(f"{section}.{key}", "must be finite")
        if positive and not v > 0:
            raise ConfigError(f"{section}.{key}", f"must be positive, got {v}")
        if nonneg and v < 0:
            raise ConfigError(f"{section}.{key}", f"must be non-negative, got {v}")
        return v

    def floats(self, section, key):
        return self._conv(section, key, lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
                          "a comma-separated list of numbers")

    def ints(self, section, key):
        return self._conv(section, key, lambda s: tuple(int(x) for x in s.split(",") if x.strip()),
                          "a comma-separated list of integers")

    def bool(self, section, key):
        try:
            return self.p.getboolean(section, key)
        except ValueError:
            raise ConfigError(f"{section}.{key}", "expected a boolean") from None

    def optional_int(self, section, key, minimum):
        if self.raw(section, key).lower() in ("", "none"):
            return None
        return self.int(section, key, minimum)


def _check(key, ok, message):
    if not ok:
        raise ConfigError(key, message)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse INI text layered over the packaged defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.read_string(default_config_text(), source="default.ini")
    user = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        user.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc)) from None
    for section in user.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in user[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown option")
            parser[section][key] = user[section][key]
    return _build(_Reader(parser))


def load_config(path=None) -> RunConfig:
    if path is None:
        return parse_config("")
    return parse_config(Path(path).read_text(), source=str(path))


def _build(r: _Reader) -> RunConfig:
    n = r.int("ofdm", "num_subcarriers", 1)
    _check("ofdm.num_subcarriers", n & (n - 1) == 0, f"must be a power of two, got {n}")
    cp = r.int("ofdm", "cp_len", 0)
    _check("ofdm.cp_len", cp < n, f"must be smaller than num_subcarriers ({n}), got {cp}")
    bps = r.int("ofdm", "bits_per_symbol", 1)
    _check("ofdm.bits_per_symbol", bps == 2, "only 4-QAM (2) is supported")
    ofdm = OfdmConfig(n, cp, bps)

    delays = r.ints("channel", "tap_delays")
    powers = r.floats("channel", "tap_powers")
    doppler = r.floats("channel", "doppler_hz")
    _check("channel.tap_delays", len(delays) >= 1, "needs at least one tap")
    _check("channel.tap_delays", delays[0] == 0 and all(b > a for a, b in zip(delays, delays[1:])),
           "must start at 0 and be strictly increasing")
    _check("channel.tap_delays", delays[-1] < cp, f"max delay must be below cp_len ({cp})")
    _check("channel.tap_powers", len(powers) == len(delays), "needs one value per tap")
    _check("channel.tap_powers", all(p >= 0 for p in powers) and abs(sum(powers) - 1.0) <= 1e-12,
           "must be non-negative and sum to 1")
    _check("channel.doppler_hz", len(doppler) == len(delays), "needs one value per tap")
    profile = chn.MultipathProfile(
        delays, powers, doppler,
        carrier_freq_hz=r.float("channel", "carrier_freq_hz", positive=True),
        sample_period_s=r.float("channel", "sample_period_s", positive=True))
    large = chn.LargeScaleParams(
        pathloss_constant=r.float("channel", "pathloss_constant", positive=True),
        pathloss_exponent=r.float("channel", "pathloss_exponent", positive=True),
        shadow_sigma_db=r.float("channel", "shadow_sigma_db", nonneg=True),
        fast_fading_mean=r.float("channel", "fast_fading_mean", positive=True))
    d0 = r.float("channel", "initial_distance_m", positive=True)
    offset = r.float("channel", "bs_offset_m", nonneg=True)
    _check("channel.bs_offset_m", offset <= d0, "cannot exceed initial_distance_m")
    traj = chn.Trajectory(d0, r.float("channel", "speed_mps", nonneg=True), offset)
    channel = ChannelConfig(profile, traj, large,
                            step_samples=r.int("channel", "step_samples", 1),
                            block_steps=r.optional_int("channel", "block_steps", 1))

    lr = r.float("mlp", "learning_rate")
    _check("mlp.learning_rate", 0 < lr < 1, f"must lie in (0, 1), got {lr}")
    train = TrainConfig(lr, r.int("mlp", "epochs", 0), r.int("mlp", "seed"),
                        r.float("mlp", "init_scale", nonneg=True))
    mlp = MlpSection(r.int("mlp", "n_h", 1), train, r.bool("mlp", "augment"))

    snrs = r.floats("experiment", "snr_db")
    _check("experiment.snr_db", len(snrs) >= 1, "needs at least one SNR value")
    estimators = tuple(e.strip() for e in r.raw("experiment", "estimators").split(",") if e.strip())
    _check("experiment.estimators", estimators and set(estimators) <= set(ESTIMATORS),
           f"must be a non-empty subset of {', '.join(ESTIMATORS)}")
    horizon = r.int("experiment", "horizon", 0)
    _check("experiment.horizon", horizon <= 1, "must be 0 (estimation) or 1 (prediction)")
    exp = ExperimentSection(
        seed=r.int("experiment", "seed"),
        snr_db=snrs,
        train_snr_db=r.float("experiment", "train_snr_db"),
        n_frames=r.int("experiment", "n_frames", 10),
        frames_per_trajectory=r.int("experiment", "frames_per_trajectory", 1),
        horizon=horizon,
        frames_per_point=r.int("experiment", "frames_per_point", 1),
        data_symbols=r.int("experiment", "data_symbols", 1),
        estimators=estimators,
        hist_bins=r.int("experiment", "hist_bins", 2),
        output_dir=r.raw("experiment", "output_dir") or "out",
    )
    return RunConfig(ofdm, channel, mlp, exp)
