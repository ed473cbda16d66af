"""
Vehicle-to-infrastructure channel: large-scale gain, multipath taps with
per-tap Doppler phase rotation, frame convolution and AWGN.

Every random draw goes through an explicit ``rng`` argument. Anything
accepted by :func:`numpy.random.default_rng` works (an int seed, a
``SeedSequence`` or an existing ``Generator``).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DegenerateInputError,
    InputShapeError,
    InvalidGeometryError,
    InvalidProfileError,
    ISIViolationError,
)
from .ofdm import OfdmConfig

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class LargeScaleParams:
    """Pathloss, log-normal shadowing and exponential fast-fading power gain."""

    pathloss_constant: float = 1.0
    pathloss_exponent: float = 2.0
    shadow_sigma_db: float = 0.0
    fast_fading_mean: float = 1.0

    def __post_init__(self):
        if not self.pathloss_constant > 0:
            raise InvalidProfileError("pathloss_constant must be positive")
        if not self.pathloss_exponent > 0:
            raise InvalidProfileError("pathloss_exponent must be positive")
        if not self.shadow_sigma_db >= 0:
            raise InvalidProfileError("shadow_sigma_db must be non-negative")
        if not self.fast_fading_mean > 0:
            raise InvalidProfileError("fast_fading_mean must be positive")


@dataclass(frozen=True)
class MultipathProfile:
    """Tapped delay line description.

    ``tap_delays`` are integer sample delays starting at 0, ``tap_powers``
    are the squared tap amplitudes and must sum to one, and ``doppler_hz``
    holds the Doppler shift of each path.
    """

    tap_delays: tuple = (0, 2, 5)
    tap_powers: tuple = (0.6, 0.3, 0.1)
    doppler_hz: tuple = (0.0, 0.0, 0.0)
    carrier_freq_hz: float = 5.9e9
    sample_period_s: float = 1e-7

    def __post_init__(self):
        delays = tuple(int(d) for d in self.tap_delays)
        if any(d != float(o) for d, o in zip(delays, self.tap_delays)):
            raise InvalidProfileError("tap delays must be whole samples")
        object.__setattr__(self, "tap_delays", delays)
        object.__setattr__(self, "tap_powers", tuple(float(p) for p in self.tap_powers))
        object.__setattr__(self, "doppler_hz", tuple(float(f) for f in self.doppler_hz))
        L = len(delays)
        if L == 0:
            raise InvalidProfileError("profile needs at least one tap")
        if len(self.tap_powers) != L or len(self.doppler_hz) != L:
            raise InvalidProfileError("tap_delays, tap_powers and doppler_hz must have equal length")
        if delays[0] != 0 or any(b <= a for a, b in zip(delays, delays[1:])):
            raise InvalidProfileError("tap delays must start at 0 and be strictly increasing")
        if any(p < 0 for p in self.tap_powers):
            raise InvalidProfileError("tap powers must be non-negative")
        if abs(sum(self.tap_powers) - 1.0) > 1e-12:
            raise InvalidProfileError(f"tap powers must sum to 1, got {sum(self.tap_powers)!r}")
        if not self.carrier_freq_hz > 0 or not self.sample_period_s > 0:
            raise InvalidProfileError("carrier frequency and sample period must be positive")

    @property
    def num_taps(self) -> int:
        return len(self.tap_delays)

    @property
    def max_delay(self) -> int:
        return self.tap_delays[-1]

    @property
    def amplitudes(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.tap_powers))

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz

    def check_cyclic_prefix(self, cfg: OfdmConfig):
        if self.max_delay > cfg.cp_len:
            raise ISIViolationError(
                f"max tap delay {self.max_delay} exceeds cyclic prefix of {cfg.cp_len} samples")


@dataclass(frozen=True)
class Trajectory:
    """Straight road at constant speed, base station offset from the road.

    The vehicle starts ``initial_distance_m`` from the base station, on the
    approaching side, and drives towards (then past) the closest point.
    """

    initial_distance_m: float = 100.0
    speed_mps: float = 0.0
    bs_offset_m: float = 20.0

    def __post_init__(self):
        if not self.initial_distance_m > 0:
            raise InvalidGeometryError("initial distance must be positive")
        if self.bs_offset_m < 0 or self.bs_offset_m > self.initial_distance_m:
            raise InvalidGeometryError("bs_offset_m must lie in [0, initial_distance_m]")

    def _along(self, elapsed_s):
        s0 = -np.sqrt(self.initial_distance_m ** 2 - self.bs_offset_m ** 2)
        return s0 + self.speed_mps * np.asarray(elapsed_s, dtype=float)

    def crosses_station(self, start_s: float, stop_s: float) -> bool:
        """Whether the distance reaches zero between two instants.

        Only possible for a base station on the road (zero offset), when the
        along-road coordinate changes sign or touches zero.
        """
        if self.bs_offset_m > 0:
            return False
        a, b = self._along(start_s), self._along(stop_s)
        return bool(a * b <= 0)

    def distance(self, elapsed_s):
        """Distance to the base station after ``elapsed_s`` seconds."""
        return np.hypot(self._along(elapsed_s), self.bs_offset_m)


@dataclass(frozen=True)
class ChannelRealization:
    """Channel state at one position index.

    ``tap_gains`` and ``cfr`` describe the unit-power multipath part. The
    scalar ``large_scale_gain`` is a power gain applied on top of it, see
    :attr:`effective_taps`.
    """

    tap_gains: np.ndarray
    tap_delays: tuple
    cfr: np.ndarray
    large_scale_gain: float = 1.0
    position_index: int = 0
    distance_m: float = float("nan")
    static_phases: np.ndarray = field(default=None, repr=False)

    @property
    def effective_taps(self) -> np.ndarray:
        return np.sqrt(self.large_scale_gain) * self.tap_gains

    @property
    def effective_cfr(self) -> np.ndarray:
        return np.sqrt(self.large_scale_gain) * self.cfr

    def impulse_response(self, length: int = None) -> np.ndarray:
        """Zero-padded time-domain tap vector including the large-scale gain."""
        length = self.tap_delays[-1] + 1 if length is None else length
        g = np.zeros(length, dtype=complex)
        g[list(self.tap_delays)] = self.effective_taps
        return g


def max_doppler_hz(speed_mps: float, carrier_freq_hz: float) -> float:
    return speed_mps * carrier_freq_hz / SPEED_OF_LIGHT


def large_scale_gain(params: LargeScaleParams, distance_m: float, rng=None, *,
                     fading=None, shadowing=None) -> float:
    """Power gain ``G * beta * A * d**-gamma``.

    ``G`` is exponential with mean ``fast_fading_mean`` and ``beta`` is
    log-normal with ``shadow_sigma_db`` spread in dB. Either draw can be
    pinned through ``fading``/``shadowing``; otherwise both come from
    ``rng``, ``G`` first.
    """
    if not distance_m > 0:
        raise InvalidGeometryError(f"distance must be positive, got {distance_m}")
    if fading is None or shadowing is None:
        rng = np.random.default_rng(rng)
        g_draw, b_draw = draw_fading(params, rng)
        fading = g_draw if fading is None else fading
        shadowing = b_draw if shadowing is None else shadowing
    return float(fading * shadowing * params.pathloss_constant * distance_m ** -params.pathloss_exponent)


def draw_fading(params: LargeScaleParams, rng):
    """One (fast fading, shadowing) draw."""
    g = rng.exponential(params.fast_fading_mean)
    beta = 10.0 ** (params.shadow_sigma_db * rng.standard_normal() / 10.0)
    return g, beta


def tap_phase(profile: MultipathProfile, l: int, n, static_phase: float = 0.0):
    """Phase of path ``l`` at sample index ``n``.

    The delay term uses the tap delay converted to seconds, and the Doppler
    term advances with elapsed time ``n * sample_period_s``.
    """
    if not 0 <= l < profile.num_taps:
        raise IndexError(f"tap index {l} out of range for {profile.num_taps} taps")
    ts = profile.sample_period_s
    tau_s = profile.tap_delays[l] * ts
    delay_term = 2.0 * np.pi * profile.carrier_freq_hz * tau_s
    return static_phase - delay_term + 2.0 * np.pi * profile.doppler_hz[l] * np.asarray(n) * ts


def cir_to_cfr(tap_gains, tap_delays, num_subcarriers: int) -> np.ndarray:
    """Frequency response ``H(k) = sum_l a_l exp(-2j pi k tau_l / N)``.

    Unnormalized DFT of the zero-padded impulse response, which makes
    circular convolution equal to per-bin multiplication after unitary
    OFDM transforms.
    """
    a = np.asarray(tap_gains, dtype=complex)
    d = np.asarray(tap_delays, dtype=int)
    if a.shape != d.shape:
        raise InputShapeError("tap gains and delays must have the same length")
    if d.size and (d.max() >= num_subcarriers or d.min() < 0):
        raise InvalidProfileError(f"tap delays must lie in [0, {num_subcarriers})")
    g = np.zeros(num_subcarriers, dtype=complex)
    np.add.at(g, d, a)
    return np.fft.fft(g)


def generate_cir(profile: MultipathProfile, n: int, rng=None, num_subcarriers: int = 64, *,
                 static_phases=None) -> ChannelRealization:
    """Multipath realization at sample index ``n``.

    Static path phases are drawn uniformly on [0, 2pi) from ``rng`` unless
    given, so the same seed and the same ``n`` reproduce the realization.
    """
    if static_phases is None:
        static_phases = np.random.default_rng(rng).uniform(0.0, 2.0 * np.pi, profile.num_taps)
    static_phases = np.asarray(static_phases, dtype=float)
    phases = np.array([tap_phase(profile, l, n, static_phases[l]) for l in range(profile.num_taps)])
    gains = profile.amplitudes * np.exp(1j * phases)
    return ChannelRealization(
        tap_gains=gains,
        tap_delays=profile.tap_delays,
        cfr=cir_to_cfr(gains, profile.tap_delays, num_subcarriers),
        position_index=int(n),
        static_phases=static_phases,
    )


def convolve_channel(frame_time, ch: ChannelRealization, cfg: OfdmConfig) -> np.ndarray:
    """Noise-free channel output: linear convolution truncated to the input length."""
    x = np.asarray(frame_time, dtype=complex)
    if x.ndim != 1 or x.size == 0:
        raise InputShapeError("frame must be a non-empty 1-D vector")
    if max(ch.tap_delays) > cfg.cp_len:
        raise ISIViolationError(
            f"delay spread of {max(ch.tap_delays)} samples exceeds cyclic prefix of {cfg.cp_len}")
    return np.convolve(x, ch.impulse_response())[: x.size]


def noise_variance(signal, snr_db: float) -> float:
    """Per-sample noise power giving ``snr_db`` against the mean power of ``signal``."""
    if np.isposinf(snr_db):
        return 0.0
    s = np.asarray(signal)
    if s.size == 0:
        raise InputShapeError("empty signal")
    power = float(np.mean(np.abs(s) ** 2))
    if power == 0.0:
        raise DegenerateInputError("zero-power signal has no defined SNR")
    return power / 10.0 ** (snr_db / 10.0)


def awgn(signal, snr_db: float, rng=None) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise at ``snr_db``.

    ``snr_db = inf`` returns the input unchanged.
    """
    s = np.asarray(signal, dtype=complex)
    var = noise_variance(s, snr_db)
    if var == 0.0:
        return s.copy()
    rng = np.random.default_rng(rng)
    noise = rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape)
    return s + np.sqrt(var / 2.0) * noise


def apply_channel(frame_time, ch: ChannelRealization, cfg: OfdmConfig, snr_db: float,
                  rng=None) -> np.ndarray:
    """Convolve with the channel, then add noise relative to the received power."""
    return awgn(convolve_channel(frame_time, ch, cfg), snr_db, rng)


def evolve_trajectory(traj: Trajectory, profile: MultipathProfile, params: LargeScaleParams,
                      n_steps: int, rng=None, *, num_subcarriers: int = 64, step_samples: int = 1,
                      start_index: int = 0, block_steps: int = None) -> list:
    """Channel realizations along a drive.

    Step ``i`` sits at sample index ``start_index + i * step_samples``. All
    steps share one set of static path phases; tap phases then rotate with
    their Doppler shifts while the distance follows the vehicle. The fast
    fading and shadowing draws are redrawn every ``block_steps`` steps, or
    held for the whole drive when ``block_steps`` is None.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if block_steps is not None and block_steps < 1:
        raise ValueError("block_steps must be >= 1")
    rng = np.random.default_rng(rng)
    static_phases = rng.uniform(0.0, 2.0 * np.pi, profile.num_taps)
    indices = start_index + step_samples * np.arange(n_steps)
    elapsed = indices * profile.sample_period_s
    distances = traj.distance(elapsed)
    if traj.crosses_station(elapsed[0], elapsed[-1]) or np.any(distances <= 0):
        raise InvalidGeometryError("trajectory passes through the base station position")

    out = []
    draws = None
    for i, (n, d) in enumerate(zip(indices, distances)):
        if draws is None or (block_steps is not None and i % block_steps == 0):
            draws = draw_fading(params, rng)
        ch = generate_cir(profile, int(n), num_subcarriers=num_subcarriers, static_phases=static_phases)
        gain = large_scale_gain(params, float(d), fading=draws[0], shadowing=draws[1])
        out.append(replace(ch, large_scale_gain=gain, distance_m=float(d)))
    return out
