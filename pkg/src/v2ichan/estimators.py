"""
Pilot-based LS and MMSE channel estimation for ``y = X F g + w``.

``X`` is the diagonal pilot matrix (stored as its diagonal), ``F`` the
unitary DFT matrix and ``g`` the length-N time-domain channel vector, so
the frequency response is ``h = F g``. With the unnormalized CFR used by
:mod:`v2ichan.channel`, ``g = sqrt(N) * taps`` zero-padded to N.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InputShapeError, InsufficientDataError, SingularPilotError
from .ofdm import dft_matrix

EQ_EPS = 1e-12
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class PilotObservation:
    pilot: np.ndarray
    received: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.pilot, dtype=complex)
        y = np.asarray(self.received, dtype=complex)
        if x.ndim != 1 or x.shape != y.shape:
            raise InputShapeError(f"pilot {x.shape} and received {y.shape} must be equal-length vectors")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be non-negative")
        object.__setattr__(self, "pilot", x)
        object.__setattr__(self, "received", y)

    @property
    def size(self) -> int:
        return self.pilot.size


@dataclass(frozen=True)
class ChannelCovariance:
    """Covariance ``R_gg`` of the time-domain channel vector."""

    matrix: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.matrix, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise InputShapeError(f"covariance must be square, got {r.shape}")
        scale = max(1.0, float(np.max(np.abs(r), initial=0.0)))
        if np.max(np.abs(r - r.conj().T), initial=0.0) > 1e-10 * scale:
            raise ValueError("covariance is not Hermitian")
        if np.linalg.eigvalsh(r).min(initial=0.0) < -1e-10 * scale:
            raise ValueError("covariance is not positive semidefinite")
        object.__setattr__(self, "matrix", r)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@lru_cache(maxsize=16)
def _dft(n: int) -> np.ndarray:
    F = dft_matrix(n)
    F.setflags(write=False)
    return F


def _check_pilot(obs: PilotObservation):
    if np.any(np.abs(obs.pilot) == 0):
        raise SingularPilotError("pilot has zero-valued subcarriers")


def _solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b``, adding a small ridge when ``a`` is ill-conditioned."""
    n = a.shape[0]
    if not np.linalg.cond(a) < _COND_LIMIT:
        ridge = 1e-12 * max(np.real(np.trace(a)) / n, np.finfo(float).tiny)
        a = a + ridge * np.eye(n)
    return np.linalg.solve(a, b)


def ls_estimate(obs: PilotObservation) -> np.ndarray:
    """Element-wise LS estimate ``X^-1 y``."""
    _check_pilot(obs)
    return obs.received / obs.pilot


def ls_estimate_matrix(obs: PilotObservation) -> np.ndarray:
    """LS estimate in full matrix form ``F (F^H X^H X F)^-1 F^H X^H y``.

    Kept as an independent route; for invertible pilots it equals
    :func:`ls_estimate`.
    """
    _check_pilot(obs)
    F = _dft(obs.size)
    XF = obs.pilot[:, None] * F
    gram = XF.conj().T @ XF
    return F @ np.linalg.solve(gram, XF.conj().T @ obs.received)


def mmse_estimate(obs: PilotObservation, cov: ChannelCovariance) -> np.ndarray:
    """Frequency-domain MMSE estimate.

    Evaluates ``F R [(F^H X^H X F)^-1 s2 + R]^-1 (F^H X^H X F)^-1 F^H X^H y``
    with linear solves instead of explicit inverses.
    """
    _check_pilot(obs)
    n = obs.size
    if cov.size != n:
        raise InputShapeError(f"covariance is {cov.size}x{cov.size}, observation has {n} bins")
    F = _dft(n)
    R = cov.matrix
    XF = obs.pilot[:, None] * F
    gram = XF.conj().T @ XF
    g_ls = np.linalg.solve(gram, XF.conj().T @ obs.received)
    if obs.noise_variance > 0:
        middle = np.linalg.solve(gram, obs.noise_variance * np.eye(n)) + R
    else:
        middle = R
    return F @ (R @ _solve(middle, g_ls))


def mmse_estimate_covariance(obs: PilotObservation, cov: ChannelCovariance) -> np.ndarray:
    """MMSE estimate through the cross-covariance form ``F R_gy R_yy^-1 y``."""
    _check_pilot(obs)
    n = obs.size
    if cov.size != n:
        raise InputShapeError(f"covariance is {cov.size}x{cov.size}, observation has {n} bins")
    F = _dft(n)
    R = cov.matrix
    XF = obs.pilot[:, None] * F
    r_gy = R @ XF.conj().T
    r_yy = XF @ R @ XF.conj().T + obs.noise_variance * np.eye(n)
    return F @ (r_gy @ _solve(r_yy, obs.received))


def sample_covariance(realizations) -> ChannelCovariance:
    """Zero-mean sample covariance ``(1/M) sum g g^H`` over channel vectors."""
    g = np.asarray(realizations, dtype=complex)
    if g.ndim != 2 or g.shape[0] < 2:
        raise InsufficientDataError("need at least two equal-length channel vectors")
    r = g.T @ g.conj() / g.shape[0]
    return ChannelCovariance(0.5 * (r + r.conj().T))


def cfr_to_time(h) -> np.ndarray:
    """Time-domain channel vector ``g = F^H h`` for a frequency response ``h``."""
    return np.fft.ifft(np.asarray(h, dtype=complex), norm="ortho", axis=-1)


def equalize(Y, h_hat, eps: float = EQ_EPS):
    """One-tap zero-forcing equalizer.

    Returns
    -------
    x_hat : np.ndarray
        ``Y / h_hat`` per bin. Bins where ``|h_hat| <= eps`` pass ``Y``
        through unchanged.
    deep_fade : np.ndarray of bool
        Mask of the bins that were passed through.
    """
    Y = np.asarray(Y, dtype=complex)
    h = np.asarray(h_hat, dtype=complex)
    if Y.shape[-1] != h.shape[-1]:
        raise InputShapeError(f"received {Y.shape} and estimate {h.shape} do not align")
    deep_fade = np.abs(h) <= eps
    safe = np.where(deep_fade, 1.0, h)
    x_hat = np.where(deep_fade, Y, Y / safe)
    return x_hat, np.broadcast_to(deep_fade, x_hat.shape)
