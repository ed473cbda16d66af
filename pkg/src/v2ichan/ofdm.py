"""
4-QAM mapping and OFDM modulation with a cyclic prefix.

Both transform directions use the unitary 1/sqrt(N) scaling, so a
modulate/demodulate round trip is the identity and Parseval holds on the
CP-stripped body.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputShapeError, InvalidDimensionError, UnsupportedModulationError

_SQRT_HALF = 1.0 / np.sqrt(2.0)

# Gray table: first bit selects the sign of the imaginary part, second bit
# the sign of the real part.
QPSK_TABLE = {
    (0, 0): complex(+1, +1) * _SQRT_HALF,
    (0, 1): complex(-1, +1) * _SQRT_HALF,
    (1, 1): complex(-1, -1) * _SQRT_HALF,
    (1, 0): complex(+1, -1) * _SQRT_HALF,
}


@dataclass(frozen=True)
class OfdmConfig:
    """Numerology of one OFDM symbol.

    Parameters
    ----------
    num_subcarriers : int
        FFT size N, a power of two.
    cp_len : int
        Cyclic prefix length in samples, ``0 <= cp_len < N``.
    bits_per_symbol : int
        Bits per subcarrier symbol. Only 2 (4-QAM) can be mapped.
    """

    num_subcarriers: int = 64
    cp_len: int = 16
    bits_per_symbol: int = 2

    def __post_init__(self):
        n = self.num_subcarriers
        if n < 1 or n & (n - 1):
            raise InvalidDimensionError(f"num_subcarriers must be a power of two, got {n}")
        if not 0 <= self.cp_len < n:
            raise InvalidDimensionError(f"cp_len must satisfy 0 <= cp_len < N, got {self.cp_len}")
        if self.bits_per_symbol < 1:
            raise InvalidDimensionError("bits_per_symbol must be positive")

    @property
    def frame_len(self) -> int:
        return self.num_subcarriers + self.cp_len

    @property
    def bits_per_frame(self) -> int:
        return self.num_subcarriers * self.bits_per_symbol


@dataclass(frozen=True)
class OfdmFrame:
    freq_symbols: np.ndarray
    time_samples: np.ndarray

    @classmethod
    def from_symbols(cls, freq_symbols, cfg: OfdmConfig) -> "OfdmFrame":
        x = np.asarray(freq_symbols, dtype=complex)
        return cls(x, ofdm_modulate(x, cfg))


def qam_map(bits, bits_per_symbol: int = 2) -> np.ndarray:
    """Map a bit sequence onto unit-energy Gray-coded 4-QAM symbols."""
    if bits_per_symbol != 2:
        raise UnsupportedModulationError(f"only 4-QAM (2 bits/symbol) is supported, got {bits_per_symbol}")
    b = np.asarray(bits, dtype=np.int64).ravel()
    if b.size % 2:
        raise InputShapeError(f"bit count {b.size} is not a multiple of {bits_per_symbol}")
    if np.any((b != 0) & (b != 1)):
        raise InputShapeError("bits must be 0 or 1")
    b = b.reshape(-1, 2)
    re = 1.0 - 2.0 * b[:, 1]
    im = 1.0 - 2.0 * b[:, 0]
    return (re + 1j * im) * _SQRT_HALF


def qam_demap(symbols) -> np.ndarray:
    """Hard-decision 4-QAM demapper.

    For the square constellation the minimum-distance decision separates into
    independent sign tests on each axis. A symbol lying exactly on an axis
    is decoded to the smaller bit, which picks the lexicographically smallest
    of the equidistant patterns.
    """
    s = np.asarray(symbols, dtype=complex).ravel()
    if s.size == 0:
        raise InputShapeError("cannot demap an empty symbol vector")
    bits = np.empty((s.size, 2), dtype=np.int8)
    bits[:, 0] = s.imag < 0
    bits[:, 1] = s.real < 0
    return bits.ravel()


def ofdm_modulate(freq_symbols, cfg: OfdmConfig) -> np.ndarray:
    """Unitary IDFT of one symbol vector followed by cyclic prefix insertion."""
    X = np.asarray(freq_symbols, dtype=complex)
    if X.shape != (cfg.num_subcarriers,):
        raise InputShapeError(f"expected {cfg.num_subcarriers} frequency symbols, got shape {X.shape}")
    body = np.fft.ifft(X, norm="ortho")
    if cfg.cp_len == 0:
        return body
    return np.concatenate([body[-cfg.cp_len:], body])


def ofdm_demodulate(time_samples, cfg: OfdmConfig) -> np.ndarray:
    """Strip the cyclic prefix and apply the unitary forward DFT."""
    y = np.asarray(time_samples, dtype=complex)
    if y.shape != (cfg.frame_len,):
        raise InputShapeError(f"expected {cfg.frame_len} time samples, got shape {y.shape}")
    return np.fft.fft(y[cfg.cp_len:], norm="ortho")


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix with entry (n, k) = exp(-2j*pi*n*k/N) / sqrt(N)."""
    if n < 1:
        raise InvalidDimensionError(f"DFT size must be >= 1, got {n}")
    idx = np.arange(n)
    # reduce n*k modulo N before scaling to keep the phase argument small
    return np.exp(-2j * np.pi * (np.outer(idx, idx) % n) / n) / np.sqrt(n)


def generate_pilot(cfg: OfdmConfig, seed) -> np.ndarray:
    """Random unit-modulus 4-QAM pilot vector, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=2 * cfg.num_subcarriers)
    return qam_map(bits, 2)


def random_bits(n: int, rng) -> np.ndarray:
    return np.random.default_rng(rng).integers(0, 2, size=n, dtype=np.int8)
