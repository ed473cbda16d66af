"""
An OFDM link, one piece at a time
=================================

Bits become 4-QAM symbols, symbols become an OFDM time signal with a cyclic
prefix, the signal crosses a multipath channel with noise, and the receiver
undoes it all with one FFT and one division per subcarrier.
"""

import numpy as np

from v2ichan import channel as chn
from v2ichan.ofdm import OfdmConfig, dft_matrix, ofdm_demodulate, ofdm_modulate, qam_demap, qam_map

rng = np.random.default_rng(0)
cfg = OfdmConfig(num_subcarriers=64, cp_len=16)

# The Gray-coded constellation: neighbours differ in exactly one bit.
for bits in ([0, 0], [0, 1], [1, 1], [1, 0]):
    print(bits, "->", np.round(qam_map(bits)[0], 4))

# One OFDM symbol: 128 bits on 64 subcarriers.
bits = rng.integers(0, 2, cfg.bits_per_frame)
X = qam_map(bits)
x = ofdm_modulate(X, cfg)
print("time samples:", x.shape, " prefix copies the tail:", np.allclose(x[:16], x[-16:]))

# Unitary scaling keeps energy equal in both domains (Parseval).
print("energy freq / time:", np.sum(abs(X) ** 2), np.sum(abs(x[16:]) ** 2))

# The transform is the DFT matrix F; modulation applies F^H.
F = dft_matrix(64)
print("F^H X matches the IFFT:", np.allclose(F.conj().T @ X, x[16:]))

# A three-tap channel, shorter than the prefix, so every subcarrier sees a
# single complex gain H(k).
profile = chn.MultipathProfile(tap_delays=(0, 2, 5), tap_powers=(0.6, 0.3, 0.1))
ch = chn.generate_cir(profile, 0, rng, num_subcarriers=64)
y = chn.apply_channel(x, ch, cfg, snr_db=np.inf)
Y = ofdm_demodulate(y, cfg)
print("noise-free: Y = H X on every bin:", np.allclose(Y, ch.cfr * X))

# With noise, divide by the known channel and slice.
for snr in (0, 10, 20):
    n_sym = 2000
    errors = 0
    for _ in range(n_sym):
        b = rng.integers(0, 2, cfg.bits_per_frame)
        Y = ofdm_demodulate(chn.apply_channel(ofdm_modulate(qam_map(b), cfg), ch, cfg, snr, rng), cfg)
        errors += np.count_nonzero(qam_demap(Y / ch.cfr) != b)
    print(f"SNR {snr:2d} dB: BER with perfect channel knowledge = {errors / (n_sym * 128):.4f}")
