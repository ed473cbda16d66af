"""
Training the two-input perceptron
=================================

The network sees one subcarrier at a time: input is the LS observation
(real, imag) and target the true coefficient. We check the hand-derived
gradients against finite differences first, then train at two SNRs and look
at the error curves, the histogram and the regression fit.
"""

import numpy as np

from v2ichan import channel as chn
from v2ichan import harness as hs
from v2ichan import mlp
from v2ichan.ofdm import OfdmConfig

# Backprop against central differences on 100 random networks.
print("gradient check, max relative error:", f"{mlp.gradient_check(100, seed=0):.2e}")

cfg = OfdmConfig(64, 16)
link = hs.ChannelConfig(large_scale=chn.LargeScaleParams(1e4, 2.0, 3.0, 1.0))
train_cfg = mlp.TrainConfig(learning_rate=0.001, epochs=20, seed=0)

runs = {}
for snr in (0.0, 15.0):
    ds = hs.build_dataset(link, cfg, snr, 100, seed=1, frames_per_trajectory=1)
    runs[snr] = (ds, hs.train_predictor(ds, train_cfg))

print("\nepoch  NMSE@0dB  NMSE@15dB   (training split)")
for r0, r15 in zip(runs[0.0][1].history, runs[15.0][1].history):
    if r0.epoch in (1, 2, 5, 10, 15, 20):
        print(f"{r0.epoch:5d}  {r0.extra['train']:.4f}    {r15.extra['train']:.4f}")
print("best validation epochs:", {s: r.best_epoch for s, (_, r) in runs.items()})

# Errors t - o on every split, sharing one set of bins.
ds, run = runs[15.0]
out = run.predictor.predict(ds.inputs)
hist = hs.error_histogram(out, ds.targets, bin_count=9, split=ds.split)
print("\nerror histogram at 15 dB (test split):")
for lo, hi, count, name in hist:
    if name == "test":
        print(f"  [{lo:+.3f}, {hi:+.3f})  {'#' * (count // 20)}")

# A noise-free dataset: the outputs should sit on the 45-degree line.
clean = hs.build_dataset(link, cfg, np.inf, 100, seed=2, frames_per_trajectory=1)
fit = hs.split_regression(hs.train_predictor(clean, train_cfg).predictor, clean)
for name, s in fit.items():
    print(f"regression {name:10s} slope {s.slope:.4f} intercept {s.intercept:+.4f} R {s.r:.5f}")
