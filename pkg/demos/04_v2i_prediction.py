"""
Predicting the channel one step ahead
=====================================

A car at 100 km/h sees a 5.9 GHz channel rotate by a large angle between
pilot frames 250 us apart. Using the last pilot's LS estimate for the
current data ("outdated LS") then goes badly wrong. The perceptron learns
the per-path rotation from driving history and predicts the channel at the
next position instead.
"""

from pathlib import Path

from v2ichan import channel as chn
from v2ichan import harness as hs
from v2ichan.config import load_config

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "fast_fading.ini")
exp = cfg.experiment
print("max Doppler:", round(chn.max_doppler_hz(cfg.channel.trajectory.speed_mps,
                                               cfg.channel.profile.carrier_freq_hz), 1), "Hz")

ds = hs.build_dataset(cfg.channel, cfg.ofdm, exp.train_snr_db, exp.n_frames, exp.seed,
                      frames_per_trajectory=exp.frames_per_trajectory, horizon=1)
run = hs.train_predictor(ds, cfg.mlp.train, cfg.mlp.n_h)
print(f"trained on {len(ds)} samples, best epoch {run.best_epoch}")

res = hs.ber_sweep(cfg.channel, cfg.ofdm, exp.snr_db, exp.estimators, 500, exp.seed,
                   predictor=run.predictor, frames_per_trajectory=exp.frames_per_trajectory,
                   horizon=1, data_symbols=exp.data_symbols)

print("\n SNR " + "".join(f"{name:>13s}" for name in exp.estimators))
for snr in exp.snr_db:
    print(f"{snr:4g} " + "".join(f"{res.get(name, snr).value:13.4f}" for name in exp.estimators))

# LS and MMSE use the current pilot, so they are not affected by the delay;
# the fair comparison for a predictor is the outdated-LS column.
