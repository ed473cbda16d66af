"""
v2ichan: OFDM vehicle-to-infrastructure link simulator.

Submodules
----------
ofdm
    4-QAM mapping, OFDM modulation with cyclic prefix, DFT matrix, pilots.
channel
    Large-scale gain, Doppler-evolving multipath taps, trajectories, AWGN.
estimators
    LS and MMSE channel estimation, sample covariance, one-tap equalizer.
mlp
    Bias-free two-layer perceptron with backpropagation and a
    finite-difference gradient oracle.
harness
    Datasets, training runs, NMSE/BER/histogram/regression metrics and
    BER sweeps.
config, records, cli
    INI configuration, CSV/dataset serialization and the command line.
"""

from .channel import (ChannelRealization, LargeScaleParams, MultipathProfile, Trajectory,
                      apply_channel, awgn, cir_to_cfr, evolve_trajectory, generate_cir,
                      large_scale_gain, tap_phase)
from .errors import (ConfigError, DegenerateInputError, DivergenceError, InputShapeError,
                     InsufficientDataError, InvalidDimensionError, InvalidGeometryError,
                     InvalidProfileError, ISIViolationError, MissingModelError, SingularPilotError,
                     UndefinedMetricError, UnsupportedModulationError)
from .estimators import (ChannelCovariance, PilotObservation, equalize, ls_estimate, mmse_estimate,
                         sample_covariance)
from .harness import (ChannelConfig, Dataset, SweepResult, ber, ber_sweep, build_dataset,
                      error_histogram, mse_vs_epoch, nmse, regression_stats, train_predictor)
from .mlp import (ChannelPredictor, MlpNetwork, TrainConfig, backward, forward, init_network,
                  load_network, mse_cost, numerical_gradient, save_network, train)
from .ofdm import (OfdmConfig, OfdmFrame, dft_matrix, generate_pilot, ofdm_demodulate,
                   ofdm_modulate, qam_demap, qam_map)

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization", "LargeScaleParams", "MultipathProfile", "Trajectory", "apply_channel",
    "awgn", "cir_to_cfr", "evolve_trajectory", "generate_cir", "large_scale_gain", "tap_phase",
    "ConfigError", "DegenerateInputError", "DivergenceError", "InputShapeError",
    "InsufficientDataError", "InvalidDimensionError", "InvalidGeometryError", "InvalidProfileError",
    "ISIViolationError", "MissingModelError", "SingularPilotError", "UndefinedMetricError",
    "UnsupportedModulationError", "ChannelCovariance", "PilotObservation", "equalize",
    "ls_estimate", "mmse_estimate", "sample_covariance", "ChannelConfig", "Dataset", "SweepResult",
    "ber", "ber_sweep", "build_dataset", "error_histogram", "mse_vs_epoch", "nmse",
    "regression_stats", "train_predictor", "ChannelPredictor", "MlpNetwork", "TrainConfig",
    "backward", "forward", "init_network", "load_network", "mse_cost", "numerical_gradient",
    "save_network", "train", "OfdmConfig", "OfdmFrame", "dft_matrix", "generate_pilot",
    "ofdm_demodulate", "ofdm_modulate", "qam_demap", "qam_map",
]
