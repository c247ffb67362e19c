"""Two-branch spectral speech enhancement, trainable from scratch on a desk machine.

A magnitude branch and a complex branch share one encoder/decoder layout and
are coupled by per-layer compensatory features flowing magnitude -> complex.
Everything is numpy: the network, its reverse-mode gradients, the optimizer,
and the speech metrics used to evaluate it.
"""

from .config import RunConfig, load_run_config, parse_run_config
from .data import (
    ManifestRow,
    mix_at_snr,
    pink_noise,
    read_manifest,
    synth_voice,
    white_noise,
    write_corpus,
    write_manifest,
)
from .dsp import (
    Magnitude,
    Spectrogram,
    StftConfig,
    UnitPhase,
    istft,
    mag_phase,
    polar_combine,
    read_wav,
    stft,
    write_wav,
)
from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    InvariantError,
    NumericError,
    StateError,
    TwinspecError,
)
from .metrics import EvalRow, si_sdr, snr_db, stoi
from .model import (
    Estimates,
    ModelConfig,
    TwoBranchModel,
    build_model,
    compute_loss,
    count_params,
    enhance,
    forward,
    load_model,
    save_model,
)
from .train import TrainResult, train_loop

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DimensionError",
    "Estimates",
    "EvalRow",
    "InvariantError",
    "Magnitude",
    "ManifestRow",
    "ModelConfig",
    "NumericError",
    "RunConfig",
    "Spectrogram",
    "StateError",
    "StftConfig",
    "TrainResult",
    "TwinspecError",
    "TwoBranchModel",
    "UnitPhase",
    "build_model",
    "compute_loss",
    "count_params",
    "enhance",
    "forward",
    "istft",
    "load_model",
    "load_run_config",
    "mag_phase",
    "mix_at_snr",
    "parse_run_config",
    "pink_noise",
    "polar_combine",
    "read_manifest",
    "read_wav",
    "save_model",
    "si_sdr",
    "snr_db",
    "stft",
    "stoi",
    "synth_voice",
    "train_loop",
    "white_noise",
    "write_corpus",
    "write_manifest",
    "write_wav",
    "__version__",
]
