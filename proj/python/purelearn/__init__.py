"""Biased-data benchmark: synthetic generation, adversarially purified training,
representation analysis and exact optimal-transport oracles.

Everything lives in the compiled extension; this package re-exports it.
"""

from ._core import (
    ConfigError,
    CriticSign,
    Dataset,
    EpochMetrics,
    FormatError,
    GenConfig,
    IoError,
    ModelParams,
    NumericalError,
    PcaReport,
    SyntheticData,
    TrainConfig,
    TrainResult,
    TrialStats,
    critic_w1_estimate,
    error_bound_trials,
    evaluate_accuracy,
    extract,
    generate,
    load_model,
    pca_explained_variance,
    read_dataset,
    save_model,
    theorem1_trials,
    train_goal1,
    train_purified,
    w1_exact,
    write_dataset,
)

__all__ = [
    "ConfigError",
    "CriticSign",
    "Dataset",
    "EpochMetrics",
    "FormatError",
    "GenConfig",
    "IoError",
    "ModelParams",
    "NumericalError",
    "PcaReport",
    "SyntheticData",
    "TrainConfig",
    "TrainResult",
    "TrialStats",
    "critic_w1_estimate",
    "error_bound_trials",
    "evaluate_accuracy",
    "extract",
    "generate",
    "load_model",
    "pca_explained_variance",
    "read_dataset",
    "save_model",
    "theorem1_trials",
    "train_goal1",
    "train_purified",
    "w1_exact",
    "write_dataset",
]

__version__ = "0.1.0"
