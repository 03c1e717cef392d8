"""Hyena language model with a learned loss-weighting schedule."""

from ._core import (
    CheckpointError,
    Config,
    ConfigError,
    DataError,
    EmptyBuffer,
    HyenaModel,
    InvalidExperience,
    L2TError,
    NumericalError,
    Session,
    ShapeError,
    Vocab,
    batch_count,
    compare,
    cosine_warmup_lr,
    cross_entropy,
    evaluate_checkpoint,
    extract_features,
    fft_causal_conv,
    huber,
    make_batches,
    parameter_count,
    sample_prioritized,
    synthetic_corpus,
    train,
)

__all__ = [
    "CheckpointError",
    "Config",
    "ConfigError",
    "DataError",
    "EmptyBuffer",
    "HyenaModel",
    "InvalidExperience",
    "L2TError",
    "NumericalError",
    "Session",
    "ShapeError",
    "Vocab",
    "batch_count",
    "compare",
    "cosine_warmup_lr",
    "cross_entropy",
    "evaluate_checkpoint",
    "extract_features",
    "fft_causal_conv",
    "huber",
    "make_batches",
    "parameter_count",
    "sample_prioritized",
    "synthetic_corpus",
    "train",
]
