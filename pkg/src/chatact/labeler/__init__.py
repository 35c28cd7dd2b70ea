"""Sentence labeling: hashed features, linear-chain CRF, and a no-context
bag-of-n-grams baseline."""

from .features import (
    FEATURE_HASH_SEED,
    FeatureConfig,
    FeatureVector,
    SentenceUnit,
    featurize,
    hash_feature,
    window_units,
)
from .crf import (
    PreparedWindow,
    SequenceModel,
    TrainConfig,
    crf_score,
    decode_window,
    forward_backward,
    label_dialogue,
    log_partition,
    prepare_windows,
    train_crf,
    viterbi_decode,
)
from .baseline import BaselineConfig, BaselineModel, predict_baseline, train_baseline
from .evaluate import REFERENCE_ACCURACIES, EvalReport, evaluate
from .model_io import load_model, read_emissions, save_model

__all__ = [
    "FEATURE_HASH_SEED",
    "FeatureConfig",
    "FeatureVector",
    "SentenceUnit",
    "featurize",
    "hash_feature",
    "window_units",
    "PreparedWindow",
    "SequenceModel",
    "TrainConfig",
    "crf_score",
    "decode_window",
    "forward_backward",
    "label_dialogue",
    "log_partition",
    "prepare_windows",
    "train_crf",
    "viterbi_decode",
    "BaselineConfig",
    "BaselineModel",
    "predict_baseline",
    "train_baseline",
    "REFERENCE_ACCURACIES",
    "EvalReport",
    "evaluate",
    "load_model",
    "read_emissions",
    "save_model",
]
