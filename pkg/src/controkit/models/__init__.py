"""The four full-text classifiers behind one train/predict interface."""

from .base import (  # noqa: F401
    Classifier,
    EmptyDocumentError,
    calibrate_threshold,
    load_classifier,
    predict,
    save_classifier,
)
from .cnn import CnnParams, cnn_forward  # noqa: F401
from .han import HanParams, han_forward  # noqa: F401
from .lm import LmModel, lm_score, lm_train  # noqa: F401
from .tfidf import TfIdfModel, tfidf_score, tfidf_train  # noqa: F401
from .training import TrainConfig, TrainResult, fit  # noqa: F401
