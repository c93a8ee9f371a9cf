from .models import (
    DEFAULT_HYPERPARAMETERS,
    FAMILIES,
    ConvergenceWarning,
    LearnerSpec,
    TrainedModel,
    TrainingError,
    predict_label,
    predict_proba,
    train,
)
from .persist import load_model, save_model

__all__ = [
    "DEFAULT_HYPERPARAMETERS",
    "FAMILIES",
    "ConvergenceWarning",
    "LearnerSpec",
    "TrainedModel",
    "TrainingError",
    "load_model",
    "predict_label",
    "predict_proba",
    "save_model",
    "train",
]
