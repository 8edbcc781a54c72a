from .base import DEFAULTS, KINDS, FitModel, LearnerSpec, fit
from .inspection import feature_importance, partial_dependence
from .model_selection import cross_val_proba, stratified_folds, stratified_kfold_losses
from .preprocessing import FeatureMatrix, TableEncoder, preprocess

__all__ = [
    "DEFAULTS",
    "KINDS",
    "FeatureMatrix",
    "FitModel",
    "LearnerSpec",
    "TableEncoder",
    "cross_val_proba",
    "feature_importance",
    "fit",
    "partial_dependence",
    "preprocess",
    "stratified_folds",
    "stratified_kfold_losses",
]
