"""Classifier families, normalization, tuning and metrics."""
from .base import Classifier
from .gbt import LEAF_WISE, LEVEL_WISE, GbtConfig, GradientBoostedTrees, gbt_fit, logistic_loss
from .knn import KNNClassifier, knn_fit_predict
from .metrics import Metrics, evaluate, f1_score, load_predictions, metrics_from_predictions, save_predictions
from .registry import ALGORITHMS, DEFAULT_GRIDS, load_model, make_model, model_from_dict, save_model
from .scaling import MinMaxScaler, Scaled, minmax_fit_transform
from .svm import SVMClassifier, kkt_residuals, rbf_kernel, smo
from .tuning import GridSearchResult, expand_grid, grid_search_cv, stratified_kfold

__all__ = [
    "ALGORITHMS", "Classifier", "DEFAULT_GRIDS", "GbtConfig", "GradientBoostedTrees",
    "GridSearchResult", "KNNClassifier", "LEAF_WISE", "LEVEL_WISE", "Metrics", "MinMaxScaler",
    "SVMClassifier", "Scaled", "evaluate", "expand_grid", "f1_score", "gbt_fit", "grid_search_cv",
    "kkt_residuals", "knn_fit_predict", "load_model", "load_predictions", "logistic_loss",
    "make_model", "metrics_from_predictions", "minmax_fit_transform", "model_from_dict",
    "rbf_kernel", "save_model", "save_predictions", "smo", "stratified_kfold",
]
