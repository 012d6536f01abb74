"""Seven classifier families behind one fit/predict/predict_proba contract."""

from .base import (
    CNN1D,
    DEFAULT_PARAMS,
    FAMILIES,
    FOREST,
    KNN,
    LOGREG,
    MLP,
    MODEL_SCHEMA_VERSION,
    SVM_RBF,
    TREE,
    ClassifierSpec,
    FittedModel,
    deserialize_model,
    encode_labels,
    fit,
    predict,
    predict_proba,
    serialize_model,
)
from .forest import RandomForestModel, forest_as_single_tree
from .gradcheck import gradient_check
from .linear import LogisticModel
from .neighbors import KnnModel
from .neural import Cnn1dModel, MlpModel
from .svm import SvmRbfModel
from .tree import DecisionTreeModel, best_split, grow_tree

__all__ = [
    "CNN1D", "DEFAULT_PARAMS", "FAMILIES", "FOREST", "KNN", "LOGREG", "MLP",
    "MODEL_SCHEMA_VERSION", "SVM_RBF", "TREE", "ClassifierSpec", "FittedModel",
    "Cnn1dModel", "DecisionTreeModel", "KnnModel", "LogisticModel", "MlpModel",
    "RandomForestModel", "SvmRbfModel", "best_split", "deserialize_model",
    "encode_labels", "fit", "forest_as_single_tree", "gradient_check",
    "grow_tree", "predict", "predict_proba", "serialize_model",
]
