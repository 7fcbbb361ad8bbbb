"""First-layer ripeness classifiers: KNN, naive Bayes, random forest and SVM,
plus dataset handling and model persistence."""

from .dataset import LabeledDataset
from .forest import ForestModel, rf_predict, rf_train
from .knn import KnnModel, knn_predict, knn_train
from .labels import Label, Subclass
from .nb import NbModel, nb_predict, nb_train
from .store import load_model, save_model
from .svm import BinaryMachine, SvmModel, machine_decision, rbf_kernel, svm_predict, svm_train

ALGORITHMS = ("knn", "nb", "rf", "svm")


def predict(model, x) -> Label:
    """Dispatch prediction on the model type."""
    if isinstance(model, KnnModel):
        return knn_predict(model, x)
    if isinstance(model, NbModel):
        return nb_predict(model, x)
    if isinstance(model, ForestModel):
        return rf_predict(model, x)
    if isinstance(model, SvmModel):
        return svm_predict(model, x)
    raise TypeError(f"cannot predict with model of type {type(model).__name__}")


__all__ = [
    "ALGORITHMS", "BinaryMachine", "ForestModel", "KnnModel", "Label",
    "LabeledDataset", "NbModel", "Subclass", "SvmModel", "load_model",
    "machine_decision", "nb_predict", "nb_train", "knn_predict", "knn_train",
    "predict", "rbf_kernel", "rf_predict", "rf_train", "save_model",
    "svm_predict", "svm_train",
]
