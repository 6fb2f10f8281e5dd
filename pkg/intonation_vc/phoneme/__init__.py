"""Phoneme classifier producing per-frame phoneme probabilities (the linguistic condition)."""
from .classifier import ClassifierModel, classifier_loss, classifier_loss_graph, classifier_spec, classify_frames
from .evaluation import (
    accuracy_from_confusion,
    confusion_from_labels,
    confusion_matrix,
    frame_agreement,
    most_confused_pairs,
    predict_labels,
    top1_accuracy,
)
from .inventory import (
    CONFUSABLE_PAIR,
    DEFAULT_SYMBOLS,
    LinguisticFeatures,
    PhonemeInventory,
    PhonemeLabels,
    symbols_to_labels,
)
from .training import TrainingMetrics, labeled_mels, train_classifier

__all__ = [
    "PhonemeInventory",
    "PhonemeLabels",
    "LinguisticFeatures",
    "DEFAULT_SYMBOLS",
    "CONFUSABLE_PAIR",
    "symbols_to_labels",
    "ClassifierModel",
    "classifier_spec",
    "classify_frames",
    "classifier_loss",
    "classifier_loss_graph",
    "train_classifier",
    "TrainingMetrics",
    "labeled_mels",
    "confusion_matrix",
    "confusion_from_labels",
    "top1_accuracy",
    "accuracy_from_confusion",
    "most_confused_pairs",
    "predict_labels",
    "frame_agreement",
]
