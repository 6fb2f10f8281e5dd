"""Classifier evaluation: predictions, confusion analysis and agreement rates."""
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np

from intonation_vc.errors import ShapeMismatchError
from intonation_vc.signal.types import MelSpectrogram

from .classifier import ClassifierModel, classify_frames
from .inventory import PhonemeLabels

LabeledFrames = Tuple[MelSpectrogram, PhonemeLabels]


def predict_labels(model: ClassifierModel, frames: MelSpectrogram) -> np.ndarray:
    """Most probable phoneme index per frame."""
    return classify_frames(model, frames).argmax()


def confusion_from_labels(truth: np.ndarray, predicted: np.ndarray, num_classes: int) -> np.ndarray:
    truth, predicted = np.asarray(truth, dtype=np.int64), np.asarray(predicted, dtype=np.int64)
    if truth.shape != predicted.shape:
        raise ShapeMismatchError(f"{truth.size} true labels vs {predicted.size} predictions")
    matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(matrix, (truth, predicted), 1)
    return matrix


def confusion_matrix(model: ClassifierModel, dataset: Sequence[LabeledFrames], workers: int = 1) -> np.ndarray:
    """
    K x K frame counts: entry (i, j) counts frames of true class i predicted as j.

    Utterances are classified on up to ``workers`` threads; counts are merged
    in dataset order.
    """
    def one(item: LabeledFrames) -> np.ndarray:
        frames, labels = item
        labels.check_frames(frames.n_frames)
        return confusion_from_labels(labels.indices, predict_labels(model, frames), model.num_classes)

    total = np.zeros((model.num_classes, model.num_classes), dtype=np.int64)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, dataset))
    else:
        parts = [one(item) for item in dataset]
    for part in parts:
        total += part
    return total


def accuracy_from_confusion(confusion: np.ndarray) -> float:
    count = confusion.sum()
    return float(np.trace(confusion) / count) if count else 0.0


def top1_accuracy(model: ClassifierModel, dataset: Sequence[LabeledFrames], workers: int = 1) -> float:
    """Fraction of frames whose argmax prediction equals the label."""
    return accuracy_from_confusion(confusion_matrix(model, dataset, workers))


def most_confused_pairs(confusion: np.ndarray, top_n: int = 5) -> List[Tuple[int, int, int]]:
    """
    Unordered class pairs ranked by mutual confusion (i as j plus j as i).

    :return: (i, j, count) with i < j, largest counts first
    """
    mutual = confusion + confusion.T
    pairs = [(i, j, int(mutual[i, j])) for i in range(len(confusion)) for j in range(i + 1, len(confusion))]
    pairs.sort(key=lambda p: (-p[2], p[0], p[1]))
    return pairs[:top_n]


def frame_agreement(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Fraction of frames on which two label sequences agree."""
    labels_a, labels_b = np.asarray(labels_a), np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        raise ShapeMismatchError(f"Label sequences differ in length: {labels_a.size} vs {labels_b.size}")
    return float(np.mean(labels_a == labels_b)) if labels_a.size else 0.0
