"""
Tests for the phoneme inventory, classifier, training and evaluation.
"""
import math

import numpy as np
import pytest

from conftest import tiny_config
from intonation_vc.errors import EmptyCorpusError, ShapeMismatchError, UnknownPhonemeError, UntrainedModelError
from intonation_vc.harness import Corpus, generate_corpus
from intonation_vc.phoneme import (
    CONFUSABLE_PAIR,
    ClassifierModel,
    LinguisticFeatures,
    PhonemeInventory,
    PhonemeLabels,
    accuracy_from_confusion,
    classifier_loss,
    classify_frames,
    confusion_from_labels,
    confusion_matrix,
    labeled_mels,
    most_confused_pairs,
    symbols_to_labels,
    top1_accuracy,
    train_classifier,
)
from intonation_vc.seeding import Stream, rng_for
from intonation_vc.signal import FrontEnd, MelSpectrogram


def random_mels(frames: int, n_mels: int = 40, seed: int = 0) -> MelSpectrogram:
    return MelSpectrogram(np.random.default_rng(seed).normal(size=(frames, n_mels)), 800, 200, 1024, 16000)


class TestInventory:
    """Inventories and label containers."""

    def test_default_inventory(self):
        inventory = PhonemeInventory.default()
        assert len(inventory) == 8
        assert inventory.index("sil") == 0
        assert inventory.symbol(inventory.index("ae")) == "ae"
        assert set(CONFUSABLE_PAIR) <= set(inventory.symbols)

    def test_unknown_symbol(self):
        with pytest.raises(UnknownPhonemeError):
            PhonemeInventory.default().index("zh")

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            PhonemeInventory(("aa", "aa", "iy"))

    def test_silence_only_inventory_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="at least 2"):
            PhonemeInventory(("sil",))
        path = tmp_path / "sil.txt"
        path.write_text("sil\n", encoding="utf-8")
        with pytest.raises(ValueError, match="at least 2"):
            PhonemeInventory.from_file(path)

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "inventory.txt"
        path.write_text("# toy set\nsil\n\naa  # open vowel\niy\n", encoding="utf-8")
        inventory = PhonemeInventory.from_file(path)
        assert inventory.symbols == ("sil", "aa", "iy")
        assert PhonemeInventory.from_file(inventory.to_file(tmp_path / "copy.txt")) == inventory

    def test_labels_validate_range(self):
        with pytest.raises(ValueError):
            PhonemeLabels(np.array([0, 3]), 3)
        labels = symbols_to_labels(["aa", "sil", "aa"], PhonemeInventory.default())
        assert labels.indices.tolist() == [1, 0, 1]
        assert labels.one_hot().shape == (3, 8)

    def test_features_rows_must_sum_to_one(self):
        with pytest.raises(ValueError):
            LinguisticFeatures(np.full((2, 4), 0.3))


class TestClassifier:
    """Forward pass and loss of the classifier."""

    def test_zero_parameters_give_uniform_rows(self):
        model = ClassifierModel.create(PhonemeInventory.default())
        probs = classify_frames(model, random_mels(7)).probs
        assert probs.shape == (7, 8)
        assert np.allclose(probs, 1.0 / 8)

    def test_rows_sum_to_one(self):
        model = ClassifierModel.create(PhonemeInventory.default(), rng=np.random.default_rng(0))
        probs = classify_frames(model, random_mels(9, seed=1)).probs
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)

    def test_channel_mismatch(self):
        model = ClassifierModel.create(PhonemeInventory.default())
        with pytest.raises(ShapeMismatchError):
            classify_frames(model, random_mels(3, n_mels=20))

    def test_uniform_loss(self):
        probs = LinguisticFeatures(np.full((5, 8), 1.0 / 8))
        labels = PhonemeLabels(np.arange(5), 8)
        assert classifier_loss(probs, labels) == pytest.approx(5 * math.log(8.0))

    def test_perfect_loss(self):
        labels = PhonemeLabels(np.array([2, 0, 1]), 3)
        assert classifier_loss(LinguisticFeatures(labels.one_hot()), labels) == 0.0

    def test_loss_matches_scalar_loop(self):
        rng = np.random.default_rng(2)
        raw = rng.uniform(0.1, 1.0, (3, 4))
        probs = raw / raw.sum(axis=1, keepdims=True)
        labels = PhonemeLabels(np.array([3, 0, 2]), 4)
        expected = 0.0
        for t, k in enumerate(labels.indices):
            expected -= math.log(probs[t, k])
        assert abs(classifier_loss(LinguisticFeatures(probs), labels) - expected) < 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_loss_ignores_class_order(self, seed):
        rng = np.random.default_rng(seed)
        raw = rng.uniform(0.05, 1.0, (6, 8))
        probs = raw / raw.sum(axis=1, keepdims=True)
        labels = rng.integers(0, 8, 6)
        perm = rng.permutation(8)
        permuted = np.empty_like(probs)
        permuted[:, perm] = probs
        original = classifier_loss(LinguisticFeatures(probs), PhonemeLabels(labels, 8))
        relabeled = classifier_loss(LinguisticFeatures(permuted), PhonemeLabels(perm[labels], 8))
        assert relabeled == pytest.approx(original, rel=1e-12)

    def test_frame_count_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            classifier_loss(LinguisticFeatures(np.full((2, 3), 1 / 3)), PhonemeLabels(np.zeros(3), 3))

    def test_untrained_model(self):
        with pytest.raises(UntrainedModelError):
            ClassifierModel.create(PhonemeInventory.default()).require_trained()


class TestEvaluation:
    """Confusion counts and accuracy."""

    def test_perfect_predictions(self):
        truth = np.array([0, 1, 2, 2, 1])
        confusion = confusion_from_labels(truth, truth, 3)
        assert np.array_equal(confusion, np.diag([1, 2, 2]))
        assert accuracy_from_confusion(confusion) == 1.0

    def test_rows_count_true_classes(self):
        confusion = confusion_from_labels(np.array([0, 0, 1]), np.array([1, 0, 1]), 2)
        assert confusion.tolist() == [[1, 1], [0, 1]]
        assert accuracy_from_confusion(confusion) == pytest.approx(2 / 3)

    def test_uniform_classifier_is_at_chance(self):
        model = ClassifierModel.create(PhonemeInventory.default())
        dataset = [(random_mels(16, seed=s), PhonemeLabels(np.arange(16) % 8, 8)) for s in range(4)]
        assert top1_accuracy(model, dataset) == pytest.approx(1.0 / 8)
        assert confusion_matrix(model, dataset).sum() == 64

    def test_workers_do_not_change_counts(self):
        model = ClassifierModel.create(PhonemeInventory.default(), rng=np.random.default_rng(3))
        dataset = [(random_mels(10, seed=s), PhonemeLabels(np.arange(10) % 8, 8)) for s in range(3)]
        assert np.array_equal(confusion_matrix(model, dataset, workers=3), confusion_matrix(model, dataset))

    def test_most_confused_pairs(self):
        confusion = np.array([[5, 1, 0], [4, 5, 2], [0, 2, 5]])
        assert most_confused_pairs(confusion, 2) == [(0, 1, 5), (1, 2, 4)]


class TestTraining:
    """Classifier training on the synthetic corpus."""

    def test_one_epoch_reduces_loss(self, tiny_corpus):
        config = tiny_config(classifier={"epochs": 1})
        utterance = tiny_corpus.utterances[0]
        corpus = Corpus([utterance], tiny_corpus.inventory)
        mel, labels = labeled_mels([utterance], FrontEnd(config.signal))[0]

        initial = ClassifierModel.create(corpus.inventory, config.signal, config.classifier,
                                         rng_for(5, Stream.CLASSIFIER_INIT))
        initial.fit_normalization(mel.mels)
        before = classifier_loss(classify_frames(initial, mel), labels)

        model, history = train_classifier(corpus, config, seed=5)
        after = classifier_loss(classify_frames(model, mel), labels)
        assert len(history) == 1
        assert after < before

    def test_same_seed_same_metrics(self, tiny_corpus):
        config = tiny_config(classifier={"epochs": 2})
        _, first = train_classifier(tiny_corpus, config, seed=9)
        _, second = train_classifier(tiny_corpus, config, seed=9)
        assert [m.to_dict() for m in first] == [m.to_dict() for m in second]

    def test_result_is_trained_and_frozen(self, trained_classifier):
        assert trained_classifier.trained
        assert trained_classifier.frozen
        for value in trained_classifier.params.values():
            assert not value.flags.writeable

    def test_empty_training_split(self, tiny_corpus):
        names = frozenset(u.name for u in tiny_corpus.utterances)
        corpus = Corpus(tiny_corpus.utterances, tiny_corpus.inventory, names)
        with pytest.raises(EmptyCorpusError):
            train_classifier(corpus, tiny_config())

    @pytest.mark.slow
    def test_desk_scale_accuracy_and_confusion(self):
        config = tiny_config(
            classifier={"dense_widths": [64], "recurrent_width": 64, "epochs": 20},
            corpus={"utterances": 200, "speakers": 3, "min_segments": 6, "max_segments": 10},
        )
        corpus = generate_corpus(seed=0, config=config.corpus, signal=config.signal)
        model, history = train_classifier(corpus, config, seed=0)
        held_out = labeled_mels(corpus.held_out, FrontEnd(config.signal))
        assert top1_accuracy(model, held_out) >= 0.90
        assert history[-1].held_out_accuracy == pytest.approx(top1_accuracy(model, held_out))

        confusion = confusion_matrix(model, labeled_mels(corpus.utterances, FrontEnd(config.signal)))
        i, j, _ = most_confused_pairs(confusion, 1)[0]
        assert {corpus.inventory.symbol(i), corpus.inventory.symbol(j)} == set(CONFUSABLE_PAIR)
