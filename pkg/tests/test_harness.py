"""
Tests for frame labeling, the synthetic corpus generator and corpus files on disk.
"""
import numpy as np
import pytest

from conftest import tiny_config
from intonation_vc.errors import AudioFormatError, EmptyCorpusError, LabelFormatError, MissingPairError, UnknownPhonemeError
from intonation_vc.harness import (
    CONTOURS,
    PROFILES,
    Corpus,
    Segment,
    frame_labels,
    generate_corpus,
    load_corpus,
    load_corpus_dir,
    parse_labels,
    save_corpus,
    speaker_scale,
    split_held_out,
    synthesize_utterance,
)
from intonation_vc.phoneme import PhonemeInventory
from intonation_vc.signal import Waveform, estimate_f0, write_wav

INVENTORY = PhonemeInventory.default()


class TestFrameLabels:
    """Majority-overlap labeling."""

    def test_single_frame(self):
        labels = frame_labels([Segment(0, 800, "aa")], 800, 800, 200, INVENTORY)
        assert labels.indices.tolist() == [INVENTORY.index("aa")]

    def test_majority(self):
        segments = [Segment(0, 500, "aa"), Segment(500, 1000, "iy")]
        labels = frame_labels(segments, 1000, 800, 200, INVENTORY)
        assert labels.indices.tolist() == [INVENTORY.index("aa"), INVENTORY.index("iy")]

    def test_tie_goes_to_earlier_segment(self):
        segments = [Segment(0, 400, "iy"), Segment(400, 800, "aa")]
        labels = frame_labels(segments, 800, 800, 200, INVENTORY)
        assert labels.indices.tolist() == [INVENTORY.index("iy")]

    def test_split_phoneme_accumulates(self):
        segments = [Segment(0, 300, "aa"), Segment(300, 400, "m"), Segment(400, 800, "aa")]
        labels = frame_labels(segments, 800, 800, 200, INVENTORY)
        assert labels.indices.tolist() == [INVENTORY.index("aa")]

    def test_unlabeled_frame(self):
        segments = [Segment(0, 100, "aa"), Segment(1000, 1200, "iy")]
        with pytest.raises(LabelFormatError, match="no label"):
            frame_labels(segments, 1200, 800, 200, INVENTORY)


class TestLabelFiles:
    """Parsing label text."""

    def test_parse(self):
        segments = parse_labels("0 400 sil\n\n400 1200 aa\n", INVENTORY)
        assert segments == [Segment(0, 400, "sil"), Segment(400, 1200, "aa")]

    def test_overlap_names_line(self):
        with pytest.raises(LabelFormatError) as info:
            parse_labels("0 400 sil\n300 800 aa\n", INVENTORY, "x.phn")
        assert info.value.line == 2
        assert str(info.value).startswith("x.phn:2:")

    def test_unknown_phoneme(self):
        with pytest.raises(UnknownPhonemeError) as info:
            parse_labels("0 400 sil\n400 800 zh\n", INVENTORY)
        assert info.value.line == 2

    def test_malformed_lines(self):
        for text in ("0 400\n", "a b sil\n", "400 400 sil\n"):
            with pytest.raises(LabelFormatError):
                parse_labels(text, INVENTORY)

    def test_past_end(self):
        with pytest.raises(LabelFormatError):
            parse_labels("0 900 sil\n", INVENTORY, n_samples=800)

    def test_empty_text(self):
        with pytest.raises(LabelFormatError, match="no segments"):
            parse_labels("\n", INVENTORY)


class TestSynthetic:
    """The synthetic multi-speaker corpus."""

    def test_same_seed_same_corpus(self, small_config):
        a = generate_corpus(seed=4, n_utterances=3, config=small_config.corpus, signal=small_config.signal)
        b = generate_corpus(seed=4, n_utterances=3, config=small_config.corpus, signal=small_config.signal)
        for x, y in zip(a.utterances, b.utterances):
            assert np.array_equal(x.waveform.samples, y.waveform.samples)
            assert x.segments == y.segments
        assert a.held_out_names == b.held_out_names

    def test_workers_do_not_change_output(self, small_config):
        serial = generate_corpus(seed=5, n_utterances=4, config=small_config.corpus, signal=small_config.signal)
        threaded = generate_corpus(seed=5, n_utterances=4, config=small_config.corpus, signal=small_config.signal,
                                   workers=3)
        for x, y in zip(serial.utterances, threaded.utterances):
            assert np.array_equal(x.waveform.samples, y.waveform.samples)

    def test_names_and_speakers(self, tiny_corpus, small_config):
        assert [u.name for u in tiny_corpus.utterances][:3] == ["utt0000", "utt0001", "utt0002"]
        assert [u.speaker for u in tiny_corpus.utterances] == [i % small_config.corpus.speakers
                                                               for i in range(len(tiny_corpus))]
        assert tiny_corpus.speakers == list(range(small_config.corpus.speakers))

    def test_utterance_consistency(self, tiny_corpus, small_config):
        signal = small_config.signal
        for utt in tiny_corpus.utterances:
            assert utt.segments[0].start == 0
            assert utt.segments[-1].end == len(utt.waveform)
            assert np.max(np.abs(utt.waveform.samples)) <= 1.0
            assert len(utt.f0) == utt.n_frames
            assert utt.n_frames == (len(utt.waveform) - signal.frame_len) // signal.hop + 1

    def test_single_utterance_matches_corpus(self, tiny_corpus, small_config):
        utt = synthesize_utterance(2, 3, INVENTORY, small_config.corpus, small_config.signal)
        assert np.array_equal(utt.waveform.samples, tiny_corpus.get("utt0002").waveform.samples)

    def test_tracker_follows_rendered_pitch(self, tiny_corpus, small_config):
        signal, pitch = small_config.signal, small_config.pitch
        errors = []
        for utt in tiny_corpus.utterances:
            estimate = estimate_f0(utt.waveform, signal.frame_len, signal.hop, pitch.fmin, pitch.fmax,
                                   pitch.voicing_threshold)
            both = estimate.voiced & utt.f0.voiced
            errors.extend(np.abs(estimate.f0[both] - utt.f0.f0[both]) / utt.f0.f0[both])
        assert errors
        assert np.median(errors) < 0.05

    def test_speaker_scales(self):
        assert speaker_scale(0) == 1.0
        assert len({speaker_scale(s) for s in range(3)}) == 3

    def test_profiles_cover_default_inventory(self):
        assert set(INVENTORY.symbols) <= set(PROFILES)
        assert set(CONTOURS) == {"flat", "rising", "falling", "peaked"}

    def test_unknown_contour(self, small_config):
        with pytest.raises(ValueError):
            generate_corpus(seed=0, n_utterances=1, contours=["wobbly"], signal=small_config.signal)

    def test_phoneme_without_profile(self):
        with pytest.raises(UnknownPhonemeError):
            generate_corpus(seed=0, n_utterances=1, inventory=PhonemeInventory(("sil", "zh")))


class TestCorpus:
    """Corpus containers and splits."""

    def test_split_keeps_training_data(self):
        rng = np.random.default_rng(0)
        assert len(split_held_out(["a"], 0.9, rng)) == 0
        assert len(split_held_out([str(i) for i in range(10)], 0.2, rng)) == 2

    def test_train_and_held_out_partition(self, tiny_corpus):
        names = {u.name for u in tiny_corpus.train} | {u.name for u in tiny_corpus.held_out}
        assert names == {u.name for u in tiny_corpus.utterances}
        assert not {u.name for u in tiny_corpus.train} & tiny_corpus.held_out_names

    def test_duplicate_names(self, tiny_corpus):
        utt = tiny_corpus.utterances[0]
        with pytest.raises(ValueError):
            Corpus([utt, utt], INVENTORY)

    def test_unknown_name(self, tiny_corpus):
        with pytest.raises(KeyError):
            tiny_corpus.get("nope")


class TestCorpusFiles:
    """Corpora on disk."""

    def test_round_trip(self, tiny_corpus, tmp_path):
        save_corpus(tiny_corpus, tmp_path)
        loaded = load_corpus_dir(tmp_path)
        assert [u.name for u in loaded.utterances] == [u.name for u in tiny_corpus.utterances]
        assert loaded.held_out_names == tiny_corpus.held_out_names
        for original, copy in zip(tiny_corpus.utterances, loaded.utterances):
            assert copy.segments == original.segments
            assert copy.speaker == original.speaker
            assert np.array_equal(copy.labels.indices, original.labels.indices)
            assert np.max(np.abs(copy.waveform.samples - original.waveform.samples)) <= 1.0 / 32768.0
            assert np.array_equal(copy.f0.voiced, original.f0.voiced)
            assert np.allclose(copy.f0.f0, original.f0.f0, atol=1e-6)

    def test_empty_directory(self, tmp_path):
        INVENTORY.to_file(tmp_path / "inventory.txt")
        (tmp_path / "wav").mkdir()
        with pytest.raises(EmptyCorpusError, match="No utterances"):
            load_corpus(tmp_path / "wav", tmp_path / "labels", tmp_path / "inventory.txt")

    def test_missing_label_file(self, tmp_path):
        INVENTORY.to_file(tmp_path / "inventory.txt")
        write_wav(tmp_path / "wav" / "a.wav", Waveform(np.zeros(1000), 16000))
        (tmp_path / "labels").mkdir()
        with pytest.raises(MissingPairError, match="a.phn"):
            load_corpus(tmp_path / "wav", tmp_path / "labels", tmp_path / "inventory.txt")

    def test_wrong_sample_rate(self, tmp_path):
        INVENTORY.to_file(tmp_path / "inventory.txt")
        write_wav(tmp_path / "wav" / "a.wav", Waveform(np.zeros(1000), 8000))
        (tmp_path / "labels").mkdir()
        (tmp_path / "labels" / "a.phn").write_text("0 1000 sil\n", encoding="utf-8")
        with pytest.raises(AudioFormatError):
            load_corpus(tmp_path / "wav", tmp_path / "labels", tmp_path / "inventory.txt")

    def test_metadata_free_corpus(self, tmp_path):
        INVENTORY.to_file(tmp_path / "inventory.txt")
        (tmp_path / "labels").mkdir()
        for stem in ("a", "b", "c"):
            write_wav(tmp_path / "wav" / f"{stem}.wav", Waveform(np.zeros(1000), 16000))
            (tmp_path / "labels" / f"{stem}.phn").write_text("0 500 sil\n500 1000 aa\n", encoding="utf-8")
        corpus = load_corpus(tmp_path / "wav", tmp_path / "labels", tmp_path / "inventory.txt",
                             tiny_config().signal, held_out_fraction=0.34, seed=1)
        assert corpus.speakers == [0]
        assert len(corpus.held_out) == 1
        assert corpus.get("a").labels.indices.tolist() == [0, INVENTORY.index("aa")]
