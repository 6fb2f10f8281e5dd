"""
Tests for the CVAE synthesizer, its flow variant, the deterministic baseline
and synthesizer training.
"""
from dataclasses import replace

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import quad
from scipy.stats import norm

from conftest import tiny_config
from intonation_vc.config.models import SignalConfig, SynthConfig
from intonation_vc.errors import ClassifierNotFrozenError, EmptyCorpusError, ShapeMismatchError, UntrainedModelError
from intonation_vc.flow import flow_steps, iaf_chain, kl_estimate
from intonation_vc.harness import Corpus, generate_corpus
from intonation_vc.neural import gaussian_kl, gradient_check, mean_squared_error
from intonation_vc.phoneme import ClassifierModel, LinguisticFeatures, PhonemeInventory
from intonation_vc.signal import LinSpectrogram
from intonation_vc.synth import (
    BaselineModel,
    GaussianPosterior,
    SynthesizerModel,
    baseline_loss_graph,
    baseline_synthesize,
    cvae_loss,
    cvae_loss_graph,
    decode,
    decode_raw,
    encode,
    latent_from_noise,
    reparameterize,
    train_synthesizer,
)
from intonation_vc.synth.training import init_model, magnitude_scale, mean_loss, prepare_examples

SMALL_SIGNAL = SignalConfig(sample_rate=8000, frame_len=32, hop=16, n_fft=32, n_mels=8)


def random_condition(frames: int, classes: int, seed: int = 0) -> LinguisticFeatures:
    raw = np.random.default_rng(seed).uniform(0.1, 1.0, (frames, classes))
    return LinguisticFeatures(raw / raw.sum(axis=1, keepdims=True))


def random_spectrogram(frames: int, signal: SignalConfig, seed: int = 0) -> LinSpectrogram:
    mags = np.random.default_rng(seed).uniform(0.0, 2.0, (frames, signal.n_bins))
    return LinSpectrogram(mags, signal.frame_len, signal.hop, signal.n_fft, signal.sample_rate)


def small_model(use_flow: bool = False, seed: int = 0) -> SynthesizerModel:
    config = SynthConfig(latent_dim=2, encoder_width=3, decoder_width=3, use_flow=use_flow)
    rng = np.random.default_rng(seed)
    model = SynthesizerModel.create(3, SMALL_SIGNAL, config, rng=rng)
    for name in model.params:
        if name.endswith(".b"):
            model.params[name] = rng.normal(0.0, 0.1, model.params[name].shape).astype(np.float32)
    return model


class TestEncoder:
    """Posterior inference."""

    def test_zero_parameters(self):
        model = SynthesizerModel.create(3, SMALL_SIGNAL, SynthConfig(latent_dim=4, encoder_width=5, decoder_width=5))
        post = encode(model, random_spectrogram(6, SMALL_SIGNAL), random_condition(6, 3))
        assert np.array_equal(post.mu, np.zeros(4))
        assert np.array_equal(post.sigma, np.ones(4))

    def test_sigma_positive_and_deterministic(self):
        model = small_model(seed=1)
        x, c = random_spectrogram(5, SMALL_SIGNAL, 2), random_condition(5, 3, 3)
        first, second = encode(model, x, c), encode(model, x, c)
        assert np.all(first.sigma > 0)
        assert np.array_equal(first.mu, second.mu)
        assert np.array_equal(first.sigma, second.sigma)

    def test_frame_mismatch(self):
        model = small_model()
        with pytest.raises(ShapeMismatchError):
            encode(model, random_spectrogram(5, SMALL_SIGNAL), random_condition(4, 3))

    def test_class_mismatch(self):
        model = small_model()
        with pytest.raises(ShapeMismatchError):
            encode(model, random_spectrogram(4, SMALL_SIGNAL), random_condition(4, 5))


class TestReparameterize:
    """z = mu + sigma * eps."""

    def test_zero_noise(self):
        post = GaussianPosterior(np.array([0.3, -0.2]), np.array([2.0, 0.5]))
        assert np.array_equal(reparameterize(post, np.zeros(2)), post.mu)

    def test_standard_posterior(self):
        eps = np.array([1.5, -0.5, 0.25])
        assert np.array_equal(reparameterize(GaussianPosterior.standard(3), eps), eps)

    def test_elementwise(self):
        post = GaussianPosterior(np.array([1.0, 2.0]), np.array([0.5, 0.5]))
        assert np.array_equal(reparameterize(post, np.array([2.0, -2.0])), np.array([2.0, 1.0]))

    @pytest.mark.parametrize("seed", range(10))
    def test_affine_in_noise(self, seed):
        rng = np.random.default_rng(seed)
        post = GaussianPosterior(rng.normal(size=3), rng.uniform(0.2, 2.0, 3))
        e1, e2 = rng.normal(size=3), rng.normal(size=3)
        a, b = rng.normal(size=2)
        combined = reparameterize(post, a * e1 + b * e2)
        expected = post.mu + a * (reparameterize(post, e1) - post.mu) + b * (reparameterize(post, e2) - post.mu)
        assert np.allclose(combined, expected, rtol=1e-12, atol=1e-12)
        assert np.allclose(reparameterize(post, e1) - reparameterize(post, np.zeros(3)), post.sigma * e1)

    def test_validation(self):
        with pytest.raises(ValueError):
            GaussianPosterior(np.zeros(2), np.array([1.0, 0.0]))
        with pytest.raises(ShapeMismatchError):
            reparameterize(GaussianPosterior.standard(2), np.zeros(3))

    def test_latent_without_flow_is_noise(self):
        eps = np.array([0.4, -1.0])
        assert np.array_equal(latent_from_noise(small_model(), eps), eps)


class TestDecoder:
    """Decoding latents into magnitude frames."""

    def test_shape_and_clamp(self):
        model = small_model(seed=4)
        c = random_condition(7, 3, 5)
        z = np.array([1.5, -2.0])
        raw = decode_raw(model, z, c)
        out = decode(model, z, c)
        assert out.mags.shape == (7, SMALL_SIGNAL.n_bins)
        assert np.all(out.mags >= 0)
        assert np.array_equal(out.mags, np.maximum(raw, 0.0))

    def test_deterministic(self):
        model = small_model(seed=6)
        c = random_condition(4, 3, 7)
        z = np.array([0.1, 0.2])
        assert np.array_equal(decode(model, z, c).mags, decode(model, z, c).mags)

    def test_magnitude_scale(self):
        model = small_model(seed=8)
        c = random_condition(3, 3, 9)
        z = np.array([0.5, 0.5])
        unit = decode_raw(model, z, c)
        model.magnitude_scale = 4.0
        assert np.allclose(decode_raw(model, z, c), 4.0 * unit)


class TestLoss:
    """Reconstruction plus KL."""

    def test_global_minimum(self):
        x = random_spectrogram(3, SMALL_SIGNAL)
        total, recon, kl = cvae_loss(x, x, GaussianPosterior.standard(2))
        assert (total, recon, kl) == (0.0, 0.0, 0.0)

    def test_unit_mean(self):
        x = random_spectrogram(3, SMALL_SIGNAL)
        _, _, kl = cvae_loss(x, x, GaussianPosterior(np.array([1.0]), np.array([1.0])))
        assert kl == pytest.approx(0.5)

    @pytest.mark.parametrize("case", range(50))
    def test_kl_matches_quadrature(self, case):
        rng = np.random.default_rng(case)
        mu, sigma = float(rng.uniform(-2.0, 2.0)), float(rng.uniform(0.3, 2.5))

        def integrand(z):
            return norm.pdf(z, mu, sigma) * (norm.logpdf(z, mu, sigma) - norm.logpdf(z))

        lo, hi = mu - 12.0 * sigma, mu + 12.0 * sigma
        expected, _ = quad(integrand, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=200)
        assert abs(gaussian_kl(np.array([mu]), np.array([sigma])) - expected) < 1e-6

    def test_kl_non_negative(self):
        rng = np.random.default_rng(10)
        for _ in range(1000):
            dim = int(rng.integers(1, 9))
            assert gaussian_kl(rng.normal(0.0, 2.0, dim), rng.uniform(0.05, 4.0, dim)) >= 0.0

    def test_beta_weight(self):
        x, x_hat = random_spectrogram(2, SMALL_SIGNAL, 1), random_spectrogram(2, SMALL_SIGNAL, 2)
        post = GaussianPosterior(np.array([1.0, 0.0]), np.array([1.0, 2.0]))
        total, recon, kl = cvae_loss(x, x_hat, post, beta=0.25)
        assert total == pytest.approx(recon + 0.25 * kl)

    def test_graph_matches_numeric_path(self):
        model = small_model(seed=11)
        model.params = model.params.astype(np.float64)
        x, c = random_spectrogram(4, SMALL_SIGNAL, 12), random_condition(4, 3, 13)
        eps = np.array([0.3, -0.7])
        total, recon, kl = cvae_loss_graph(model, model.params, x.mags, c.probs, eps, 1.0, np.float64).values()

        post = encode(model, x, c)
        x_hat = decode_raw(model, reparameterize(post, eps), c)
        assert recon == pytest.approx(mean_squared_error(x.mags, x_hat), rel=1e-9)
        assert kl == pytest.approx(gaussian_kl(post.mu, post.sigma), rel=1e-9)
        assert total == pytest.approx(recon + kl)

    def test_flow_graph_uses_single_draw_estimate(self):
        model = small_model(use_flow=True, seed=14)
        model.params = model.params.astype(np.float64)
        x, c = random_spectrogram(4, SMALL_SIGNAL, 15), random_condition(4, 3, 16)
        eps = np.array([-0.2, 0.9])
        _, _, kl = cvae_loss_graph(model, model.params, x.mags, c.probs, eps, 1.0, np.float64).values()
        trace = iaf_chain(encode(model, x, c), eps, flow_steps(model.flow, model.params))
        assert kl == pytest.approx(kl_estimate(trace), rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("use_flow", [False, True])
    def test_gradient_check(self, use_flow):
        model = small_model(use_flow=use_flow, seed=17)
        x, c = random_spectrogram(4, SMALL_SIGNAL, 18), random_condition(4, 3, 19)
        eps = np.array([0.5, -0.5])

        def build(params):
            nodes = cvae_loss_graph(model, params, x.mags, c.probs, eps, 1.0, np.float64)
            return nodes.graph, nodes.total

        assert max(gradient_check(build, model.params).values()) < 1e-4


class TestBaseline:
    """Deterministic condition-to-spectrogram baseline."""

    @staticmethod
    def model(seed: int = 0) -> BaselineModel:
        config = SynthConfig(baseline=True, bank_channels=2, bank_kernels=2, baseline_width=2, highway_layers=1)
        rng = np.random.default_rng(seed)
        model = BaselineModel.create(3, SMALL_SIGNAL, config, rng)
        for name in model.params:
            if name.rsplit(".", 1)[-1].startswith("b"):
                model.params[name] = rng.normal(0.0, 0.1, model.params[name].shape).astype(np.float32)
        return model

    def test_same_condition_same_output(self):
        model = self.model()
        c = random_condition(6, 3, 1)
        first, second = baseline_synthesize(model, c), baseline_synthesize(model, c)
        assert first.mags.shape == (6, SMALL_SIGNAL.n_bins)
        assert np.all(first.mags >= 0)
        assert np.array_equal(first.mags, second.mags)

    def test_class_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            baseline_synthesize(self.model(), random_condition(3, 4))

    def test_gradient_check(self):
        model = self.model(seed=2)
        x, c = random_spectrogram(5, SMALL_SIGNAL, 3), random_condition(5, 3, 4)

        def build(params):
            return baseline_loss_graph(model, params, x.mags, c.probs, np.float64)

        assert max(gradient_check(build, model.params).values()) < 1e-4


class TestTraining:
    """Synthesizer training runs."""

    def test_variants_are_exclusive(self):
        with pytest.raises(ValidationError):
            SynthConfig(use_flow=True, baseline=True)

    def test_needs_trained_classifier(self, tiny_corpus):
        with pytest.raises(UntrainedModelError):
            train_synthesizer(tiny_corpus, None, tiny_config())
        untrained = ClassifierModel.create(PhonemeInventory.default())
        with pytest.raises(UntrainedModelError):
            train_synthesizer(tiny_corpus, untrained, tiny_config())

    def test_needs_frozen_classifier(self, tiny_corpus, trained_classifier):
        thawed = replace(trained_classifier, frozen=False)
        with pytest.raises(ClassifierNotFrozenError):
            train_synthesizer(tiny_corpus, thawed, tiny_config())

    def test_needs_target_speaker(self, tiny_corpus, trained_classifier):
        others = Corpus(tiny_corpus.for_speaker(1), tiny_corpus.inventory)
        with pytest.raises(EmptyCorpusError):
            train_synthesizer(others, trained_classifier, tiny_config())

    def test_trained_models(self, trained_synth, trained_flow_synth, trained_baseline):
        assert trained_synth.trained and trained_synth.kind == "synth"
        assert trained_flow_synth.trained and trained_flow_synth.kind == "synth+flow"
        assert trained_baseline.trained and trained_baseline.kind == "baseline"
        assert trained_synth.magnitude_scale > 0

    def test_same_seed_same_curves(self, tiny_corpus, trained_classifier):
        config = tiny_config(synth={"epochs": 1})
        _, first = train_synthesizer(tiny_corpus, trained_classifier, config, seed=4)
        _, second = train_synthesizer(tiny_corpus, trained_classifier, config, seed=4)
        assert [m.to_dict() for m in first] == [m.to_dict() for m in second]
        assert np.isfinite(first[0].total)

    def test_one_epoch_lowers_loss(self, trained_classifier):
        config = tiny_config(synth={"epochs": 1},
                             corpus={"utterances": 5, "speakers": 1, "target_speaker": 0, "held_out_fraction": 0.0})
        corpus = generate_corpus(seed=9, config=config.corpus, signal=config.signal)
        examples = prepare_examples(corpus, trained_classifier, config)
        assert len(examples) == 5
        untrained = init_model(config, trained_classifier.num_classes, magnitude_scale(examples), seed=4)
        before, _, _ = mean_loss(untrained, examples, seed=4)
        model, _ = train_synthesizer(corpus, trained_classifier, config, seed=4)
        after, _, _ = mean_loss(model, examples, seed=4)
        assert after < before

    @pytest.mark.slow
    def test_baseline_fits_training_utterance(self, tiny_corpus, trained_classifier):
        target = [u for u in tiny_corpus.train if u.speaker == 0][:1]
        corpus = Corpus(target, tiny_corpus.inventory)
        config = tiny_config(synth={
            "baseline": True, "epochs": 300, "learning_rate": 0.005,
            "bank_channels": 8, "bank_kernels": 4, "baseline_width": 16, "highway_layers": 2,
        })
        examples = prepare_examples(corpus, trained_classifier, config)
        untrained = init_model(config, trained_classifier.num_classes, magnitude_scale(examples), seed=6)
        _, before, _ = mean_loss(untrained, examples, seed=6)
        model, _ = train_synthesizer(corpus, trained_classifier, config, seed=6)
        _, after, _ = mean_loss(model, examples, seed=6)
        assert after * 10.0 <= before
