"""
Tests for the DSP kernels: framing, STFT, mel projection, power emphasis,
Griffin-Lim and f0 estimation.
"""
import numpy as np
import pytest

from conftest import sine
from intonation_vc.errors import InvalidFrequencyRangeError, NegativeMagnitudeError, SignalTooShortError
from intonation_vc.signal import (
    LinSpectrogram,
    Waveform,
    estimate_f0,
    griffin_lim,
    hz_to_mel,
    istft,
    mel_filterbank,
    mel_to_hz,
    num_frames,
    power_emphasis,
    read_wav,
    signal_length,
    stft,
    stft_complex,
    to_mel,
    to_mel_linear,
    write_pgm,
    write_wav,
)


def naive_stft_magnitudes(samples, frame_len, hop, n_fft):
    n = np.arange(frame_len)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / frame_len)
    bins = np.arange(n_fft // 2 + 1)
    basis = np.exp(-2j * np.pi * np.outer(n, bins) / n_fft)
    rows = []
    for t in range(num_frames(samples.size, frame_len, hop)):
        frame = samples[t * hop:t * hop + frame_len] * window
        rows.append(np.abs(frame @ basis))
    return np.array(rows)


class TestFraming:
    """Frame counts and STFT magnitudes."""

    def test_frame_count(self):
        w = Waveform(np.zeros(1000), 16000)
        assert stft(w, 400, 200, 512).n_frames == 4

    def test_signal_length_inverts_frame_count(self):
        assert signal_length(4, 400, 200) == 1000
        assert num_frames(signal_length(7, 800, 200), 800, 200) == 7
        assert num_frames(799, 800, 200) == 0

    def test_zero_waveform(self):
        spec = stft(Waveform(np.zeros(3000), 16000), 800, 200, 1024)
        assert spec.n_bins == 513
        assert not np.any(spec.mags)

    def test_matches_direct_dft(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-1.0, 1.0, 2048)
        spec = stft(Waveform(samples, 16000), 512, 256, 512)
        expected = naive_stft_magnitudes(samples, 512, 256, 512)
        assert spec.mags.shape == expected.shape
        assert np.max(np.abs(spec.mags - expected)) < 1e-6

    def test_too_short_signal(self):
        with pytest.raises(SignalTooShortError):
            stft(Waveform(np.zeros(100), 16000), 400, 200, 512)

    def test_invalid_framing(self):
        with pytest.raises(ValueError):
            stft(Waveform(np.zeros(2000), 16000), 600, 200, 512)

    def test_istft_reconstructs_covered_samples(self):
        rng = np.random.default_rng(1)
        samples = rng.uniform(-1.0, 1.0, 1800)
        rebuilt = istft(stft_complex(samples, 400, 100, 512), 400, 100, 512)
        # Sample 0 falls on the zero of the periodic window.
        assert np.allclose(rebuilt[1:], samples[1:rebuilt.size], atol=1e-9)

    def test_negative_magnitudes_rejected(self):
        with pytest.raises(NegativeMagnitudeError):
            LinSpectrogram(-np.ones((2, 257)), 400, 200, 512, 16000)


class TestMel:
    """Mel scale, filterbank and log-mel projection."""

    def test_mel_scale(self):
        assert hz_to_mel(700.0) == pytest.approx(2595.0 * np.log10(2.0))
        assert mel_to_hz(hz_to_mel(1234.5)) == pytest.approx(1234.5)

    def test_filterbank_shape_and_sign(self):
        fb = mel_filterbank(16000, 512, 40, 0.0, 8000.0)
        assert fb.weights.shape == (40, 257)
        assert np.all(fb.weights >= 0)
        assert np.all(np.diff(np.argmax(fb.weights, axis=1)) > 0)

    def test_filterbank_band_checks(self):
        with pytest.raises(InvalidFrequencyRangeError):
            mel_filterbank(16000, 512, 40, 4000.0, 3000.0)
        with pytest.raises(InvalidFrequencyRangeError):
            mel_filterbank(16000, 512, 40, 0.0, 9000.0)

    def test_zero_spectrogram(self):
        fb = mel_filterbank(16000, 1024, 40, 0.0, 8000.0)
        mel = to_mel(LinSpectrogram(np.zeros((3, 513)), 800, 200, 1024, 16000), fb)
        assert mel.mels.shape == (3, 40)
        assert np.allclose(mel.mels, np.log(1e-6))

    def test_single_bin(self):
        fb = mel_filterbank(16000, 1024, 40, 0.0, 8000.0)
        mags = np.zeros((1, 513))
        mags[0, 37] = 2.0
        mel = to_mel(LinSpectrogram(mags, 800, 200, 1024, 16000), fb)
        assert np.allclose(mel.mels[0], np.log(2.0 * fb.weights[:, 37] + 1e-6))

    def test_projection_is_linear(self):
        rng = np.random.default_rng(3)
        fb = mel_filterbank(16000, 512, 20, 0.0, 8000.0)
        a = LinSpectrogram(rng.uniform(0.0, 2.0, (5, 257)), 400, 200, 512, 16000)
        b = LinSpectrogram(rng.uniform(0.0, 2.0, (5, 257)), 400, 200, 512, 16000)
        combined = a.with_mags(3.0 * a.mags + 0.5 * b.mags)
        expected = 3.0 * to_mel_linear(a, fb) + 0.5 * to_mel_linear(b, fb)
        assert np.allclose(to_mel_linear(combined, fb), expected, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("n_fft, n_mels", [(512, 20), (1024, 40), (1024, 80)])
    def test_flat_spectrum_fills_every_channel(self, n_fft, n_mels):
        fb = mel_filterbank(16000, n_fft, n_mels, 0.0, 8000.0)
        flat = LinSpectrogram(np.ones((2, n_fft // 2 + 1)), n_fft // 2, n_fft // 4, n_fft, 16000)
        assert np.all(to_mel_linear(flat, fb) > 0.0)

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(2)
        fb = mel_filterbank(16000, 512, 20, 0.0, 8000.0)
        mags = rng.uniform(0.0, 3.0, (4, 257))
        mel = to_mel(LinSpectrogram(mags, 400, 200, 512, 16000), fb)
        for t in range(4):
            for m in range(20):
                energy = 0.0
                for k in range(257):
                    energy += mags[t, k] * fb.weights[m, k]
                assert abs(mel.mels[t, m] - np.log(energy + 1e-6)) < 1e-9


class TestPowerEmphasis:
    """Elementwise magnitude exponent."""

    def test_identity_exponent(self):
        rng = np.random.default_rng(3)
        s = LinSpectrogram(rng.uniform(0, 2, (5, 257)), 400, 200, 512, 16000)
        assert np.array_equal(power_emphasis(s, 1.0).mags, s.mags)

    def test_fixed_points(self):
        mags = np.zeros((2, 257))
        mags[:, ::2] = 1.0
        s = LinSpectrogram(mags, 400, 200, 512, 16000)
        for p in (0.5, 1.2, 3.0):
            assert np.array_equal(power_emphasis(s, p).mags, mags)

    def test_exponents_compose(self):
        rng = np.random.default_rng(4)
        s = LinSpectrogram(rng.uniform(0, 2, (3, 257)), 400, 200, 512, 16000)
        twice = power_emphasis(power_emphasis(s, 1.2), 1.5)
        assert np.allclose(twice.mags, power_emphasis(s, 1.8).mags)

    def test_invalid_exponent(self):
        s = LinSpectrogram(np.ones((1, 257)), 400, 200, 512, 16000)
        with pytest.raises(ValueError):
            power_emphasis(s, 0.0)


class TestGriffinLim:
    """Phase recovery."""

    def test_silence(self):
        s = LinSpectrogram(np.zeros((6, 513)), 800, 200, 1024, 16000)
        w = griffin_lim(s, n_iters=5)
        assert len(w) == signal_length(6, 800, 200)
        assert not np.any(w.samples)

    def test_sine_self_consistency(self):
        target = stft(sine(440.0, 16000), 800, 200, 1024)
        errors = []
        griffin_lim(target, n_iters=60, seed=0, callback=lambda i, e: errors.append(e))
        assert len(errors) == 61
        assert errors[-1] < 0.1
        for before, after in zip(errors, errors[1:]):
            assert after <= before * (1.0 + 1e-9) + 1e-12

    def test_deterministic(self):
        target = stft(sine(300.0, 6000), 800, 200, 1024)
        first = griffin_lim(target, n_iters=5, seed=7)
        second = griffin_lim(target, n_iters=5, seed=7)
        assert np.array_equal(first.samples, second.samples)

    def test_output_is_normalized(self):
        target = stft(sine(300.0, 6000), 800, 200, 1024)
        w = griffin_lim(target, n_iters=3)
        assert np.max(np.abs(w.samples)) == pytest.approx(1.0)

    def test_rejects_zero_iterations(self):
        target = stft(sine(300.0, 6000), 800, 200, 1024)
        with pytest.raises(ValueError):
            griffin_lim(target, n_iters=0)


class TestPitch:
    """Autocorrelation f0 estimation."""

    def test_sine_220(self):
        contour = estimate_f0(sine(220.0, 8000), 800, 200, 60.0, 400.0)
        assert contour.voiced.sum() >= len(contour) - 1
        assert np.all(np.abs(contour.voiced_f0 - 220.0) <= 2.0)

    def test_silence_unvoiced(self):
        contour = estimate_f0(Waveform(np.zeros(8000), 16000), 800, 200)
        assert not np.any(contour.voiced)
        assert all(v is None for v in contour.as_list())
        assert np.isnan(contour.log_stats()[0])

    def test_invalid_band(self):
        with pytest.raises(InvalidFrequencyRangeError):
            estimate_f0(sine(220.0, 4000), 800, 200, 400.0, 60.0)


class TestFileIO:
    """WAV and PGM writers."""

    def test_wav_round_trip(self, tmp_path):
        w = sine(330.0, 4000, amplitude=0.8)
        path = write_wav(tmp_path / "tone.wav", w)
        loaded = read_wav(path)
        assert loaded.sample_rate == 16000
        assert len(loaded) == len(w)
        assert np.max(np.abs(loaded.samples - w.samples)) <= 1.0 / 32768.0

    def test_pgm_layout(self, tmp_path):
        matrix = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
        data = write_pgm(tmp_path / "m.pgm", matrix).read_bytes()
        header = b"P5\n3 2\n255\n"
        assert data.startswith(header)
        pixels = np.frombuffer(data[len(header):], dtype=np.uint8)
        assert pixels.tolist() == [0, 51, 102, 153, 204, 255]

    def test_constant_pgm_is_black(self, tmp_path):
        data = write_pgm(tmp_path / "c.pgm", np.full((2, 2), 7.0)).read_bytes()
        assert data.endswith(bytes(4))
