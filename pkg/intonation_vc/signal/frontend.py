"""Analysis front end bound to one SignalConfig."""
from dataclasses import dataclass, field

from intonation_vc.config.models import SignalConfig

from .spectral import mel_filterbank, num_frames, stft, to_mel
from .types import LinSpectrogram, MelFilterbank, MelSpectrogram, Waveform


@dataclass(frozen=True)
class FrontEnd:
    """Framing parameters plus the mel filterbank every feature is computed with."""

    config: SignalConfig = field(default_factory=SignalConfig)
    filterbank: MelFilterbank = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        c = self.config
        object.__setattr__(self, "filterbank", mel_filterbank(c.sample_rate, c.n_fft, c.n_mels, c.fmin, c.mel_fmax))

    def spectrogram(self, w: Waveform) -> LinSpectrogram:
        c = self.config
        return stft(w, c.frame_len, c.hop, c.n_fft)

    def mel(self, s: LinSpectrogram) -> MelSpectrogram:
        return to_mel(s, self.filterbank, self.config.log_floor)

    def analyze(self, w: Waveform):
        """(LinSpectrogram, MelSpectrogram) of a waveform."""
        spec = self.spectrogram(w)
        return spec, self.mel(spec)

    def frames_for(self, n_samples: int) -> int:
        return num_frames(n_samples, self.config.frame_len, self.config.hop)
