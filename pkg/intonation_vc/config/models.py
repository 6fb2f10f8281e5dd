"""
Configuration models using Pydantic for validation.

Every default below is a desk-scale choice; none of them is prescribed by the
underlying method, which leaves frame sizes, layer widths and optimizer
settings open.
"""
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class SignalConfig(BaseModel):
    """Analysis framing shared by every spectral feature."""
    sample_rate: int = Field(default=16000, gt=0, description="Sample rate in Hz")
    frame_len: int = Field(default=800, gt=0, description="Analysis frame length in samples (50 ms)")
    hop: int = Field(default=200, gt=0, description="Frame shift in samples (12.5 ms)")
    n_fft: int = Field(default=1024, gt=0, description="DFT size in samples")
    n_mels: int = Field(default=40, gt=0, description="Number of mel channels")
    fmin: float = Field(default=0.0, ge=0.0, description="Lowest mel filter edge in Hz")
    fmax: Optional[float] = Field(default=None, description="Highest mel filter edge in Hz (None for Nyquist)")
    log_floor: float = Field(default=1e-6, gt=0.0, description="Floor added before the log-mel")

    @model_validator(mode="after")
    def validate_framing(self) -> "SignalConfig":
        """Check the framing and band preconditions of the spectral front end."""
        if self.frame_len > self.n_fft:
            raise ValueError(f"frame_len ({self.frame_len}) must not exceed n_fft ({self.n_fft})")
        if self.hop > self.frame_len:
            raise ValueError(f"hop ({self.hop}) must not exceed frame_len ({self.frame_len})")
        top = self.mel_fmax
        if not self.fmin < top <= self.sample_rate / 2:
            raise ValueError(f"Mel band [{self.fmin}, {top}] is invalid for sample_rate {self.sample_rate}")
        return self

    @property
    def mel_fmax(self) -> float:
        return float(self.fmax) if self.fmax is not None else self.sample_rate / 2.0

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1


class PitchConfig(BaseModel):
    """Autocorrelation f0 tracker settings."""
    fmin: float = Field(default=60.0, gt=0.0, description="Lowest f0 searched in Hz")
    fmax: float = Field(default=400.0, gt=0.0, description="Highest f0 searched in Hz")
    voicing_threshold: float = Field(default=0.3, gt=0.0, lt=1.0, description="Normalized peak below this is unvoiced")

    @model_validator(mode="after")
    def validate_band(self) -> "PitchConfig":
        if self.fmin >= self.fmax:
            raise ValueError(f"Pitch fmin ({self.fmin}) must be below fmax ({self.fmax})")
        return self


class VocoderConfig(BaseModel):
    """Power emphasis and Griffin-Lim settings."""
    power: float = Field(default=1.2, gt=0.0, description="Exponent applied to magnitudes before vocoding")
    griffin_lim_iters: int = Field(default=60, ge=1, description="Griffin-Lim iterations")
    seed: int = Field(default=0, ge=0, description="Seed of the initial random phase")


class ClassifierConfig(BaseModel):
    """Phoneme classifier architecture and training."""
    dense_widths: List[int] = Field(default_factory=lambda: [128, 128], description="Widths of the dense front layers")
    recurrent_width: int = Field(default=128, ge=1, description="Gated-recurrent layer width")
    epochs: int = Field(default=30, ge=1, description="Training epochs")
    learning_rate: float = Field(default=1e-3, gt=0.0, description="Adaptive-moment learning rate")

    @field_validator("dense_widths")
    @classmethod
    def validate_widths(cls, v: List[int]) -> List[int]:
        if any(w < 1 for w in v):
            raise ValueError(f"Dense widths must be positive: {v}")
        return v


class FlowConfig(BaseModel):
    """Inverse autoregressive flow settings."""
    steps: int = Field(default=4, ge=0, description="Number of flow steps")
    log_scale_clamp: float = Field(default=7.0, gt=0.0, description="Log-scale clamp applied before exp")


class SynthConfig(BaseModel):
    """Speech synthesizer (CVAE and baseline) architecture and training."""
    latent_dim: int = Field(default=16, ge=1, description="Dimension of the utterance-level latent")
    encoder_width: int = Field(default=128, ge=1, description="Encoder recurrent width")
    decoder_width: int = Field(default=128, ge=1, description="Decoder recurrent width")
    beta: float = Field(default=1.0, ge=0.0, description="Weight of the KL term")
    epochs: int = Field(default=20, ge=1, description="Training epochs")
    learning_rate: float = Field(default=1e-3, gt=0.0, description="Adaptive-moment learning rate")
    use_flow: bool = Field(default=False, description="Train with the IAF posterior")
    baseline: bool = Field(default=False, description="Train the deterministic CBHG-lite baseline instead")
    bank_channels: int = Field(default=32, ge=1, description="Channels per conv-bank kernel in the baseline")
    bank_kernels: int = Field(default=4, ge=1, description="Conv-bank kernel sizes 1..N in the baseline")
    baseline_width: int = Field(default=64, ge=1, description="Baseline prenet width and recurrent width per direction")
    highway_layers: int = Field(default=2, ge=0, description="Highway layers per CBHG-lite block")

    @model_validator(mode="after")
    def validate_variant(self) -> "SynthConfig":
        if self.use_flow and self.baseline:
            raise ValueError("The baseline has no latent; use_flow and baseline are mutually exclusive")
        return self


class SamplerConfig(BaseModel):
    """Latent noise sampling at conversion time."""
    seed: int = Field(default=0, ge=0, description="Seed of the noise draw")
    clamp_radius: Optional[float] = Field(default=3.0, description="Per-coordinate clamp (None disables)")
    num_samples: int = Field(default=10, ge=1, description="Draws per diversity report")

    @field_validator("clamp_radius")
    @classmethod
    def validate_radius(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v <= 0:
            raise ValueError(f"clamp_radius must be positive when present, got {v}")
        return v


class CorpusConfig(BaseModel):
    """Synthetic corpus generation."""
    utterances: int = Field(default=200, ge=1, description="Number of utterances")
    min_segments: int = Field(default=6, ge=1, description="Fewest phoneme segments per utterance")
    max_segments: int = Field(default=10, ge=1, description="Most phoneme segments per utterance")
    min_segment_ms: float = Field(default=70.0, gt=0.0, description="Shortest phoneme segment")
    max_segment_ms: float = Field(default=160.0, gt=0.0, description="Longest phoneme segment")
    speakers: int = Field(default=3, ge=1, description="Number of synthetic speakers")
    target_speaker: int = Field(default=0, ge=0, description="Speaker the synthesizer is trained on")
    held_out_fraction: float = Field(default=0.2, ge=0.0, lt=1.0, description="Fraction of utterances held out")
    contours: List[str] = Field(
        default_factory=lambda: ["flat", "rising", "falling", "peaked"], description="Pitch contour family"
    )

    @model_validator(mode="after")
    def validate_ranges(self) -> "CorpusConfig":
        if self.min_segments > self.max_segments:
            raise ValueError("min_segments must not exceed max_segments")
        if self.min_segment_ms > self.max_segment_ms:
            raise ValueError("min_segment_ms must not exceed max_segment_ms")
        if self.target_speaker >= self.speakers:
            raise ValueError(f"target_speaker {self.target_speaker} is not among {self.speakers} speakers")
        valid = {"flat", "rising", "falling", "peaked"}
        unknown = set(self.contours) - valid
        if unknown or not self.contours:
            raise ValueError(f"Invalid pitch contours {sorted(unknown)}; choose from {sorted(valid)}")
        return self


class LoggingConfig(BaseModel):
    """Logging configuration."""
    level: str = Field(default="INFO", description="Logging level")
    format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log message format"
    )
    file: Optional[str] = Field(default=None, description="Log file path (None for console only)")
    max_bytes: int = Field(default=10485760, description="Max log file size in bytes (10MB)")
    backup_count: int = Field(default=5, description="Number of backup log files")

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate logging level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"Invalid logging level: {v}. Must be one of {valid_levels}")
        return v_upper


class RunConfig(BaseModel):
    """Master configuration of a run."""
    signal: SignalConfig = Field(default_factory=SignalConfig)
    pitch: PitchConfig = Field(default_factory=PitchConfig)
    vocoder: VocoderConfig = Field(default_factory=VocoderConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    flow: FlowConfig = Field(default_factory=FlowConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    environment: str = Field(default="production", description="Environment name (development/test/production)")
    seed: int = Field(default=0, ge=0, description="Root seed every random stream is derived from")
    workers: int = Field(default=1, ge=1, description="Parallel workers for conversions and evaluation")

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Validate environment name."""
        valid_envs = ["development", "production", "test"]
        if v.lower() not in valid_envs:
            raise ValueError(f"Invalid environment: {v}. Must be one of {valid_envs}")
        return v.lower()

    @model_validator(mode="after")
    def validate_pitch_band(self) -> "RunConfig":
        if self.pitch.fmax >= self.signal.sample_rate / 2:
            raise ValueError(f"Pitch fmax ({self.pitch.fmax}) must be below Nyquist ({self.signal.sample_rate / 2})")
        return self
