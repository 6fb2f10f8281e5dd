"""
Many-to-one voice conversion with sampled intonation.

Subpackages:
- signal: framing, spectrograms, Griffin-Lim, pitch, WAV/PGM I/O
- neural: the small reverse-mode tensor library the models are built on
- phoneme: inventory and the frame-level phoneme classifier
- synth / flow: the conditional VAE, its flow posterior and the baseline
- pipeline: conversion, interpolation and diversity measurement
- harness: corpora, checkpoints and run manifests
"""

__version__ = "0.1.0"
