"""
Counter-based random streams derived from one root seed.

Each purpose (corpus synthesis, parameter initialization, data shuffling, noise
draws, vocoder phase) owns a stream, and counters (epoch, utterance index,
sample index) select independent substreams. Staged training therefore never
lets one stage perturb the randomness of another.
"""
from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Purposes that draw random numbers."""

    CORPUS = 1
    CLASSIFIER_INIT = 2
    CLASSIFIER_DATA = 3
    SYNTH_INIT = 4
    SYNTH_DATA = 5
    SYNTH_EPS = 6
    SAMPLER = 7
    VOCODER = 8
    SPLIT = 9


def rng_for(root_seed: int, stream: Stream, *counters: int) -> np.random.Generator:
    """Return a Philox generator keyed by (root_seed, stream, *counters)."""
    if root_seed < 0:
        raise ValueError(f"Seed must be non-negative, got {root_seed}")
    seq = np.random.SeedSequence(entropy=int(root_seed), spawn_key=(int(stream), *(int(c) for c in counters)))
    return np.random.Generator(np.random.Philox(seq))
