"""Seedable, splittable random streams with stable cross-platform output.

All stochastic code in the toolkit draws from named substreams derived via
``numpy.random.SeedSequence`` spawn keys, so repeats/trials can run in any
order (or in parallel) and still reproduce bit-identical results.
"""

import numpy as np

# Stream identifiers. Integer keys only: string hashing is not stable.
STREAM_FAIR_SAMPLE = 1
STREAM_KAGGLE_SAMPLE = 2
STREAM_VARIANCE = 3
STREAM_SURROGATE_SUB = 4
STREAM_SURROGATE_FULL = 5
STREAM_SYNTH = 6


def substream(seed, *key):
    """Return a Generator for the (seed, key) substream.

    The same (seed, key) always yields the same stream, independent of any
    other stream having been consumed.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))
