"""Named, reproducible random streams.

Every stochastic component draws from its own stream so that any one of
them (weight init, dropout masks, batch sampling, signal synthesis) can be
reproduced in isolation without replaying the others.
"""

from __future__ import annotations

import numpy as np

# Fixed stream ids; appending new names is fine, renumbering is not
# (it would silently change every seeded result).
_STREAM_IDS = {
    "init": 0,
    "dropout": 1,
    "batch": 2,
    "synth": 3,
    "jitter": 4,
}


def named_stream(seed: int, name: str, *subkeys: int) -> np.random.Generator:
    """Return the generator for one named stream of a master seed.

    Extra integer subkeys split the stream further (e.g. one generator
    per tool: ``named_stream(seed, "synth", tool_index)``).
    """
    if name not in _STREAM_IDS:
        raise ValueError(f"unknown rng stream {name!r}; known: {sorted(_STREAM_IDS)}")
    entropy = (int(seed), _STREAM_IDS[name], *[int(k) for k in subkeys])
    return np.random.default_rng(np.random.SeedSequence(entropy))
