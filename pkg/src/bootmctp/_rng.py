"""Deterministic random-number substreams.

All stochastic code in the package draws from counter-based Philox streams
keyed by (seed, stream index).  A computation that needs randomness derives
its stream purely from integer indices, never from call order, so results
are reproducible bit for bit regardless of chunking or process scheduling.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def substream(seed: int, index: int, attempt: int = 0) -> np.random.Generator:
    """Return the generator for stream `index` (redraw `attempt`) under `seed`.

    `index` and `attempt` are packed into the second Philox key word, so
    streams are distinct for every (index, attempt) pair with
    index < 2**32 and attempt < 2**32.
    """
    if not (0 <= index < 1 << 32 and 0 <= attempt < 1 << 32):
        raise ValueError("stream index/attempt out of range")
    key = np.array([seed & _MASK64, (attempt << 32) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *path: int) -> int:
    """Derive a child 64-bit seed from a root seed and an integer path.

    Used to give nested stochastic stages (simulation run -> bootstrap)
    independent substream namespaces.
    """
    ss = np.random.SeedSequence(entropy=(seed & _MASK64, *[p & _MASK64 for p in path]))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
