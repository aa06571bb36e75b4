"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by the
user seed plus a tuple of non-negative integers naming the stream (process
component, lag bin, column block, ...). Two calls with the same key produce the
same numbers no matter in which order, or on which thread, they are made.
"""

import numpy as np

# Column blocks may sit at negative positions (the pre-history of a trawl);
# keys are shifted so they stay non-negative.
KEY_OFFSET = 1 << 40


def _flatten(key):
    for k in key:
        if isinstance(k, (tuple, list)):
            yield from _flatten(k)
        else:
            yield int(k)


def stream(rng_seed, *key):
    """Return an independent ``numpy.random.Generator`` for ``(rng_seed, *key)``.

    Key entries may be nested tuples, so a caller's stream id can itself be a
    tuple of sub-stream ids."""
    if rng_seed is None:
        raise ValueError("an explicit rng_seed is required")
    spawn_key = tuple(k + KEY_OFFSET if k < 0 else k for k in _flatten(key))
    seq = np.random.SeedSequence(int(rng_seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(seq))
