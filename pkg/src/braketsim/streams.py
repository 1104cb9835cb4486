"""Counter-based random number substreams for reproducible parallel Monte Carlo.

Every random draw in this package comes from a Philox generator keyed by
(master seed, path), where the path is a short tuple of integers naming the
consumer: (side, chunk, step) for trajectory evolution, a module tag plus
chunk index elsewhere. Because the key fully determines the stream, results
do not depend on scheduling, worker count, or the order in which chunks are
processed. Work is split into fixed-size chunks of CHUNK items; partial sums
are always merged in chunk order, so parallel reduction is bit-identical to
the serial one.

Changing CHUNK changes which draws land on which trajectory and therefore
changes every sampled number. It is part of the reproducibility contract.
"""

import numpy as np

# Trajectory chunk size. Fixed: thread count must never influence chunking.
CHUNK = 1 << 15

# Side tags for the two processes of a pair.
KET = 0
BRA = 1


def substream(seed, *path):
    """Return a fresh Generator for the given (seed, path) key.

    seed is the user-supplied master seed (any nonnegative int), path a tuple
    of small nonnegative ints. Distinct paths give statistically independent
    Philox streams.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *path):
    """Derive a child master seed, for runs that need several independent
    top-level estimates (e.g. the four correlations of a CHSH value)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def chunk_ranges(n):
    """Yield (chunk_id, start, count) covering range(n) in CHUNK-sized blocks."""
    for cid, start in enumerate(range(0, n, CHUNK)):
        yield cid, start, min(CHUNK, n - start)
