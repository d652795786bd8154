"""Counter-based pseudorandomness shared by every stochastic module.

All randomness in the package is a pure function of a 64-bit seed and a
counter-like key (lattice edge, walk step index, trial index), in the style
of counter-based generators: there is no generator state, queries are safe
in any order, and the numba and pure-Python backends produce bit-identical
streams.  The key schedule below is frozen; changing any constant changes
every realized environment.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# splitmix64 finalizer multipliers
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# key-schedule constants (odd)
EDGE_X = 0x9E3779B97F4A7C15
EDGE_Y = 0xC2B2AE3D27D4EB4F
EDGE_O = 0x165667B19E3779F9
WALK_STEP = 0x27D4EB2F165667C5
TRIAL_STREAM = 0xD6E8FEB86659FD93
SUBSTREAM = 0x632BE59BD9B4E019

#: substream tags for derive_seed
STREAM_ENV = 0
STREAM_WALK = 1
STREAM_CONDITION = 2
STREAM_MC = 3


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int, wrapping at 64 bits."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    z &= MASK64
    return z ^ (z >> 31)


def edge_hash(seed: int, x: int, y: int, orient: int) -> int:
    """Hash of one lattice edge keyed by its base site and orientation.

    orient is 0 for the horizontal edge (x,y)-(x+1,y) and 1 for the
    vertical edge (x,y)-(x,y+1).  Negative coordinates wrap mod 2**64,
    matching uint64 arithmetic in the jitted kernels.
    """
    return mix64(seed + EDGE_X * x + EDGE_Y * y + EDGE_O * (orient + 1))


def edge_hash_array(seed: int, xs: np.ndarray, ys: np.ndarray, orient: int) -> np.ndarray:
    """Vectorized edge_hash over int64 coordinate arrays."""
    ux = xs.astype(np.uint64)
    uy = ys.astype(np.uint64)
    z = (
        np.uint64(seed & MASK64)
        + np.uint64(EDGE_X) * ux
        + np.uint64(EDGE_Y) * uy
        + np.uint64(EDGE_O) * np.uint64(orient + 1)
    )
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def walk_u01(seed: int, i: int) -> float:
    """Uniform in [0,1) used for walk step i (i = 1 is the first step)."""
    return mix64(seed + WALK_STEP * i) * 2.0**-64


def derive_seed(base: int, index: int, stream: int = 0) -> int:
    """Expand one top-level seed into per-trial, per-stream sub-seeds."""
    return mix64(base + TRIAL_STREAM * index + SUBSTREAM * stream + 1)


def open_threshold(p: float) -> tuple[int, int]:
    """Return (threshold, force) encoding the open test for parameter p.

    force > 0 means every edge is open, force < 0 means every edge is
    closed; otherwise an edge with hash h is open iff h < threshold.
    """
    if p >= 1.0:
        return MASK64, 1
    if p <= 0.0:
        return 0, -1
    return int(p * 2.0**64), 0
