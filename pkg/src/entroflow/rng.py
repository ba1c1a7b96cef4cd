"""Counter-based Gaussian draws for reproducible path simulation.

Every variate is a pure function of ``(seed, path index, step index,
stream)``: paths are bit-identical regardless of ensemble size, evaluation
order, or how often a path is replayed.  The generator hashes the counter
with two rounds of the splitmix64 finalizer and maps the top 53 bits
through the inverse normal CDF.
"""

import numpy as np
from scipy.special import ndtri

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)

# counter layout: path index in the high bits, (step, stream) packed below
_STEP_BITS = 24
_STREAM_BITS = 4
MAX_STEPS = 1 << _STEP_BITS
MAX_STREAMS = 1 << _STREAM_BITS


def _mix(z):
    # splitmix64 finalizer; uint64 wrap-around is intended
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _counter(path_idx, step, stream):
    if step >= MAX_STEPS or stream >= MAX_STREAMS:
        raise ValueError("step or stream index exceeds counter capacity")
    low = np.uint64((step << _STREAM_BITS) | stream)
    return (path_idx << np.uint64(_STEP_BITS + _STREAM_BITS)) ^ low


def uniforms(seed, path_idx, step, stream=0):
    """Uniform variates on (0, 1), one per entry of ``path_idx``."""
    path_idx = np.asarray(path_idx, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix(np.uint64(seed) + _GOLD)
        x = _mix(base ^ _mix(_counter(path_idx, step, stream) + _GOLD))
    # top 53 bits, shifted into (0, 1) so ndtri never sees an endpoint
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def normals(seed, path_idx, step, stream=0):
    """Standard normal variates keyed by (seed, path, step, stream)."""
    return ndtri(uniforms(seed, path_idx, step, stream))
