"""Counter-based uniform variates keyed by (seed, column, trial).

Every draw is a pure function of its key, so a column can be regenerated
without replaying any stream and independently of the region it lies in.
The hash is the SplitMix64 finalizer chained over the key words:

    h = mix(seed); h = mix(h ^ i1); h = mix(h ^ i2); h = mix(h ^ trial)
    u = (h >> 11) * 2**-53

where ``mix(z)`` adds the golden-ratio increment and applies the SplitMix64
output function.  Negative coordinates enter as 64-bit two's complement.
"""

from __future__ import annotations

import numpy as np

RNG_NAME = "splitmix64-counter-v1"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))


def _mix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _as_u64(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int64).astype(np.uint64)


def uniforms(seed: int, i1, i2, trial) -> np.ndarray:
    """Uniform variates in [0, 1) for broadcastable key arrays."""
    i1, i2, trial = np.broadcast_arrays(_as_u64(i1), _as_u64(i2), _as_u64(trial))
    shape = i1.shape
    with np.errstate(over="ignore"):
        h = _mix(np.full(i1.size, seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
        h = _mix(h ^ i1.ravel())
        h = _mix(h ^ i2.ravel())
        h = _mix(h ^ trial.ravel())
    return ((h >> _S11).astype(np.float64) * 2.0**-53).reshape(shape)
