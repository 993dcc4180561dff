"""Counter-based random numbers addressed by (seed, sample, index, stream).

Each value is a pure function of its key, so any vertex of any sample can
be regenerated alone and the result never depends on evaluation order or
on how work is split between threads. Keys are hashed with the SplitMix64
finaliser; normals come from Box-Muller on two independent streams.
"""
from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))

STREAM_VERTEX_NORMAL = 0
STREAM_LUMPED_NORMAL = 1
STREAM_MARKOV_UNIFORM = 2


def _mix(z: np.ndarray) -> np.ndarray:
    z = z + _GAMMA
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _key(seed: int, sample, index, stream: int) -> np.ndarray:
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    sample = np.asarray(sample, dtype=np.uint64)
    index = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(seed, dtype=np.uint64).reshape(1))
        h = _mix(h ^ np.uint64(stream))
        h = _mix(h ^ sample)
        return _mix(h[..., None] ^ index) if sample.ndim else _mix(h ^ index)


def uniforms(seed: int, sample, index, stream: int) -> np.ndarray:
    """Uniforms in (0, 1); shape ``sample.shape + index.shape``."""
    bits = _key(seed, sample, index, stream)
    return ((bits >> _S11).astype(np.float64) + 0.5) * 2.0 ** -53


def normals(seed: int, sample, index, stream: int) -> np.ndarray:
    """Standard normals; shape ``sample.shape + index.shape``."""
    u1 = uniforms(seed, sample, index, 2 * stream + 100)
    u2 = uniforms(seed, sample, index, 2 * stream + 101)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
