"""Seedable 64-bit pseudorandom generator with splittable per-trial streams.

The generator is splitmix64: a 64-bit counter advanced by a fixed odd
increment, pushed through an avalanching finalizer.  It is trivial to
mirror exactly in C, which is what the compiled backend does; the pure
backend runs the same arithmetic on numpy uint64 arrays (one state per
trial), so both backends consume identical streams.

Stream derivation: trial ``t`` of master seed ``s`` starts from
``mix64((s + (t + 1) * GOLDEN) mod 2**64)``.  Uniform integers use
unbiased rejection; Gaussians use Box-Muller.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4B9FE
_MIX2 = 0x94D049BB133111EB

_U64 = np.uint64
_G = _U64(GOLDEN)
_M1 = _U64(_MIX1)
_M2 = _U64(_MIX2)
_S30, _S27, _S31, _S11 = _U64(30), _U64(27), _U64(31), _U64(11)
_INV53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int (mod 2**64)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def stream_state(master_seed: int, trial_index: int) -> int:
    """Initial state of the per-trial stream."""
    return mix64((master_seed + (trial_index + 1) * GOLDEN) & MASK64)


def index_threshold(n: int) -> int:
    """Rejection bound 2**64 - (2**64 mod n), with 0 meaning 'never reject'."""
    if n < 1:
        raise ValueError("n must be positive")
    r = (1 << 64) % n
    return ((1 << 64) - r) if r else 0


class Rng:
    """Scalar stream; used for dataset generation and small-scale sampling."""

    def __init__(self, seed: int, trial_index: int | None = None):
        if trial_index is None:
            self._state = mix64(seed)
        else:
            self._state = stream_state(seed, trial_index)

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV53

    def index(self, n: int) -> int:
        """Unbiased uniform integer in {0, ..., n-1} by rejection."""
        bound = index_threshold(n)
        while True:
            z = self.next_u64()
            if bound == 0 or z < bound:
                return z % n

    def normal_pair(self) -> tuple[float, float]:
        """Two independent standard normals via Box-Muller."""
        u1 = ((self.next_u64() >> 11) + 1) * _INV53  # in (0, 1]
        u2 = (self.next_u64() >> 11) * _INV53
        r = math.sqrt(-2.0 * math.log(u1))
        return r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)

    def normal(self, size: int) -> np.ndarray:
        out = np.empty(size)
        for i in range(0, size - 1, 2):
            out[i], out[i + 1] = self.normal_pair()
        if size % 2:
            out[-1] = self.normal_pair()[0]
        return out


def stream_states(master_seed: int, trial_indices: np.ndarray) -> np.ndarray:
    """Vector of initial states for the given trial indices."""
    t = np.asarray(trial_indices, dtype=np.uint64)
    z = _U64(master_seed & MASK64) + (t + _U64(1)) * _G
    return vec_mix64(z)


def vec_mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def vec_next_u64(states: np.ndarray) -> np.ndarray:
    """Advance every stream in place and return the raw 64-bit outputs."""
    states += _G
    return vec_mix64(states.copy())


def vec_index(states: np.ndarray, n: int) -> np.ndarray:
    """One unbiased index draw per stream (independent per-stream rejection)."""
    raw_bound = index_threshold(n)
    z = vec_next_u64(states)
    if raw_bound:
        bound = _U64(raw_bound)
        reject = z >= bound
        while reject.any():
            idx = np.nonzero(reject)[0]
            sub = states[idx]
            z2 = vec_next_u64(sub)
            states[idx] = sub
            z[idx] = z2
            reject[idx] = z2 >= bound
    return (z % _U64(n)).astype(np.int64)
