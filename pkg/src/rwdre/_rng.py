"""Seedable PRNG primitives shared by the numba kernels and the harness.

Two layers:

* splitmix64 -- seed expansion and counter-based child-seed derivation.
  Every replica / stream seed in the package is derived with
  ``derive_seed(base, *indices)`` so that results are independent of worker
  scheduling and replica order.
* xoshiro256++ -- the in-kernel generator.  State is a 4-element uint64
  array owned by the caller; the numba kernels advance it in place.

The hot loops cannot call numpy's ``Generator`` without leaving nopython
mode, which is why these are hand-rolled.  A pure-Python reference lives in
the test suite and the sequences are compared element-wise.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

U64 = np.uint64
_SM_GAMMA = U64(0x9E3779B97F4A7C15)
_SM_M1 = U64(0xBF58476D1CE4E5B9)
_SM_M2 = U64(0x94D049BB133111EB)
_DOUBLE_SCALE = 1.0 / 9007199254740992.0  # 2**-53


@njit(uint64(uint64), cache=True)
def _sm64_mix(z):
    z = (z ^ (z >> U64(30))) * _SM_M1
    z = (z ^ (z >> U64(27))) * _SM_M2
    return z ^ (z >> U64(31))


@njit(cache=True)
def splitmix64_next(state):
    """Advance a 1-element uint64 state array, return the next output."""
    state[0] = state[0] + _SM_GAMMA
    return _sm64_mix(state[0])


def derive_seed(base: int, *indices: int) -> int:
    """Counter-based child seed: fold each index into the stream.

    Deterministic, order-sensitive, collision-resistant for desk-scale use:
    seed_i = mix(mix(base) ^ mix(i_0 + 1) ...).  Documented so runs can be
    reproduced outside this package.
    """
    st = np.array([U64(base & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)
    acc = splitmix64_next(st)
    for ix in indices:
        st2 = np.array([U64((ix + 1) & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)
        acc = U64(acc) ^ U64(splitmix64_next(st2))
        st3 = np.array([acc], dtype=np.uint64)
        acc = splitmix64_next(st3)
    return int(acc)


def xoshiro_state(seed: int) -> np.ndarray:
    """Fill a fresh xoshiro256++ state from a 64-bit seed via splitmix64."""
    st = np.array([U64(seed & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)
    out = np.empty(4, dtype=np.uint64)
    for i in range(4):
        out[i] = splitmix64_next(st)
    # the all-zero state is invalid; splitmix64 output can't produce it for
    # four consecutive draws, but guard anyway
    if not out.any():
        out[0] = U64(1)
    return out


@njit(uint64(uint64[:]), cache=True, inline="always")
def xs_next(s):
    """xoshiro256++ next(): rotl(s0+s3, 23) + s0, then state update."""
    x = s[0] + s[3]
    result = ((x << U64(23)) | (x >> U64(41))) + s[0]
    t = s[1] << U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << U64(45)) | (s[3] >> U64(19))
    return result


@njit(cache=True, inline="always")
def xs_double(s):
    """Uniform double in [0, 1): top 53 bits of one output."""
    return (xs_next(s) >> U64(11)) * _DOUBLE_SCALE


@njit(cache=True, inline="always")
def xs_exponential(s):
    """Standard exponential via inverse CDF; argument of log is in (0, 1]."""
    return -np.log(1.0 - xs_double(s))


@njit(cache=True, inline="always")
def xs_below(s, n):
    """Uniform integer in [0, n) by masked rejection; exactly unbiased."""
    m = uint64(n - 1)
    m |= m >> U64(1)
    m |= m >> U64(2)
    m |= m >> U64(4)
    m |= m >> U64(8)
    m |= m >> U64(16)
    m |= m >> U64(32)
    while True:
        v = xs_next(s) & m
        if v < uint64(n):
            return v
