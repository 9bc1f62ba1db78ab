"""Counter-based uniform variates (Philox4x32-10).

A state is the immutable triple ``(seed, stream_id, counter)``. The ``counter``
indexes uniforms, not Philox blocks: every block yields four 32-bit words,
which are packed into two 52-bit integers and mapped to ``(n + 0.5) / 2**52``.
That mapping never produces 0.0 or 1.0 and is exact in double precision.

Functions are pure: they take a state and return the variates together with
the advanced state. Bulk draws are vectorized with numpy and agree bit-for-bit
with repeated scalar draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngState",
    "philox4x32",
    "next_uniform",
    "uniforms",
    "fork_stream",
    "as_state",
]

_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF
_M0 = 0xD2511F53
_M1 = 0xCD9E8D57
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_ROUNDS = 10
_MANTISSA_BITS = 52
_SCALE = 2.0 ** -_MANTISSA_BITS
# below this many variates the pure-python block function is faster than numpy
_SMALL_BATCH = 16


@dataclass(frozen=True)
class RngState:
    """Position in a Philox stream. ``counter`` counts uniforms already used."""

    seed: int = 0
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id", "counter"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value) & _MASK64)

    def advance(self, n: int) -> "RngState":
        new = object.__new__(RngState)
        object.__setattr__(new, "seed", self.seed)
        object.__setattr__(new, "stream_id", self.stream_id)
        object.__setattr__(new, "counter", (self.counter + int(n)) & _MASK64)
        return new


def as_state(rng) -> RngState:
    """Accept an ``RngState`` or an integer seed."""
    if isinstance(rng, RngState):
        return rng
    if rng is None:
        return RngState()
    return RngState(seed=int(rng))


def philox4x32(counter, key):
    """Philox4x32-10 block function on python ints.

    ``counter`` is four 32-bit words, ``key`` two (ints below 2**32).
    Returns four 32-bit words.
    """
    c0, c1, c2, c3 = counter
    k0, k1 = key
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> 32) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> 32) ^ c3 ^ k1,
            p0 & _MASK32,
        )
    return c0, c1, c2, c3


def _philox_blocks(blocks: np.ndarray, stream_id: int, seed: int) -> np.ndarray:
    """Vectorized Philox over an array of 64-bit block indices; shape (n, 4)."""
    mask = np.uint64(_MASK32)
    shift = np.uint64(32)
    c0 = blocks & mask
    c1 = blocks >> shift
    c2 = np.full_like(blocks, stream_id & _MASK32)
    c3 = np.full_like(blocks, stream_id >> 32)
    k0 = seed & _MASK32
    k1 = seed >> 32
    m0 = np.uint64(_M0)
    m1 = np.uint64(_M1)
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = c0 * m0
        p1 = c2 * m1
        c0, c1, c2, c3 = (
            (p1 >> shift) ^ c1 ^ np.uint64(k0),
            p1 & mask,
            (p0 >> shift) ^ c3 ^ np.uint64(k1),
            p0 & mask,
        )
    return np.stack([c0, c1, c2, c3], axis=-1)


def _words_to_unit(hi, lo):
    n = ((hi << 32) | lo) >> (64 - _MANTISSA_BITS)
    return (n + 0.5) * _SCALE


def next_uniform(state: RngState) -> tuple[float, RngState]:
    """One variate in the open interval (0, 1) and the advanced state."""
    block, half = divmod(state.counter, 2)
    words = philox4x32(
        (block & _MASK32, block >> 32, state.stream_id & _MASK32, state.stream_id >> 32),
        (state.seed & _MASK32, state.seed >> 32),
    )
    hi, lo = words[2 * half], words[2 * half + 1]
    return _words_to_unit(hi, lo), state.advance(1)


def _small_batch(state: RngState, n: int) -> list:
    start = state.counter
    key = (state.seed & _MASK32, state.seed >> 32)
    s_lo, s_hi = state.stream_id & _MASK32, state.stream_id >> 32
    out = []
    for block in range(start // 2, (start + n - 1) // 2 + 1):
        w = philox4x32((block & _MASK32, block >> 32, s_lo, s_hi), key)
        out.append(_words_to_unit(w[0], w[1]))
        out.append(_words_to_unit(w[2], w[3]))
    offset = start % 2
    return out[offset : offset + n]


def uniforms(state: RngState, size=None) -> tuple[np.ndarray | float, RngState]:
    """Draw ``prod(size)`` variates in row-major order.

    With ``size=None`` this is :func:`next_uniform`. The values equal what the
    same number of successive ``next_uniform`` calls would give.
    """
    if size is None:
        return next_uniform(state)
    shape = (size,) if np.isscalar(size) else tuple(size)
    n = int(np.prod(shape, dtype=np.int64))
    if n == 0:
        return np.empty(shape), state
    start = state.counter
    if n <= _SMALL_BATCH:
        return np.array(_small_batch(state, n)).reshape(shape), state.advance(n)
    first_block = start // 2
    last_block = (start + n - 1) // 2
    blocks = np.arange(last_block - first_block + 1, dtype=np.uint64) + np.uint64(
        first_block
    )
    words = _philox_blocks(blocks, state.stream_id, state.seed)
    hi = words[:, 0::2].reshape(-1)
    lo = words[:, 1::2].reshape(-1)
    n_all = ((hi << np.uint64(32)) | lo) >> np.uint64(64 - _MANTISSA_BITS)
    offset = start % 2
    values = (n_all[offset : offset + n].astype(np.float64) + 0.5) * _SCALE
    return values.reshape(shape), state.advance(n)


def fork_stream(state: RngState, new_stream_id: int) -> RngState:
    """Fresh state on another stream of the same seed, counter reset to zero."""
    new_stream_id = int(new_stream_id) & _MASK64
    if new_stream_id == state.stream_id:
        raise ValueError(f"stream {new_stream_id} is the parent stream")
    return RngState(seed=state.seed, stream_id=new_stream_id, counter=0)
