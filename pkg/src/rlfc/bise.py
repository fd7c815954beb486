"""Bounded integer sequence encoding.

Packs sequences of unsigned integers bounded by N using one of three split
representations: plain b-bit fields (N = 2^b), a base-3 "trit" pack plus low
bits (N = 3 * 2^b), or a base-5 "quint" pack plus low bits (N = 5 * 2^b).
Pack bytes decode in constant time through small lookup tables.

The canonical range table below is part of the container format: a block's
one-byte descriptor is an index into it.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import FormatError
from .kernels import MODE_BITS, MODE_QUINT, MODE_TRIT

# Cardinalities N in strictly increasing order. Every entry factors as
# 2^b, 3*2^b or 5*2^b; the top entries extend the pattern to 11-bit values.
RANGE_CARDINALITIES = (
    2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 24, 32, 40, 48, 64, 80, 96, 128,
    160, 192, 256, 320, 384, 512, 640, 768, 1024, 1280, 1536, 2048,
)

MAX_VALUE = RANGE_CARDINALITIES[-1] - 1


def _factor(n):
    b = 0
    while n % 2 == 0:
        n //= 2
        b += 1
    if n == 1:
        return MODE_BITS, b
    if n == 3:
        return MODE_TRIT, b
    if n == 5:
        return MODE_QUINT, b
    raise ValueError(f"range table entry {n} is not 2^b, 3*2^b or 5*2^b")


@dataclass(frozen=True)
class RangeDescriptor:
    """One row of the canonical range table."""

    table_index: int
    mode: int
    low_bits: int
    cardinality: int


RANGE_TABLE = tuple(
    RangeDescriptor(i, *_factor(n), n) for i, n in enumerate(RANGE_CARDINALITIES)
)

# Flat arrays for the decode kernels.
TABLE_MODE = np.array([r.mode for r in RANGE_TABLE], dtype=np.uint8)
TABLE_BITS = np.array([r.low_bits for r in RANGE_TABLE], dtype=np.uint8)


def zigzag(v):
    """Map signed to unsigned: 0,-1,1,-2,2 -> 0,1,2,3,4. Accepts arrays."""
    v = np.asarray(v, dtype=np.int64)
    return np.where(v >= 0, 2 * v, -2 * v - 1).astype(np.uint32)


def unzigzag(z):
    """Inverse of zigzag. Accepts arrays."""
    z = np.asarray(z, dtype=np.int64)
    return np.where(z & 1, -((z + 1) >> 1), z >> 1).astype(np.int64)


def select_range(max_value):
    """Smallest table entry with cardinality strictly above max_value."""
    if max_value < 0:
        raise ValueError("max_value must be unsigned")
    if max_value > MAX_VALUE:
        raise FormatError(
            f"value {max_value} exceeds the range table (max {MAX_VALUE})")
    for desc in RANGE_TABLE:
        if desc.cardinality > max_value:
            return desc
    raise AssertionError("unreachable")


def payload_size(rng: RangeDescriptor, count):
    """Exact bit length of count coded values, before byte padding."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return kernels.payload_bits(rng.mode, rng.low_bits, count)


def bise_encode(values, rng: RangeDescriptor) -> bytes:
    """Encode unsigned values (< rng.cardinality) to a byte-padded string."""
    values = np.ascontiguousarray(values, dtype=np.uint32)
    if values.size and int(values.max()) >= rng.cardinality:
        raise ValueError(
            f"value {int(values.max())} out of range N={rng.cardinality}")
    nbits = payload_size(rng, values.size)
    out = np.zeros((nbits + 7) // 8, dtype=np.uint8)
    written = kernels.bise_encode_core(values, rng.mode, rng.low_bits, out)
    assert written == nbits
    return out.tobytes()


def bise_decode(data, count, rng: RangeDescriptor) -> np.ndarray:
    """Decode count values; data must hold at least payload_size bits."""
    buf = np.frombuffer(bytes(data), dtype=np.uint8)
    need = (payload_size(rng, count) + 7) // 8
    if buf.size < need:
        raise FormatError(f"payload truncated: {buf.size} bytes, need {need}")
    out = np.empty(count, dtype=np.uint32)
    status = kernels.bise_decode_core(buf, count, rng.mode, rng.low_bits, out)
    if status != 0:
        raise FormatError("corrupt pack byte in coded stream")
    return out
