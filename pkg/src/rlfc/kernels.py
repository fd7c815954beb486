"""Hot integer kernels: bit packing, bounded-integer coding, block decode chains.

Every kernel is a plain Python function over numpy buffers, compiled with
numba's ``@njit`` when available.  Set ``RLFC_NUMBA=0`` in the environment to
force the interpreted fallback (identical results, much slower);
``benchmarks/bench_kernels.py`` times the two side by side.

All bit strings are packed LSB-first within bytes: appending an n-bit field x
writes bit (x >> i) & 1 at stream bit position pos + i.  This layout is part
of the container format and must not change.
"""

import os

import numpy as np

MODE_BITS = 0
MODE_TRIT = 1
MODE_QUINT = 2


def _env_flag(name, default=True):
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() not in ("0", "false", "off", "no")


NUMBA_REQUESTED = _env_flag("RLFC_NUMBA", True)
if NUMBA_REQUESTED:
    try:
        from numba import njit

        USE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        USE_NUMBA = False
else:
    USE_NUMBA = False


def _maybe_jit(fn):
    if USE_NUMBA:
        return njit(cache=True, nogil=True)(fn)
    return fn


def _base_digits(base, width, count):
    table = np.empty((count, width), dtype=np.uint8)
    for value in range(count):
        rem = value
        for i in range(width):
            table[value, i] = rem % base
            rem //= base
    return table


# Pack decode tables: a trit pack is 5 base-3 digits in 8 bits (max 242), a
# quint pack is 3 base-5 digits in 7 bits (max 124).
TRIT_DIGITS = _base_digits(3, 5, 243)
QUINT_DIGITS = _base_digits(5, 3, 125)


@_maybe_jit
def payload_bits(mode, bits, count):
    """Exact pre-padding bit length of a coded sequence."""
    if mode == MODE_BITS:
        return count * bits
    if mode == MODE_TRIT:
        return 8 * ((count + 4) // 5) + count * bits
    return 7 * ((count + 2) // 3) + count * bits


@_maybe_jit
def put_bits(buf, pos, value, nbits):
    """Append an nbits-wide field LSB-first; buf must be pre-zeroed."""
    for i in range(nbits):
        if (value >> i) & 1:
            p = pos + i
            buf[p >> 3] |= np.uint8(1 << (p & 7))
    return pos + nbits


@_maybe_jit
def get_bits(buf, pos, nbits):
    value = 0
    for i in range(nbits):
        p = pos + i
        value |= ((int(buf[p >> 3]) >> (p & 7)) & 1) << i
    return value


@_maybe_jit
def bise_encode_core(values, mode, bits, out):
    """Pack unsigned values into out (pre-zeroed bytes). Returns bits written.

    BITS: b-bit fields.  TRIT: per group of <=5 values an 8-bit base-3 pack of
    the high trits, then the group's low-bit fields.  QUINT: per group of <=3
    a 7-bit base-5 pack, then low-bit fields.  Missing trailing group members
    count as zero digits in the pack.
    """
    n = len(values)
    pos = 0
    if mode == MODE_BITS:
        for k in range(n):
            pos = put_bits(out, pos, int(values[k]), bits)
        return pos
    if mode == MODE_TRIT:
        group, radix, pack_bits_n = 5, 3, 8
    else:
        group, radix, pack_bits_n = 3, 5, 7
    mask = (1 << bits) - 1
    g0 = 0
    while g0 < n:
        gn = min(group, n - g0)
        pack = 0
        mul = 1
        for i in range(gn):
            pack += (int(values[g0 + i]) >> bits) * mul
            mul *= radix
        pos = put_bits(out, pos, pack, pack_bits_n)
        if bits > 0:
            for i in range(gn):
                pos = put_bits(out, pos, int(values[g0 + i]) & mask, bits)
        g0 += gn
    return pos


@_maybe_jit
def bise_decode_core(data, count, mode, bits, out):
    """Inverse of bise_encode_core. Returns 0, or 1 on a corrupt pack byte."""
    pos = 0
    if mode == MODE_BITS:
        for k in range(count):
            out[k] = get_bits(data, pos, bits)
            pos += bits
        return 0
    if mode == MODE_TRIT:
        group, pack_bits_n, pack_max = 5, 8, 242
    else:
        group, pack_bits_n, pack_max = 3, 7, 124
    g0 = 0
    while g0 < count:
        gn = min(group, count - g0)
        pack = get_bits(data, pos, pack_bits_n)
        pos += pack_bits_n
        if pack > pack_max:
            return 1
        for i in range(gn):
            if mode == MODE_TRIT:
                digit = int(TRIT_DIGITS[pack, i])
            else:
                digit = int(QUINT_DIGITS[pack, i])
            low = 0
            if bits > 0:
                low = get_bits(data, pos, bits)
                pos += bits
            out[g0 + i] = (digit << bits) | low
        g0 += gn
    return 0


@_maybe_jit
def decode_chain_core(srv, rec_off, m_nodes, bsq, targets, shift,
                      table_mode, table_bits, out, tmp):
    """Accumulate dequantized residuals of the target nodes into out.

    Walks one block-location record: presence bitmap, then per present node a
    descriptor byte and its byte-padded payload.  targets holds ascending
    serial node indices (the ancestor chain); absent targets contribute zero.
    out is an int32[bsq] accumulator pre-filled by the caller with the root
    block.  Returns 0, 1 on a corrupt pack, 2 on a bad descriptor.
    """
    nt = len(targets)
    if nt == 0:
        return 0
    bitmap_bytes = (m_nodes + 7) >> 3
    cursor = rec_off + bitmap_bytes
    last = targets[nt - 1]
    half = (1 << shift) >> 1
    ti = 0
    for node in range(m_nodes):
        if node > last:
            break
        present = (int(srv[rec_off + (node >> 3)]) >> (node & 7)) & 1
        if present == 0:
            if ti < nt and targets[ti] == node:
                ti += 1
                if ti == nt:
                    return 0
            continue
        desc = int(srv[cursor])
        if desc >= len(table_mode):
            return 2
        mode = int(table_mode[desc])
        bits = int(table_bits[desc])
        pbytes = (payload_bits(mode, bits, bsq) + 7) >> 3
        if ti < nt and targets[ti] == node:
            status = bise_decode_core(srv[cursor + 1:cursor + 1 + pbytes],
                                      bsq, mode, bits, tmp)
            if status != 0:
                return status
            for j in range(bsq):
                z = int(tmp[j])
                if z == 0:
                    continue
                if z & 1:
                    mag = (z + 1) >> 1
                    out[j] -= (mag << shift) + half
                else:
                    mag = z >> 1
                    out[j] += (mag << shift) + half
            ti += 1
            if ti == nt:
                return 0
        cursor += 1 + pbytes
    return 0


@_maybe_jit
def decode_plane_core(srv, offsets, blocks_x, blocks_y, m_nodes, block,
                      targets, shift, table_mode, table_bits,
                      root_plane, out_plane):
    """Decode every block of one (image, channel) plane into out_plane."""
    bsq = block * block
    tmp = np.empty(bsq, dtype=np.uint32)
    acc = np.empty(bsq, dtype=np.int32)
    for by in range(blocks_y):
        for bx in range(blocks_x):
            for yy in range(block):
                row = by * block + yy
                for xx in range(block):
                    acc[yy * block + xx] = root_plane[row, bx * block + xx]
            status = decode_chain_core(srv, int(offsets[by * blocks_x + bx]),
                                       m_nodes, bsq, targets, shift,
                                       table_mode, table_bits, acc, tmp)
            if status != 0:
                return status
            for yy in range(block):
                row = by * block + yy
                for xx in range(block):
                    out_plane[row, bx * block + xx] = acc[yy * block + xx]
    return 0


@_maybe_jit
def bise_roundtrip_batch(values, mode, bits, stride, decoded, scratch):
    """Encode and decode every row of values through the coding cores.

    stride is the padded byte length ceil(payload_bits/8); scratch is a
    uint8[stride] work buffer and decoded receives the decoded rows.
    Returns -1 when every row encodes to exactly payload_bits bits and
    decodes cleanly, else the failing row index.
    """
    k, n = values.shape
    expected = payload_bits(mode, bits, n)
    for i in range(k):
        for j in range(stride):
            scratch[j] = 0
        pos = bise_encode_core(values[i], mode, bits, scratch)
        if pos != expected:
            return i
        if bise_decode_core(scratch, n, mode, bits, decoded[i]) != 0:
            return i
    return -1
