"""Stream decoding: full images, random-access blocks, progressive levels.

init parses the header, fully decodes the (small) root views and the offset
arrays, and keeps the SRV streams as raw bytes. Every later request walks
just the records it needs; nothing else is pre-expanded, and the state is
never mutated, so concurrent decodes are safe.
"""

from dataclasses import dataclass

import numpy as np

from . import colorspace, container, kernels
from .bise import RANGE_TABLE, TABLE_BITS, TABLE_MODE, bise_decode, unzigzag
from .errors import FormatError
from .hierarchy import dequantize
from .lightfield import LightFieldGrid, default_geometry


@dataclass(frozen=True)
class DecoderState:
    header: container.RlfcHeader
    data: bytes
    root_planes: np.ndarray      # (rsx, rsy, 3, Hp, Wp) int32, unbiased
    offsets: tuple               # per channel u64 array, one per block
    srv: tuple                   # per channel uint8 view of the SRV stream
    chains: np.ndarray           # (S, T, h) ascending serial ancestor indices
    m_nodes: int


def init(stream: bytes) -> DecoderState:
    """Parse a stream into an immutable, request-ready state."""
    header = container.parse_header(stream)
    container.check_stream_length(header, stream)
    root_planes = container.parse_roots(stream, header)
    offsets = tuple(container.parse_offsets(stream, header, c)
                    for c in range(3))
    srv = tuple(container.srv_section(stream, header, c) for c in range(3))
    h = header.tree_height
    chains = np.zeros((header.s_count, header.t_count, h), dtype=np.int64)
    for s in range(header.s_count):
        for t in range(header.t_count):
            chains[s, t] = container.chain_node_indices(
                s, t, header.s_count, header.t_count, h)
    m = container.total_srv_nodes(header.s_count, header.t_count, h)
    return DecoderState(header=header, data=bytes(stream),
                        root_planes=root_planes, offsets=offsets, srv=srv,
                        chains=chains, m_nodes=m)


def _check_indices(state, s, t, bx=0, by=0):
    hdr = state.header
    if not (0 <= s < hdr.s_count and 0 <= t < hdr.t_count):
        raise IndexError(f"image index ({s}, {t}) outside grid")
    wb, hb = hdr.block_grid
    if not (0 <= bx < wb and 0 <= by < hb):
        raise IndexError(f"block index ({bx}, {by}) outside block grid")


def _check_level(state, stop_level):
    if not 0 <= stop_level <= state.header.tree_height:
        raise ValueError(f"stop level {stop_level} outside [0, "
                         f"{state.header.tree_height}]")


def _raise_status(status):
    if status == 1:
        raise FormatError("corrupt coded pack in SRV payload")
    if status == 2:
        raise FormatError("descriptor outside range table")


def _root_block(state, s, t, channel, bx, by):
    hdr = state.header
    b = hdr.block_size
    root = state.root_planes[s >> hdr.tree_height, t >> hdr.tree_height,
                             channel]
    return root[by * b:(by + 1) * b, bx * b:(bx + 1) * b]


def decode_block_progressive(state: DecoderState, image_index, block_index,
                             channel, stop_level):
    """Decode one B x B block summing SRV levels >= stop_level.

    stop_level = tree height returns the raw root block; 0 is the full
    decode. Touches one offset entry and one record in the channel's SRV
    stream.
    """
    s, t = image_index
    bx, by = block_index
    _check_indices(state, s, t, bx, by)
    _check_level(state, stop_level)
    hdr = state.header
    b = hdr.block_size
    wb, _ = hdr.block_grid
    acc = np.ascontiguousarray(
        _root_block(state, s, t, channel, bx, by)).reshape(b * b).copy()
    targets = state.chains[s, t, :hdr.tree_height - stop_level]
    if len(targets):
        tmp = np.empty(b * b, dtype=np.uint32)
        status = kernels.decode_chain_core(
            state.srv[channel], int(state.offsets[channel][by * wb + bx]),
            state.m_nodes, b * b, targets, hdr.quant_shift,
            TABLE_MODE, TABLE_BITS, acc, tmp)
        _raise_status(status)
    return acc.reshape(b, b)


def decode_block(state: DecoderState, image_index, block_index, channel):
    """Fully decode one B x B block of one channel plane."""
    return decode_block_progressive(state, image_index, block_index, channel,
                                    stop_level=0)


def decode_block_traced(state: DecoderState, image_index, block_index,
                        channel, stop_level=0):
    """decode_block plus the list of SRV byte ranges it read.

    Pure-python mirror of the kernel used to assert read locality: returns
    (block, ranges) where ranges are absolute [start, end) stream spans. A
    skipped payload contributes only its descriptor byte.
    """
    s, t = image_index
    bx, by = block_index
    _check_indices(state, s, t, bx, by)
    _check_level(state, stop_level)
    hdr = state.header
    b = hdr.block_size
    bsq = b * b
    wb, _ = hdr.block_grid
    secs, _ = container.section_offsets(hdr)
    srv_start = secs[channel][2]
    rec = srv_start + int(state.offsets[channel][by * wb + bx])
    bitmap_len = (state.m_nodes + 7) >> 3
    ranges = [(rec, rec + bitmap_len)]
    bitmap = state.data[rec:rec + bitmap_len]

    targets = set(int(v)
                  for v in state.chains[s, t, :hdr.tree_height - stop_level])
    acc = np.ascontiguousarray(
        _root_block(state, s, t, channel, bx, by)).reshape(bsq).copy()
    acc = acc.astype(np.int64)
    cursor = rec + bitmap_len
    top = max(targets) if targets else -1
    for node in range(state.m_nodes):
        if node > top:
            break
        if not (bitmap[node >> 3] >> (node & 7)) & 1:
            continue
        desc = state.data[cursor]
        ranges.append((cursor, cursor + 1))
        if desc >= len(RANGE_TABLE):
            raise FormatError(f"descriptor {desc} outside range table")
        rng = RANGE_TABLE[desc]
        pbytes = (kernels.payload_bits(rng.mode, rng.low_bits, bsq) + 7) >> 3
        if node in targets:
            payload = state.data[cursor + 1:cursor + 1 + pbytes]
            ranges.append((cursor + 1, cursor + 1 + pbytes))
            z = bise_decode(np.frombuffer(payload, dtype=np.uint8), bsq, rng)
            acc += dequantize(unzigzag(z), hdr.quant_shift)
        cursor += 1 + pbytes
    return acc.astype(np.int32).reshape(b, b), ranges


def decode_plane(state: DecoderState, s, t, channel, stop_level=0):
    """Decode one image channel plane at padded dims, int32."""
    _check_indices(state, s, t)
    _check_level(state, stop_level)
    hdr = state.header
    wp, hp = hdr.padded_dims
    wb, hb = hdr.block_grid
    root = np.ascontiguousarray(
        state.root_planes[s >> hdr.tree_height, t >> hdr.tree_height,
                          channel])
    out = np.empty((hp, wp), dtype=np.int32)
    targets = state.chains[s, t, :hdr.tree_height - stop_level]
    if len(targets) == 0:
        return root.copy()
    status = kernels.decode_plane_core(
        state.srv[channel], state.offsets[channel], wb, hb, state.m_nodes,
        hdr.block_size, targets, hdr.quant_shift, TABLE_MODE, TABLE_BITS,
        root, out)
    _raise_status(status)
    return out


def decode_image(state: DecoderState, image_index, stop_level=0):
    """Decode one camera image to true-dims 8-bit RGB."""
    s, t = image_index
    hdr = state.header
    planes = [decode_plane(state, s, t, c, stop_level)[:hdr.height,
                                                       :hdr.width]
              for c in range(3)]
    return colorspace.planes_to_grid(planes)


def decode_all(state: DecoderState, stop_level=0) -> LightFieldGrid:
    """Decode the whole grid back into a light field."""
    hdr = state.header
    rgb = np.zeros((hdr.s_count, hdr.t_count, hdr.height, hdr.width, 3),
                   dtype=np.uint8)
    for s in range(hdr.s_count):
        for t in range(hdr.t_count):
            rgb[s, t] = decode_image(state, (s, t), stop_level)
    positions = np.zeros((hdr.s_count, hdr.t_count, 2))
    positions[:, :, 0] = np.arange(hdr.s_count)[:, None]
    positions[:, :, 1] = np.arange(hdr.t_count)[None, :]
    return LightFieldGrid(hdr.s_count, hdr.t_count, hdr.width, hdr.height,
                          rgb, positions,
                          default_geometry(hdr.s_count, hdr.t_count))
