"""Serialized stream format and random-access parsing.

Stream layout (all integers little-endian, bit strings LSB-first):

    header (64 bytes)
    for each channel in (Y, Co, Cg):
        root stream     per root view, grid row-major: u32 length + codec bytes
        offset array    one u64 per spatial block, relative to the SRV stream
        SRV stream      one block-location record per spatial block, row-major

A block-location record covers one B x B pixel window across every node of
the residual tree (serial BFS order: level h-1 first, row-major within a
level):

    presence bitmap   ceil(M/8) bytes, bit i (LSB-first) = node i stored
    per stored node   descriptor byte (range-table index) + byte-padded
                      BISE payload of the B*B zigzag values

Decoding one block therefore touches exactly one offset entry and one record
per channel. Inside a record, payloads are skipped by reading descriptor
bytes alone; no per-node offsets are stored.

Root views are coded as unsigned 16-bit samples; chroma planes carry a +256
bias so they stay non-negative. RAW roots are little-endian row-major
samples; PNG and JPEG2000 roots are standard lossless encodings of the same
16-bit plane.
"""

import io
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import kernels
from .bise import RANGE_TABLE, TABLE_BITS, TABLE_MODE, bise_decode, bise_encode
from .colorspace import CHROMA_BIAS
from .errors import FormatError, UnsupportedCodecError
from .hierarchy import (EncodingParams, FilterSpec, SrvChannelNode, SrvLevel,
                        SrvTree, VALID_BLOCK_SIZES, _padded_dims)

MAGIC = b"RLFC"
VERSION = 1
HEADER_SIZE = 64
_HEADER_FMT = "<4sBBBBHHHHBBHHI2x9I"

CODEC_RAW = 0
CODEC_PNG = 1
CODEC_JPEG2000 = 2
CODEC_IDS = {"raw": CODEC_RAW, "png": CODEC_PNG, "jpeg2000": CODEC_JPEG2000}
CODEC_NAMES = {v: k for k, v in CODEC_IDS.items()}
FILTER_IDS = {"uniform": 0, "gaussian": 1}
FILTER_NAMES = {v: k for k, v in FILTER_IDS.items()}

CHANNEL_BIAS = (0, CHROMA_BIAS, CHROMA_BIAS)


@dataclass(frozen=True)
class RlfcHeader:
    s_count: int
    t_count: int
    width: int
    height: int
    tree_height: int
    block_size: int
    quant_shift: int
    pixel_threshold: int
    block_threshold: int
    filter_kind: str
    sigma_fp: int
    root_codec_id: int
    section_lengths: tuple   # ((root, offsets, srv) bytes) per channel

    @property
    def padded_dims(self):
        return _padded_dims(self.width, self.height, self.block_size)

    @property
    def block_grid(self):
        wp, hp = self.padded_dims
        return wp // self.block_size, hp // self.block_size

    def params(self) -> EncodingParams:
        kind = self.filter_kind
        sigma = self.sigma_fp / 256.0 if kind == "gaussian" else 0.7
        return EncodingParams(
            tree_height=self.tree_height,
            block_size=self.block_size,
            pixel_threshold=self.pixel_threshold,
            block_threshold=self.block_threshold,
            quant_shift=self.quant_shift,
            filter=FilterSpec(kind=kind, sigma=sigma),
            root_codec=CODEC_NAMES[self.root_codec_id],
        )


# ---------------------------------------------------------------------------
# Tree geometry helpers


def level_dims(s_count, t_count, level):
    """Camera-grid dims at a tree level (repeated ceil-halving)."""
    return -(-s_count // (1 << level)), -(-t_count // (1 << level))


def level_node_counts(s_count, t_count, tree_height):
    """SRV node count per level, index = level (0 .. h-1)."""
    counts = []
    for l in range(tree_height):
        sx, sy = level_dims(s_count, t_count, l)
        counts.append(sx * sy)
    return counts


def total_srv_nodes(s_count, t_count, tree_height):
    return sum(level_node_counts(s_count, t_count, tree_height))


def bfs_index(level, x, y, s_count, t_count, tree_height):
    """Serial node index: level h-1 first, row-major (y outer) per level."""
    if not 0 <= level < tree_height:
        raise ValueError(f"level {level} outside SRV tree")
    sx, sy = level_dims(s_count, t_count, level)
    if not (0 <= x < sx and 0 <= y < sy):
        raise ValueError(f"node ({x}, {y}) outside level-{level} grid")
    counts = level_node_counts(s_count, t_count, tree_height)
    return sum(counts[level + 1:]) + y * sx + x


def ancestors(s, t, s_count, t_count, tree_height):
    """Ancestor chain of image (s, t): [(level, x, y)] top-down + root index."""
    if not (0 <= s < s_count and 0 <= t < t_count):
        raise ValueError(f"image index ({s}, {t}) outside grid")
    chain = [(l, s >> l, t >> l) for l in range(tree_height - 1, -1, -1)]
    root = (s >> tree_height, t >> tree_height)
    return chain, root


def chain_node_indices(s, t, s_count, t_count, tree_height):
    """Ascending serial indices of (s, t)'s ancestor chain, as an array."""
    chain, _ = ancestors(s, t, s_count, t_count, tree_height)
    idx = [bfs_index(l, x, y, s_count, t_count, tree_height)
           for l, x, y in chain]
    return np.asarray(idx, dtype=np.int64)


# ---------------------------------------------------------------------------
# Root view codecs


def encode_root(plane, codec_id) -> bytes:
    """Losslessly encode one biased root plane (unsigned 16-bit samples)."""
    arr = np.asarray(plane)
    if arr.min() < 0 or arr.max() > 0xFFFF:
        raise ValueError("root plane out of unsigned 16-bit range")
    arr = arr.astype(np.uint16)
    if codec_id == CODEC_RAW:
        return arr.astype("<u2").tobytes()
    if codec_id == CODEC_PNG:
        buf = io.BytesIO()
        Image.fromarray(arr).save(buf, format="PNG")
        return buf.getvalue()
    if codec_id == CODEC_JPEG2000:
        buf = io.BytesIO()
        try:
            Image.fromarray(arr).save(buf, format="JPEG2000", irreversible=False)
        except Exception as exc:
            raise UnsupportedCodecError(
                f"jpeg2000 encoding unavailable: {exc}") from exc
        return buf.getvalue()
    raise UnsupportedCodecError(f"unknown root codec id {codec_id}")


def decode_root(data, codec_id, width, height):
    """Inverse of encode_root; validates dims against the header."""
    if codec_id == CODEC_RAW:
        expect = width * height * 2
        if len(data) != expect:
            raise FormatError(f"raw root length {len(data)} != {expect}")
        arr = np.frombuffer(data, dtype="<u2").reshape(height, width)
    elif codec_id in (CODEC_PNG, CODEC_JPEG2000):
        try:
            with Image.open(io.BytesIO(data)) as im:
                arr = np.asarray(im)
        except Exception as exc:
            raise FormatError(f"root image decode failed: {exc}") from exc
        if arr.ndim != 2:
            raise FormatError("root image is not single-channel")
        if arr.shape != (height, width):
            raise FormatError(
                f"root dims {arr.shape[::-1]} != header {(width, height)}")
    else:
        raise UnsupportedCodecError(f"unknown root codec id {codec_id}")
    return arr.astype(np.int64)


# ---------------------------------------------------------------------------
# Header


def pack_header(header: RlfcHeader) -> bytes:
    flat = []
    for sec in header.section_lengths:
        flat.extend(int(v) for v in sec)
    return struct.pack(
        _HEADER_FMT, MAGIC, VERSION, header.root_codec_id, header.block_size,
        header.tree_height, header.s_count, header.t_count, header.width,
        header.height, header.quant_shift, FILTER_IDS[header.filter_kind],
        header.sigma_fp, header.pixel_threshold, header.block_threshold,
        *flat)


def parse_header(data) -> RlfcHeader:
    if len(data) < HEADER_SIZE:
        raise FormatError(f"stream too short for header: {len(data)} bytes")
    fields = struct.unpack(_HEADER_FMT, bytes(data[:HEADER_SIZE]))
    (magic, version, codec_id, block_size, tree_height, s_count, t_count,
     width, height, quant_shift, filter_id, sigma_fp, pixel_threshold,
     block_threshold, *flat) = fields
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if codec_id not in CODEC_NAMES:
        raise UnsupportedCodecError(f"unknown root codec id {codec_id}")
    if block_size not in VALID_BLOCK_SIZES:
        raise FormatError(f"invalid block size {block_size}")
    if tree_height < 1:
        raise FormatError("tree height must be >= 1")
    if filter_id not in FILTER_NAMES:
        raise FormatError(f"invalid filter kind {filter_id}")
    if s_count < 1 or t_count < 1 or width < 1 or height < 1:
        raise FormatError("grid and image dims must be >= 1")
    sections = tuple((flat[3 * c], flat[3 * c + 1], flat[3 * c + 2])
                     for c in range(3))
    header = RlfcHeader(
        s_count=s_count, t_count=t_count, width=width, height=height,
        tree_height=tree_height, block_size=block_size,
        quant_shift=quant_shift, pixel_threshold=pixel_threshold,
        block_threshold=block_threshold, filter_kind=FILTER_NAMES[filter_id],
        sigma_fp=sigma_fp, root_codec_id=codec_id, section_lengths=sections)
    return header


def section_offsets(header: RlfcHeader):
    """Absolute (root, offsets, srv) start offsets per channel."""
    out = []
    pos = HEADER_SIZE
    for root_len, off_len, srv_len in header.section_lengths:
        out.append((pos, pos + root_len, pos + root_len + off_len))
        pos += root_len + off_len + srv_len
    return out, pos


def check_stream_length(header: RlfcHeader, data):
    _, end = section_offsets(header)
    if len(data) < end:
        raise FormatError(f"stream truncated: {len(data)} < {end} bytes")
    if len(data) > end:
        raise FormatError(
            f"{len(data) - end} trailing bytes after the last section")


# ---------------------------------------------------------------------------
# Serialization


def serialize(root_planes, srv: SrvTree, params: EncodingParams,
              s_count, t_count, width, height) -> bytes:
    """Produce the canonical stream for one encoded light field.

    root_planes: (rsx, rsy, 3, Hp, Wp) int array, unbiased sample values.
    The SRV tree is written as-is: presence, range choices and values are
    preserved exactly, so parse + serialize is the identity on bytes.
    """
    h = params.tree_height
    codec_id = CODEC_IDS[params.root_codec]
    wp, hp = _padded_dims(width, height, params.block_size)
    wb, hb = wp // params.block_size, hp // params.block_size
    m_nodes = total_srv_nodes(s_count, t_count, h)
    bitmap_len = (m_nodes + 7) >> 3
    rsx, rsy = level_dims(s_count, t_count, h)

    sections = []
    lengths = []
    for c in range(3):
        bias = CHANNEL_BIAS[c]
        root_chunks = []
        for y in range(rsy):
            for x in range(rsx):
                blob = encode_root(root_planes[x, y, c] + bias, codec_id)
                root_chunks.append(struct.pack("<I", len(blob)))
                root_chunks.append(blob)
        root_sec = b"".join(root_chunks)

        # One pass builds the records and their offsets together.
        nodes_bfs = []
        for l in range(h - 1, -1, -1):
            sx, sy = level_dims(s_count, t_count, l)
            for y in range(sy):
                for x in range(sx):
                    nodes_bfs.append(srv.levels[l].nodes[x][y][c])
        assert len(nodes_bfs) == m_nodes

        offsets = np.zeros(wb * hb, dtype="<u8")
        records = []
        pos = 0
        for by in range(hb):
            for bx in range(wb):
                offsets[by * wb + bx] = pos
                bitmap = bytearray(bitmap_len)
                chunks = [bitmap]
                for i, node in enumerate(nodes_bfs):
                    if not node.present[by, bx]:
                        continue
                    bitmap[i >> 3] |= 1 << (i & 7)
                    rng = RANGE_TABLE[int(node.range_idx[by, bx])]
                    chunks.append(bytes([rng.table_index]))
                    chunks.append(bise_encode(node.zvals[by, bx], rng))
                rec = b"".join(chunks)
                records.append(rec)
                pos += len(rec)
        off_sec = offsets.tobytes()
        srv_sec = b"".join(records)
        sections.extend((root_sec, off_sec, srv_sec))
        lengths.append((len(root_sec), len(off_sec), len(srv_sec)))

    header = RlfcHeader(
        s_count=s_count, t_count=t_count, width=width, height=height,
        tree_height=h, block_size=params.block_size,
        quant_shift=params.quant_shift,
        pixel_threshold=params.pixel_threshold,
        block_threshold=params.block_threshold,
        filter_kind=params.filter.kind,
        sigma_fp=params.filter.sigma_fp if params.filter.kind == "gaussian"
        else 0,
        root_codec_id=codec_id, section_lengths=tuple(lengths))
    return pack_header(header) + b"".join(sections)


# ---------------------------------------------------------------------------
# Parsing


@dataclass
class ParsedStream:
    """Fully materialized stream: header, root views, and the SRV tree."""

    header: RlfcHeader
    root_planes: np.ndarray   # (rsx, rsy, 3, Hp, Wp) int32, bias removed
    srv: SrvTree


def parse_roots(data, header: RlfcHeader):
    """Decode all root views; returns (rsx, rsy, 3, Hp, Wp) int32, unbiased."""
    wp, hp = header.padded_dims
    rsx, rsy = level_dims(header.s_count, header.t_count, header.tree_height)
    secs, _ = section_offsets(header)
    out = np.zeros((rsx, rsy, 3, hp, wp), dtype=np.int32)
    for c in range(3):
        root_off = secs[c][0]
        root_end = root_off + header.section_lengths[c][0]
        pos = root_off
        for y in range(rsy):
            for x in range(rsx):
                if pos + 4 > root_end:
                    raise FormatError("root stream truncated")
                (blob_len,) = struct.unpack("<I", bytes(data[pos:pos + 4]))
                pos += 4
                if pos + blob_len > root_end:
                    raise FormatError("root stream truncated")
                plane = decode_root(bytes(data[pos:pos + blob_len]),
                                    header.root_codec_id, wp, hp)
                out[x, y, c] = plane - CHANNEL_BIAS[c]
                pos += blob_len
        if pos != root_end:
            raise FormatError("trailing bytes in root stream")
    return out


def parse_offsets(data, header: RlfcHeader, channel):
    """The channel's block offset array as a u64 numpy view."""
    wb, hb = header.block_grid
    secs, _ = section_offsets(header)
    off_start = secs[channel][1]
    off_len = header.section_lengths[channel][1]
    expect = wb * hb * 8
    if off_len != expect:
        raise FormatError(f"offset array length {off_len} != {expect}")
    return np.frombuffer(data, dtype="<u8", count=wb * hb, offset=off_start)


def srv_section(data, header: RlfcHeader, channel):
    """The channel's SRV stream as a uint8 numpy view."""
    secs, _ = section_offsets(header)
    start = secs[channel][2]
    length = header.section_lengths[channel][2]
    return np.frombuffer(data, dtype=np.uint8, count=length, offset=start)


def locate_block(data, header: RlfcHeader, channel, blk_index, node_index):
    """Find one node's payload inside a record without decoding it.

    Returns None when the node is absent, else (payload_start, payload_end,
    descriptor) with offsets absolute in the stream. Only the record's bitmap
    and the descriptors of preceding present nodes are touched.
    """
    wb, hb = header.block_grid
    if not 0 <= blk_index < wb * hb:
        raise ValueError(f"block index {blk_index} outside grid")
    m_nodes = total_srv_nodes(header.s_count, header.t_count,
                              header.tree_height)
    if not 0 <= node_index < m_nodes:
        raise ValueError(f"node index {node_index} outside tree")
    secs, _ = section_offsets(header)
    srv_start = secs[channel][2]
    srv_end = srv_start + header.section_lengths[channel][2]
    offsets = parse_offsets(data, header, channel)
    rec = srv_start + int(offsets[blk_index])
    bitmap_len = (m_nodes + 7) >> 3
    if rec + bitmap_len > srv_end:
        raise FormatError("record offset past section end")
    bitmap = bytes(data[rec:rec + bitmap_len])
    if not (bitmap[node_index >> 3] >> (node_index & 7)) & 1:
        return None
    bsq = header.block_size * header.block_size
    cursor = rec + bitmap_len
    for node in range(node_index + 1):
        if not (bitmap[node >> 3] >> (node & 7)) & 1:
            continue
        if cursor >= srv_end:
            raise FormatError("record truncated mid-scan")
        desc = data[cursor]
        if desc >= len(RANGE_TABLE):
            raise FormatError(f"descriptor {desc} outside range table")
        rng = RANGE_TABLE[desc]
        pbytes = (kernels.payload_bits(rng.mode, rng.low_bits, bsq) + 7) >> 3
        if node == node_index:
            end = cursor + 1 + pbytes
            if end > srv_end:
                raise FormatError("payload past section end")
            return cursor + 1, end, desc
        cursor += 1 + pbytes
    raise AssertionError("unreachable")


def parse_stream(data) -> ParsedStream:
    """Sequentially parse a whole stream back into trees.

    This is the reference (non-random-access) reader: serialize(parse(x))
    reproduces x byte for byte.
    """
    header = parse_header(data)
    check_stream_length(header, data)
    h = header.tree_height
    s_count, t_count = header.s_count, header.t_count
    wb, hb = header.block_grid
    bsq = header.block_size * header.block_size
    m_nodes = total_srv_nodes(s_count, t_count, h)
    bitmap_len = (m_nodes + 7) >> 3
    root_planes = parse_roots(data, header)

    # node_maps[channel][bfs index] -> SrvChannelNode
    levels = []
    node_maps = [[], [], []]
    for l in range(h):
        sx, sy = level_dims(s_count, t_count, l)
        nodes = [[[SrvChannelNode(
            present=np.zeros((hb, wb), dtype=bool),
            range_idx=np.zeros((hb, wb), dtype=np.uint8),
            zvals=np.zeros((hb, wb, bsq), dtype=np.uint16))
            for _ in range(3)] for _ in range(sy)] for _ in range(sx)]
        levels.append(SrvLevel(nodes))
    for c in range(3):
        for l in range(h - 1, -1, -1):
            sx, sy = level_dims(s_count, t_count, l)
            for y in range(sy):
                for x in range(sx):
                    node_maps[c].append(levels[l].nodes[x][y][c])

    for c in range(3):
        offsets = parse_offsets(data, header, c)
        sec = srv_section(data, header, c)
        srv_len = header.section_lengths[c][2]
        pos = 0
        for by in range(hb):
            for bx in range(wb):
                if int(offsets[by * wb + bx]) != pos:
                    raise FormatError(
                        f"offset table mismatch at block ({bx}, {by})")
                if pos + bitmap_len > srv_len:
                    raise FormatError("record truncated")
                bitmap = sec[pos:pos + bitmap_len]
                pos += bitmap_len
                for i in range(m_nodes):
                    if not (int(bitmap[i >> 3]) >> (i & 7)) & 1:
                        continue
                    if pos >= srv_len:
                        raise FormatError("record truncated")
                    desc = int(sec[pos])
                    if desc >= len(RANGE_TABLE):
                        raise FormatError(
                            f"descriptor {desc} outside range table")
                    rng = RANGE_TABLE[desc]
                    pbytes = (kernels.payload_bits(
                        rng.mode, rng.low_bits, bsq) + 7) >> 3
                    pos += 1
                    if pos + pbytes > srv_len:
                        raise FormatError("payload truncated")
                    vals = bise_decode(sec[pos:pos + pbytes], bsq, rng)
                    pos += pbytes
                    node = node_maps[c][i]
                    node.present[by, bx] = True
                    node.range_idx[by, bx] = desc
                    node.zvals[by, bx] = vals.astype(np.uint16)
        if pos != srv_len:
            raise FormatError("trailing bytes in SRV stream")

    return ParsedStream(header=header, root_planes=root_planes,
                        srv=SrvTree(levels))
