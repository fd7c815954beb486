"""Compression pipeline: light field grid in, serialized stream out."""

import time
from dataclasses import dataclass

import numpy as np

from .container import serialize
from .hierarchy import EncodingParams, build_rkv_tree, build_srv_tree
from .lightfield import LightFieldGrid


@dataclass(frozen=True)
class EncodeReport:
    stream_bytes: int
    bpp_total: float
    bpp_channels: tuple          # (Y, Co, Cg), header excluded
    root_bytes: tuple            # per channel
    present_blocks: tuple        # per tree level 0..h-1, all channels summed
    encode_seconds: float


def compress(lf: LightFieldGrid, params: EncodingParams = None):
    """Encode a light field; returns (stream bytes, EncodeReport).

    Deterministic: identical grids and parameters give identical bytes.
    """
    if params is None:
        params = EncodingParams()
    t0 = time.perf_counter()
    tree = build_rkv_tree(lf, params)
    srv, _ = build_srv_tree(tree, params)
    stream = serialize(tree.levels[params.tree_height].planes, srv, params,
                       lf.s_count, lf.t_count, lf.width, lf.height)
    elapsed = time.perf_counter() - t0

    pixels = lf.s_count * lf.t_count * lf.width * lf.height
    from .container import parse_header
    header = parse_header(stream)
    bpp_channels = tuple(8.0 * sum(sec) / pixels
                         for sec in header.section_lengths)
    present = []
    for level in srv.levels:
        count = 0
        for col in level.nodes:
            for cell in col:
                for node in cell:
                    count += int(np.count_nonzero(node.present))
        present.append(count)
    report = EncodeReport(
        stream_bytes=len(stream),
        bpp_total=8.0 * len(stream) / pixels,
        bpp_channels=bpp_channels,
        root_bytes=tuple(sec[0] for sec in header.section_lengths),
        present_blocks=tuple(present),
        encode_seconds=elapsed)
    return stream, report
