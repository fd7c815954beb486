"""Hierarchical key-view / residual-view trees.

The encoder builds two trees over the camera grid:

* RKV tree, bottom-up: level 0 is the input grid; each higher level merges
  2x2 neighborhoods into one representative view via integer weighted
  filtering. The top level (index ``tree_height``) holds the root views.
* SRV tree, top-down: each node stores the residual between a view and its
  (reconstructed) parent, pixel- and block-thresholded, then quantized.
  After quantizing, the working view is recomputed as reconstructed parent
  plus dequantized residual, so quantization error never propagates to the
  levels below.

All arithmetic is integer (weights are /256 fixed point) which keeps the
encoder and decoder in exact agreement.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import colorspace
from .bise import RANGE_CARDINALITIES, zigzag

VALID_BLOCK_SIZES = (2, 4, 8, 16)
ROOT_CODECS = ("raw", "png", "jpeg2000")
WEIGHT_DENOM = 256


@dataclass(frozen=True)
class FilterSpec:
    """Cluster filter: uniform or Gaussian falloff around the centroid.

    sigma is in camera-grid units, quantized to 1/256 steps so the value is
    exactly representable in the stream header.
    """

    kind: str = "gaussian"
    sigma: float = 0.7

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian"):
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def sigma_fp(self) -> int:
        return int(round(self.sigma * 256.0))

    def quantized_sigma(self) -> float:
        return self.sigma_fp / 256.0


@dataclass(frozen=True)
class EncodingParams:
    tree_height: int = 3
    cluster_factor: int = 2
    block_size: int = 4
    pixel_threshold: int = 4
    block_threshold: int = 80
    quant_shift: int = 2
    filter: FilterSpec = field(default_factory=FilterSpec)
    root_codec: str = "png"

    def __post_init__(self):
        if self.tree_height < 1:
            raise ValueError("tree_height must be >= 1")
        if self.cluster_factor != 2:
            raise ValueError("only 2x2 clustering is supported")
        if self.block_size not in VALID_BLOCK_SIZES:
            raise ValueError(f"block_size must be one of {VALID_BLOCK_SIZES}")
        if not 0 <= self.quant_shift <= 8:
            raise ValueError("quant_shift must be in [0, 8]")
        if self.pixel_threshold < 0 or self.block_threshold < 0:
            raise ValueError("thresholds must be >= 0")
        if self.root_codec not in ROOT_CODECS:
            raise ValueError(f"root_codec must be one of {ROOT_CODECS}")


@dataclass
class RkvLevel:
    """One tree level: planes[x, y, channel] is a padded H x W int plane."""

    planes: np.ndarray      # (Sl, Tl, C, Hp, Wp) int32
    positions: np.ndarray   # (Sl, Tl, 2) float64

    @property
    def grid_dims(self):
        return self.planes.shape[0], self.planes.shape[1]


@dataclass
class RkvTree:
    levels: list            # levels[0] = input, levels[h] = roots
    width: int              # true (unpadded) image dims
    height: int

    @property
    def tree_height(self):
        return len(self.levels) - 1


@dataclass
class SrvChannelNode:
    """Thresholded+quantized residual blocks of one view channel.

    present[by, bx] marks stored blocks; absent blocks decode to zero.
    zvals holds zigzag-mapped quantized values, row-major within the block;
    range_idx is the range-table entry covering the block's max value.
    """

    present: np.ndarray     # (Hb, Wb) bool
    range_idx: np.ndarray   # (Hb, Wb) uint8
    zvals: np.ndarray       # (Hb, Wb, B*B) uint16


@dataclass
class SrvLevel:
    nodes: list             # nodes[x][y][channel] -> SrvChannelNode


@dataclass
class SrvTree:
    levels: list            # index l = tree level, 0 .. h-1


# ---------------------------------------------------------------------------
# Clustering and filtering


def cluster_level(level_dims):
    """Map each child (x, y) to its parent cell under regular 2x2 merging."""
    sx, sy = level_dims
    if sx < 1 or sy < 1:
        raise ValueError("grid dims must be >= 1x1")
    return {(x, y): (x // 2, y // 2) for x in range(sx) for y in range(sy)}


def filter_weights(positions, spec: FilterSpec):
    """Integer cluster weights summing to exactly 256 (largest remainder)."""
    n = len(positions)
    if n == 1:
        return np.array([WEIGHT_DENOM], dtype=np.int64)
    if spec.kind == "uniform":
        raw = np.ones(n)
    else:
        pos = np.asarray(positions, dtype=np.float64)
        centroid = pos.mean(axis=0)
        d2 = ((pos - centroid) ** 2).sum(axis=1)
        sigma = spec.quantized_sigma()
        raw = np.exp(-d2 / (2.0 * sigma * sigma))
    scaled = raw * (WEIGHT_DENOM / raw.sum())
    base = np.floor(scaled).astype(np.int64)
    rem = int(WEIGHT_DENOM - base.sum())
    # Distribute leftover units by descending fractional part, index as tie-break.
    order = sorted(range(n), key=lambda i: (-(scaled[i] - base[i]), i))
    for i in order[:rem]:
        base[i] += 1
    assert base.sum() == WEIGHT_DENOM
    return base


def filter_cluster(children, positions, spec: FilterSpec):
    """Blend child planes: floor((sum w_i * plane_i + 128) / 256)."""
    if len(children) == 0:
        raise ValueError("cluster must have at least one child")
    w = filter_weights(positions, spec)
    acc = np.zeros(children[0].shape, dtype=np.int64)
    for wi, plane in zip(w, children):
        acc += int(wi) * plane.astype(np.int64)
    return ((acc + WEIGHT_DENOM // 2) >> 8).astype(np.int32)


def _padded_dims(width, height, block_size):
    wp = -(-width // block_size) * block_size
    hp = -(-height // block_size) * block_size
    return wp, hp


def build_rkv_tree(lf, params: EncodingParams) -> RkvTree:
    """Bottom-up tree of representative views over the camera grid."""
    wp, hp = _padded_dims(lf.width, lf.height, params.block_size)
    planes = np.zeros((lf.s_count, lf.t_count, 3, hp, wp), dtype=np.int32)
    for s in range(lf.s_count):
        for t in range(lf.t_count):
            y, co, cg = colorspace.grid_to_planes(lf.rgb[s, t])
            planes[s, t, 0, :lf.height, :lf.width] = y
            planes[s, t, 1, :lf.height, :lf.width] = co
            planes[s, t, 2, :lf.height, :lf.width] = cg

    levels = [RkvLevel(planes, lf.camera_positions.astype(np.float64))]
    for _ in range(params.tree_height):
        child = levels[-1]
        sx, sy = child.grid_dims
        px, py = -(-sx // 2), -(-sy // 2)
        planes_up = np.zeros((px, py, 3, hp, wp), dtype=np.int32)
        pos_up = np.zeros((px, py, 2))
        for cx in range(px):
            for cy in range(py):
                xs = [x for x in (2 * cx, 2 * cx + 1) if x < sx]
                ys = [y for y in (2 * cy, 2 * cy + 1) if y < sy]
                members = [(x, y) for x in xs for y in ys]
                cpos = [child.positions[x, y] for x, y in members]
                w = filter_weights(cpos, params.filter)
                acc = np.zeros((3, hp, wp), dtype=np.int64)
                for wi, (x, y) in zip(w, members):
                    acc += int(wi) * child.planes[x, y].astype(np.int64)
                planes_up[cx, cy] = (acc + WEIGHT_DENOM // 2) >> 8
                pos_up[cx, cy] = (w[:, None] * np.asarray(cpos)).sum(0) / 256.0
        levels.append(RkvLevel(planes_up, pos_up))
    return RkvTree(levels, lf.width, lf.height)


# ---------------------------------------------------------------------------
# Residuals


def compute_srv(child, parent):
    """Raw residual view: child minus parent, elementwise."""
    if child.shape != parent.shape:
        raise ValueError(f"plane shape mismatch: {child.shape} vs {parent.shape}")
    return child.astype(np.int32) - parent.astype(np.int32)


def quantize(residual, shift):
    r = np.asarray(residual)
    return np.sign(r) * (np.abs(r) >> shift)


def dequantize(q, shift):
    q = np.asarray(q)
    mag = np.abs(q).astype(np.int64) << shift
    if shift > 0:
        mag = np.where(q != 0, mag + (1 << (shift - 1)), 0)
    return (np.sign(q) * mag).astype(np.int32)


def threshold_and_quantize(residual, params: EncodingParams):
    """Sparsify and quantize one residual plane.

    Pixels below pixel_threshold drop to zero; blocks whose absolute-value
    sum is below block_threshold (or exactly zero) are dropped whole. The
    survivors are quantized by arithmetic shift. Returns the stored blocks
    and the plane a decoder will reconstruct from them.
    """
    b = params.block_size
    hp, wp = residual.shape
    if hp % b or wp % b:
        raise ValueError("residual plane dims must be multiples of block_size")
    hb, wb = hp // b, wp // b

    r = np.where(np.abs(residual) < params.pixel_threshold, 0, residual)
    blocks = r.reshape(hb, b, wb, b).transpose(0, 2, 1, 3).reshape(hb, wb, b * b)
    energy = np.abs(blocks).sum(axis=2, dtype=np.int64)
    present = (energy >= params.block_threshold) & (energy > 0)

    q = quantize(blocks, params.quant_shift)
    z = zigzag(q).astype(np.uint16)
    z[~present] = 0
    zmax = z.max(axis=2)
    range_idx = np.searchsorted(
        np.asarray(RANGE_CARDINALITIES), zmax, side="right").astype(np.uint8)
    range_idx[~present] = 0

    rhat = dequantize(q, params.quant_shift)
    rhat[~present] = 0
    recon = rhat.reshape(hb, wb, b, b).transpose(0, 2, 1, 3).reshape(hp, wp)
    node = SrvChannelNode(present=present, range_idx=range_idx, zvals=z)
    return node, recon.astype(np.int32)


def build_srv_tree(tree: RkvTree, params: EncodingParams):
    """Top-down residual pass with closed-loop view recomputation.

    Returns the SRV tree and the reconstructed level-0 planes, which match
    what any decoder produces from the serialized stream.
    """
    h = tree.tree_height
    recon_above = tree.levels[h].planes.astype(np.int32)
    srv_levels = [None] * h
    for l in range(h - 1, -1, -1):
        level = tree.levels[l]
        sx, sy = level.grid_dims
        recon = np.zeros_like(level.planes)
        nodes = [[[None] * 3 for _ in range(sy)] for _ in range(sx)]
        for x in range(sx):
            for y in range(sy):
                parent = recon_above[x // 2, y // 2]
                for c in range(3):
                    residual = compute_srv(level.planes[x, y, c], parent[c])
                    node, rhat = threshold_and_quantize(residual, params)
                    nodes[x][y][c] = node
                    recon[x, y, c] = parent[c] + rhat
        srv_levels[l] = SrvLevel(nodes)
        recon_above = recon
    return SrvTree(srv_levels), recon_above
