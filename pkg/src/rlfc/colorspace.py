"""Reversible integer RGB <-> YCoCg-R transform.

Integer lifting with floor-toward-minus-infinity half shifts, so the inverse
recovers 8-bit RGB exactly. Y stays in [0, 255]; Co and Cg land in
[-255, 255] and are carried as signed 16-bit planes. When a chroma plane is
handed to a root image codec it is biased by +256 into unsigned range; see
CHROMA_BIAS.
"""

import numpy as np

CHROMA_BIAS = 256


def rgb_to_ycocgr(r, g, b):
    """Forward lift. Scalars or arrays; returns (y, co, cg) as int32."""
    r = np.asarray(r, dtype=np.int32)
    g = np.asarray(g, dtype=np.int32)
    b = np.asarray(b, dtype=np.int32)
    co = r - b
    t = b + (co >> 1)
    cg = g - t
    y = t + (cg >> 1)
    return y, co, cg


def ycocgr_to_rgb(y, co, cg):
    """Exact inverse of rgb_to_ycocgr."""
    y = np.asarray(y, dtype=np.int32)
    co = np.asarray(co, dtype=np.int32)
    cg = np.asarray(cg, dtype=np.int32)
    t = y - (cg >> 1)
    g = cg + t
    b = t - (co >> 1)
    r = b + co
    return r, g, b


def grid_to_planes(rgb):
    """Split (..., 3) uint8 RGB into three int32 YCoCg-R planes."""
    rgb = np.asarray(rgb)
    y, co, cg = rgb_to_ycocgr(rgb[..., 0], rgb[..., 1], rgb[..., 2])
    return [y, co, cg]


def planes_to_grid(planes, clamp=True):
    """Merge three YCoCg-R planes back into (..., 3) uint8 RGB.

    Lossy decodes can push reconstructed planes slightly out of gamut, so the
    inverse is clamped to [0, 255] by default.
    """
    r, g, b = ycocgr_to_rgb(planes[0], planes[1], planes[2])
    rgb = np.stack([r, g, b], axis=-1)
    if clamp:
        rgb = np.clip(rgb, 0, 255)
    return rgb.astype(np.uint8)
