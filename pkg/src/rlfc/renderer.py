"""Novel-view synthesis over a decoder state.

Views are generated by two-plane ray parameterization: each output pixel's
ray is intersected with the camera plane (giving a fractional grid position)
and the image plane (giving fractional pixel coordinates), then the 16
surrounding stored samples -- 4 cameras x 4 pixels -- are blended
quadrilinearly. Samples come from random-access block decodes with a
per-frame memo, so a frame touches each needed block once.

Fractional coordinates within 1e-9 of an integer snap to it, which makes a
pose aimed exactly at a stored camera collapse to single-tap sampling and
reproduce decode_image bit-exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import colorspace, decoder
from .lightfield import PlaneGeometry, default_geometry

SNAP_EPS = 1e-9


@dataclass(frozen=True)
class LfCoord:
    """Fractional light-field coordinates: camera (s, t), pixel (u, v)."""
    s: float
    t: float
    u: float
    v: float


@dataclass(frozen=True)
class SlabPose:
    """Eye on the camera plane at fractional grid position (s, t).

    Rays fan out through the image-plane window at focal_z (default: the
    image plane itself, which reproduces stored views at integer (s, t)).
    Changing focal_z refocuses the slab.
    """
    s: float
    t: float
    width: int
    height: int
    focal_z: float = None


@dataclass(frozen=True)
class CameraPose:
    """Free pinhole camera: eye point, look direction, vertical fov."""
    eye: tuple
    look: tuple
    fov_deg: float
    width: int
    height: int

    def __post_init__(self):
        if self.fov_deg <= 0 or self.fov_deg >= 180:
            raise ValueError("fov must be in (0, 180)")
        if all(abs(v) < 1e-12 for v in self.look):
            raise ValueError("look direction is zero")


@dataclass(frozen=True)
class GridInfo:
    """Camera-position mapping used to invert plane hits to grid coords."""
    xs: np.ndarray   # world x of camera column s
    ys: np.ndarray   # world y of camera row t
    width: int
    height: int


def grid_info_for(state: decoder.DecoderState) -> GridInfo:
    hdr = state.header
    return GridInfo(xs=np.arange(hdr.s_count, dtype=np.float64),
                    ys=np.arange(hdr.t_count, dtype=np.float64),
                    width=hdr.width, height=hdr.height)


def _snap(f):
    r = round(f)
    return float(r) if abs(f - r) < SNAP_EPS else float(f)


def ray_to_lf_coords(ray, geometry: PlaneGeometry, grid):
    """Map one ray to fractional (s, t, u, v); None when outside the slab.

    grid supplies the camera-position mapping: a GridInfo, or any object
    with camera_positions/s_count/t_count/width/height (a LightFieldGrid).
    """
    origin, direction = (np.asarray(v, dtype=np.float64) for v in ray)
    if abs(direction[2]) < 1e-15:
        raise ValueError("ray parallel to the light-slab planes")
    if not isinstance(grid, GridInfo):
        grid = GridInfo(xs=grid.camera_positions[:, 0, 0].astype(np.float64),
                        ys=grid.camera_positions[0, :, 1].astype(np.float64),
                        width=grid.width, height=grid.height)

    tc = (geometry.camera_plane_z - origin[2]) / direction[2]
    cx, cy = origin[0] + tc * direction[0], origin[1] + tc * direction[1]
    if not (grid.xs[0] <= cx <= grid.xs[-1]
            and grid.ys[0] <= cy <= grid.ys[-1]):
        return None
    s = float(np.interp(cx, grid.xs, np.arange(len(grid.xs))))
    t = float(np.interp(cy, grid.ys, np.arange(len(grid.ys))))

    ti = (geometry.image_plane_z - origin[2]) / direction[2]
    ix, iy = origin[0] + ti * direction[0], origin[1] + ti * direction[1]
    x0, y0, x1, y1 = geometry.image_plane_extent
    if not (x0 <= ix <= x1 and y0 <= iy <= y1):
        return None
    u = (ix - x0) / (x1 - x0) * grid.width - 0.5
    v = (iy - y0) / (y1 - y0) * grid.height - 0.5
    return LfCoord(s=_snap(s), t=_snap(t), u=_snap(u), v=_snap(v))


def _axis_taps(coord, count):
    """Clamp a fractional coord; return [(index, weight), ...] with w > 0."""
    c = min(max(coord, 0.0), float(count - 1))
    if count == 1:
        return [(0, 1.0)]
    i0 = min(int(math.floor(c)), count - 2)
    f = _snap(c - i0)
    taps = []
    if f < 1.0:
        taps.append((i0, 1.0 - f))
    if f > 0.0:
        taps.append((i0 + 1, f))
    return taps


def _block_rgb(state, s, t, bx, by, stop_level, memo):
    key = (s, t, bx, by, stop_level)
    if memo is not None and key in memo:
        return memo[key]
    planes = [decoder.decode_block_progressive(state, (s, t), (bx, by), c,
                                               stop_level) for c in range(3)]
    r, g, b = colorspace.ycocgr_to_rgb(*planes)
    rgb = np.stack([r, g, b]).clip(0, 255).astype(np.float64)
    if memo is not None:
        memo[key] = rgb
    return rgb


def sample_quadrilinear(state: decoder.DecoderState, coord: LfCoord,
                        stop_level=0, memo=None):
    """Blend the 16 stored samples around coord into one RGB color.

    Coordinates outside the aperture are clamped to its edge. Zero-weight
    taps are skipped, so integer coordinates read exactly one stored sample.
    Returns a uint8[3] array (weights in float64, final rounding half-up).
    """
    hdr = state.header
    b = hdr.block_size
    cam_s = _axis_taps(coord.s, hdr.s_count)
    cam_t = _axis_taps(coord.t, hdr.t_count)
    pix_u = _axis_taps(coord.u, hdr.width)
    pix_v = _axis_taps(coord.v, hdr.height)
    acc = np.zeros(3)
    for s, ws in cam_s:
        for t, wt in cam_t:
            for u, wu in pix_u:
                for v, wv in pix_v:
                    rgb = _block_rgb(state, s, t, u // b, v // b,
                                     stop_level, memo)
                    acc += (ws * wt * wu * wv) * rgb[:, v % b, u % b]
    return np.floor(acc + 0.5).clip(0, 255).astype(np.uint8)


def _slab_rays(pose: SlabPose, geometry, grid: GridInfo):
    focal = pose.focal_z if pose.focal_z is not None else \
        geometry.image_plane_z
    if focal == geometry.camera_plane_z:
        raise ValueError("focal plane coincides with the camera plane")
    ex = float(np.interp(pose.s, np.arange(len(grid.xs)), grid.xs))
    ey = float(np.interp(pose.t, np.arange(len(grid.ys)), grid.ys))
    eye = np.array([ex, ey, geometry.camera_plane_z])
    x0, y0, x1, y1 = geometry.image_plane_extent
    tx = x0 + (np.arange(pose.width) + 0.5) * (x1 - x0) / pose.width
    ty = y0 + (np.arange(pose.height) + 0.5) * (y1 - y0) / pose.height
    targets = np.zeros((pose.height, pose.width, 3))
    targets[:, :, 0] = tx[None, :]
    targets[:, :, 1] = ty[:, None]
    targets[:, :, 2] = focal
    return eye, targets - eye


def _pinhole_rays(pose: CameraPose, geometry):
    eye = np.asarray(pose.eye, dtype=np.float64)
    if abs(eye[2] - geometry.image_plane_z) < 1e-12:
        raise ValueError("eye lies on the image plane")
    look = np.asarray(pose.look, dtype=np.float64)
    look = look / np.linalg.norm(look)
    up = np.array([0.0, 1.0, 0.0])
    if abs(np.dot(up, look)) > 1.0 - 1e-9:
        up = np.array([1.0, 0.0, 0.0])
    right = np.cross(look, up)
    right /= np.linalg.norm(right)
    down = np.cross(look, right)  # +v axis points down the image
    half = math.tan(math.radians(pose.fov_deg) / 2.0)
    aspect = pose.width / pose.height
    px = (np.arange(pose.width) + 0.5) / pose.width * 2.0 - 1.0
    py = (np.arange(pose.height) + 0.5) / pose.height * 2.0 - 1.0
    dirs = (look[None, None, :]
            + (px[None, :, None] * half * aspect) * right[None, None, :]
            + (py[:, None, None] * half) * down[None, None, :])
    return eye, dirs


def _camera_rgb(state, s, t, stop_level):
    """One camera image at level k as clamped float64 RGB, true dims."""
    hdr = state.header
    planes = [decoder.decode_plane(state, s, t, c, stop_level)
              [:hdr.height, :hdr.width] for c in range(3)]
    r, g, b = colorspace.ycocgr_to_rgb(*planes)
    return np.stack([r, g, b], axis=-1).clip(0, 255).astype(np.float64)


def _vec_taps(coord, count):
    """Vector form of _axis_taps: clamp, snap, split into index + fraction."""
    c = np.clip(coord, 0.0, float(count - 1))
    if count == 1:
        return np.zeros(c.shape, dtype=np.intp), np.zeros(c.shape)
    i0 = np.minimum(np.floor(c), count - 2).astype(np.intp)
    f = c - i0
    r = np.round(f)
    f = np.where(np.abs(f - r) < SNAP_EPS, r, f)
    return i0, f


def _render_slab(state, pose, stop_level, geometry, grid, background):
    """Whole-frame sampler for slab poses.

    All rays share one camera-plane hit, so camera taps are frame constants
    and per-pixel work vectorizes. Tap order, weight association and
    zero-weight handling mirror sample_quadrilinear exactly (a zero-weight
    tap adds exactly +0.0), so the output matches per-pixel sampling.
    """
    hdr = state.header
    eye, dirs = _slab_rays(pose, geometry, grid)
    s_val = float(np.interp(eye[0], grid.xs, np.arange(len(grid.xs))))
    t_val = float(np.interp(eye[1], grid.ys, np.arange(len(grid.ys))))
    out = np.zeros((pose.height, pose.width, 3), dtype=np.uint8)
    out[:, :] = background
    if not (grid.xs[0] <= eye[0] <= grid.xs[-1]
            and grid.ys[0] <= eye[1] <= grid.ys[-1]):
        return out

    ti = (geometry.image_plane_z - eye[2]) / dirs[:, :, 2]
    ix = eye[0] + ti * dirs[:, :, 0]
    iy = eye[1] + ti * dirs[:, :, 1]
    x0, y0, x1, y1 = geometry.image_plane_extent
    inside = (x0 <= ix) & (ix <= x1) & (y0 <= iy) & (iy <= y1)
    u = (ix - x0) / (x1 - x0) * grid.width - 0.5
    v = (iy - y0) / (y1 - y0) * grid.height - 0.5
    ru, rv = np.round(u), np.round(v)
    u = np.where(np.abs(u - ru) < SNAP_EPS, ru, u)
    v = np.where(np.abs(v - rv) < SNAP_EPS, rv, v)

    u0, fu = _vec_taps(u, grid.width)
    v0, fv = _vec_taps(v, grid.height)
    acc = np.zeros((pose.height, pose.width, 3))
    for s_i, ws in _axis_taps(_snap(s_val), hdr.s_count):
        for t_i, wt in _axis_taps(_snap(t_val), hdr.t_count):
            img = _camera_rgb(state, s_i, t_i, stop_level)
            for p, wu in ((0, 1.0 - fu), (1, fu)):
                gx = np.minimum(u0 + p, grid.width - 1)
                for q, wv in ((0, 1.0 - fv), (1, fv)):
                    gy = np.minimum(v0 + q, grid.height - 1)
                    w = ((ws * wt) * wu) * wv
                    acc += w[:, :, None] * img[gy, gx]
    frame = np.floor(acc + 0.5).clip(0, 255).astype(np.uint8)
    out[inside] = frame[inside]
    return out


def render_view(state: decoder.DecoderState, pose, stop_level=0,
                geometry: PlaneGeometry = None, background=(0, 0, 0)):
    """Render one view; returns uint8 RGB of the pose's resolution.

    pose is a SlabPose (camera-plane position + focal depth) or a free
    CameraPose. Rays that leave the sampled slab render as background.
    """
    hdr = state.header
    if geometry is None:
        geometry = default_geometry(hdr.s_count, hdr.t_count)
    grid = grid_info_for(state)
    if isinstance(pose, SlabPose):
        return _render_slab(state, pose, stop_level, geometry, grid,
                            background)
    if not isinstance(pose, CameraPose):
        raise TypeError(f"unknown pose type {type(pose).__name__}")
    eye, dirs = _pinhole_rays(pose, geometry)
    out = np.zeros((pose.height, pose.width, 3), dtype=np.uint8)
    out[:, :] = background
    memo = {}
    for j in range(pose.height):
        for i in range(pose.width):
            coord = ray_to_lf_coords((eye, dirs[j, i]), geometry, grid)
            if coord is None:
                continue
            out[j, i] = sample_quadrilinear(state, coord, stop_level, memo)
    return out
