"""Two-plane light fields: in-memory grid, manifest ingest/export, synthesis.

A light field is an s_count x t_count camera grid of width x height RGB
images plus the light-slab geometry that maps rays to (s, t, u, v). Datasets
load from a JSON manifest listing one image file per grid cell; small test
fields are generated procedurally (textured background plane plus a floating
occluder, both sampled with integer-hash value noise so every platform
produces identical pixels).
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ManifestError

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class PlaneGeometry:
    """Light-slab geometry: parallel camera and image planes."""

    camera_plane_z: float
    image_plane_z: float
    # World rectangle (x0, y0, x1, y1) mapped onto the pixel grid.
    image_plane_extent: tuple

    def __post_init__(self):
        if self.camera_plane_z == self.image_plane_z:
            raise ValueError("camera plane and image plane must be distinct")


def default_geometry(s_count, t_count):
    """Geometry used when a manifest or stream does not carry one."""
    return PlaneGeometry(
        camera_plane_z=0.0,
        image_plane_z=1.0,
        image_plane_extent=(-1.5, -1.5, s_count - 1 + 1.5, t_count - 1 + 1.5),
    )


@dataclass
class LightFieldGrid:
    """Indexed light field: rgb[s, t, y, x, channel], 8-bit samples."""

    s_count: int
    t_count: int
    width: int
    height: int
    rgb: np.ndarray
    camera_positions: np.ndarray
    geometry: PlaneGeometry

    def __post_init__(self):
        expect = (self.s_count, self.t_count, self.height, self.width, 3)
        if self.rgb.shape != expect:
            raise ValueError(f"plane array shape {self.rgb.shape} != {expect}")
        if self.camera_positions.shape != (self.s_count, self.t_count, 2):
            raise ValueError("camera_positions must be one 2D point per cell")
        xs = self.camera_positions[:, :, 0]
        ys = self.camera_positions[:, :, 1]
        if self.s_count > 1 and not (np.diff(xs, axis=0) > 0).all():
            raise ValueError("camera x positions must increase along the s axis")
        if self.t_count > 1 and not (np.diff(ys, axis=1) > 0).all():
            raise ValueError("camera y positions must increase along the t axis")

    def image(self, s, t):
        self._check_index(s, t)
        return self.rgb[s, t]

    def camera_position(self, s, t):
        self._check_index(s, t)
        return (float(self.camera_positions[s, t, 0]),
                float(self.camera_positions[s, t, 1]))

    def _check_index(self, s, t):
        if not (0 <= s < self.s_count and 0 <= t < self.t_count):
            raise IndexError(f"camera index ({s}, {t}) outside "
                             f"{self.s_count}x{self.t_count} grid")


# ---------------------------------------------------------------------------
# Manifest ingest / export


def load_manifest(path) -> LightFieldGrid:
    """Load a light field from a JSON manifest. See save_grid for the layout."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc

    try:
        s_count = int(doc["s_count"])
        t_count = int(doc["t_count"])
        width = int(doc["width"])
        height = int(doc["height"])
        entries = doc["images"]
    except KeyError as exc:
        raise ManifestError(f"manifest missing required key {exc}") from exc
    bit_depth = int(doc.get("bit_depth", 8))
    if bit_depth != 8:
        raise ManifestError(f"only 8-bit inputs supported, got {bit_depth}")
    if s_count < 1 or t_count < 1:
        raise ManifestError("grid dimensions must be at least 1x1")

    geo = doc.get("geometry")
    if geo is None:
        geometry = default_geometry(s_count, t_count)
    else:
        geometry = PlaneGeometry(
            camera_plane_z=float(geo["camera_plane_z"]),
            image_plane_z=float(geo["image_plane_z"]),
            image_plane_extent=tuple(float(v) for v in geo["image_plane_extent"]),
        )

    rgb = np.zeros((s_count, t_count, height, width, 3), dtype=np.uint8)
    positions = np.full((s_count, t_count, 2), np.nan)
    seen = np.zeros((s_count, t_count), dtype=bool)
    for entry in entries:
        s, t = int(entry["s"]), int(entry["t"])
        if not (0 <= s < s_count and 0 <= t < t_count):
            raise ManifestError(f"image entry ({s}, {t}) outside grid")
        if seen[s, t]:
            raise ManifestError(f"duplicate image entry for cell ({s}, {t})")
        img_path = path.parent / entry["path"]
        try:
            with Image.open(img_path) as im:
                if im.mode != "RGB":
                    raise ManifestError(
                        f"image for cell ({s}, {t}) is {im.mode}, expected "
                        f"8-bit RGB: {img_path}")
                arr = np.asarray(im)
        except FileNotFoundError as exc:
            raise ManifestError(
                f"image for cell ({s}, {t}) missing: {img_path}") from exc
        if arr.shape != (height, width, 3):
            raise ManifestError(
                f"resolution mismatch at cell ({s}, {t}): "
                f"{arr.shape[1]}x{arr.shape[0]} != {width}x{height}")
        rgb[s, t] = arr
        pos = entry.get("position", (float(s), float(t)))
        positions[s, t] = (float(pos[0]), float(pos[1]))
        seen[s, t] = True

    if not seen.all():
        s, t = np.argwhere(~seen)[0]
        raise ManifestError(f"grid cell ({s}, {t}) has no image entry")

    return LightFieldGrid(s_count, t_count, width, height, rgb, positions,
                          geometry)


def save_grid(grid: LightFieldGrid, out_dir) -> Path:
    """Export a grid as PNGs plus manifest.json; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for s in range(grid.s_count):
        for t in range(grid.t_count):
            name = f"img_s{s:03d}_t{t:03d}.png"
            Image.fromarray(grid.rgb[s, t]).save(out_dir / name)
            entries.append({
                "s": s, "t": t, "path": name,
                "position": [float(grid.camera_positions[s, t, 0]),
                             float(grid.camera_positions[s, t, 1])],
            })
    doc = {
        "s_count": grid.s_count,
        "t_count": grid.t_count,
        "width": grid.width,
        "height": grid.height,
        "bit_depth": 8,
        "geometry": {
            "camera_plane_z": grid.geometry.camera_plane_z,
            "image_plane_z": grid.geometry.image_plane_z,
            "image_plane_extent": list(grid.geometry.image_plane_extent),
        },
        "images": entries,
    }
    manifest = out_dir / MANIFEST_NAME
    manifest.write_text(json.dumps(doc, indent=2) + "\n", "utf-8")
    return manifest


# ---------------------------------------------------------------------------
# Procedural synthesis


@dataclass(frozen=True)
class SyntheticSpec:
    s_count: int = 8
    t_count: int = 8
    width: int = 64
    height: int = 64
    seed: int = 7


_M1 = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xC2B2AE3D27D4EB4F)


def _hash64(x):
    x = np.asarray(x, dtype=np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _lattice(ix, iy, salt):
    key = ix.astype(np.uint64) * _M1 ^ iy.astype(np.uint64) * _M2 ^ salt
    return ((_hash64(key) >> np.uint64(24)) & np.uint64(0xFF)).astype(np.int64)


def _value_noise(wx, wy, freq, salt):
    """Bilinear value noise over an integer hash lattice; exact fixed point."""
    fx = wx * freq
    fy = wy * freq
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    tx = np.floor((fx - x0) * 65536.0).astype(np.int64)
    ty = np.floor((fy - y0) * 65536.0).astype(np.int64)
    v00 = _lattice(x0, y0, salt)
    v10 = _lattice(x0 + 1, y0, salt)
    v01 = _lattice(x0, y0 + 1, salt)
    v11 = _lattice(x0 + 1, y0 + 1, salt)
    top = v00 * (65536 - tx) + v10 * tx
    bot = v01 * (65536 - tx) + v11 * tx
    return (top * (65536 - ty) + bot * ty) >> 32


def _texture(wx, wy, base_freq, salts):
    coarse = _value_noise(wx, wy, base_freq, salts[0])
    fine = _value_noise(wx, wy, base_freq * 3.0, salts[1])
    return ((coarse * 3 + fine) // 4).astype(np.uint8)


def synthesize_lightfield(spec: SyntheticSpec) -> LightFieldGrid:
    """Render a deterministic two-plane light field from spec alone.

    Scene: a noise-textured background plane behind the image plane and a
    rectangular occluder floating in front of it. Both shift with camera
    position, giving small inter-view parallax that grows with camera
    distance.
    """
    if spec.s_count < 1 or spec.t_count < 1:
        raise ValueError("grid dimensions must be at least 1x1")
    if spec.width < 2 or spec.height < 2:
        raise ValueError("image resolution too small")

    geometry = default_geometry(spec.s_count, spec.t_count)
    x0, y0, x1, y1 = geometry.image_plane_extent
    zi = geometry.image_plane_z - geometry.camera_plane_z
    # Keep scene depth shallow: sub-pixel parallax between adjacent views,
    # clearly visible parallax across the whole grid.
    z_bg = zi * 1.12
    z_oc = zi * 1.05

    # One salt per (layer, octave, channel).
    base = np.uint64(spec.seed)
    salts = _hash64(base * np.uint64(0x10001) + np.arange(16, dtype=np.uint64))

    ux = x0 + (np.arange(spec.width) + 0.5) * (x1 - x0) / spec.width
    uy = y0 + (np.arange(spec.height) + 0.5) * (y1 - y0) / spec.height
    ext = max(x1 - x0, y1 - y0)
    bg_freq = spec.width / (12.0 * ext)
    oc_freq = spec.width / (7.0 * ext)

    oc_cx, oc_cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    oc_hw, oc_hh = 0.17 * (x1 - x0), 0.17 * (y1 - y0)

    rgb = np.zeros((spec.s_count, spec.t_count, spec.height, spec.width, 3),
                   dtype=np.uint8)
    positions = np.zeros((spec.s_count, spec.t_count, 2))
    bg_scale = z_bg / zi
    oc_scale = z_oc / zi
    for s in range(spec.s_count):
        for t in range(spec.t_count):
            cam_x, cam_y = float(s), float(t)
            positions[s, t] = (cam_x, cam_y)
            wxb = (bg_scale * ux + (1.0 - bg_scale) * cam_x)[None, :]
            wyb = (bg_scale * uy + (1.0 - bg_scale) * cam_y)[:, None]
            wxo = (oc_scale * ux + (1.0 - oc_scale) * cam_x)[None, :]
            wyo = (oc_scale * uy + (1.0 - oc_scale) * cam_y)[:, None]
            mask = ((np.abs(wxo - oc_cx) < oc_hw)
                    & (np.abs(wyo - oc_cy) < oc_hh))
            for c in range(3):
                bg = _texture(wxb, wyb, bg_freq, salts[2 * c:2 * c + 2])
                oc = _texture(wxo, wyo, oc_freq, salts[6 + 2 * c:8 + 2 * c])
                # Push the occluder palette away from the background's.
                oc = (oc // 2 + (40 + 60 * c)).astype(np.uint8)
                rgb[s, t, :, :, c] = np.where(mask, oc, bg)

    return LightFieldGrid(spec.s_count, spec.t_count, spec.width, spec.height,
                          rgb, positions, geometry)
