import json

import numpy as np
import pytest
from PIL import Image

from rlfc import lightfield
from rlfc.errors import ManifestError
from rlfc.lightfield import (
    LightFieldGrid,
    PlaneGeometry,
    SyntheticSpec,
    default_geometry,
    load_manifest,
    save_grid,
    synthesize_lightfield,
)


def test_synthesis_shape_and_determinism(lf):
    assert lf.rgb.shape == (8, 8, 64, 64, 3)
    assert lf.rgb.dtype == np.uint8
    again = synthesize_lightfield(SyntheticSpec())
    assert np.array_equal(lf.rgb, again.rgb)
    other = synthesize_lightfield(SyntheticSpec(seed=8))
    assert not np.array_equal(lf.rgb, other.rgb)


def test_synthesis_has_parallax(lf):
    imgs = lf.rgb.astype(np.int32)
    adjacent = np.abs(imgs[1:] - imgs[:-1]).mean()
    far = np.abs(imgs[-1] - imgs[0]).mean()
    assert 0.5 < adjacent < 10.0
    assert far > 3 * adjacent


def test_synthesis_is_textured(lf):
    # every view should have real content, not flat fill
    for s in range(8):
        for t in range(8):
            assert lf.rgb[s, t].std() > 10


def test_camera_positions_are_grid_indices(lf):
    assert np.array_equal(lf.camera_positions[:, 0, 0], np.arange(8))
    assert np.array_equal(lf.camera_positions[0, :, 1], np.arange(8))
    assert lf.camera_position(3, 5) == (3.0, 5.0)
    with pytest.raises(IndexError):
        lf.image(8, 0)
    with pytest.raises(IndexError):
        lf.camera_position(0, -9)


def test_default_geometry():
    g = default_geometry(8, 8)
    assert g.camera_plane_z == 0.0
    assert g.image_plane_z == 1.0
    assert g.image_plane_extent == (-1.5, -1.5, 8.5, 8.5)
    with pytest.raises(ValueError):
        PlaneGeometry(1.0, 1.0, (0, 0, 1, 1))


def test_grid_validation():
    rgb = np.zeros((2, 2, 4, 4, 3), dtype=np.uint8)
    pos = np.stack(np.meshgrid(np.arange(2), np.arange(2), indexing="ij"),
                   axis=-1).astype(float)
    LightFieldGrid(2, 2, 4, 4, rgb, pos, default_geometry(2, 2))
    with pytest.raises(ValueError):
        LightFieldGrid(2, 2, 4, 5, rgb, pos, default_geometry(2, 2))
    bad = pos.copy()
    bad[1, :, 0] = -1.0  # not strictly increasing in s
    with pytest.raises(ValueError):
        LightFieldGrid(2, 2, 4, 4, rgb, bad, default_geometry(2, 2))


def test_save_load_roundtrip(tmp_path, small_lf):
    manifest = save_grid(small_lf, tmp_path / "lf")
    back = load_manifest(manifest)
    assert np.array_equal(back.rgb, small_lf.rgb)
    assert np.array_equal(back.camera_positions, small_lf.camera_positions)
    assert back.geometry == small_lf.geometry
    assert (tmp_path / "lf" / "img_s000_t000.png").is_file()


def _write_manifest(tmp_path, doc):
    p = tmp_path / "manifest.json"
    p.write_text(json.dumps(doc))
    return p


def _tiny_doc(tmp_path, **overrides):
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(tmp_path / "a.png")
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(tmp_path / "b.png")
    doc = {
        "s_count": 2, "t_count": 1, "width": 4, "height": 4,
        "images": [{"s": 0, "t": 0, "path": "a.png"},
                   {"s": 1, "t": 0, "path": "b.png"}],
    }
    doc.update(overrides)
    return doc


def test_load_manifest_errors(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "missing.json")

    p = tmp_path / "manifest.json"
    p.write_text("{not json")
    with pytest.raises(ManifestError):
        load_manifest(p)

    doc = _tiny_doc(tmp_path)
    del doc["width"]
    with pytest.raises(ManifestError, match="missing required key"):
        load_manifest(_write_manifest(tmp_path, doc))

    with pytest.raises(ManifestError, match="8-bit"):
        load_manifest(_write_manifest(tmp_path, _tiny_doc(tmp_path, bit_depth=16)))

    doc = _tiny_doc(tmp_path)
    doc["images"][1]["s"] = 2
    with pytest.raises(ManifestError, match="outside grid"):
        load_manifest(_write_manifest(tmp_path, doc))

    doc = _tiny_doc(tmp_path)
    doc["images"][1] = dict(doc["images"][0])
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(_write_manifest(tmp_path, doc))

    doc = _tiny_doc(tmp_path)
    doc["images"][1]["path"] = "nope.png"
    with pytest.raises(ManifestError, match="missing"):
        load_manifest(_write_manifest(tmp_path, doc))

    doc = _tiny_doc(tmp_path)
    Image.fromarray(np.zeros((5, 4, 3), dtype=np.uint8)).save(tmp_path / "a.png")
    with pytest.raises(ManifestError, match="resolution mismatch"):
        load_manifest(_write_manifest(tmp_path, doc))

    doc = _tiny_doc(tmp_path)
    doc["images"] = doc["images"][:1]
    with pytest.raises(ManifestError, match="no image entry"):
        load_manifest(_write_manifest(tmp_path, doc))

    doc = _tiny_doc(tmp_path)
    Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(
        tmp_path / "a.png")
    with pytest.raises(ManifestError, match="expected"):
        load_manifest(_write_manifest(tmp_path, doc))


def test_manifest_geometry_and_positions(tmp_path):
    doc = _tiny_doc(tmp_path)
    doc["geometry"] = {"camera_plane_z": -1.0, "image_plane_z": 2.0,
                       "image_plane_extent": [0.0, 0.0, 2.0, 1.0]}
    doc["images"][0]["position"] = [0.0, 0.0]
    doc["images"][1]["position"] = [0.25, 0.0]
    grid = load_manifest(_write_manifest(tmp_path, doc))
    assert grid.geometry.camera_plane_z == -1.0
    assert grid.geometry.image_plane_extent == (0.0, 0.0, 2.0, 1.0)
    assert grid.camera_position(1, 0) == (0.25, 0.0)
