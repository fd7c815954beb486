import csv
import json
import math

import numpy as np
import pytest

from rlfc import metrics
from rlfc.lightfield import LightFieldGrid, default_geometry


def _grid_pair(delta=0):
    rng = np.random.default_rng(3)
    rgb = rng.integers(0, 200, size=(2, 2, 8, 8, 3), dtype=np.uint8)
    pos = np.zeros((2, 2, 2))
    pos[:, :, 0] = np.arange(2)[:, None]
    pos[:, :, 1] = np.arange(2)[None, :]
    a = LightFieldGrid(2, 2, 8, 8, rgb, pos, default_geometry(2, 2))
    b = LightFieldGrid(2, 2, 8, 8, (rgb + delta).astype(np.uint8), pos,
                       default_geometry(2, 2))
    return a, b


def test_psnr_off_by_one_everywhere():
    # MSE 1 against a 255 peak: 20*log10(255) = 48.1308 dB
    ref = np.zeros((16, 16), dtype=np.int32)
    assert metrics.psnr_channel(ref, ref + 1) == pytest.approx(48.130803609)


def test_psnr_identical_is_inf():
    ref = np.arange(64).reshape(8, 8)
    assert metrics.psnr_channel(ref, ref) == math.inf


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        metrics.psnr_channel(np.zeros((4, 4)), np.zeros((4, 5)))


def test_average_caps_infinite_entries():
    # one exact image and one at 30 dB average to (99 + 30) / 2
    assert metrics._average_psnr([math.inf, 30.0]) == pytest.approx(64.5)
    assert metrics._average_psnr([math.inf, math.inf]) == math.inf


def test_grid_psnr_exact_and_weighted():
    a, b = _grid_pair(0)
    rep = metrics.psnr_ycocg(a, b)
    assert rep.psnr_y == math.inf and rep.psnr_ycocg == math.inf
    assert rep.mse_y == 0.0

    a, b = _grid_pair(1)
    rep = metrics.psnr_ycocg(a, b)
    # +1 on all of R, G, B shifts Y by +1 and leaves Co, Cg untouched
    assert rep.psnr_y == pytest.approx(48.130803609)
    assert rep.psnr_co == math.inf and rep.psnr_cg == math.inf
    # the 6:1:1 weighting is applied literally, so exact channels propagate
    assert rep.psnr_ycocg == (6 * rep.psnr_y + rep.psnr_co + rep.psnr_cg) / 8
    assert rep.psnr_ycocg == math.inf
    assert rep.mse_y == pytest.approx(1.0)


def test_grid_psnr_dims_mismatch():
    a, _ = _grid_pair()
    rng = np.random.default_rng(0)
    rgb = rng.integers(0, 255, size=(2, 2, 8, 9, 3), dtype=np.uint8)
    pos = a.camera_positions
    other = LightFieldGrid(2, 2, 9, 8, rgb, pos, default_geometry(2, 2))
    with pytest.raises(ValueError):
        metrics.psnr_ycocg(a, other)


def test_bpp_law():
    assert metrics.bpp(1000, 8, 8, 64, 64) == pytest.approx(
        8000 / (8 * 8 * 64 * 64))
    assert metrics.bpp(b"\x00" * 1000, 8, 8, 64, 64) == \
        metrics.bpp(1000, 8, 8, 64, 64)


def test_report_json_is_json_text():
    rep = metrics.QualityReport(40.0, 50.0, 45.0, 42.5, 1.0, 0.5, 0.7,
                                bpp=2.25)
    doc = json.loads(metrics.report_json(rep))
    assert doc["psnr_ycocg"] == 42.5
    assert doc["bpp"] == 2.25
    assert set(doc) == {"psnr_y", "psnr_co", "psnr_cg", "psnr_ycocg",
                        "mse_y", "mse_co", "mse_cg", "bpp"}


def test_quality_floor_at_default_block_threshold(lf):
    import dataclasses

    from rlfc import decoder, encoder
    from rlfc.hierarchy import EncodingParams

    params = dataclasses.replace(EncodingParams(), block_threshold=50)
    stream, _ = encoder.compress(lf, params)
    recon = decoder.decode_all(decoder.init(stream))
    rep = metrics.psnr_ycocg(lf, recon)
    assert rep.psnr_ycocg >= 35.0


def test_sweep_csv_layout(tmp_path):
    rows = [(0, metrics.QualityReport(40.0, 50.0, 45.0, 42.5, 1, 1, 1,
                                      bpp=3.5)),
            (80, metrics.QualityReport(math.inf, math.inf, math.inf,
                                       math.inf, 0, 0, 0, bpp=1.25))]
    path = tmp_path / "sweep.csv"
    metrics.write_sweep_csv(path, rows)
    with open(path, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == list(metrics.CSV_COLUMNS)
    assert got[1] == ["0", "3.500000", "40.0", "50.0", "45.0", "42.5"]
    assert got[2][0] == "80" and got[2][2] == "inf"
