"""Rate and quality measurement: PSNR in YCoCg space, bits per pixel."""

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import colorspace

# A channel that reconstructs bit-exactly has MSE 0 and PSNR +inf. When
# averaging across images, infinite entries are capped at this many dB so
# they cannot dominate; the average itself is +inf only when every image in
# the light field is exact.
PSNR_CAP_DB = 99.0


@dataclass(frozen=True)
class QualityReport:
    psnr_y: float
    psnr_co: float
    psnr_cg: float
    psnr_ycocg: float
    mse_y: float
    mse_co: float
    mse_cg: float
    bpp: float = 0.0


def psnr_channel(ref, test):
    """PSNR in dB of one plane pair; +inf when identical."""
    ref = np.asarray(ref)
    test = np.asarray(test)
    if ref.shape != test.shape:
        raise ValueError(f"plane shape mismatch: {ref.shape} vs {test.shape}")
    mse = np.mean((ref.astype(np.float64) - test.astype(np.float64)) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def _average_psnr(values):
    if all(math.isinf(v) for v in values):
        return math.inf
    return float(np.mean([min(v, PSNR_CAP_DB) for v in values]))


def psnr_ycocg(ref, test) -> QualityReport:
    """Per-channel and 6:1:1-weighted PSNR of two grids, in YCoCg-R space.

    Channel figures are per-image PSNRs averaged over the grid, as is the
    combined figure's convention; exact channels report +inf.
    """
    if (ref.s_count, ref.t_count, ref.width, ref.height) != \
            (test.s_count, test.t_count, test.width, test.height):
        raise ValueError("light field dims mismatch")
    per_image = [[], [], []]
    mse_acc = np.zeros(3)
    n = 0
    for s in range(ref.s_count):
        for t in range(ref.t_count):
            pr = colorspace.grid_to_planes(ref.rgb[s, t])
            pt = colorspace.grid_to_planes(test.rgb[s, t])
            for c in range(3):
                per_image[c].append(psnr_channel(pr[c], pt[c]))
                mse_acc[c] += np.mean(
                    (pr[c].astype(np.float64) - pt[c].astype(np.float64)) ** 2)
            n += 1
    py, pco, pcg = (_average_psnr(per_image[c]) for c in range(3))
    return QualityReport(
        psnr_y=py, psnr_co=pco, psnr_cg=pcg,
        psnr_ycocg=(6.0 * py + pco + pcg) / 8.0,
        mse_y=mse_acc[0] / n, mse_co=mse_acc[1] / n, mse_cg=mse_acc[2] / n)


def bpp(stream, s_count, t_count, width, height):
    """Bits per light-field pixel for a serialized stream (or byte count)."""
    nbytes = stream if isinstance(stream, int) else len(stream)
    return 8.0 * nbytes / (s_count * t_count * width * height)


# ---------------------------------------------------------------------------
# Report emission

CSV_COLUMNS = ("param_value", "bpp", "psnr_y", "psnr_co", "psnr_cg",
               "psnr_ycocg")


def report_json(report: QualityReport) -> str:
    return json.dumps(asdict(report), indent=2)


def write_sweep_csv(path, rows):
    """rows: iterable of (param_value, QualityReport). Infinite PSNRs are
    written as 'inf'."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for value, rep in rows:
            writer.writerow([value, f"{rep.bpp:.6f}", rep.psnr_y, rep.psnr_co,
                             rep.psnr_cg, rep.psnr_ycocg])
