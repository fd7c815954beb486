"""HTTP endpoints over a loaded stream: info, per-view decode, novel-view render.

Endpoints are plain (non-async) functions so the framework dispatches each
request to a worker thread; the decoder state is immutable and every render
allocates its own buffers, so concurrent requests need no locking.
"""

import io
import math
import os
from pathlib import Path

from fastapi import FastAPI, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image

from . import decoder, renderer
from .errors import FormatError
from .lightfield import default_geometry

DEFAULT_MAX_SIZE = 1024

FALLBACK_PAGE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>light field viewer</title>
<style>
body { font-family: sans-serif; margin: 2em; background: #161616; color: #ddd; }
img { image-rendering: pixelated; border: 1px solid #444; cursor: grab; }
label { margin-right: 1.5em; }
#status { color: #888; margin-top: 0.5em; }
</style>
</head>
<body>
<h3>light field viewer (built-in fallback page)</h3>
<div>
<label>s <output id="so">0</output></label>
<label>t <output id="to">0</output></label>
<label>level <input id="level" type="range" min="0" max="3" value="0"></label>
<label>zoom <input id="zoom" type="range" min="1" max="8" value="4"></label>
</div>
<p><img id="view" draggable="false" alt="view"></p>
<div id="status">loading...</div>
<script>
let info = null, s = 0, t = 0, busy = false, queued = false;
const img = document.getElementById("view");
const status = document.getElementById("status");
async function refresh() {
  if (busy) { queued = true; return; }
  busy = true;
  const level = document.getElementById("level").value;
  const t0 = performance.now();
  const r = await fetch(`/api/view?s=${s}&t=${t}&level=${level}`);
  if (r.ok) {
    const blob = await r.blob();
    const old = img.src;
    img.src = URL.createObjectURL(blob);
    if (old) URL.revokeObjectURL(old);
    status.textContent = `${(performance.now() - t0).toFixed(0)} ms`;
  } else {
    status.textContent = `error ${r.status}`;
  }
  busy = false;
  if (queued) { queued = false; refresh(); }
}
function setPose(ns, nt) {
  s = Math.min(Math.max(ns, info.aperture.s_min), info.aperture.s_max);
  t = Math.min(Math.max(nt, info.aperture.t_min), info.aperture.t_max);
  document.getElementById("so").value = s.toFixed(2);
  document.getElementById("to").value = t.toFixed(2);
  refresh();
}
let drag = null;
img.addEventListener("pointerdown", e => { drag = [e.clientX, e.clientY, s, t]; });
window.addEventListener("pointermove", e => {
  if (!drag) return;
  const zoom = document.getElementById("zoom").value;
  const px = zoom * info.image.width / (info.grid.s_count - 1 || 1);
  setPose(drag[2] + (e.clientX - drag[0]) / px,
          drag[3] + (e.clientY - drag[1]) / px);
});
window.addEventListener("pointerup", () => { drag = null; });
document.getElementById("level").addEventListener("input", refresh);
document.getElementById("zoom").addEventListener("input", () => {
  img.style.width = (info.image.width * document.getElementById("zoom").value) + "px";
});
fetch("/api/info").then(r => r.json()).then(j => {
  info = j;
  document.getElementById("level").max = j.tree_height;
  img.style.width = (j.image.width * 4) + "px";
  setPose((j.aperture.s_min + j.aperture.s_max) / 2,
          (j.aperture.t_min + j.aperture.t_max) / 2);
});
</script>
</body>
</html>
"""


def _png_bytes(rgb):
    buf = io.BytesIO()
    Image.fromarray(rgb).save(buf, format="PNG")
    return buf.getvalue()


def _bad(detail):
    return JSONResponse(status_code=400, content={"detail": detail})


def find_viewer_dist():
    """Locate built viewer assets: env override, then ./frontend/dist."""
    env = os.environ.get("RLFC_VIEWER_DIST")
    if env:
        path = Path(env)
        if (path / "index.html").is_file():
            return path
    path = Path("frontend") / "dist"
    if (path / "index.html").is_file():
        return path
    return None


def create_app(state: decoder.DecoderState, geometry=None,
               max_size=DEFAULT_MAX_SIZE, viewer_dist=None):
    hdr = state.header
    if geometry is None:
        geometry = default_geometry(hdr.s_count, hdr.t_count)
    grid = renderer.grid_info_for(state)
    params = hdr.params()

    app = FastAPI(title="rlfc", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    def malformed(request, exc):
        return _bad(str(exc.errors()[0].get("msg", "malformed parameter")))

    @app.exception_handler(FormatError)
    def corrupt(request, exc):
        return JSONResponse(status_code=500,
                            content={"detail": f"decode failed: {exc}"})

    info_payload = {
        "grid": {"s_count": hdr.s_count, "t_count": hdr.t_count},
        "image": {"width": hdr.width, "height": hdr.height},
        "tree_height": hdr.tree_height,
        "params": {
            "block_size": params.block_size,
            "pixel_threshold": params.pixel_threshold,
            "block_threshold": params.block_threshold,
            "quant_shift": params.quant_shift,
            "filter": params.filter.kind,
            "sigma": params.filter.sigma,
            "root_codec": params.root_codec,
        },
        "aperture": {
            "s_min": float(grid.xs[0]), "s_max": float(grid.xs[-1]),
            "t_min": float(grid.ys[0]), "t_max": float(grid.ys[-1]),
            "camera_plane_z": geometry.camera_plane_z,
            "image_plane_z": geometry.image_plane_z,
            "image_plane_extent": list(geometry.image_plane_extent),
        },
        "max_size": max_size,
    }

    @app.get("/api/info")
    def api_info():
        return info_payload

    @app.get("/api/view")
    def api_view(s: float, t: float, w: int = None, h: int = None,
                 level: int = 0, focal: float = None):
        if not (math.isfinite(s) and math.isfinite(t)):
            return _bad("s and t must be finite")
        if not (grid.xs[0] <= s <= grid.xs[-1]
                and grid.ys[0] <= t <= grid.ys[-1]):
            return _bad(f"pose outside aperture "
                        f"[{grid.xs[0]}, {grid.xs[-1]}]x"
                        f"[{grid.ys[0]}, {grid.ys[-1]}]")
        w = hdr.width if w is None else w
        h = hdr.height if h is None else h
        if not (1 <= w <= max_size and 1 <= h <= max_size):
            return _bad(f"size must be within 1..{max_size}")
        if not 0 <= level <= hdr.tree_height:
            return _bad(f"level must be in [0, {hdr.tree_height}]")
        if focal is not None:
            if not math.isfinite(focal) or focal == geometry.camera_plane_z:
                return _bad("focal must be finite and off the camera plane")
        pose = renderer.SlabPose(s, t, w, h, focal_z=focal)
        img = renderer.render_view(state, pose, stop_level=level,
                                   geometry=geometry)
        return Response(content=_png_bytes(img), media_type="image/png")

    @app.get("/api/image")
    def api_image(s: int, t: int):
        if not (0 <= s < hdr.s_count and 0 <= t < hdr.t_count):
            return _bad(f"image index outside {hdr.s_count}x{hdr.t_count} grid")
        img = decoder.decode_image(state, (s, t))
        return Response(content=_png_bytes(img), media_type="image/png")

    dist = Path(viewer_dist) if viewer_dist else find_viewer_dist()
    if dist is not None and (dist / "index.html").is_file():
        index = dist / "index.html"

        @app.get("/", include_in_schema=False)
        def home():
            return FileResponse(index)

        app.mount("/", StaticFiles(directory=dist), name="viewer")
    else:
        @app.get("/", include_in_schema=False)
        def home():
            return HTMLResponse(FALLBACK_PAGE)

    return app
