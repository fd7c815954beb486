import { ViewerController } from './state';
import type { ServerInfo, ViewParams } from './state';
import { fetchInfo, fetchTransport } from './transport';

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function wireUp(info: ServerInfo): void {
  const frame = el<HTMLImageElement>('frame');
  const banner = el<HTMLDivElement>('banner');
  const latency = el<HTMLSpanElement>('latency');
  const poseLabel = el<HTMLSpanElement>('pose');
  const focalSlider = el<HTMLInputElement>('focal');
  const focalLabel = el<HTMLSpanElement>('focal-label');
  const levelSelect = el<HTMLSelectElement>('level');
  const progressive = el<HTMLInputElement>('progressive');

  for (let k = 0; k <= info.tree_height; k++) {
    const opt = document.createElement('option');
    opt.value = String(k);
    opt.textContent = k === 0 ? '0 (full detail)' : String(k);
    levelSelect.append(opt);
  }

  // aperture units per screen pixel: dragging across the displayed image
  // sweeps the whole camera plane
  const span = Math.max(info.aperture.s_max - info.aperture.s_min, 1);
  const displayWidth = Math.max(frame.clientWidth || info.image.width, 1);

  let shownUrl: string | null = null;
  const viewer = new ViewerController(info, fetchTransport(), {
    onFrame(handle: string, params: ViewParams) {
      if (shownUrl) URL.revokeObjectURL(shownUrl);
      shownUrl = handle;
      frame.src = handle;
      poseLabel.textContent =
        `s=${params.s.toFixed(2)} t=${params.t.toFixed(2)} k=${params.level}`;
    },
    onStatus(message: string | null) {
      banner.textContent = message ?? '';
      banner.style.display = message ? 'block' : 'none';
    },
    onLatency(ms: number) {
      latency.textContent = `${ms.toFixed(1)} ms`;
    },
  }, { dragScale: span / displayWidth });

  let lastX = 0;
  let lastY = 0;
  frame.addEventListener('pointerdown', (ev) => {
    frame.setPointerCapture(ev.pointerId);
    lastX = ev.clientX;
    lastY = ev.clientY;
    viewer.dragStart();
  });
  frame.addEventListener('pointermove', (ev) => {
    if (!frame.hasPointerCapture(ev.pointerId)) return;
    viewer.dragMove(ev.clientX - lastX, ev.clientY - lastY);
    lastX = ev.clientX;
    lastY = ev.clientY;
  });
  const stop = (ev: PointerEvent) => {
    if (!frame.hasPointerCapture(ev.pointerId)) return;
    frame.releasePointerCapture(ev.pointerId);
    viewer.dragEnd();
  };
  frame.addEventListener('pointerup', stop);
  frame.addEventListener('pointercancel', stop);

  const zImage = info.aperture.image_plane_z;
  focalSlider.min = String(zImage * 0.4);
  focalSlider.max = String(zImage * 2.5);
  focalSlider.step = '0.01';
  focalSlider.value = String(zImage);
  focalLabel.textContent = zImage.toFixed(2);
  focalSlider.addEventListener('input', () => {
    const depth = parseFloat(focalSlider.value);
    focalLabel.textContent = depth.toFixed(2);
    viewer.setFocal(depth === zImage ? null : depth);
  });

  levelSelect.addEventListener('change', () => {
    viewer.setLevel(parseInt(levelSelect.value, 10));
  });
  progressive.addEventListener('change', () => {
    viewer.setProgressive(progressive.checked);
  });

  viewer.start();
}

fetchInfo().then(wireUp, (err) => {
  const banner = document.getElementById('banner');
  if (banner) {
    banner.textContent = err instanceof Error ? err.message : String(err);
    banner.style.display = 'block';
  }
});
