/**
 * Viewer state machine, kept free of DOM and network so it can be tested
 * with a mocked transport.
 *
 * Rules it enforces:
 *  - the pose is always clamped to the aperture reported by /api/info
 *  - at most one view request is in flight; newer wants replace the queued
 *    one, so the last completed request always matches the latest state
 *  - while dragging with progressive refinement on, requests go out at the
 *    coarsest level; drag-end issues one full-detail request
 *  - focal and level changes are debounced into a single request
 *  - a failed request shows a status banner and keeps the pose
 */

export interface Aperture {
  s_min: number;
  s_max: number;
  t_min: number;
  t_max: number;
  camera_plane_z: number;
  image_plane_z: number;
  image_plane_extent: [number, number, number, number];
}

export interface ServerInfo {
  grid: { s_count: number; t_count: number };
  image: { width: number; height: number };
  tree_height: number;
  aperture: Aperture;
  max_size: number;
}

export interface ViewParams {
  s: number;
  t: number;
  w: number;
  h: number;
  level: number;
  focal: number | null;
}

/** Resolves to a displayable handle (object URL in the browser). */
export type Transport = (params: ViewParams) => Promise<string>;

export interface ViewerEvents {
  onFrame(handle: string, params: ViewParams): void;
  onStatus(message: string | null): void;
  onLatency(ms: number): void;
}

export interface ViewerOptions {
  /** camera-plane units moved per screen pixel of drag */
  dragScale?: number;
  debounceMs?: number;
  now?: () => number;
}

function sameParams(a: ViewParams | null, b: ViewParams): boolean {
  return a !== null && a.s === b.s && a.t === b.t && a.w === b.w &&
    a.h === b.h && a.level === b.level && a.focal === b.focal;
}

export class ViewerController {
  pose: { s: number; t: number };
  focal: number | null = null;
  level = 0;
  progressive = true;

  private readonly info: ServerInfo;
  private readonly transport: Transport;
  private readonly events: ViewerEvents;
  private readonly dragScale: number;
  private readonly debounceMs: number;
  private readonly now: () => number;

  private inflight: ViewParams | null = null;
  private queued: ViewParams | null = null;
  private displayed: ViewParams | null = null;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private dragging = false;
  private dragMoved = false;

  constructor(info: ServerInfo, transport: Transport, events: ViewerEvents,
              options: ViewerOptions = {}) {
    this.info = info;
    this.transport = transport;
    this.events = events;
    this.dragScale = options.dragScale ?? 1 / 60;
    this.debounceMs = options.debounceMs ?? 150;
    this.now = options.now ?? (() => performance.now());
    const ap = info.aperture;
    this.pose = { s: (ap.s_min + ap.s_max) / 2, t: (ap.t_min + ap.t_max) / 2 };
  }

  /** Fetch the first frame for the initial pose. */
  start(): void {
    this.request(this.params(this.level));
  }

  dragStart(): void {
    this.dragging = true;
    this.dragMoved = false;
  }

  dragMove(dxPx: number, dyPx: number): void {
    if (!this.dragging) return;
    const ap = this.info.aperture;
    const s = Math.min(Math.max(this.pose.s + dxPx * this.dragScale,
                                ap.s_min), ap.s_max);
    const t = Math.min(Math.max(this.pose.t + dyPx * this.dragScale,
                                ap.t_min), ap.t_max);
    if (s === this.pose.s && t === this.pose.t) return;
    this.pose = { s, t };
    this.dragMoved = true;
    const level = this.progressive ? this.info.tree_height : this.level;
    this.request(this.params(level));
  }

  dragEnd(): void {
    if (!this.dragging) return;
    this.dragging = false;
    if (this.dragMoved && this.progressive) {
      this.request(this.params(this.level));
    }
    this.dragMoved = false;
  }

  setFocal(focal: number | null): void {
    if (focal === this.focal) return;
    this.focal = focal;
    this.debouncedRefresh();
  }

  setLevel(level: number): void {
    const k = Math.min(Math.max(Math.round(level), 0),
                       this.info.tree_height);
    if (k === this.level) return;
    this.level = k;
    this.debouncedRefresh();
  }

  setProgressive(on: boolean): void {
    this.progressive = on;
  }

  private params(level: number): ViewParams {
    const w = Math.min(this.info.image.width, this.info.max_size);
    const h = Math.min(this.info.image.height, this.info.max_size);
    return { s: this.pose.s, t: this.pose.t, w, h, level,
             focal: this.focal };
  }

  private debouncedRefresh(): void {
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      this.request(this.params(this.level));
    }, this.debounceMs);
  }

  private request(params: ViewParams): void {
    if (this.inflight !== null) {
      if (!sameParams(this.inflight, params)) {
        this.queued = params; // latest wins; older queued wants are dropped
      }
      return;
    }
    // a failed request never becomes `displayed`, so retries pass through
    if (sameParams(this.displayed, params)) return;
    this.fire(params);
  }

  private fire(params: ViewParams): void {
    this.inflight = params;
    const t0 = this.now();
    this.transport(params).then(
      (handle) => {
        this.displayed = params;
        this.events.onLatency(this.now() - t0);
        this.events.onFrame(handle, params);
        this.events.onStatus(null);
      },
      (err) => {
        this.events.onStatus(err instanceof Error ? err.message :
                             String(err));
      },
    ).then(() => {
      this.inflight = null;
      const next = this.queued;
      this.queued = null;
      if (next !== null && !sameParams(this.displayed, next)) {
        this.fire(next);
      }
    });
  }
}
