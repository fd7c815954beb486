import type { ServerInfo, Transport, ViewParams } from './state';

export async function fetchInfo(base = ''): Promise<ServerInfo> {
  const resp = await fetch(`${base}/api/info`);
  if (!resp.ok) {
    throw new Error(`info request failed: HTTP ${resp.status}`);
  }
  return (await resp.json()) as ServerInfo;
}

function viewUrl(base: string, p: ViewParams): string {
  const q = new URLSearchParams({
    s: String(p.s),
    t: String(p.t),
    w: String(p.w),
    h: String(p.h),
    level: String(p.level),
  });
  if (p.focal !== null) q.set('focal', String(p.focal));
  return `${base}/api/view?${q.toString()}`;
}

/** Transport that fetches PNG frames and hands back object URLs. */
export function fetchTransport(base = ''): Transport {
  return async (params) => {
    const resp = await fetch(viewUrl(base, params));
    if (!resp.ok) {
      throw new Error(`view request failed: HTTP ${resp.status}`);
    }
    return URL.createObjectURL(await resp.blob());
  };
}
