// Thin typed wrapper over the ldikit render service HTTP API.

import type { Perturbation } from "./state.js";

export interface RenderResult {
  bytes: ArrayBuffer;
  voidCount: number;
}

export interface ServiceMeta {
  width: number;
  height: number;
  fx: number;
  fy: number;
  cx: number;
  cy: number;
}

export class RenderClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  async meta(): Promise<ServiceMeta> {
    const resp = await this.fetchFn(`${this.baseUrl}/meta`);
    if (!resp.ok) throw new Error(`meta failed: HTTP ${resp.status}`);
    return (await resp.json()) as ServiceMeta;
  }

  async render(pert: Perturbation, useLdi: boolean): Promise<RenderResult> {
    const resp = await this.fetchFn(`${this.baseUrl}/render`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dx: pert.dx, dy: pert.dy, dz: 0, use_ldi: useLdi }),
    });
    if (!resp.ok) throw new Error(`render failed: HTTP ${resp.status}`);
    const voidCount = Number(resp.headers.get("X-Void-Count") ?? "-1");
    return { bytes: await resp.arrayBuffer(), voidCount };
  }
}
