/** Thin typed client for the session service. The fetch implementation is
 * injectable so tests can run against a mocked service. */

import type {
  ApertureSummary,
  CloudData,
  ErrorPayload,
  PlaneGesture,
  PlaneSummary,
  RenderResponse,
  SessionState,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    public readonly type: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

async function asError(resp: Response): Promise<ServiceError> {
  let type = "Unknown";
  let message = resp.statusText;
  try {
    const payload = (await resp.json()) as ErrorPayload;
    type = payload.error.type;
    message = payload.error.message;
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ServiceError(type, message, resp.status);
}

export const POINT_RECORD_BYTES = 27; // 3*f32 xyz + 3*u8 rgb + 3*f32 normal

export function decodeCloudPayload(buffer: ArrayBuffer): CloudData {
  const view = new DataView(buffer);
  const count = view.getUint32(0, true);
  const positions = new Float32Array(3 * count);
  const colors = new Uint8Array(3 * count);
  const normals = new Float32Array(3 * count);
  let offset = 4;
  for (let i = 0; i < count; i++) {
    for (let k = 0; k < 3; k++, offset += 4)
      positions[3 * i + k] = view.getFloat32(offset, true);
    for (let k = 0; k < 3; k++, offset += 1)
      colors[3 * i + k] = view.getUint8(offset);
    for (let k = 0; k < 3; k++, offset += 4)
      normals[3 * i + k] = view.getFloat32(offset, true);
  }
  return { count, positions, colors, normals };
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + url, init);
    if (!resp.ok) throw await asError(resp);
    return (await resp.json()) as T;
  }

  private post<T>(url: string, body: unknown): Promise<T> {
    return this.json<T>(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(datasetPath: string): Promise<SessionState> {
    return this.post("/sessions", { dataset_path: datasetPath });
  }

  getSession(id: string): Promise<SessionState> {
    return this.json(`/sessions/${id}`);
  }

  async getPointcloud(id: string, maxPoints: number): Promise<CloudData> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/sessions/${id}/pointcloud?max_points=${maxPoints}`,
    );
    if (!resp.ok) throw await asError(resp);
    return decodeCloudPayload(await resp.arrayBuffer());
  }

  viewUrl(id: string, s: number, t: number): string {
    return `${this.baseUrl}/sessions/${id}/views/${s}/${t}`;
  }

  setPlane(id: string, gesture: PlaneGesture): Promise<PlaneSummary> {
    return this.post(`/sessions/${id}/plane`, gesture);
  }

  setView(
    id: string,
    virtualRef: [number, number],
    radius: number,
    profile: "uniform" | "gaussian" = "uniform",
  ): Promise<ApertureSummary> {
    return this.post(`/sessions/${id}/view`, {
      virtual_ref: virtualRef,
      radius,
      profile,
    });
  }

  render(id: string, quality: "preview" | "full"): Promise<RenderResponse> {
    return this.post(`/sessions/${id}/render`, { quality });
  }

  async fetchRenderPng(renderId: string): Promise<ArrayBuffer> {
    const resp = await this.fetchFn(`${this.baseUrl}/renders/${renderId}`);
    if (!resp.ok) throw await asError(resp);
    return resp.arrayBuffer();
  }
}
