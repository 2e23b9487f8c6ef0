/** In-memory fake of the session service: implements the documented
 * endpoints behind a fetch-like function, logs every request, and lets
 * tests hold render responses to probe in-flight behavior. */

import type { FetchLike } from "../src/client.js";
import type { PlaneSummary, SessionState } from "../src/types.js";

export interface LoggedRequest {
  method: string;
  path: string;
  body: any;
}

interface MockPlaneState {
  z: number;
  rot_x: number;
  rot_y: number;
}

function planeSummary(state: MockPlaneState): PlaneSummary {
  // any injective encoding works: the client treats these as opaque
  return {
    p: [0, 0, state.z],
    n: [state.rot_y, state.rot_x, 1],
    d: state.z,
    corners: [
      [-1, -1, state.z],
      [1, -1, state.z],
      [1, 1, state.z],
      [-1, 1, state.z],
    ],
  };
}

export function encodeCloud(points: number[][], colors: number[][]): ArrayBuffer {
  const count = points.length;
  const buffer = new ArrayBuffer(4 + 27 * count);
  const view = new DataView(buffer);
  view.setUint32(0, count, true);
  let offset = 4;
  for (let i = 0; i < count; i++) {
    for (let k = 0; k < 3; k++, offset += 4) view.setFloat32(offset, points[i][k], true);
    for (let k = 0; k < 3; k++, offset += 1) view.setUint8(offset, colors[i][k]);
    for (let k = 0; k < 3; k++, offset += 4) view.setFloat32(offset, k === 2 ? -1 : 0, true);
  }
  return buffer;
}

export class MockService {
  requests: LoggedRequest[] = [];
  plane: MockPlaneState | null = null;
  renderCount = 0;
  concurrentRenders = 0;
  maxConcurrentRenders = 0;
  holdRenders = false;
  private heldRenders: (() => void)[] = [];
  private renderCache = new Map<string, string>();
  cloudPoints = [
    [0, 0, 2], [1, 0, 2], [0, 1, 2], [1, 1, 2], [0.5, 0.5, 2],
    [2, 0, 2], [0, 2, 2], [3, 3, 2],
  ];

  sessionState(): SessionState {
    return {
      session_id: "mock-session",
      grid_rows: 3,
      grid_cols: 3,
      width: 16,
      height: 16,
      has_disparity: true,
      virtual_ref: [1, 1],
      cameras: [
        { s: 0, t: 0, center: [0.1, 0.1, 0] },
        { s: 1, t: 1, center: [0, 0, 0] },
        { s: 2, t: 2, center: [-0.1, -0.1, 0] },
      ],
      aperture: {
        reference: [1, 1],
        radius: 4.0,
        members: [{ s: 1, t: 1, weight: 1.0 }],
      },
      plane: this.plane ? planeSummary(this.plane) : null,
    };
  }

  /** Release one held render response. */
  releaseRender(): void {
    const next = this.heldRenders.shift();
    if (next) next();
  }

  get heldCount(): number {
    return this.heldRenders.length;
  }

  renderRequests(): LoggedRequest[] {
    return this.requests.filter((r) => r.path.endsWith("/render"));
  }

  adjustRequests(): LoggedRequest[] {
    return this.requests.filter(
      (r) => r.path.endsWith("/plane") && r.body?.mode === "adjust",
    );
  }

  readonly fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(init.body as string) : null;
    this.requests.push({ method, path, body });

    const json = (payload: unknown, status = 200) =>
      new Response(JSON.stringify(payload), {
        status,
        headers: { "Content-Type": "application/json" },
      });
    const error = (type: string, message: string, status: number) =>
      json({ error: { type, message } }, status);

    if (method === "POST" && path === "/sessions") {
      if (body.dataset_path === "/bad/path")
        return error("MalformedManifest", "no manifest", 404);
      return json(this.sessionState(), 201);
    }
    if (method === "GET" && /\/pointcloud/.test(path)) {
      const colors = this.cloudPoints.map(() => [128, 128, 128]);
      return new Response(encodeCloud(this.cloudPoints, colors), {
        status: 200,
        headers: { "Content-Type": "application/octet-stream" },
      });
    }
    if (method === "POST" && path.endsWith("/plane")) {
      switch (body.mode) {
        case "click": {
          const [u, v] = body.uv;
          if (u < 0 || v < 0 || u >= 16 || v >= 16)
            return error("InvalidPixel", "outside the image", 400);
          this.plane = { z: 2.0, rot_x: 0, rot_y: u / 16 };
          return json(planeSummary(this.plane));
        }
        case "three_points": {
          const [a, b, c] = body.points as number[][];
          const u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
          const w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
          const cross = [
            u[1] * w[2] - u[2] * w[1],
            u[2] * w[0] - u[0] * w[2],
            u[0] * w[1] - u[1] * w[0],
          ];
          if (Math.hypot(...cross) < 1e-9)
            return error("CollinearPoints", "three points are collinear", 400);
          this.plane = { z: a[2], rot_x: 0, rot_y: 0 };
          return json(planeSummary(this.plane));
        }
        case "manual":
          this.plane = { z: body.z, rot_x: body.rot_x ?? 0, rot_y: body.rot_y ?? 0 };
          return json(planeSummary(this.plane));
        case "adjust":
          if (!this.plane) return error("NoPlane", "no plane to adjust", 400);
          this.plane = {
            z: this.plane.z + (body.dz ?? 0),
            rot_x: this.plane.rot_x + (body.drot_x ?? 0),
            rot_y: this.plane.rot_y + (body.drot_y ?? 0),
          };
          return json(planeSummary(this.plane));
        default:
          return error("TiltShiftError", `unknown mode ${body.mode}`, 400);
      }
    }
    if (method === "POST" && path.endsWith("/view")) {
      const [s, t] = body.virtual_ref;
      if (s < 0 || t < 0 || s > 2 || t > 2)
        return error("OutOfHull", "outside the grid", 400);
      const members = [];
      for (let gs = 0; gs < 3; gs++)
        for (let gt = 0; gt < 3; gt++)
          if (Math.hypot(gs - s, gt - t) <= body.radius)
            members.push({ s: gs, t: gt, weight: 1 });
      members.forEach((m) => (m.weight = 1 / members.length));
      return json({ reference: [s, t], radius: body.radius, members });
    }
    if (method === "POST" && path.endsWith("/render")) {
      if (!this.plane) return error("NoPlane", "no plane set", 400);
      this.renderCount += 1;
      this.concurrentRenders += 1;
      this.maxConcurrentRenders = Math.max(this.maxConcurrentRenders, this.concurrentRenders);
      if (this.holdRenders)
        await new Promise<void>((resolve) => this.heldRenders.push(resolve));
      this.concurrentRenders -= 1;
      const key = JSON.stringify([this.plane, body.quality]);
      const cached = this.renderCache.has(key);
      if (!cached) this.renderCache.set(key, `render-${this.renderCache.size}`);
      return json({
        render_id: this.renderCache.get(key),
        cached,
        stats: {
          coverage_min: 1, coverage_mean: 1, zero_coverage_fraction: 0,
          width: 16, height: 16,
        },
      });
    }
    if (method === "GET" && /^\/renders\//.test(path)) {
      const rid = path.split("/").pop();
      return new Response(new TextEncoder().encode(`PNG:${rid}`), { status: 200 });
    }
    if (method === "GET" && /^\/sessions\//.test(path)) {
      return json(this.sessionState());
    }
    return error("Unknown", `unhandled ${method} ${path}`, 404);
  };
}
