/** Server payload shapes, mirroring docs/service_api.md. Field names are
 * part of the service contract; the studio displays these values verbatim
 * and never derives geometry on its own. */

export interface ApertureMember {
  s: number;
  t: number;
  weight: number;
}

export interface ApertureSummary {
  reference: [number, number];
  radius: number;
  members: ApertureMember[];
}

export interface PlaneSummary {
  p: [number, number, number];
  n: [number, number, number];
  d: number;
  corners: [number, number, number][];
}

export interface CameraInfo {
  s: number;
  t: number;
  center: [number, number, number];
}

export interface SessionState {
  session_id: string;
  grid_rows: number;
  grid_cols: number;
  width: number;
  height: number;
  has_disparity: boolean;
  virtual_ref: [number, number];
  cameras: CameraInfo[];
  aperture: ApertureSummary;
  plane: PlaneSummary | null;
}

export interface RenderStats {
  coverage_min: number;
  coverage_mean: number;
  zero_coverage_fraction: number;
  width: number;
  height: number;
}

export interface RenderResponse {
  render_id: string;
  cached: boolean;
  stats: RenderStats;
}

export interface ErrorPayload {
  error: { type: string; message: string };
}

/** Decoded binary point-cloud payload. */
export interface CloudData {
  count: number;
  positions: Float32Array; // 3 * count
  colors: Uint8Array;      // 3 * count
  normals: Float32Array;   // 3 * count
}

export type PlaneGesture =
  | { mode: "click"; uv: [number, number] }
  | { mode: "three_points"; points: [number, number, number][] }
  | { mode: "manual"; z: number; rot_x?: number; rot_y?: number; rot_z?: number }
  | { mode: "adjust"; dz?: number; drot_x?: number; drot_y?: number };

export type StudioMode = "single-click" | "three-click" | "manual";
