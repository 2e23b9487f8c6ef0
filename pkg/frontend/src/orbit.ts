/** Orbit camera for the point-cloud panel: yaw/pitch around a target with
 * zoom, projecting world points to canvas coordinates. Display math only;
 * no refocus geometry is derived here. */

export interface OrbitState {
  targetX: number;
  targetY: number;
  targetZ: number;
  yaw: number;    // radians
  pitch: number;  // radians
  distance: number;
  focal: number;  // px
}

export function defaultOrbit(center: [number, number, number], extent: number): OrbitState {
  return {
    targetX: center[0],
    targetY: center[1],
    targetZ: center[2],
    yaw: Math.PI,       // look back toward the rig
    pitch: -0.35,
    distance: Math.max(extent * 2.5, 0.5),
    focal: 500,
  };
}

export function rotate(orbit: OrbitState, dYaw: number, dPitch: number): OrbitState {
  const limit = Math.PI / 2 - 0.01;
  return {
    ...orbit,
    yaw: orbit.yaw + dYaw,
    pitch: Math.min(limit, Math.max(-limit, orbit.pitch + dPitch)),
  };
}

export function zoom(orbit: OrbitState, factor: number): OrbitState {
  return { ...orbit, distance: Math.min(100, Math.max(0.05, orbit.distance * factor)) };
}

/** Project one world point; returns canvas x, y and camera-frame depth. */
export function project(
  orbit: OrbitState,
  x: number,
  y: number,
  z: number,
  canvasW: number,
  canvasH: number,
): { x: number; y: number; depth: number } {
  const cy = Math.cos(orbit.yaw);
  const sy = Math.sin(orbit.yaw);
  const cp = Math.cos(orbit.pitch);
  const sp = Math.sin(orbit.pitch);
  // camera position on the orbit sphere
  const camX = orbit.targetX + orbit.distance * cp * sy;
  const camY = orbit.targetY - orbit.distance * sp;
  const camZ = orbit.targetZ + orbit.distance * cp * cy;
  // world offset from the camera
  let dx = x - camX;
  let dy = y - camY;
  let dz = z - camZ;
  // yaw about the world y axis (negated: camera looks at the target)
  const rx = cy * dx - sy * dz;
  let rz = sy * dx + cy * dz;
  // pitch about the camera x axis, chosen so the target stays on-axis
  const ry = cp * dy + sp * rz;
  rz = -sp * dy + cp * rz;
  const depth = -rz; // camera looks down -z after the rotations
  return {
    x: canvasW / 2 + (orbit.focal * rx) / Math.max(depth, 1e-6),
    y: canvasH / 2 + (orbit.focal * ry) / Math.max(depth, 1e-6),
    depth,
  };
}
