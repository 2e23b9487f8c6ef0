/** Screen-space pick helpers. Picking compares projected screen positions
 * only; the 3D coordinates sent to the server are the server's own cloud
 * points, untouched. */

export interface ScreenPoint {
  x: number;
  y: number;
  depth: number;
}

/** Nearest projected point within `radius` px of the cursor, preferring
 * the closest in screen space and breaking ties toward the viewer.
 * Returns -1 when nothing is in range. */
export function pickNearestProjected(
  projected: ScreenPoint[],
  cursorX: number,
  cursorY: number,
  radius: number,
): number {
  let best = -1;
  let bestDist = radius * radius;
  let bestDepth = Infinity;
  for (let i = 0; i < projected.length; i++) {
    const p = projected[i];
    if (p.depth <= 0) continue; // behind the orbit camera
    const dx = p.x - cursorX;
    const dy = p.y - cursorY;
    const d2 = dx * dx + dy * dy;
    if (d2 < bestDist || (d2 === bestDist && p.depth < bestDepth)) {
      best = i;
      bestDist = d2;
      bestDepth = p.depth;
    }
  }
  return best;
}
