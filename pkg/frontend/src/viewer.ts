/** Canvas point-cloud panel: point sprites, the server-provided refocus
 * plane quad with its normal arrow, and camera markers (aperture members
 * in red, the rest in yellow), with orbit/zoom mouse controls. */

import { OrbitState, defaultOrbit, project, rotate, zoom } from "./orbit.js";
import { ScreenPoint, pickNearestProjected } from "./picking.js";
import type { ApertureSummary, CloudData, PlaneSummary } from "./types.js";

export interface CameraMarker {
  s: number;
  t: number;
  x: number;
  y: number;
  z: number;
}

export class CloudViewer {
  orbit: OrbitState;
  private projected: ScreenPoint[] = [];
  private picks: number[] = [];

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly cloud: CloudData,
    private readonly cameras: CameraMarker[],
    private readonly onPick: (pointId: number) => void,
    private readonly onOrbitChange: () => void,
  ) {
    const box = this.bounds();
    this.orbit = defaultOrbit(box.center, box.extent);
    this.bindMouse();
  }

  setPicks(picks: number[]): void {
    this.picks = picks;
  }

  private bounds() {
    const p = this.cloud.positions;
    const lo = [Infinity, Infinity, Infinity];
    const hi = [-Infinity, -Infinity, -Infinity];
    for (let i = 0; i < this.cloud.count; i++) {
      for (let k = 0; k < 3; k++) {
        lo[k] = Math.min(lo[k], p[3 * i + k]);
        hi[k] = Math.max(hi[k], p[3 * i + k]);
      }
    }
    const center: [number, number, number] = [
      (lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2,
    ];
    const extent = Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) || 1;
    return { center, extent };
  }

  private bindMouse(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    let moved = false;
    this.canvas.addEventListener("mousedown", (e) => {
      dragging = true;
      moved = false;
      lastX = e.offsetX;
      lastY = e.offsetY;
    });
    this.canvas.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      const dx = e.offsetX - lastX;
      const dy = e.offsetY - lastY;
      if (Math.abs(dx) + Math.abs(dy) > 2) moved = true;
      this.orbit = rotate(this.orbit, -dx * 0.008, -dy * 0.008);
      lastX = e.offsetX;
      lastY = e.offsetY;
      this.onOrbitChange();
    });
    window.addEventListener("mouseup", (e) => {
      if (dragging && !moved && e.target === this.canvas) {
        // click without drag: pick the nearest projected point
        const id = pickNearestProjected(this.projected, lastX, lastY, 12);
        if (id >= 0) this.onPick(id);
      }
      dragging = false;
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.orbit = zoom(this.orbit, e.deltaY > 0 ? 1.1 : 0.9);
      this.onOrbitChange();
    });
  }

  draw(plane: PlaneSummary | null, aperture: ApertureSummary): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width: w, height: h } = this.canvas;
    ctx.fillStyle = "#10131a";
    ctx.fillRect(0, 0, w, h);

    // point sprites
    const pos = this.cloud.positions;
    const col = this.cloud.colors;
    this.projected = new Array(this.cloud.count);
    for (let i = 0; i < this.cloud.count; i++) {
      const pt = project(this.orbit, pos[3 * i], pos[3 * i + 1], pos[3 * i + 2], w, h);
      this.projected[i] = pt;
      if (pt.depth <= 0) continue;
      ctx.fillStyle = `rgb(${col[3 * i]},${col[3 * i + 1]},${col[3 * i + 2]})`;
      const size = Math.min(5, Math.max(1.5, 3 / pt.depth));
      ctx.fillRect(pt.x - size / 2, pt.y - size / 2, size, size);
    }

    // refocus plane quad (transparent blue) + normal arrow (green), all
    // corner/normal values straight from the server summary
    if (plane) {
      const quad = plane.corners.map(([x, y, z]) => project(this.orbit, x, y, z, w, h));
      if (quad.every((q) => q.depth > 0)) {
        ctx.beginPath();
        quad.forEach((q, i) => (i === 0 ? ctx.moveTo(q.x, q.y) : ctx.lineTo(q.x, q.y)));
        ctx.closePath();
        ctx.fillStyle = "rgba(70, 130, 240, 0.30)";
        ctx.strokeStyle = "rgba(110, 160, 255, 0.9)";
        ctx.fill();
        ctx.stroke();
      }
      const tip = [
        plane.p[0] + plane.n[0] * 0.4,
        plane.p[1] + plane.n[1] * 0.4,
        plane.p[2] + plane.n[2] * 0.4,
      ];
      const base = project(this.orbit, plane.p[0], plane.p[1], plane.p[2], w, h);
      const head = project(this.orbit, tip[0], tip[1], tip[2], w, h);
      if (base.depth > 0 && head.depth > 0) {
        ctx.beginPath();
        ctx.moveTo(base.x, base.y);
        ctx.lineTo(head.x, head.y);
        ctx.strokeStyle = "#3ade6e";
        ctx.lineWidth = 2;
        ctx.stroke();
        ctx.lineWidth = 1;
      }
    }

    // camera markers: aperture members red, others yellow
    const members = new Set(aperture.members.map((m) => `${m.s}_${m.t}`));
    for (const cam of this.cameras) {
      const pt = project(this.orbit, cam.x, cam.y, cam.z, w, h);
      if (pt.depth <= 0) continue;
      ctx.fillStyle = members.has(`${cam.s}_${cam.t}`) ? "#e74c3c" : "#f1c40f";
      ctx.beginPath();
      ctx.arc(pt.x, pt.y, 5, 0, 2 * Math.PI);
      ctx.fill();
    }

    // pending three-click picks as yellow stars
    ctx.fillStyle = "#ffe36e";
    ctx.font = "16px sans-serif";
    for (const id of this.picks) {
      const pt = this.projected[id];
      if (pt && pt.depth > 0) ctx.fillText("✶", pt.x - 6, pt.y + 6);
    }
  }
}
