/** Browser wiring: DOM panels around the headless StudioController.
 * Left: orbitable point cloud with plane quad, normal arrow, and camera
 * markers. Right: the reference view (clickable in single-click mode)
 * and the live refocus preview. */

import { ServiceClient } from "./client.js";
import { StudioController, StudioStateSnapshot } from "./studio.js";
import { CloudViewer } from "./viewer.js";
import type { StudioMode } from "./types.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8089";
const client = new ServiceClient(apiBase);

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;
const toast = $("toast");
let toastTimer: number | undefined;

function showToast(message: string): void {
  toast.textContent = message;
  toast.classList.add("visible");
  window.clearTimeout(toastTimer);
  toastTimer = window.setTimeout(() => toast.classList.remove("visible"), 4000);
}

let viewer: CloudViewer | null = null;
let controller: StudioController | null = null;
let lastState: StudioStateSnapshot | null = null;

function redraw(): void {
  if (viewer && lastState) {
    viewer.setPicks(lastState.pendingPicks);
    viewer.draw(lastState.plane, lastState.aperture);
  }
}

function onStateChange(state: StudioStateSnapshot): void {
  lastState = state;
  $("status").textContent =
    `session ${state.sessionId} | mode ${state.mode}` +
    (state.plane ? ` | plane d=${state.plane.d.toFixed(3)} m` : " | no plane") +
    ` | aperture ${state.aperture.members.length} cams`;
  if (state.lastRender) {
    const blob = new Blob([state.lastRender.png], { type: "image/png" });
    const img = $("preview") as HTMLImageElement;
    const old = img.src;
    img.src = URL.createObjectURL(blob);
    if (old.startsWith("blob:")) URL.revokeObjectURL(old);
    $("render-info").textContent =
      `render ${state.lastRender.renderId}` + (state.lastRender.cached ? " (cached)" : "");
  }
  redraw();
}

async function open(): Promise<void> {
  const datasetPath = ($("dataset") as HTMLInputElement).value;
  controller = new StudioController(client, onStateChange, showToast);
  const state = await controller.open(datasetPath);
  const session = controller.sessionState;

  const refImg = $("reference") as HTMLImageElement;
  const ref = session.virtual_ref;
  refImg.src = client.viewUrl(state.sessionId, Math.round(ref[0]), Math.round(ref[1]));
  refImg.onclick = (e) => {
    // CSS pixels to image pixels; geometry stays on the server
    const u = (e.offsetX * session.width) / refImg.clientWidth;
    const v = (e.offsetY * session.height) / refImg.clientHeight;
    controller?.pickPixel([u, v]);
  };

  const cloud = await controller.loadCloud(100_000);
  const canvas = $("cloud") as HTMLCanvasElement;
  viewer = new CloudViewer(
    canvas,
    cloud,
    session.cameras.map((c) => ({ s: c.s, t: c.t, x: c.center[0], y: c.center[1], z: c.center[2] })),
    (pointId) => controller?.pickCloudPoint(pointId),
    redraw,
  );
  redraw();
}

$("open").onclick = () => void open().catch((err) => showToast(String(err)));

for (const mode of ["single-click", "three-click", "manual"] as StudioMode[]) {
  $(`mode-${mode}`).onclick = () => controller?.setMode(mode);
}

$("manual-apply").onclick = () => {
  controller?.setManualPlane(
    Number(($("manual-z") as HTMLInputElement).value),
    Number(($("manual-rx") as HTMLInputElement).value),
    Number(($("manual-ry") as HTMLInputElement).value),
  );
};

$("view-apply").onclick = () => {
  controller?.moveViewpoint(
    [Number(($("view-s") as HTMLInputElement).value),
     Number(($("view-t") as HTMLInputElement).value)],
    Number(($("view-radius") as HTMLInputElement).value),
  );
};

window.addEventListener("keydown", (e) => {
  if (document.activeElement instanceof HTMLInputElement) return;
  if (controller?.keyStep(e.key, e.shiftKey)) e.preventDefault();
});
