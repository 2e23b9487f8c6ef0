/** Headless studio controller: holds the interactive state, talks to the
 * service, and enforces the interaction invariants. The UI layer renders
 * whatever this controller exposes and calls its methods; all plane,
 * normal, and aperture values come from server responses, never from
 * local computation.
 *
 * Concurrency rules implemented here:
 *   - gestures are serialized per session (a promise chain);
 *   - at most one render request is in flight (RenderGate), stale render
 *     responses are discarded;
 *   - keyboard steps that arrive while an adjust round-trip is running are
 *     accumulated and flushed as a single adjust request.
 */

import { ServiceClient, ServiceError } from "./client.js";
import { RenderGate } from "./renderGate.js";
import type {
  ApertureSummary,
  CloudData,
  PlaneSummary,
  RenderResponse,
  SessionState,
  StudioMode,
} from "./types.js";

export interface LastRender {
  renderId: string;
  cached: boolean;
  png: ArrayBuffer;
  stateVersion: number;
}

export interface StudioStateSnapshot {
  sessionId: string;
  mode: StudioMode;
  pendingPicks: number[];
  plane: PlaneSummary | null;
  aperture: ApertureSummary;
  virtualRef: [number, number];
  lastRender: LastRender | null;
}

export interface KeyStepConfig {
  depthStep: number; // meters per keypress
  tiltStep: number;  // degrees per keypress
  shiftMultiplier: number;
}

export const DEFAULT_STEPS: KeyStepConfig = {
  depthStep: 0.01,
  tiltStep: 1.0,
  shiftMultiplier: 10.0,
};

interface AdjustDeltas {
  dz: number;
  drot_x: number;
  drot_y: number;
}

const KEYMAP: Record<string, Partial<AdjustDeltas>> = {
  w: { dz: +1 },
  s: { dz: -1 },
  ArrowUp: { drot_x: +1 },
  ArrowDown: { drot_x: -1 },
  ArrowLeft: { drot_y: -1 },
  ArrowRight: { drot_y: +1 },
};

export class StudioController {
  private sessionId = "";
  private session!: SessionState;
  private mode: StudioMode = "single-click";
  private pendingPicks: number[] = [];
  private cloud: CloudData | null = null;
  private lastRender: LastRender | null = null;

  private gestureChain: Promise<void> = Promise.resolve();
  private pendingAdjust: AdjustDeltas | null = null;
  private adjustInFlight = false;
  private readonly renderGate: RenderGate<{
    render: RenderResponse;
    png: ArrayBuffer;
  }>;

  constructor(
    private readonly client: ServiceClient,
    private readonly onChange: (state: StudioStateSnapshot) => void = () => undefined,
    private readonly onToast: (message: string) => void = () => undefined,
    private readonly quality: "preview" | "full" = "preview",
  ) {
    this.renderGate = new RenderGate(
      async () => {
        const render = await this.client.render(this.sessionId, this.quality);
        const png = await this.client.fetchRenderPng(render.render_id);
        return { render, png };
      },
      ({ stateVersion, result }) => {
        this.lastRender = {
          renderId: result.render.render_id,
          cached: result.render.cached,
          png: result.png,
          stateVersion,
        };
        this.emit();
      },
      (err) => this.toastError(err),
    );
  }

  // --- lifecycle -------------------------------------------------------

  async open(datasetPath: string): Promise<StudioStateSnapshot> {
    this.session = await this.client.createSession(datasetPath);
    this.sessionId = this.session.session_id;
    this.emit();
    return this.snapshot();
  }

  async loadCloud(maxPoints = 150_000): Promise<CloudData> {
    this.cloud = await this.client.getPointcloud(this.sessionId, maxPoints);
    return this.cloud;
  }

  get cloudData(): CloudData | null {
    return this.cloud;
  }

  get sessionState(): SessionState {
    return this.session;
  }

  snapshot(): StudioStateSnapshot {
    return {
      sessionId: this.sessionId,
      mode: this.mode,
      pendingPicks: [...this.pendingPicks],
      plane: this.session.plane,
      aperture: this.session.aperture,
      virtualRef: this.session.virtual_ref,
      lastRender: this.lastRender,
    };
  }

  /** Tests await this to observe the fully settled state. */
  async idle(): Promise<void> {
    await this.gestureChain;
    await this.renderGate.settle();
    await this.gestureChain; // adjust flushes may queue another gesture
    await this.renderGate.settle();
  }

  get staleRenderCount(): number {
    return this.renderGate.staleCount;
  }

  // --- modes and picks -------------------------------------------------

  setMode(mode: StudioMode): void {
    this.mode = mode;
    this.pendingPicks = []; // picks only live in three-click mode
    this.emit();
  }

  /** Single-click mode: a pixel picked on the displayed reference view. */
  pickPixel(uv: [number, number]): void {
    if (this.mode !== "single-click") return;
    this.enqueueGesture(async () => {
      const plane = await this.client.setPlane(this.sessionId, {
        mode: "click",
        uv,
      });
      this.session.plane = plane;
      this.emit();
      this.renderGate.invalidate();
    });
  }

  /** Three-click mode: `pointId` indexes the loaded cloud payload. */
  pickCloudPoint(pointId: number): void {
    if (this.mode !== "three-click" || this.cloud === null) return;
    if (pointId < 0 || pointId >= this.cloud.count) return;
    this.pendingPicks.push(pointId);
    this.emit();
    if (this.pendingPicks.length < 3) return;
    const picks = this.pendingPicks.splice(0, 3);
    const points = picks.map((id) => [
      this.cloud!.positions[3 * id],
      this.cloud!.positions[3 * id + 1],
      this.cloud!.positions[3 * id + 2],
    ]) as [number, number, number][];
    this.enqueueGesture(async () => {
      try {
        const plane = await this.client.setPlane(this.sessionId, {
          mode: "three_points",
          points,
        });
        this.session.plane = plane;
        this.emit();
        this.renderGate.invalidate();
      } catch (err) {
        this.pendingPicks = []; // collinear picks etc: clear and surface
        this.toastError(err);
        this.emit();
      }
    });
  }

  /** Manual mode entry point (also used to seed keyboard editing). */
  setManualPlane(z: number, rotX = 0, rotY = 0): void {
    this.enqueueGesture(async () => {
      const plane = await this.client.setPlane(this.sessionId, {
        mode: "manual",
        z,
        rot_x: rotX,
        rot_y: rotY,
      });
      this.session.plane = plane;
      this.emit();
      this.renderGate.invalidate();
    });
  }

  // --- keyboard stepping -----------------------------------------------

  /** Returns true when the key mapped to a step. Steps issued while an
   * adjust round-trip is in flight are merged into one request. */
  keyStep(key: string, shift = false, steps: KeyStepConfig = DEFAULT_STEPS): boolean {
    const mapping = KEYMAP[key];
    if (!mapping || this.session.plane === null) return false;
    const factor = shift ? steps.shiftMultiplier : 1.0;
    const delta: AdjustDeltas = {
      dz: (mapping.dz ?? 0) * steps.depthStep * factor,
      drot_x: (mapping.drot_x ?? 0) * steps.tiltStep * factor,
      drot_y: (mapping.drot_y ?? 0) * steps.tiltStep * factor,
    };
    if (this.pendingAdjust) {
      this.pendingAdjust.dz += delta.dz;
      this.pendingAdjust.drot_x += delta.drot_x;
      this.pendingAdjust.drot_y += delta.drot_y;
    } else {
      this.pendingAdjust = delta;
    }
    if (!this.adjustInFlight) this.flushAdjust();
    return true;
  }

  private flushAdjust(): void {
    const deltas = this.pendingAdjust;
    if (!deltas) return;
    this.pendingAdjust = null;
    this.adjustInFlight = true;
    this.enqueueGesture(async () => {
      try {
        const plane = await this.client.setPlane(this.sessionId, {
          mode: "adjust",
          dz: deltas.dz,
          drot_x: deltas.drot_x,
          drot_y: deltas.drot_y,
        });
        this.session.plane = plane;
        this.emit();
        this.renderGate.invalidate();
      } finally {
        this.adjustInFlight = false;
        if (this.pendingAdjust) this.flushAdjust(); // coalesced steps, one request
      }
    });
  }

  // --- viewpoint ---------------------------------------------------------

  moveViewpoint(virtualRef: [number, number], radius: number,
                profile: "uniform" | "gaussian" = "uniform"): void {
    this.enqueueGesture(async () => {
      const aperture = await this.client.setView(this.sessionId, virtualRef,
                                                 radius, profile);
      this.session.aperture = aperture;
      this.session.virtual_ref = virtualRef;
      this.emit();
      if (this.session.plane !== null) this.renderGate.invalidate();
    });
  }

  // --- internals ---------------------------------------------------------

  private enqueueGesture(work: () => Promise<void>): void {
    this.gestureChain = this.gestureChain.then(work, work).catch((err) => {
      this.toastError(err);
    });
  }

  private toastError(err: unknown): void {
    if (err instanceof ServiceError) {
      this.onToast(`${err.type}: ${err.message}`);
    } else {
      this.onToast(String(err));
    }
  }

  private emit(): void {
    if (this.sessionId) this.onChange(this.snapshot());
  }
}
