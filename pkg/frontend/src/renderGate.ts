/** Keeps at most one render request in flight per session.
 *
 * Every `invalidate()` bumps the state version. The gate issues one render
 * at a time, tagging each request with the version it was rendered from; a
 * response is applied only if that version is still current (stale
 * responses are dropped), and state changes that arrive mid-flight are
 * coalesced into exactly one follow-up render.
 */

export interface RenderOutcome<T> {
  stateVersion: number;
  result: T;
}

export class RenderGate<T> {
  private stateVersion = 0;
  private renderedVersion = 0;
  private inFlight = false;
  private staleDropped = 0;

  constructor(
    private readonly doRender: () => Promise<T>,
    private readonly apply: (outcome: RenderOutcome<T>) => void,
    private readonly onError: (err: unknown) => void = () => undefined,
  ) {}

  get staleCount(): number {
    return this.staleDropped;
  }

  get busy(): boolean {
    return this.inFlight;
  }

  /** State changed: schedule a render, coalescing with any in-flight one. */
  invalidate(): void {
    this.stateVersion += 1;
    if (!this.inFlight) void this.pump();
  }

  /** Resolves when the gate goes idle (tests await this). */
  async settle(): Promise<void> {
    while (this.inFlight) await new Promise((r) => setTimeout(r, 0));
  }

  private async pump(): Promise<void> {
    this.inFlight = true;
    try {
      while (this.renderedVersion < this.stateVersion) {
        const version = this.stateVersion;
        this.renderedVersion = version;
        let result: T;
        try {
          result = await this.doRender();
        } catch (err) {
          this.onError(err);
          continue;
        }
        if (version !== this.stateVersion) {
          // response is stale: a newer state arrived while it rendered
          this.staleDropped += 1;
          continue;
        }
        this.apply({ stateVersion: version, result });
      }
    } finally {
      this.inFlight = false;
    }
  }
}
