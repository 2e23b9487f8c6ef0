import { describe, expect, it } from "vitest";

import { RenderGate } from "../src/renderGate.js";

describe("RenderGate", () => {
  it("renders once per invalidation when idle", async () => {
    const applied: string[] = [];
    let calls = 0;
    const gate = new RenderGate(
      async () => `r${++calls}`,
      ({ result }) => applied.push(result),
    );
    gate.invalidate();
    await gate.settle();
    gate.invalidate();
    await gate.settle();
    expect(applied).toEqual(["r1", "r2"]);
    expect(gate.staleCount).toBe(0);
  });

  it("keeps at most one request in flight and coalesces bursts", async () => {
    const applied: string[] = [];
    const pending: ((v: string) => void)[] = [];
    let issued = 0;
    const gate = new RenderGate<string>(
      () => {
        issued += 1;
        return new Promise((resolve) => pending.push(resolve));
      },
      ({ result }) => applied.push(result),
    );
    gate.invalidate();
    gate.invalidate();
    gate.invalidate();
    gate.invalidate();
    gate.invalidate();
    expect(issued).toBe(1); // one in flight, the rest coalesced
    pending.shift()!("first");
    await new Promise((r) => setTimeout(r, 0));
    expect(issued).toBe(2); // exactly one follow-up for the burst
    pending.shift()!("second");
    await gate.settle();
    expect(applied).toEqual(["second"]); // stale first response dropped
    expect(gate.staleCount).toBe(1);
  });

  it("applies responses only for the newest state version", async () => {
    const versions: number[] = [];
    const pending: ((v: string) => void)[] = [];
    const gate = new RenderGate<string>(
      () => new Promise((resolve) => pending.push(resolve)),
      ({ stateVersion }) => versions.push(stateVersion),
    );
    gate.invalidate(); // version 1, starts render
    gate.invalidate(); // version 2 arrives mid-flight
    pending.shift()!("v1 response");
    await new Promise((r) => setTimeout(r, 0));
    pending.shift()!("v2 response");
    await gate.settle();
    expect(versions).toEqual([2]);
  });

  it("survives render errors", async () => {
    const errors: unknown[] = [];
    const applied: string[] = [];
    let fail = true;
    const gate = new RenderGate<string>(
      async () => {
        if (fail) throw new Error("boom");
        return "ok";
      },
      ({ result }) => applied.push(result),
      (err) => errors.push(err),
    );
    gate.invalidate();
    await gate.settle();
    expect(errors).toHaveLength(1);
    expect(applied).toEqual([]);
    fail = false;
    gate.invalidate();
    await gate.settle();
    expect(applied).toEqual(["ok"]);
  });
});
