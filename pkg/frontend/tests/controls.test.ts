import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { DebouncedSingleFlight } from "../src/controls.js";

describe("DebouncedSingleFlight", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("collapses rapid fires to the most recent value", async () => {
    const seen: number[] = [];
    const flight = new DebouncedSingleFlight<number>(async (v) => {
      seen.push(v);
    }, 100);
    flight.fire(1);
    vi.advanceTimersByTime(50);
    flight.fire(2);
    vi.advanceTimersByTime(50);
    flight.fire(3);
    await vi.advanceTimersByTimeAsync(100);
    expect(seen).toEqual([3]);
  });

  it("never runs the task concurrently and applies the last queued value", async () => {
    let active = 0;
    let maxActive = 0;
    const seen: number[] = [];
    let release: (() => void) | null = null;

    const flight = new DebouncedSingleFlight<number>(async (v) => {
      active += 1;
      maxActive = Math.max(maxActive, active);
      seen.push(v);
      await new Promise<void>((resolve) => {
        release = resolve;
      });
      active -= 1;
    }, 10);

    flight.fire(1);
    await vi.advanceTimersByTimeAsync(10);
    expect(flight.busy).toBe(true);

    // two more values arrive while the first request is in flight
    flight.fire(2);
    await vi.advanceTimersByTimeAsync(10);
    flight.fire(3);
    await vi.advanceTimersByTimeAsync(10);

    release!();
    await vi.advanceTimersByTimeAsync(1);
    release!();
    await vi.advanceTimersByTimeAsync(1);

    expect(maxActive).toBe(1);
    expect(seen).toEqual([1, 3]);
    expect(flight.busy).toBe(false);
  });
});
