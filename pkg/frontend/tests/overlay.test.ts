import { describe, expect, it } from "vitest";

import {
  clearLayer,
  drawCenterMarker,
  drawContour,
  drawCutLines,
  drawPreview,
  DrawContext,
} from "../src/overlay.js";

class RecordingContext implements DrawContext {
  ops: string[] = [];
  strokeStyle: string = "";
  fillStyle: string = "";
  lineWidth = 0;

  clearRect(x: number, y: number, w: number, h: number): void {
    this.ops.push(`clear ${x},${y},${w},${h}`);
  }
  beginPath(): void {
    this.ops.push("begin");
  }
  moveTo(x: number, y: number): void {
    this.ops.push(`move ${x},${y}`);
  }
  lineTo(x: number, y: number): void {
    this.ops.push(`line ${x},${y}`);
  }
  stroke(): void {
    this.ops.push("stroke");
  }
  arc(x: number, y: number, r: number): void {
    this.ops.push(`arc ${x},${y},${r}`);
  }
  fill(): void {
    this.ops.push("fill");
  }
  setLineDash(segments: number[]): void {
    this.ops.push(`dash ${segments.join(",") || "solid"}`);
  }
}

describe("overlay drawing", () => {
  it("traces the committed contour through every point", () => {
    const ctx = new RecordingContext();
    drawContour(ctx, [[1, 2], [3, 4], [5, 6]]);
    expect(ctx.ops).toEqual(["dash solid", "begin", "move 1,2", "line 3,4", "line 5,6", "stroke"]);
  });

  it("skips empty point lists", () => {
    const ctx = new RecordingContext();
    drawContour(ctx, []);
    drawPreview(ctx, []);
    expect(ctx.ops.filter((op) => op.startsWith("move"))).toEqual([]);
    expect(ctx.ops.filter((op) => op === "stroke")).toEqual([]);
  });

  it("dashes the preview wire and restores solid strokes", () => {
    const ctx = new RecordingContext();
    drawPreview(ctx, [[0, 0], [9, 9]]);
    expect(ctx.ops[0]).toBe("dash 4,3");
    expect(ctx.ops[ctx.ops.length - 1]).toBe("dash solid");
  });

  it("draws one segment per cut line", () => {
    const ctx = new RecordingContext();
    drawCutLines(ctx, [[[10, 0], [10, 50]], [[20, 0], [20, 50]]]);
    expect(ctx.ops.filter((op) => op === "stroke")).toHaveLength(2);
    expect(ctx.ops).toContain("move 10,0");
    expect(ctx.ops).toContain("line 20,50");
  });

  it("marks the spine center with a crosshair", () => {
    const ctx = new RecordingContext();
    drawCenterMarker(ctx, 100, 80);
    expect(ctx.ops).toContain("arc 100,80,4");
    expect(ctx.ops).toContain("fill");
    expect(ctx.ops).toContain("move 91,80");
    expect(ctx.ops).toContain("line 100,89");
  });

  it("clears the full layer", () => {
    const ctx = new RecordingContext();
    clearLayer(ctx, 512, 256);
    expect(ctx.ops).toEqual(["clear 0,0,512,256"]);
  });
});
