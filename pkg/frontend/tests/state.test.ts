import { describe, expect, it } from "vitest";

import {
  applyClose,
  applyCompute,
  applySegment,
  applySession,
  canSegment,
  displayedNumbers,
  newState,
} from "../src/state.js";

const sessionInfo = {
  session_id: "s1",
  width: 220,
  height: 180,
  downsample_factor: 1,
  otsu_threshold: 70,
  params: { threshold: 70, softness: 0.2, brightness: 0, label: null },
  image_png_base64: "PNG",
};

describe("state transitions", () => {
  it("session load copies the server defaults", () => {
    const state = newState();
    applySession(state, sessionInfo);
    expect(state.params.threshold).toBe(70);
    expect(state.params.softness).toBe(0.2);
    expect(state.status).toContain("Otsu 70");
  });

  it("degenerate close is reported, not hidden", () => {
    const state = newState();
    applyClose(state, { contour: [[0, 0]], n_pixels: 0, otsu_threshold: 70, degenerate: true });
    expect(state.maskClosed).toBe(true);
    expect(state.status).toContain("no pixels");
  });

  it("segment requires a closed mask and an ES label", () => {
    const state = newState();
    applySession(state, sessionInfo);
    expect(canSegment(state)).toBe(false);
    state.maskClosed = true;
    expect(canSegment(state)).toBe(false);
    state.params.label = "ES-left";
    expect(canSegment(state)).toBe(true);
    state.params.label = "Psoas-right";
    expect(canSegment(state)).toBe(false);
  });

  it("displayed numbers are exactly the stored server payload values", () => {
    const state = newState();
    const quant = {
      fat_percent: 17.645112497636603,
      tcsa_mm2: 33.2,
      fcsa_mm2: 27.34,
      n_pixels: 21156,
      threshold: 70,
      softness: 0.2,
    };
    applyCompute(state, quant);
    applySegment(state, {
      center: { x: 90, y: 75, method: "cord_ref", score: null },
      fragment: {
        side: "right",
        theta_deg: 12.5,
        regions: [
          { label: "R1", fat_percent: 5.1 },
          { label: "R2", fat_percent: 3.8 },
        ],
        total_fat_percent: 8.9,
        region_order: "nearest-column-first",
      },
      cut_lines: [],
    });
    const numbers = displayedNumbers(state);
    expect(numbers.fat_percent).toBe(quant.fat_percent);
    expect(numbers.tcsa_mm2).toBe(33.2);
    expect(numbers.region_R1).toBe(5.1);
    expect(numbers.total_fat_percent).toBe(8.9);
  });
});
