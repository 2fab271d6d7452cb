/**
 * UI session state. Results are stored as the raw server payloads and the
 * view formats straight from them, which is what keeps the "no client-side
 * recomputation" rule honest: there is nowhere else numbers could come from.
 */

import type {
  AnchorResponse,
  CloseResponse,
  FragmentJson,
  Params,
  QuantResultJson,
  SegmentResponse,
  SessionInfo,
} from "./api.js";

export interface UiSessionState {
  sessionId: string | null;
  width: number;
  height: number;
  params: Params;
  anchors: number;
  contour: number[][];
  previewPath: number[][];
  maskClosed: boolean;
  maskPixels: number | null;
  quant: QuantResultJson | null;
  fragment: FragmentJson | null;
  center: { x: number; y: number; method: string } | null;
  cutLines: number[][][];
  exportRow: Record<string, string> | null;
  awaitingManualCenter: boolean;
  stale: boolean;
  status: string;
}

export function newState(): UiSessionState {
  return {
    sessionId: null,
    width: 0,
    height: 0,
    params: { threshold: 0, softness: 0.2, brightness: 0, label: null },
    anchors: 0,
    contour: [],
    previewPath: [],
    maskClosed: false,
    maskPixels: null,
    quant: null,
    fragment: null,
    center: null,
    cutLines: [],
    exportRow: null,
    awaitingManualCenter: false,
    stale: false,
    status: "no image loaded",
  };
}

export function applySession(state: UiSessionState, info: SessionInfo): void {
  state.sessionId = info.session_id;
  state.width = info.width;
  state.height = info.height;
  state.params = { ...info.params };
  state.status = `loaded ${info.width}x${info.height}, Otsu ${info.otsu_threshold}`;
}

export function applyAnchor(state: UiSessionState, response: AnchorResponse): void {
  state.anchors = response.n_anchors;
  state.contour = response.contour;
  state.previewPath = [];
}

export function applyPreview(state: UiSessionState, path: number[][]): void {
  state.previewPath = path;
}

export function applyClose(state: UiSessionState, response: CloseResponse): void {
  state.maskClosed = true;
  state.contour = response.contour;
  state.previewPath = [];
  state.maskPixels = response.n_pixels;
  state.status = response.degenerate
    ? "contour encloses no pixels"
    : `mask closed: ${response.n_pixels} px`;
}

export function applyParams(state: UiSessionState, params: Params): void {
  state.params = { ...params };
}

export function applyCompute(state: UiSessionState, result: QuantResultJson): void {
  state.quant = result;
  state.stale = false;
}

export function applySegment(state: UiSessionState, response: SegmentResponse): void {
  state.fragment = response.fragment;
  state.center = { x: response.center.x, y: response.center.y, method: response.center.method };
  state.cutLines = response.cut_lines;
  state.awaitingManualCenter = false;
}

export function applyExport(state: UiSessionState, row: Record<string, string>): void {
  state.exportRow = row;
  state.status = "record stored";
}

export function canSegment(state: UiSessionState): boolean {
  return state.maskClosed && (state.params.label === "ES-left" || state.params.label === "ES-right");
}

/** Numbers the results panel shows, keyed by display slot. Values come
 * exclusively from stored server payloads. */
export function displayedNumbers(state: UiSessionState): Record<string, number> {
  const out: Record<string, number> = {};
  if (state.quant) {
    out.fat_percent = state.quant.fat_percent;
    out.tcsa_mm2 = state.quant.tcsa_mm2;
    out.fcsa_mm2 = state.quant.fcsa_mm2;
    out.n_pixels = state.quant.n_pixels;
  }
  if (state.fragment) {
    for (const region of state.fragment.regions) {
      out[`region_${region.label}`] = region.fat_percent;
    }
    out.total_fat_percent = state.fragment.total_fat_percent;
  }
  if (state.maskPixels !== null) {
    out.mask_pixels = state.maskPixels;
  }
  return out;
}
