/**
 * Controller gluing user gestures to API calls and state updates. The DOM
 * layer (main.ts) feeds it events and renders whatever it reports through
 * the View callbacks; tests drive it with a mock API and a recording view.
 */

import { ApiClient, ApiError } from "./api.js";
import { DebouncedSingleFlight } from "./controls.js";
import {
  applyAnchor,
  applyClose,
  applyCompute,
  applyExport,
  applyParams,
  applyPreview,
  applySegment,
  applySession,
  canSegment,
  newState,
  UiSessionState,
} from "./state.js";

export interface View {
  update(state: UiSessionState): void;
  renderImage(pngBase64: string): void;
  renderOverlay(pngBase64: string | null): void;
}

const SLIDER_DEBOUNCE_MS = 150;
const PREVIEW_DEBOUNCE_MS = 30;

export class AppController {
  readonly state: UiSessionState = newState();

  private computeFlight: DebouncedSingleFlight<void>;
  private previewFlight: DebouncedSingleFlight<[number, number]>;

  constructor(
    private api: ApiClient,
    private view: View,
    debounceMs: number = SLIDER_DEBOUNCE_MS,
  ) {
    this.computeFlight = new DebouncedSingleFlight(() => this.patchAndCompute(), debounceMs);
    this.previewFlight = new DebouncedSingleFlight(
      (xy) => this.fetchPreview(xy),
      Math.min(PREVIEW_DEBOUNCE_MS, debounceMs),
    );
  }

  private inBounds(x: number, y: number): boolean {
    return x >= 0 && y >= 0 && x < this.state.width && y < this.state.height;
  }

  private fail(err: unknown): void {
    if (err instanceof ApiError) {
      this.state.status = `${err.code}: ${err.message}`;
    } else {
      this.state.status = String(err);
      this.state.stale = true;
    }
    this.view.update(this.state);
  }

  async loadImage(pngBase64: string, meta?: Record<string, unknown>): Promise<void> {
    try {
      const info = await this.api.createSession(pngBase64, meta);
      applySession(this.state, info);
      this.view.renderImage(info.image_png_base64);
      this.view.renderOverlay(null);
      this.view.update(this.state);
    } catch (err) {
      this.fail(err);
    }
  }

  /** Canvas click: an anchor while drawing, the manual spine center when a
   * failed detection asked for one. Clicks outside the image or before a
   * session exists are ignored without a request. */
  async clickAt(x: number, y: number): Promise<void> {
    if (this.state.sessionId === null || !this.inBounds(x, y)) return;
    if (this.state.awaitingManualCenter) {
      await this.segment([x, y]);
      return;
    }
    if (this.state.maskClosed) return;
    try {
      const response = await this.api.addAnchor(this.state.sessionId, x, y);
      applyAnchor(this.state, response);
      this.view.update(this.state);
    } catch (err) {
      this.fail(err);
    }
  }

  hoverAt(x: number, y: number): void {
    if (this.state.sessionId === null || this.state.maskClosed || this.state.anchors === 0) return;
    if (!this.inBounds(x, y)) return;
    this.previewFlight.fire([x, y]);
  }

  private async fetchPreview([x, y]: [number, number]): Promise<void> {
    if (this.state.sessionId === null || this.state.maskClosed) return;
    try {
      const response = await this.api.preview(this.state.sessionId, x, y);
      applyPreview(this.state, response.path);
      this.view.update(this.state);
    } catch {
      // preview is cosmetic; a missed frame is fine
    }
  }

  /** Double click closes the contour and triggers the first compute. */
  async closeContour(): Promise<void> {
    if (this.state.sessionId === null || this.state.maskClosed) return;
    try {
      const response = await this.api.closeMask(this.state.sessionId);
      applyClose(this.state, response);
      this.view.update(this.state);
      if (!response.degenerate) {
        await this.computeNow();
      }
    } catch (err) {
      this.fail(err);
    }
  }

  setThreshold(value: number): void {
    this.state.params.threshold = value;
    this.computeFlight.fire();
  }

  setSoftness(value: number): void {
    this.state.params.softness = value;
    this.computeFlight.fire();
  }

  async setBrightness(value: number): Promise<void> {
    if (this.state.sessionId === null) return;
    try {
      const { params } = await this.api.patchParams(this.state.sessionId, { brightness: value });
      applyParams(this.state, params);
      const { image_png_base64 } = await this.api.image(this.state.sessionId);
      this.view.renderImage(image_png_base64);
      this.view.update(this.state);
    } catch (err) {
      this.fail(err);
    }
  }

  async setLabel(label: string): Promise<void> {
    if (this.state.sessionId === null) return;
    try {
      const { params } = await this.api.patchParams(this.state.sessionId, { label });
      applyParams(this.state, params);
      this.view.update(this.state);
    } catch (err) {
      this.fail(err);
    }
  }

  private async patchAndCompute(): Promise<void> {
    if (this.state.sessionId === null) return;
    try {
      const { params } = await this.api.patchParams(this.state.sessionId, {
        threshold: this.state.params.threshold,
        softness: this.state.params.softness,
      });
      applyParams(this.state, params);
      // sliders only recompute once a mask exists
      if (this.state.maskClosed) {
        await this.refreshResults();
      }
      this.view.update(this.state);
    } catch (err) {
      this.state.stale = true;
      this.fail(err);
    }
  }

  async computeNow(): Promise<void> {
    if (this.state.sessionId === null || !this.state.maskClosed) return;
    try {
      await this.refreshResults();
      this.view.update(this.state);
    } catch (err) {
      this.state.stale = true;
      this.fail(err);
    }
  }

  private async refreshResults(): Promise<void> {
    if (this.state.sessionId === null) return;
    const result = await this.api.compute(this.state.sessionId);
    applyCompute(this.state, result);
    const { overlay_png_base64 } = await this.api.overlay(this.state.sessionId);
    this.view.renderOverlay(overlay_png_base64);
  }

  get segmentAllowed(): boolean {
    return canSegment(this.state);
  }

  async segment(manualCenter?: [number, number]): Promise<void> {
    if (this.state.sessionId === null || !this.segmentAllowed) return;
    try {
      const response = await this.api.segment(this.state.sessionId, manualCenter);
      applySegment(this.state, response);
      this.state.status = `segmented (${response.center.method})`;
      this.view.update(this.state);
    } catch (err) {
      if (err instanceof ApiError && err.code === "detection_failed") {
        this.state.awaitingManualCenter = true;
        this.state.status = "automatic detection failed: click the spinal-column center";
        this.view.update(this.state);
        return;
      }
      this.fail(err);
    }
  }

  async exportRecord(trainingPhase: string): Promise<void> {
    if (this.state.sessionId === null || !this.state.maskClosed) return;
    try {
      const response = await this.api.exportRecord(this.state.sessionId, trainingPhase);
      applyExport(this.state, response.row);
      this.view.update(this.state);
    } catch (err) {
      this.fail(err);
    }
  }

  get computeBusy(): boolean {
    return this.computeFlight.busy;
  }
}
