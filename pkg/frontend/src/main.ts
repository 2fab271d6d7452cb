/**
 * DOM bootstrap: binds the controller to the canvases and controls declared
 * in index.html. Expects the analysis service on localhost (same origin or
 * the URL in the `service` query parameter).
 */

import { ApiClient } from "./api.js";
import { AppController, View } from "./app.js";
import {
  clearLayer,
  drawCenterMarker,
  drawContour,
  drawCutLines,
  drawPreview,
} from "./overlay.js";
import { displayedNumbers, UiSessionState } from "./state.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function serviceUrl(): string {
  const param = new URLSearchParams(window.location.search).get("service");
  return param ?? "http://127.0.0.1:8720";
}

function setCanvasSizes(width: number, height: number): void {
  for (const id of ["canvas-image", "canvas-heat", "canvas-annot"]) {
    const canvas = byId<HTMLCanvasElement>(id);
    canvas.width = width;
    canvas.height = height;
  }
}

function drawPngOnto(canvas: HTMLCanvasElement, pngBase64: string | null): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (pngBase64 === null) return;
  const img = new Image();
  img.onload = () => ctx.drawImage(img, 0, 0);
  img.src = `data:image/png;base64,${pngBase64}`;
}

function renderRegionTable(state: UiSessionState): string {
  if (!state.fragment) return "";
  const rows = state.fragment.regions
    .map((r) => `<tr><td>${r.label}</td><td>${r.fat_percent}</td></tr>`)
    .join("");
  return (
    `<table><thead><tr><th>region</th><th>fat % of total</th></tr></thead>` +
    `<tbody>${rows}<tr><td>total</td><td>${state.fragment.total_fat_percent}</td></tr></tbody></table>` +
    `<p class="hint">side ${state.fragment.side}, theta ${state.fragment.theta_deg} deg, ` +
    `${state.fragment.region_order}</p>`
  );
}

function mount(): void {
  const api = new ApiClient(serviceUrl());

  const annot = byId<HTMLCanvasElement>("canvas-annot");
  const statusEl = byId<HTMLSpanElement>("status");
  const staleEl = byId<HTMLSpanElement>("stale-badge");
  const resultsEl = byId<HTMLDivElement>("results");
  const regionsEl = byId<HTMLDivElement>("region-table");
  const exportRowEl = byId<HTMLPreElement>("export-row");
  const segmentBtn = byId<HTMLButtonElement>("btn-segment");

  const view: View = {
    update(state: UiSessionState): void {
      statusEl.textContent = state.status;
      staleEl.style.display = state.stale ? "inline" : "none";
      segmentBtn.disabled = !controller.segmentAllowed;

      if (state.width && annot.width !== state.width) setCanvasSizes(state.width, state.height);
      const ctx = annot.getContext("2d");
      if (ctx) {
        clearLayer(ctx, annot.width, annot.height);
        drawContour(ctx, state.contour);
        drawPreview(ctx, state.previewPath);
        if (state.center) drawCenterMarker(ctx, state.center.x, state.center.y);
        drawCutLines(ctx, state.cutLines);
      }

      const numbers = displayedNumbers(state);
      resultsEl.innerHTML = state.quant
        ? `<dl>` +
          `<dt>fat</dt><dd>${numbers.fat_percent} %</dd>` +
          `<dt>TCSA</dt><dd>${numbers.tcsa_mm2} mm&sup2;</dd>` +
          `<dt>FCSA</dt><dd>${numbers.fcsa_mm2} mm&sup2;</dd>` +
          `<dt>pixels</dt><dd>${numbers.n_pixels}</dd>` +
          `</dl>`
        : "";
      regionsEl.innerHTML = renderRegionTable(state);
      exportRowEl.textContent = state.exportRow
        ? JSON.stringify(state.exportRow, null, 1)
        : "";
    },
    renderImage(pngBase64: string): void {
      drawPngOnto(byId<HTMLCanvasElement>("canvas-image"), pngBase64);
    },
    renderOverlay(pngBase64: string | null): void {
      drawPngOnto(byId<HTMLCanvasElement>("canvas-heat"), pngBase64);
    },
  };

  const controller = new AppController(api, view);

  byId<HTMLInputElement>("file-input").addEventListener("change", async (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    const buffer = await file.arrayBuffer();
    let binary = "";
    for (const byte of new Uint8Array(buffer)) binary += String.fromCharCode(byte);
    const meta: Record<string, unknown> = {
      patient_id: byId<HTMLInputElement>("patient-id").value || "anonymous",
      slice_label: byId<HTMLInputElement>("slice-label").value,
    };
    const sx = parseFloat(byId<HTMLInputElement>("spacing-x").value);
    const sy = parseFloat(byId<HTMLInputElement>("spacing-y").value);
    if (sx > 0 && sy > 0) meta.pixel_spacing_mm = [sx, sy];
    await controller.loadImage(btoa(binary), meta);
  });

  const canvasPoint = (ev: MouseEvent): [number, number] => {
    const rect = annot.getBoundingClientRect();
    return [Math.round(ev.clientX - rect.left), Math.round(ev.clientY - rect.top)];
  };

  annot.addEventListener("click", (ev) => {
    const [x, y] = canvasPoint(ev);
    void controller.clickAt(x, y);
  });
  annot.addEventListener("mousemove", (ev) => {
    const [x, y] = canvasPoint(ev);
    controller.hoverAt(x, y);
  });
  annot.addEventListener("dblclick", () => void controller.closeContour());
  byId<HTMLButtonElement>("btn-close").addEventListener("click", () => void controller.closeContour());
  byId<HTMLButtonElement>("btn-compute").addEventListener("click", () => void controller.computeNow());
  segmentBtn.addEventListener("click", () => void controller.segment());
  byId<HTMLButtonElement>("btn-export").addEventListener("click", () => {
    void controller.exportRecord(byId<HTMLSelectElement>("phase-select").value);
  });

  const bindSlider = (id: string, outId: string, handler: (v: number) => void) => {
    const slider = byId<HTMLInputElement>(id);
    slider.addEventListener("input", () => {
      byId<HTMLSpanElement>(outId).textContent = slider.value;
      handler(parseFloat(slider.value));
    });
  };
  bindSlider("slider-threshold", "threshold-value", (v) => controller.setThreshold(Math.round(v)));
  bindSlider("slider-softness", "softness-value", (v) => controller.setSoftness(v));
  bindSlider("slider-brightness", "brightness-value", (v) => void controller.setBrightness(Math.round(v)));

  byId<HTMLSelectElement>("label-select").addEventListener("change", (ev) => {
    void controller.setLabel((ev.target as HTMLSelectElement).value);
  });
}

if (typeof document !== "undefined" && document.getElementById("app-root")) {
  mount();
}
