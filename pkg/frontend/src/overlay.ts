/**
 * Canvas drawing for the annotation layer: committed contour, live preview
 * wire, spine-center marker and region cut lines. Pixel data (image and fat
 * heat layer) is drawn in main.ts from server-rendered PNGs.
 */

export interface DrawContext {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  setLineDash(segments: number[]): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

function polyline(ctx: DrawContext, points: number[][]): void {
  if (points.length === 0) return;
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (let i = 1; i < points.length; i++) {
    ctx.lineTo(points[i][0], points[i][1]);
  }
  ctx.stroke();
}

export function clearLayer(ctx: DrawContext, width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
}

export function drawContour(ctx: DrawContext, points: number[][]): void {
  ctx.setLineDash([]);
  ctx.strokeStyle = "#27e07d";
  ctx.lineWidth = 1.5;
  polyline(ctx, points);
}

export function drawPreview(ctx: DrawContext, points: number[][]): void {
  ctx.setLineDash([4, 3]);
  ctx.strokeStyle = "#ffd24a";
  ctx.lineWidth = 1;
  polyline(ctx, points);
  ctx.setLineDash([]);
}

export function drawCenterMarker(ctx: DrawContext, x: number, y: number): void {
  ctx.fillStyle = "#4ab3ff";
  ctx.beginPath();
  ctx.arc(x, y, 4, 0, Math.PI * 2);
  ctx.fill();
  ctx.strokeStyle = "#4ab3ff";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(x - 9, y);
  ctx.lineTo(x + 9, y);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(x, y - 9);
  ctx.lineTo(x, y + 9);
  ctx.stroke();
}

export function drawCutLines(ctx: DrawContext, segments: number[][][]): void {
  ctx.setLineDash([6, 4]);
  ctx.strokeStyle = "#b48cff";
  ctx.lineWidth = 1;
  for (const [a, b] of segments) {
    ctx.beginPath();
    ctx.moveTo(a[0], a[1]);
    ctx.lineTo(b[0], b[1]);
    ctx.stroke();
  }
  ctx.setLineDash([]);
}
