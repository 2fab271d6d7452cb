/**
 * Typed client for the analysis service. Every displayed value in the UI is
 * taken from one of these response payloads; the client never derives fat
 * numbers itself.
 */

export interface Params {
  threshold: number;
  softness: number;
  brightness: number;
  label: string | null;
}

export interface SessionInfo {
  session_id: string;
  width: number;
  height: number;
  downsample_factor: number;
  otsu_threshold: number;
  params: Params;
  image_png_base64: string;
}

export interface PathResponse {
  path: number[][];
}

export interface AnchorResponse {
  n_anchors: number;
  contour: number[][];
}

export interface CloseResponse {
  contour: number[][];
  n_pixels: number;
  otsu_threshold: number;
  degenerate: boolean;
}

export interface QuantResultJson {
  fat_percent: number;
  tcsa_mm2: number;
  fcsa_mm2: number;
  n_pixels: number;
  threshold: number;
  softness: number;
}

export interface RegionJson {
  label: string;
  fat_percent: number;
}

export interface FragmentJson {
  side: string;
  theta_deg: number;
  regions: RegionJson[];
  total_fat_percent: number;
  region_order: string;
}

export interface SegmentResponse {
  center: { x: number; y: number; method: string; score: number | null };
  fragment: FragmentJson;
  cut_lines: number[][][];
}

export interface ExportResponse {
  record_id: string;
  row: Record<string, string>;
}

export interface ParamsPatch {
  threshold?: number;
  softness?: number;
  brightness?: number;
  label?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload.error ?? "unknown", payload.message ?? "request failed");
    }
    return payload as T;
  }

  createSession(pngBase64: string, meta?: Record<string, unknown>): Promise<SessionInfo> {
    const body: Record<string, unknown> = { png_base64: pngBase64 };
    if (meta) body.meta = meta;
    return this.request<SessionInfo>("POST", "/sessions", body);
  }

  addAnchor(sessionId: string, x: number, y: number): Promise<AnchorResponse> {
    return this.request<AnchorResponse>("POST", `/sessions/${sessionId}/anchors`, { x, y });
  }

  preview(sessionId: string, x: number, y: number): Promise<PathResponse> {
    return this.request<PathResponse>("GET", `/sessions/${sessionId}/preview?x=${x}&y=${y}`);
  }

  closeMask(sessionId: string): Promise<CloseResponse> {
    return this.request<CloseResponse>("POST", `/sessions/${sessionId}/close`);
  }

  patchParams(sessionId: string, patch: ParamsPatch): Promise<{ params: Params }> {
    return this.request<{ params: Params }>("PATCH", `/sessions/${sessionId}/params`, patch);
  }

  compute(sessionId: string): Promise<QuantResultJson> {
    return this.request<QuantResultJson>("POST", `/sessions/${sessionId}/compute`, {});
  }

  overlay(sessionId: string): Promise<{ overlay_png_base64: string }> {
    return this.request<{ overlay_png_base64: string }>("GET", `/sessions/${sessionId}/overlay`);
  }

  image(sessionId: string): Promise<{ image_png_base64: string }> {
    return this.request<{ image_png_base64: string }>("GET", `/sessions/${sessionId}/image`);
  }

  segment(sessionId: string, center?: [number, number]): Promise<SegmentResponse> {
    const body: Record<string, unknown> = {};
    if (center) body.center = center;
    return this.request<SegmentResponse>("POST", `/sessions/${sessionId}/segment`, body);
  }

  exportRecord(sessionId: string, trainingPhase: string): Promise<ExportResponse> {
    return this.request<ExportResponse>("POST", `/sessions/${sessionId}/export`, {
      training_phase: trainingPhase,
    });
  }
}
