"""Local HTTP/JSON service driving the interactive workflow.

One session per loaded slice; requests within a session are serialized, the
engine calls themselves are pure. The browser UI talks exclusively to these
endpoints and never recomputes fat values client-side.

Workflow: POST /sessions -> anchors/preview -> close -> params/compute ->
segment (ES masks) -> export.
"""

from __future__ import annotations

import base64
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import fragments, livewire, quantify, spine, store
from .errors import (
    DecodeError,
    DegenerateGeometryError,
    DetectionFailedError,
    DuplicateRecordError,
    LumbarFatError,
    ValidationError,
)
from .raster import (
    GrayImage,
    SliceMeta,
    adjust_brightness,
    default_downsample_factor,
    downsample,
    encode_png,
    histogram,
    load_image,
    otsu_threshold,
)

ES_LABELS = ("ES-left", "ES-right")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _not_found(session_id: str) -> ApiError:
    return ApiError(404, "unknown_session", f"no session {session_id}")


def _conflict(message: str) -> ApiError:
    return ApiError(409, "workflow", message)


@dataclass
class Session:
    image: GrayImage
    meta: SliceMeta | None
    ds_factor: int
    ds_image: GrayImage
    costs: np.ndarray
    otsu: int
    params: quantify.QuantParams
    brightness: int = 0
    label: str | None = None
    anchors: list = field(default_factory=list)
    contour: list = field(default_factory=list)
    tree: livewire.CostTree | None = None
    mask: livewire.RegionMask | None = None
    center: tuple[float, float] | None = None
    center_method: str | None = None
    center_score: float | None = None
    last_fragment: fragments.FragmentResult | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionCreate(BaseModel):
    png_base64: str
    meta: dict | None = None


class AnchorIn(BaseModel):
    x: int
    y: int


class ParamsPatch(BaseModel):
    threshold: int | None = None
    softness: float | None = None
    brightness: int | None = None
    label: str | None = None


class ComputeIn(BaseModel):
    psize: float | None = None


class SegmentIn(BaseModel):
    center: list[float] | None = None
    regions: int = 6


class ExportIn(BaseModel):
    training_phase: str = "unspecified"
    patient_id: str | None = None
    psize: float | None = None


def create_app(data_dir: str | Path, model_path: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="lumbarfat service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    record_store = store.RecordStore(data_dir)
    model = spine.load_model(model_path) if model_path else None
    sessions: dict[str, Session] = {}

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _body_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": "validation", "message": str(exc.errors())})

    @app.exception_handler(LumbarFatError)
    async def _engine_error(_req: Request, exc: LumbarFatError):
        code = {
            ValidationError: "validation",
            DecodeError: "decode",
            DegenerateGeometryError: "degenerate_geometry",
            DetectionFailedError: "detection_failed",
            DuplicateRecordError: "duplicate",
        }.get(type(exc), "engine")
        status = 409 if isinstance(exc, DuplicateRecordError) else 422
        return JSONResponse(status_code=status, content={"error": code, "message": str(exc)})

    def get_session(session_id: str) -> Session:
        try:
            return sessions[session_id]
        except KeyError:
            raise _not_found(session_id) from None

    def params_json(s: Session) -> dict:
        return {
            "threshold": s.params.threshold,
            "softness": s.params.softness,
            "brightness": s.brightness,
            "label": s.label,
        }

    def render_png(s: Session) -> str:
        img = adjust_brightness(s.image, s.brightness) if s.brightness else s.image
        return base64.b64encode(encode_png(img)).decode("ascii")

    def to_ds(s: Session, x: int, y: int) -> tuple[int, int]:
        dx, dy = x // s.ds_factor, y // s.ds_factor
        if not s.ds_image.in_bounds(dx, dy):
            raise ApiError(422, "validation", f"point ({x}, {y}) outside the image")
        return dx, dy

    def scale_up(s: Session, path) -> list:
        f = s.ds_factor
        return [[x * f, y * f] for x, y in path]

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreate):
        try:
            png = base64.b64decode(body.png_base64)
        except Exception:
            raise ApiError(422, "validation", "png_base64 is not valid base64")
        meta = SliceMeta.from_json(body.meta) if body.meta else None
        image = load_image(png, sidecar=meta)
        factor = default_downsample_factor(image)
        ds_image = downsample(image, factor)
        otsu = otsu_threshold(histogram(image))
        session = Session(
            image=image,
            meta=meta,
            ds_factor=factor,
            ds_image=ds_image,
            costs=livewire.edge_cost_map(ds_image),
            otsu=otsu,
            params=quantify.QuantParams(threshold=otsu, softness=quantify.SOFTNESS_DEFAULT),
        )
        session_id = uuid.uuid4().hex[:12]
        sessions[session_id] = session
        return {
            "session_id": session_id,
            "width": image.width,
            "height": image.height,
            "downsample_factor": factor,
            "otsu_threshold": otsu,
            "params": params_json(session),
            "image_png_base64": render_png(session),
        }

    @app.get("/sessions/{session_id}/image")
    def session_image(session_id: str):
        s = get_session(session_id)
        with s.lock:
            return {"image_png_base64": render_png(s)}

    @app.post("/sessions/{session_id}/anchors")
    def add_anchor(session_id: str, body: AnchorIn):
        s = get_session(session_id)
        with s.lock:
            if s.mask is not None:
                raise _conflict("mask already closed; start a new session to redraw")
            anchor = to_ds(s, body.x, body.y)
            if not s.contour:
                s.contour = [anchor]
            else:
                s.contour = livewire.append_anchor(s.contour, s.costs, anchor)
            s.anchors.append(anchor)
            s.tree = livewire.CostTree(s.costs, anchor, lazy=True)
            return {
                "n_anchors": len(s.anchors),
                "contour": scale_up(s, s.contour),
            }

    @app.get("/sessions/{session_id}/preview")
    def preview(session_id: str, x: int, y: int):
        s = get_session(session_id)
        with s.lock:
            if not s.anchors:
                raise _conflict("no anchors placed yet")
            if s.mask is not None:
                raise _conflict("mask already closed")
            cursor = to_ds(s, x, y)
            path = s.tree.path_to(cursor)
            return {"path": scale_up(s, path)}

    @app.post("/sessions/{session_id}/close")
    def close_mask(session_id: str):
        s = get_session(session_id)
        with s.lock:
            if s.mask is not None:
                raise _conflict("mask already closed")
            if len(s.anchors) < 3:
                raise _conflict(f"need at least 3 anchors to close, have {len(s.anchors)}")
            s.mask = livewire.close_and_rasterize(s.contour, s.costs, full_res_scale=s.ds_factor)
            return {
                "contour": s.mask.contour_json(),
                "n_pixels": s.mask.pixel_count,
                "otsu_threshold": s.otsu,
                "degenerate": s.mask.degenerate,
            }

    @app.patch("/sessions/{session_id}/params")
    def patch_params(session_id: str, body: ParamsPatch):
        s = get_session(session_id)
        with s.lock:
            threshold = body.threshold if body.threshold is not None else s.params.threshold
            softness = body.softness if body.softness is not None else s.params.softness
            s.params = quantify.QuantParams(threshold=threshold, softness=softness)
            if body.brightness is not None:
                if not -255 <= body.brightness <= 255:
                    raise ApiError(422, "validation", "brightness must be in [-255, 255]")
                s.brightness = body.brightness
            if body.label is not None:
                if body.label not in store.MUSCLE_LABELS:
                    raise ApiError(
                        422, "validation",
                        f"label must be one of {', '.join(store.MUSCLE_LABELS)}",
                    )
                s.label = body.label
            return {"params": params_json(s)}

    def require_mask(s: Session) -> livewire.RegionMask:
        if s.mask is None:
            raise _conflict("mask not closed yet")
        if s.mask.pixel_count == 0:
            raise ApiError(422, "validation", "mask is degenerate (no interior pixels)")
        return s.mask

    def session_psize(s: Session, override: float | None) -> float:
        if override is not None:
            if override <= 0:
                raise ApiError(422, "validation", "psize must be positive")
            return override
        if s.image.psize is None:
            raise ApiError(422, "validation", "no pixel spacing in sidecar; pass psize explicitly")
        return s.image.psize

    @app.post("/sessions/{session_id}/compute")
    def compute(session_id: str, body: ComputeIn | None = None):
        s = get_session(session_id)
        with s.lock:
            mask = require_mask(s)
            psize = session_psize(s, body.psize if body else None)
            result = quantify.quantify(s.image, mask, s.params, psize=psize)
            return result.to_json()

    @app.get("/sessions/{session_id}/overlay")
    def overlay(session_id: str):
        """Fat-membership rendering for the UI heat layer (RGBA PNG: alpha
        scales with membership, so softness is visible)."""
        import io

        from PIL import Image

        s = get_session(session_id)
        with s.lock:
            mask = require_mask(s)
            field = quantify.fat_field(s.image, mask, s.params)
            rgba = np.zeros((s.image.height, s.image.width, 4), dtype=np.uint8)
            rgba[field.ys, field.xs, 0] = 255
            rgba[field.ys, field.xs, 1] = 64
            rgba[field.ys, field.xs, 3] = np.clip(field.values * 200.0, 0, 200).astype(np.uint8)
            buf = io.BytesIO()
            Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
            return {"overlay_png_base64": base64.b64encode(buf.getvalue()).decode("ascii")}

    @app.post("/sessions/{session_id}/segment")
    def segment(session_id: str, body: SegmentIn | None = None):
        s = get_session(session_id)
        with s.lock:
            mask = require_mask(s)
            if s.label not in ES_LABELS:
                raise ApiError(422, "validation", "fragmentation applies to ES masks only; set an ES label first")
            body = body or SegmentIn()
            if body.center is not None:
                cx, cy = float(body.center[0]), float(body.center[1])
                if not s.image.in_bounds(int(cx), int(cy)):
                    raise ApiError(422, "validation", "manual center outside the image")
                s.center, s.center_method, s.center_score = (cx, cy), "manual", None
            else:
                try:
                    found = spine.locate_by_cord(s.image)
                except DetectionFailedError:
                    if model is None:
                        raise
                    found = spine.locate_by_classifier(s.image, model)
                s.center = found.to_image_frame(s.image.width, s.image.height)
                s.center_method, s.center_score = found.method, found.score
            s.last_fragment = fragments.fragment(
                s.image, mask, s.center, s.params, n_regions=body.regions
            )
            cuts = fragments.cut_segments(mask, s.center, n_regions=body.regions)
            return {
                "center": {
                    "x": s.center[0],
                    "y": s.center[1],
                    "method": s.center_method,
                    "score": s.center_score,
                },
                "fragment": s.last_fragment.to_json(),
                "cut_lines": [[[a[0], a[1]], [b[0], b[1]]] for a, b in cuts],
            }

    @app.post("/sessions/{session_id}/export")
    def export(session_id: str, body: ExportIn | None = None):
        s = get_session(session_id)
        with s.lock:
            mask = require_mask(s)
            body = body or ExportIn()
            if s.label is None:
                raise ApiError(422, "validation", "set a muscle label before exporting")
            patient_id = body.patient_id or (s.meta.patient_id if s.meta else None)
            if not patient_id:
                raise ApiError(422, "validation", "no patient_id in sidecar; pass one explicitly")
            psize = session_psize(s, body.psize)
            result = quantify.quantify(s.image, mask, s.params, psize=psize)
            record = store.AnalysisRecord(
                patient_id=patient_id,
                slice_label=s.meta.slice_label if s.meta else "",
                muscle_label=s.label,
                training_phase=body.training_phase,
                quant=result,
                contour=tuple(mask.contour),
                fragment=s.last_fragment,
            )
            record_id = record_store.append(record)
            row = dict(zip(store.CSV_COLUMNS, record.csv_row(f"contours/{record_id}.json")))
            return {"record_id": record_id, "row": row}

    @app.get("/patients/{patient_id}/comparison")
    def comparison(patient_id: str):
        rows, warnings = record_store.compare_phases(patient_id)
        return {"rows": [r.to_json() for r in rows], "warnings": warnings}

    return app
