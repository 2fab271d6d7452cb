"""Grayscale image model, PNG ingestion, histograms and Otsu thresholding.

Everything downstream (livewire, fat quantification, spine detection) works
on the GrayImage value type defined here. All operations are pure: they
return new images and never mutate their inputs.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, ValidationError

__all__ = [
    "GrayImage",
    "SliceMeta",
    "Histogram256",
    "round_half_up",
    "load_image",
    "encode_png",
    "adjust_brightness",
    "downsample",
    "histogram",
    "otsu_threshold",
    "resize",
]

# ITU-R BT.601 luma weights, the conventional RGB -> gray fallback.
_LUMA = (0.299, 0.587, 0.114)


def round_half_up(x):
    """Round to nearest integer with halves going up (0.5 -> 1, 127.5 -> 128).

    Works on scalars and numpy arrays; the single rounding rule used wherever
    a fractional intensity level has to become an integer level.
    """
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


@dataclass(frozen=True)
class SliceMeta:
    """Patient/slice metadata carried in the JSON sidecar next to a PNG."""

    patient_id: str
    slice_label: str = ""
    pixel_spacing_mm: tuple[float, float] | None = None
    acquisition_tag: str = ""

    def __post_init__(self):
        if not self.patient_id:
            raise ValidationError("patient_id must be non-empty")
        if self.pixel_spacing_mm is not None:
            sx, sy = self.pixel_spacing_mm
            if not (sx > 0 and sy > 0):
                raise ValidationError(f"pixel spacing must be positive, got {self.pixel_spacing_mm}")

    @classmethod
    def from_json(cls, doc: str | bytes | dict) -> "SliceMeta":
        if not isinstance(doc, dict):
            doc = json.loads(doc)
        spacing = doc.get("pixel_spacing_mm")
        if spacing is not None:
            if not (isinstance(spacing, (list, tuple)) and len(spacing) == 2):
                raise ValidationError("pixel_spacing_mm must be a [x, y] pair")
            spacing = (float(spacing[0]), float(spacing[1]))
        return cls(
            patient_id=str(doc.get("patient_id", "")),
            slice_label=str(doc.get("slice_label", "")),
            pixel_spacing_mm=spacing,
            acquisition_tag=str(doc.get("acquisition_tag", "")),
        )

    def to_json(self) -> dict:
        out = {"patient_id": self.patient_id, "slice_label": self.slice_label}
        if self.pixel_spacing_mm is not None:
            out["pixel_spacing_mm"] = list(self.pixel_spacing_mm)
        if self.acquisition_tag:
            out["acquisition_tag"] = self.acquisition_tag
        return out


@dataclass(frozen=True)
class GrayImage:
    """Width x height 8-bit raster plus optional physical pixel spacing (mm)."""

    pixels: np.ndarray  # shape (height, width), dtype uint8
    pixel_spacing: tuple[float, float] | None = None  # (x mm, y mm)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValidationError(f"pixels must be 2-D, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise ValidationError("intensity levels must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", px)
        if self.pixel_spacing is not None:
            sx, sy = self.pixel_spacing
            if not (sx > 0 and sy > 0):
                raise ValidationError(f"pixel spacing must be positive, got {self.pixel_spacing}")
            object.__setattr__(self, "pixel_spacing", (float(sx), float(sy)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def psize(self) -> float | None:
        """Physical area of one pixel in mm^2, or None without spacing."""
        if self.pixel_spacing is None:
            return None
        return self.pixel_spacing[0] * self.pixel_spacing[1]

    def level(self, x: int, y: int) -> int:
        return int(self.pixels[y, x])

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.pixels.shape == other.pixels.shape
            and bool(np.array_equal(self.pixels, other.pixels))
            and self.pixel_spacing == other.pixel_spacing
        )


@dataclass
class Histogram256:
    """Intensity histogram with one bin per 8-bit level."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros(256, dtype=np.int64))

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (256,):
            raise ValidationError(f"histogram needs 256 bins, got shape {c.shape}")
        if c.size and c.min() < 0:
            raise ValidationError("histogram counts must be non-negative")
        self.counts = c

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def load_image(png_bytes: bytes, sidecar: SliceMeta | None = None) -> GrayImage:
    """Decode a PNG (8-bit gray or RGB) into a GrayImage.

    RGB inputs collapse to gray with the BT.601 luma combination, rounded
    half-up. Pixel spacing is copied from the sidecar when present.
    """
    try:
        img = Image.open(io.BytesIO(png_bytes))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"could not decode PNG: {exc}") from exc

    if img.mode == "L":
        arr = np.asarray(img, dtype=np.uint8)
    elif img.mode in ("RGB", "RGBA"):
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
        luma = rgb[..., 0] * _LUMA[0] + rgb[..., 1] * _LUMA[1] + rgb[..., 2] * _LUMA[2]
        arr = round_half_up(luma).astype(np.uint8)
    else:
        # Palette, 16-bit gray etc: let Pillow collapse to 8-bit gray.
        arr = np.asarray(img.convert("L"), dtype=np.uint8)

    spacing = sidecar.pixel_spacing_mm if sidecar is not None else None
    return GrayImage(arr, pixel_spacing=spacing)


def encode_png(img: GrayImage) -> bytes:
    """Encode as 8-bit grayscale PNG. load_image(encode_png(i)) == i."""
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def adjust_brightness(img: GrayImage, delta: int) -> GrayImage:
    """Add delta to every level, clamped to [0, 255]. View-level operation."""
    if not -255 <= delta <= 255:
        raise ValidationError(f"brightness delta must be in [-255, 255], got {delta}")
    shifted = np.clip(img.pixels.astype(np.int16) + int(delta), 0, 255).astype(np.uint8)
    return GrayImage(shifted, pixel_spacing=img.pixel_spacing)


def downsample(img: GrayImage, factor: int) -> GrayImage:
    """Mean-pool by factor x factor blocks; partial edge blocks average over
    the pixels they actually cover. Spacing scales by the factor."""
    if factor < 1:
        raise ValidationError(f"downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return GrayImage(img.pixels.copy(), pixel_spacing=img.pixel_spacing)
    h, w = img.pixels.shape
    oh, ow = math.ceil(h / factor), math.ceil(w / factor)
    out = np.empty((oh, ow), dtype=np.float64)
    for by in range(oh):
        for bx in range(ow):
            block = img.pixels[by * factor:(by + 1) * factor, bx * factor:(bx + 1) * factor]
            out[by, bx] = block.mean()
    spacing = None
    if img.pixel_spacing is not None:
        spacing = (img.pixel_spacing[0] * factor, img.pixel_spacing[1] * factor)
    return GrayImage(round_half_up(out).astype(np.uint8), pixel_spacing=spacing)


def default_downsample_factor(img: GrayImage) -> int:
    """2 for images larger than 400 px on a side (keeps the interactive
    contour responsive), otherwise 1."""
    return 2 if max(img.width, img.height) > 400 else 1


def histogram(img: GrayImage, roi=None) -> Histogram256:
    """Histogram over the whole image, or over roi.interior when given.

    roi is anything exposing interior pixel coordinates as an (N, 2) array
    of (x, y) pairs (a RegionMask qualifies).
    """
    if roi is None:
        counts = np.bincount(img.pixels.ravel(), minlength=256)
        return Histogram256(counts.astype(np.int64))
    xy = np.asarray(roi.interior_xy if hasattr(roi, "interior_xy") else list(roi), dtype=np.int64)
    if xy.size == 0:
        return Histogram256()
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise ValidationError("roi coordinates must be (x, y) pairs")
    xs, ys = xy[:, 0], xy[:, 1]
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= img.width or ys.max() >= img.height:
        raise ValidationError("roi extends outside the image bounds")
    levels = img.pixels[ys, xs]
    return Histogram256(np.bincount(levels, minlength=256).astype(np.int64))


def otsu_threshold(hist: Histogram256 | np.ndarray) -> int:
    """Level k in [0, 255] maximizing between-class variance of the split
    {<= k} / {> k}; ties resolve to the smallest k.

    The comparison runs in exact integer arithmetic: with class weights w0,
    w1 (pixel counts) and weighted sums s0, s1, the variance is proportional
    to (s0*w1 - s1*w0)^2 / (w0*w1), so candidates compare by cross
    multiplication without any float rounding.
    """
    counts = hist.counts if isinstance(hist, Histogram256) else np.asarray(hist, dtype=np.int64)
    if counts.shape != (256,):
        raise ValidationError("otsu_threshold expects 256 bins")
    total = int(counts.sum())
    if total == 0:
        raise ValidationError("histogram is empty")

    levels = [int(c) for c in counts]
    weighted_total = sum(i * c for i, c in enumerate(levels))

    best_k, best_num, best_den = 0, 0, 1
    w0 = 0
    s0 = 0
    for k in range(256):
        w0 += levels[k]
        s0 += k * levels[k]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        s1 = weighted_total - s0
        num = (s0 * w1 - s1 * w0) ** 2
        den = w0 * w1
        # num/den > best_num/best_den, exactly
        if num * best_den > best_num * den:
            best_k, best_num, best_den = k, num, den
    return best_k


def resize(img: GrayImage, width: int, height: int) -> GrayImage:
    """Bilinear resample to the given size. Spacing rescales to preserve the
    physical field of view."""
    if width < 1 or height < 1:
        raise ValidationError("target size must be positive")
    if (width, height) == (img.width, img.height):
        return img
    resized = Image.fromarray(img.pixels, mode="L").resize((width, height), Image.BILINEAR)
    spacing = None
    if img.pixel_spacing is not None:
        sx, sy = img.pixel_spacing
        spacing = (sx * img.width / width, sy * img.height / height)
    return GrayImage(np.asarray(resized, dtype=np.uint8), pixel_spacing=spacing)
