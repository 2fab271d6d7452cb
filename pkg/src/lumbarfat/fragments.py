"""Region-wise fat quantification of a segmented erector spinae mask.

The mask is rotated about the spinal-column center so its radial axis lies
horizontal, then split by equidistant vertical cuts into six regions whose
fat contributions are reported relative to the whole-mask pixel count (so
the six values add up to the total fat percent).

Rotation moves coordinates only; pixel levels travel with their pixels, so
no resampling happens and fat sums are preserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, ValidationError
from .livewire import RegionMask
from .quantify import QuantParams, membership_of_levels
from .raster import GrayImage

__all__ = [
    "RegionFat",
    "FragmentResult",
    "RotatedMask",
    "side_and_angle",
    "rotate_mask",
    "subdivide",
    "fragment",
]

N_REGIONS_DEFAULT = 6


@dataclass(frozen=True)
class RegionFat:
    label: str
    fat_percent_of_total: float
    pixel_count: int
    fat_pixel_sum: float


@dataclass(frozen=True)
class FragmentResult:
    regions: tuple[RegionFat, ...]
    theta_deg: float
    side: str  # left | right
    rotated_bounds: tuple[float, float, float, float]  # min x, max x, min y, max y
    total_fat_percent: float
    pixel_count: int

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "theta_deg": self.theta_deg,
            "regions": [
                {"label": r.label, "fat_percent": r.fat_percent_of_total} for r in self.regions
            ],
            "total_fat_percent": self.total_fat_percent,
            # R1 is always the region nearest the spinal column; the GUI may
            # present either order.
            "region_order": "nearest-column-first",
        }


@dataclass
class RotatedMask:
    """Interior pixels with original and rotated coordinates, plus the
    rotated contour for the cut geometry."""

    orig_xy: np.ndarray      # (N, 2) int, original pixel coordinates
    rot_xy: np.ndarray       # (N, 2) float, rotated coordinates
    rot_contour: np.ndarray  # (M, 2) float
    theta_deg: float
    side: str


def side_and_angle(mask: RegionMask, center: tuple[float, float]) -> tuple[float, str]:
    """Angle of the radial line center -> mask centroid against horizontal.

    Returns (theta in [0, 180], side); the region counts as right of the
    column when theta < 90.
    """
    if mask.pixel_count == 0:
        raise ValidationError("mask has no interior pixels")
    cx, cy = float(center[0]), float(center[1])
    mx = float(mask.interior_xy[:, 0].mean())
    my = float(mask.interior_xy[:, 1].mean())
    vx, vy = mx - cx, my - cy
    norm = math.hypot(vx, vy)
    if norm == 0.0:
        raise DegenerateGeometryError("mask centroid coincides with the spinal-column center")
    theta = math.degrees(math.acos(max(-1.0, min(1.0, vx / norm))))
    side = "right" if theta < 90.0 else "left"
    return theta, side


def _rotation_matrix(theta_deg: float, side: str) -> np.ndarray:
    # Screen-visual rotations on y-down coordinates: visually counter-
    # clockwise by phi is the matrix R(-phi) in the usual math convention.
    # Right side rotates visually CCW by theta, left visually CW by
    # (180 - theta); both bring the radial line onto the horizontal axis.
    if side == "right":
        phi = math.radians(-theta_deg)
    elif side == "left":
        phi = math.radians(180.0 - theta_deg)
    else:
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def rotate_mask(mask: RegionMask, center: tuple[float, float], theta_deg: float, side: str) -> RotatedMask:
    """Rotate interior and contour coordinates about the column center."""
    rot = _rotation_matrix(theta_deg, side)
    c = np.asarray(center, dtype=np.float64)
    orig = mask.interior_xy.astype(np.float64)
    contour = np.asarray(mask.contour, dtype=np.float64)
    rot_xy = (orig - c) @ rot.T + c
    rot_contour = (contour - c) @ rot.T + c
    return RotatedMask(
        orig_xy=mask.interior_xy,
        rot_xy=rot_xy,
        rot_contour=rot_contour,
        theta_deg=theta_deg,
        side=side,
    )


def subdivide(
    rotated: RotatedMask,
    img: GrayImage,
    params: QuantParams,
    n_regions: int = N_REGIONS_DEFAULT,
) -> FragmentResult:
    """Cut the rotated mask into n_regions slabs of equal width and report
    each slab's fat contribution as a share of the whole mask.

    Cut abscissas derive from the rotated contour extremes; each pixel falls
    in the slab containing its rotated x (last interval closed so the far
    extreme belongs to the last slab). R1 is the slab nearest the column:
    the min-x end for right-side masks, the max-x end for left-side ones.
    """
    if n_regions < 1:
        raise ValidationError("need at least one region")
    if rotated.rot_xy.shape[0] == 0:
        raise ValidationError("rotated mask is empty")
    xs_contour = rotated.rot_contour[:, 0]
    ys_contour = rotated.rot_contour[:, 1]
    x_min, x_max = float(xs_contour.min()), float(xs_contour.max())
    length = x_max - x_min
    if length <= 0.0:
        raise DegenerateGeometryError("rotated mask collapsed to a vertical line")

    step = length / n_regions
    idx = np.floor((rotated.rot_xy[:, 0] - x_min) / step).astype(np.int64)
    idx = np.clip(idx, 0, n_regions - 1)

    levels = img.pixels[rotated.orig_xy[:, 1], rotated.orig_xy[:, 0]]
    memberships = membership_of_levels(levels, params)
    n_total = rotated.rot_xy.shape[0]

    # Slab order along +x; relabel so R1 sits nearest the column.
    slab_order = range(n_regions) if rotated.side == "right" else range(n_regions - 1, -1, -1)
    regions = []
    for rank, slab in enumerate(slab_order, start=1):
        in_slab = idx == slab
        fat_sum = float(memberships[in_slab].sum())
        regions.append(
            RegionFat(
                label=f"R{rank}",
                fat_percent_of_total=100.0 * fat_sum / n_total,
                pixel_count=int(in_slab.sum()),
                fat_pixel_sum=fat_sum,
            )
        )
    return FragmentResult(
        regions=tuple(regions),
        theta_deg=rotated.theta_deg,
        side=rotated.side,
        rotated_bounds=(x_min, x_max, float(ys_contour.min()), float(ys_contour.max())),
        total_fat_percent=100.0 * float(memberships.sum()) / n_total,
        pixel_count=n_total,
    )


def fragment(
    img: GrayImage,
    mask: RegionMask,
    center: tuple[float, float],
    params: QuantParams,
    n_regions: int = N_REGIONS_DEFAULT,
) -> FragmentResult:
    """side_and_angle -> rotate_mask -> subdivide in one call."""
    theta, side = side_and_angle(mask, center)
    rotated = rotate_mask(mask, center, theta, side)
    return subdivide(rotated, img, params, n_regions=n_regions)


def cut_segments(
    mask: RegionMask,
    center: tuple[float, float],
    n_regions: int = N_REGIONS_DEFAULT,
) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Endpoints of the region cut lines mapped back to image coordinates.

    The cuts are vertical in the rotated frame (spanning the rotated contour
    y-extent); rotating their endpoints back gives the segments a display
    layer can draw over the unrotated slice.
    """
    theta, side = side_and_angle(mask, center)
    rotated = rotate_mask(mask, center, theta, side)
    xs_contour = rotated.rot_contour[:, 0]
    ys_contour = rotated.rot_contour[:, 1]
    x_min, x_max = float(xs_contour.min()), float(xs_contour.max())
    y_min, y_max = float(ys_contour.min()), float(ys_contour.max())
    if x_max <= x_min:
        raise DegenerateGeometryError("rotated mask collapsed to a vertical line")
    inv = _rotation_matrix(theta, side).T  # rotations: transpose is the inverse
    c = np.asarray(center, dtype=np.float64)
    segments = []
    for k in range(1, n_regions):
        x_cut = x_min + k * (x_max - x_min) / n_regions
        ends = np.array([[x_cut, y_min], [x_cut, y_max]])
        back = (ends - c) @ inv.T + c
        segments.append(((float(back[0, 0]), float(back[0, 1])), (float(back[1, 0]), float(back[1, 1]))))
    return segments
