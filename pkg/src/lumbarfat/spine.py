"""Automatic localization of the spinal-column center.

Two detectors work on a 512x512 normalized frame:

  * cord-referenced: the spinal cord is the brightest consistent structure
    in a central crop; threshold it, take the largest bright component and
    step a fixed 55 px up from its centroid.
  * classifier: histogram-of-oriented-gradients descriptors of 50x50
    patches scored by a linear SVM over a sliding window.

The cord method is the default; the classifier is the fallback.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DetectionFailedError, ValidationError
from .raster import GrayImage, otsu_threshold, histogram, resize

__all__ = [
    "NORM_SIZE",
    "PATCH_SIZE",
    "HOG_LENGTH",
    "SpineCenter",
    "PatchSample",
    "LinearSvmModel",
    "locate_by_cord",
    "extract_hog",
    "augment_with_flips",
    "fit_linear_svm",
    "train_svm",
    "locate_by_classifier",
    "cross_validate",
    "normalize_frame",
    "save_model",
    "load_model",
]

NORM_SIZE = 512            # edge length of the normalized frame
CORD_OFFSET = 55           # px from cord centroid up to the column center
PATCH_SIZE = 50
CELL = 2                   # HOG cell edge in px
N_BINS = 9                 # orientation bins over [0, 180)
HOG_LENGTH = (PATCH_SIZE // CELL) ** 2 * N_BINS  # 25 * 25 * 9 = 5625
WINDOW_STRIDE = 5
DESCRIPTOR_TAG = "hog-2x2-9bin-1x1block"

# Central crop for the cord method: middle 40 % of the width, 35-75 % of the
# height. Wide enough for the column, narrow enough to exclude lateral fat.
_CROP_X = (0.30, 0.70)
_CROP_Y = (0.35, 0.75)


@dataclass(frozen=True)
class SpineCenter:
    """Column center in the 512x512 normalized frame."""

    x: float
    y: float
    method: str  # manual | cord_ref | classifier
    score: float | None = None

    def __post_init__(self):
        if self.method not in ("manual", "cord_ref", "classifier"):
            raise ValidationError(f"unknown spine-center method {self.method!r}")
        if not (0 <= self.x < NORM_SIZE and 0 <= self.y < NORM_SIZE):
            raise ValidationError(f"center ({self.x}, {self.y}) outside the normalized frame")

    def to_image_frame(self, width: int, height: int) -> tuple[float, float]:
        """Map from the normalized frame back to native image coordinates."""
        return self.x * width / NORM_SIZE, self.y * height / NORM_SIZE

    @classmethod
    def from_image_frame(cls, x: float, y: float, width: int, height: int, method: str = "manual", score=None):
        return cls(x=x * NORM_SIZE / width, y=y * NORM_SIZE / height, method=method, score=score)


@dataclass
class PatchSample:
    """A 50x50 training patch with its class label."""

    patch: np.ndarray
    label: int  # +1 column, -1 background

    def __post_init__(self):
        p = np.asarray(self.patch, dtype=np.uint8)
        if p.shape != (PATCH_SIZE, PATCH_SIZE):
            raise ValidationError(f"patch must be {PATCH_SIZE}x{PATCH_SIZE}, got {p.shape}")
        if self.label not in (+1, -1):
            raise ValidationError("label must be +1 or -1")
        self.patch = p


@dataclass
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = float(self.bias)

    def decision(self, descriptors: np.ndarray) -> np.ndarray:
        """Signed decision values w . h + b for one or many descriptors."""
        d = np.asarray(descriptors, dtype=np.float64)
        if d.shape[-1] != self.weights.shape[0]:
            raise ValidationError(
                f"descriptor length {d.shape[-1]} does not match model ({self.weights.shape[0]})"
            )
        return d @ self.weights + self.bias

    def predict(self, descriptors: np.ndarray) -> np.ndarray:
        return np.where(self.decision(descriptors) > 0, 1, -1)


def normalize_frame(img: GrayImage) -> GrayImage:
    if (img.width, img.height) == (NORM_SIZE, NORM_SIZE):
        return img
    return resize(img, NORM_SIZE, NORM_SIZE)


def locate_by_cord(img: GrayImage) -> SpineCenter:
    """Column center from the spinal-cord centroid plus a fixed offset.

    The central crop is binarized at (Otsu + 0.2) on the [0, 1] unit scale;
    the largest 8-connected bright component is taken to be the cord and the
    center sits 55 px above its centroid in the normalized frame.
    """
    norm = normalize_frame(img)
    x0 = int(NORM_SIZE * _CROP_X[0])
    x1 = int(NORM_SIZE * _CROP_X[1])
    y0 = int(NORM_SIZE * _CROP_Y[0])
    y1 = int(NORM_SIZE * _CROP_Y[1])
    patch = norm.pixels[y0:y1, x0:x1]

    otsu_unit = otsu_threshold(histogram(GrayImage(patch))) / 255.0
    level_unit = min(1.0, otsu_unit + 0.2)
    bright = patch.astype(np.float64) / 255.0 > level_unit
    if not bright.any():
        raise DetectionFailedError("no bright component above the cord threshold")

    component = _largest_component(bright)
    ys, xs = np.nonzero(component)
    cx = float(xs.mean()) + x0
    cy = float(ys.mean()) + y0
    return SpineCenter(x=cx, y=cy - CORD_OFFSET, method="cord_ref")


def _largest_component(mask: np.ndarray) -> np.ndarray:
    """Largest 8-connected True region of a boolean image (BFS labeling)."""
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    best: list = []
    for sy, sx in zip(*np.nonzero(mask)):
        if seen[sy, sx]:
            continue
        queue = deque([(sy, sx)])
        seen[sy, sx] = True
        pixels = []
        while queue:
            y, x = queue.popleft()
            pixels.append((y, x))
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
        if len(pixels) > len(best):
            best = pixels
    out = np.zeros_like(mask, dtype=bool)
    for y, x in best:
        out[y, x] = True
    return out


def extract_hog(patch: np.ndarray) -> np.ndarray:
    """5625-long HOG descriptor of a 50x50 patch.

    Central-difference gradients with replicated edges, unsigned orientation
    split into 9 bins of 20 degrees with linear votes between the two
    nearest bin centers, then per-cell (1x1-cell block) L2 normalization.
    Cells with gradient energy below the epsilon guard stay all-zero.
    """
    p = np.asarray(patch, dtype=np.float64)
    if p.shape != (PATCH_SIZE, PATCH_SIZE):
        raise ValidationError(f"HOG patch must be {PATCH_SIZE}x{PATCH_SIZE}, got {p.shape}")
    padded = np.pad(p, 1, mode="edge")
    gx = padded[1:-1, 2:] - padded[1:-1, :-2]
    gy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    mag = np.hypot(gx, gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0

    # Linear vote split between the two nearest bin centers (centers at
    # 10, 30, ..., 170 degrees; wraps between 170 and 10).
    rel = ang / 20.0 - 0.5
    lo = np.floor(rel).astype(np.int64)
    frac = rel - lo
    lo_bin = lo % N_BINS
    hi_bin = (lo + 1) % N_BINS

    cells = PATCH_SIZE // CELL
    ys, xs = np.indices((PATCH_SIZE, PATCH_SIZE))
    cell_idx = (ys // CELL) * cells + (xs // CELL)

    hist = np.zeros((cells * cells, N_BINS))
    np.add.at(hist, (cell_idx.ravel(), lo_bin.ravel()), (mag * (1.0 - frac)).ravel())
    np.add.at(hist, (cell_idx.ravel(), hi_bin.ravel()), (mag * frac).ravel())

    norms = np.sqrt((hist * hist).sum(axis=1))
    keep = norms > 1e-6
    hist[keep] /= norms[keep, None]
    hist[~keep] = 0.0
    return hist.ravel()


def augment_with_flips(samples: list[PatchSample]) -> list[PatchSample]:
    """Append a left-right mirrored copy of every positive sample."""
    out = list(samples)
    for s in samples:
        if s.label == +1:
            out.append(PatchSample(patch=s.patch[:, ::-1].copy(), label=+1))
    return out


def hinge_objective(x: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, c: float) -> float:
    """0.5 ||w||^2 + C * sum of hinge losses."""
    margins = y * (x @ w + b)
    return 0.5 * float(w @ w) + c * float(np.maximum(0.0, 1.0 - margins).sum())


def fit_linear_svm(
    x: np.ndarray,
    y: np.ndarray,
    c: float = 1.0,
    tol: float = 1e-4,
    max_iter: int = 100_000,
) -> tuple[np.ndarray, float, list[float]]:
    """Soft-margin linear SVM by batch subgradient descent with backtracking.

    Each step is only accepted if it lowers the hinge objective, so the
    recorded objective trace is non-increasing by construction. Training is
    fully deterministic (no sampling). Stops when the relative objective
    change drops below tol or at the iteration cap.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValidationError("training matrix and labels disagree")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValidationError("training data must contain both classes")

    w = np.zeros(x.shape[1])
    b = 0.0
    obj = hinge_objective(x, y, w, b, c)
    trace = [obj]
    step = 1.0 / max(c * len(y), 1.0)
    for _ in range(max_iter):
        margins = y * (x @ w + b)
        violating = margins < 1.0
        grad_w = w - c * (y[violating, None] * x[violating]).sum(axis=0)
        grad_b = -c * y[violating].sum()

        # Backtrack until the candidate actually improves the objective.
        improved = False
        trial = step * 2.0
        while trial > 1e-18:
            w_new = w - trial * grad_w
            b_new = b - trial * grad_b
            obj_new = hinge_objective(x, y, w_new, b_new, c)
            if obj_new < obj:
                improved = True
                break
            trial /= 2.0
        if not improved:
            break
        step = trial
        w, b = w_new, b_new
        rel_change = (obj - obj_new) / max(obj, 1e-12)
        obj = obj_new
        trace.append(obj)
        if rel_change < tol:
            break
    return w, float(b), trace


def train_svm(samples: list[PatchSample], c: float = 1.0) -> LinearSvmModel:
    """Train the column/background classifier on HOG descriptors."""
    if not samples:
        raise ValidationError("no training samples")
    labels = np.asarray([s.label for s in samples], dtype=np.float64)
    if not (np.any(labels > 0) and np.any(labels < 0)):
        raise ValidationError("need at least one sample of each class")
    descriptors = np.stack([extract_hog(s.patch) for s in samples])
    w, b, trace = fit_linear_svm(descriptors, labels, c=c)
    return LinearSvmModel(
        weights=w,
        bias=b,
        training_meta={"c": c, "iterations": len(trace) - 1, "objective_trace": trace},
    )


def _search_region(size: int) -> tuple[range, range]:
    """Window origins scanned by the detector: windows inside the central
    third horizontally and the middle half vertically."""
    x_lo, x_hi = size // 3, 2 * size // 3
    y_lo, y_hi = size // 4, 3 * size // 4
    xs = range(x_lo, max(x_lo, x_hi - PATCH_SIZE) + 1, WINDOW_STRIDE)
    ys = range(y_lo, max(y_lo, y_hi - PATCH_SIZE) + 1, WINDOW_STRIDE)
    return xs, ys


def locate_by_classifier(img: GrayImage, model: LinearSvmModel) -> SpineCenter:
    """Sliding-window search for the best-scoring column patch.

    Scans 50x50 windows at stride 5 over the central search region and
    returns the center of the window with the largest positive decision
    value. All-negative scores mean no detection.
    """
    norm = normalize_frame(img)
    xs, ys = _search_region(NORM_SIZE)
    best_score = -math.inf
    best_xy = None
    for y0 in ys:
        for x0 in xs:
            window = norm.pixels[y0:y0 + PATCH_SIZE, x0:x0 + PATCH_SIZE]
            score = float(model.decision(extract_hog(window)))
            if score > best_score:
                best_score = score
                best_xy = (x0, y0)
    if best_xy is None or best_score <= 0.0:
        raise DetectionFailedError(
            f"no window scored positive (best {best_score:.4f})", best_score=best_score
        )
    return SpineCenter(
        x=best_xy[0] + PATCH_SIZE // 2,
        y=best_xy[1] + PATCH_SIZE // 2,
        method="classifier",
        score=best_score,
    )


def cross_validate(samples: list[PatchSample], folds: int = 10, c: float = 1.0, seed: int = 0):
    """Stratified k-fold accuracy of the patch classifier.

    Deterministic under the seed: per-class shuffles are dealt round-robin
    into folds, so fold sizes differ by at most one. Returns (per-fold
    accuracies, mean accuracy).
    """
    if folds < 2:
        raise ValidationError("need at least 2 folds")
    labels = np.asarray([s.label for s in samples])
    pos_idx = np.flatnonzero(labels == +1)
    neg_idx = np.flatnonzero(labels == -1)
    if len(pos_idx) < folds or len(neg_idx) < folds:
        raise ValidationError(f"need at least {folds} samples per class for {folds}-fold CV")

    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(samples), dtype=np.int64)
    offset = 0  # stagger per-class remainders so total fold sizes differ by <= 1
    for idx in (pos_idx, neg_idx):
        shuffled = rng.permutation(idx)
        for i, sample_i in enumerate(shuffled):
            fold_of[sample_i] = (i + offset) % folds
        offset += len(idx) % folds

    descriptors = np.stack([extract_hog(s.patch) for s in samples])
    y = labels.astype(np.float64)
    accuracies = []
    for k in range(folds):
        test = fold_of == k
        train = ~test
        w, b, _ = fit_linear_svm(descriptors[train], y[train], c=c)
        pred = np.where(descriptors[test] @ w + b > 0, 1, -1)
        accuracies.append(float((pred == labels[test]).mean()))
    return accuracies, float(np.mean(accuracies))


def save_model(model: LinearSvmModel, path) -> None:
    doc = {
        "weights": [float(v) for v in model.weights],
        "bias": model.bias,
        "c": model.training_meta.get("c", 1.0),
        "descriptor": DESCRIPTOR_TAG,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> LinearSvmModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("descriptor") != DESCRIPTOR_TAG:
        raise ValidationError(f"unsupported descriptor {doc.get('descriptor')!r}")
    return LinearSvmModel(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        bias=float(doc["bias"]),
        training_meta={"c": doc.get("c", 1.0)},
    )
