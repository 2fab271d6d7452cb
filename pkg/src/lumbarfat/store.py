"""Append-only persistence of analysis records and pre/post comparison.

Records land in a flat CSV (one row per analysis, values at report
precision) with a JSON sidecar per record holding the contour and the exact
engine values, so a stored record reconstructs losslessly. Re-appending a
record with identical content (timestamp aside) is rejected by content hash.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import DuplicateRecordError, StorageError, ValidationError
from .fragments import FragmentResult, RegionFat
from .quantify import QuantResult

__all__ = ["MUSCLE_LABELS", "TRAINING_PHASES", "AnalysisRecord", "ComparisonRow", "RecordStore"]

MUSCLE_LABELS = ("ES-left", "ES-right", "LMM-left", "LMM-right", "Psoas-left", "Psoas-right")
TRAINING_PHASES = ("pre", "post", "unspecified")

CSV_COLUMNS = [
    "patient_id",
    "slice_label",
    "muscle_label",
    "training_phase",
    "timestamp",
    "threshold",
    "softness",
    "fat_percent",
    "tcsa_mm2",
    "fcsa_mm2",
    "r1_percent",
    "r2_percent",
    "r3_percent",
    "r4_percent",
    "r5_percent",
    "r6_percent",
    "contour_ref",
]


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class AnalysisRecord:
    patient_id: str
    slice_label: str
    muscle_label: str
    training_phase: str
    quant: QuantResult
    contour: tuple
    fragment: FragmentResult | None = None
    timestamp: str = ""

    def __post_init__(self):
        if not self.patient_id:
            raise ValidationError("patient_id must be non-empty")
        if self.muscle_label not in MUSCLE_LABELS:
            raise ValidationError(
                f"muscle_label {self.muscle_label!r} not in {', '.join(MUSCLE_LABELS)}"
            )
        if self.training_phase not in TRAINING_PHASES:
            raise ValidationError(f"training_phase {self.training_phase!r} not in {TRAINING_PHASES}")
        object.__setattr__(self, "contour", tuple((int(x), int(y)) for x, y in self.contour))
        if not self.timestamp:
            object.__setattr__(self, "timestamp", utc_now_iso())

    @property
    def side(self) -> str:
        return self.muscle_label.rsplit("-", 1)[1]

    def content_hash(self) -> str:
        """Identity of the record content; the timestamp is deliberately
        excluded so re-exporting the same analysis is flagged a duplicate."""
        doc = self._content_doc()
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:12]

    def _content_doc(self) -> dict:
        doc = {
            "patient_id": self.patient_id,
            "slice_label": self.slice_label,
            "muscle_label": self.muscle_label,
            "training_phase": self.training_phase,
            "quant": _quant_doc(self.quant),
            "contour": [list(p) for p in self.contour],
        }
        if self.fragment is not None:
            doc["fragment"] = _fragment_doc(self.fragment)
        return doc

    def region_percents_rounded(self) -> list[float] | None:
        if self.fragment is None:
            return None
        return [round(r.fat_percent_of_total, 1) for r in self.fragment.regions]

    def csv_row(self, contour_ref: str) -> list[str]:
        rounded = self.quant.rounded()
        regions = self.region_percents_rounded()
        cells = [
            self.patient_id,
            self.slice_label,
            self.muscle_label,
            self.training_phase,
            self.timestamp,
            str(self.quant.threshold),
            str(self.quant.softness),
            f"{rounded['fat_percent']:.1f}",
            str(rounded["tcsa_mm2"]),
            str(rounded["fcsa_mm2"]),
        ]
        if regions is None:
            cells.extend([""] * 6)
        else:
            cells.extend(f"{v:.1f}" for v in regions)
        cells.append(contour_ref)
        return cells


def _quant_doc(q: QuantResult) -> dict:
    return {
        "fat_percent": q.fat_percent,
        "tcsa_mm2": q.tcsa_mm2,
        "fcsa_mm2": q.fcsa_mm2,
        "pixel_count": q.pixel_count,
        "fat_pixel_sum": q.fat_pixel_sum,
        "threshold": q.threshold,
        "softness": q.softness,
    }


def _fragment_doc(f: FragmentResult) -> dict:
    return {
        "theta_deg": f.theta_deg,
        "side": f.side,
        "rotated_bounds": list(f.rotated_bounds),
        "total_fat_percent": f.total_fat_percent,
        "pixel_count": f.pixel_count,
        "regions": [
            {
                "label": r.label,
                "fat_percent_of_total": r.fat_percent_of_total,
                "pixel_count": r.pixel_count,
                "fat_pixel_sum": r.fat_pixel_sum,
            }
            for r in f.regions
        ],
    }


def _quant_from_doc(doc: dict) -> QuantResult:
    return QuantResult(
        fat_percent=doc["fat_percent"],
        tcsa_mm2=doc["tcsa_mm2"],
        fcsa_mm2=doc["fcsa_mm2"],
        pixel_count=doc["pixel_count"],
        fat_pixel_sum=doc["fat_pixel_sum"],
        threshold=doc["threshold"],
        softness=doc["softness"],
    )


def _fragment_from_doc(doc: dict) -> FragmentResult:
    return FragmentResult(
        regions=tuple(
            RegionFat(
                label=r["label"],
                fat_percent_of_total=r["fat_percent_of_total"],
                pixel_count=r["pixel_count"],
                fat_pixel_sum=r["fat_pixel_sum"],
            )
            for r in doc["regions"]
        ),
        theta_deg=doc["theta_deg"],
        side=doc["side"],
        rotated_bounds=tuple(doc["rotated_bounds"]),
        total_fat_percent=doc["total_fat_percent"],
        pixel_count=doc["pixel_count"],
    )


@dataclass
class ComparisonRow:
    slice_label: str
    side: str
    muscle_label: str
    total_fat_pre: float
    total_fat_post: float
    regions_pre: list[float] | None
    regions_post: list[float] | None

    @property
    def total_fat_delta(self) -> float:
        return round(self.total_fat_post - self.total_fat_pre, 10)

    def to_json(self) -> dict:
        return {
            "slice_label": self.slice_label,
            "side": self.side,
            "muscle_label": self.muscle_label,
            "total_fat_pre": self.total_fat_pre,
            "total_fat_post": self.total_fat_post,
            "total_fat_delta": self.total_fat_delta,
            "regions_pre": self.regions_pre,
            "regions_post": self.regions_post,
        }


class RecordStore:
    """CSV-backed append-only record store with JSON contour sidecars."""

    def __init__(self, root: str | Path, csv_name: str = "records.csv"):
        self.root = Path(root)
        self.csv_path = self.root / csv_name
        self.contour_dir = self.root / "contours"
        self.root.mkdir(parents=True, exist_ok=True)
        self.contour_dir.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()  # single-writer contract
        self._hashes: set[str] = set()
        if self.csv_path.exists():
            for row in self._read_rows():
                self._hashes.add(self._row_id(row))
        else:
            with self.csv_path.open("w", newline="") as fh:
                csv.writer(fh).writerow(CSV_COLUMNS)

    @staticmethod
    def _row_id(row: dict) -> str:
        ref = row["contour_ref"]
        return Path(ref).stem

    def _read_rows(self) -> list[dict]:
        with self.csv_path.open("r", newline="") as fh:
            return list(csv.DictReader(fh))

    def append(self, record: AnalysisRecord) -> str:
        """Durably append one record; returns its content-hash id."""
        with self._write_lock:
            record_id = record.content_hash()
            if record_id in self._hashes:
                raise DuplicateRecordError(f"record {record_id} already stored")
            contour_ref = f"contours/{record_id}.json"
            sidecar = {
                "record_id": record_id,
                "timestamp": record.timestamp,
                **record._content_doc(),
            }
            try:
                with (self.root / contour_ref).open("w") as fh:
                    json.dump(sidecar, fh)
                with self.csv_path.open("a", newline="") as fh:
                    csv.writer(fh).writerow(record.csv_row(contour_ref))
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"could not persist record: {exc}") from exc
            self._hashes.add(record_id)
            return record_id

    def __len__(self) -> int:
        return len(self._hashes)

    def records(self) -> list[AnalysisRecord]:
        """All stored records, reconstructed from row + sidecar."""
        out = []
        for row in self._read_rows():
            sidecar_path = self.root / row["contour_ref"]
            with sidecar_path.open() as fh:
                sidecar = json.load(fh)
            out.append(
                AnalysisRecord(
                    patient_id=row["patient_id"],
                    slice_label=row["slice_label"],
                    muscle_label=row["muscle_label"],
                    training_phase=row["training_phase"],
                    quant=_quant_from_doc(sidecar["quant"]),
                    contour=tuple((p[0], p[1]) for p in sidecar["contour"]),
                    fragment=_fragment_from_doc(sidecar["fragment"]) if "fragment" in sidecar else None,
                    timestamp=row["timestamp"],
                )
            )
        return out

    def rows(self) -> list[dict]:
        """Raw CSV rows (report-precision values) in append order."""
        return self._read_rows()

    def compare_phases(self, patient_id: str) -> tuple[list[ComparisonRow], list[str]]:
        """Pre/post comparison rows for one patient.

        Rows join on (slice_label, muscle_label) and echo the stored values
        unmodified; keys missing one phase are skipped and reported in the
        warning list. The latest record per phase wins.
        """
        by_key: dict[tuple, dict[str, dict]] = {}
        for row in self._read_rows():
            if row["patient_id"] != patient_id or row["training_phase"] not in ("pre", "post"):
                continue
            key = (row["slice_label"], row["muscle_label"])
            phase_slot = by_key.setdefault(key, {})
            existing = phase_slot.get(row["training_phase"])
            if existing is None or row["timestamp"] >= existing["timestamp"]:
                phase_slot[row["training_phase"]] = row

        rows, warnings = [], []
        for key in sorted(by_key):
            slice_label, muscle_label = key
            pair = by_key[key]
            if "pre" not in pair or "post" not in pair:
                missing = "post" if "pre" in pair else "pre"
                warnings.append(f"{slice_label}/{muscle_label}: missing {missing} record")
                continue
            pre, post = pair["pre"], pair["post"]
            rows.append(
                ComparisonRow(
                    slice_label=slice_label,
                    side=muscle_label.rsplit("-", 1)[1],
                    muscle_label=muscle_label,
                    total_fat_pre=float(pre["fat_percent"]),
                    total_fat_post=float(post["fat_percent"]),
                    regions_pre=_region_cells(pre),
                    regions_post=_region_cells(post),
                )
            )
        return rows, warnings


def _region_cells(row: dict) -> list[float] | None:
    cells = [row[f"r{i}_percent"] for i in range(1, 7)]
    if all(c == "" for c in cells):
        return None
    return [float(c) for c in cells]
