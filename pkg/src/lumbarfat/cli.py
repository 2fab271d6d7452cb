"""Command line surface: batch analysis, classifier training, service runner.

`analyze` is the batch twin of the interactive Compute/Segment workflow:
same engine calls, same CSV rows. Errors print a machine-readable JSON
object and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import fragments, livewire, quantify, spine, store
from .errors import DetectionFailedError, LumbarFatError, ValidationError
from .raster import SliceMeta, histogram, load_image, otsu_threshold
from .service import ES_LABELS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lumbarfat")
    sub = parser.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="quantify fat inside a mask and append a record")
    an.add_argument("image", help="input PNG")
    an.add_argument("--sidecar", help="metadata JSON (default: <image>.meta.json when present)")
    an.add_argument("--mask", required=True, help="JSON array of [x, y] contour vertices, full resolution")
    an.add_argument("--label", required=True, choices=store.MUSCLE_LABELS)
    an.add_argument("--threshold", type=int, help="fat threshold level; defaults to whole-image Otsu")
    an.add_argument("--softness", type=float, default=quantify.SOFTNESS_DEFAULT)
    an.add_argument("--regions", type=int, help="region-wise fat over this many fragments (ES labels only)")
    an.add_argument("--phase", default="unspecified", choices=store.TRAINING_PHASES)
    an.add_argument("--patient", help="patient id override (default: from sidecar)")
    an.add_argument("--center", help="manual spinal-column center 'x,y' in image coordinates")
    an.add_argument("--psize", type=float, help="physical pixel area mm^2 override")
    an.add_argument("--model", help="classifier model JSON for detection fallback")
    an.add_argument("--out-csv", required=True, help="records CSV path or store directory")

    tr = sub.add_parser("train-spine-model", help="train the column classifier from a patch manifest")
    tr.add_argument("manifest", help="JSON list of {image, rect [x,y,w,h], label}")
    tr.add_argument("--out", required=True, help="output model JSON")
    tr.add_argument("--c", type=float, default=1.0, help="soft-margin penalty")
    tr.add_argument("--image-root", default=".", help="base directory for manifest image paths")

    sv = sub.add_parser("serve", help="run the local HTTP service")
    sv.add_argument("--port", type=int, default=int(os.environ.get("LUMBARFAT_PORT", "8720")))
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--data-dir", default=os.environ.get("LUMBARFAT_DATA_DIR", "./lumbarfat-data"))
    sv.add_argument("--model", default=os.environ.get("LUMBARFAT_MODEL"))

    return parser


def _fail(code: str, message: str) -> int:
    print(json.dumps({"error": code, "message": message}))
    return 1


def _load_inputs(args):
    image_path = Path(args.image)
    png = image_path.read_bytes()
    sidecar = None
    sidecar_path = Path(args.sidecar) if args.sidecar else image_path.with_suffix(image_path.suffix + ".meta.json")
    if sidecar_path.exists():
        sidecar = SliceMeta.from_json(sidecar_path.read_text())
    elif args.sidecar:
        raise ValidationError(f"sidecar {sidecar_path} not found")
    img = load_image(png, sidecar=sidecar)
    vertices = json.loads(Path(args.mask).read_text())
    mask = livewire.mask_from_polygon([(int(p[0]), int(p[1])) for p in vertices])
    return img, sidecar, mask


def cmd_analyze(args) -> int:
    img, sidecar, mask = _load_inputs(args)
    if mask.pixel_count == 0:
        raise ValidationError("mask encloses no pixels")

    threshold = args.threshold if args.threshold is not None else otsu_threshold(histogram(img))
    params = quantify.QuantParams(threshold=threshold, softness=args.softness)
    psize = args.psize if args.psize is not None else img.psize
    result = quantify.quantify(img, mask, params, psize=psize)

    frag = None
    if args.regions is not None:
        if args.label not in ES_LABELS:
            raise ValidationError("region-wise fat applies to ES labels only")
        if args.center:
            cx, cy = (float(v) for v in args.center.split(","))
            center = (cx, cy)
        else:
            try:
                found = spine.locate_by_cord(img)
            except DetectionFailedError:
                if not args.model:
                    raise
                found = spine.locate_by_classifier(img, spine.load_model(args.model))
            center = found.to_image_frame(img.width, img.height)
        frag = fragments.fragment(img, mask, center, params, n_regions=args.regions)

    patient_id = args.patient or (sidecar.patient_id if sidecar else None)
    if not patient_id:
        raise ValidationError("no patient id; pass --patient or provide a sidecar")

    out_csv = Path(args.out_csv)
    if out_csv.suffix == ".csv":
        record_store = store.RecordStore(out_csv.parent, csv_name=out_csv.name)
    else:
        record_store = store.RecordStore(out_csv)

    record = store.AnalysisRecord(
        patient_id=patient_id,
        slice_label=sidecar.slice_label if sidecar else "",
        muscle_label=args.label,
        training_phase=args.phase,
        quant=result,
        contour=tuple(mask.contour),
        fragment=frag,
    )
    record_id = record_store.append(record)

    out = result.to_json()
    out["record_id"] = record_id
    if frag is not None:
        out["fragment"] = frag.to_json()
    print(json.dumps(out))
    return 0


def cmd_train(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    root = Path(args.image_root)
    samples = []
    for entry in manifest:
        png = (root / entry["image"]).read_bytes()
        img = load_image(png)
        norm = spine.normalize_frame(img)
        x, y, w, h = entry["rect"]
        if (w, h) != (spine.PATCH_SIZE, spine.PATCH_SIZE):
            raise ValidationError(f"patch rect must be {spine.PATCH_SIZE}x{spine.PATCH_SIZE}, got {w}x{h}")
        patch = norm.pixels[y:y + h, x:x + w]
        label = +1 if entry["label"] == "positive" else -1
        samples.append(spine.PatchSample(patch=patch, label=label))
    samples = spine.augment_with_flips(samples)
    model = spine.train_svm(samples, c=args.c)
    spine.save_model(model, args.out)
    meta = model.training_meta
    print(json.dumps({"samples": len(samples), "iterations": meta["iterations"], "model": str(args.out)}))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir, model_path=args.model)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "train-spine-model":
            return cmd_train(args)
        if args.command == "serve":
            return cmd_serve(args)
    except LumbarFatError as exc:
        return _fail(type(exc).__name__.replace("Error", "").lower() or "error", str(exc))
    except FileNotFoundError as exc:
        return _fail("missing_file", str(exc))
    except json.JSONDecodeError as exc:
        return _fail("bad_json", str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
