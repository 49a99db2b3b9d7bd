"""Dataset-level evaluation of a trained detector and the report format."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import jsonschema
import numpy as np

from . import scoring
from .dataset import test_items
from .imagecore import load_image, load_mask, save_image

REPORT_SCHEMA = {
    "type": "object",
    "required": ["image_auroc", "pixel_auroc", "aupro", "per_category"],
    "properties": {
        "image_auroc": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "pixel_auroc": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "aupro": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "per_category": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["image_auroc", "pixel_auroc", "aupro"],
                "properties": {
                    "image_auroc": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                    "pixel_auroc": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                    "aupro": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                    "n_images": {"type": "integer", "minimum": 0},
                    "normal_mse": {"type": ["number", "null"], "minimum": 0},
                },
            },
        },
        "runs": {"type": "array"},
        "aggregate": {"type": "string"},
    },
}


def validate_report(data: dict) -> None:
    jsonschema.validate(data, REPORT_SCHEMA)


def evaluate_category(detector, root, gt_root=None, pixel: bool = True,
                      fpr_limit: float = 0.3, resize_input: bool = True):
    """Score every test image of a category.

    Returns ``(metrics, rows, outputs)``: the metric dict, per-image
    ``(name, image_score, label)`` rows, and the per-image inference results
    keyed by name.
    """
    items = test_items(root, gt_root, require_masks=pixel)
    rows, maps, masks, outputs, normal_err = [], [], [], {}, []
    for item in items:
        img = detector.prepare(load_image(item.path), resize_input)
        res = detector.infer(img, resize_input=False)
        rows.append((item.name, res.image_score, item.label))
        outputs[item.name] = (img, res)
        if item.label == 0:
            normal_err.append(float(np.mean((res.restored - img) ** 2)))
        if pixel:
            maps.append(res.anomaly_map.values)
            if item.mask_path is None:
                masks.append(np.zeros(img.shape[:2], dtype=bool))
            else:
                masks.append(load_mask(item.mask_path, size=img.shape[:2]))
    scores = [r[1] for r in rows]
    labels = [r[2] for r in rows]
    metrics = {
        "image_auroc": scoring.auroc(scores, labels),
        "pixel_auroc": scoring.pixel_auroc(maps, masks) if pixel else None,
        "aupro": scoring.aupro(maps, masks, fpr_limit) if pixel else None,
        "n_images": len(rows),
        "normal_mse": float(np.mean(normal_err)) if normal_err else None,
    }
    return metrics, rows, outputs


def aggregate(reports: list[dict], how: str = "mean") -> dict:
    """Combine per-run reports metric by metric."""
    fn = {"mean": np.mean, "median": np.median}[how]

    def combine(values):
        values = [v for v in values if v is not None]
        return float(fn(values)) if values else None

    out = {k: combine([r[k] for r in reports]) for k in ("image_auroc", "pixel_auroc", "aupro")}
    cats = sorted({c for r in reports for c in r["per_category"]})
    out["per_category"] = {}
    for c in cats:
        entries = [r["per_category"][c] for r in reports if c in r["per_category"]]
        out["per_category"][c] = {k: combine([e.get(k) for e in entries])
                                  for k in ("image_auroc", "pixel_auroc", "aupro", "normal_mse")}
    out["runs"] = reports
    out["aggregate"] = how
    return out


def write_scores_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "image_score", "label"])
        for name, score, label in rows:
            w.writerow([name, f"{score:.10g}", label])


def write_report(path, report: dict) -> None:
    validate_report(report)
    Path(path).write_text(json.dumps(report, indent=2))


def save_maps(directory, outputs: dict, overlay_fn) -> list[Path]:
    """Write raw ``.npy`` maps, restored images and display overlays."""
    directory = Path(directory)
    written = []
    for name, (img, res) in outputs.items():
        stem = name.replace("/", "__").rsplit(".", 1)[0]
        raw = directory / f"{stem}_map.npy"
        raw.parent.mkdir(parents=True, exist_ok=True)
        np.save(raw, res.anomaly_map.values)
        rest = directory / f"{stem}_restored.png"
        save_image(rest, res.restored)
        over = directory / f"{stem}_overlay.png"
        save_image(over, overlay_fn(img, res.anomaly_map.values))
        written += [raw, rest, over]
    return written
