"""MVTec-style directory layout and VisA ingestion.

A category directory looks like::

    <category>/train/good/*.png
    <category>/test/good/*.png
    <category>/test/<defect>/*.png
    <category>/ground_truth/<defect>/<stem>_mask.png

VisA is converted into the same layout by :func:`ingest_visa`.
"""

from __future__ import annotations

import csv
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import DataError
from .imagecore import list_images

GOOD = "good"


@dataclass
class TestItem:
    path: Path
    defect: str
    label: int
    mask_path: Path | None

    @property
    def name(self) -> str:
        return f"{self.defect}/{self.path.name}"


def train_dir(root) -> Path:
    """Accept either a category root or the image directory itself."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset directory not found: {root}")
    sub = root / "train" / GOOD
    d = sub if sub.is_dir() else root
    if not list_images(d):
        raise DataError(f"no training images in {d}")
    return d


def find_mask(gt_root: Path, defect: str, image: Path) -> Path | None:
    for cand in (gt_root / defect / f"{image.stem}_mask.png", gt_root / defect / f"{image.stem}.png"):
        if cand.is_file():
            return cand
    return None


def test_items(root, gt_root=None, require_masks: bool = True) -> list[TestItem]:
    """Enumerate the labelled test split of a category.

    Raises:
        DataError: missing test split, or (with ``require_masks``) an
            anomalous image without a ground-truth mask.
    """
    root = Path(root)
    test = root / "test" if (root / "test").is_dir() else root
    if not test.is_dir():
        raise DataError(f"test split not found under {root}")
    gt_root = Path(gt_root) if gt_root is not None else root / "ground_truth"
    items = []
    for defect_dir in sorted(p for p in test.iterdir() if p.is_dir()):
        defect = defect_dir.name
        for img in list_images(defect_dir):
            label = 0 if defect == GOOD else 1
            mask = None if label == 0 else find_mask(gt_root, defect, img)
            if label and mask is None and require_masks:
                raise DataError(f"no ground-truth mask for {defect}/{img.name} under {gt_root}")
            items.append(TestItem(img, defect, label, mask))
    if not items:
        raise DataError(f"no test images under {test}")
    return items


def _copy_image(src: Path, dst: Path) -> None:
    dst.parent.mkdir(parents=True, exist_ok=True)
    if src.suffix.lower() == dst.suffix.lower():
        shutil.copyfile(src, dst)
    else:
        with PILImage.open(src) as im:
            im.convert("RGB").save(dst)


def _binary_mask(src: Path, dst: Path) -> None:
    dst.parent.mkdir(parents=True, exist_ok=True)
    with PILImage.open(src) as im:
        arr = np.asarray(im.convert("L")) > 0
    PILImage.fromarray((arr * 255).astype(np.uint8)).save(dst)


def ingest_visa(src, out, test_normal_fraction: float = 0.1, seed: int = 0) -> list[str]:
    """Reorganise a VisA download into per-category MVTec-style directories.

    When ``split_csv/1cls.csv`` exists it decides the split.  Otherwise normal
    images are shuffled with ``seed``; ``test_normal_fraction`` of them go to
    ``test/good`` and the rest to ``train/good``, and every anomalous image is
    a test image.  Returns the category names written.
    """
    src, out = Path(src), Path(out)
    rows = []
    split_csv = src / "split_csv" / "1cls.csv"
    if split_csv.is_file():
        with open(split_csv) as fh:
            rows = list(csv.DictReader(fh))
    categories = []
    cat_dirs = sorted(p for p in src.iterdir() if (p / "Data" / "Images").is_dir())
    if not cat_dirs:
        raise DataError(f"no VisA categories (<cat>/Data/Images) under {src}")
    rng = np.random.default_rng(seed)
    for cat_dir in cat_dirs:
        cat = cat_dir.name
        dst = out / cat
        cat_rows = [r for r in rows if r.get("object") == cat]
        if cat_rows:
            plan = []
            for r in cat_rows:
                label = 0 if r["label"] == "normal" else 1
                plan.append((src / r["image"], r["split"], label, src / r["mask"] if r.get("mask") else None))
        else:
            normal = list_images(cat_dir / "Data" / "Images" / "Normal")
            anomaly = list_images(cat_dir / "Data" / "Images" / "Anomaly")
            order = rng.permutation(len(normal))
            n_test = int(round(test_normal_fraction * len(normal)))
            plan = [(normal[i], "test" if k < n_test else "train", 0, None) for k, i in enumerate(order)]
            mask_dir = cat_dir / "Data" / "Masks" / "Anomaly"
            plan += [(p, "test", 1, mask_dir / f"{p.stem}.png") for p in anomaly]
        for img, split, label, mask in plan:
            if split == "train":
                if label:
                    raise DataError(f"anomalous image {img} assigned to the train split")
                _copy_image(img, dst / "train" / GOOD / f"{img.stem}.png")
            else:
                defect = GOOD if label == 0 else "bad"
                _copy_image(img, dst / "test" / defect / f"{img.stem}.png")
                if label:
                    if mask is None or not mask.is_file():
                        raise DataError(f"missing mask for anomalous image {img}")
                    _binary_mask(mask, dst / "ground_truth" / defect / f"{img.stem}_mask.png")
        categories.append(cat)
    return categories
