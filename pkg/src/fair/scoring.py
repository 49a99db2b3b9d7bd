"""Pixel anomaly maps and threshold-free detection metrics.

The pixel score is ``mean_filter(k * A_color + A_gradient)`` where
``A_gradient = 1 - MSGMS(orig, restored)`` over a mean-pooling pyramid and
``A_color`` is the squared CIELAB chroma difference (lightness ignored).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.stats import rankdata

from .errors import UndefinedMetricError
from .imagecore import as_array, pyramid, to_gray, to_lab

# 170 on the [0, 255] intensity scale
GMS_C = 170.0 / 255.0**2
DEFAULT_K = 3e-4
DEFAULT_SMOOTH = 21
AUPRO_MAX_THRESHOLDS = 5000

PREWITT_X = np.array([[1.0, 0.0, -1.0], [1.0, 0.0, -1.0], [1.0, 0.0, -1.0]]) / 3.0
PREWITT_Y = PREWITT_X.T.copy()


@dataclass
class AnomalyMap:
    values: np.ndarray
    color: np.ndarray | None = None
    gradient: np.ndarray | None = None


@dataclass
class ScoringConfig:
    k: float = DEFAULT_K
    smooth_ks: int = DEFAULT_SMOOTH
    msgms_scales: int = 2
    use_color: bool = True
    use_gradient: bool = True


@dataclass
class EvalReport:
    image_auroc: float | None
    pixel_auroc: float | None
    aupro: float | None
    per_category: dict = field(default_factory=dict)

    def to_dict(self):
        return {"image_auroc": self.image_auroc, "pixel_auroc": self.pixel_auroc,
                "aupro": self.aupro, "per_category": self.per_category}


def gradient_magnitude(gray) -> np.ndarray:
    gray = as_array(gray)
    gx = ndimage.correlate(gray, PREWITT_X, mode="reflect")
    gy = ndimage.correlate(gray, PREWITT_Y, mode="reflect")
    return np.sqrt(gx**2 + gy**2)


def gms(a, b, c: float = GMS_C) -> np.ndarray:
    """Gradient magnitude similarity of two grayscale images, in (0, 1]."""
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    ma, mb = gradient_magnitude(a), gradient_magnitude(b)
    return (2.0 * ma * mb + c) / (ma * ma + mb * mb + c)


def msgms_map(orig, restored, scales: int = 2) -> np.ndarray:
    """``1 - MSGMS``: GMS averaged over the finest ``scales`` pyramid levels.

    Coarser GMS maps are upsampled back to full size by pixel replication.
    """
    ga, gb = to_gray(orig), to_gray(restored)
    if ga.shape != gb.shape:
        raise ValueError(f"shape mismatch: {ga.shape} vs {gb.shape}")
    pa, pb = pyramid(ga, scales), pyramid(gb, scales)
    total = np.zeros_like(ga)
    for level, (x, y) in enumerate(zip(pa, pb)):
        sim = gms(x, y)
        f = 2**level
        total += np.repeat(np.repeat(sim, f, axis=0), f, axis=1)
    return 1.0 - total / scales


def color_map(orig, restored) -> np.ndarray:
    """Squared difference of the CIELAB a and b channels (L excluded)."""
    lo, lr = to_lab(orig), to_lab(restored)
    return (lr.a - lo.a) ** 2 + (lr.b - lo.b) ** 2


def combine(a_color, a_gradient, k: float = DEFAULT_K, smooth_ks: int = DEFAULT_SMOOTH) -> AnomalyMap:
    a_color, a_gradient = as_array(a_color), as_array(a_gradient)
    if a_color.shape != a_gradient.shape:
        raise ValueError(f"shape mismatch: {a_color.shape} vs {a_gradient.shape}")
    if smooth_ks < 1 or smooth_ks % 2 == 0:
        raise ValueError(f"smoothing kernel size must be odd, got {smooth_ks}")
    raw = k * a_color + a_gradient
    values = ndimage.uniform_filter(raw, size=smooth_ks, mode="reflect")
    # uniform_filter's running sums can leave -1e-17 residue
    return AnomalyMap(np.maximum(values, 0.0), a_color, a_gradient)


def anomaly_map(orig, restored, config: ScoringConfig | None = None) -> AnomalyMap:
    """Full pixel-level score for an (original, restored) pair.

    Operand order matters for the color term's definition only through the
    Lab conversion of each side; both inputs must be sRGB in [0, 1].
    """
    config = config or ScoringConfig()
    orig, restored = as_array(orig), as_array(restored)
    shape = orig.shape[:2]
    a_grad = msgms_map(orig, restored, config.msgms_scales) if config.use_gradient else np.zeros(shape)
    a_col = color_map(orig, restored) if config.use_color else np.zeros(shape)
    return combine(a_col, a_grad, config.k, config.smooth_ks)


def image_score(amap) -> float:
    values = amap.values if isinstance(amap, AnomalyMap) else as_array(amap)
    if values.size == 0:
        raise ValueError("empty anomaly map")
    return float(values.max())


def auroc(scores, labels) -> float:
    """Rank-based ROC AUC; tied scores share the mean of their ranks."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs at least one positive and one negative")
    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _stack_maps(maps):
    return [m.values if isinstance(m, AnomalyMap) else as_array(m) for m in maps]


def pro_curve(maps, masks, max_thresholds: int = AUPRO_MAX_THRESHOLDS):
    """Global FPR and mean per-region overlap over a descending threshold sweep.

    A pixel is flagged at threshold ``t`` when its score is ``>= t``.  Regions
    are the 8-connected components of every ground-truth mask.  The sweep uses
    every distinct score when there are at most ``max_thresholds`` of them,
    otherwise quantile-spaced thresholds.  The curve starts at (0, 0).
    """
    maps = _stack_maps(maps)
    masks = [np.asarray(m).astype(bool) for m in masks]
    if len(maps) != len(masks):
        raise ValueError("maps and masks differ in count")
    structure = np.ones((3, 3), dtype=int)
    region_ids = []
    offset = 0
    for m in masks:
        lab, n = ndimage.label(m, structure=structure)
        region_ids.append(np.where(lab > 0, lab + offset, 0))
        offset += n
    n_regions = offset
    if n_regions == 0:
        raise UndefinedMetricError("AUPRO needs at least one anomalous region")
    scores = np.concatenate([s.ravel() for s in maps])
    regions = np.concatenate([r.ravel() for r in region_ids])
    neg = regions == 0
    n_neg = int(neg.sum())
    if n_neg == 0:
        raise UndefinedMetricError("AUPRO needs at least one normal pixel")
    region_size = np.bincount(regions, minlength=n_regions + 1).astype(np.float64)

    distinct = np.unique(scores)
    if distinct.size <= max_thresholds:
        thresholds = distinct[::-1]
    else:
        thresholds = np.unique(np.quantile(scores, np.linspace(0, 1, max_thresholds)))[::-1]
    # bucket each pixel into the highest threshold it clears
    asc = thresholds[::-1]
    bucket = np.searchsorted(asc, scores, side="right") - 1
    valid = bucket >= 0
    # descending index: 0 is the highest threshold
    desc = (asc.size - 1 - bucket)[valid]
    t_count = thresholds.size
    fp = np.cumsum(np.bincount(desc[neg[valid]], minlength=t_count))
    hits = np.zeros((t_count, n_regions + 1))
    pos = ~neg[valid]
    np.add.at(hits, (desc[pos], regions[valid][pos]), 1.0)
    hits = np.cumsum(hits, axis=0)[:, 1:]
    pro = (hits / region_size[1:]).mean(axis=1)
    fpr = fp / n_neg
    return np.concatenate([[0.0], fpr]), np.concatenate([[0.0], pro]), thresholds


def _integrate_to(x, y, limit):
    # x nondecreasing; trapezoid up to limit with linear interpolation at the cut
    keep = x <= limit
    xs, ys = x[keep], y[keep]
    if xs[-1] < limit and keep.size > keep.sum():
        i = int(np.argmax(~keep))
        x0, x1, y0, y1 = x[i - 1], x[i], y[i - 1], y[i]
        ys = np.append(ys, y0 + (y1 - y0) * (limit - x0) / (x1 - x0))
        xs = np.append(xs, limit)
    return float(np.trapezoid(ys, xs)) if hasattr(np, "trapezoid") else float(np.trapz(ys, xs))


def aupro(maps, masks, fpr_limit: float = 0.3, max_thresholds: int = AUPRO_MAX_THRESHOLDS) -> float:
    """Area under the PRO curve for FPR in ``[0, fpr_limit]``, divided by ``fpr_limit``."""
    if not 0 < fpr_limit <= 1:
        raise ValueError("fpr_limit must be in (0, 1]")
    fpr, pro, _ = pro_curve(maps, masks, max_thresholds)
    return _integrate_to(fpr, pro, fpr_limit) / fpr_limit


def pixel_auroc(maps, masks) -> float:
    maps = _stack_maps(maps)
    scores = np.concatenate([m.ravel() for m in maps])
    labels = np.concatenate([np.asarray(m).astype(bool).ravel() for m in masks])
    return auroc(scores, labels)
