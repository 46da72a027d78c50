"""Masked depth-evaluation metrics.

Nine metrics over valid pixels, with d the ground truth and p the prediction:

    abs_rel  mean |d - p| / d            rmse      sqrt(mean (d - p)^2)
    sq_rel   mean (d - p)^2 / d          rmse_log  sqrt(mean (log d - log p)^2)
    log10    mean |log10 d - log10 p|    silog     mean r^2 - (mean r)^2, r = log d - log p
    delta_k  fraction with max(d/p, p/d) < 1.25**k   (strict)

Reports keep the raw per-frame sums, so :func:`aggregate` pools pixels across
frames instead of averaging per-frame means.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError, EmptyMaskError, ShapeError

METRIC_FIELDS = ("abs_rel", "sq_rel", "rmse", "rmse_log", "log10", "silog", "delta1", "delta2", "delta3")
DELTA_BASE = 1.25

_SUM_KEYS = ("abs_rel", "sq_rel", "sq", "log_sq", "log10", "log", "d1", "d2", "d3")


@dataclass
class MetricsReport:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    log10: float
    silog: float
    delta1: float
    delta2: float
    delta3: float
    n_valid: int
    sums: dict = field(default_factory=dict, repr=False, compare=False)

    def as_dict(self):
        out = {k: getattr(self, k) for k in METRIC_FIELDS}
        out["n_valid"] = self.n_valid
        return out

    @classmethod
    def from_sums(cls, sums, n):
        if n < 1:
            raise EmptyMaskError("no valid pixels to report on")
        mean_log = sums["log"] / n
        return cls(
            abs_rel=sums["abs_rel"] / n,
            sq_rel=sums["sq_rel"] / n,
            rmse=float(np.sqrt(sums["sq"] / n)),
            rmse_log=float(np.sqrt(sums["log_sq"] / n)),
            log10=sums["log10"] / n,
            silog=sums["log_sq"] / n - mean_log**2,
            delta1=sums["d1"] / n,
            delta2=sums["d2"] / n,
            delta3=sums["d3"] / n,
            n_valid=int(n),
            sums=dict(sums),
        )


def _flat_valid(pred, gt, mask):
    p = np.asarray(getattr(pred, "data", pred), dtype=np.float64)
    g = np.asarray(getattr(gt, "data", gt), dtype=np.float64)
    m = np.asarray(getattr(mask, "mask", mask), dtype=bool)
    if p.size != m.size or g.size != m.size:
        raise ShapeError("compute_metrics", "pred, gt and mask must have equal size", [p.shape, g.shape, m.shape])
    m = m.reshape(-1)
    if not m.any():
        raise EmptyMaskError("compute_metrics: mask selects no pixels")
    p = p.reshape(-1)[m]
    g = g.reshape(-1)[m]
    if np.any(p <= 0) or np.any(g <= 0):
        raise DomainError("compute_metrics: non-positive depth on a valid pixel")
    return p, g


def compute_metrics(pred, gt, mask, median_scale=False):
    """Evaluate ``pred`` against ``gt`` over ``mask``.

    ``median_scale`` rescales the prediction by median(gt)/median(pred) first;
    it is a diagnostic and is off by default.
    """
    p, g = _flat_valid(pred, gt, mask)
    if median_scale:
        p = p * (np.median(g) / np.median(p))
    diff = g - p
    r = np.log(g) - np.log(p)
    ratio = np.maximum(g / p, p / g)
    sums = {
        "abs_rel": float(np.sum(np.abs(diff) / g)),
        "sq_rel": float(np.sum(diff**2 / g)),
        "sq": float(np.sum(diff**2)),
        "log_sq": float(np.sum(r**2)),
        "log10": float(np.sum(np.abs(np.log10(g) - np.log10(p)))),
        "log": float(np.sum(r)),
        "d1": float(np.sum(ratio < DELTA_BASE)),
        "d2": float(np.sum(ratio < DELTA_BASE**2)),
        "d3": float(np.sum(ratio < DELTA_BASE**3)),
    }
    return MetricsReport.from_sums(sums, p.size)


def aggregate(reports):
    """Pool per-frame reports, weighting each frame by its valid-pixel count."""
    reports = list(reports)
    if not reports:
        raise ContractError("aggregate: empty report list")
    total = {k: 0.0 for k in _SUM_KEYS}
    n = 0
    for rep in reports:
        if not rep.sums:
            raise ContractError("aggregate: report carries no accumulators")
        for k in _SUM_KEYS:
            total[k] += rep.sums[k]
        n += rep.n_valid
    return MetricsReport.from_sums(total, n)


def metrics_csv(rows, aggregate_row=None):
    """CSV text: one row per ``(frame_id, report)`` plus an optional aggregate row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("frame",) + METRIC_FIELDS + ("n_valid",))
    for fid, rep in rows:
        w.writerow([fid] + [repr(float(getattr(rep, k))) for k in METRIC_FIELDS] + [rep.n_valid])
    if aggregate_row is not None:
        w.writerow(["aggregate"] + [repr(float(getattr(aggregate_row, k))) for k in METRIC_FIELDS] + [aggregate_row.n_valid])
    return buf.getvalue()
