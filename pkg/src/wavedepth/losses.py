"""Masked training objective: scale-invariant log loss, gradient matching,
edge-aware smoothness, and their weighted sum.

Depth rasters are rank-4 tensors ``(B, 1, H, W)``; 2-D arrays are promoted.
All reductions run over the pixels (or neighbouring-pixel pairs) selected by a
:class:`ValidMask`, pooled over the batch. Every function returns a scalar
:class:`~wavedepth.autodiff.Tensor` so it can sit at the root of a tape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ContractError, DomainError, EmptyMaskError, ShapeError

SMOOTH_MODES = ("image-weights", "eq8-literal")


@dataclass
class ValidMask:
    mask: np.ndarray
    d_min: float
    d_max: float

    @property
    def n(self):
        return int(self.mask.sum())

    def pairs_x(self):
        """Horizontal pairs with both endpoints valid."""
        return self.mask[..., 1:] & self.mask[..., :-1]

    def pairs_y(self):
        return self.mask[..., 1:, :] & self.mask[..., :-1, :]


@dataclass
class LossWeights:
    lambda_s: float = 0.5
    lambda_grad: float = 0.1
    lambda_smooth: float = 0.1

    def __post_init__(self):
        for k in ("lambda_s", "lambda_grad", "lambda_smooth"):
            v = float(getattr(self, k))
            if not np.isfinite(v) or v < 0:
                raise ContractError(f"{k} must be finite and >= 0, got {v}")
            setattr(self, k, v)


def _as4(x):
    return x.data if isinstance(x, ad.Tensor) else ad.as_tensor(x).data


def valid_mask(gt, d_min, d_max):
    """Pixels whose ground truth is positive and inside ``[d_min, d_max]``.

    Out-of-range pixels are excluded, never clamped.
    """
    d_min, d_max = float(d_min), float(d_max)
    if not (d_min > 0 and d_max > d_min):
        raise ContractError(f"need 0 < d_min < d_max, got [{d_min}, {d_max}]")
    g = _as4(gt)
    with np.errstate(invalid="ignore"):
        m = np.isfinite(g) & (g > 0) & (g >= d_min) & (g <= d_max)
    if not m.any():
        raise EmptyMaskError(f"no ground-truth pixel inside [{d_min}, {d_max}]; frame unusable")
    return ValidMask(m, d_min, d_max)


def _check(pred, gt, mask, name):
    if pred.shape != mask.mask.shape or (gt is not None and gt.shape != mask.mask.shape):
        shapes = [pred.shape, mask.mask.shape] + ([gt.shape] if gt is not None else [])
        raise ShapeError(name, "pred, gt and mask must share a shape", shapes)
    if mask.n == 0:
        raise EmptyMaskError(f"{name}: mask selects no pixels")


def _masked_mean(x, weights, count):
    """sum(x * weights) / count with ``weights`` a constant 0/1 array."""
    return ad.scale(ad.sum_(ad.mul(x, weights)), 1.0 / count)


def log_residual(pred, gt, mask):
    """log(pred) - log(gt) on valid pixels (0 elsewhere), as a tensor."""
    pred = ad.as_tensor(pred)
    g = _as4(gt)
    _check(pred, g, mask, "log_residual")
    m = mask.mask
    if np.any(pred.data[m] <= 0):
        raise DomainError("non-positive predicted depth on a valid pixel")
    # invalid pixels are replaced by 1 before the log so they can hold anything
    safe_pred = ad.add(ad.mul(pred, m.astype(float)), (~m).astype(float))
    log_gt = np.where(m, np.log(np.where(m, g, 1.0)), 0.0)
    return ad.sub(ad.log(safe_pred), log_gt)


def scale_invariant_loss(pred, gt, mask, lambda_s=0.5):
    """sqrt(mean(r^2)) - lambda_s * mean(r)^2 with r = log pred - log gt."""
    r = log_residual(pred, gt, mask)
    w = mask.mask.astype(float)
    n = mask.n
    first = ad.sqrt(_masked_mean(ad.mul(r, r), w, n))
    mr = _masked_mean(r, w, n)
    return ad.sub(first, ad.scale(ad.mul(mr, mr), lambda_s))


def scale_invariant_loss_rooted(pred, gt, mask, lambda_s=0.5):
    """Common SiLog variant: sqrt(mean(r^2) - lambda_s * mean(r)^2)."""
    r = log_residual(pred, gt, mask)
    w = mask.mask.astype(float)
    n = mask.n
    mr = _masked_mean(r, w, n)
    inner = ad.sub(_masked_mean(ad.mul(r, r), w, n), ad.scale(ad.mul(mr, mr), lambda_s))
    return ad.sqrt(inner)


def _pair_counts(mask, name):
    px, py = mask.pairs_x(), mask.pairs_y()
    nx, ny = int(px.sum()), int(py.sum())
    if nx == 0 and ny == 0:
        raise EmptyMaskError(f"{name}: no valid neighbouring pairs in either direction")
    return px, py, nx, ny


def gradient_matching_loss(pred, gt, mask):
    """Mean |dx pred - dx gt| over valid x-pairs plus the same along y.

    A direction without any valid pair contributes 0.
    """
    pred = ad.as_tensor(pred)
    g = ad.as_tensor(_as4(gt))
    _check(pred, g, mask, "gradient_matching_loss")
    px, py, nx, ny = _pair_counts(mask, "gradient_matching_loss")
    total = ad.as_tensor(0.0)
    if nx:
        dx = ad.sub(ad.diff_x(pred), np.where(px, ad.diff_x(g).data, 0.0))
        total = ad.add(total, _masked_mean(ad.absolute(dx), px.astype(float), nx))
    if ny:
        dy = ad.sub(ad.diff_y(pred), np.where(py, ad.diff_y(g).data, 0.0))
        total = ad.add(total, _masked_mean(ad.absolute(dy), py.astype(float), ny))
    return total


def smoothness_weights(pred, image, mask, mode="image-weights"):
    """Global edge weights (alpha_x, alpha_y), detached from the graph.

    ``image-weights``: exp(-mean |grad I_gray|) over the valid pairs.
    ``eq8-literal``: the same formula on the predicted depth instead.
    """
    if mode not in SMOOTH_MODES:
        raise ContractError(f"unknown smoothness mode {mode!r}; expected one of {SMOOTH_MODES}")
    px, py, nx, ny = _pair_counts(mask, "smoothness_loss")
    with ad.no_tape():
        if mode == "image-weights":
            img = ad.as_tensor(image)
            if img.shape[1] != 3:
                raise ShapeError("smoothness_loss", "image must be RGB", [img.shape])
            src = ad.grayscale(img).data
            if src.shape != mask.mask.shape:
                raise ShapeError("smoothness_loss", "image not aligned with depth", [img.shape, mask.mask.shape])
        else:
            src = _as4(pred)
        gx = np.abs(src[..., 1:] - src[..., :-1])
        gy = np.abs(src[..., 1:, :] - src[..., :-1, :])
    ax = float(np.exp(-gx[px].sum() / nx)) if nx else 1.0
    ay = float(np.exp(-gy[py].sum() / ny)) if ny else 1.0
    return ax, ay


def smoothness_loss(pred, image, mask, mode="image-weights", alphas=None):
    """alpha_x * mean|dx pred| + alpha_y * mean|dy pred| over valid pairs.

    ``alphas`` overrides the computed weights; since they are constants of the
    graph anyway, this is how a finite-difference check holds them fixed.
    """
    pred = ad.as_tensor(pred)
    _check(pred, None, mask, "smoothness_loss")
    ax, ay = smoothness_weights(pred, image, mask, mode) if alphas is None else alphas
    px, py, nx, ny = _pair_counts(mask, "smoothness_loss")
    total = ad.as_tensor(0.0)
    if nx:
        total = ad.add(total, ad.scale(_masked_mean(ad.absolute(ad.diff_x(pred)), px.astype(float), nx), ax))
    if ny:
        total = ad.add(total, ad.scale(_masked_mean(ad.absolute(ad.diff_y(pred)), py.astype(float), ny), ay))
    return total


def total_loss(pred, gt, image, mask, weights=None, mode="image-weights", alphas=None):
    """L_scale + lambda_grad * L_grad + lambda_smooth * L_smooth.

    Returns ``(total_tensor, breakdown)`` where ``breakdown`` holds plain floats
    under ``scale``, ``grad``, ``smooth`` and ``total``.
    """
    w = weights or LossWeights()
    ls = scale_invariant_loss(pred, gt, mask, w.lambda_s)
    lg = gradient_matching_loss(pred, gt, mask)
    lsm = smoothness_loss(pred, image, mask, mode, alphas)
    total = ad.add(ls, ad.add(ad.scale(lg, w.lambda_grad), ad.scale(lsm, w.lambda_smooth)))
    parts = {"scale": ls.item(), "grad": lg.item(), "smooth": lsm.item(), "total": total.item()}
    return total, parts
