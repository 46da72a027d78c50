"""Single-level orthonormal 2D Haar analysis and synthesis on tensors.

Both directions go through the tape, so gradients flow through a
decomposition. Odd spatial extents are reflect-padded by one sample on the
trailing edge; the pad is remembered on the :class:`SubbandSet` and stripped
again by :func:`idwt2`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ShapeError
from .haar import BANDS


@dataclass
class SubbandSet:
    ll: ad.Tensor
    lh: ad.Tensor
    hl: ad.Tensor
    hh: ad.Tensor
    pad: tuple = (False, False)

    def __post_init__(self):
        shapes = [t.shape for t in self.bands()]
        if len(set(shapes)) != 1:
            raise ShapeError("SubbandSet", "subband shapes differ", shapes)

    def bands(self):
        return (self.ll, self.lh, self.hl, self.hh)

    def __getitem__(self, name):
        if name not in BANDS:
            raise KeyError(name)
        return getattr(self, name)

    def energy(self):
        """Sum of squares over all four subbands."""
        return float(sum(np.sum(t.data**2) for t in self.bands()))

    def detail_energy(self, name):
        return float(np.sum(self[name].data ** 2))


def dwt2(x):
    """Analyse ``x`` of shape (B, C, H, W) into four (B, C, ceil(H/2), ceil(W/2)) subbands."""
    x = ad.as_tensor(x)
    if x.shape[-2] == 0 or x.shape[-1] == 0:
        raise ShapeError("dwt2", "zero spatial extent", [x.shape])
    pad = (bool(x.shape[-2] % 2), bool(x.shape[-1] % 2))
    return SubbandSet(*(ad.dwt2_band(x, b) for b in BANDS), pad=pad)


def idwt2(s):
    """Exact inverse of :func:`dwt2`."""
    return ad.idwt2(s.ll, s.lh, s.hl, s.hh, pad=s.pad)


def energy(x):
    return float(np.sum(ad.as_tensor(x).data ** 2))
