"""Gated wavelet rectification block.

The block splits a feature map into Haar subbands, passes each subband through
its own conv3x3 -> batchnorm -> ReLU operator, multiplies it by one learnable
global scalar gate, resynthesises, and adds the result back onto the input::

    out = x + idwt2(w_ll * op_ll(LL), w_lh * op_lh(LH), w_hl * op_hl(HL), w_hh * op_hh(HH))

Gates are unconstrained scalars initialised to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import ContractError, ShapeError
from .haar import BANDS
from .wavelet import SubbandSet, dwt2, idwt2


@dataclass
class SubbandOperator:
    """conv3x3 (C -> C) + batchnorm + ReLU for one subband."""

    weight: ad.Parameter
    bias: ad.Parameter
    bn_scale: ad.Parameter
    bn_shift: ad.Parameter
    running_mean: np.ndarray
    running_var: np.ndarray

    def parameters(self):
        return [self.weight, self.bias, self.bn_scale, self.bn_shift]

    def __call__(self, x, mode):
        y = ad.conv3x3(x, self.weight.value, self.bias.value)
        y = batchnorm_affine(y, self, mode)
        return ad.relu(y)


def batchnorm_affine(y, holder, mode):
    """Batchnorm with learnable scale/shift; updates ``holder``'s running stats in train mode."""
    if mode == "train":
        mu = y.data.mean(axis=(0, 2, 3))
        var = y.data.var(axis=(0, 2, 3))
        n = y.data.shape[0] * y.data.shape[2] * y.data.shape[3]
        unbiased = var * n / max(n - 1, 1)
        m = ad.BN_MOMENTUM
        holder.running_mean = (1 - m) * holder.running_mean + m * mu
        holder.running_var = (1 - m) * holder.running_var + m * unbiased
    elif mode != "eval":
        raise ContractError(f"unknown mode {mode!r}; expected 'train' or 'eval'")
    z = ad.batchnorm(y, mode=mode, running_mean=holder.running_mean, running_var=holder.running_var)
    return ad.add(ad.mul(z, holder.bn_scale.value), holder.bn_shift.value)


@dataclass
class GwtParams:
    channels: int
    operators: dict
    gates: dict
    bypass: bool = False
    prefix: str = "gwt"

    def parameters(self):
        out = []
        for b in BANDS:
            out.extend(self.operators[b].parameters())
        out.extend(self.gates[b] for b in BANDS)
        return out

    def gate_values(self):
        return tuple(self.gates[b].value.item() for b in BANDS)

    def set_gates(self, values):
        for b, v in zip(BANDS, values):
            self.gates[b].assign(np.full((1, 1, 1, 1), float(v)))


def gwt_init(channels, seed, prefix="gwt"):
    """Fresh parameters: unit gates, U(-k, k) kernels with k = 1/sqrt(9*channels)."""
    if int(channels) < 1:
        raise ContractError(f"gwt_init: channels must be >= 1, got {channels}")
    channels = int(channels)
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(9 * channels)
    ops = {}
    for b in BANDS:
        name = f"{prefix}.{b}"
        ops[b] = SubbandOperator(
            weight=ad.Parameter(f"{name}.conv.w", rng.uniform(-bound, bound, size=(channels, channels, 3, 3))),
            bias=ad.Parameter(f"{name}.conv.b", np.zeros((1, channels, 1, 1))),
            bn_scale=ad.Parameter(f"{name}.bn.scale", np.ones((1, channels, 1, 1))),
            bn_shift=ad.Parameter(f"{name}.bn.shift", np.zeros((1, channels, 1, 1))),
            running_mean=np.zeros(channels),
            running_var=np.ones(channels),
        )
    gates = {b: ad.Parameter(f"{prefix}.gate.{b}", np.ones((1, 1, 1, 1))) for b in BANDS}
    return GwtParams(channels, ops, gates, prefix=prefix)


def rectified_feature(x, p, mode="train"):
    """The synthesised correction term (before the residual addition)."""
    x = ad.as_tensor(x)
    if x.shape[1] != p.channels:
        raise ShapeError("gwt_forward", f"expected {p.channels} channels", [x.shape])
    sub = dwt2(x)
    scaled = []
    for b in BANDS:
        band = sub[b] if p.bypass else p.operators[b](sub[b], mode)
        scaled.append(ad.gate_scale(band, p.gates[b].value))
    return idwt2(SubbandSet(*scaled, pad=sub.pad))


def gwt_forward(x, p, mode="train"):
    """Residual gated-wavelet rectification of a (B, C, H, W) feature map."""
    x = ad.as_tensor(x)
    return ad.add(x, rectified_feature(x, p, mode))


def gate_effect(x, p, band, factor):
    """Detail energy of ``band`` in dwt2(F_hat) before/after scaling its gate by ``factor``.

    Runs in eval mode without touching running statistics, and restores the gate.
    """
    if band not in BANDS:
        raise ContractError(f"unknown subband {band!r}; expected one of {BANDS}")
    if not factor > 0:
        raise ContractError(f"factor must be > 0, got {factor}")
    gate = p.gates[band]
    original = gate.value.data

    def band_energy():
        with ad.no_tape():
            return dwt2(rectified_feature(x, p, "eval")).detail_energy(band)

    before = band_energy()
    try:
        gate.assign(original * factor)
        after = band_energy()
    finally:
        gate.assign(original)
    return before, after
