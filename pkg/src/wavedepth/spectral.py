"""Radially averaged power spectra and power-law slope fits.

A natural image's power spectrum falls off roughly as ``f**-alpha`` with alpha
near 2; blur steepens the decay and impulsive content (specular highlights)
bends the log-log curve. :func:`fit_power_law` reports both the slope and the
linearity (R^2) of that curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

MIN_SIDE = 32
MIN_BINS = 8
DEFAULT_BAND = (0.05, 0.45)


@dataclass
class SpectrumFit:
    alpha: float
    r2: float
    n_bins: int


def _as_gray(image):
    a = np.asarray(getattr(image, "data", image), dtype=np.float64)
    while a.ndim > 2 and a.shape[0] == 1:
        a = a[0]
    if a.ndim == 3 and a.shape[0] == 3:
        a = np.einsum("chw,c->hw", a, np.array([0.299, 0.587, 0.114]))
    if a.ndim != 2:
        raise ContractError(f"expected a single grayscale image, got shape {a.shape}")
    return a


def radial_power_spectrum(image, window=True):
    """Annulus-averaged power of the centred 2D spectrum.

    The image is mean-subtracted and, by default, multiplied by a separable
    Hann window. Returns ``(frequencies, power)`` for integer radii
    ``1 .. side//2`` in cycles per image side; the DC bin is dropped.
    """
    img = _as_gray(image)
    h, w = img.shape
    if h != w:
        raise ContractError(f"radial_power_spectrum needs a square image, got {h}x{w}")
    if h < MIN_SIDE:
        raise ContractError(f"radial_power_spectrum needs side >= {MIN_SIDE}, got {h}")
    x = img - img.mean()
    if window:
        hann = np.hanning(h)
        x = x * np.outer(hann, hann)
    spec = np.fft.fftshift(np.fft.fft2(x))
    power = spec.real**2 + spec.imag**2
    c = h // 2
    yy, xx = np.indices((h, w))
    radius = np.rint(np.hypot(yy - c, xx - c)).astype(int)
    nmax = h // 2
    sums = np.bincount(radius.ravel(), weights=power.ravel(), minlength=nmax + 1)
    counts = np.bincount(radius.ravel(), minlength=nmax + 1)
    freqs = np.arange(1, nmax + 1, dtype=np.float64)
    return freqs, sums[1 : nmax + 1] / counts[1 : nmax + 1]


def fit_power_law(frequencies, power, band=DEFAULT_BAND, nyquist=None):
    """Least-squares line through (log f, log P) inside ``band``.

    ``band`` is a pair of fractions of the Nyquist frequency (by default the
    largest supplied frequency). Bins with non-positive power are dropped.
    """
    f = np.asarray(frequencies, dtype=np.float64)
    p = np.asarray(power, dtype=np.float64)
    lo, hi = (float(b) for b in band)
    if not 0 <= lo < hi:
        raise ContractError(f"invalid band {band}")
    nyq = float(f.max()) if nyquist is None else float(nyquist)
    keep = (f >= lo * nyq) & (f <= hi * nyq) & (p > 0) & np.isfinite(p)
    n = int(keep.sum())
    if n < MIN_BINS:
        raise ContractError(f"only {n} usable bins in band {band}; need >= {MIN_BINS}")
    lx, ly = np.log(f[keep]), np.log(p[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return SpectrumFit(alpha=float(-slope), r2=float(min(max(r2, 0.0), 1.0)), n_bins=n)


def analyze(image, band=DEFAULT_BAND):
    f, p = radial_power_spectrum(image)
    return fit_power_law(f, p, band)


def corpus_report(images, band=DEFAULT_BAND):
    """One ``{"id", "alpha", "r2", "n_bins", "error"}`` row per image.

    ``images`` is a mapping or an iterable of ``(id, image)`` pairs. A failing
    image yields a row with NaN values and the error text instead of aborting.
    """
    items = images.items() if hasattr(images, "items") else images
    rows = []
    for image_id, img in items:
        try:
            fit = analyze(img, band)
        except (ContractError, ValueError) as exc:
            rows.append({"id": str(image_id), "alpha": float("nan"), "r2": float("nan"), "n_bins": 0, "error": str(exc)})
            continue
        rows.append({"id": str(image_id), "alpha": fit.alpha, "r2": fit.r2, "n_bins": fit.n_bins, "error": ""})
    if not rows:
        raise ContractError("corpus_report: no images")
    return rows
