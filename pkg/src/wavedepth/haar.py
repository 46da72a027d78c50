"""Array-level orthonormal Haar kernels.

Subband ``AB`` applies filter ``A`` along the vertical axis and ``B`` along
the horizontal axis, with low = [1, 1]/sqrt(2) and high = [1, -1]/sqrt(2).
For a 2x2 block [[a, b], [c, d]] this gives::

    LL = (a + b + c + d) / 2      LH = (a - b + c - d) / 2
    HL = (a + b - c - d) / 2      HH = (a - b - c + d) / 2

so LH responds to horizontal intensity change (vertical edges) and HL to
vertical change (horizontal edges).
"""

import numpy as np

BANDS = ("ll", "lh", "hl", "hh")


def analysis(x):
    """Split ``x[..., H, W]`` (H, W even) into the four subbands."""
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    s = a + d
    t = b + c
    u = a - d
    v = b - c
    return (0.5 * (s + t), 0.5 * (u - v), 0.5 * (u + v), 0.5 * (s - t))


def synthesis(ll, lh, hl, hh):
    """Inverse of :func:`analysis`; also its adjoint (the transform is orthonormal)."""
    h, w = ll.shape[-2:]
    out = np.empty(ll.shape[:-2] + (2 * h, 2 * w), dtype=np.float64)
    p = ll + hh
    q = ll - hh
    r = lh + hl
    s = hl - lh
    out[..., 0::2, 0::2] = 0.5 * (p + r)
    out[..., 0::2, 1::2] = 0.5 * (q + s)
    out[..., 1::2, 0::2] = 0.5 * (q - s)
    out[..., 1::2, 1::2] = 0.5 * (p - r)
    return out


def _mirror_source(n):
    # index copied into the pad slot: reflect for n >= 2, repeat for n == 1
    return n - 2 if n >= 2 else n - 1


def pad_trailing(x, pad_h, pad_w):
    """Reflect-pad one row and/or column on the trailing edge."""
    if pad_h:
        x = np.concatenate([x, x[..., [_mirror_source(x.shape[-2])], :]], axis=-2)
    if pad_w:
        x = np.concatenate([x, x[..., [_mirror_source(x.shape[-1])]]], axis=-1)
    return x


def pad_trailing_adjoint(g, pad_h, pad_w):
    """Adjoint of :func:`pad_trailing`: fold the pad slot back onto its source."""
    if pad_w:
        n = g.shape[-1] - 1
        out = g[..., :n].copy()
        out[..., _mirror_source(n)] += g[..., n]
        g = out
    if pad_h:
        n = g.shape[-2] - 1
        out = g[..., :n, :].copy()
        out[..., _mirror_source(n), :] += g[..., n, :]
        g = out
    return g
