"""Rank-4 float64 tensors with a recorded tape for reverse-mode gradients.

Every value is a ``(batch, channel, height, width)`` grid. Token sequences are
stored as ``(batch, 1, tokens, dim)`` so that matrix products act over the last
two extents. Operators are registered in :data:`OPS` as a forward/backward
pair; :func:`forward_op` runs the forward kernel and, when a :class:`Tape` is
active, records a node holding the operands and whatever the backward kernel
needs. Each backward kernel's saved values are noted next to it.

Broadcasting is limited to what the model needs: elementwise binary operators
accept operands whose extents are either equal or 1, and matrix products
broadcast their leading two extents.
"""

from __future__ import annotations

import contextvars
from dataclasses import dataclass, field

import numpy as np

from . import haar
from .errors import ContractError, DomainError, ShapeError

_ACTIVE_TAPE = contextvars.ContextVar("wavedepth_active_tape", default=None)


class Tensor:
    """Dense rank-4 grid of 64-bit floats."""

    __slots__ = ("data", "requires_grad", "param", "__weakref__")

    def __init__(self, data, requires_grad=False, param=None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 4:
            raise ShapeError("tensor", "expected 4 extents", [arr.shape])
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.param = param

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, float(other))
        return mul(self, as_tensor(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x):
    """Wrap arrays and scalars; pass tensors through untouched.

    Arrays with fewer than four extents are left-padded with unit extents, so a
    ``(H, W)`` raster becomes ``(1, 1, H, W)``.
    """
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim > 4:
        raise ShapeError("as_tensor", "more than 4 extents", [arr.shape])
    return Tensor(arr.reshape((1,) * (4 - arr.ndim) + arr.shape))


@dataclass
class Parameter:
    """A named tensor that the optimizer may update.

    ``name`` is a dotted path (``"enc.block1.attn.q.w"``) used by freeze masks,
    gradient maps and checkpoints.
    """

    name: str
    value: Tensor
    trainable: bool = True

    def __post_init__(self):
        if not isinstance(self.value, Tensor):
            self.value = as_tensor(self.value)
        self.value.param = self
        self.value.requires_grad = self.trainable

    def set_trainable(self, flag):
        self.trainable = bool(flag)
        self.value.requires_grad = self.trainable

    def assign(self, array):
        # swap the array rather than writing in place: saved forward values stay valid
        arr = np.asarray(array, dtype=np.float64)
        if arr.shape != self.value.shape:
            raise ShapeError("assign", f"shape change for {self.name}", [self.value.shape, arr.shape])
        self.value.data = arr

    @property
    def data(self):
        return self.value.data

    @property
    def shape(self):
        return self.value.shape


@dataclass
class Node:
    kind: str
    inputs: tuple
    output: Tensor
    saved: dict
    attrs: dict


@dataclass
class Tape:
    """Ordered record of operations; use as a context manager to activate."""

    nodes: list = field(default_factory=list)
    adjoints: dict = field(default_factory=dict)
    _token: object = None

    def __enter__(self):
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None
        return False

    def record(self, node):
        self.nodes.append(node)

    def adjoint(self, tensor):
        """Adjoint of ``tensor`` from the last :func:`backward` (zeros if unreached)."""
        g = self.adjoints.get(id(tensor))
        return np.zeros(tensor.shape) if g is None else g


def active_tape():
    return _ACTIVE_TAPE.get()


class no_tape:
    """Context manager that suspends recording (used for detached statistics)."""

    def __enter__(self):
        self._token = _ACTIVE_TAPE.set(None)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPE.reset(self._token)
        return False


# ---------------------------------------------------------------------------
# operator registry


OPS = {}


def register(kind):
    def deco(pair_cls):
        OPS[kind] = pair_cls
        return pair_cls

    return deco


def forward_op(kind, inputs, **attrs):
    """Run operator ``kind`` on ``inputs`` and record it on the active tape."""
    try:
        op = OPS[kind]
    except KeyError:
        raise ContractError(f"unknown operator {kind!r}") from None
    inputs = tuple(as_tensor(t) for t in inputs)
    if len(inputs) != op.arity:
        raise ContractError(f"{kind}: expected {op.arity} operands, got {len(inputs)}")
    out_data, saved = op.forward(*(t.data for t in inputs), **attrs)
    needs_grad = any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=needs_grad)
    tape = _ACTIVE_TAPE.get()
    if tape is not None and needs_grad:
        tape.record(Node(kind, inputs, out, saved, attrs))
    return out


def _unbroadcast(g, shape):
    if g.shape == tuple(shape):
        return g
    axes = tuple(i for i, (a, b) in enumerate(zip(g.shape, shape)) if b == 1 and a != 1)
    return g.sum(axis=axes, keepdims=True)


def _check_broadcast(kind, a, b):
    for x, y in zip(a.shape, b.shape):
        if x != y and x != 1 and y != 1:
            raise ShapeError(kind, "extents must match or be 1", [a.shape, b.shape])


@register("add")
class _Add:
    arity = 2

    @staticmethod
    def forward(a, b):
        _check_broadcast("add", a, b)
        return a + b, {"shapes": (a.shape, b.shape)}  # saves operand shapes only

    @staticmethod
    def backward(g, saved):
        sa, sb = saved["shapes"]
        return _unbroadcast(g, sa), _unbroadcast(g, sb)


@register("sub")
class _Sub:
    arity = 2

    @staticmethod
    def forward(a, b):
        _check_broadcast("sub", a, b)
        return a - b, {"shapes": (a.shape, b.shape)}

    @staticmethod
    def backward(g, saved):
        sa, sb = saved["shapes"]
        return _unbroadcast(g, sa), -_unbroadcast(g, sb)


@register("mul")
class _Mul:
    arity = 2

    @staticmethod
    def forward(a, b):
        _check_broadcast("mul", a, b)
        return a * b, {"a": a, "b": b}  # both operands

    @staticmethod
    def backward(g, saved):
        a, b = saved["a"], saved["b"]
        return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)


@register("scale")
class _Scale:
    arity = 1

    @staticmethod
    def forward(a, factor):
        return a * factor, {}

    @staticmethod
    def backward(g, saved, factor):
        return (g * factor,)


@register("matmul")
class _Matmul:
    arity = 2

    @staticmethod
    def forward(a, b):
        if a.shape[-1] != b.shape[-2]:
            raise ShapeError("matmul", "inner extents differ", [a.shape, b.shape])
        for x, y in zip(a.shape[:2], b.shape[:2]):
            if x != y and x != 1 and y != 1:
                raise ShapeError("matmul", "leading extents must match or be 1", [a.shape, b.shape])
        return np.matmul(a, b), {"a": a, "b": b}

    @staticmethod
    def backward(g, saved):
        a, b = saved["a"], saved["b"]
        ga = np.matmul(g, np.swapaxes(b, -1, -2))
        gb = np.matmul(np.swapaxes(a, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)


def _im2col3x3(x):
    b, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    cols = np.empty((b, c, 9, h, w))
    for k in range(9):
        dy, dx = divmod(k, 3)
        cols[:, :, k] = xp[:, :, dy : dy + h, dx : dx + w]
    return cols


@register("conv3x3")
class _Conv3x3:
    """Stride 1, zero padding 1. Kernel ``(out, in, 3, 3)``, bias ``(1, out, 1, 1)``."""

    arity = 3

    @staticmethod
    def forward(x, w, bias):
        if w.shape[1:] != (x.shape[1], 3, 3) or bias.shape != (1, w.shape[0], 1, 1):
            raise ShapeError("conv3x3", "kernel/bias do not fit input channels", [x.shape, w.shape, bias.shape])
        cols = _im2col3x3(x)
        wk = w.reshape(w.shape[0], w.shape[1], 9)
        out = np.einsum("bckhw,ock->bohw", cols, wk, optimize=True) + bias
        return out, {"cols": cols, "w": w}  # unfolded input and kernel

    @staticmethod
    def backward(g, saved):
        cols, w = saved["cols"], saved["w"]
        wk = w.reshape(w.shape[0], w.shape[1], 9)
        gw = np.einsum("bohw,bckhw->ock", g, cols, optimize=True).reshape(w.shape)
        gb = g.sum(axis=(0, 2, 3), keepdims=True)
        gcols = np.einsum("bohw,ock->bckhw", g, wk, optimize=True)
        b, c, _, h, wd = gcols.shape
        gxp = np.zeros((b, c, h + 2, wd + 2))
        for k in range(9):
            dy, dx = divmod(k, 3)
            gxp[:, :, dy : dy + h, dx : dx + wd] += gcols[:, :, k]
        return gxp[:, :, 1:-1, 1:-1], gw, gb


@register("relu")
class _Relu:
    arity = 1

    @staticmethod
    def forward(x):
        pos = x > 0
        return np.where(pos, x, 0.0), {"pos": pos, "x": x}  # sign mask (x kept for kink checks)

    @staticmethod
    def backward(g, saved):
        return (g * saved["pos"],)


@register("softplus")
class _Softplus:
    arity = 1

    @staticmethod
    def forward(x):
        return np.logaddexp(0.0, x), {"x": x}

    @staticmethod
    def backward(g, saved):
        x = saved["x"]
        return (g * np.exp(-np.logaddexp(0.0, -x)),)


@register("log")
class _Log:
    arity = 1

    @staticmethod
    def forward(x):
        if np.any(x <= 0):
            raise DomainError(f"log: {int(np.sum(x <= 0))} non-positive element(s), min {x.min():.6g}")
        return np.log(x), {"x": x}

    @staticmethod
    def backward(g, saved):
        return (g / saved["x"],)


@register("abs")
class _Abs:
    arity = 1

    @staticmethod
    def forward(x):
        return np.abs(x), {"x": x}

    @staticmethod
    def backward(g, saved):
        # sign(0) = 0: subgradient at the kink is 0
        return (g * np.sign(saved["x"]),)


def _axes(axes):
    return (0, 1, 2, 3) if axes is None else tuple(sorted(a % 4 for a in axes))


@register("sum")
class _Sum:
    arity = 1

    @staticmethod
    def forward(x, axes=None):
        return x.sum(axis=_axes(axes), keepdims=True), {"shape": x.shape}

    @staticmethod
    def backward(g, saved, axes=None):
        return (np.broadcast_to(g, saved["shape"]).copy(),)


@register("mean")
class _Mean:
    arity = 1

    @staticmethod
    def forward(x, axes=None):
        ax = _axes(axes)
        count = int(np.prod([x.shape[a] for a in ax]))
        if count == 0:
            raise ShapeError("mean", "reduction over zero elements", [x.shape])
        return x.mean(axis=ax, keepdims=True), {"shape": x.shape, "count": count}

    @staticmethod
    def backward(g, saved, axes=None):
        return (np.broadcast_to(g / saved["count"], saved["shape"]).copy(),)


@register("sqrt")
class _Sqrt:
    arity = 1

    @staticmethod
    def forward(x):
        if np.any(x < 0):
            raise DomainError(f"sqrt: negative input, min {x.min():.6g}")
        out = np.sqrt(x)
        return out, {"out": out}

    @staticmethod
    def backward(g, saved):
        out = saved["out"]
        safe = np.where(out > 0, out, 1.0)
        # derivative at exactly 0 is taken as 0 (e.g. a zero loss at the optimum)
        return (np.where(out > 0, g / (2.0 * safe), 0.0),)


@register("layernorm")
class _LayerNorm:
    """Normalize over the last extent; affine terms are applied separately."""

    arity = 1

    @staticmethod
    def forward(x, eps=1e-5):
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + eps)
        y = (x - mu) * inv
        return y, {"y": y, "inv": inv}  # normalized output and inverse std

    @staticmethod
    def backward(g, saved, eps=1e-5):
        y, inv = saved["y"], saved["inv"]
        gm = g.mean(axis=-1, keepdims=True)
        gym = (g * y).mean(axis=-1, keepdims=True)
        return (inv * (g - gm - y * gym),)


BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@register("batchnorm")
class _BatchNorm:
    """Per-channel normalization over (batch, height, width).

    ``mode="train"`` uses batch statistics (biased variance) and needs batch >= 2;
    ``mode="eval"`` uses the supplied running statistics. Affine terms are
    applied separately.
    """

    arity = 1

    @staticmethod
    def forward(x, mode="train", running_mean=None, running_var=None, eps=BN_EPS):
        if mode == "train":
            if x.shape[0] < 2:
                raise ShapeError("batchnorm", "train mode needs batch >= 2", [x.shape])
            mu = x.mean(axis=(0, 2, 3), keepdims=True)
            var = x.var(axis=(0, 2, 3), keepdims=True)
        elif mode == "eval":
            mu = np.asarray(running_mean, dtype=np.float64).reshape(1, -1, 1, 1)
            var = np.asarray(running_var, dtype=np.float64).reshape(1, -1, 1, 1)
        else:
            raise ContractError(f"batchnorm: unknown mode {mode!r}")
        if mu.shape[1] != x.shape[1]:
            raise ShapeError("batchnorm", "statistics do not match channels", [x.shape, mu.shape])
        inv = 1.0 / np.sqrt(var + eps)
        y = (x - mu) * inv
        return y, {"y": y, "inv": inv}  # normalized output and inverse std

    @staticmethod
    def backward(g, saved, mode="train", **_):
        y, inv = saved["y"], saved["inv"]
        if mode == "eval":
            return (g * inv,)
        gm = g.mean(axis=(0, 2, 3), keepdims=True)
        gym = (g * y).mean(axis=(0, 2, 3), keepdims=True)
        return (inv * (g - gm - y * gym),)


@register("softmax")
class _Softmax:
    arity = 1

    @staticmethod
    def forward(x):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=-1, keepdims=True)
        return y, {"y": y}

    @staticmethod
    def backward(g, saved):
        y = saved["y"]
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)


@register("diff_x")
class _DiffX:
    """Forward difference along width; output width is ``W - 1``."""

    arity = 1

    @staticmethod
    def forward(x):
        if x.shape[-1] < 2:
            raise ShapeError("diff_x", "width must be >= 2", [x.shape])
        return x[..., 1:] - x[..., :-1], {"shape": x.shape}

    @staticmethod
    def backward(g, saved):
        gx = np.zeros(saved["shape"])
        gx[..., 1:] += g
        gx[..., :-1] -= g
        return (gx,)


@register("diff_y")
class _DiffY:
    """Forward difference along height; output height is ``H - 1``."""

    arity = 1

    @staticmethod
    def forward(x):
        if x.shape[-2] < 2:
            raise ShapeError("diff_y", "height must be >= 2", [x.shape])
        return x[..., 1:, :] - x[..., :-1, :], {"shape": x.shape}

    @staticmethod
    def backward(g, saved):
        gx = np.zeros(saved["shape"])
        gx[..., 1:, :] += g
        gx[..., :-1, :] -= g
        return (gx,)


GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])


@register("grayscale")
class _Grayscale:
    arity = 1

    @staticmethod
    def forward(x):
        if x.shape[1] != 3:
            raise ShapeError("grayscale", "expected 3 channels", [x.shape])
        return np.einsum("bchw,c->bhw", x, GRAY_WEIGHTS)[:, None], {}

    @staticmethod
    def backward(g, saved):
        return (g * GRAY_WEIGHTS.reshape(1, 3, 1, 1),)


def _pad_flags(shape):
    return bool(shape[-2] % 2), bool(shape[-1] % 2)


@register("dwt2")
class _Dwt2:
    """One subband (``band`` in ll/lh/hl/hh) of the single-level Haar analysis.

    Odd extents are reflect-padded by one on the trailing edge first.
    """

    arity = 1

    @staticmethod
    def forward(x, band):
        if x.shape[-2] == 0 or x.shape[-1] == 0:
            raise ShapeError("dwt2", "zero spatial extent", [x.shape])
        ph, pw = _pad_flags(x.shape)
        bands = haar.analysis(haar.pad_trailing(x, ph, pw))
        return bands[haar.BANDS.index(band)], {"pad": (ph, pw)}  # pad flags only (linear)

    @staticmethod
    def backward(g, saved, band):
        parts = [np.zeros_like(g)] * 4
        parts[haar.BANDS.index(band)] = g
        return (haar.pad_trailing_adjoint(haar.synthesis(*parts), *saved["pad"]),)


@register("idwt2")
class _Idwt2:
    """Haar synthesis from (ll, lh, hl, hh); ``pad`` strips a recorded trailing pad."""

    arity = 4

    @staticmethod
    def forward(ll, lh, hl, hh, pad=(False, False)):
        if not (ll.shape == lh.shape == hl.shape == hh.shape):
            raise ShapeError("idwt2", "subband shapes differ", [ll.shape, lh.shape, hl.shape, hh.shape])
        out = haar.synthesis(ll, lh, hl, hh)
        h, w = out.shape[-2:]
        return out[..., : h - int(pad[0]), : w - int(pad[1])], {"full": out.shape}

    @staticmethod
    def backward(g, saved, pad=(False, False)):
        full = np.zeros(saved["full"])
        full[..., : g.shape[-2], : g.shape[-1]] = g
        return haar.analysis(full)


@register("gate_scale")
class _GateScale:
    """Multiply a whole subband by one scalar gate of shape (1, 1, 1, 1)."""

    arity = 2

    @staticmethod
    def forward(x, gate):
        if gate.shape != (1, 1, 1, 1):
            raise ShapeError("gate_scale", "gate must be a scalar", [x.shape, gate.shape])
        return x * gate, {"x": x, "gate": gate}

    @staticmethod
    def backward(g, saved):
        return g * saved["gate"], np.sum(g * saved["x"]).reshape(1, 1, 1, 1)


@register("reshape")
class _Reshape:
    arity = 1

    @staticmethod
    def forward(x, shape):
        if len(shape) != 4 or int(np.prod(shape)) != x.size:
            raise ShapeError("reshape", f"cannot view as {tuple(shape)}", [x.shape])
        return x.reshape(shape), {"shape": x.shape}

    @staticmethod
    def backward(g, saved, shape):
        return (g.reshape(saved["shape"]),)


@register("permute")
class _Permute:
    arity = 1

    @staticmethod
    def forward(x, axes):
        if sorted(axes) != [0, 1, 2, 3]:
            raise ShapeError("permute", f"invalid axes {axes}", [x.shape])
        return np.transpose(x, axes), {}

    @staticmethod
    def backward(g, saved, axes):
        return (np.transpose(g, np.argsort(axes)),)


@register("patchify")
class _Patchify:
    """``(B, C, H, W)`` image to ``(B, 1, K, C*p*p)`` non-overlapping patch rows."""

    arity = 1

    @staticmethod
    def forward(x, patch):
        b, c, h, w = x.shape
        if h % patch or w % patch:
            raise ShapeError("patchify", f"extents not divisible by patch {patch}", [x.shape])
        gh, gw = h // patch, w // patch
        t = x.reshape(b, c, gh, patch, gw, patch).transpose(0, 2, 4, 1, 3, 5)
        return t.reshape(b, 1, gh * gw, c * patch * patch), {"shape": x.shape}

    @staticmethod
    def backward(g, saved, patch):
        b, c, h, w = saved["shape"]
        gh, gw = h // patch, w // patch
        t = g.reshape(b, gh, gw, c, patch, patch).transpose(0, 3, 1, 4, 2, 5)
        return (t.reshape(b, c, h, w),)


def _interp_matrix(n, mode):
    """Linear map from length ``n`` to ``2n`` (half-pixel centers, edge clamped)."""
    m = np.zeros((2 * n, n))
    if mode == "nearest":
        m[np.arange(2 * n), np.arange(2 * n) // 2] = 1.0
        return m
    src = (np.arange(2 * n) + 0.5) / 2.0 - 0.5
    src = np.clip(src, 0.0, n - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n - 1)
    frac = src - lo
    np.add.at(m, (np.arange(2 * n), lo), 1.0 - frac)
    np.add.at(m, (np.arange(2 * n), hi), frac)
    return m


@register("upsample2x")
class _Upsample2x:
    """Double height and width, ``mode`` nearest or bilinear."""

    arity = 1

    @staticmethod
    def forward(x, mode="nearest"):
        if mode not in ("nearest", "bilinear"):
            raise ContractError(f"upsample2x: unknown mode {mode!r}")
        my = _interp_matrix(x.shape[-2], mode)
        mx = _interp_matrix(x.shape[-1], mode)
        return my @ x @ mx.T, {"my": my, "mx": mx}  # the two interpolation matrices

    @staticmethod
    def backward(g, saved, mode="nearest"):
        return (saved["my"].T @ g @ saved["mx"],)


# ---------------------------------------------------------------------------
# functional wrappers


def add(a, b):
    return forward_op("add", (a, b))


def sub(a, b):
    return forward_op("sub", (a, b))


def mul(a, b):
    return forward_op("mul", (a, b))


def scale(a, factor):
    return forward_op("scale", (a,), factor=float(factor))


def matmul(a, b):
    return forward_op("matmul", (a, b))


def conv3x3(x, w, b):
    return forward_op("conv3x3", (x, w, b))


def relu(x):
    return forward_op("relu", (x,))


def softplus(x):
    return forward_op("softplus", (x,))


def log(x):
    return forward_op("log", (x,))


def absolute(x):
    return forward_op("abs", (x,))


def sum_(x, axes=None):
    return forward_op("sum", (x,), axes=axes)


def mean(x, axes=None):
    return forward_op("mean", (x,), axes=axes)


def sqrt(x):
    return forward_op("sqrt", (x,))


def layernorm(x, eps=1e-5):
    return forward_op("layernorm", (x,), eps=eps)


def batchnorm(x, mode="train", running_mean=None, running_var=None, eps=BN_EPS):
    return forward_op("batchnorm", (x,), mode=mode, running_mean=running_mean, running_var=running_var, eps=eps)


def softmax(x):
    return forward_op("softmax", (x,))


def diff_x(x):
    return forward_op("diff_x", (x,))


def diff_y(x):
    return forward_op("diff_y", (x,))


def grayscale(x):
    return forward_op("grayscale", (x,))


def dwt2_band(x, band):
    return forward_op("dwt2", (x,), band=band)


def idwt2(ll, lh, hl, hh, pad=(False, False)):
    return forward_op("idwt2", (ll, lh, hl, hh), pad=tuple(bool(p) for p in pad))


def gate_scale(x, gate):
    return forward_op("gate_scale", (x, gate))


def reshape(x, shape):
    return forward_op("reshape", (x,), shape=tuple(int(s) for s in shape))


def permute(x, axes):
    return forward_op("permute", (x,), axes=tuple(int(a) for a in axes))


def patchify(x, patch):
    return forward_op("patchify", (x,), patch=int(patch))


def upsample2x(x, mode="nearest"):
    return forward_op("upsample2x", (x,), mode=mode)


# ---------------------------------------------------------------------------
# reverse pass


def backward(tape, root):
    """Accumulate adjoints of ``root`` through ``tape``.

    Returns ``{parameter name: gradient array}`` for every trainable parameter
    reached. Frozen parameters never appear. Adjoints of any other tensor are
    available afterwards through :meth:`Tape.adjoint`.
    """
    if root.size != 1:
        raise ContractError(f"backward: root must be a scalar, got shape {root.shape}")
    produced = {id(n.output) for n in tape.nodes}
    if id(root) not in produced:
        raise ContractError("backward: root was not produced on this tape")
    adj = {id(root): np.ones(root.shape)}
    params = {}
    for node in reversed(tape.nodes):
        g = adj.get(id(node.output))
        if g is None:
            continue
        grads = OPS[node.kind].backward(g, node.saved, **node.attrs)
        for t, gi in zip(node.inputs, grads):
            if not t.requires_grad:
                continue
            key = id(t)
            if key in adj:
                adj[key] = adj[key] + gi
            else:
                adj[key] = gi
            if t.param is not None:
                params[key] = t.param
    tape.adjoints = adj
    return {p.name: adj[k] for k, p in params.items() if p.trainable}


# ---------------------------------------------------------------------------
# finite-difference verification


KINK_OPS = ("abs", "relu")
FD_NOISE_FLOOR = 1e-7
SCALE_FLOOR = 1e-3


@dataclass
class CheckReport:
    """Outcome of :func:`grad_check`.

    ``max_rel_error`` is the worst, over inputs, of
    ``max|tape - fd| / max(max|tape|, max|fd|, floor)`` where ``floor`` is the
    larger of ``FD_NOISE_FLOOR`` and ``SCALE_FLOOR`` times the largest gradient
    entry over all inputs. An input whose true gradient is exactly zero (a
    bias feeding batchnorm, say) then scores rounding noise relative to the
    problem's gradient scale instead of noise/noise.
    """

    passed: bool
    max_rel_error: float
    tol: float
    per_input: list = field(default_factory=list)
    failure: str = ""
    kink_distance: float = np.inf


def _nearest_kink(tape):
    d = np.inf
    for node in tape.nodes:
        if node.kind in KINK_OPS:
            x = node.saved["x"]
            if x.size:
                d = min(d, float(np.min(np.abs(x))))
    return d


def grad_check(build, inputs, tol=1e-4, step=1e-5, max_entries=None, seed=0):
    """Compare tape gradients of ``build(*tensors)`` against central differences.

    Each entry of ``inputs`` is either an array-like, which is wrapped in a
    fresh trainable parameter, or an existing :class:`Parameter`, which is
    perturbed in place and restored. ``build`` receives one tensor per input
    and must return a scalar tensor. With ``max_entries`` only that many
    randomly chosen coordinates per input are differenced.

    ``kink_distance`` on the report is the smallest ``|x|`` seen at an
    abs/relu operand, so callers can reject samples sitting on a kink.
    """
    params = []
    for i, x in enumerate(inputs):
        if isinstance(x, Parameter):
            params.append(x)
        else:
            arr = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
            params.append(Parameter(f"input{i}", as_tensor(arr)))
    with Tape() as tape:
        root = build(*(p.value for p in params))
    if not np.all(np.isfinite(root.data)):
        return CheckReport(False, np.inf, tol, failure="non-finite forward value at root")
    bad = [n.kind for n in tape.nodes if not np.all(np.isfinite(n.output.data))]
    if bad:
        return CheckReport(False, np.inf, tol, failure=f"non-finite forward value after {bad[0]}")
    if root.size != 1:
        raise ContractError(f"grad_check: build must return a scalar, got shape {root.shape}")
    grads = backward(tape, root) if tape.nodes else {}
    kink = _nearest_kink(tape)
    rng = np.random.default_rng(seed)

    def evaluate():
        with no_tape():
            return build(*(p.value for p in params)).item()

    per_input = []
    pairs = []
    for p in params:
        base = p.value.data
        analytic = grads.get(p.name, np.zeros(base.shape)).reshape(-1)
        idx = np.arange(base.size)
        if max_entries is not None and base.size > max_entries:
            idx = np.sort(rng.choice(base.size, size=max_entries, replace=False))
        fd = np.zeros(idx.size)
        try:
            for j, i in enumerate(idx):
                pert = base.copy().reshape(-1)
                pert[i] += step
                p.value.data = pert.reshape(base.shape)
                fp = evaluate()
                pert[i] -= 2 * step
                p.value.data = pert.reshape(base.shape)
                fm = evaluate()
                fd[j] = (fp - fm) / (2 * step)
        finally:
            p.value.data = base
        pairs.append((analytic[idx], fd))
    scale = max((max(np.max(np.abs(a), initial=0.0), np.max(np.abs(fd), initial=0.0)) for a, fd in pairs), default=0.0)
    floor = max(FD_NOISE_FLOOR, SCALE_FLOOR * scale)
    for a, fd in pairs:
        denom = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(fd), initial=0.0), floor)
        per_input.append(float(np.max(np.abs(a - fd), initial=0.0) / denom))
    worst = max(per_input) if per_input else 0.0
    return CheckReport(worst <= tol, worst, tol, per_input, kink_distance=kink)
