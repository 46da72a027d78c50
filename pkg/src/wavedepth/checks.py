"""Randomised self-checks shared by the ``gradcheck``/``selftest`` commands and
the test suite.

Every differentiable operator gets a case builder that draws a random instance
and reduces the operator's output to a scalar through a fixed random weighting,
so the check exercises the full Jacobian rather than just its column sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import haar
from .gwt import gwt_forward, gwt_init
from .losses import LossWeights, smoothness_weights, total_loss, valid_mask

KINK_MARGIN = 1e-3  # reject samples with an abs/relu operand closer than this to 0
# The full network has tens of thousands of ReLU inputs, the nearest typically
# ~1e-6..1e-5 from its kink; a 1e-7 step keeps the difference quotient on one side.
MODEL_STEP = 1e-7


@dataclass
class GradCase:
    name: str
    build: object
    inputs: list


def _away_from_zero(rng, shape, lo=0.2, hi=1.0):
    return rng.choice([-1.0, 1.0], size=shape) * rng.uniform(lo, hi, size=shape)


def _weighted(out_fn, rng):
    """Wrap ``out_fn`` as sum(out * W) with W drawn once, lazily, at the first call."""
    state = {}

    def build(*ts):
        out = out_fn(*ts)
        if "w" not in state:
            state["w"] = rng.normal(size=out.shape)
        return ad.sum_(ad.mul(out, state["w"]))

    return build


def _unary(rng, name, fn, x):
    return GradCase(name, _weighted(fn, rng), [x])


def operator_cases(rng):
    """One random instance of every differentiable operator (plus variants)."""
    r = rng
    n = lambda *s: r.normal(size=s)  # noqa: E731
    cases = [
        GradCase("add", _weighted(ad.add, r), [n(2, 3, 4, 5), n(1, 3, 1, 5)]),
        GradCase("sub", _weighted(ad.sub, r), [n(2, 3, 4, 5), n(2, 1, 4, 1)]),
        GradCase("mul", _weighted(ad.mul, r), [n(2, 3, 4, 5), n(1, 3, 4, 1)]),
        _unary(r, "scale", lambda t: ad.scale(t, -1.7), n(2, 2, 3, 3)),
        GradCase("matmul", _weighted(ad.matmul, r), [n(2, 2, 4, 3), n(1, 1, 3, 5)]),
        GradCase("conv3x3", _weighted(ad.conv3x3, r), [n(2, 3, 5, 6), n(4, 3, 3, 3), n(1, 4, 1, 1)]),
        _unary(r, "relu", ad.relu, _away_from_zero(r, (2, 3, 4, 4))),
        _unary(r, "softplus", ad.softplus, 3 * n(2, 3, 4, 4)),
        _unary(r, "log", ad.log, r.uniform(0.3, 3.0, size=(2, 2, 3, 4))),
        _unary(r, "abs", ad.absolute, _away_from_zero(r, (2, 3, 4, 4))),
        _unary(r, "sum", lambda t: ad.sum_(t, axes=(1, 3)), n(2, 3, 4, 5)),
        _unary(r, "mean", lambda t: ad.mean(t, axes=(0, 2)), n(2, 3, 4, 5)),
        _unary(r, "sqrt", ad.sqrt, r.uniform(0.3, 3.0, size=(2, 2, 3, 4))),
        _unary(r, "layernorm", ad.layernorm, n(2, 1, 5, 8)),
        _unary(r, "batchnorm.train", lambda t: ad.batchnorm(t, "train"), n(3, 2, 4, 4)),
        _unary(
            r,
            "batchnorm.eval",
            lambda t, m=n(2), v=r.uniform(0.5, 2.0, 2): ad.batchnorm(t, "eval", m, v),
            n(2, 2, 4, 4),
        ),
        _unary(r, "softmax", ad.softmax, 2 * n(2, 2, 3, 6)),
        _unary(r, "diff_x", ad.diff_x, n(2, 2, 4, 5)),
        _unary(r, "diff_y", ad.diff_y, n(2, 2, 4, 5)),
        _unary(r, "grayscale", ad.grayscale, n(2, 3, 4, 4)),
    ]
    for band in haar.BANDS:
        cases.append(_unary(r, f"dwt2.{band}", lambda t, b=band: ad.dwt2_band(t, b), n(2, 2, 6, 8)))
    cases.append(_unary(r, "dwt2.odd", lambda t: ad.dwt2_band(t, "hh"), n(1, 2, 5, 7)))
    cases.append(GradCase("idwt2", _weighted(ad.idwt2, r), [n(2, 2, 3, 4) for _ in range(4)]))
    cases.append(
        GradCase(
            "idwt2.pad",
            _weighted(lambda *t: ad.idwt2(*t, pad=(True, True)), r),
            [n(1, 2, 3, 4) for _ in range(4)],
        )
    )
    cases += [
        GradCase("gate_scale", _weighted(ad.gate_scale, r), [n(2, 3, 4, 4), n(1, 1, 1, 1)]),
        _unary(r, "reshape", lambda t: ad.reshape(t, (2, 1, 6, 4)), n(2, 3, 2, 4)),
        _unary(r, "permute", lambda t: ad.permute(t, (0, 2, 3, 1)), n(2, 3, 4, 5)),
        _unary(r, "patchify", lambda t: ad.patchify(t, 2), n(2, 3, 4, 6)),
        _unary(r, "upsample2x.nearest", lambda t: ad.upsample2x(t, "nearest"), n(2, 2, 3, 4)),
        _unary(r, "upsample2x.bilinear", lambda t: ad.upsample2x(t, "bilinear"), n(2, 2, 3, 4)),
    ]
    return cases


def gwt_case(rng, channels=3, side=6):
    """GWT block (train-mode batchnorm) w.r.t. its input and every parameter."""
    p = gwt_init(channels, rng.integers(2**31))
    for g, v in zip(p.gates.values(), rng.uniform(0.5, 1.5, 4)):
        g.assign(np.full((1, 1, 1, 1), v))
    x = rng.normal(size=(2, channels, side, side))

    def out(t, *_params):  # parameters are perturbed in place
        # fresh running stats each call so the forward value is a pure function
        for op in p.operators.values():
            op.running_mean = np.zeros(channels)
            op.running_var = np.ones(channels)
        return gwt_forward(t, p, "train")

    return GradCase("gwt", _weighted(out, rng), [x] + p.parameters())


def total_loss_case(rng, side=8, hole_fraction=0.2, mode="image-weights"):
    """Total objective w.r.t. the predicted depth on a hole-punched mask."""
    gt = rng.uniform(0.5, 4.0, size=(2, 1, side, side))
    gt[rng.random(gt.shape) < hole_fraction] = 0.0
    mask = valid_mask(gt, 0.1, 10.0)
    pred = rng.uniform(0.5, 4.0, size=gt.shape)
    image = rng.uniform(0, 1, size=(2, 3, side, side))
    w = LossWeights(*rng.uniform(0.05, 0.5, 3))
    # detached weights: fixed at the evaluation point for the difference quotient
    alphas = smoothness_weights(pred, image, mask, mode)

    def build(t):
        return total_loss(t, gt, image, mask, w, mode, alphas)[0]

    return GradCase(f"total_loss.{mode}", build, [pred])


def run_case(case, tol=1e-4, max_entries=None, seed=0):
    return ad.grad_check(case.build, case.inputs, tol=tol, max_entries=max_entries, seed=seed)


def gradient_suite(instances=20, seed=0, tol=1e-4, include_composites=True):
    """Run every case ``instances`` times; returns ``{name: [CheckReport, ...]}``.

    Samples whose abs/relu operands come within ``KINK_MARGIN`` of zero are
    redrawn (the derivative there is one-sided and finite differences straddle it).
    """
    results = {}
    for i in range(instances):
        builders = [operator_cases]
        if include_composites:
            builders += [lambda r: [gwt_case(r)], lambda r: [total_loss_case(r, mode=m) for m in ("image-weights", "eq8-literal")]]
        for make in builders:
            for attempt in range(20):
                rng = np.random.default_rng([seed, i, attempt, builders.index(make)])
                cases = make(rng)
                reports = [run_case(c, tol) for c in cases]
                if all(rep.kink_distance > KINK_MARGIN for rep in reports):
                    break
            for c, rep in zip(cases, reports):
                results.setdefault(c.name, []).append(rep)
    return results


MODEL_PROBES = (
    "enc.patch.w",
    "enc.pos",
    "enc.block{L}.ln1.g",
    "enc.block{L}.attn.q.w",
    "enc.block{L}.attn.out.b",
    "enc.block{L}.mlp.fc1.w",
    "dec.conv1.w",
    "dec.conv2.b",
    "gwt.hh.conv.w",
    "gwt.lh.bn.scale",
    "gwt.gate.hl",
    "dec.head.w",
)


def model_case(seed=0, side=32, entries=4):
    """Total loss of a small full network w.r.t. one parameter of each layer type.

    Returns ``(cases, model)``; each case perturbs a handful of entries of one
    parameter in place.
    """
    from .model import AdapterConfig, EncoderConfig, init_model, predict

    enc = EncoderConfig(L=2, m=0, D=16, heads=2, patch=8, side=side, decoder_width=4)
    model = init_model(enc, AdapterConfig("full"), gwt_enabled=True, seed=seed)
    rng = np.random.default_rng(seed)
    # zero-initialised biases put whole dead-ReLU regions exactly on the kink
    for name, p in model.params.items():
        if name.endswith(".b") and not name.startswith("enc.block"):
            p.assign(p.data + rng.normal(0, 0.1, p.shape))
    image = rng.uniform(0, 1, size=(2, 3, side, side))
    gt = rng.uniform(0.5, 3.0, size=(2, 1, side, side))
    mask = valid_mask(gt, 0.1, 10.0)
    with ad.no_tape():
        alphas = smoothness_weights(predict(model, image, "train").data, image, mask)

    def build(*_params):
        return total_loss(predict(model, image, "train"), gt, image, mask, None, "image-weights", alphas)[0]

    names = [p.format(L=enc.L) for p in MODEL_PROBES]
    return [GradCase(f"model:{n}", build, [model.params[n]]) for n in names], model


def model_suite(seeds=(0, 1, 2), tol=1e-4, entries=4):
    results = {}
    for seed in seeds:
        cases, _ = model_case(seed)
        for c in cases:
            results.setdefault(c.name, []).append(ad.grad_check(c.build, c.inputs, tol, MODEL_STEP, entries, seed))
    return results


# ---------------------------------------------------------------------------
# invariants for ``selftest``


def _check_wavelet(rng):
    from .wavelet import dwt2, idwt2

    x = rng.normal(size=(2, 3, 8, 6))
    s = dwt2(x)
    err = np.max(np.abs(idwt2(s).data - x))
    parseval = abs(s.energy() - np.sum(x**2)) / np.sum(x**2)
    return err <= 1e-12 and parseval <= 1e-9, f"reconstruction {err:.1e}, parseval {parseval:.1e}"


def _check_gates(rng):
    p = gwt_init(3, int(rng.integers(2**31)))
    x = ad.as_tensor(rng.normal(size=(2, 3, 6, 6)))
    p.set_gates((0, 0, 0, 0))
    with ad.no_tape():
        zero = np.max(np.abs(gwt_forward(x, p, "eval").data - x.data))
        p.set_gates((1, 1, 1, 1))
        p.bypass = True
        double = np.max(np.abs(gwt_forward(x, p, "eval").data - 2 * x.data))
    return zero <= 1e-12 and double <= 1e-12, f"zero-gate {zero:.1e}, bypass {double:.1e}"


def _check_losses(rng):
    from .losses import scale_invariant_loss
    from .metrics import compute_metrics

    gt = rng.uniform(0.5, 5.0, size=(1, 1, 6, 6))
    mask = valid_mask(gt, 0.1, 10.0)
    s = 1.7
    ls = scale_invariant_loss(s * gt, gt, mask, 0.5).item()
    want = abs(np.log(s)) - 0.5 * np.log(s) ** 2
    rep = compute_metrics(s * gt, gt, mask)
    ok = abs(ls - want) <= 1e-12 and abs(rep.abs_rel - (s - 1)) <= 1e-12 and abs(rep.silog) <= 1e-12
    return ok, f"L_scale {ls - want:.1e}, abs_rel {rep.abs_rel - (s - 1):.1e}, silog {rep.silog:.1e}"


def _check_backprojection(rng):
    from .reconstruct import CameraIntrinsics, backproject

    k = CameraIntrinsics(30.0, 32.0, 15.5, 11.5, 32, 24)
    depth = rng.uniform(0.5, 5.0, size=(24, 32))
    pc = backproject(depth, np.ones_like(depth, dtype=bool), k)
    err = np.max(np.abs(k.project(pc.points) - pc.pixels))
    return err <= 1e-9, f"reprojection {err:.1e}"


def _check_gradients(rng):
    res = gradient_suite(instances=1, seed=int(rng.integers(2**31)))
    worst = max(r.max_rel_error for reps in res.values() for r in reps)
    ok = all(r.passed for reps in res.values() for r in reps)
    return ok, f"{len(res)} cases, worst relative error {worst:.1e}"


INVARIANTS = (
    ("wavelet perfect reconstruction + Parseval", _check_wavelet),
    ("GWT zero-gate neutrality + bypass doubling", _check_gates),
    ("loss/metric scale response", _check_losses),
    ("back-projection round trip", _check_backprojection),
    ("operator gradients", _check_gradients),
)


def selftest(seed=0):
    """Run the quick invariant suite; returns ``[(name, passed, detail)]``."""
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in INVARIANTS:
        ok, detail = fn(rng)
        out.append((name, bool(ok), detail))
    return out
