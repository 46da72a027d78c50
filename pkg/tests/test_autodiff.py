import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavedepth import autodiff as ad
from wavedepth import checks
from wavedepth.errors import ContractError, DomainError, ShapeError


# --- forward oracles ---------------------------------------------------------


def conv3x3_loop(x, w, b):
    B, C, H, W = x.shape
    O = w.shape[0]
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    out = np.zeros((B, O, H, W))
    for n in range(B):
        for o in range(O):
            for i in range(H):
                for j in range(W):
                    out[n, o, i, j] = np.sum(xp[n, :, i : i + 3, j : j + 3] * w[o]) + b[0, o, 0, 0]
    return out


def test_conv3x3_matches_loop(rng):
    x, w, b = rng.normal(size=(2, 3, 5, 4)), rng.normal(size=(4, 3, 3, 3)), rng.normal(size=(1, 4, 1, 1))
    np.testing.assert_allclose(ad.conv3x3(x, w, b).data, conv3x3_loop(x, w, b), rtol=0, atol=1e-12)


def test_matmul_broadcasts_leading_extents(rng):
    a, b = rng.normal(size=(2, 3, 4, 5)), rng.normal(size=(1, 1, 5, 2))
    np.testing.assert_allclose(ad.matmul(a, b).data, a @ b, atol=1e-14)


def test_softmax_rows_sum_to_one(rng):
    y = ad.softmax(50 * rng.normal(size=(2, 2, 3, 7))).data
    np.testing.assert_allclose(y.sum(-1), 1.0, atol=1e-14)
    assert np.all(y >= 0)


def test_layernorm_statistics(rng):
    y = ad.layernorm(rng.normal(3, 2, size=(1, 2, 4, 16))).data
    np.testing.assert_allclose(y.mean(-1), 0, atol=1e-12)
    np.testing.assert_allclose(y.var(-1), 1, atol=1e-3)


def test_batchnorm_eval_uses_running_stats(rng):
    x = rng.normal(size=(1, 2, 3, 3))
    y = ad.batchnorm(x, "eval", np.array([1.0, -1.0]), np.array([4.0, 0.25])).data
    want = (x - np.array([1.0, -1.0]).reshape(1, 2, 1, 1)) / np.sqrt(np.array([4.0, 0.25]).reshape(1, 2, 1, 1) + ad.BN_EPS)
    np.testing.assert_allclose(y, want, atol=1e-14)


def test_batchnorm_train_needs_two_samples():
    with pytest.raises(ShapeError, match="batch >= 2"):
        ad.batchnorm(np.zeros((1, 2, 3, 3)), "train")


def test_patchify_layout():
    x = np.arange(2 * 4 * 4, dtype=float).reshape(1, 2, 4, 4)
    p = ad.patchify(x, 2).data
    assert p.shape == (1, 1, 4, 8)
    # token 1 is the top-right patch; channel-major within the token
    np.testing.assert_array_equal(p[0, 0, 1], np.concatenate([x[0, 0, :2, 2:].ravel(), x[0, 1, :2, 2:].ravel()]))


def test_upsample_nearest_and_bilinear():
    x = np.array([[0.0, 1.0], [2.0, 3.0]])
    near = ad.upsample2x(x, "nearest").data[0, 0]
    np.testing.assert_array_equal(near, np.kron(x, np.ones((2, 2))))
    bil = ad.upsample2x(np.array([[0.0, 4.0]]), "bilinear").data[0, 0, 0]
    # half-pixel centres: sources -0.25, 0.25, 0.75, 1.25 clamped to [0, 1]
    np.testing.assert_allclose(bil, [0.0, 1.0, 3.0, 4.0])


def test_grayscale_weights():
    x = np.zeros((1, 3, 1, 1))
    x[0, :, 0, 0] = (1.0, 2.0, 3.0)
    assert ad.grayscale(x).item() == pytest.approx(0.299 + 2 * 0.587 + 3 * 0.114, abs=1e-15)


def test_diff_shapes():
    x = np.zeros((1, 1, 4, 5))
    assert ad.diff_x(x).shape == (1, 1, 4, 4)
    assert ad.diff_y(x).shape == (1, 1, 3, 5)


# --- contracts ----------------------------------------------------------------


def test_tensor_must_be_rank4():
    with pytest.raises(ShapeError):
        ad.Tensor(np.zeros((2, 2)))
    assert ad.as_tensor(np.zeros((2, 3))).shape == (1, 1, 2, 3)


def test_incompatible_broadcast_names_op_and_shapes():
    with pytest.raises(ShapeError, match=r"add.*\(1, 1, 2, 3\).*\(1, 1, 2, 4\)"):
        ad.add(np.zeros((2, 3)), np.zeros((2, 4)))


def test_log_domain():
    with pytest.raises(DomainError):
        ad.log(np.array([1.0, 0.0]))


def test_sqrt_domain_and_zero_gradient():
    with pytest.raises(DomainError):
        ad.sqrt(np.array([-1.0]))
    p = ad.Parameter("x", np.zeros((1, 1, 1, 1)))
    with ad.Tape() as tape:
        y = ad.sqrt(p.value)
    assert ad.backward(tape, y)["x"].item() == 0.0


def test_abs_subgradient_at_zero_is_zero():
    p = ad.Parameter("x", np.zeros((1, 1, 1, 3)))
    with ad.Tape() as tape:
        y = ad.sum_(ad.absolute(p.value))
    np.testing.assert_array_equal(ad.backward(tape, y)["x"], 0.0)


def test_backward_needs_scalar_root_on_tape(rng):
    p = ad.Parameter("x", rng.normal(size=(1, 1, 2, 2)))
    with ad.Tape() as tape:
        y = ad.scale(p.value, 2.0)
    with pytest.raises(ContractError, match="scalar"):
        ad.backward(tape, y)
    with pytest.raises(ContractError, match="not produced"):
        ad.backward(ad.Tape(), ad.sum_(p.value))


def test_no_recording_without_tape_or_trainable_inputs(rng):
    frozen = ad.Parameter("w", rng.normal(size=(1, 1, 2, 2)), trainable=False)
    with ad.Tape() as tape:
        ad.sum_(ad.mul(frozen.value, 3.0))
    assert tape.nodes == []
    with ad.no_tape():
        ad.sum_(ad.Parameter("v", np.ones((1, 1, 1, 1))).value)
    assert ad.active_tape() is None


def test_frozen_parameters_absent_from_gradients(rng):
    a = ad.Parameter("a", rng.normal(size=(1, 1, 2, 2)))
    b = ad.Parameter("b", rng.normal(size=(1, 1, 2, 2)), trainable=False)
    with ad.Tape() as tape:
        y = ad.sum_(ad.mul(a.value, b.value))
    g = ad.backward(tape, y)
    assert set(g) == {"a"}
    np.testing.assert_array_equal(g["a"], b.data)


def test_fan_out_accumulates(rng):
    p = ad.Parameter("x", rng.normal(size=(1, 1, 1, 4)))
    with ad.Tape() as tape:
        y = ad.sum_(ad.add(ad.mul(p.value, p.value), p.value))
    np.testing.assert_allclose(ad.backward(tape, y)["x"], 2 * p.data + 1)


def test_unknown_operator():
    with pytest.raises(ContractError, match="unknown operator"):
        ad.forward_op("nope", (np.zeros((1, 1, 1, 1)),))


def test_grad_check_reports_a_wrong_gradient(rng):
    @ad.register("bad_square")
    class _Bad:
        arity = 1

        @staticmethod
        def forward(x):
            return x * x, {"x": x}

        @staticmethod
        def backward(g, saved):
            return (g * saved["x"],)  # missing factor 2

    try:
        rep = ad.grad_check(lambda t: ad.sum_(ad.forward_op("bad_square", (t,))), [rng.normal(size=(1, 1, 2, 2))])
    finally:
        del ad.OPS["bad_square"]
    assert not rep.passed
    assert rep.max_rel_error == pytest.approx(0.5, rel=1e-6)


# --- finite-difference suite (fast subset; the full suite is an acceptance test)


@pytest.mark.parametrize("case_index", range(len(checks.operator_cases(np.random.default_rng(0)))))
def test_operator_gradient(case_index):
    for i in range(3):
        case = checks.operator_cases(np.random.default_rng([99, i]))[case_index]
        rep = checks.run_case(case)
        assert rep.passed, f"{case.name}: {rep}"


def test_full_network_gradient():
    res = checks.model_suite(seeds=(0,))
    bad = {k: v[0].max_rel_error for k, v in res.items() if not v[0].passed}
    assert not bad, bad


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_property_elementwise_chain(seed):
    r = np.random.default_rng(seed)
    x = r.uniform(0.5, 2.0, size=(1, 2, 3, 3))
    w = r.normal(size=x.shape)
    rep = ad.grad_check(lambda t: ad.sum_(ad.mul(ad.softplus(ad.log(ad.sqrt(t))), w)), [x])
    assert rep.passed, rep
