import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavedepth import autodiff as ad
from wavedepth.errors import ContractError, DomainError, EmptyMaskError, ShapeError
from wavedepth.losses import (
    LossWeights,
    gradient_matching_loss,
    scale_invariant_loss,
    scale_invariant_loss_rooted,
    smoothness_loss,
    smoothness_weights,
    total_loss,
    valid_mask,
)
from oracles import loop_grad, loop_scale, loop_smooth, random_instance


def _lists(a):
    return a.tolist()


@pytest.mark.parametrize("seed", range(10))
def test_losses_match_loop_oracles(seed):
    rng = np.random.default_rng(seed)
    pred, gt, img, mask = random_instance(rng, holes=0.0 if seed < 3 else 0.25)
    m = mask.mask[0, 0].tolist()
    assert scale_invariant_loss(pred, gt, mask, 0.5).item() == pytest.approx(loop_scale(_lists(pred), _lists(gt), m, 0.5), abs=1e-12)
    assert gradient_matching_loss(pred, gt, mask).item() == pytest.approx(loop_grad(_lists(pred), _lists(gt), m), abs=1e-12)
    for mode in ("image-weights", "eq8-literal"):
        got = smoothness_loss(pred, img[None], mask, mode).item()
        assert got == pytest.approx(loop_smooth(_lists(pred), img.tolist(), m, mode), abs=1e-12)


def test_valid_mask_definition():
    m = valid_mask(np.array([0.5, 2.0, 100.0]), 1.0, 50.0)
    assert m.mask.ravel().tolist() == [False, True, False]
    m = valid_mask(np.array([0.0, -3.0, 2.0]), 1e-3, 50.0)
    assert m.mask.ravel().tolist() == [False, False, True] and m.n == 1


def test_valid_mask_errors():
    with pytest.raises(EmptyMaskError):
        valid_mask(np.array([100.0]), 1.0, 2.0)
    with pytest.raises(ContractError):
        valid_mask(np.array([1.0]), 2.0, 1.0)


def test_scale_invariant_analytic_cases(rng):
    gt = rng.uniform(0.5, 5.0, size=(4, 4))
    mask = valid_mask(gt, 0.1, 10.0)
    assert scale_invariant_loss(gt, gt, mask).item() == 0.0
    assert scale_invariant_loss(math.e * gt, gt, mask, 0.5).item() == pytest.approx(0.5, abs=1e-12)
    for s in (0.3, 0.9, 1.0, 2.5, 11.0):
        want = abs(math.log(s)) - 0.5 * math.log(s) ** 2
        assert scale_invariant_loss(s * gt, gt, mask, 0.5).item() == pytest.approx(want, abs=1e-12)


def test_rooted_variant(rng):
    pred, gt, _, mask = random_instance(rng)
    r = (np.log(pred) - np.log(np.where(mask.mask[0, 0], gt, 1.0)))[mask.mask[0, 0]]
    want = math.sqrt(np.mean(r**2) - 0.5 * np.mean(r) ** 2)
    assert scale_invariant_loss_rooted(pred, gt, mask, 0.5).item() == pytest.approx(want, abs=1e-12)


def test_gradient_matching_translation_invariance(rng):
    _, gt, _, mask = random_instance(rng)
    assert gradient_matching_loss(np.where(gt > 0, gt, 1.0) + 3.0, gt, mask).item() == pytest.approx(0.0, abs=1e-12)
    assert gradient_matching_loss(gt, gt, mask).item() == 0.0


def test_smoothness_constant_pred_and_sharper_image(rng):
    _, gt, img, mask = random_instance(rng, holes=0.0)
    for mode in ("image-weights", "eq8-literal"):
        assert smoothness_loss(np.full(gt.shape, 2.0), img[None], mask, mode).item() == 0.0
    pred = rng.uniform(1, 2, size=gt.shape)
    flat = np.full((1, 3) + gt.shape, 0.5) + 0.01 * img
    sharp = img[None]
    assert smoothness_loss(pred, sharp, mask).item() < smoothness_loss(pred, flat, mask).item()


def test_smoothness_translation_invariance(rng):
    pred, _, img, mask = random_instance(rng)
    a = smoothness_loss(pred, img[None], mask).item()
    b = smoothness_loss(pred + 1.5, img[None], mask).item()
    assert a == pytest.approx(b, abs=1e-12)


def test_smoothness_weights_are_detached(rng):
    pred, _, img, mask = random_instance(rng, holes=0.0)
    p = ad.Parameter("pred", pred)
    with ad.Tape() as tape:
        y = smoothness_loss(p.value, img[None], mask, "eq8-literal")
    g = ad.backward(tape, y)["pred"]
    ax, ay = smoothness_weights(pred, img[None], mask, "eq8-literal")
    # the gradient of alpha_x * mean|dx| with alpha held constant
    p2 = ad.Parameter("pred", pred)
    with ad.Tape() as tape2:
        y2 = smoothness_loss(p2.value, img[None], mask, "eq8-literal", alphas=(ax, ay))
    np.testing.assert_array_equal(g, ad.backward(tape2, y2)["pred"])


def test_total_is_weighted_sum(rng):
    pred, gt, img, mask = random_instance(rng)
    w = LossWeights()
    total, parts = total_loss(pred, gt, img[None], mask, w)
    want = (
        scale_invariant_loss(pred, gt, mask, 0.5).item()
        + 0.1 * gradient_matching_loss(pred, gt, mask).item()
        + 0.1 * smoothness_loss(pred, img[None], mask).item()
    )
    assert total.item() == pytest.approx(want, abs=1e-12)
    assert parts["total"] == total.item()
    only_scale, _ = total_loss(pred, gt, img[None], mask, LossWeights(0.5, 0.0, 0.0))
    assert only_scale.item() == parts["scale"]


def test_total_zero_at_ground_truth(rng):
    _, gt, img, mask = random_instance(rng, holes=0.0)
    total, parts = total_loss(gt, gt, np.full((1, 3) + gt.shape, 0.4), mask)
    assert parts["scale"] == parts["grad"] == 0.0
    assert parts["smooth"] > 0  # gt itself is not smooth; only constant preds score 0
    flat = np.full(gt.shape, 2.0)
    total, parts = total_loss(flat, flat, img[None], valid_mask(flat, 0.1, 10.0))
    assert parts == {"scale": 0.0, "grad": 0.0, "smooth": 0.0, "total": 0.0}


def test_mask_insensitivity(rng):
    pred, gt, img, mask = random_instance(rng, holes=0.3)
    inv = ~mask.mask[0, 0]
    pred2, gt2 = pred.copy(), gt.copy()
    pred2[inv] = rng.uniform(-5, 100, size=inv.sum())
    gt2[inv] = rng.uniform(-5, 100, size=inv.sum())
    a = total_loss(pred, gt, img[None], mask)[1]
    b = total_loss(pred2, gt2, img[None], mask)[1]
    assert a == b


def test_domain_and_shape_errors(rng):
    pred, gt, img, mask = random_instance(rng, holes=0.0)
    bad = pred.copy()
    bad[0, 0] = 0.0
    with pytest.raises(DomainError):
        scale_invariant_loss(bad, gt, mask)
    with pytest.raises(ShapeError):
        scale_invariant_loss(pred[:, :-1], gt, mask)
    with pytest.raises(ContractError):
        smoothness_loss(pred, img[None], mask, "bogus")
    with pytest.raises(ContractError):
        LossWeights(lambda_grad=-1)


def test_no_valid_pairs():
    gt = np.array([[1.0, 0.0], [0.0, 1.0]])
    mask = valid_mask(gt, 0.1, 10.0)
    with pytest.raises(EmptyMaskError):
        gradient_matching_loss(gt + 0.5, gt, mask)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 20.0), st.integers(0, 1000))
def test_property_scale_response(s, seed):
    gt = np.random.default_rng(seed).uniform(0.5, 5.0, size=(3, 5))
    mask = valid_mask(gt, 0.1, 10.0)
    want = abs(math.log(s)) - 0.5 * math.log(s) ** 2
    assert scale_invariant_loss(s * gt, gt, mask, 0.5).item() == pytest.approx(want, abs=1e-12)
