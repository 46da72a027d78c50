import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wavedepth import autodiff as ad
from wavedepth import haar
from wavedepth.errors import ShapeError
from wavedepth.wavelet import SubbandSet, dwt2, energy, idwt2
from oracles import haar_loop_oracle


def test_2x2_block_values():
    s = dwt2(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert s.ll.item() == 5.0
    assert s.lh.item() == -1.0
    assert s.hl.item() == -2.0
    assert s.hh.item() == 0.0


def test_constant_input_has_no_detail():
    s = dwt2(np.full((1, 1, 6, 8), 3.0))
    for b in ("lh", "hl", "hh"):
        assert np.all(s[b].data == 0)
    assert np.allclose(s.ll.data, 6.0)


def test_matches_loop_oracle(rng):
    x = rng.normal(size=(8, 10))
    s = dwt2(x)
    want = haar_loop_oracle(x)
    for b in haar.BANDS:
        np.testing.assert_allclose(s[b].data[0, 0], want[b], rtol=0, atol=1e-15)


def test_vertical_edge_lands_in_lh():
    x = np.zeros((4, 4))
    x[:, ::2] = 1.0  # columns alternate: horizontal intensity change
    s = dwt2(x)
    assert np.all(s.hl.data == 0) and np.all(s.hh.data == 0)
    assert np.all(s.lh.data == 1.0)


@pytest.mark.parametrize("shape", [(1, 1, 2, 2), (2, 3, 8, 6), (4, 8, 16, 16), (1, 2, 5, 7), (1, 1, 1, 3)])
def test_perfect_reconstruction(rng, shape):
    x = rng.normal(size=shape)
    np.testing.assert_allclose(idwt2(dwt2(x)).data, x, rtol=0, atol=1e-12)


def test_parseval_even(rng):
    x = rng.normal(size=(3, 2, 12, 10))
    assert abs(dwt2(x).energy() - energy(x)) <= 1e-12 * energy(x)


def test_odd_size_pads_trailing_edge_by_reflection():
    x = np.arange(15.0).reshape(3, 5)
    padded = haar.pad_trailing(x, True, True)
    assert padded.shape == (4, 6)
    np.testing.assert_array_equal(padded[3, :5], x[1])
    np.testing.assert_array_equal(padded[:3, 5], x[:, 3])
    assert dwt2(x).ll.shape == (1, 1, 2, 3)


def test_pad_adjoint_identity(rng):
    for shape in [(3, 5), (1, 4), (2, 1), (6, 7)]:
        x = rng.normal(size=shape)
        ph, pw = shape[0] % 2 == 1, shape[1] % 2 == 1
        y = rng.normal(size=(shape[0] + ph, shape[1] + pw))
        lhs = np.sum(haar.pad_trailing(x, ph, pw) * y)
        rhs = np.sum(x * haar.pad_trailing_adjoint(y, ph, pw))
        assert abs(lhs - rhs) < 1e-12


def test_synthesis_is_adjoint_of_analysis(rng):
    x = rng.normal(size=(2, 8, 6))
    bands = [rng.normal(size=(2, 4, 3)) for _ in range(4)]
    lhs = sum(np.sum(a * b) for a, b in zip(haar.analysis(x), bands))
    rhs = np.sum(x * haar.synthesis(*bands))
    assert abs(lhs - rhs) < 1e-12


def test_mismatched_subbands_rejected():
    t = ad.as_tensor(np.zeros((1, 1, 2, 2)))
    u = ad.as_tensor(np.zeros((1, 1, 2, 3)))
    with pytest.raises(ShapeError, match="SubbandSet"):
        SubbandSet(t, t, t, u)


def test_zero_extent_rejected():
    with pytest.raises(ShapeError, match="dwt2"):
        dwt2(np.zeros((1, 1, 0, 4)))


def test_gradients_flow_through_transform(rng):
    x = rng.normal(size=(1, 2, 4, 6))
    w = rng.normal(size=(1, 2, 2, 3))
    rep = ad.grad_check(lambda t: ad.sum_(ad.mul(dwt2(t).hl, w)), [x])
    assert rep.passed, rep


@settings(max_examples=40, deadline=None)
@given(
    arrays(
        np.float64,
        st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 9), st.integers(1, 9)),
        elements=st.floats(-1e3, 1e3),
    )
)
def test_property_round_trip_and_even_parseval(x):
    s = dwt2(x)
    np.testing.assert_allclose(idwt2(s).data, x, rtol=0, atol=1e-12 * max(1.0, np.abs(x).max()))
    if x.shape[-1] % 2 == 0 and x.shape[-2] % 2 == 0:
        e = energy(x)
        assert abs(s.energy() - e) <= 1e-9 * max(e, 1e-300)
