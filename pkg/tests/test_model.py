import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdspde import CoefficientSet, StatePair, eval_reaction, eval_truncated_reaction
from bdspde.errors import DomainError, PreconditionError

from conftest import constant_coeffs

ONES = dict(a1=1.0, a2=1.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0, m1=1.0, m2=1.0, m3=1.0)
nonneg = st.floats(0, 50, allow_nan=False)


def pair(u, v, M=4):
    return StatePair(np.full(M, float(u)), np.full(M, float(v)))


def test_predator_free():
    co = constant_coeffs(M=8)
    U = np.linspace(0, 3, 8)
    F = eval_reaction(co, StatePair(U, np.zeros(8)))
    assert np.allclose(F.U, U * (co.a1 - co.b1 * U), rtol=0, atol=0)
    assert np.all(F.V == 0)


def test_unit_arithmetic():
    co = CoefficientSet.constant(4, **ONES)
    F = eval_reaction(co, pair(1, 1))
    assert F.U == pytest.approx(np.full(4, -1 / 3), abs=1e-15)


def test_logistic_equilibrium():
    co = constant_coeffs(M=4, a1=3.0, b1=1.5)
    F = eval_reaction(co, pair(2.0, 0.0))
    assert np.all(F.U == 0)


def test_negative_state_reports_index():
    co = constant_coeffs(M=4)
    with pytest.raises(PreconditionError, match=r"V\[2\]"):
        eval_reaction(co, StatePair(np.ones(4), np.array([1.0, 1.0, -0.1, 1.0])))


def test_coefficients_must_be_positive():
    with pytest.raises(PreconditionError, match="m1"):
        CoefficientSet.constant(4, **{**ONES, "m1": 0.0})
    with pytest.raises(PreconditionError, match="d2"):
        CoefficientSet.constant(4, d2=0.0, **ONES)
    with pytest.raises(PreconditionError):
        CoefficientSet(M=3, d1=1, d2=1, **{**ONES, "a1": np.array([1.0, -1.0, 1.0])})


def test_truncation_inside_ball_identical():
    co = constant_coeffs(M=4)
    s = pair(1.0, 2.0)
    assert np.array_equal(eval_truncated_reaction(10.0, co, s).U, eval_reaction(co, s).U)


def test_truncation_boundary_and_rescale():
    co = constant_coeffs(M=4)
    on_boundary = eval_truncated_reaction(5.0, co, pair(3.0, 4.0))
    assert np.array_equal(on_boundary.U, eval_reaction(co, pair(3.0, 4.0)).U)
    outside = eval_truncated_reaction(5.0, co, pair(6.0, 8.0))
    inside = eval_reaction(co, pair(3.0, 4.0))
    assert np.allclose(outside.U, inside.U, rtol=1e-15)
    assert np.allclose(outside.V, inside.V, rtol=1e-15)


@pytest.mark.parametrize("n", [0.0, -1.0])
def test_truncation_radius_domain(n):
    with pytest.raises(DomainError):
        eval_truncated_reaction(n, constant_coeffs(M=4), pair(1, 1))


@given(nonneg, nonneg)
def test_quasi_positivity(u, v):
    co = constant_coeffs(M=2)
    assert np.all(eval_reaction(co, pair(0.0, v, 2)).U == 0)
    assert np.all(eval_reaction(co, pair(u, 0.0, 2)).V == 0)


@given(nonneg, nonneg)
def test_prey_bound(u, v):
    co = constant_coeffs(M=2)
    F = eval_reaction(co, pair(u, v, 2))
    assert np.all(F.U <= u * co.a1 + 1e-12)


@pytest.mark.parametrize("n", [1.0, 5.0, 20.0])
def test_truncated_reaction_bounded(n):
    co = constant_coeffs(M=1)
    r = np.linspace(0, 3 * n, 300)
    theta = np.linspace(0, np.pi / 2, 300)
    R, TH = np.meshgrid(r, theta)
    F = eval_truncated_reaction(n, co, StatePair((R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()))
    inside = eval_truncated_reaction(n, co, StatePair((np.minimum(R, n) * np.cos(TH)).ravel(),
                                                      (np.minimum(R, n) * np.sin(TH)).ravel()))
    bound = max(np.abs(inside.U).max(), np.abs(inside.V).max())
    assert np.isfinite(bound)
    assert max(np.abs(F.U).max(), np.abs(F.V).max()) <= bound * (1 + 1e-12)


@pytest.mark.parametrize("n", [1.0, 5.0])
def test_truncated_reaction_lipschitz(n):
    co = constant_coeffs(M=1)
    rng = np.random.default_rng(int(n))
    def sample(k):
        r = 2 * n * np.sqrt(rng.random(k))
        th = rng.random(k) * np.pi / 2
        return r * np.cos(th), r * np.sin(th)
    u1, v1 = sample(20000)
    u2, v2 = u1 + rng.normal(0, 1e-3, 20000), v1 + rng.normal(0, 1e-3, 20000)
    u2, v2 = np.abs(u2), np.abs(v2)
    F1 = eval_truncated_reaction(n, co, StatePair(u1, v1))
    F2 = eval_truncated_reaction(n, co, StatePair(u2, v2))
    ratio = np.hypot(F1.U - F2.U, F1.V - F2.V) / np.hypot(u1 - u2, v1 - v2)
    L = ratio.max()
    # local slope bound from the derivative of the drift on the ball
    dmax = co.a1[0] + 2 * co.b1[0] * n + co.a2[0] + 2 * co.b2[0] * n + 4 * (co.c1[0] + co.c2[0]) * (1 + n)
    assert np.isfinite(L) and L <= dmax
