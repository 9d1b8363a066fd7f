import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from kpzlab import numerics as nm
from kpzlab.errors import DomainError, InfeasibleNestError, NoBracketError, PoleError


@pytest.mark.parametrize("z", [0.5, 3.7, 2 + 5j, -2.5 + 0.3j, 0.5 + 30j, 10 - 4j])
def test_gamma_matches_scipy(z):
    assert abs(nm.gamma_complex(z) - special.gamma(z)) <= 1e-12 * abs(special.gamma(z))


def test_gamma_reflection_identity():
    z = np.array([0.3 + 0.7j, -1.4 + 2j, 2.2 - 1j])
    lhs = nm.gamma_complex(z) * nm.gamma_complex(1 - z)
    assert np.allclose(lhs, np.pi / np.sin(np.pi * z), rtol=1e-12)


@pytest.mark.parametrize("z", [0.0, -1.0, -7.0])
def test_gamma_poles(z):
    with pytest.raises(PoleError):
        nm.gamma_complex(z)


@given(st.floats(0.05, 60.0))
def test_polygamma_matches_scipy(s):
    assert nm.digamma(s) == pytest.approx(special.digamma(s), rel=1e-12, abs=1e-13)
    assert nm.trigamma(s) == pytest.approx(float(special.polygamma(1, s)), rel=1e-11)
    assert nm.tetragamma(s) == pytest.approx(float(special.polygamma(2, s)), rel=1e-10)


@given(st.complex_numbers(max_magnitude=3.0, allow_nan=False), st.floats(0.0, 0.95))
@settings(max_examples=60)
def test_qpoch_inf_matches_mpmath(a, q):
    ref = complex(mp.qp(a, q))
    assert abs(nm.q_pochhammer_inf(a, q) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_qpoch_inf_rejects_bad_q():
    with pytest.raises(DomainError):
        nm.q_pochhammer_inf(0.5, 1.0)


@given(st.integers(0, 12), st.integers(0, 12), st.floats(0.01, 0.95))
def test_q_binomial_symmetry_and_pascal(n, k, q):
    assert nm.q_binomial(n, k, q) == pytest.approx(nm.q_binomial(n, n - k, q), rel=1e-12)
    if 1 <= k <= n:
        rhs = nm.q_binomial(n - 1, k - 1, q) + q ** k * nm.q_binomial(n - 1, k, q)
        assert nm.q_binomial(n, k, q) == pytest.approx(rhs, rel=1e-10)


def test_q_factorial_limit():
    assert nm.q_factorial(5, 1e-12) == pytest.approx(1.0)
    assert nm.q_factorial(5, 0.999999) == pytest.approx(120.0, rel=1e-4)


@pytest.mark.parametrize("x", [-75.0, -33.3, -5.0, -0.7, 0.0, 1.3, 6.0, 25.0, 70.0])
def test_airy_matches_scipy(x):
    ai, aip, _, _ = special.airy(x)
    assert abs(nm.airy_ai(x) - ai) <= 1e-12 * max(1.0, abs(ai)) + 1e-300
    assert abs(nm.airy_ai_prime(x) - aip) <= 1e-11 * max(1.0, abs(aip)) + 1e-300


def test_airy_ode():
    x, h = 2.5, 1e-3
    second = (nm.airy_ai(x + h) - 2 * nm.airy_ai(x) + nm.airy_ai(x - h)) / h ** 2
    assert second == pytest.approx(x * nm.airy_ai(x), rel=1e-5)


def test_root_finding():
    assert nm.find_root_1d(lambda x: x ** 3 - 2, 0, 2) == pytest.approx(2 ** (1 / 3), abs=1e-14)
    with pytest.raises(NoBracketError):
        nm.find_root_1d(lambda x: x ** 2 + 1, -1, 1)


def test_circle_rule_integrates_cauchy():
    r = nm.circle_rule(1.0, 0.3, 64)
    assert abs(np.sum(r.weights / (r.nodes - 1.0)) - 2j * np.pi) < 1e-13
    assert abs(np.sum(r.weights * r.nodes ** 3)) < 1e-13


def test_line_rule_gaussian():
    r = nm.line_rule(0.0, 8.0)
    y = r.nodes.imag
    assert np.sum(r.weights * np.exp(-y ** 2)) == pytest.approx(np.sqrt(np.pi), abs=1e-13)


@given(st.integers(1, 3), st.floats(0.3, 0.9))
@settings(max_examples=25, deadline=None)
def test_nested_circles_containment(k, q):
    try:
        circles = nm.make_nested_circles(k, q)
    except InfeasibleNestError:
        return
    r = [c.radius for c in circles]
    assert all(x < 1.0 for x in r)               # zero excluded
    for a, b in zip(r, r[1:]):
        assert a > (1 - q) + q * b               # q C_B inside C_A


def test_nested_circles_infeasible():
    with pytest.raises(InfeasibleNestError):
        nm.make_nested_circles(6, 0.1)
