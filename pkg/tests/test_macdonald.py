import math

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from kpzlab import macdonald as D
from kpzlab import moments as M
from kpzlab.errors import CoincidentPointError, DomainError


def test_operator_on_linear_function():
    # D^1_1 f(x) = f(q x_1, x_2, ...)
    f = lambda x: mp.fsum(x)  # noqa: E731
    assert D.apply_difference_operator(f, 1, 0.4, (1.3, 2.0)) == pytest.approx(0.4 * 1.3 + 2.0)


def test_operator_constant_eigenvalue():
    # D^n_1 1 = sum_i prod_{j!=i} x_j/(x_j - x_i) = 1 for every n (partial fractions)
    for n in (1, 2, 3):
        v = D.apply_difference_operator(lambda x: mp.mpf(1), n, 0.5, (1.1, 1.7, 2.9))
        assert v == pytest.approx(1.0, abs=1e-40)


def test_coincident_points_rejected():
    with pytest.raises(CoincidentPointError):
        D.apply_difference_operator(lambda x: mp.mpf(1), 2, 0.5, (1.0, 1.0))
    with pytest.raises(DomainError):
        D.apply_difference_operator(lambda x: mp.mpf(1), 3, 0.5, (1.0, 2.0))


@given(st.lists(st.floats(0.3, 3.0), min_size=3, max_size=3, unique=True),
       st.integers(1, 3), st.integers(1, 2), st.floats(0.1, 0.9))
@settings(max_examples=20, deadline=None)
def test_commutator_identity_property(a, n, k, q):
    if min(abs(x - y) for i, x in enumerate(a) for y in a[i + 1:]) < 1e-3:
        return
    f = lambda x: mp.exp(mp.fsum(x) / 3) * (1 + x[0] * x[-1])  # noqa: E731
    assert D.commutator_check(n, k, q, f, tuple(a))["verdict"] == "PASS"


@pytest.mark.parametrize("n", [(1,), (2, 1), (2, 2)])
def test_homogeneous_operator_expectation_matches_moment(n):
    q, t = 0.5, 1.0
    ref = M.qtasep_moment(M.MomentQuery("qtasep", len(n), n, t, {"q": q})).value_re
    assert D.expectation_homogeneous(len(n), n, t, q).real == pytest.approx(ref, abs=1e-8)


def test_inhomogeneous_rates_match_moment():
    a = (0.8, 1.3)
    ref = M.qtasep_moment(M.MomentQuery("qtasep", 2, (2, 1), 0.7, {"q": 0.4}, a=a)).value_re
    assert D.expectation_via_operators(2, (2, 1), 0.7, 0.4, a).real == pytest.approx(ref, abs=1e-8)


def test_qboson_via_operators_single_particle():
    # one particle at site 1: e^{-(1-q) t}
    q, t = 0.3, 1.5
    assert D.qboson_via_operators(t, {1: 1}, q).real == pytest.approx(math.exp(-(1 - q) * t), abs=1e-9)
    assert D.qboson_via_operators(t, {0: 1}, q) == 0


def test_neville_exact_on_polynomials():
    eps = [0.1, 0.2, 0.3]
    vals = [2 + 3 * e - e * e for e in eps]
    assert float(D.neville_zero(eps, vals)) == pytest.approx(2.0, abs=1e-30)
