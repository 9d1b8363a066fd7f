import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpzlab import moments as M
from kpzlab.errors import DomainError, OrderTooLarge

ASEP = {"p": 0.3, "q_rate": 0.7}
TAU = 0.3 / 0.7


def Q(model, idx, t, params=None, a=None):
    return M.MomentQuery(model, len(idx), idx, t, params or {}, a=a)


@given(st.floats(0.1, 0.9), st.floats(0.0, 3.0))
@settings(max_examples=15, deadline=None)
def test_qtasep_first_particle_closed_form(q, t):
    r = M.qtasep_moment(Q("qtasep", (1,), t, {"q": q}))
    assert r.value_re == pytest.approx(math.exp(-(1 - q) * t), abs=1e-10)


@pytest.mark.parametrize("n", [(2,), (3, 1), (2, 2), (3, 2, 1)])
def test_qtasep_quadrature_residue_duality(n):
    q, t = 0.5, 1.2
    quad = M.qtasep_moment(Q("qtasep", n, t, {"q": q})).value_re
    res = M.qtasep_moment_residue(Q("qtasep", n, t, {"q": q})).value_re
    dual = M.duality_moment(n, t, q)
    assert quad == pytest.approx(res, abs=1e-9)
    assert quad == pytest.approx(dual, abs=1e-9)


def test_qtasep_moment_at_time_zero():
    # x_n(0) + n = 0, so every q-moment equals 1
    assert M.qtasep_moment(Q("qtasep", (3, 1), 0.0, {"q": 0.3})).value_re == pytest.approx(1.0)


def test_query_validation():
    with pytest.raises(DomainError):
        Q("qtasep", (1, 2), 1.0, {"q": 0.5})
    with pytest.raises(DomainError):
        Q("qtasep", (1,), 1.0, {"q": 1.5})
    with pytest.raises(DomainError):
        Q("asep", (0, 1), 1.0, ASEP)
    with pytest.raises(DomainError):
        Q("she", (1, 0), 1.0)
    with pytest.raises(DomainError):
        Q("polymer", (1,), 1.0)
    with pytest.raises(OrderTooLarge):
        Q("qtasep", (1,) * 40, 1.0, {"q": 0.5})


@pytest.mark.parametrize("y", [(0,), (-2,), (1, -1), (-1, -3)])
def test_asep_moment_at_time_zero(y):
    # Q~_y = eta_y tau^{N_{y+1}} and step data has x_m = -m
    ref = 1.0
    for v in y:
        ref *= (1.0 if v <= -1 else 0.0) * TAU ** max(0, -(v + 1))
    assert M.asep_moment(Q("asep", y, 0.0, ASEP)).value_re == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("k,y", [(1, 0), (2, -2), (3, 1)])
def test_asep_expansion_at_time_zero(k, y):
    r = M.asep_qmoment_expansion(k, y, 0.0, ASEP)
    assert r.value_re == pytest.approx(TAU ** (k * max(0, -y)), abs=1e-12)


def test_asep_expansion_routes_agree():
    a = M.asep_qmoment_expansion(2, 0, 0.8, ASEP, route="closed").value_re
    b = M.asep_qmoment_expansion(2, 0, 0.8, ASEP, route="direct").value_re
    assert a == pytest.approx(b, abs=1e-9)


def test_expansion_identity_brute_force():
    assert M.expansion_brute_force() < 1e-12


def test_she_first_moment_is_heat_kernel():
    for t in (0.5, 2.0):
        r = M.she_moment(Q("she", (0,), t))
        assert r.value_re == pytest.approx(1 / math.sqrt(2 * math.pi * t), rel=1e-10)


@pytest.mark.parametrize("t", [0.5, 1.0, 3.0])
def test_she_second_moment_closed_form(t):
    ref = (1 + math.sqrt(math.pi * t) / 2 * math.exp(t / 4) * (1 + math.erf(math.sqrt(t) / 2)))
    ref /= 2 * math.pi * t
    assert M.she_moment(Q("she", (0, 0), t)).value_re == pytest.approx(ref, rel=1e-9)


def test_eq_laplace_series_small_zeta():
    v, tail, _ = M.eq_laplace_series("qtasep", 0.0, 2, 1.0, q=0.5)
    assert v == pytest.approx(1.0)
    assert tail < 1e-12


def test_moment_result_serializes():
    d = M.qtasep_moment(Q("qtasep", (2, 1), 1.0, {"q": 0.5})).to_dict()
    assert d["indices"] == [2, 1] and set(d) >= {"value_re", "node_count", "error_estimate"}
