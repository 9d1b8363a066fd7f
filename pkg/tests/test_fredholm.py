import math

import numpy as np
import pytest
from scipy import integrate

from kpzlab import fredholm as F
from kpzlab import moments as M
from kpzlab.errors import (BranchCutError, ConvergenceError, DomainError,
                           SingularMatrixError)


def test_det_matrix_and_singular():
    A = np.diag([0.5, -0.2])
    assert F.det_matrix(A) == pytest.approx(1.5 * 0.8)
    with pytest.raises(SingularMatrixError):
        F.det_matrix(np.diag([-1.0, 0.3]))
    with pytest.raises(SingularMatrixError):
        F.det_matrix(np.array([[np.nan]]))


def test_rank_one_kernel_closed_form():
    # det(I + K) for K(x, y) = f(x) g(y) equals 1 + int f g
    rule = F.uniform_rule(0.0, 1.0, 101)
    kern = lambda x, y: np.exp(x) * np.cos(y)  # noqa: E731
    ref = 1 + integrate.quad(lambda x: math.exp(x) * math.cos(x), 0, 1)[0]
    assert F.fredholm_det((kern, rule), None) == pytest.approx(ref, rel=1e-8)


def test_fgue_reference_value():
    assert F.f_gue(-2.0) == pytest.approx(0.41322414250512257, abs=1e-10)


def test_fgue_right_tail():
    # 1 - F(s) ~ e^{-4 s^{3/2} / 3} / (16 pi s^{3/2})
    s = 4.0
    lead = math.exp(-4 * s ** 1.5 / 3) / (16 * math.pi * s ** 1.5)
    assert (1 - F.f_gue(s)) / lead == pytest.approx(1.0, abs=0.2)


def test_fgue_left_tail():
    # log F(s) = -|s|^3/12 - log|s|/8 + log(2^{1/24} e^{zeta'(-1)}) + o(1)
    s = -6.0
    c0 = math.log(2 ** (1 / 24)) - 0.16542114370045092
    lead = -abs(s) ** 3 / 12 - math.log(abs(s)) / 8 + c0
    assert math.log(F.f_gue(s)) == pytest.approx(lead, abs=0.01)


def test_fgue_routes_and_monotone():
    for s in (-5.0, -1.0, 1.5):
        assert F.f_gue(s) == pytest.approx(F.f_gue(s, nodes=1601, method="uniform"), abs=1e-8)
    s, Fv, d = F.fgue_table(-6.0, 3.0, 0.25)
    assert np.all(np.diff(Fv) >= -1e-14) and np.all(d >= 0)
    # density integrates to the mass gained over the window
    assert np.trapezoid(d, s) == pytest.approx(Fv[-1] - Fv[0], abs=5e-3)


def test_fgue_domain():
    with pytest.raises(DomainError):
        F.f_gue(6.0)


def test_fgue_csv(tmp_path):
    p = F.write_fgue_csv(tmp_path / "f.csv", -3.0, 0.0, 0.5)
    lines = open(p).read().splitlines()
    assert lines[0] == "s,F,density" and len(lines) == 8


@pytest.mark.parametrize("zeta", [-0.05, 0.04j, -0.03 + 0.02j])
def test_qtasep_det_matches_series(zeta):
    det = F.eq_laplace_qtasep(zeta, 2, 1.0, 0.5)
    ser, tail, _ = M.eq_laplace_series("qtasep", zeta, 2, 1.0, q=0.5)
    assert abs(det - ser) < 1e-8 + tail


def test_qtasep_kernel_forms_agree():
    a = F.eq_laplace_qtasep(-0.3, 3, 0.7, 0.4, form="mb")
    b = F.eq_laplace_qtasep(-0.3, 3, 0.7, 0.4, form="series")
    assert abs(a - b) < 1e-9


def test_qtasep_branch_cut():
    with pytest.raises(BranchCutError):
        F.eq_laplace_qtasep(0.3, 2, 1.0, 0.5)


def test_sd_n1_lognormal():
    # n = 1: e^{-u z} with log z = B_tau - tau/2... integrate against the Gaussian density
    tau, u = 1.0, 0.3
    f = lambda g: math.exp(-u * math.exp(g - tau / 2) * math.exp(tau / 2)) \
        * math.exp(-g * g / (2 * tau)) / math.sqrt(2 * math.pi * tau)  # noqa: E731
    ref = integrate.quad(f, -40, 40, epsabs=1e-14)[0]
    assert F.laplace_sd(u, 1, tau).real == pytest.approx(ref, abs=1e-10)


def test_sd_radius_guard():
    with pytest.raises(DomainError):
        F.sd_spec(1.0, 1, 1.0, radius=0.3)


def test_asep_det_matches_series():
    v = F.eq_laplace_asep(-0.02, 1, 1.0, 0.3, 0.7, check=False)
    ser, tail, _ = M.eq_laplace_series("asep", -0.02, 1, 1.0, p=0.3, q_rate=0.7)
    assert abs(v - ser) < 1e-5 + tail


def test_kpz_laplace_properties():
    a, b = F.laplace_kpz(0.5, 1.0), F.laplace_kpz(2.0, 1.0)
    assert 0 < b.real < a.real < 1
    with pytest.raises(DomainError):
        F.laplace_kpz(-1.0, 1.0)


def test_doubling_raises_when_unconverged():
    spec = F.airy_spec(-2.0)
    with pytest.raises(ConvergenceError):
        F.doubled_det(spec, 4, 1e-15, max_nodes=8)
