import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import digamma

from kpzlab import asymptotics as A
from kpzlab.errors import GridError, ResolutionError


@given(st.floats(0.2, 5.0))
@settings(max_examples=30, deadline=None)
def test_gamma_1_closed_form(nu):
    # H_1(z) = -1 + z - nu log z is minimised at z = nu
    assert A.lyapunov_gamma_p(1, nu) == pytest.approx(-1 + nu - nu * math.log(nu), abs=1e-12)


@given(st.floats(0.3, 4.0))
@settings(max_examples=30, deadline=None)
def test_tilde1_stationarity(nu):
    s = A.tilde1_minimizer(nu)
    assert nu * float(digamma(s + 1e-6) - digamma(s - 1e-6)) / 2e-6 == pytest.approx(1.0, rel=1e-5)
    assert A.lyapunov_tilde1(nu) == pytest.approx(-1.5 + s - nu * float(digamma(s)), abs=1e-12)


@given(st.floats(0.3, 4.0))
@settings(max_examples=20, deadline=None)
def test_intermittency_chain_property(nu):
    r = A.intermittency_report(nu, 4)
    assert r["verdict"] == "PASS" and r["min_margin"] > 0


def test_lyapunov_csv(tmp_path):
    p = A.write_lyapunov_csv(tmp_path / "l.csv", (1.0, 2.0))
    rows = open(p).read().splitlines()
    assert rows[0] == "nu,gamma_tilde_1,gamma_1,gamma_2/2,gamma_3/3" and len(rows) == 3


def test_ks_of_exact_samples_is_small():
    ks, rep = A.ks_vs_fgue(A.sample_fgue(20000, 5))
    assert ks < 0.015 and rep["n"] == 20000


def test_ks_detects_shift():
    ks, _ = A.ks_vs_fgue(A.sample_fgue(5000, 5) + 0.5)
    assert ks > 0.1


def test_ks_grid_errors():
    x = A.sample_fgue(100, 1)
    with pytest.raises(GridError):
        A.ks_vs_fgue(x, grid=np.array([0.0, -1.0, 1.0]))
    with pytest.raises(GridError):
        A.ks_vs_fgue(x, grid=np.linspace(-20, 0, 10))


def test_match_quantiles():
    x = A.match_quantiles(np.random.default_rng(0).normal(size=4000))
    s, F = A.default_table()
    assert np.median(x) == pytest.approx(np.interp(0.5, F, s), abs=1e-9)
    with pytest.raises(ResolutionError):
        A.match_quantiles(np.ones(50))


def test_tasep_sample_scaling():
    chi = A.tasep_fluctuations(400, 50, 3)
    assert chi.shape == (50,) and abs(chi.mean() + 1.77) < 0.6


@given(st.floats(0.5, 1.5), st.floats(1.0, 2.0), st.floats(0.01, 1.0))
def test_weak_coefficients_kpz_scaling(b, z, eps):
    c = A.weak_coefficients(b, z, eps)
    assert c[0] == pytest.approx(eps ** (2 - z)) and c[2] == pytest.approx(eps ** (b - z / 2 + 0.5))
    # b = 1/2, z = 2 leaves the noise coefficient at 1
    assert A.weak_coefficients(0.5, 2.0, eps)[2] == pytest.approx(1.0)


def test_rescale_weak_mapping_and_errors():
    h = np.add.outer(np.arange(20.0), np.arange(30.0))
    out = A.rescale_weak(h, 0.5, 2.0, 0.5)
    assert out["t"][-1] == pytest.approx(19 * 0.25) and out["h"][3, 4] == pytest.approx(0.5 ** 0.5 * 7)
    tgt = A.rescale_weak(h, 0.5, 2.0, 0.5, target_t=[1.0, 2.0], target_x=[2.0, 3.0])
    assert tgt["h"][0, 0] == pytest.approx(0.5 ** 0.5 * (4.0 + 4.0))
    with pytest.raises(ResolutionError):
        A.rescale_weak(h, 0.5, 2.0, 0.5, target_t=[100.0], target_x=[1.0])
    with pytest.raises(ResolutionError):
        A.rescale_weak(np.zeros((1, 5)), 0.5, 2.0, 0.5)
