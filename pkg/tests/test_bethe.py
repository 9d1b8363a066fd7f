import numpy as np
import pytest

from kpzlab import bethe as B
from kpzlab.errors import DomainError
from kpzlab.moments import duality_moment, ordered_states


@pytest.mark.parametrize("side", ["left", "right"])
def test_eigenrelation(side):
    z = (0.7 + 0.1j, 1.3 - 0.2j, 0.4 + 0.5j)
    states = ordered_states(3, -2, 2)
    assert B.eigenrelation_residual(z, 0.45, states, side) < 1e-12


def test_biorthogonality_k2():
    assert B.biorthogonality(2, (-1, 2), 0.5) < 1e-8


def test_plancherel_roundtrip_on_delta():
    q, m = 0.5, (2, 0)
    G = B.G_right(m, q)
    for n in [(2, 0), (1, 1), (2, 2)]:
        v = B.transform_inverse(G, n, q, form="determinantal")
        assert abs(v - (1.0 if n == m else 0.0)) < 1e-8


def test_transform_direct_is_linear():
    z = (0.6 + 0.2j, 1.1 - 0.1j)
    f = {(1, 0): 2.0, (2, 2): -1.0}
    g = {(1, 0): 1.0}
    h = {(2, 2): -1.0}
    lhs = B.transform_direct(f, z, 0.5)
    rhs = 2 * B.transform_direct(g, z, 0.5) + B.transform_direct(h, z, 0.5)
    assert abs(lhs - rhs) < 1e-12


def test_qboson_solution_matches_duality_moment():
    q, t, n = 0.5, 0.8, (2, 1)
    sol = B.solve_qboson(B.G_step(2, q), t, n, q)
    assert abs(complex(sol) - duality_moment(n, t, q)) < 1e-8


def test_free_evolution_and_boundary():
    r = B.check_free_evolution_and_boundary(2, (2, 1), 0.5, 0.5)
    assert r["verdict"] == "PASS"


def test_qboson_algebra():
    r = B.qboson_algebra_check(2, 3, 0.5)
    assert r["verdict"] == "PASS"


def test_duality_mc():
    r = B.check_duality(2, (2, 1), 1.0, 0.5, 20000, 3)
    assert r["verdict"] == "PASS"


def test_c_q_definition():
    q = 0.3
    clusters = (1 - q) * (1 - q ** 2) / (1 - q) ** 2      # (2)!_q (1)!_q
    assert B.c_q((2, 2, 1), q) == pytest.approx(-q ** -3 * clusters)
