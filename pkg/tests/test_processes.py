import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpzlab import processes as P
from kpzlab.errors import DomainError, InvariantViolation, LightConeError, StepSizeError
from kpzlab.rng import SeedSpec, generator


def test_rng_streams_are_reproducible_and_distinct():
    a = generator(SeedSpec(7, 3)).random(5)
    assert np.array_equal(a, generator(SeedSpec(7, 3)).random(5))
    assert not np.array_equal(a, generator(SeedSpec(7, 4)).random(5))
    assert not np.array_equal(a, generator(SeedSpec(7, 3), stream=1).random(5))


def test_seed_validation():
    with pytest.raises(ValueError):
        SeedSpec(-1)
    with pytest.raises(ValueError):
        SeedSpec(1, -2)


def test_ensemble_independent_of_worker_split():
    fn = lambda sd: {"u": float(generator(sd).random())}  # noqa: E731
    one = P.run_ensemble(fn, 40, 11, keep_samples=True)
    again = P.run_ensemble(fn, 40, 11, keep_samples=True)
    assert np.array_equal(one.samples["u"], again.samples["u"])


def _top_level(sd):
    return {"N": P.simulate_tasep(30, 5.0, sd).count_at_or_right(0)}


def test_ensemble_workers_match_serial():
    serial = P.run_ensemble(_top_level, 12, 5, keep_samples=True)
    split = P.run_ensemble(_top_level, 12, 5, workers=2, keep_samples=True)
    assert np.array_equal(serial.samples["N"], split.samples["N"])


def test_summarize_histogram_mass():
    s = P.summarize([0, 1, 1, 2, 5])
    assert sum(s["histogram"]["counts"]) == 5
    assert s["mean"] == pytest.approx(1.8)


@given(st.integers(0, 10 ** 6), st.floats(0.0, 8.0))
@settings(max_examples=30, deadline=None)
def test_tasep_exclusion_invariant(seed, t):
    cfg = P.simulate_tasep(20, t, seed)
    assert np.all(np.diff(cfg.positions) < 0)
    assert np.all(cfg.positions >= -np.arange(1, 21))


def test_tasep_height_at_time_zero():
    cfg = P.simulate_tasep(10, 0.0, 0)
    assert np.array_equal(cfg.height([-3, 0, 2]), [3, 0, 2])


def test_tasep_light_cone_error():
    cfg = P.simulate_tasep(3, 50.0, 1)
    with pytest.raises(LightConeError):
        cfg.count_at_or_right(-10)


def test_tasep_mean_current():
    # N_0(t)/t -> 1/4 for step initial data
    t = 400.0
    vals = [P.simulate_tasep(P.light_cone_particles(t), t, SeedSpec(3, r)).count_at_or_right(0)
            for r in range(20)]
    assert np.mean(vals) / t == pytest.approx(0.25, abs=0.02)


def test_particle_config_rejects_collisions():
    with pytest.raises(InvariantViolation):
        P.ParticleConfig("tasep", np.array([-1, -1]))


def test_qtasep_batch_matches_single_runs():
    X = P.qtasep_positions_batch(0.4, 1.0, 5, 2.0, 99, 6)
    for r in range(6):
        assert np.array_equal(X[r], P.simulate_qtasep(0.4, 1.0, 5, 2.0, SeedSpec(99, r)).positions)


def test_qtasep_first_moment_n1():
    # E q^{x_1(t)+1} = e^{-(1-q) t}
    q, t = 0.5, 1.0
    X = P.qtasep_positions_batch(q, 1.0, 1, t, 2, 40000)
    v = q ** (X[:, 0] + 1.0)
    assert abs(v.mean() - np.exp(-(1 - q) * t)) < 4 * v.std() / np.sqrt(v.size)


def test_qtasep_q_zero_is_tasep_like():
    cfg = P.simulate_qtasep(0.0, 1.0, 6, 3.0, 4)
    assert np.all(np.diff(cfg.positions) < 0)


def test_qtasep_domain():
    with pytest.raises(DomainError):
        P.simulate_qtasep(1.0, 1.0, 3, 1.0, 0)
    with pytest.raises(DomainError):
        P.simulate_qtasep(0.5, [1.0, -1.0], 2, 1.0, 0)


def test_asep_record_and_qtilde():
    cfg = P.simulate_asep(0.3, 0.7, 2.0, 8, y_min=-2)
    tau = 0.3 / 0.7
    for y in (-2, -1, 0, 1):
        Nq, N = P.asep_N(cfg, y + 1), P.asep_N(cfg, y)
        eta = int(np.any(cfg.positions == y))
        assert N - Nq == eta
        assert P.asep_Qtilde(cfg, y, tau) == pytest.approx(eta * tau ** Nq)
    with pytest.raises(LightConeError):
        P.asep_N(cfg, -5)


def test_asep_domain():
    with pytest.raises(DomainError):
        P.simulate_asep(0.6, 0.4, 1.0, 0)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_qboson_conserves_particles(seed):
    cfg = P.simulate_qboson(0.5, {3: 2, 1: 1}, 2.0, seed)
    assert sum(cfg.occupation.values()) == 3
    assert max(cfg.occupation) <= 3


def test_occupation_roundtrip():
    n = P.occupation_to_ordered({4: 1, 2: 3})
    assert list(n) == [4, 2, 2, 2]
    assert P.ordered_to_occupation(n) == {2: 3, 4: 1}


def test_gt_interlacing_and_edge():
    g = P.simulate_gt_dynamics(0.5, 1.0, 4, 3.0, 1, check=True)
    assert g.check_interlacing()
    assert len(g.edge()) == 4


def test_oy_simplex_mean():
    res = P.simulate_oy_simplex(2, 1.0, 20000, 3)
    ref = P.oy_mean_exact(2, 1.0)
    assert abs(res.mean("z") - ref) < 4 * res.stderr("z")


def test_oy_sde_step_size_guard():
    with pytest.raises(StepSizeError):
        P.simulate_oy_sde(2, 1.0, dt=0.5, seed=0)
    F, z = P.simulate_oy_sde(3, 0.5, seed=1)
    assert np.all(z > 0) and F.shape == (3,)
