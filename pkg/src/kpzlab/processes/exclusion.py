"""Exclusion processes from step initial data: TASEP, q-TASEP and ASEP.

Particles are labelled right to left, x_1 > x_2 > ..., and start at x_i = -i.
Trajectories are exact: every model is run with a next-reaction event loop in
which only the clocks of the moving particle and its neighbours are redrawn.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import stats

from ..errors import DomainError, InvariantViolation, LightConeError
from ..rng import as_seed, generator
from .engine import heap_init, redraw


@dataclass
class ParticleConfig:
    """Ordered particle positions (exclusion) or an occupation map (q-Boson)."""
    model: str
    positions: np.ndarray = None
    occupation: dict = None
    time: float = 0.0
    meta: dict = field(default_factory=dict)
    events: list = None

    def __post_init__(self):
        if self.positions is not None:
            x = np.asarray(self.positions)
            if x.size > 1 and np.any(np.diff(x) >= 0):
                raise InvariantViolation("exclusion positions must be strictly decreasing")

    def count_at_or_right(self, y):
        """N_y = |{m : x_m >= y}|, exact only inside the tracked light cone."""
        x = self.positions
        if x is not None and x.size and x[-1] >= y and not self.meta.get("complete", False):
            raise LightConeError(
                f"site {y} lies inside the region the untracked particles may reach")
        return int(np.count_nonzero(x >= y))

    def height(self, xs):
        """TASEP height h(t, x) = x + 2 N_x(t); equals |x| at time zero."""
        xs = np.atleast_1d(np.asarray(xs, dtype=np.int64))
        return np.array([int(s) + 2 * self.count_at_or_right(int(s)) for s in xs])


def light_cone_particles(t, y_min=0):
    """Particles to track so that sites >= y_min are exact w.p. >= 1 - 1e-9."""
    return int(np.ceil(t + 8.0 * np.sqrt(t + 1.0))) + abs(int(y_min))


def light_cone_bound(t, n_particles, y_min=0):
    """Poisson-tail bound on an untracked particle influencing sites >= y_min."""
    dist = n_particles - abs(int(y_min))
    return float(stats.poisson.sf(dist - 1, t)) if dist > 0 else 1.0


@njit(cache=True)
def _tasep_kernel(x, t_end, rng, log_t, log_i):
    m = x.shape[0]
    key = np.full(m, np.inf)
    for i in range(m):
        if i == 0 or x[i - 1] - x[i] > 1:
            key[i] = rng.standard_exponential()
    heap, pos = heap_init(key)
    nev = 0
    cap = log_t.shape[0]
    while True:
        c = heap[0]
        now = key[c]
        if now > t_end:
            break
        x[c] += 1
        if nev < cap:
            log_t[nev] = now
            log_i[nev] = c
        nev += 1
        if c == 0 or x[c - 1] - x[c] > 1:
            redraw(heap, pos, key, c, 1.0, now, rng)
        else:
            redraw(heap, pos, key, c, 0.0, now, rng)
        if c + 1 < m:
            redraw(heap, pos, key, c + 1, 1.0, now, rng)
    return nev


@njit(cache=True)
def _qtasep_kernel(x, a, q, t_end, rng, log_t, log_i):
    m = x.shape[0]
    key = np.full(m, np.inf)
    for i in range(m):
        if i == 0:
            r = a[0]
        else:
            r = a[i] * (1.0 - q ** (x[i - 1] - x[i] - 1))
        if r > 0.0:
            key[i] = rng.standard_exponential() / r
    heap, pos = heap_init(key)
    nev = 0
    cap = log_t.shape[0]
    while True:
        c = heap[0]
        now = key[c]
        if now > t_end:
            break
        x[c] += 1
        if nev < cap:
            log_t[nev] = now
            log_i[nev] = c
        nev += 1
        if c == 0:
            r = a[0]
        else:
            r = a[c] * (1.0 - q ** (x[c - 1] - x[c] - 1))
        redraw(heap, pos, key, c, r, now, rng)
        if c + 1 < m:
            r = a[c + 1] * (1.0 - q ** (x[c] - x[c + 1] - 1))
            redraw(heap, pos, key, c + 1, r, now, rng)
    return nev


@njit(cache=True)
def _asep_rate(x, i, p, qr, wall):
    m = x.shape[0]
    r = 0.0
    if i == 0 or x[i - 1] - x[i] > 1:
        r += qr
    nxt = wall if i == m - 1 else x[i + 1]
    if x[i] - nxt > 1:
        r += p
    return r


@njit(cache=True)
def _asep_kernel(x, p, qr, wall, t_end, rng, log_t, log_i, log_d):
    m = x.shape[0]
    key = np.full(m, np.inf)
    for i in range(m):
        r = _asep_rate(x, i, p, qr, wall)
        if r > 0.0:
            key[i] = rng.standard_exponential() / r
    heap, pos = heap_init(key)
    nev = 0
    cap = log_t.shape[0]
    while True:
        c = heap[0]
        now = key[c]
        if now > t_end:
            break
        right_ok = c == 0 or x[c - 1] - x[c] > 1
        nxt = wall if c == m - 1 else x[c + 1]
        left_ok = x[c] - nxt > 1
        if right_ok and left_ok:
            d = 1 if rng.random() * (p + qr) < qr else -1
        elif right_ok:
            d = 1
        else:
            d = -1
        x[c] += d
        if nev < cap:
            log_t[nev] = now
            log_i[nev] = c
            log_d[nev] = d
        nev += 1
        redraw(heap, pos, key, c, _asep_rate(x, c, p, qr, wall), now, rng)
        if c > 0:
            redraw(heap, pos, key, c - 1, _asep_rate(x, c - 1, p, qr, wall), now, rng)
        if c + 1 < m:
            redraw(heap, pos, key, c + 1, _asep_rate(x, c + 1, p, qr, wall), now, rng)
    return nev


def _logs(record):
    n = int(record) if record else 0
    return np.zeros(n), np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64)


def _event_list(model, lt, li, ld, nev, x0, dpos=None):
    """Per-event records {t, model, particle, site, delta}; site is the target."""
    pos = np.array(x0, dtype=np.int64)
    out = []
    for j in range(min(nev, lt.shape[0])):
        i = int(li[j])
        d = int(ld[j]) if dpos else 1
        pos[i] += d
        out.append({"t": float(lt[j]), "model": model, "particle": i + 1,
                    "site": int(pos[i]), "delta": d})
    if nev > lt.shape[0]:
        raise DomainError("event log capacity exceeded; raise `record`")
    return out


def simulate_tasep(n_particles, t, seed, record=0):
    """TASEP from step initial data; particle i fires at rate 1 when unblocked."""
    if t < 0 or n_particles < 1:
        raise DomainError("need t >= 0 and at least one particle")
    x0 = -np.arange(1, n_particles + 1, dtype=np.int64)
    x = x0.copy()
    lt, li, ld = _logs(record)
    nev = _tasep_kernel(x, float(t), generator(seed), lt, li)
    cfg = ParticleConfig("tasep", x, time=float(t),
                         meta={"events": nev, "seed": as_seed(seed).to_dict()})
    if record:
        cfg.events = _event_list("tasep", lt, li, ld, nev, x0)
    return cfg


def simulate_qtasep(q, a, n_particles, t, seed, record=0):
    """q-TASEP: particle i jumps right at rate a_i (1 - q^{gap_i})."""
    if not (0.0 <= q < 1.0):
        raise DomainError("q must lie in [0, 1)")
    a = np.broadcast_to(np.asarray(a, dtype=float), (n_particles,)).copy() \
        if np.ndim(a) == 0 else np.asarray(a, dtype=float)
    if a.shape[0] < n_particles:
        raise DomainError("need one rate per particle")
    a = a[:n_particles].copy()
    if np.any(a <= 0):
        raise DomainError("rates a_i must be positive")
    if t < 0:
        raise DomainError("t must be non-negative")
    x0 = -np.arange(1, n_particles + 1, dtype=np.int64)
    x = x0.copy()
    lt, li, ld = _logs(record)
    nev = _qtasep_kernel(x, a, float(q), float(t), generator(seed), lt, li)
    cfg = ParticleConfig("qtasep", x, time=float(t),
                         meta={"events": nev, "seed": as_seed(seed).to_dict(),
                               "complete": True})
    if record:
        cfg.events = _event_list("qtasep", lt, li, ld, nev, x0)
    return cfg


def simulate_asep(p, q_rate, t, seed, y_min=0, n_particles=None, record=0):
    """ASEP: each particle tries left at rate p and right at rate q_rate.

    Particles beyond the tracked ones are frozen at their initial sites; the
    Poisson bound on that approximation is stored in ``meta['truncation_bound']``.
    """
    if not (0.0 <= p < q_rate < 1.0) or abs(p + q_rate - 1.0) > 1e-12:
        raise DomainError("need 0 <= p < q_rate, p + q_rate = 1")
    if t < 0:
        raise DomainError("t must be non-negative")
    if n_particles is None:
        n_particles = light_cone_particles(t, y_min)
    x0 = -np.arange(1, n_particles + 1, dtype=np.int64)
    x = x0.copy()
    lt, li, ld = _logs(record)
    nev = _asep_kernel(x, float(p), float(q_rate), -(n_particles + 1), float(t),
                       generator(seed), lt, li, ld)
    bound = light_cone_bound(t, n_particles, y_min)
    cfg = ParticleConfig("asep", x, time=float(t),
                         meta={"events": nev, "seed": as_seed(seed).to_dict(),
                               "y_min": int(y_min), "truncation_bound": bound,
                               "complete": bound < 1e-9})
    if record:
        cfg.events = _event_list("asep", lt, li, ld, nev, x0, dpos=True)
    return cfg


def asep_N(cfg, y):
    """N_y(t) = |{m : x_m(t) >= y}|."""
    if y < cfg.meta.get("y_min", y):
        raise LightConeError("y below the y_min used to size the simulation")
    return int(np.count_nonzero(cfg.positions >= y))


def asep_Qtilde(cfg, y, tau):
    """Q~_y = (tau^{N_{y+1}} - tau^{N_y}) / (1 - tau)."""
    return (tau ** asep_N(cfg, y + 1) - tau ** asep_N(cfg, y)) / (1.0 - tau)


def qtasep_positions_batch(q, a, n_particles, t, master, replicas, first=0):
    """Final positions of replicas first..first+replicas-1 (rows), without per-run records.

    Replica r uses the same stream as simulate_qtasep(..., seed=SeedSpec(master, r)),
    so the values coincide with the single-run path.
    """
    from ..rng import SeedSpec
    if not (0.0 <= q < 1.0) or t < 0:
        raise DomainError("need 0 <= q < 1 and t >= 0")
    a = np.broadcast_to(np.asarray(a, dtype=float), (n_particles,)).copy() \
        if np.ndim(a) == 0 else np.asarray(a, dtype=float)[:n_particles].copy()
    x0 = -np.arange(1, n_particles + 1, dtype=np.int64)
    out = np.empty((int(replicas), n_particles), dtype=np.int64)
    lt, li, _ = _logs(0)
    for j in range(int(replicas)):
        x = x0.copy()
        _qtasep_kernel(x, a, float(q), float(t), generator(SeedSpec(master, first + j)), lt, li)
        out[j] = x
    return out
