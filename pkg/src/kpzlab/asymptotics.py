"""Lyapunov exponents, intermittency, KPZ scaling constants and F_GUE comparisons.

The comparisons with F_GUE are finite-size proxies for limit theorems: the
simulated observable is centred and scaled by its closed-form KPZ constants and
its empirical CDF is compared with the Airy-kernel determinant on a grid.
"""
import csv
import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridError, ResolutionError
from .fredholm import fgue_table
from .numerics import digamma, find_root_1d, tetragamma, trigamma
from .processes import (run_ensemble, simulate_asep, simulate_qtasep, simulate_tasep,
                        light_cone_particles)
from .rng import generator

KS_TASEP = 0.05
KS_ASEP = 0.07


@dataclass
class ScalingSpec:
    """Fluctuation exponent b, dynamic exponent z, scale L and a centring t -> c(t, L)."""
    b: float
    z: float
    L: float = 1.0
    centering: callable = None

    def __post_init__(self):
        if self.z <= 0:
            raise DomainError("dynamic exponent must be positive")


# --- Lyapunov exponents ------------------------------------------------------

def H_p(z, p, nu):
    """H_p(z) = p(p-3)/2 + p z - nu log prod_{i<p} (z + i)."""
    return p * (p - 3) / 2.0 + p * z - nu * sum(math.log(z + i) for i in range(p))


def _H_p_prime(z, p, nu):
    return p - nu * sum(1.0 / (z + i) for i in range(p))


def lyapunov_critical_point(p, nu):
    """Unique z > 0 with H_p'(z) = 0 (the sum of 1/(z+i) decreases strictly)."""
    if p < 1 or nu <= 0:
        raise DomainError("need p >= 1 and nu > 0")
    lo = min(1e-12, nu / (4.0 * p))
    hi = nu + 1.0
    return find_root_1d(lambda z: _H_p_prime(z, p, nu), lo, hi)


def lyapunov_gamma_p(p, nu):
    """gamma_p(nu) = H_p(z_p^0)."""
    return H_p(lyapunov_critical_point(p, nu), p, nu)


def tilde1_minimizer(nu):
    """s(nu) > 0 solving nu Psi'(s) = 1; Psi' decreases strictly from +inf to 0."""
    if nu <= 0:
        raise DomainError("need nu > 0")
    f = lambda s: nu * float(trigamma(s)) - 1.0  # noqa: E731
    lo, hi = 1e-3, max(2.0, 2.0 * nu + 2.0)
    while f(lo) < 0:
        lo *= 0.1
    while f(hi) > 0:
        hi *= 2.0
    return find_root_1d(f, lo, hi)


def lyapunov_tilde1(nu):
    """gamma~_1(nu) = -3/2 + inf_{s>0} (s - nu Psi(s))."""
    s = tilde1_minimizer(nu)
    return -1.5 + s - nu * float(digamma(s))


def intermittency_report(nu, pmax=4):
    """The chain gamma~_1 < gamma_1 < gamma_2/2 < ... < gamma_pmax/pmax with margins."""
    if not (1 <= pmax <= 6):
        raise DomainError("pmax must lie in 1..6")
    labels = ["gamma_tilde_1"] + [f"gamma_{p}/{p}" for p in range(1, pmax + 1)]
    values = [lyapunov_tilde1(nu)] + [lyapunov_gamma_p(p, nu) / p for p in range(1, pmax + 1)]
    margins = [b - a for a, b in zip(values[:-1], values[1:])]
    ok = all(np.isfinite(values)) and all(m > 0 for m in margins)
    return {"check": "intermittency", "nu": nu, "labels": labels, "values": values,
            "margins": margins, "min_margin": min(margins) if margins else None,
            "verdict": "PASS" if ok else "FAIL"}


def kpz_constants(nu):
    """(gamma~_1(nu), d(nu)) with d(nu) = (-nu Psi''(s(nu))/2)^{1/3}."""
    s = tilde1_minimizer(nu)
    d = (-nu * float(tetragamma(s)) / 2.0) ** (1.0 / 3.0)
    return -1.5 + s - nu * float(digamma(s)), d


def write_lyapunov_csv(path, nus=(0.5, 1.0, 1.5, 2.0, 3.0)):
    """Columns: nu, gamma_tilde_1, gamma_1, gamma_2/2, gamma_3/3."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["nu", "gamma_tilde_1", "gamma_1", "gamma_2/2", "gamma_3/3"])
        for nu in nus:
            row = [nu, lyapunov_tilde1(nu)] + [lyapunov_gamma_p(p, nu) / p for p in (1, 2, 3)]
            wr.writerow([f"{v:.12g}" for v in row])
    return path


# --- F_GUE comparisons -----------------------------------------------------------

@functools.lru_cache(maxsize=4)
def _table(smin, smax, step):
    return fgue_table(smin, smax, step)


def default_table():
    """(s, F) on [-8, 4] with step 0.05."""
    s, F, _ = _table(-8.0, 4.0, 0.05)
    return s, F


def ks_vs_fgue(samples, grid=None, table=None):
    """max_j |ECDF(s_j) - F_GUE(s_j)| over the grid points.

    `table` = (s, F) supplies F on the grid; otherwise f_gue is tabulated.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise DomainError("no samples")
    if table is None:
        s_tab, F_tab = default_table()
        grid = s_tab if grid is None else np.asarray(grid, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise GridError("grid must be strictly increasing")
        if grid[0] < s_tab[0] or grid[-1] > s_tab[-1]:
            raise GridError("grid leaves the tabulated range [-8, 4]")
        F = np.interp(grid, s_tab, F_tab)
    else:
        grid, F = (np.asarray(v, dtype=float) for v in table)
        if np.any(np.diff(grid) <= 0):
            raise GridError("grid must be strictly increasing")
    ecdf = np.searchsorted(x, grid, side="right") / x.size
    dev = np.abs(ecdf - F)
    j = int(np.argmax(dev))
    ks = float(dev[j])
    return ks, {"check": "ks_vs_fgue", "n": int(x.size), "ks": ks, "at": float(grid[j]),
                "grid_points": int(len(grid))}


def sample_fgue(n, seed, table=None):
    """Inverse-CDF draws from the tabulated F_GUE."""
    s, F = default_table() if table is None else table
    F = np.maximum.accumulate(np.asarray(F, dtype=float))
    keep = np.concatenate([[True], np.diff(F) > 0])
    u = generator(seed, stream=7).random(int(n))
    return np.interp(u, F[keep], np.asarray(s)[keep])


def match_quantiles(samples, table=None):
    """Shape-only standardisation: match median and IQR to those of F_GUE."""
    s, F = default_table() if table is None else table
    F = np.maximum.accumulate(np.asarray(F, dtype=float))
    keep = np.concatenate([[True], np.diff(F) > 0])
    qF = np.interp([0.25, 0.5, 0.75], F[keep], np.asarray(s)[keep])
    x = np.asarray(samples, dtype=float)
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    if q3 <= q1:
        raise ResolutionError("samples too discrete for an IQR fit")
    return (x - med) / (q3 - q1) * (qF[2] - qF[0]) + qF[1]


def _jittered(n, seed):
    return n + generator(seed, stream=9).uniform(-0.5, 0.5)


def tasep_sample(seed, L):
    """chi = -2^{4/3} (N_0(L) - L/4) / L^{1/3}, with a uniform jitter on the count."""
    cfg = simulate_tasep(light_cone_particles(L), float(L), seed)
    n0 = _jittered(cfg.count_at_or_right(0), seed)
    return {"chi": -2.0 ** (4.0 / 3.0) * (n0 - L / 4.0) / L ** (1.0 / 3.0)}


def asep_sample(seed, t_scale, p):
    """chi = -2^{4/3}(N_0(t/(q-p)) - t/4)/t^{1/3}; P(chi <= s) -> F_GUE(s)."""
    qr = 1.0 - p
    T = t_scale / (qr - p)
    cfg = simulate_asep(p, qr, T, seed)
    n0 = _jittered(int(np.count_nonzero(cfg.positions >= 0)), seed)
    return {"chi": -2.0 ** (4.0 / 3.0) * (n0 - t_scale / 4.0) / t_scale ** (1.0 / 3.0)}


def qtasep_sample(seed, n, t, q):
    cfg = simulate_qtasep(q, 1.0, n, float(t), seed)
    return {"x": float(_jittered(cfg.positions[n - 1], seed))}


def tasep_fluctuations(L, replicas, master, workers=1):
    res = run_ensemble(functools.partial(tasep_sample, L=L), replicas, master,
                       {"model": "tasep", "L": L}, workers=workers, keep_samples=True)
    return res.samples["chi"]


def asep_fluctuations(t_scale, p, replicas, master, workers=1):
    res = run_ensemble(functools.partial(asep_sample, t_scale=t_scale, p=p), replicas, master,
                       {"model": "asep", "t": t_scale, "p": p}, workers=workers,
                       keep_samples=True)
    return res.samples["chi"]


def qtasep_fluctuations(n, t, q, replicas, master, workers=1):
    """x_n(t) for q-TASEP, standardised by quantile matching (shape-only)."""
    res = run_ensemble(functools.partial(qtasep_sample, n=n, t=t, q=q), replicas, master,
                       {"model": "qtasep", "n": n, "t": t, "q": q}, workers=workers,
                       keep_samples=True)
    return match_quantiles(res.samples["x"])


def write_ks_csv(path, rows):
    """Columns: model, L, KS, verdict."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["model", "L", "KS", "verdict"])
        for r in rows:
            wr.writerow([r["model"], r["L"], f"{r['KS']:.6g}", r["verdict"]])
    return path


# --- weak scalings ----------------------------------------------------------------

def weak_coefficients(b, z, eps):
    """Coefficients of (1/2)h'', (1/2)(h')^2 and the noise after h -> eps^b h(eps^-z t, eps^-1 x)."""
    return eps ** (2.0 - z), eps ** (2.0 - z - b), eps ** (b - z / 2.0 + 0.5)


def rescale_weak(h_field, b, z, eps, t_grid=None, x_grid=None, dt=1.0, dx=1.0,
                 target_t=None, target_x=None):
    """h_eps(t, x) = eps^b h(eps^-z t, eps^-1 x) for a field sampled on a lattice.

    Without targets, the rescaled field lives on the mapped lattice (eps^z t_i,
    eps x_j). With targets, it is interpolated; ResolutionError if a target
    point falls outside the sampled region or the lattice is coarser than the
    mapped target spacing.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    h = np.asarray(h_field, dtype=float)
    if h.ndim != 2 or min(h.shape) < 2:
        raise ResolutionError("need a 2-d field with at least two samples per axis")
    t = np.arange(h.shape[0]) * dt if t_grid is None else np.asarray(t_grid, dtype=float)
    x = np.arange(h.shape[1]) * dx if x_grid is None else np.asarray(x_grid, dtype=float)
    coef = weak_coefficients(b, z, eps)
    if target_t is None and target_x is None:
        return {"t": eps ** z * t, "x": eps * x, "h": eps ** b * h, "coefficients": coef}
    tt = np.asarray(target_t, dtype=float)
    xx = np.asarray(target_x, dtype=float)
    ts, xs = eps ** (-z) * tt, xx / eps
    if ts.min() < t[0] or ts.max() > t[-1] or xs.min() < x[0] or xs.max() > x[-1]:
        raise ResolutionError("rescaled target leaves the sampled region")
    if len(tt) > 1 and np.max(np.diff(t)) > np.min(np.diff(ts)) + 1e-12:
        raise ResolutionError("time lattice coarser than the rescaled target spacing")
    if len(xx) > 1 and np.max(np.diff(x)) > np.min(np.diff(xs)) + 1e-12:
        raise ResolutionError("space lattice coarser than the rescaled target spacing")
    rows = np.array([np.interp(xs, x, h[i]) for i in range(h.shape[0])])
    out = np.array([np.interp(ts, t, rows[:, j]) for j in range(len(xs))]).T
    return {"t": tt, "x": xx, "h": eps ** b * out, "coefficients": coef}
