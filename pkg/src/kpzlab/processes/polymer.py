"""O'Connell-Yor semi-discrete directed polymer.

The free energies F_n solve dF_n = e^{F_{n-1} - F_n} dtau + dB_n (F_0 = -inf).
We integrate the exponential transform z(tau, n) = e^{-3tau/2 + F_n(tau)},
which solves the semi-discrete heat equation
    dz_n = (z_{n-1} - z_n) dtau + z_n dB_n,   z(0, n) = 1_{n=1},
by the positivity-preserving split step
    z_n <- exp(dB_n - 3h/2) (z_n + h z_{n-1}),
exact for n = 1 and weak order one in general.
"""
import math

import numpy as np
from numba import njit

from ..errors import DomainError, StepSizeError
from ..rng import as_seed, generator


@njit(cache=True)
def _oy_kernel(n, steps, h, rng):
    z = np.zeros(n)
    z[0] = 1.0
    sq = math.sqrt(h)
    for _ in range(steps):
        prev = 0.0
        for j in range(n):
            zj = z[j]
            z[j] = math.exp(sq * rng.standard_normal() - 1.5 * h) * (zj + h * prev)
            prev = zj
    return z


def simulate_oy_sde(n, tau, dt=None, seed=0):
    """Return (F_1..F_n, z(tau, 1..n)) for one replica; F_n = log z_n + 3 tau / 2."""
    if n < 1 or tau <= 0:
        raise DomainError("need n >= 1 and tau > 0")
    dt = tau / 1e4 if dt is None else float(dt)
    if dt <= 0:
        raise DomainError("dt must be positive")
    if dt > tau / 100.0:
        raise StepSizeError(f"dt = {dt} exceeds tau/100 = {tau / 100.0}")
    steps = int(round(tau / dt))
    z = _oy_kernel(int(n), steps, tau / steps, generator(seed))
    with np.errstate(divide="ignore"):
        F = np.log(z) + 1.5 * tau
    return F, z


def oy_simplex_sample(n, tau, seed):
    """One unbiased sample whose mean is E z(tau, n).

    Jump times are n-1 uniform order statistics on [0, tau]; the Brownian
    increments over the resulting gaps are independent Gaussians.
    """
    rng = generator(seed)
    s = np.sort(rng.uniform(0.0, tau, size=n - 1))
    gaps = np.diff(np.concatenate([[0.0], s, [tau]]))
    g = float(np.sum(rng.standard_normal(n) * np.sqrt(gaps)))
    vol = tau ** (n - 1) / math.factorial(n - 1)
    return math.exp(-1.5 * tau + g) * vol


def simulate_oy_simplex(n, tau, replicas, seed):
    """Monte Carlo of the Feynman-Kac simplex integral for z(tau, n)."""
    from .ensemble import run_ensemble
    if n < 1 or tau <= 0 or replicas < 1:
        raise DomainError("need n >= 1, tau > 0, replicas >= 1")
    s = as_seed(seed)
    return run_ensemble(lambda sd: {"z": oy_simplex_sample(n, tau, sd)}, replicas,
                        s.master, params={"model": "oy_simplex", "n": n, "tau": tau})


def oy_mean_exact(n, tau):
    """E z(tau, n) = e^{-tau} tau^{n-1} / (n-1)!."""
    return math.exp(-tau) * tau ** (n - 1) / math.factorial(n - 1)
