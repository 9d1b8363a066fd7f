"""Continuous-time t = 0 Macdonald dynamics on Gelfand-Tsetlin patterns.

Particle lambda^(m)_k jumps right at rate
    a_m (1 - q^{l^{m-1}_{k-1} - l^m_k}) (1 - q^{l^m_k - l^m_{k+1} + 1})
        / (1 - q^{l^m_k - l^{m-1}_k + 1}),
with factors referring to missing particles left out. The denominator
vanishes exactly when lambda^(m-1)_k has just moved level with
lambda^(m)_k + 1; the infinite rate is realised as an instantaneous push,
which may cascade upward through the levels.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..errors import DomainError, InvariantViolation
from ..rng import as_seed, generator


@dataclass
class GTPattern:
    N: int
    lam: np.ndarray           # lam[m, k] for 1 <= k <= m <= N (row 0, col 0 unused)
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    def level(self, m):
        return self.lam[m, 1:m + 1].copy()

    def check_interlacing(self):
        return interlacing_violations(self.lam, self.N) == 0

    def edge(self):
        """(lambda^(m)_m - m)_{m=1..N}, the q-TASEP marginal."""
        return np.array([self.lam[m, m] - m for m in range(1, self.N + 1)])


@njit(cache=True)
def interlacing_violations(lam, N):
    bad = 0
    for m in range(2, N + 1):
        for k in range(1, m):
            if not (lam[m, k + 1] <= lam[m - 1, k] <= lam[m, k]):
                bad += 1
    for m in range(1, N + 1):
        for k in range(1, m + 1):
            if lam[m, k] < 0:
                bad += 1
    return bad


@njit(cache=True)
def _rate(lam, m, k, a, q):
    r = a[m - 1]
    if m > 1 and k > 1:
        r *= 1.0 - q ** (lam[m - 1, k - 1] - lam[m, k])
    if k < m:
        r *= 1.0 - q ** (lam[m, k] - lam[m, k + 1] + 1)
    if m > 1 and k < m:
        d = 1.0 - q ** (lam[m, k] - lam[m - 1, k] + 1)
        r /= d
    return r


@njit(cache=True)
def _gt_kernel(lam, N, a, q, t_end, rng, check, max_events):
    size = N * (N + 1) // 2
    rates = np.zeros(size)
    ms = np.zeros(size, dtype=np.int64)
    ks = np.zeros(size, dtype=np.int64)
    idx = 0
    for m in range(1, N + 1):
        for k in range(1, m + 1):
            ms[idx] = m
            ks[idx] = k
            idx += 1
    now = 0.0
    nev = 0
    viol = 0
    while nev < max_events:
        total = 0.0
        for j in range(size):
            rates[j] = _rate(lam, ms[j], ks[j], a, q)
            total += rates[j]
        if total <= 0.0:
            break
        now += rng.standard_exponential() / total
        if now > t_end:
            break
        u = rng.random() * total
        c = 0
        acc = rates[0]
        while acc < u and c + 1 < size:
            c += 1
            acc += rates[c]
        m = ms[c]
        k = ks[c]
        lam[m, k] += 1
        nev += 1
        # push cascade: lambda^(m)_k may no longer sit below lambda^(m+1)_k
        mm = m
        while mm < N and lam[mm + 1, k] < lam[mm, k]:
            lam[mm + 1, k] += 1
            mm += 1
        if check:
            viol += interlacing_violations(lam, N)
    return nev, viol, now


def simulate_gt_dynamics(q, a, N, t, seed, check=False, max_events=None):
    """Run the GT dynamics from the all-zero pattern up to time t.

    With check=True interlacing is verified after every event; a violation
    raises InvariantViolation. `max_events` stops the run early (used for
    long invariant sweeps); meta['stopped_at'] then records the time reached.
    """
    if not (0.0 <= q < 1.0):
        raise DomainError("q must lie in [0, 1)")
    if N < 1 or t < 0:
        raise DomainError("need N >= 1 and t >= 0")
    a = np.broadcast_to(np.asarray(a, dtype=float), (N,)).copy() \
        if np.ndim(a) == 0 else np.asarray(a, dtype=float)[:N].copy()
    if a.shape[0] < N or np.any(a <= 0):
        raise DomainError("need N positive rates")
    lam = np.zeros((N + 1, N + 2), dtype=np.int64)
    cap = np.iinfo(np.int64).max if max_events is None else int(max_events)
    nev, viol, now = _gt_kernel(lam, N, a, float(q), float(t), generator(seed),
                                bool(check), cap)
    if viol or interlacing_violations(lam, N):
        raise InvariantViolation(f"interlacing failed ({viol} violations)")
    return GTPattern(N, lam, float(t), {"events": int(nev), "stopped_at": float(now),
                                        "seed": as_seed(seed).to_dict()})
