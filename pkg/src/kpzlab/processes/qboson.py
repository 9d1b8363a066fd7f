"""q-Boson totally asymmetric zero-range process.

The top particle of a site holding y particles jumps one site to the left at
rate 1 - q^y. The state is kept as the ordered coordinate vector
n_1 >= ... >= n_k of the particles (the dual picture of q-TASEP), simulated
with the direct Gillespie method: after each jump only the cluster rates of
the source and target sites change, and k is small in every use.
"""
import numpy as np
from numba import njit

from ..errors import DomainError, InvariantViolation
from ..rng import as_seed, generator
from .exclusion import ParticleConfig


@njit(cache=True)
def _qboson_kernel(n, q, t_end, rng, log_t, log_i):
    k = n.shape[0]
    rates = np.zeros(k)
    now = 0.0
    nev = 0
    cap = log_t.shape[0]
    while True:
        # the particle that moves from a cluster is its last (smallest) index
        total = 0.0
        i = 0
        while i < k:
            j = i
            while j + 1 < k and n[j + 1] == n[i]:
                j += 1
            for m in range(i, j):
                rates[m] = 0.0
            rates[j] = 1.0 - q ** (j - i + 1)
            total += rates[j]
            i = j + 1
        if total <= 0.0:
            break
        now += rng.standard_exponential() / total
        if now > t_end:
            break
        u = rng.random() * total
        c = 0
        acc = rates[0]
        while acc < u and c + 1 < k:
            c += 1
            acc += rates[c]
        while rates[c] == 0.0:
            c -= 1
        n[c] -= 1
        if nev < cap:
            log_t[nev] = now
            log_i[nev] = c
        nev += 1
    return nev


def occupation_to_ordered(y0):
    """{site: count} -> ordered coordinate vector n_1 >= ... >= n_k."""
    out = []
    for site in sorted(y0, reverse=True):
        c = int(y0[site])
        if c < 0:
            raise DomainError("occupation counts must be non-negative")
        out.extend([int(site)] * c)
    return np.array(out, dtype=np.int64)


def ordered_to_occupation(n):
    sites, counts = np.unique(np.asarray(n), return_counts=True)
    return {int(s): int(c) for s, c in zip(sites, counts)}


def simulate_qboson(q, y0, t, seed, record=0):
    """Zero-range dynamics from the occupation map `y0`; particle number is conserved."""
    if not (0.0 <= q < 1.0):
        raise DomainError("q must lie in [0, 1)")
    if t < 0:
        raise DomainError("t must be non-negative")
    n = occupation_to_ordered(y0)
    k = n.shape[0]
    cap = int(record) if record else 0
    lt, li = np.zeros(cap), np.zeros(cap, dtype=np.int64)
    nev = _qboson_kernel(n, float(q), float(t), generator(seed), lt, li) if k else 0
    occ = ordered_to_occupation(n)
    if sum(occ.values()) != k:
        raise InvariantViolation("q-Boson dynamics lost particles")
    cfg = ParticleConfig("qboson", occupation=occ, time=float(t),
                         meta={"events": nev, "seed": as_seed(seed).to_dict(),
                               "ordered": n.tolist()})
    if record:
        if nev > cap:
            raise DomainError("event log capacity exceeded; raise `record`")
        pos = occupation_to_ordered(y0)
        cfg.events = []
        for j in range(nev):
            c = int(li[j])
            pos[c] -= 1
            cfg.events.append({"t": float(lt[j]), "model": "qboson",
                               "particle": c + 1, "site": int(pos[c]), "delta": -1})
    return cfg
