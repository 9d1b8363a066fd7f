"""Macdonald first difference operators at t = 0 and the Plancherel specialization.

(D^n_1 f)(x) = sum_{i<=n} prod_{j<=n, j!=i} x_j/(x_j - x_i) f(..., q x_i, ...)
acts on the first n variables. The coefficients blow up near coincident
points while the image of a symmetric function stays analytic, so all
evaluations run in mpmath at high precision; values at x_1 = ... = x_n = 1 are
obtained by Neville extrapolation over a_i = 1 + eps*i, eps -> 0.
"""
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .bethe import report
from .errors import CoincidentPointError, DomainError

DPS = 60
EPS_LADDER = (1e-3, 1e-4, 1e-5, 1e-6)


@dataclass
class SymmetricFunctionHandle:
    """f(a_1, ..., a_N); `fn` receives a tuple of mpmath numbers."""
    fn: callable
    N: int
    symmetric: bool = True

    def __call__(self, a):
        return self.fn(tuple(a))


def _coincident(a, n):
    a = a[:n]
    for i in range(n):
        for j in range(i + 1, n):
            if a[i] == a[j]:
                raise CoincidentPointError("difference operator needs distinct points")


class _Op:
    """Memoised callable x -> (D^n_1 g)(x)."""

    def __init__(self, g, n, q):
        self.g, self.n, self.q = g, n, mp.mpf(q) if not isinstance(q, mp.mpf) else q
        self.memo = {}

    def __call__(self, x):
        x = tuple(x)
        if x in self.memo:
            return self.memo[x]
        if self.n == 0:
            out = mp.mpf(0)
        else:
            _coincident(x, self.n)
            out = mp.mpf(0)
            for i in range(self.n):
                c = mp.mpf(1)
                for j in range(self.n):
                    if j != i:
                        c *= x[j] / (x[j] - x[i])
                y = list(x)
                y[i] = self.q * x[i]
                out += c * self.g(tuple(y))
        self.memo[x] = out
        return out


def _mp_point(a):
    return tuple(mp.mpc(v) if isinstance(v, complex) else mp.mpf(v) for v in a)


def apply_difference_operator(f, n, q, a, power=1):
    """(D^n_1)^power f evaluated at the point a (high precision)."""
    if n > len(a) or n < 0:
        raise DomainError("need 0 <= n <= N")
    with mp.workdps(DPS):
        g = f
        for _ in range(power):
            g = _Op(g, n, q)
        return complex(g(_mp_point(a)))


def compose(levels, q, f):
    """Callable for D^{levels[-1]} ... D^{levels[0]} f (levels[0] applied first)."""
    g = f
    for n in levels:
        g = _Op(g, n, q)
    return g


def plancherel_partition(a, t_time):
    """Pi(a; rho_t) = prod_i e^{a_i t}."""
    return complex(np.exp(t_time * np.sum(np.asarray(a, dtype=complex))))


def _pi(t_time):
    return lambda x: mp.exp(t_time * mp.fsum(x))


def expectation_via_operators(k, n, t_time, q, a):
    """D^{n_k} ... D^{n_1} Pi(a; rho_t) / Pi(a; rho_t) at distinct a."""
    n = tuple(int(v) for v in n)
    if len(n) != k or any(u < v for u, v in zip(n, n[1:])) or n[-1] < 1:
        raise DomainError("need n_1 >= ... >= n_k >= 1")
    if len(a) < n[0]:
        raise DomainError("need at least n_1 rates")
    with mp.workdps(DPS):
        x = _mp_point(a[:n[0]])
        tt = mp.mpf(t_time)
        g = compose(list(n), mp.mpf(q), _pi(tt))
        return complex(g(x) / _pi(tt)(x))


def neville_zero(eps, vals):
    """Polynomial extrapolation of vals(eps) to eps = 0."""
    P = [mp.mpmathify(v) for v in vals]
    e = [mp.mpf(v) for v in eps]
    m = len(P)
    for lev in range(1, m):
        for i in range(m - lev):
            P[i] = (e[i + lev] * P[i] - e[i] * P[i + 1]) / (e[i + lev] - e[i])
    return P[0]


def at_coincident(value_fn, nvars, eps_ladder=EPS_LADDER):
    """Extrapolate value_fn((1 + eps*i)_i) to all variables equal to 1."""
    with mp.workdps(DPS):
        vals = []
        for e in eps_ladder:
            e = mp.mpf(e)
            vals.append(value_fn(tuple(1 + e * (i + 1) for i in range(nvars))))
        return complex(neville_zero(eps_ladder, vals))


def expectation_homogeneous(k, n, t_time, q):
    """expectation_via_operators with all a_i -> 1 (extrapolated)."""
    n = tuple(int(v) for v in n)

    def fn(x):
        g = compose(list(n), mp.mpf(q), _pi(mp.mpf(t_time)))
        return g(x) / _pi(mp.mpf(t_time))(x)
    return at_coincident(fn, n[0])


def commutator_check(n, k, q, testfn, a, tol=1e-10):
    """[(D^n)^k, p] f == (1 - q^k) x_n (D^{n-1} - D^n)(D^n)^{k-1} f at a."""
    if n < 1 or k < 1:
        raise DomainError("need n, k >= 1")
    with mp.workdps(DPS):
        x = _mp_point(a)
        qq = mp.mpf(q)
        p = lambda y: mp.fsum(y[:n])  # noqa: E731
        pf = lambda y: p(y) * testfn(y)  # noqa: E731
        Dk_pf = pf
        Dk_f = testfn
        for _ in range(k):
            Dk_pf = _Op(Dk_pf, n, qq)
            Dk_f = _Op(Dk_f, n, qq)
        lhs = Dk_pf(x) - p(x) * Dk_f(x)
        inner = testfn
        for _ in range(k - 1):
            inner = _Op(inner, n, qq)
        rhs = (1 - qq ** k) * x[n - 1] * (_Op(inner, n - 1, qq)(x) - _Op(inner, n, qq)(x))
        err = abs(lhs - rhs)
        scale = max(mp.mpf(1), abs(lhs))
        ok = err <= tol * scale
        return report("commutator", {"n": n, "k": k, "q": q, "a": [complex(v) for v in a]},
                      complex(lhs), complex(rhs), tol, bool(ok), error=float(err))


def qboson_via_operators(t_time, y, q, F=None):
    """e^{-tp} (D^1)^{y_1} ... (D^n)^{y_n} e^{tp} F at x_1 = ... = x_n = 1.

    `y` maps site -> occupation; any particle at a site <= 0 gives 0.
    """
    y = {int(s): int(c) for s, c in dict(y).items() if int(c) > 0}
    if not y:
        return 1.0 + 0j
    if any(s <= 0 for s in y):
        return 0.0 + 0j
    n = max(y)
    levels = []
    for site in range(n, 0, -1):      # (D^n)^{y_n} is applied first
        levels += [site] * y.get(site, 0)
    F = F or (lambda x: mp.mpf(1))

    def fn(x):
        tt = mp.mpf(t_time)
        ep = lambda z: mp.exp(tt * mp.fsum(z[:n])) * F(z)  # noqa: E731
        g = compose(levels, mp.mpf(q), ep)
        return g(x) * mp.exp(-tt * mp.fsum(x[:n]))
    return at_coincident(fn, n)
