"""Nested contour-integral moment formulas and their independent oracles.

q-TASEP moments E[prod_j q^{x_{n_j}(t)+n_j}] (homogeneous or general rates a),
ASEP moments E[prod_j Q~_{y_j}(t)] and E[tau^{k N_y(t)}], and moments of the
continuum stochastic heat equation E[prod_j z(t, x_j)].

Quadrature paths use tensor trapezoid (circles) or composite Gauss-Legendre
(vertical lines) rules, contracted pairwise so that memory stays O(M^2).
Independent routes: an exact symbolic residue expansion and the exact q-Boson
backward generator on the finite set of reachable ordered states.
"""
import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import sympy as sp
from scipy import linalg

from .errors import (ConvergenceError, DomainError, OrderTooLarge,
                     ResidualImagError, TailError, TruncationError)
from .numerics import (circle_rule, gauss_legendre, make_nested_circles,
                       q_binomial, q_pochhammer, q_pochhammer_inf)

K_MAX = 5
K_MAX_RESIDUE = 4
TOL = 1e-9


@dataclass
class MomentQuery:
    model: str
    k: int
    indices: tuple
    t: float
    params: dict = field(default_factory=dict)
    a: tuple = None

    def __post_init__(self):
        self.indices = tuple(int(v) for v in self.indices)
        if self.a is not None:
            self.a = tuple(float(v) for v in self.a)
        self.validate()

    def validate(self):
        ix = self.indices
        if self.k < 1 or len(ix) != self.k:
            raise DomainError("need k >= 1 indices")
        if self.k > K_MAX:
            raise OrderTooLarge(f"k = {self.k} exceeds k_max = {K_MAX}")
        if self.t < 0:
            raise DomainError("t must be non-negative")
        d = np.diff(ix)
        if self.model == "qtasep":
            if np.any(d > 0) or ix[-1] < 1:
                raise DomainError("q-TASEP indices must satisfy n_1 >= ... >= n_k >= 1")
            q = self.params.get("q")
            if q is None or not (0.0 < q < 1.0):
                raise DomainError("q-TASEP needs 0 < q < 1")
            if self.a is not None and (len(self.a) < ix[0] or min(self.a) <= 0):
                raise DomainError("need positive rates a_1..a_{n_1}")
        elif self.model == "asep":
            if np.any(d >= 0):
                raise DomainError("ASEP indices must satisfy y_1 > ... > y_k")
            p, qr = self.params.get("p"), self.params.get("q_rate")
            if p is None or qr is None or not (0.0 < p < qr < 1.0) \
                    or abs(p + qr - 1.0) > 1e-12:
                raise DomainError("ASEP needs 0 < p < q_rate, p + q_rate = 1")
        elif self.model == "she":
            if np.any(d < 0):
                raise DomainError("SHE indices must satisfy x_1 <= ... <= x_k")
            if self.t <= 0:
                raise DomainError("SHE moments need t > 0")
        else:
            raise DomainError(f"unknown model {self.model!r}")


@dataclass
class MomentResult:
    model: str
    k: int
    indices: tuple
    t: float
    params: dict
    value_re: float
    value_im: float
    method: str
    node_count: int
    error_estimate: float

    @property
    def value(self):
        return complex(self.value_re, self.value_im)

    def to_dict(self):
        d = asdict(self)
        d["indices"] = list(self.indices)
        return d


def _result(query, val, method, nodes, err, params=None):
    val = complex(val)
    p = dict(query.params if params is None else params)
    if query.a is not None:
        p["a"] = list(query.a)
    return MomentResult(query.model, query.k, query.indices, float(query.t), p,
                        float(val.real), float(val.imag), method, int(nodes), float(err))


def _check_real(val, what):
    if abs(val.imag) > 1e-6:
        raise ResidualImagError(f"{what}: imaginary part {val.imag:.3e} exceeds 1e-6")


# --- tensor contraction --------------------------------------------------------

def contract(vecs, pairs):
    """Sum over i_1..i_k of prod_A vecs[A][i_A] * prod_{A<B} pairs[A,B][i_A, i_B].

    Cost M^k for k >= 3 using matrix products; memory O(M^2).
    """
    k = len(vecs)
    if k == 1:
        return complex(np.sum(vecs[0]))
    if k == 2:
        return complex(vecs[0] @ pairs[0, 1] @ vecs[1])
    if k == 3:
        T = (pairs[0, 2] * vecs[2]) @ pairs[1, 2].T
        return complex(vecs[0] @ (pairs[0, 1] * T) @ vecs[1])
    total = 0.0 + 0.0j
    for i in range(vecs[0].shape[0]):
        sub_v = [vecs[B] * pairs[0, B][i] for B in range(1, k)]
        sub_p = {(A - 1, B - 1): pairs[A, B] for A in range(1, k) for B in range(A + 1, k)}
        total += vecs[0][i] * contract(sub_v, sub_p)
    return total


def _doubling(evaluate, m0, m_max, tol=TOL, what="quadrature"):
    """Double the node count until successive values differ by < tol."""
    m = m0
    prev = evaluate(m)
    while True:
        if 2 * m > m_max:
            raise ConvergenceError(f"{what} not converged to {tol} at {m} nodes")
        cur = evaluate(2 * m)
        err = abs(cur - prev)
        if err < tol * max(1.0, abs(cur)):
            return cur, 2 * m, err
        prev, m = cur, 2 * m


def _max_nodes(k):
    return {1: 4096, 2: 2048, 3: 512, 4: 128, 5: 64}[k]


# --- q-TASEP -----------------------------------------------------------------

def qtasep_nest(query, margin=0.05):
    q = query.params["q"]
    interior = 0.0
    if query.a is not None:
        interior = max(abs(a - 1.0) for a in query.a[:query.indices[0]])
    return make_nested_circles(query.k, q, center=1.0, exclude_zero=True,
                               inner_radius=interior * (1 + margin) if interior else None,
                               margin=margin)


def _qtasep_integrand_weights(z, w, n_j, t, q, a):
    f = np.exp((q - 1.0) * t * z) / z
    for m in range(n_j):
        am = 1.0 if a is None else a[m]
        f = f * am / (am - z)
    return f * w / (2j * np.pi)


def qtasep_moment(query, nodes=256, tol=TOL):
    """E[prod_j q^{x_{n_j}(t)+n_j}] by tensor trapezoid quadrature on a nest."""
    if query.model != "qtasep":
        raise DomainError("qtasep_moment needs a q-TASEP query")
    k, n, t, q, a = query.k, query.indices, query.t, query.params["q"], query.a
    if t == 0:
        return _result(query, 1.0, "exact-t0", 0, 0.0)
    nest = qtasep_nest(query)

    def evaluate(m):
        rules = [c.rule(m) for c in nest]
        vecs = [_qtasep_integrand_weights(r.nodes, r.weights, n[j], t, q, a)
                for j, r in enumerate(rules)]
        pairs = {}
        for A in range(k):
            for B in range(A + 1, k):
                zA = rules[A].nodes[:, None]
                zB = rules[B].nodes[None, :]
                pairs[A, B] = (zA - zB) / (zA - q * zB)
        return (-1) ** k * q ** (k * (k - 1) / 2) * contract(vecs, pairs)

    m0 = min(int(nodes), _max_nodes(k) // 2)
    val, m, err = _doubling(evaluate, m0, _max_nodes(k), tol, "q-TASEP moment")
    _check_real(val, "q-TASEP moment")
    return _result(query, val, "nested-trapezoid", m, err)


def qtasep_moment_residue(query, digits=30):
    """Exact residue expansion of the nested integral (k <= 4).

    Contours are shrunk innermost first. The candidate poles of z_A are the a_m
    and q times every candidate point of z_B, B > A. Residues of the
    exponential factor at a pole p of order m are
    e^{beta p} sum_i beta^i/i! g_{m-1-i}, with g the Taylor data of (z-p)^m R.
    """
    if query.model != "qtasep":
        raise DomainError("qtasep_moment_residue needs a q-TASEP query")
    k, nvec = query.k, query.indices
    if k > K_MAX_RESIDUE:
        raise OrderTooLarge(f"residue expansion supports k <= {K_MAX_RESIDUE}")
    qs = sp.nsimplify(query.params["q"])
    ts = sp.nsimplify(query.t)
    z = sp.symbols(f"z1:{k + 1}")
    b = sp.Symbol("b")
    N = max(nvec)
    a = [sp.Integer(1)] * N if query.a is None else [sp.nsimplify(x) for x in query.a[:N]]
    R = sp.Integer(1)
    for A in range(k):
        for B in range(A + 1, k):
            R *= (z[A] - z[B]) / (z[A] - qs * z[B])
        for m in range(nvec[A]):
            R *= a[m] / (a[m] - z[A])
        R /= z[A]
    terms = [(sp.Integer(0), sp.together(R))]
    cands = {}
    for A in range(k - 1, -1, -1):
        P = set(a)
        for B in range(A + 1, k):
            P |= {qs * p for p in cands[B]}
        cands[A] = P
        new = []
        for es, Rt in terms:
            num, den = sp.fraction(sp.cancel(Rt))
            dpoly = sp.Poly(den, z[A])
            for p in P:
                m, d = 0, dpoly
                while d.degree() > 0 and d.eval(p) == 0:
                    d = sp.Poly(sp.quo(d.as_expr(), z[A] - p, z[A]), z[A])
                    m += 1
                if m == 0:
                    continue
                g = num / d.as_expr()
                coeffs = []
                for j in range(m):
                    coeffs.append(sp.simplify(g.subs(z[A], p)) / sp.factorial(j))
                    g = sp.diff(g, z[A])
                res = sum(b ** i / sp.factorial(i) * coeffs[m - 1 - i] for i in range(m))
                new.append((es + p, sp.together(res)))
        terms = new
    beta = (qs - 1) * ts
    val = sum(sp.exp(beta * es) * Rt.subs(b, beta) for es, Rt in terms)
    val = complex(sp.N((-1) ** k * qs ** (k * (k - 1) // 2) * val, digits))
    return _result(query, val, "residue", 0, 10.0 ** (-digits + 5))


# --- exact q-Boson generator on reachable states --------------------------------

def ordered_states(k, lo, hi):
    """All n_1 >= ... >= n_k with lo <= n_j <= hi, in lexicographic order."""
    return [tuple(s) for s in itertools.combinations_with_replacement(range(hi, lo - 1, -1), k)]


def clusters(n):
    """Cluster sizes of an ordered vector, left to right."""
    out = []
    for i, v in enumerate(n):
        if i and v == n[i - 1]:
            out[-1] += 1
        else:
            out.append(1)
    return out


def qboson_generator(states, q, drop_value=None):
    """Backward generator (H f)(n) = sum_i (1 - q^{c_i})(f(n^-_{c_1+..+c_i}) - f(n)).

    Transitions to states outside `states` are dropped, i.e. f is taken to be
    zero there (exact when those states are absorbing zeros of f).
    """
    index = {s: i for i, s in enumerate(states)}
    H = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        pos = 0
        for c in clusters(s):
            pos += c
            r = 1.0 - q ** c
            H[i, i] -= r
            tgt = list(s)
            tgt[pos - 1] -= 1
            j = index.get(tuple(tgt))
            if j is not None:
                H[i, j] += r
    return H


def duality_moment(nvec, t, q):
    """E[prod q^{x_{n_j}(t)+n_j}] for step data from the q-Boson backward equation.

    Coordinates only decrease, and f vanishes once any n_j <= 0, so the ordered
    states with coordinates in 1..n_1 form a closed system: exact up to expm.
    """
    nvec = tuple(int(v) for v in nvec)
    states = ordered_states(len(nvec), 1, nvec[0])
    H = qboson_generator(states, q)
    f = linalg.expm(t * H) @ np.ones(len(states))
    return float(f[states.index(nvec)])


# --- generating series ---------------------------------------------------------

def eq_laplace_series(model, zeta, n, t, q=None, kmax=None, tol=None, p=None,
                      q_rate=None, method="duality"):
    """Truncated e_q-Laplace series sum_k E[q^{k X}] zeta^k / (q;q)_k.

    q-TASEP: X = x_n(t)+n, moments from the exact generator (or quadrature).
    ASEP: X = N_y(t) with q -> tau, k <= 3 from the expansion identity.
    The tail is bounded by |zeta|^{K+1} / ((q;q)_inf (1 - |zeta|)) since all
    moments lie in [0, 1]. Returns (value, tail_bound, terms).
    """
    zeta = complex(zeta)
    if model == "asep":
        q = p / q_rate
        kcap = 3 if kmax is None else min(int(kmax), 3)
    elif model == "qtasep":
        kcap = 60 if kmax is None else int(kmax)
    else:
        raise DomainError("eq_laplace_series supports qtasep and asep")
    if tol is None:
        tol = 1e-6 if model == "asep" else 1e-10
    r = abs(zeta)
    if r >= 1.0:
        raise ConvergenceError("|zeta| >= 1: the moment bound does not certify the tail")
    qinf = abs(complex(q_pochhammer_inf(q, q)))
    K = 0
    while r ** (K + 1) / (qinf * (1 - r)) >= tol:
        K += 1
        if K > kcap:
            raise ConvergenceError(
                f"tail bound {r ** (K + 1) / (qinf * (1 - r)):.2e} >= {tol} at kmax={kcap}")
    total = 1.0 + 0.0j
    terms = [1.0]
    for k in range(1, K + 1):
        if model == "qtasep":
            if method == "duality":
                mu = duality_moment((n,) * k, t, q)
            else:
                mu = qtasep_moment(MomentQuery("qtasep", k, (n,) * k, t, {"q": q})).value_re
        else:
            mu = asep_qmoment_expansion(k, n, t, {"p": p, "q_rate": q_rate}).value_re
        terms.append(mu)
        total += mu * zeta ** k / q_pochhammer(q, q, k)
    return total, r ** (K + 1) / (qinf * (1 - r)), terms


# --- ASEP ----------------------------------------------------------------------

def asep_contour(tau, frac=0.9):
    """Circle about -tau separated from tau*C and C/tau (and from -1, -tau^2)."""
    return -tau, frac * tau * (1.0 - tau) / (1.0 + tau)


def _asep_parts(z, w, t, p, qr, tau):
    """Base factor exp(...) dz / (2 pi i (tau+z)) and omega(z) = (1+z/tau)/(1+z)."""
    expo = -z * (p - qr) ** 2 * t / ((1.0 + z) * (p + qr * z))
    base = np.exp(expo) * w / (2j * np.pi * (tau + z))
    om = (1.0 + z / tau) / (1.0 + z)
    return base, om


def _asep_eval(ys, t, p, qr, m, closed_from=None):
    """Nested ASEP integral; `closed_from` = y replaces prod omega_j^{y_j+1} by the
    closed-form ordered sum over y <= y_j < ... < y_1."""
    tau = p / qr
    k = len(ys) if closed_from is None else ys
    c, r = asep_contour(tau)
    rule = circle_rule(c, r, m)
    base, om = _asep_parts(rule.nodes, rule.weights, t, p, qr, tau)
    P = (rule.nodes[:, None] - rule.nodes[None, :]) / (rule.nodes[:, None] - tau * rule.nodes[None, :])
    pairs = {(A, B): P for A in range(k) for B in range(A + 1, k)}
    pref = tau ** (k * (k - 1) / 2)
    if closed_from is None:
        vecs = [base * om ** (ys[j] + 1) for j in range(k)]
        return pref * contract(vecs, pairs)
    if np.max(np.abs(om)) >= 1.0:
        raise TruncationError("|omega| >= 1 on the contour: ordered sum diverges")
    y = closed_from
    # sum over m_B >= 0 of prod_B (omega_1...omega_B)^{m_B}: depends on all z,
    # so it is folded into the tensor via the partial products.
    return pref * _closed_contract(base, om, P, k, y)


def _closed_contract(base, om, P, k, y):
    """Contract prod_A base_A om_A^{y+1+k-A} / prod_B (1 - om_1..om_B) with pairs."""
    vecs = [base * om ** (y + 1 + k - A) for A in range(1, k + 1)]
    if k == 1:
        return complex(np.sum(vecs[0] / (1.0 - om)))
    M = base.shape[0]
    if k == 2:
        D = (1.0 - om)[:, None] * (1.0 - om[:, None] * om[None, :])
        return complex(np.sum(vecs[0][:, None] * vecs[1][None, :] * P / D))
    if k == 3:
        tot = 0.0 + 0.0j
        for i in range(M):
            o1 = om[i]
            o12 = o1 * om
            D2 = (1.0 - o1) * (1.0 - o12)
            inner = (P[i][:, None] * P[i][None, :] * P) / \
                (1.0 - o12[:, None] * om[None, :])
            tot += vecs[0][i] * np.sum((vecs[1] / D2)[:, None] * inner * vecs[2][None, :])
        return tot
    raise OrderTooLarge("closed-form ordered sum implemented for k <= 3")


def asep_moment(query, nodes=256, tol=TOL):
    """E[prod_j Q~_{y_j}(t)] with Q~_y = (tau^{N_y} - tau^{N_{y+1}})/(tau - 1)."""
    if query.model != "asep":
        raise DomainError("asep_moment needs an ASEP query")
    p, qr = query.params["p"], query.params["q_rate"]
    ys = query.indices
    val, m, err = _doubling(lambda m: _asep_eval(ys, query.t, p, qr, m),
                            min(int(nodes), _max_nodes(query.k) // 2),
                            _max_nodes(query.k), tol, "ASEP moment")
    _check_real(val, "ASEP moment")
    return _result(query, val, "circle-trapezoid", m, err)


def asep_expansion_coefficients(k, tau):
    """c_j in tau^{kN_y} = sum_j c_j sum_{y<=y_1<..<y_j} prod Q~_{y_i}."""
    return [q_binomial(k, j, tau) * float(q_pochhammer(tau, tau, j)) * (-1) ** j
            for j in range(k + 1)]


def asep_qmoment_expansion(k, y, t, params, route="closed", nodes=128, tol=TOL,
                           summand_tol=1e-14, y_span=400):
    """E[tau^{k N_y(t)}] from the ASEP moment formula and the expansion identity.

    route="closed": each ordered sum is resummed inside the integrand.
    route="direct": ordered sums of asep_moment values, truncated once the
    summands fall below `summand_tol` (TruncationError if not within y_span).
    """
    if k > 3:
        raise OrderTooLarge("expansion implemented for k <= 3")
    p, qr = params["p"], params["q_rate"]
    tau = p / qr
    q0 = MomentQuery("asep", 1, (y,), t, {"p": p, "q_rate": qr})
    if t == 0:
        val = tau ** (k * max(0, -int(y)))
        return _result(q0, val, "exact-t0", 0, 0.0, params={"p": p, "q_rate": qr, "k_power": k})
    coef = asep_expansion_coefficients(k, tau)
    total, err_tot, node_max = coef[0], 0.0, 0
    for j in range(1, k + 1):
        if route == "closed":
            s, m, err = _doubling(lambda m: _asep_eval(j, t, p, qr, m, closed_from=y),
                                  min(int(nodes), _max_nodes(j) // 2), _max_nodes(j),
                                  tol, "ASEP ordered sum")
        else:
            s, m, err = _direct_ordered_sum(j, y, t, p, qr, nodes, summand_tol, y_span)
        total += coef[j] * s
        err_tot += abs(coef[j]) * err
        node_max = max(node_max, m)
    total = complex(total)
    _check_real(total, "ASEP q-moment")
    return _result(q0, total, f"expansion-{route}", node_max, err_tot,
                   params={"p": p, "q_rate": qr, "k_power": k})


def _direct_ordered_sum(j, y, t, p, qr, m, summand_tol, y_span):
    """sum_{y <= y_j < ... < y_1} E[prod Q~_{y_i}] by explicit enumeration."""
    tau = p / qr
    c, r = asep_contour(tau)
    rule = circle_rule(c, r, m)
    base, om = _asep_parts(rule.nodes, rule.weights, t, p, qr, tau)
    P = (rule.nodes[:, None] - rule.nodes[None, :]) / (rule.nodes[:, None] - tau * rule.nodes[None, :])
    pref = tau ** (j * (j - 1) / 2)
    pairs = {(A, B): P for A in range(j) for B in range(A + 1, j)}
    # powers om^{Y+1} for Y = y .. y + y_span
    pw = [base * om ** (y + 1)]
    for _ in range(y_span):
        pw.append(pw[-1] * om)

    def term(offsets):  # offsets sorted decreasingly, Y = y + offset
        return pref * contract([pw[o] for o in offsets], pairs)

    total = 0.0 + 0.0j
    quiet = 0
    for top in range(j - 1, y_span + 1):
        layer = 0.0 + 0.0j
        for rest in itertools.combinations(range(top - 1, -1, -1), j - 1):
            layer += term((top,) + rest)
        total += layer
        quiet = quiet + 1 if abs(layer) < summand_tol else 0
        if quiet >= 3:
            return total, m, abs(layer)
    raise TruncationError(f"ordered sum summands above {summand_tol} up to span {y_span}")


def expansion_brute_force(kmax=3, max_particles=3, width=6, tau=0.37):
    """Check tau^{kN_y} = sum_j c_j sum_{y<=y_1<..<y_j} prod Q~ on every
    configuration of <= max_particles particles on sites 0..width-1 (y = 0).

    Returns the largest absolute discrepancy over k <= kmax.
    """
    worst = 0.0
    for n_p in range(max_particles + 1):
        for occ in itertools.combinations(range(width), n_p):
            eta = np.zeros(width + 1, dtype=int)
            eta[list(occ)] = 1
            Nabove = np.concatenate([np.cumsum(eta[::-1])[::-1], [0]])  # N_s = sum_{u>=s}
            Qt = [eta[s] * tau ** Nabove[s + 1] for s in range(width)]
            for k in range(1, kmax + 1):
                coef = asep_expansion_coefficients(k, tau)
                rhs = coef[0]
                for j in range(1, k + 1):
                    rhs += coef[j] * sum(np.prod([Qt[s] for s in c])
                                         for c in itertools.combinations(range(width), j))
                worst = max(worst, abs(tau ** (k * Nabove[0]) - rhs))
    return worst


# --- continuum SHE -----------------------------------------------------------------

def she_abscissas(k, spacing=1.25):
    return [spacing * ((k + 1) / 2.0 - j) for j in range(1, k + 1)]


def _she_tail_bound(xs, t, alphas, L):
    """Bound on the integral mass discarded beyond |Im z| = L (pair factors <= 5)."""
    k = len(xs)
    full = [math.exp(t * a * a / 2 + x * a) / math.sqrt(2 * math.pi * t) for a, x in zip(alphas, xs)]
    tail = math.erfc(L * math.sqrt(t / 2))
    return 5.0 ** (k * (k - 1) / 2) * float(np.prod(full)) * k * tail


def she_default_half_length(xs, t, alphas, target=1e-13):
    L = 1.0
    while _she_tail_bound(xs, t, alphas, L) > target:
        L *= 1.1
    return L


def she_moment(query, half_length=None, nodes=None, tol=TOL):
    """E[prod_j z(t, x_j)] on the vertical lines alpha_j + i[-L, L].

    Abscissas are alpha_j = 1.25((k+1)/2 - j), so alpha_A - alpha_B >= 1.25 > 1.
    `nodes` fixes the Gauss-Legendre count per dimension; otherwise panels are
    refined until successive values agree to `tol` relative.
    """
    if query.model != "she":
        raise DomainError("she_moment needs an SHE query")
    k, xs, t = query.k, query.indices, query.t
    alphas = she_abscissas(k)
    L = she_default_half_length(xs, t, alphas) if half_length is None else float(half_length)
    bound = _she_tail_bound(xs, t, alphas, L)
    if bound > 1e-12:
        raise TailError(f"discarded tail bound {bound:.2e} > 1e-12 at half_length {L}")

    def evaluate(m):
        panels = max(2, m // 8)
        x, w = gauss_legendre(8)
        edges = np.linspace(-L, L, panels + 1)
        y = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
        wy = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
        zs = [al + 1j * y for al in alphas]
        vecs = [np.exp(t * z * z / 2 + xj * z) * wy / (2 * np.pi) for z, xj in zip(zs, xs)]
        pairs = {}
        for A in range(k):
            for B in range(A + 1, k):
                d = zs[A][:, None] - zs[B][None, :]
                pairs[A, B] = d / (d - 1.0)
        return contract(vecs, pairs)

    if nodes is not None:
        val = evaluate(int(nodes))
        m, err = int(nodes), float("nan")
    else:
        m0 = 8 * max(2, int(np.ceil(4 * L)))
        mmax = {1: 8192, 2: 4096, 3: 1024, 4: 256, 5: 128}[k]
        val, m, err = _doubling(evaluate, min(m0, mmax // 2), mmax, tol, "SHE moment")
    _check_real(val / max(1.0, abs(val)), "SHE moment")
    return _result(query, val, "line-gauss", m, err + bound)
