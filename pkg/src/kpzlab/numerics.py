"""Special functions and quadrature primitives used by the exact-formula modules.

Everything here is vectorised over numpy arrays and free of shared state.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DomainError, InfeasibleNestError, NoBracketError, PoleError

# Lanczos coefficients for g = 607/128 (Godfrey), good to ~1e-15 in double.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = np.array([
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
])
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _lanczos_log(z):
    # log Gamma(z) for Re z >= 1/2, principal-ish branch (continuous in z)
    zm = z - 1.0
    a = np.full(zm.shape, _LANCZOS_C[0], dtype=complex)
    for k in range(1, len(_LANCZOS_C)):
        a = a + _LANCZOS_C[k] / (zm + k)
    tt = zm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(tt) - tt + np.log(a)


def _check_poles(z):
    re = np.real(z)
    bad = (np.abs(np.imag(z)) == 0) & (re <= 0) & (re == np.round(re))
    if np.any(bad):
        raise PoleError("Gamma has a pole at non-positive integers")


def loggamma_complex(z):
    """log Gamma(z) on a branch continuous along horizontal lines (Re z >= 1/2).

    Only exp(loggamma) and differences along continuous paths are meaningful;
    for Re z < 1/2 the reflection formula is applied.
    """
    z = np.asarray(z, dtype=complex)
    _check_poles(z)
    left = np.real(z) < 0.5
    out = np.empty(z.shape, dtype=complex)
    if np.any(~left):
        out[~left] = _lanczos_log(z[~left])
    if np.any(left):
        zl = z[left]
        out[left] = np.log(np.pi) - np.log(np.sin(np.pi * zl)) - _lanczos_log(1.0 - zl)
    return out


def gamma_complex(z):
    """Gamma function for complex arguments (Lanczos with reflection)."""
    z = np.asarray(z, dtype=complex)
    _check_poles(z)
    left = np.real(z) < 0.5
    out = np.empty(z.shape, dtype=complex)
    if np.any(~left):
        out[~left] = np.exp(_lanczos_log(z[~left]))
    if np.any(left):
        zl = z[left]
        out[left] = np.pi / (np.sin(np.pi * zl) * np.exp(_lanczos_log(1.0 - zl)))
    return out[()] if out.ndim == 0 else out


# Bernoulli numbers B_2 .. B_16
_B2K = np.array([1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66,
                 -691.0 / 2730, 7.0 / 6, -3617.0 / 510])
_ASYM_FROM = 12.0


def _polygamma_real(s, order):
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("polygamma requires s > 0")
    x = s.reshape(-1).copy()
    acc = np.zeros_like(x)
    # shift up until the asymptotic series is accurate
    while True:
        small = x < _ASYM_FROM
        if not np.any(small):
            break
        xs = x[small]
        if order == 0:
            acc[small] -= 1.0 / xs
        elif order == 1:
            acc[small] += 1.0 / xs ** 2
        else:
            acc[small] -= 2.0 / xs ** 3
        x[small] = xs + 1.0
    k = np.arange(1, len(_B2K) + 1)[:, None]
    b = _B2K[:, None]
    if order == 0:
        val = np.log(x) - 0.5 / x - np.sum(b / (2 * k * x ** (2 * k)), axis=0)
    elif order == 1:
        val = 1.0 / x + 0.5 / x ** 2 + np.sum(b / x ** (2 * k + 1), axis=0)
    else:
        val = -1.0 / x ** 2 - 1.0 / x ** 3 - np.sum((2 * k + 1) * b / x ** (2 * k + 2), axis=0)
    out = (val + acc).reshape(s.shape)
    return out[()] if out.ndim == 0 else out


def digamma(s):
    """Psi(s) = d/ds log Gamma(s) for real s > 0."""
    return _polygamma_real(s, 0)


def trigamma(s):
    """Psi'(s) for real s > 0."""
    return _polygamma_real(s, 1)


def tetragamma(s):
    """Psi''(s) for real s > 0."""
    return _polygamma_real(s, 2)


_QPOCH_EPS = 1e-16


def qpoch_terms(amax, q):
    """Deterministic truncation length for (a;q)_inf with |a| <= amax."""
    if q == 0.0 or amax == 0.0:
        return 1
    if amax < _QPOCH_EPS:
        return 1
    return int(np.ceil(np.log(_QPOCH_EPS / amax) / np.log(q))) + 1


def q_pochhammer_inf(a, q):
    """(a;q)_inf = prod_{n>=0} (1 - a q^n), truncated once |a q^n| < 1e-16."""
    if not (0.0 <= q < 1.0):
        raise DomainError("q must lie in [0, 1)")
    a = np.asarray(a, dtype=complex)
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    n = qpoch_terms(amax, q)
    out = np.ones(a.shape, dtype=complex)
    qn = 1.0
    for _ in range(n):
        out = out * (1.0 - a * qn)
        qn *= q
    return out[()] if out.ndim == 0 else out


def q_pochhammer(a, q, n):
    """Finite product (a;q)_n."""
    out = 1.0 + 0 * np.asarray(a)
    for i in range(int(n)):
        out = out * (1.0 - a * q ** i)
    return out


def q_factorial(n, q):
    """[n]_q! = (q;q)_n / (1-q)^n."""
    return float(np.prod([(1.0 - q ** i) / (1.0 - q) for i in range(1, int(n) + 1)]))


def q_binomial(n, k, q):
    """Gaussian binomial [n choose k]_q = (q;q)_n / ((q;q)_k (q;q)_{n-k})."""
    if k < 0 or k > n:
        return 0.0
    return float(q_pochhammer(q, q, n) / (q_pochhammer(q, q, k) * q_pochhammer(q, q, n - k)))


# --- Airy function -------------------------------------------------------

AIRY_RANGE = (-80.0, 80.0)
_GL_CACHE = {}


def gauss_legendre(n):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _segment(a, b, n):
    x, w = gauss_legendre(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _airy_small(x, deriv):
    # 0 <= x <= 1: rays from the origin at angles +-pi/3, where t^3/3 = -r^3/3
    r, w = _segment(0.0, 5.0, 64)
    e = np.exp(1j * np.pi / 3)
    t = r[None, :] * e
    ph = np.exp(-r[None, :] ** 3 / 3.0 - x[:, None] * t)
    if deriv:
        ph = -t * ph
    return np.imag(e * (ph @ w)) / np.pi


def _airy_pos(x, deriv):
    # x > 1: steepest-descent hyperbola t = sqrt(x) cosh(u) + i sqrt(3x) sinh(u)
    # along which the integrand is real and positive
    x = x[:, None]
    m = 46.0 * 3.0 / (8.0 * x ** 1.5)
    umax = np.arcsinh(np.sqrt(m)) + 0.5
    xs, ws = gauss_legendre(80)
    u = 0.5 * umax * (xs[None, :] + 1.0)
    du = 0.5 * umax * ws[None, :]
    ch, sh = np.cosh(u), np.sinh(u)
    phi = -x ** 1.5 * ch * (2.0 / 3.0 + (8.0 / 3.0) * sh ** 2)
    if not deriv:
        return np.sqrt(3.0 * x[:, 0]) / np.pi * np.sum(np.exp(phi) * ch * du, axis=1)
    uu = np.sqrt(x) * ch
    v = np.sqrt(3.0 * x) * sh
    g = uu + v ** 2 / (3.0 * uu)
    return -np.sqrt(3.0 * x[:, 0]) / np.pi * np.sum(g * np.exp(phi) * ch * du, axis=1)


def _airy_neg(x, deriv):
    # x < 0: vertical segment between the saddles +-i a, then rays at +-pi/4
    a = np.sqrt(-x)
    nseg = 48 + int(np.ceil(1.2 * np.max(a) ** 3))
    xs, ws = gauss_legendre(nseg)
    v = a[:, None] * xs[None, :]
    dv = a[:, None] * ws[None, :]
    phase = a[:, None] ** 2 * v - v ** 3 / 3.0
    if deriv:
        seg = np.sum(-1j * v * np.exp(1j * phase) * dv, axis=1).real / (2 * np.pi)
    else:
        seg = np.sum(np.cos(phase) * dv, axis=1) / (2 * np.pi)
    om = np.exp(1j * np.pi / 4)
    rr, rw = _segment(0.0, 1.0, 72)
    rmax = np.minimum(5.8, np.sqrt(44.0 / np.maximum(a, 1e-300)))[:, None]
    rho = rr[None, :] * rmax
    drho = rw[None, :] * rmax
    t = 1j * a[:, None] + rho * om
    f = np.exp(t ** 3 / 3.0 - x[:, None] * t)
    if deriv:
        f = -t * f
    ray = np.imag(om * np.sum(f * drho, axis=1)) / np.pi
    return seg + ray


def _airy(x, deriv):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any((x < AIRY_RANGE[0]) | (x > AIRY_RANGE[1])) or np.any(~np.isfinite(x)):
        raise DomainError(f"Airy evaluation supported on {AIRY_RANGE}")
    out = np.empty_like(x)
    neg = x < 0
    small = (x >= 0) & (x <= 1.0)
    pos = x > 1.0
    if np.any(neg):
        out[neg] = _airy_neg(x[neg], deriv)
    if np.any(small):
        out[small] = _airy_small(x[small], deriv)
    if np.any(pos):
        out[pos] = _airy_pos(x[pos], deriv)
    return out[0] if scalar else out


def airy_ai(x):
    """Ai(x) from its contour-integral representation (absolute error ~1e-13)."""
    return _airy(x, False)


def airy_ai_prime(x):
    """Ai'(x) by the same contour quadrature."""
    return _airy(x, True)


# --- root finding ----------------------------------------------------------

def find_root_1d(f, lo, hi, xtol=1e-15):
    """Bracketed root of a continuous real function (Brent's method)."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise NoBracketError(f"f({lo}) and f({hi}) have the same sign")
    return float(optimize.brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps,
                                 maxiter=500))


# --- contours --------------------------------------------------------------

@dataclass
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        if len(self.nodes) == 0 or len(self.nodes) != len(self.weights):
            raise ValueError("quadrature rule needs matching non-empty nodes/weights")


@dataclass
class ContourSpec:
    """Circle (center, radius) or vertical line (anchor = real part)."""
    kind: str
    center: complex
    radius: float
    nodes: int = 256
    meta: dict = field(default_factory=dict)

    def rule(self, nodes=None):
        m = int(nodes or self.nodes)
        if self.kind != "circle":
            raise ValueError("only circles carry an intrinsic trapezoid rule")
        return circle_rule(self.center, self.radius, m)


def circle_rule(center, radius, m):
    """Trapezoid rule on a circle; weights are the tangent differential dz."""
    th = 2.0 * np.pi * np.arange(m) / m
    e = np.exp(1j * th)
    return QuadratureRule(center + radius * e, 1j * radius * e * (2.0 * np.pi / m),
                          "circle-trapezoid")


def line_rule(re, half_length, panels=None, per_panel=24):
    """Composite Gauss-Legendre on the segment re + i[-L, L], weights = dy."""
    if panels is None:
        panels = max(4, int(np.ceil(2.0 * half_length)))
    edges = np.linspace(-half_length, half_length, panels + 1)
    x, w = gauss_legendre(per_panel)
    ys, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ys.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    y = np.concatenate(ys)
    return QuadratureRule(re + 1j * y, np.concatenate(ws), "segment-gauss")


def nest_ratios(radii, q, center, exclude_zero, interior=0.0):
    """Worst singularity-distance ratio for each circle of a nest.

    The trapezoid error on circle A decays like ratio_A ** nodes.
    """
    c = abs(center)
    r = list(radii)
    k = len(r)
    out = []
    for A in range(k):
        rho = interior / r[A]
        if A + 1 < k:
            rho = max(rho, (c * (1 - q) + q * r[A + 1]) / r[A])
        if exclude_zero:
            rho = max(rho, r[A] / c)
        if A > 0:
            rho = max(rho, q * r[A] / (r[A - 1] - c * (1 - q)))
        out.append(rho)
    return out


def make_nested_circles(k, q, center=1.0, exclude_zero=True, inner_radius=None,
                        margin=0.05, nodes=256, min_inner_frac=0.5):
    """Nested circles r_1 > ... > r_k around `center` with q*C_B inside C_A.

    Every strict inequality is enforced with a relative `margin`. Within the
    feasible set the radii minimise the worst trapezoid convergence ratio. The
    innermost radius is kept above `min_inner_frac` of its largest feasible
    value: tiny circles around a high-order pole at 1 lose all digits to
    cancellation even when the trapezoid rule itself converges fast.
    """
    if k < 1 or not (0.0 < q < 1.0):
        raise DomainError("need k >= 1 and 0 < q < 1")
    c = abs(complex(center))
    floor = max(abs(1.0 - complex(center)), inner_radius or 0.0)
    lo_k = max(floor * (1 + margin), 1e-3 * c)
    top = c / (1 + margin) if exclude_zero else 4.0 * c

    def up(r):
        return (c * (1 - q) + q * r) * (1 + margin)

    def down(r):  # inverse of up
        return (r / (1 + margin) - c * (1 - q)) / q

    his = [top]
    for _ in range(k - 1):
        his.append(down(his[-1]))
    his = his[::-1]  # his[j] = upper bound for circle k-1-j counted from inside
    if his[0] <= lo_k:
        raise InfeasibleNestError(
            f"no nest of {k} circles with margin {margin} for q={q}")
    lo_k = max(lo_k, min_inner_frac * his[0])

    def radii_of(x):
        out = []
        lo = lo_k
        for j in range(k):
            hi = his[j]
            s = 1.0 / (1.0 + np.exp(-x[j]))
            r = lo + (hi - lo) * s
            out.append(r)
            lo = up(r)
        return out[::-1]

    interior = max(inner_radius or 0.0, floor)

    def cost(x):
        return max(nest_ratios(radii_of(x), q, center, exclude_zero, interior))

    best = None
    for x0 in (np.zeros(k), np.full(k, 1.0), np.full(k, -1.0)):
        res = optimize.minimize(cost, x0, method="Nelder-Mead",
                                options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    radii = radii_of(best.x)
    _validate_nest(radii, q, c, exclude_zero, floor)
    ratios = nest_ratios(radii, q, center, exclude_zero, interior)
    return [ContourSpec("circle", complex(center), r, nodes, {"ratio": rho})
            for r, rho in zip(radii, ratios)]


def _validate_nest(radii, q, c, exclude_zero, floor):
    for A in range(len(radii)):
        if radii[A] <= floor:
            raise InfeasibleNestError("circle fails to contain the required points")
        if exclude_zero and radii[A] >= c:
            raise InfeasibleNestError("circle would contain zero")
        if A + 1 < len(radii) and radii[A] <= c * (1 - q) + q * radii[A + 1]:
            raise InfeasibleNestError("circle does not contain q times the next circle")
