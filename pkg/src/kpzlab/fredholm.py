"""Fredholm determinants by Nystrom discretisation and the kernels built on them.

det(I + K) over a contour (or half-line) is replaced by det(delta_ij + K(w_i, w_j) w_j)
for a quadrature rule (w_i, w_j). Kernels given as Mellin-Barnes integrals over
Re s = 1/2 are assembled with composite Gauss-Legendre panels on a truncated
segment whose length is chosen from the exponential decay of the integrand.

Kernel conventions: every `kind` is stored so that the determinant is det(I + K);
the Airy-type kernels (`kpz`, `airy`) therefore carry their minus sign.
"""
import csv
import functools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (BranchCutError, ConvergenceError, DomainError,
                     OracleMismatchError, SingularMatrixError)
from .numerics import (ContourSpec, QuadratureRule, airy_ai, airy_ai_prime,
                       circle_rule, gamma_complex, gauss_legendre, line_rule)

KINDS = ("qtasep", "sd", "asep", "kpz", "airy")
MB_TARGET = 1e-16       # truncation target for the Mellin-Barnes tail
MB_PER_UNIT = 60        # Gauss-Legendre nodes per unit of Im s
HALF_LINE_L = 10.0


@dataclass
class KernelSpec:
    """A kernel with its parameters, Mellin-Barnes line and outer contour.

    inner: ContourSpec("line", center=Re s, radius=half-length, nodes=total nodes)
    outer: ContourSpec("circle", ...) or ContourSpec("halfline", center=left end, radius=L)
    """
    kind: str
    params: dict
    inner: ContourSpec = None
    outer: ContourSpec = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown kernel kind {self.kind!r}")


# --- determinant engine ------------------------------------------------------

def det_matrix(A):
    """det(I + A) through an LU factorisation; zero pivots are reported."""
    A = np.asarray(A, dtype=complex)
    M = np.eye(A.shape[0], dtype=complex) + A
    if not np.all(np.isfinite(M)):
        raise SingularMatrixError("non-finite entries in the Fredholm matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(M, check_finite=False)
    d = np.diag(lu)
    if np.any(d == 0):
        raise SingularMatrixError("exactly singular Fredholm matrix")
    sign = (-1) ** int(np.sum(piv != np.arange(len(piv))))
    # product of pivots in log form is avoided: values stay O(1)
    return complex(sign * np.prod(d))


def outer_rule(spec, nodes):
    o = spec.outer
    if o.kind == "circle":
        r = circle_rule(o.center, o.radius, nodes)
        return QuadratureRule(r.nodes, r.weights / (2j * np.pi), "circle-trapezoid")
    if o.kind == "halfline":
        return half_line_rule(float(np.real(o.center)), o.radius, nodes)
    if o.kind == "segment":
        return uniform_rule(float(np.real(o.center)), o.radius, nodes)
    raise DomainError(f"unsupported outer contour {o.kind!r}")


def half_line_rule(s, L, nodes):
    """x = s + L u/(1-u) with Gauss-Legendre in u on (0, 1)."""
    x, w = gauss_legendre(nodes)
    u = 0.5 * (x + 1.0)
    return QuadratureRule(s + L * u / (1.0 - u), 0.5 * w * L / (1.0 - u) ** 2,
                          "halfline-gauss")


def uniform_rule(s, length, nodes):
    """Composite Simpson rule on the truncated segment [s, s + length]."""
    n = int(nodes) if int(nodes) % 2 == 1 else int(nodes) + 1
    x = np.linspace(s, s + length, n)
    h = length / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return QuadratureRule(x, w * h / 3.0, "segment-simpson")


def kernel_matrix(spec, rule):
    """K(w_i, w_j) on the outer nodes."""
    return _ASSEMBLERS[spec.kind](spec, rule.nodes)


def fredholm_det(kernel, nodes):
    """Nystrom value of det(I + K) with `nodes` outer quadrature points.

    `kernel` is a KernelSpec, or a callable K(w, w') of two broadcastable arrays
    paired with an explicit QuadratureRule as (callable, rule).
    """
    if isinstance(kernel, tuple):
        fn, rule = kernel
        W, Wp = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        K = np.asarray(fn(W, Wp), dtype=complex) * np.ones_like(W)
        return det_matrix(K * rule.weights[None, :])
    rule = outer_rule(kernel, nodes)
    K = kernel_matrix(kernel, rule)
    return det_matrix(K * rule.weights[None, :])


def doubled_det(spec, nodes, tol, max_nodes=1024, what="Fredholm determinant"):
    """Double outer nodes until successive determinants differ by < tol."""
    m = int(nodes)
    prev = fredholm_det(spec, m)
    while True:
        if 2 * m > max_nodes:
            raise ConvergenceError(f"{what} not converged to {tol} at {m} nodes")
        cur = fredholm_det(spec, 2 * m)
        err = abs(cur - prev)
        if err < tol:
            return cur, 2 * m, err
        prev, m = cur, 2 * m


# --- Mellin-Barnes line ------------------------------------------------------

def _log_minus(zeta):
    zeta = complex(zeta)
    if zeta.imag == 0.0 and zeta.real > 0.0:
        raise BranchCutError("zeta on the positive real axis (branch cut of (-zeta)^s)")
    return np.log(-zeta)


def mb_half_length(zeta, growth=0.0, target=MB_TARGET):
    """|Gamma(-s)Gamma(1+s)(-zeta)^s| <= 2 pi |zeta|^{1/2} e^{-(pi - |arg(-zeta)|)|y|}."""
    lz = _log_minus(zeta)
    rate = np.pi - abs(lz.imag) - growth
    if rate <= 0.1:
        raise ConvergenceError("Mellin-Barnes integrand does not decay along the line")
    amp = np.log(2.0 * np.pi) + max(0.0, 0.5 * lz.real)
    return float((amp - np.log(target)) / rate) + 1.0


def mb_line(half_length, nodes=None):
    """Composite Gauss-Legendre on 1/2 + i[-L, L]; weights include ds/(2 pi i) = dy/(2 pi)."""
    L = float(half_length)
    total = int(nodes) if nodes else int(np.ceil(2 * L * MB_PER_UNIT))
    per = 30
    panels = max(2, int(np.ceil(total / per)))
    r = line_rule(0.5, L, panels=panels, per_panel=per)
    return r.nodes, r.weights / (2.0 * np.pi)


def _mb_prefactor(s, zeta):
    return gamma_complex(-s) * gamma_complex(1.0 + s) * np.exp(s * _log_minus(zeta))


def _inner(spec, zeta, growth=0.0):
    if spec.inner is not None:
        return mb_line(spec.inner.radius, spec.inner.nodes)
    return mb_line(mb_half_length(zeta, growth))


def _chunks(n, size=128):
    for a in range(0, n, size):
        yield slice(a, min(n, a + size))


# --- q-TASEP -------------------------------------------------------------------

def qtasep_contour(q):
    """C_1: circle about 1 of radius (1 - sqrt q)/(2(1 + sqrt q)); q^m C_1 misses C_1."""
    r = 0.5 * (1.0 - np.sqrt(q)) / (1.0 + np.sqrt(q))
    return ContourSpec("circle", 1.0 + 0j, r)


def _qpoch_ratio(a, b, q, n):
    """((a;q)_inf / (b;q)_inf)^n elementwise."""
    amax = max(np.max(np.abs(a)), np.max(np.abs(b)))
    J = int(np.ceil(np.log(1e-17 / amax) / np.log(q))) + 1 if amax > 1e-17 else 1
    out = np.ones(np.broadcast(a, b).shape, dtype=complex)
    qj = 1.0
    for _ in range(J):
        out *= (1.0 - a * qj) / (1.0 - b * qj)
        qj *= q
    return out ** n


def qtasep_spec(zeta, n, t, q, form="mb", inner=None):
    if not (0.0 < q < 1.0) or n < 1 or t < 0:
        raise DomainError("need 0 < q < 1, n >= 1, t >= 0")
    if complex(zeta) != 0:
        _log_minus(zeta)
    return KernelSpec("qtasep", {"zeta": complex(zeta), "n": int(n), "t": float(t),
                                 "q": float(q), "form": form},
                      inner=inner, outer=qtasep_contour(q))


def _qtasep_mb(spec, w):
    p = spec.params
    zeta, n, t, q = p["zeta"], p["n"], p["t"], p["q"]
    M = w.shape[0]
    K = np.zeros((M, M), dtype=complex)
    if zeta == 0:
        return K
    s, ws = _inner(spec, zeta)
    G = _mb_prefactor(s, zeta) * ws
    for sl in _chunks(s.shape[0]):
        qs = q ** s[sl]
        qsw = qs[:, None] * w[None, :]                                   # (S, M)
        ratio = np.exp(-(1.0 - qs[:, None]) * t * w[None, :]) * _qpoch_ratio(qsw, w[None, :], q, n)
        K += np.einsum("a,ai,aij->ij", G[sl], ratio,
                       1.0 / (qsw[:, :, None] - w[None, None, :]), optimize=True)
    return K


def _qtasep_series(spec, w, tol=1e-17, mmax=2000):
    p = spec.params
    zeta, n, t, q = p["zeta"], p["n"], p["t"], p["q"]
    if abs(zeta) >= 1.0:
        raise ConvergenceError("series form of the kernel needs |zeta| < 1")
    M = w.shape[0]
    K = np.zeros((M, M), dtype=complex)
    prod = np.ones(M, dtype=complex)
    for m in range(1, mmax):
        wq = q ** (m - 1) * w
        prod = prod * zeta * np.exp((q - 1.0) * t * wq) / (1.0 - wq) ** n
        term = prod[:, None] / (q ** m * w[:, None] - w[None, :])
        K += term
        if np.max(np.abs(term)) < tol:
            return K
    raise ConvergenceError("kernel series did not converge")


def kernel_qtasep(w, wp, spec):
    """K^{q-TASEP}(w, w') at arrays of points (Mellin-Barnes or series form)."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    wp = np.atleast_1d(np.asarray(wp, dtype=complex))
    pts = np.concatenate([w, wp])
    K = _qtasep_mb(spec, pts) if spec.params.get("form", "mb") == "mb" else _qtasep_series(spec, pts)
    return K[np.arange(w.size), w.size + np.arange(wp.size)]


def eq_laplace_qtasep(zeta, n, t, q, nodes=48, tol=1e-10, form="mb", inner=None):
    """E[1/(zeta q^{x_n(t)+n}; q)_inf] = det(I + K^{q-TASEP}) on C_1."""
    if complex(zeta) == 0:
        return 1.0 + 0j
    spec = qtasep_spec(zeta, n, t, q, form, inner)
    val, m, err = doubled_det(spec, nodes, tol, max_nodes=512, what="q-TASEP determinant")
    return val


# --- semi-discrete polymer ---------------------------------------------------

SD_RADIUS = 0.2


def sd_spec(u, n, tau, radius=SD_RADIUS, inner=None):
    u = complex(u)
    if u.real <= 0:
        raise DomainError("need Re(u) > 0")
    if n < 1 or tau <= 0:
        raise DomainError("need n >= 1 and tau > 0")
    if radius >= 0.25:
        raise DomainError("C_0 radius must stay below 1/4 so that s + v - v' avoids 0")
    return KernelSpec("sd", {"u": u, "n": int(n), "tau": float(tau)}, inner=inner,
                      outer=ContourSpec("circle", 0j, float(radius)))


def sd_half_length(u, n, tau, radius=SD_RADIUS, target=MB_TARGET):
    """Tail of Gamma(-s)Gamma(1+s) u^s e^{v tau s + s^2 tau/2}(Gamma(v)/Gamma(s+v))^n."""
    a = max(0.0, (0.5 * n - 1.0) * np.pi) + radius * tau + abs(np.angle(u))
    amp = np.log(2 * np.pi) + 0.5 * abs(np.log(abs(u))) + n * 2.0 + tau
    c = amp - np.log(target)
    return float((a + np.sqrt(a * a + 2.0 * tau * c)) / tau) + 1.0


def _sd_matrix(spec, v):
    p = spec.params
    u, n, tau = p["u"], p["n"], p["tau"]
    if spec.inner is not None:
        s, ws = mb_line(spec.inner.radius, spec.inner.nodes)
    else:
        L = sd_half_length(u, n, tau, spec.outer.radius)
        s, ws = mb_line(L, int(np.ceil(2 * L * 96)))
    G = gamma_complex(-s) * gamma_complex(1.0 + s) * np.exp(s * np.log(u) + 0.5 * tau * s ** 2) * ws
    gv = gamma_complex(v)
    M = v.shape[0]
    K = np.zeros((M, M), dtype=complex)
    for sl in _chunks(s.shape[0]):
        ss = s[sl][:, None]
        row = np.exp(v[None, :] * tau * ss) * (gv[None, :] / gamma_complex(ss + v[None, :])) ** n
        K += np.einsum("a,ai,aij->ij", G[sl], row,
                       1.0 / (ss[:, :, None] + v[None, :, None] - v[None, None, :]), optimize=True)
    return K


def laplace_sd(u, n, tau, nodes=32, tol=1e-10, radius=SD_RADIUS):
    """E[exp(-u e^{3 tau/2} z(tau, n))] = det(I + K^SD) on a small circle about 0."""
    spec = sd_spec(u, n, tau, radius)
    val, m, err = doubled_det(spec, nodes, tol, max_nodes=512, what="semi-discrete determinant")
    return val


# --- ASEP ----------------------------------------------------------------------

def asep_contours(tau):
    """Defaults: C the circle |w| = tau^{3/4} (between tau and tau^{1/2}), D = 1/2 + iR."""
    return ContourSpec("circle", 0j, tau ** 0.75), None


def asep_spec(zeta, y, t, p, q_rate, contours=None):
    if not (0.0 <= p < q_rate) or abs(p + q_rate - 1.0) > 1e-12:
        raise DomainError("need 0 <= p < q_rate with p + q_rate = 1")
    tau = p / q_rate
    if tau <= 0:
        raise DomainError("need tau = p/q_rate > 0")
    C, D = contours if contours is not None else asep_contours(tau)
    if complex(zeta) != 0:
        _log_minus(zeta)
    return KernelSpec("asep", {"zeta": complex(zeta), "y": int(y), "t": float(t),
                               "p": float(p), "q_rate": float(q_rate), "tau": tau},
                      inner=D, outer=C)


def _asep_g(z, y, t, p, qr, tau):
    return np.exp((qr - p) * t * tau / (z + tau)) * (tau / (z + tau)) ** (-y)


def _asep_matrix(spec, w):
    p = spec.params
    zeta, y, t, pp, qr, tau = p["zeta"], p["y"], p["t"], p["p"], p["q_rate"], p["tau"]
    M = w.shape[0]
    K = np.zeros((M, M), dtype=complex)
    if zeta == 0:
        return K
    s, ws = _inner(spec, zeta)
    G = _mb_prefactor(s, zeta) * ws
    gw = _asep_g(w, y, t, pp, qr, tau)
    for sl in _chunks(s.shape[0]):
        tsw = (tau ** s[sl])[:, None] * w[None, :]
        ratio = gw[None, :] / _asep_g(tsw, y, t, pp, qr, tau)
        K -= np.einsum("a,ai,aij->ij", G[sl], ratio,
                       1.0 / (tsw[:, :, None] - w[None, None, :]), optimize=True)
    return K


def eq_laplace_asep(zeta, y, t, p, q_rate, contours=None, nodes=48, tol=1e-10,
                    check=True, check_zeta=-0.02, check_tol=1e-5):
    """E[1/(zeta tau^{N_y(t)}; tau)_inf] = det(I + K^ASEP) on the contour C.

    With `check`, the same contours are first validated against the small-zeta
    moment series; a mismatch raises OracleMismatchError.
    """
    if complex(zeta) == 0:
        return 1.0 + 0j
    if check:
        from .moments import eq_laplace_series
        ref, tail, _ = eq_laplace_series("asep", check_zeta, y, t, p=p, q_rate=q_rate)
        got, _, _ = doubled_det(asep_spec(check_zeta, y, t, p, q_rate, contours), nodes, tol,
                                max_nodes=512, what="ASEP determinant")
        if abs(got - ref) > check_tol:
            raise OracleMismatchError(
                f"ASEP determinant {got:.10f} vs series {ref.real:.10f} at zeta={check_zeta}")
    spec = asep_spec(zeta, y, t, p, q_rate, contours)
    val, m, err = doubled_det(spec, nodes, tol, max_nodes=512, what="ASEP determinant")
    return val


# --- Airy kernels --------------------------------------------------------------

def _ai_clip(x):
    """Ai on arbitrary reals: zero beyond the top of the supported range, where it underflows."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x <= 80.0
    out[m] = airy_ai(x[m])
    return out


def _ai_prime_clip(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x <= 80.0
    out[m] = airy_ai_prime(x[m])
    return out


def airy_spec(s, method="gl", length=16.0):
    if method == "gl":
        outer = ContourSpec("halfline", complex(s), HALF_LINE_L)
    elif method == "uniform":
        outer = ContourSpec("segment", complex(s), float(length))
    else:
        raise DomainError("method is 'gl' or 'uniform'")
    return KernelSpec("airy", {"s": float(s)}, outer=outer)


def airy_kernel(x, y):
    """K_Airy(x, y) = (Ai(x)Ai'(y) - Ai'(x)Ai(y))/(x - y); diagonal Ai'(x)^2 - x Ai(x)^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X, Y = np.broadcast_arrays(x, y)
    ax, apx = _ai_clip(X), _ai_prime_clip(X)
    ay, apy = _ai_clip(Y), _ai_prime_clip(Y)
    d = X - Y
    diag = np.abs(d) < 1e-10
    out = np.empty_like(d)
    out[~diag] = (ax * apy - apx * ay)[~diag] / d[~diag]
    out[diag] = (apx ** 2 - X * ax ** 2)[diag]
    return out


def _airy_matrix(spec, x):
    x = np.real(x)
    a, ap = _ai_clip(x), _ai_prime_clip(x)
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, 1.0)
    K = (a[:, None] * ap[None, :] - ap[:, None] * a[None, :]) / d
    np.fill_diagonal(K, ap ** 2 - x * a ** 2)
    return -K.astype(complex)


def f_gue(s, nodes=64, method="gl"):
    """F_GUE(s) = det(I - K_Airy) on L^2(s, inf)."""
    s = float(s)
    if not (-8.0 <= s <= 4.0):
        raise DomainError("f_gue supports s in [-8, 4]")
    if method == "uniform" and nodes < 200:
        nodes = 801
    val = fredholm_det(airy_spec(s, method), nodes).real
    return float(min(1.0, max(0.0, val)))


def fgue_table(smin=-8.0, smax=4.0, step=0.05, nodes=64):
    """Rows (s, F, density) with the density by centred differences of F."""
    s = np.arange(smin, smax + 0.5 * step, step)
    s = s[s <= smax + 1e-12]
    F = np.array([f_gue(v, nodes) for v in s])
    dens = np.gradient(F, s) if len(s) > 1 else np.zeros_like(F)
    return s, F, np.maximum(dens, 0.0)


def write_fgue_csv(path, smin=-8.0, smax=4.0, step=0.05, nodes=64):
    s, F, dens = fgue_table(smin, smax, step, nodes)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["s", "F", "density"])
        for row in zip(s, F, dens):
            wr.writerow([f"{v:.12g}" for v in row])
    return path


# --- KPZ -----------------------------------------------------------------------

def kpz_spec(zeta, t):
    zeta = complex(zeta)
    if zeta.real <= 0:
        raise DomainError("need Re(zeta) > 0")
    if t <= 0:
        raise DomainError("need t > 0")
    return KernelSpec("kpz", {"zeta": zeta, "t": float(t)},
                      outer=ContourSpec("halfline", 0j, HALF_LINE_L))


def kpz_sigma_rule(zeta, t, target=1e-17, top=40.0, width=1.0, per=24):
    """Gauss-Legendre rule for the s-integral, with a panel edge at the sigmoid centre.

    Below s_min the factor |zeta e^{s c}/(1 + zeta e^{s c})| is under `target`.
    """
    c = (t / 2.0) ** (1.0 / 3.0)
    z = abs(complex(zeta))
    s0 = -np.log(z) / c
    smin = max((np.log(target) - np.log(z)) / c, -79.0)
    top = max(top, s0 + 10.0)
    left = np.arange(s0, smin, -width)[::-1]
    right = np.arange(s0 + width, top + 0.5 * width, width)
    edges = np.concatenate([[smin], left, right])
    x, w = gauss_legendre(per)
    a, b = edges[:-1], edges[1:]
    nodes = (0.5 * (b - a)[:, None] * x[None, :] + 0.5 * (a + b)[:, None]).ravel()
    weights = (0.5 * (b - a)[:, None] * w[None, :]).ravel()
    return nodes, weights, c


@functools.lru_cache(maxsize=32)
def _airy_shift_matrix(eta_key, s_key):
    eta = np.frombuffer(eta_key)
    s = np.frombuffer(s_key)
    arg = s[None, :] + eta[:, None]
    out = np.zeros(arg.shape)
    m = arg <= 80.0
    out[m] = airy_ai(np.maximum(arg[m], -80.0))
    return out


def _kpz_matrix(spec, eta):
    zeta, t = spec.params["zeta"], spec.params["t"]
    eta = np.real(eta)
    s, ws, c = kpz_sigma_rule(zeta, t)
    if s[0] + 0.0 < -80.0:
        raise DomainError("sigmoid tail needs Airy values below the supported range")
    A = _airy_shift_matrix(eta.tobytes(), s.tobytes())
    sig = zeta / (zeta + np.exp(-s * c))
    return -(A * (sig * ws)[None, :]) @ A.T


def laplace_kpz(zeta, t, nodes=48, tol=1e-10):
    """E[exp(-zeta e^{t/24} z(t, 0))] = det(I - K^KPZ) on L^2(R_+)."""
    zeta = complex(zeta)
    if zeta == 0:
        return 1.0 + 0j
    val, m, err = doubled_det(kpz_spec(zeta, t), nodes, tol, max_nodes=256,
                              what="KPZ determinant")
    return val


def kpz_small_zeta_slope(t, h=1e-3, nodes=48):
    """-d/dzeta det(I - K^KPZ) at 0+ by Richardson extrapolation of one-sided quotients."""
    d1 = laplace_kpz(h, t, nodes).real
    d2 = laplace_kpz(2 * h, t, nodes).real
    return float((4.0 * (1.0 - d1) - (1.0 - d2)) / (2.0 * h))


_ASSEMBLERS = {
    "qtasep": lambda spec, w: _qtasep_mb(spec, w) if spec.params.get("form", "mb") == "mb"
    else _qtasep_series(spec, w),
    "sd": _sd_matrix,
    "asep": _asep_matrix,
    "kpz": _kpz_matrix,
    "airy": _airy_matrix,
}
