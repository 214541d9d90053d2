"""One-interval equilibrium measures for polynomial external fields V/t.

For a one-cut measure on [a, b] the density is

    psi_t(x) = h_t(x) sqrt((b - x)(x - a)) / (2 pi t),

where h_t is the polynomial part of V'(x) / sqrt((x - a)(x - b)) at infinity.
The endpoints solve the two moment conditions

    int V'(x) / sqrt((b-x)(x-a)) dx = 0,
    int x V'(x) / sqrt((b-x)(x-a)) dx = 2 pi t,

evaluated exactly with Gauss-Chebyshev quadrature.  For t != 1 the same
equations are continued analytically, so h_t(0) may be negative (t < 1).
"""

from dataclasses import dataclass
import math

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class Potential:
    """V(x) = sum_k coefficients[k] x^k."""

    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coefficients", c)
        deg = len(c) - 1
        if deg < 2 or deg % 2 or c[-1] <= 0:
            raise ValueError("V must have even degree >= 2 and a positive leading coefficient")

    @classmethod
    def parse(cls, text):
        return cls(tuple(float(x) for x in text.split(",")))

    @property
    def degree(self):
        return len(self.coefficients) - 1

    @property
    def is_even(self):
        return all(c == 0.0 for c in self.coefficients[1::2])

    def __call__(self, x):
        return P.polyval(x, self.coefficients)

    def derivative(self, x, m=1):
        return P.polyval(x, P.polyder(self.coefficients, m))


CRITICAL_QUARTIC = Potential((0.0, 0.0, -1.0, 0.0, 0.25))


@dataclass(frozen=True)
class SupportInterval:
    a: float
    b: float
    t: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("degenerate interval")
        if not self.a < 0 < self.b:
            raise ValueError(f"origin must be interior to [{self.a}, {self.b}]")

    @property
    def a_t(self):
        return self.a

    @property
    def b_t(self):
        return self.b


@dataclass(frozen=True)
class OriginReport:
    psi0: float
    dpsi0: float
    ddpsi0: float
    is_singular_case_II: bool


@dataclass(frozen=True)
class EquilibriumData:
    potential: Potential
    interval: SupportInterval
    h_coeffs: tuple
    omega_t: float
    psi_t_at_0: float
    support_1: SupportInterval
    theta: float
    w0: float
    c: float | None = None
    psiV_second_deriv_at_0: float | None = None

    @property
    def t(self):
        return self.interval.t


class EndpointError(RuntimeError):
    pass


_N_CHEB = 64


def _cheb_points(a, b, n=_N_CHEB):
    phi = (np.arange(n) + 0.5) * np.pi / n
    return phi, 0.5 * (a + b) + 0.5 * (b - a) * np.cos(phi)


def _moments(V, a, b, t):
    """Endpoint equations and their Jacobian with respect to (a, b)."""
    phi, x = _cheb_points(a, b)
    wq = np.pi / len(phi)
    d1 = V.derivative(x)
    d2 = V.derivative(x, 2)
    da = (1 - np.cos(phi)) / 2
    db = (1 + np.cos(phi)) / 2
    F = np.array([wq * d1.sum() / np.pi, wq * (x * d1).sum() / (2 * np.pi * t) - 1.0])
    g2 = d1 + x * d2
    J = np.array(
        [
            [wq * (d2 * da).sum() / np.pi, wq * (d2 * db).sum() / np.pi],
            [wq * (g2 * da).sum() / (2 * np.pi * t), wq * (g2 * db).sum() / (2 * np.pi * t)],
        ]
    )
    return F, J


def _newton_endpoints(V, t, a, b, tol=1e-12, max_iter=100):
    for _ in range(max_iter):
        F, J = _moments(V, a, b, t)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-4:
            na, nb = a + lam * step[0], b + lam * step[1]
            if na < nb and np.max(np.abs(_moments(V, na, nb, t)[0])) < max(np.max(np.abs(F)), 1e-300) * (1 - lam / 4) + 1e-15:
                break
            lam /= 2
        a, b = a + lam * step[0], b + lam * step[1]
        if not a < b:
            return None
        if np.max(np.abs(lam * step)) <= tol * max(1.0, abs(a), abs(b)):
            F, _ = _moments(V, a, b, t)
            if np.max(np.abs(F)) <= 1e-11:
                return a, b
    return None


def density_coeffs(V, interval):
    """Ascending coefficients of h_t (degree deg V - 2)."""
    a, b = interval.a, interval.b
    m = V.degree - 1  # degree of V'
    dV = P.polyder(V.coefficients)
    # 1/sqrt((x-a)(x-b)) = sum_k e_k x^{-k-1}
    ca = np.array([math.comb(2 * k, k) * (a / 4) ** k for k in range(m + 1)])
    cb = np.array([math.comb(2 * k, k) * (b / 4) ** k for k in range(m + 1)])
    e = np.convolve(ca, cb)[: m + 1]
    h = np.zeros(m)
    for p in range(m):
        h[p] = sum(dV[j] * e[j - p - 1] for j in range(p + 1, m + 1))
    return h


def _validate(h, interval, delta0):
    a, b = interval.a, interval.b
    if P.polyval(a, h) <= 0 or P.polyval(b, h) <= 0:
        raise EndpointError("h vanishes at an endpoint: not a regular one-interval measure")
    # negligible top coefficients only push roots far outside [a, b]
    h = P.polytrim(h, tol=1e-14 * float(np.max(np.abs(h))))
    if len(h) > 1:
        for r in P.polyroots(h):
            if abs(r.imag) < 1e-9 and a < r.real < b and abs(r.real) > delta0:
                raise EndpointError(
                    f"h_t changes sign at {r.real:.6g} away from 0: one-interval ansatz invalid"
                )


def solve_endpoints(V, t=1.0, t_window=(0.8, 1.2), delta0=0.5):
    """Support [a_t, b_t] of the (possibly signed) one-interval measure."""
    if not t_window[0] <= t <= t_window[1]:
        raise ValueError(f"t={t} outside the window {t_window}")
    candidates = []
    for R in (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0):
        F, _ = _moments(V, -R, R, t)
        candidates.append((np.max(np.abs(F)), R))
    for _, R in sorted(candidates):
        res = _newton_endpoints(V, t, -R, R)
        if res is None:
            continue
        interval = SupportInterval(res[0], res[1], t)
        if V.is_even:
            half = 0.5 * (res[1] - res[0])
            interval = SupportInterval(-half, half, t)
        _validate(density_coeffs(V, interval), interval, delta0)
        return interval
    raise EndpointError(f"endpoint Newton failed for t={t}")


def _sqrt_factor_derivs(a, b, x):
    R = (b - x) * (x - a)
    dR = a + b - 2 * x
    g = math.sqrt(R)
    g1 = dR / (2 * g)
    g2 = -2 / (2 * g) - dR**2 / (4 * g**3)
    return g, g1, g2


def psi_t_eval(data, x):
    """psi_t(x) for x in the support of ``data``."""
    return _psi(data.interval, np.array(data.h_coeffs), x)


def _psi(interval, h, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < interval.a) or np.any(x > interval.b):
        raise ValueError("x outside the support")
    root = np.sqrt(np.clip((interval.b - x) * (x - interval.a), 0, None))
    return P.polyval(x, h) * root / (2 * np.pi * interval.t)


def mass(interval, h, n=64):
    """int psi_t, exact for polynomial h via Gauss-Chebyshev of the second kind."""
    k = np.arange(1, n + 1)
    y = np.cos(k * np.pi / (n + 1))
    w = np.pi / (n + 1) * np.sin(k * np.pi / (n + 1)) ** 2
    a, b = interval.a, interval.b
    x = 0.5 * (a + b) + 0.5 * (b - a) * y
    return ((b - a) / 2) ** 2 * np.sum(w * P.polyval(x, h)) / (2 * np.pi * interval.t)


def omega(interval, h, n=80):
    """int_0^b psi_t with the (b - x)^{1/2} edge absorbed by Gauss-Jacobi."""
    a, b = interval.a, interval.b
    y, w = roots_jacobi(n, 0.5, 0.0)
    x = b * (y + 1) / 2
    f = P.polyval(x, h) * np.sqrt(x - a)
    return (b / 2) ** 1.5 * np.sum(w * f) / (2 * np.pi * interval.t)


def support_angle(interval):
    """theta = arcsin((b + a) / (b - a)); zero for a symmetric support."""
    return math.asin((interval.b + interval.a) / (interval.b - interval.a))


def classify_origin(V, tol=1e-8):
    interval = solve_endpoints(V, 1.0)
    h = density_coeffs(V, interval)
    g, g1, g2 = _sqrt_factor_derivs(interval.a, interval.b, 0.0)
    h0, h1 = P.polyval(0.0, h), P.polyval(0.0, P.polyder(h))
    h2 = P.polyval(0.0, P.polyder(h, 2))
    k = 1 / (2 * np.pi)
    psi0 = k * h0 * g
    dpsi0 = k * (h1 * g + h0 * g1)
    ddpsi0 = k * (h2 * g + 2 * h1 * g1 + h0 * g2)
    crit = abs(psi0) <= tol and abs(dpsi0) <= tol and ddpsi0 > tol
    return OriginReport(float(psi0), float(dpsi0), float(ddpsi0), bool(crit))


def scaling_constants(V, tol=1e-8):
    """(c, theta, omega_1, w0) for a potential critical at the origin."""
    rep = classify_origin(V, tol)
    if not rep.is_singular_case_II:
        raise ValueError("potential is not critical (quadratic vanishing) at the origin")
    iv = solve_endpoints(V, 1.0)
    h = density_coeffs(V, iv)
    c = (math.pi * rep.ddpsi0 / 8) ** (1 / 3)
    theta = support_angle(iv)
    w0 = 1 / (math.pi * math.sqrt(-iv.a * iv.b))
    return c, theta, float(omega(iv, h)), w0


def equilibrium_data(V, t=1.0, delta0=0.5, tol=1e-8):
    iv = solve_endpoints(V, t, delta0=delta0)
    h = density_coeffs(V, iv)
    iv1 = iv if t == 1.0 else solve_endpoints(V, 1.0, delta0=delta0)
    theta = support_angle(iv1)
    w0 = 1 / (math.pi * math.sqrt(-iv1.a * iv1.b))
    rep = classify_origin(V, tol)
    c = ddpsi = None
    if rep.is_singular_case_II:
        c = (math.pi * rep.ddpsi0 / 8) ** (1 / 3)
        ddpsi = rep.ddpsi0
    psi0 = float(_psi(iv, h, 0.0))
    return EquilibriumData(
        potential=V,
        interval=iv,
        h_coeffs=tuple(float(x) for x in h),
        omega_t=float(omega(iv, h)),
        psi_t_at_0=psi0,
        support_1=iv1,
        theta=theta,
        w0=w0,
        c=c,
        psiV_second_deriv_at_0=ddpsi,
    )


S_MODES = ("s_tn", "s_star", "s_L")


def s_parameters(data, n, mode="s_tn", L=None):
    """Painleve variable for degree n.

    ``s_tn``   n^{2/3} (pi / c) psi_t(0)
    ``s_star`` n^{2/3} (t - 1) / (c sqrt(-a b))
    ``s_L``    2 pi^{2/3} L psi''(0)^{-1/3} w0, L defaulting to n^{2/3} (t - 1)
    """
    if data.c is None:
        raise ValueError("s parameters need a critical potential")
    a, b = data.support_1.a, data.support_1.b
    n23 = n ** (2 / 3)
    if mode == "s_tn":
        return n23 * math.pi / data.c * data.psi_t_at_0
    if mode == "s_star":
        return n23 * (data.t - 1) / (data.c * math.sqrt(-a * b))
    if mode == "s_L":
        if L is None:
            L = n23 * (data.t - 1)
        return 2 * math.pi ** (2 / 3) * L * data.psiV_second_deriv_at_0 ** (-1 / 3) * data.w0
    raise ValueError(f"mode must be one of {S_MODES}")
