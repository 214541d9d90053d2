"""Orthonormal polynomials for |x|^{2 alpha} exp(-N V(x)) by discretized Stieltjes.

The weight is multiplied by exp(N min V) so that its peak is O(1); every
kernel evaluation uses the same scaled weight, which leaves K_{n,N}
unchanged.  Nodes come from composite Gauss rules on panels mirrored about
0; the two panels touching 0 use Gauss-Jacobi nodes absorbing |x|^{2 alpha}.
"""

from dataclasses import dataclass, field
import math

import mpmath
import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import roots_jacobi, roots_legendre

from .equilibrium import Potential


class QuadratureError(RuntimeError):
    pass


class OrthogonalityError(RuntimeError):
    pass


@dataclass(frozen=True)
class WeightSpec:
    alpha: float
    bigN: float
    potential: Potential

    def __post_init__(self):
        if not self.alpha > -0.5:
            raise ValueError("alpha must exceed -1/2")
        if not self.bigN > 0:
            raise ValueError("N must be positive")

    @property
    def v_min(self):
        c = self.potential.coefficients
        crit = P.polyroots(P.polyder(c))
        real = [r.real for r in np.atleast_1d(crit) if abs(r.imag) < 1e-12]
        return float(min(P.polyval(np.array(real + [0.0]), c)))

    def log_weight(self, x):
        """log of the scaled weight |x|^{2a} exp(-N (V(x) - min V))."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            lw = -self.bigN * (self.potential(x) - self.v_min)
            if self.alpha != 0:
                lw = lw + 2 * self.alpha * np.log(np.abs(x))
        return lw


@dataclass(frozen=True)
class PanelSpec:
    """Composite rule layout; the half-width is found from the tail decay."""

    nodes_per_panel: int = 24
    n_max: int = 120
    tail_decades: float = 40.0
    node_factor: float = 3.0
    refine: int = 1


@dataclass(frozen=True)
class DiscretizedMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    precision: str = "double"
    half_width: float = 0.0

    def __post_init__(self):
        for name in ("nodes", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.weights <= 0) or np.any(np.diff(self.nodes) <= 0):
            raise ValueError("weights must be positive and nodes strictly increasing")

    @property
    def mass(self):
        return math.fsum(self.weights)


@dataclass(frozen=True)
class RecurrenceTable:
    alpha: float
    bigN: float
    potential: Potential
    a: np.ndarray  # a_1..a_nmax
    b: np.ndarray  # b_0..b_{nmax-1}
    mass: float  # of the scaled weight
    weight_shift: float = 0.0  # N min V
    precision: str = "double"
    orthogonality_defect: float = 0.0
    log_kappa: np.ndarray = field(default=None)

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        # kappa_k of the unscaled weight: p_k = kappa_k x^k + ...
        lk = -0.5 * math.log(self.mass) + 0.5 * self.weight_shift - np.concatenate(([0.0], np.cumsum(np.log(a))))
        lk.setflags(write=False)
        object.__setattr__(self, "log_kappa", lk)

    @property
    def n_max(self):
        return len(self.a)

    @property
    def weight(self):
        return WeightSpec(self.alpha, self.bigN, self.potential)


def _half_width(w, n_max, tail_decades):
    """Smallest X with 2 n log(1+|x|) + log w(x) below its peak by tail_decades."""
    drop = tail_decades * math.log(10)

    def env(x):
        return 2 * n_max * np.log1p(np.abs(x)) + w.log_weight(x)

    X = 1.0
    while True:
        xs = np.linspace(-X, X, 4001)
        e = env(xs)
        peak = np.max(e[np.isfinite(e)])
        if env(X) < peak - drop and env(-X) < peak - drop:
            break
        X *= 1.5
    xs = np.linspace(0, X, 4001)
    ok = (env(xs) >= peak - drop) | (env(-xs) >= peak - drop)
    return float(xs[np.nonzero(ok)[0].max()] * 1.05 + 1e-3)


def _panel_rule(w, X, n_panels, q):
    edges = np.linspace(0.0, X, n_panels + 1)
    yl, wl = roots_legendre(q)
    yj, wj = roots_jacobi(q, 0.0, 2 * w.alpha)
    xs, ws = [], []
    for i in range(n_panels):
        lo, hi = edges[i], edges[i + 1]
        half = 0.5 * (hi - lo)
        if i == 0:
            x = half * (1 + yj)
            ws.append(wj * half ** (2 * w.alpha + 1))
        else:
            x = lo + half * (1 + yl)
            ws.append(wl * half * np.abs(x) ** (2 * w.alpha))
        xs.append(x)
    x = np.concatenate(xs)
    base = np.concatenate(ws)
    # |x|^{2 alpha} already sits in base; add only the exponential factor
    v = -w.bigN * (w.potential(x) - w.v_min)
    vn = -w.bigN * (w.potential(-x) - w.v_min)
    nodes = np.concatenate((-x[::-1], x))
    weights = np.concatenate(((base * np.exp(vn))[::-1], base * np.exp(v)))
    keep = weights > 0
    return nodes[keep], weights[keep]


def discretize_weight(w, panel_spec=None, precision="double", mass_tol=1e-12):
    """Quadrature surrogate for the scaled weight, certified by a doubling check."""
    ps = panel_spec or PanelSpec()
    if precision not in ("double", "mp", "auto"):
        raise ValueError("precision must be 'double', 'mp' or 'auto'")
    X = _half_width(w, ps.n_max, ps.tail_decades)
    q = ps.nodes_per_panel
    n_panels = max(4, math.ceil((ps.node_factor * ps.n_max + 60) / q)) * ps.refine
    nodes, weights = _panel_rule(w, X, n_panels, q)
    _, w2 = _panel_rule(w, X, 2 * n_panels, q)
    m1, m2 = math.fsum(weights), math.fsum(w2)
    if abs(m1 - m2) > mass_tol * m2:
        raise QuadratureError(f"mass changed by {abs(m1 - m2) / m2:.2e} on doubling the panels")
    return DiscretizedMeasure(nodes, weights, precision, X)


def _stieltjes_double(x, wts, n_max):
    v = np.sqrt(wts / math.fsum(wts))
    prev = np.zeros_like(v)
    a = np.zeros(n_max)
    b = np.zeros(n_max)
    Q = np.empty((n_max + 1, len(x)))
    Q[0] = v
    ak = 0.0
    for k in range(n_max):
        b[k] = np.dot(x * v, v)
        u = x * v - b[k] * v - ak * prev
        ak = np.linalg.norm(u)
        a[k] = ak
        prev, v = v, u / ak
        Q[k + 1] = v
    return a, b, Q


def _stieltjes_mp(x, wts, n_max, dps):
    with mpmath.workdps(dps):
        xm = [mpmath.mpf(float(t)) for t in x]
        total = mpmath.fsum(mpmath.mpf(float(t)) for t in wts)
        v = [mpmath.sqrt(mpmath.mpf(float(t)) / total) for t in wts]
        prev = [mpmath.mpf(0)] * len(x)
        a, b = [], []
        Q = [np.array([float(t) for t in v])]
        ak = mpmath.mpf(0)
        for _ in range(n_max):
            xv = [xi * vi for xi, vi in zip(xm, v)]
            bk = mpmath.fdot(xv, v)
            u = [xvi - bk * vi - ak * pi for xvi, vi, pi in zip(xv, v, prev)]
            ak = mpmath.sqrt(mpmath.fdot(u, u))
            a.append(float(ak))
            b.append(float(bk))
            prev, v = v, [ui / ak for ui in u]
            Q.append(np.array([float(t) for t in v]))
    return np.array(a), np.array(b), np.vstack(Q)


def stieltjes_recurrence(m, n_max, weight, orth_tol=1e-10, dps=40):
    """Orthonormal recurrence x p_k = a_{k+1} p_{k+1} + b_k p_k + a_k p_{k-1}.

    ``weight`` is the WeightSpec the measure was built from.  With precision
    'auto' a failed orthogonality check is retried in mpmath.
    """
    if 4 * n_max > len(m.nodes):
        raise ValueError(f"n_max={n_max} needs at least {4 * n_max} nodes, have {len(m.nodes)}")
    precision = m.precision
    if precision == "mp":
        a, b, Q = _stieltjes_mp(m.nodes, m.weights, n_max, dps)
    else:
        a, b, Q = _stieltjes_double(m.nodes, m.weights, n_max)
    defect = float(np.max(np.abs(Q @ Q.T - np.eye(n_max + 1))))
    if defect > orth_tol and precision == "auto":
        a, b, Q = _stieltjes_mp(m.nodes, m.weights, n_max, dps)
        precision = "mp"
        defect = float(np.max(np.abs(Q @ Q.T - np.eye(n_max + 1))))
    if defect > orth_tol:
        raise OrthogonalityError(
            f"orthogonality defect {defect:.2e} exceeds {orth_tol:.1e}; retry with precision='mp'"
        )
    if weight.potential.is_even:
        # mirrored nodes make b_k vanish up to summation rounding
        b = np.where(np.abs(b) < 1e-13, 0.0, b)
    return RecurrenceTable(
        alpha=weight.alpha,
        bigN=weight.bigN,
        potential=weight.potential,
        a=a,
        b=b,
        mass=m.mass,
        weight_shift=weight.bigN * weight.v_min,
        precision="double" if precision == "auto" else precision,
        orthogonality_defect=defect,
    )


def recurrence_table(alpha, bigN, potential, n_max=120, panel_spec=None, precision="auto"):
    w = WeightSpec(alpha, bigN, potential)
    ps = panel_spec or PanelSpec(n_max=n_max)
    m = discretize_weight(w, ps, precision)
    return stieltjes_recurrence(m, n_max, w)


def _forward(tab, k, x, scale, derivative=False):
    """p_0..p_k at x, each multiplied by ``scale`` (and the derivatives if asked)."""
    if k > tab.n_max:
        raise ValueError(f"k={k} exceeds n_max={tab.n_max}")
    x = np.asarray(x, dtype=float)
    p = np.empty((k + 1,) + x.shape)
    p[0] = scale / math.sqrt(tab.mass)
    dp = np.zeros_like(p)
    prev = np.zeros_like(p[0])
    dprev = np.zeros_like(p[0])
    for j in range(k):
        aj = tab.a[j - 1] if j > 0 else 0.0
        nxt = ((x - tab.b[j]) * p[j] - aj * prev) / tab.a[j]
        if derivative:
            dp[j + 1] = (p[j] + (x - tab.b[j]) * dp[j] - aj * dprev) / tab.a[j]
            dprev = dp[j]
        prev = p[j]
        p[j + 1] = nxt
    return p, dp


def orthonormal_eval(tab, k, x, log_scaled=False):
    """p_k(x) orthonormal for the scaled weight.

    With ``log_scaled`` returns (sign, log|p_k(x)|) using renormalized steps,
    which never overflows.
    """
    if k > tab.n_max:
        raise ValueError(f"k={k} exceeds n_max={tab.n_max}")
    if not log_scaled:
        return _forward(tab, k, x, 1.0)[0][k]
    x = float(x)
    cur, prev, logs = 1.0 / math.sqrt(tab.mass), 0.0, 0.0
    for j in range(k):
        aj = tab.a[j - 1] if j > 0 else 0.0
        cur, prev = ((x - tab.b[j]) * cur - aj * prev) / tab.a[j], cur
        big = max(abs(cur), abs(prev))
        if big > 1e100 or (0 < big < 1e-100):
            cur, prev, logs = cur / big, prev / big, logs + math.log(big)
    if cur == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, cur), logs + math.log(abs(cur))


def _sqrt_weight(w, x):
    return np.exp(0.5 * w.log_weight(x))


def finite_kernel(tab, w, n, x, y, near_diag=1e-6):
    """Christoffel-Darboux kernel K_{n,N}(x, y) including sqrt-weight factors.

    For |x - y| below ``near_diag`` (relative) the direct sum is used; x == y
    takes the confluent form.
    """
    if not 1 <= n <= tab.n_max:
        raise ValueError(f"n must lie in 1..{tab.n_max}")
    x, y = float(x), float(y)
    if x == y:
        p, dp = _forward(tab, n, x, float(_sqrt_weight(w, x)), derivative=True)
        return float(tab.a[n - 1] * (dp[n] * p[n - 1] - dp[n - 1] * p[n]))
    px = _forward(tab, n, x, float(_sqrt_weight(w, x)))[0]
    py = _forward(tab, n, y, float(_sqrt_weight(w, y)))[0]
    if abs(x - y) <= near_diag * max(1.0, abs(x), abs(y)):
        return float(np.dot(px[:n], py[:n]))
    return float(tab.a[n - 1] * (px[n] * py[n - 1] - px[n - 1] * py[n]) / (x - y))


def kernel_sum(tab, w, n, x, y):
    """sum_{k<n} of weighted p_k(x) p_k(y); reference form of the CD kernel."""
    px = _forward(tab, n, float(x), float(_sqrt_weight(w, x)))[0]
    py = _forward(tab, n, float(y), float(_sqrt_weight(w, y)))[0]
    return float(np.dot(px[:n], py[:n]))


def rescaled_kernel(tab, w, n, c, u, v):
    """(1/(c n^{1/3})) K_{n,N}(u/(c n^{1/3}), v/(c n^{1/3}))."""
    if u == 0 or v == 0:
        raise ValueError("rescaled kernel is evaluated away from the origin")
    scale = c * n ** (1 / 3)
    return finite_kernel(tab, w, n, u / scale, v / scale) / scale


def coupled_bigN(n, L):
    """N = round(n / (1 + L n^{-2/3})) and the realized L = n^{2/3}(n/N - 1)."""
    N = round(n / (1 + L * n ** (-2 / 3)))
    return N, n ** (2 / 3) * (n / N - 1)
