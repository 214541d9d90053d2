"""Hastings-McLeod solution of the general Painleve II equation.

The boundary value problem

    q'' = s q + 2 q^3 - alpha,   q ~ alpha/s (s -> +inf),   q ~ sqrt(-s/2) (s -> -inf)

is discretised by multi-element Chebyshev-Lobatto collocation on a mesh that
is graded towards s = 0 and solved with a damped Newton iteration.  At both
ends a Robin condition removes the exponentially growing mode of the
linearisation around the asymptotic series, so the truncated interval behaves
like the infinite one up to the (tiny) series truncation error.
"""

from dataclasses import dataclass, field
import logging
import math

import mpmath
import numpy as np
from scipy.special import expit

from ._cheb import bary_interp, bary_weights, diff_matrix, lobatto_nodes

log = logging.getLogger(__name__)

MAX_SERIES_ORDER = 5


class SolverError(RuntimeError):
    """Newton iteration did not reach the requested residual."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class PiiParameters:
    alpha: float
    s_min: float = -12.0
    s_max: float = 12.0
    tolerance: float = 1e-10
    min_width: float = 8.0

    def __post_init__(self):
        if not self.alpha > -0.5:
            raise ValueError(f"alpha must exceed -1/2, got {self.alpha}")
        if not self.s_min < 0.0 < self.s_max:
            raise ValueError("need s_min < 0 < s_max")
        if -self.s_min < self.min_width or self.s_max < self.min_width:
            raise ValueError(
                f"domain [{self.s_min}, {self.s_max}] too narrow for asymptotic "
                f"boundary data (need |s_min|, s_max >= {self.min_width})"
            )
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True, eq=False)
class PiiSolution:
    """Tabulated (q, q', u) on the collocation nodes.

    ``breakpoints`` and ``degree`` describe the element structure, which
    :func:`evaluate_q` needs for piecewise polynomial interpolation.
    """

    alpha: float
    grid: np.ndarray
    q: np.ndarray
    r: np.ndarray
    u: np.ndarray
    achieved_residual: float
    breakpoints: np.ndarray = field(repr=False)
    degree: int = 16
    precision: str = "double"

    def __post_init__(self):
        for name in ("grid", "q", "r", "u", "breakpoints"):
            getattr(self, name).setflags(write=False)

    @property
    def s_min(self):
        return float(self.grid[0])

    @property
    def s_max(self):
        return float(self.grid[-1])

    def __call__(self, s):
        return evaluate_q(self, s)


# -- asymptotic series -------------------------------------------------------

def _plus_coeffs(alpha):
    # q ~ sum_k d_k s^{-(3k+1)}
    a = alpha
    f = a * (a - 1) * (a + 1)
    return [
        a,
        -2 * f,
        4 * f * (3 * a**2 - 10),
        -8 * f * (12 * a**4 - 117 * a**2 + 280),
        16 * f * (55 * a**6 - 1091 * a**4 + 7336 * a**2 - 15400),
    ]


def _minus_coeffs(alpha):
    # q ~ sqrt(x/2) + sum_{k>=1} c_k x^{(1-3k)/2},  x = -s
    a = alpha
    r2 = math.sqrt(2.0)
    return [
        a / 2,
        -r2 * (6 * a**2 + 1) / 16,
        a * (16 * a**2 + 11) / 16,
        -r2 * (420 * a**4 + 708 * a**2 + 73) / 256,
        a * (768 * a**4 + 2504 * a**2 + 1021) / 128,
    ]


def _check_order(order):
    if order not in range(1, MAX_SERIES_ORDER + 1):
        raise ValueError(f"order must be in 1..{MAX_SERIES_ORDER}, got {order}")


def _plus_series_with_derivative(alpha, s, order):
    val = der = 0.0
    for k, d in enumerate(_plus_coeffs(alpha)[:order]):
        p = 3 * k + 1
        val += d * s**-p
        der -= p * d * s ** (-p - 1)
    return val, der


def _minus_series_with_derivative(alpha, s, order):
    x = -s
    val = math.sqrt(x / 2)
    dx = 0.25 / math.sqrt(x / 2)
    for k, c in enumerate(_minus_coeffs(alpha)[: order - 1], start=1):
        p = (1 - 3 * k) / 2
        val += c * x**p
        dx += p * c * x ** (p - 1)
    return val, -dx


def q_plus_series(alpha, s, order=2):
    """Truncated large-positive-s expansion alpha/s + 2 alpha (1 - alpha^2)/s^4 + ...

    ``order`` counts terms; 1 and 2 are the classical truncations, higher
    orders (up to 5) continue the same ansatz.
    """
    _check_order(order)
    if not s > 0:
        raise ValueError("q_plus_series requires s > 0")
    return _plus_series_with_derivative(alpha, float(s), order)[0]


def q_minus_series(alpha, s, order=2):
    """Truncated large-negative-s expansion sqrt(-s/2) - alpha/(2s) + ...

    Only the + branch is produced; it is the one attached to q_alpha.
    """
    _check_order(order)
    if not s < 0:
        raise ValueError("q_minus_series requires s < 0")
    return _minus_series_with_derivative(alpha, float(s), order)[0]


def pii_residual(alpha, s, q, qpp):
    return qpp - s * q - 2 * q**3 + alpha


# -- discretisation ----------------------------------------------------------

def graded_breakpoints(s_min, s_max, n_elements, grading=1.5):
    """Element boundaries, denser near 0 via a sinh map on each side of 0."""
    left = max(1, round(n_elements * -s_min / (s_max - s_min)))
    right = max(1, n_elements - left)

    def side(length, m):
        xi = np.linspace(0.0, 1.0, m + 1)
        if grading == 0:
            return length * xi
        return length * np.sinh(grading * xi) / math.sinh(grading)

    neg = -side(-s_min, left)[::-1]
    pos = side(s_max, right)
    out = np.concatenate([neg[:-1], pos])
    out[0], out[-1] = s_min, s_max
    return out


class _Mesh:
    def __init__(self, breakpoints, degree):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.p = degree
        self.E = len(self.breakpoints) - 1
        self.xref = lobatto_nodes(degree)
        D1ref = diff_matrix(self.xref)
        self.half = np.diff(self.breakpoints) / 2
        self.mid = (self.breakpoints[1:] + self.breakpoints[:-1]) / 2
        self.D1 = [D1ref / h for h in self.half]
        self.D2 = [d @ d for d in self.D1]
        n = self.E * degree + 1
        self.n = n
        s = np.empty(n)
        for e in range(self.E):
            s[e * degree:(e + 1) * degree + 1] = self.mid[e] + self.half[e] * self.xref
        s[0], s[-1] = self.breakpoints[0], self.breakpoints[-1]
        for e in range(1, self.E):
            s[e * degree] = self.breakpoints[e]
        self.s = s

    def sl(self, e):
        return slice(e * self.p, (e + 1) * self.p + 1)

    def derivatives(self, q):
        """Nodal q' and q''; at shared nodes the left/right values are averaged
        for q' and both one-sided q'' are returned for residual checks."""
        r = np.zeros(self.n)
        cnt = np.zeros(self.n)
        qpp_l = np.full(self.n, np.nan)
        qpp_r = np.full(self.n, np.nan)
        for e in range(self.E):
            idx = self.sl(e)
            qe = q[idx]
            r[idx] += self.D1[e] @ qe
            cnt[idx] += 1
            d2 = self.D2[e] @ qe
            # the right end of element e is seen "from the left"
            qpp_l[idx.start + 1: idx.stop] = d2[1:]
            qpp_r[idx.start: idx.stop - 1] = d2[:-1]
        return r / cnt, qpp_l, qpp_r


def _boundary_targets(alpha, s_min, s_max):
    Qm, dQm = _minus_series_with_derivative(alpha, s_min, MAX_SERIES_ORDER)
    Qp, dQp = _plus_series_with_derivative(alpha, s_max, MAX_SERIES_ORDER)
    km = math.sqrt(s_min + 6 * Qm**2)
    kp = math.sqrt(s_max + 6 * Qp**2)
    return (Qm, dQm, km), (Qp, dQp, kp)


def _system(mesh, q, alpha, bc):
    """Residual vector and dense Jacobian of the collocation equations."""
    (Qm, dQm, km), (Qp, dQp, kp) = bc
    n, p = mesh.n, mesh.p
    F = np.empty(n)
    J = np.zeros((n, n))
    s = mesh.s
    for e in range(mesh.E):
        idx = mesh.sl(e)
        rows = np.arange(idx.start + 1, idx.stop - 1)
        D2 = mesh.D2[e][1:-1]
        F[rows] = D2 @ q[idx] - s[rows] * q[rows] - 2 * q[rows] ** 3 + alpha
        J[rows, idx.start:idx.stop] = D2
        J[rows, rows] -= s[rows] + 6 * q[rows] ** 2
    for e in range(1, mesh.E):
        i = e * p
        left, right = mesh.sl(e - 1), mesh.sl(e)
        F[i] = mesh.D1[e - 1][-1] @ q[left] - mesh.D1[e][0] @ q[right]
        J[i, left] += mesh.D1[e - 1][-1]
        J[i, right] -= mesh.D1[e][0]
    # growing mode towards -inf is ~ exp(-km s), towards +inf ~ exp(+kp s)
    first, last = mesh.sl(0), mesh.sl(mesh.E - 1)
    F[0] = (mesh.D1[0][0] @ q[first] - dQm) - km * (q[0] - Qm)
    J[0, first] = mesh.D1[0][0]
    J[0, 0] -= km
    F[-1] = (mesh.D1[-1][-1] @ q[last] - dQp) + kp * (q[-1] - Qp)
    J[-1, last] = mesh.D1[-1][-1]
    J[-1, -1] += kp
    return F, J


def _initial_guess(alpha, s):
    sigma = expit(-s)  # centred at 0, transition width ~2
    minus = np.sqrt(np.logaddexp(0.0, -s) / 2)
    plus = alpha * s / (s**2 + 1)
    return sigma * minus + (1 - sigma) * plus


def _newton(mesh, alpha, bc, q0, tol, max_iter):
    q = q0.copy()
    F, J = _system(mesh, q, alpha, bc)
    norm = np.max(np.abs(F))
    for it in range(max_iter):
        try:
            dq = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Newton matrix: {exc}", norm) from exc
        lam = 1.0
        while True:
            q_try = q + lam * dq
            F_try, J_try = _system(mesh, q_try, alpha, bc)
            norm_try = np.max(np.abs(F_try))
            if norm_try < (1 - 0.25 * lam) * norm or norm_try <= 0.01 * tol:
                break
            lam *= 0.5
            if lam < 1e-6:
                if norm <= tol:
                    return q, norm, it
                raise SolverError(
                    f"line search stalled at iteration {it}, residual {norm:.3e}", norm
                )
        q, F, J, norm = q_try, F_try, J_try, norm_try
        step = lam * np.max(np.abs(dq))
        log.debug("newton it=%d lam=%g residual=%.3e step=%.3e", it, lam, norm, step)
        if step <= 1e-14 * max(1.0, np.max(np.abs(q))) or norm <= 1e-3 * tol:
            return q, norm, it + 1
    if norm <= tol:
        return q, norm, max_iter
    raise SolverError(f"Newton did not converge in {max_iter} iterations", norm)


def _node_residual(mesh, q, alpha):
    r, qpp_l, qpp_r = mesh.derivatives(q)
    res_l = np.abs(pii_residual(alpha, mesh.s, q, qpp_l))
    res_r = np.abs(pii_residual(alpha, mesh.s, q, qpp_r))
    return r, float(np.nanmax(np.fmax(res_l, res_r)))


# -- extended precision refinement ------------------------------------------

def _mp_refine(mesh, q, alpha, bc, dps, iterations=4):
    """Mixed-precision iterative refinement: residuals in mpmath, corrections
    from the float Jacobian."""
    with mpmath.workdps(dps):
        xref = [-mpmath.cos(mpmath.pi * j / mesh.p) for j in range(mesh.p + 1)]
        w = [mpmath.mpf(v) for v in bary_weights(mesh.p)]
        D1ref = mpmath.matrix(mesh.p + 1, mesh.p + 1)
        for i in range(mesh.p + 1):
            for j in range(mesh.p + 1):
                if i != j:
                    D1ref[i, j] = (w[j] / w[i]) / (xref[i] - xref[j])
            D1ref[i, i] = -sum(D1ref[i, j] for j in range(mesh.p + 1) if j != i)
        bp = [mpmath.mpf(b) for b in mesh.breakpoints]
        halves = [(bp[e + 1] - bp[e]) / 2 for e in range(mesh.E)]
        mids = [(bp[e + 1] + bp[e]) / 2 for e in range(mesh.E)]
        D1 = [D1ref / h for h in halves]
        D2 = [d * d for d in D1]
        s = [None] * mesh.n
        for e in range(mesh.E):
            for j in range(mesh.p + 1):
                s[e * mesh.p + j] = mids[e] + halves[e] * xref[j]
        for e in range(mesh.E + 1):
            s[e * mesh.p] = bp[e]
        a = mpmath.mpf(alpha)
        (Qm, dQm, km), (Qp, dQp, kp) = bc
        qm = [mpmath.mpf(v) for v in q]

        def elem(e, M, row):
            base = e * mesh.p
            return mpmath.fsum(M[e][row, k] * qm[base + k] for k in range(mesh.p + 1))

        def residual():
            F = [mpmath.mpf(0)] * mesh.n
            res = mpmath.mpf(0)
            for e in range(mesh.E):
                for j in range(mesh.p + 1):
                    i = e * mesh.p + j
                    r = elem(e, D2, j) - s[i] * qm[i] - 2 * qm[i] ** 3 + a
                    res = max(res, abs(r))
                    if 0 < j < mesh.p:
                        F[i] = r
            for e in range(1, mesh.E):
                F[e * mesh.p] = elem(e - 1, D1, mesh.p) - elem(e, D1, 0)
            F[0] = elem(0, D1, 0) - dQm - km * (qm[0] - Qm)
            F[-1] = elem(mesh.E - 1, D1, mesh.p) - dQp + kp * (qm[-1] - Qp)
            return F, res

        for _ in range(iterations):
            F, res = residual()
            _, J = _system(mesh, np.array([float(v) for v in qm]), alpha, bc)
            dq = np.linalg.solve(J, -np.array([float(v) for v in F]))
            qm = [qm[i] + dq[i] for i in range(mesh.n)]
        F, res = residual()
        r = [None] * mesh.n
        for e in range(mesh.E):
            for j in range(mesh.p + 1):
                i = e * mesh.p + j
                v = elem(e, D1, j)
                r[i] = v if r[i] is None else (r[i] + v) / 2
        return (
            np.array([float(v) for v in qm]),
            np.array([float(v) for v in r]),
            float(res),
        )


# -- public solver -----------------------------------------------------------

def solve_hastings_mcleod(
    params,
    *,
    degree=16,
    element_length=1.0,
    grading=1.5,
    max_iter=60,
    max_refinements=3,
    precision="double",
    dps=40,
):
    """Solve for q_alpha on [s_min, s_max].

    The mesh starts with elements of roughly ``element_length`` and is
    doubled (at most ``max_refinements`` times) until the collocation
    residual at every node, interfaces and endpoints included, is within
    ``params.tolerance``.  ``precision="extended"`` polishes the double
    solution with mpmath residuals at ``dps`` digits.
    """
    if precision not in ("double", "extended"):
        raise ValueError(f"unknown precision {precision!r}")
    alpha = float(params.alpha)
    bc = _boundary_targets(alpha, params.s_min, params.s_max)
    n_el = max(4, math.ceil((params.s_max - params.s_min) / element_length))
    last_err = None
    for _ in range(max_refinements + 1):
        mesh = _Mesh(graded_breakpoints(params.s_min, params.s_max, n_el, grading), degree)
        try:
            q = _solve_on_mesh(mesh, alpha, bc, params.tolerance, max_iter)
        except SolverError as exc:
            last_err = exc
            n_el *= 2
            continue
        if precision == "extended":
            q, r, res = _mp_refine(mesh, q, alpha, bc, dps)
        else:
            r, res = _node_residual(mesh, q, alpha)
        if res <= params.tolerance:
            return _make_solution(alpha, mesh, q, r, res, precision)
        last_err = SolverError(f"node residual {res:.3e} above tolerance", res)
        n_el *= 2
    raise last_err


def _solve_on_mesh(mesh, alpha, bc, tol, max_iter):
    try:
        q, _, _ = _newton(mesh, alpha, bc, _initial_guess(alpha, mesh.s), tol, max_iter)
        return q
    except SolverError:
        log.info("direct Newton failed for alpha=%g, continuing from alpha=0", alpha)
    # continuation in alpha from the classical alpha = 0 profile
    q = None
    for a in np.linspace(0.0, alpha, 11):
        bca = _boundary_targets(a, mesh.s[0], mesh.s[-1])
        guess = _initial_guess(a, mesh.s) if q is None else q
        q, _, _ = _newton(mesh, a, bca, guess, tol, max_iter)
    return q


def _make_solution(alpha, mesh, q, r, res, precision):
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(r))):
        raise SolverError("non-finite values in solution", res)
    s = mesh.s
    u = r**2 - s * q**2 - q**4 + 2 * alpha * q
    return PiiSolution(
        alpha=alpha,
        grid=s.copy(),
        q=q.copy(),
        r=r.copy(),
        u=u,
        achieved_residual=res,
        breakpoints=mesh.breakpoints.copy(),
        degree=mesh.p,
        precision=precision,
    )


def _locate(sol, s):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < sol.grid[0]) or np.any(s > sol.grid[-1]):
        raise ValueError(
            f"s outside solution domain [{sol.grid[0]}, {sol.grid[-1]}]; no extrapolation"
        )
    e = np.clip(np.searchsorted(sol.breakpoints, s, side="right") - 1, 0, len(sol.breakpoints) - 2)
    return s, e


def evaluate_q(sol, s):
    """Interpolated (q, q', u) at ``s``; scalars in, scalars out."""
    scalar = np.ndim(s) == 0
    s, e = _locate(sol, s)
    p = sol.degree
    w = bary_weights(p)
    q = np.empty_like(s)
    r = np.empty_like(s)
    for el in np.unique(e):
        m = e == el
        idx = slice(el * p, (el + 1) * p + 1)
        q[m] = bary_interp(sol.grid[idx], sol.q[idx], s[m], w)
        r[m] = bary_interp(sol.grid[idx], sol.r[idx], s[m], w)
    u = r**2 - s * q**2 - q**4 + 2 * sol.alpha * q
    if scalar:
        return float(q[0]), float(r[0]), float(u[0])
    return q, r, u


def residual_at(sol, s):
    """|q'' - s q - 2 q^3 + alpha| with q'' from the element polynomial at ``s``."""
    s, e = _locate(sol, s)
    p = sol.degree
    xref = lobatto_nodes(p)
    D1 = diff_matrix(xref)
    D2 = D1 @ D1
    w = bary_weights(p)
    out = np.empty_like(s)
    for el in np.unique(e):
        m = e == el
        idx = slice(el * p, (el + 1) * p + 1)
        half = (sol.breakpoints[el + 1] - sol.breakpoints[el]) / 2
        qpp_nodes = D2 @ sol.q[idx] / half**2
        qpp = bary_interp(sol.grid[idx], qpp_nodes, s[m], w)
        qv = bary_interp(sol.grid[idx], sol.q[idx], s[m], w)
        out[m] = np.abs(pii_residual(sol.alpha, s[m], qv, qpp))
    return out
