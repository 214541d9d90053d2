"""Psi-functions of the Painleve II Lax pair.

Phi = (Phi_1, Phi_2) solves dPhi/dzeta = A(zeta) Phi and is pinned down by
e^{i(4/3 zeta^3 + s zeta)} Phi -> (1, 0) in the upper sector.  We integrate the
rescaled vector w = e^{i theta(zeta)} Phi, theta = 4/3 zeta^3 + s zeta, which
stays O(1) along the contour, from a seed at i*R where Phi is recessive.

Contour choice matters.  Relative to the competing solution, Phi carries the
factor exp(2 Im theta); any drop of Im theta along the path amplifies
integration error by exp(2 * drop).  Descending the imaginary axis and then
running along the real axis keeps that drop at max(0, s)^{3/2}/3 (intrinsic)
instead of ~ (4u^2 + s)^{3/2}/3 for a path dropping onto u from above.
"""

from dataclasses import dataclass
import cmath
import math

import numpy as np
from scipy.integrate import solve_ivp

from .pii import evaluate_q


class PhiToleranceError(RuntimeError):
    """Requested accuracy not reached; ``evaluation`` holds the best result."""

    def __init__(self, message, evaluation):
        super().__init__(message)
        self.evaluation = evaluation


@dataclass(frozen=True)
class LaxInputs:
    alpha: float
    s: float
    q: float
    r: float

    @classmethod
    def from_solution(cls, pii, s):
        q, r, _ = evaluate_q(pii, s)
        return cls(pii.alpha, float(s), q, r)


@dataclass(frozen=True)
class PhiControls:
    tol: float = 1e-9
    r_seed: float = 5.0
    rho: float = 0.5  # where the contour leaves the imaginary axis
    r_min: float = 0.05
    sector_eps: float = 0.1
    estimate_error: bool = True
    strict: bool = True


@dataclass(frozen=True)
class PhiEvaluation:
    u: float
    s: float
    phi1: complex
    phi2: complex
    err_est: float = 0.0
    alpha: float = float("nan")

    @property
    def vector(self):
        return np.array([self.phi1, self.phi2])


class ComplexContour:
    """Polyline avoiding the branch cut (-i*inf, 0] and a disk around 0."""

    def __init__(self, waypoints, r_seed=2.0, sector_eps=0.1, r_min=0.05):
        pts = [complex(z) for z in waypoints]
        if len(pts) < 2:
            raise ValueError("contour needs at least two waypoints")
        z0 = pts[0]
        if abs(z0) < r_seed or not sector_eps < cmath.phase(z0) < math.pi - sector_eps:
            raise ValueError(f"contour start {z0} outside the seed sector")
        for a, b in zip(pts[:-1], pts[1:]):
            if _segment_distance_to_origin(a, b) < r_min * (1 - 1e-12):
                raise ValueError(f"segment {a} -> {b} enters the disk |zeta| < {r_min}")
            if _crosses_cut(a, b):
                raise ValueError(f"segment {a} -> {b} crosses the branch cut")
        self.waypoints = tuple(pts)

    def __repr__(self):
        return f"ComplexContour({list(self.waypoints)!r})"


def _segment_distance_to_origin(a, b):
    d = b - a
    if d == 0:
        return abs(a)
    t = min(1.0, max(0.0, -((a.conjugate() * d).real) / abs(d) ** 2))
    return abs(a + t * d)


def _crosses_cut(a, b):
    # cut is {x = 0, y <= 0}
    if a.real == b.real:
        return a.real == 0 and min(a.imag, b.imag) <= 0
    t = -a.real / (b.real - a.real)
    if not 0.0 <= t <= 1.0:
        return False
    return (a + t * (b - a)).imag <= 0


# -- Lax matrices --------------------------------------------------------------

def matrix_A(zeta, lax):
    if zeta == 0:
        raise ValueError("A has a pole at zeta = 0")
    z = complex(zeta)
    q, r, s, al = lax.q, lax.r, lax.s, lax.alpha
    d = -4j * z * z - 1j * (s + 2 * q * q)
    return np.array(
        [[d, 4 * z * q + 2j * r + al / z], [4 * z * q - 2j * r + al / z, -d]]
    )


def matrix_B(zeta, q):
    z = complex(zeta)
    return np.array([[-1j * z, q], [q, 1j * z]])


def theta(zeta, s):
    return 4.0 / 3.0 * zeta**3 + s * zeta


def _seed_coefficients(lax, n_terms):
    """Formal solution y = sum (a_k, b_k) zeta^{-k} of y' = (A + i theta') y."""
    q, r, s, al = lax.q, lax.r, lax.s, lax.alpha
    a = [1.0 + 0j]
    b = [0j, 0.5j * q]

    def b_next(m, a_list, b_list):
        # from the zeta^{-m} balance of the second row; a_{m+1} is taken as 0
        def A_(k):
            return a_list[k] if 0 <= k < len(a_list) else 0.0

        def B_(k):
            return b_list[k] if 0 <= k < len(b_list) else 0.0

        return (
            -(m - 1) * B_(m - 1)
            - 4 * q * A_(m + 1)
            + 2j * r * A_(m)
            - al * A_(m - 1)
            - 2j * (s + q * q) * B_(m)
        ) / 8j

    for k in range(1, n_terms):
        bt = b_next(k - 1, a, b)  # b_{k+1} without its a_k contribution
        ak = (
            (4 * q * (k - 1) * b[k - 1] + 4 * q * al * a[k - 1] + 8j * q * (s + q * q) * b[k]) / 8j
            - 2j * r * bt
            - al * b[k]
        ) / k
        a.append(ak)
        b.append(bt + 0.5j * q * ak)
    return np.array(a), np.array(b[: len(a)])


def asymptotic_seed(zeta0, lax, controls=None, max_terms=60):
    """Seed vector Phi(zeta0) from the large-zeta expansion, optimally truncated.

    Returns ``(w, phase, err)`` where Phi(zeta0) = exp(-i*phase) * w and
    ``err`` is the size of the first omitted term (relative to |w|).
    """
    controls = controls or PhiControls()
    z = complex(zeta0)
    if not controls.sector_eps < cmath.phase(z) < math.pi - controls.sector_eps:
        raise ValueError(f"seed point {z} outside the sector of validity")
    if abs(z) < 2.0:
        raise ValueError(f"seed point {z} too close to the origin")
    a, b = _seed_coefficients(lax, max_terms)
    zk = z ** -np.arange(max_terms)
    ta = np.abs(a * zk) + np.abs(b * zk)
    # truncate at the smallest term of the divergent series; some coefficients
    # vanish identically (e.g. alpha = s = 0), so compare windows of 3 terms
    window = np.maximum(np.maximum(ta[2:-2], ta[3:-1]), ta[4:])
    stop = 2 + int(np.argmin(window))
    w = np.array([np.sum(a[:stop] * zk[:stop]), np.sum(b[:stop] * zk[:stop])])
    err = float(window[stop - 2])
    return w, theta(z, lax.s), err


# -- integration -----------------------------------------------------------------

def _rhs_factory(lax, z0, dz):
    q, r, s, al = lax.q, lax.r, lax.s, lax.alpha
    c0 = -2j * q * q
    g = 2j * (s + q * q)

    def rhs(t, w):
        z = z0 + t * dz
        off = 4 * z * q + al / z
        m12 = off + 2j * r
        m21 = off - 2j * r
        m22 = 8j * z * z + g
        return dz * np.array([c0 * w[0] + m12 * w[1], m21 * w[0] + m22 * w[1]])

    return rhs


def _integrate_path(lax, waypoints, w0, rtol, t_eval_last=None):
    """Carry w along the polyline; optionally sample the last segment."""
    w = np.asarray(w0, dtype=complex)
    samples = None
    nseg = len(waypoints) - 1
    for i, (za, zb) in enumerate(zip(waypoints[:-1], waypoints[1:])):
        if za == zb:
            continue
        rhs = _rhs_factory(lax, za, zb - za)
        last = i == nseg - 1 and t_eval_last is not None
        sol = solve_ivp(
            rhs,
            (0.0, 1.0),
            w,
            method="DOP853",
            rtol=rtol,
            atol=rtol * 1e-3,
            t_eval=t_eval_last if last else None,
        )
        if sol.status != 0:
            raise RuntimeError(f"integration failed on segment {za} -> {zb}: {sol.message}")
        w = sol.y[:, -1]
        if last:
            samples = sol.y
    return w, samples


def default_contour(u, controls=None):
    controls = controls or PhiControls()
    sgn = 1.0 if u > 0 else -1.0
    pts = [1j * controls.r_seed, 1j * controls.rho, sgn * controls.rho]
    if u != sgn * controls.rho:
        pts.append(complex(u))
    return ComplexContour(pts, r_min=controls.r_min, sector_eps=controls.sector_eps)


def alternative_contour(u, controls=None):
    """A different admissible path to u, used for path-independence checks."""
    controls = controls or PhiControls()
    sgn = 1.0 if u > 0 else -1.0
    start = 1.2 * controls.r_seed * cmath.exp(1j * math.pi * (0.5 - 0.06 * sgn))
    mid = 0.8 * cmath.exp(1j * math.pi * (0.5 - 0.2 * sgn))
    pts = [start, 2.0j, mid, sgn * 0.3 + 0.15j, sgn * 0.3]
    if u != sgn * 0.3:
        pts.append(complex(u))
    return ComplexContour(pts, r_min=controls.r_min, sector_eps=controls.sector_eps)


def _rtol(controls, s):
    # compensate the intrinsic exp(2/3 s^{3/2}) amplification for s > 0
    amp = math.exp(2.0 / 3.0 * max(s, 0.0) ** 1.5)
    return max(controls.tol * 1e-2 / amp, 2.5e-14)


def _check_u(u, controls):
    if u == 0:
        raise ValueError("Phi has a branch point at u = 0")
    if abs(u) < controls.r_min:
        raise ValueError(f"|u| = {abs(u)} below r_min = {controls.r_min}")


def _phi_on_contour(lax, contour, rtol, controls):
    z0 = contour.waypoints[0]
    w0, _, seed_err = asymptotic_seed(z0, lax, controls)
    w, _ = _integrate_path(lax, contour.waypoints, w0, rtol)
    zend = contour.waypoints[-1]
    return np.exp(-1j * theta(zend, lax.s)) * w, seed_err


def phi_pair(alpha, s, u, pii, controls=None, contour=None):
    """Phi_{alpha,1}(u; s), Phi_{alpha,2}(u; s) for real u != 0."""
    controls = controls or PhiControls()
    _check_u(u, controls)
    if pii.alpha != alpha:
        raise ValueError(f"PII solution is for alpha={pii.alpha}, not {alpha}")
    lax = LaxInputs.from_solution(pii, s)
    contour = contour or default_contour(u, controls)
    if contour.waypoints[-1] != complex(u):
        raise ValueError("contour must end at u")
    rtol = _rtol(controls, s)
    phi, seed_err = _phi_on_contour(lax, contour, rtol, controls)
    err = seed_err * float(np.max(np.abs(phi)))
    if controls.estimate_error:
        phi_loose, _ = _phi_on_contour(lax, contour, rtol * 10, controls)
        # the global error is linear in rtol, so tight ~ |tight - loose| / 9
        err += float(np.max(np.abs(phi - phi_loose))) / 9
    ev = PhiEvaluation(float(u), float(s), complex(phi[0]), complex(phi[1]), err, float(alpha))
    if controls.strict and err > controls.tol:
        raise PhiToleranceError(
            f"Phi({u}; {s}) error estimate {err:.2e} exceeds tol {controls.tol:.1e}", ev
        )
    return ev


def _batch_side(lax, us, sgn, controls, rtol):
    """All u of one sign: one trip down the imaginary axis, then the real axis."""
    rho = controls.rho
    z0 = 1j * controls.r_seed
    w0, _, seed_err = asymptotic_seed(z0, lax, controls)
    w_rho, _ = _integrate_path(lax, [z0, 1j * rho, sgn * rho], w0, rtol)
    out = {}
    at_rho = us[us == sgn * rho]
    for uu in at_rho:
        out[float(uu)] = np.exp(-1j * theta(uu, lax.s)) * w_rho
    rest = us[us != sgn * rho]
    for branch in (rest[np.abs(rest) > rho], rest[np.abs(rest) < rho]):
        if branch.size == 0:
            continue
        far = branch[np.argmax(np.abs(branch - sgn * rho))]
        ts = (branch - sgn * rho) / (far - sgn * rho)
        order = np.argsort(ts)
        _, ys = _integrate_path(lax, [sgn * rho, complex(far)], w_rho, rtol, ts[order])
        for k, idx in enumerate(order):
            uu = branch[idx]
            out[float(uu)] = np.exp(-1j * theta(uu, lax.s)) * ys[:, k]
    return out, seed_err


def phi_batch(alpha, s, us, pii, controls=None):
    """Phi at many real u, sharing contour legs; returns a list of PhiEvaluation."""
    controls = controls or PhiControls()
    us = np.asarray(us, dtype=float)
    for u in us:
        _check_u(u, controls)
    lax = LaxInputs.from_solution(pii, s)
    rtol = _rtol(controls, s)
    vals, errs = {}, {}
    for sgn in (1.0, -1.0):
        side = np.unique(us[np.sign(us) == sgn])
        if side.size == 0:
            continue
        tight, seed_err = _batch_side(lax, side, sgn, controls, rtol)
        if controls.estimate_error:
            loose, _ = _batch_side(lax, side, sgn, controls, rtol * 10)
        for u, v in tight.items():
            vals[u] = v
            e = seed_err * float(np.max(np.abs(v)))
            if controls.estimate_error:
                e += float(np.max(np.abs(v - loose[u]))) / 9
            errs[u] = e
    out = []
    for u in us:
        v = vals[float(u)]
        ev = PhiEvaluation(float(u), float(s), complex(v[0]), complex(v[1]), errs[float(u)], float(alpha))
        if controls.strict and ev.err_est > controls.tol:
            raise PhiToleranceError(f"Phi({u}; {s}) error estimate {ev.err_est:.2e} too large", ev)
        out.append(ev)
    return out


def check_symmetry(ev, alpha):
    ph = cmath.exp(0.5j * math.pi * alpha * math.copysign(1.0, ev.u))
    return abs(ph * ev.phi2 - (ph * ev.phi1).conjugate())


def check_s_compatibility(alpha, s, u, pii, ds, controls=None):
    """|(Phi(u; s+ds) - Phi(u; s))/ds - B(u, q(s)) Phi(u; s)|, which is O(ds)."""
    p0 = phi_pair(alpha, s, u, pii, controls)
    p1 = phi_pair(alpha, s + ds, u, pii, controls)
    q = evaluate_q(pii, s)[0]
    fd = (p1.vector - p0.vector) / ds
    return float(np.linalg.norm(fd - matrix_B(u, q) @ p0.vector))


def wronskian_along(alpha, s, pii, contour, controls=None, n_samples=50):
    """det[Phi, Chi] sampled along the contour after its first leg.

    Chi is an arbitrary independent solution started at the second waypoint;
    both columns are propagated by A, so trace(A) = 0 makes the determinant
    constant.  The seed leg is skipped because there the two columns differ
    in size by exp(2 |Im theta|) and the determinant cancels catastrophically.
    """
    controls = controls or PhiControls()
    lax = LaxInputs.from_solution(pii, s)
    pts = contour.waypoints
    w0, _, _ = asymptotic_seed(pts[0], lax, controls)
    rtol = _rtol(controls, s)
    w, _ = _integrate_path(lax, pts[:2], w0, rtol)
    phi = np.exp(-1j * theta(pts[1], s)) * w
    chi = np.array([0.0, 1.0], dtype=complex) * (1 + abs(phi[0]))
    dets = []
    for za, zb in zip(pts[1:-1], pts[2:]):
        dz = zb - za

        def f(t, y, za=za, dz=dz):
            A = matrix_A(za + t * dz, lax)
            return dz * np.concatenate([A @ y[:2], A @ y[2:]])

        sol = solve_ivp(f, (0, 1), np.concatenate([phi, chi]), method="DOP853",
                        rtol=rtol, atol=rtol * 1e-3, t_eval=np.linspace(0, 1, n_samples))
        for y in sol.y.T:
            dets.append(y[0] * y[3] - y[1] * y[2])
        phi, chi = sol.y[:2, -1], sol.y[2:, -1]
    return np.array(dets)
