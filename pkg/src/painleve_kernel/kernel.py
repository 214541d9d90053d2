"""Critical limiting kernel built from the psi-functions."""

from dataclasses import dataclass
import cmath
import math

import numpy as np

from .psi import LaxInputs, PhiControls, matrix_A, phi_batch, phi_pair


class KernelRealnessError(ArithmeticError):
    pass


@dataclass(frozen=True)
class KernelEvaluation:
    u: float
    v: float
    s: float
    alpha: float
    value: float
    err_est: float
    imag: float = 0.0


class PhiCache:
    """Phi values keyed by (alpha, s, u).

    Fill it once (``populate``) before a grid computation; lookups never
    integrate, so a populated cache can be shared read-only.
    """

    def __init__(self, pii, controls=None):
        self.pii = pii
        self.controls = controls or PhiControls()
        self._data = {}

    def populate(self, s, us):
        missing = sorted({float(u) for u in us} - {k[2] for k in self._data if k[:2] == (self.pii.alpha, float(s))})
        if missing:
            for ev in phi_batch(self.pii.alpha, s, missing, self.pii, self.controls):
                self._data[(self.pii.alpha, float(s), ev.u)] = ev
        return self

    def get(self, s, u):
        key = (self.pii.alpha, float(s), float(u))
        if key not in self._data:
            self._data[key] = phi_pair(self.pii.alpha, s, u, self.pii, self.controls)
        return self._data[key]


def _sgn(x):
    return 1.0 if x > 0 else -1.0


def _phis(u, s, alpha, pii, controls, cache):
    if cache is not None:
        return cache.get(s, u)
    return phi_pair(alpha, s, u, pii, controls)


def _check_args(u, v, pii, alpha):
    if u == 0 or v == 0:
        raise ValueError("kernel undefined at 0")
    if pii.alpha != alpha:
        raise ValueError(f"PII solution is for alpha={pii.alpha}, not {alpha}")


def critical_kernel(u, v, s, alpha, pii, controls=None, cache=None):
    """K^{crit,alpha}(u, v; s); the diagonal u == v is delegated."""
    _check_args(u, v, pii, alpha)
    if u == v:
        return kernel_diagonal(u, s, alpha, pii, controls, cache)
    pu = _phis(u, s, alpha, pii, controls, cache)
    pv = _phis(v, s, alpha, pii, controls, cache)
    phase = cmath.exp(0.5j * math.pi * alpha * (_sgn(u) + _sgn(v)))
    num = pu.phi1 * pv.phi2 - pv.phi1 * pu.phi2
    raw = -phase * num / (2j * math.pi * (u - v))
    scale = abs(pu.phi1) + abs(pu.phi2) + abs(pv.phi1) + abs(pv.phi2)
    err = scale * (pu.err_est + pv.err_est) / (2 * math.pi * abs(u - v))
    if abs(raw.imag) > max(10 * err, 1e-12):
        raise KernelRealnessError(
            f"Im K({u}, {v}) = {raw.imag:.3e} exceeds error estimate {err:.3e}"
        )
    return KernelEvaluation(float(u), float(v), float(s), float(alpha), raw.real, err, raw.imag)


def kernel_diagonal(u, s, alpha, pii, controls=None, cache=None):
    """Confluent limit K(u, u; s) with Phi' = A(u) Phi."""
    _check_args(u, u, pii, alpha)
    p = _phis(u, s, alpha, pii, controls, cache)
    lax = LaxInputs.from_solution(pii, s)
    d1, d2 = matrix_A(u, lax) @ p.vector
    raw = -cmath.exp(1j * math.pi * alpha * _sgn(u)) * (d1 * p.phi2 - p.phi1 * d2) / (2j * math.pi)
    a_norm = np.abs(matrix_A(u, lax)).sum()
    err = 2 * a_norm * (abs(p.phi1) + abs(p.phi2)) * p.err_est / (2 * math.pi)
    if abs(raw.imag) > max(10 * err, 1e-12):
        raise KernelRealnessError(f"Im K({u}, {u}) = {raw.imag:.3e} exceeds {err:.3e}")
    return KernelEvaluation(float(u), float(u), float(s), float(alpha), raw.real, err, raw.imag)


def kernel_real_form(u, v, s, alpha, pii, controls=None, cache=None):
    """-Im(e^{i pi alpha (sgn u - sgn v)/2} Phi_1(u) conj(Phi_1(v))) / (pi (u - v))."""
    _check_args(u, v, pii, alpha)
    if u == v:
        raise ValueError("real form is off-diagonal only")
    p1u = _phis(u, s, alpha, pii, controls, cache).phi1
    p1v = _phis(v, s, alpha, pii, controls, cache).phi1
    phase = cmath.exp(0.5j * math.pi * alpha * (_sgn(u) - _sgn(v)))
    return -(phase * p1u * p1v.conjugate()).imag / (math.pi * (u - v))


def kernel_grid(us, s, alpha, pii, controls=None):
    """K(u_i, u_j) for all pairs; a single Phi sweep feeds every entry."""
    cache = PhiCache(pii, controls).populate(s, us)
    out = []
    for u in us:
        for v in us:
            out.append(critical_kernel(u, v, s, alpha, pii, controls, cache))
    return out
