"""Solution of the string initial value problem and the characteristic function.

The state ``(phi, dphi/dx)`` starts at the left end with ``(1, 0)`` and is
carried to ``x = 1`` through three kinds of pieces:

* an atom of mass ``A``: ``slope -= kappa**2 * A * value``;
* a massless gap of length ``d``: ``value += d * slope``;
* a piece of density ``rho``: a rotation with wavenumber ``kappa * sqrt(rho)``.

The characteristic function ``F(kappa) = phi(1) - i * phi'(1) / kappa`` is
entire; its zeros are the resonances of the string.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P

from .string_model import StringSpec, left_end

# |u| = |kappa^2 rho d^2| below which the rotation entries come from their Taylor series
_SERIES_RADIUS = 1.0
_SERIES_TERMS = 24


@dataclass(frozen=True)
class StateVector:
    value: complex | np.ndarray
    slope: complex | np.ndarray
    x: float = 1.0


@dataclass(frozen=True)
class CharPolynomial:
    """``F(kappa) = sum_k coefficients[k] * kappa**k`` for a purely atomic string."""

    coefficients: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, kappa):
        return P.polyval(kappa, self.coefficients)

    def deriv(self, order: int = 1) -> "CharPolynomial":
        return CharPolynomial(P.polyder(self.coefficients, order))


def _pieces(spec: StringSpec) -> Iterator[tuple[str, float, float]]:
    """Yield ``(kind, length_or_mass, density)`` from the left end to ``x = 1``."""
    events = [(a.x, 0, a) for a in spec.atoms] + [(s.left, 1, s) for s in spec.segments]
    events.sort(key=lambda e: (e[0], e[1]))
    x = left_end(spec)
    for pos, kind, obj in events:
        if pos > x:
            yield "gap", pos - x, 0.0
            x = pos
        if kind == 0:
            yield "atom", obj.mass, 0.0
        else:
            yield "segment", obj.length, obj.density
            x = obj.right
    if x < 1.0:
        yield "gap", 1.0 - x, 0.0


def _rotation(z: np.ndarray, d: float):
    """Entries ``cos(w d)``, ``sin(w d)/w`` (``w**2 = z``) and their z-derivatives."""
    u = z * d * d
    small = np.abs(u) < _SERIES_RADIUS
    C = np.empty_like(z)
    S = np.empty_like(z)
    dS = np.empty_like(z)
    if np.any(small):
        us = u[small]
        c_sum = np.zeros_like(us)
        s_sum = np.zeros_like(us)
        ds_sum = np.zeros_like(us)
        c_term = np.ones_like(us)  # (-u)^k / (2k)!
        s_term = np.ones_like(us)  # (-u)^k / (2k+1)!
        for k in range(_SERIES_TERMS):
            c_sum += c_term
            s_sum += s_term
            if k + 1 < _SERIES_TERMS:
                # d/du of (-u)^(k+1)/(2k+3)! is -(k+1) (-u)^k / (2k+3)!
                ds_sum += -(k + 1) * s_term / ((2 * k + 2) * (2 * k + 3))
            c_term = c_term * (-us) / ((2 * k + 1) * (2 * k + 2))
            s_term = s_term * (-us) / ((2 * k + 2) * (2 * k + 3))
        C[small] = c_sum
        S[small] = d * s_sum
        dS[small] = d**3 * ds_sum
    big = ~small
    if np.any(big):
        zb = z[big]
        w = np.sqrt(zb)
        C[big] = np.cos(w * d)
        S[big] = np.sin(w * d) / w
        dS[big] = (d * C[big] - S[big]) / (2 * zb)
    dC = -0.5 * d * S
    return C, S, dC, dS


def _propagate(spec: StringSpec, kappa, derivative: bool = False):
    k = np.asarray(kappa, dtype=complex)
    shape = k.shape
    k = k.reshape(-1)
    k2 = k * k
    v = np.ones_like(k)
    s = np.zeros_like(k)
    dv = np.zeros_like(k)
    ds = np.zeros_like(k)
    for kind, q, rho in _pieces(spec):
        if kind == "atom":
            if derivative:
                ds = ds - 2 * k * q * v - k2 * q * dv
            s = s - k2 * q * v
        elif kind == "gap":
            v = v + q * s
            if derivative:
                dv = dv + q * ds
        else:
            z = k2 * rho
            C, S, dC, dS = _rotation(z, q)
            v_new = C * v + S * s
            s_new = -z * S * v + C * s
            if derivative:
                dz = 2 * k * rho
                dv_new = dC * dz * v + C * dv + dS * dz * s + S * ds
                ds_new = (-(dz * S + z * dS * dz) * v - z * S * dv + dC * dz * s + C * ds)
                dv, ds = dv_new, ds_new
            v, s = v_new, s_new
    out = [v.reshape(shape), s.reshape(shape)]
    if derivative:
        out += [dv.reshape(shape), ds.reshape(shape)]
    return out


def _unwrap(a):
    return a.item() if isinstance(a, np.ndarray) and a.ndim == 0 else a


def propagate(spec: StringSpec, kappa) -> StateVector:
    """State ``(phi(1, kappa), d_x^+ phi(1, kappa))``; ``kappa`` may be an array."""
    v, s = _propagate(spec, kappa)
    return StateVector(_unwrap(v), _unwrap(s), 1.0)


def characteristic(spec: StringSpec, kappa):
    """``F(kappa)`` for ``kappa != 0`` (scalar or array)."""
    k = np.asarray(kappa, dtype=complex)
    if np.any(k == 0):
        raise ValueError("F is evaluated pointwise only for kappa != 0; use characteristic_polynomial")
    v, s = _propagate(spec, k)
    return _unwrap(v - 1j * s / k)


def characteristic_with_derivative(spec: StringSpec, kappa):
    """``(F(kappa), F'(kappa))`` by forward propagation of d/dkappa."""
    k = np.asarray(kappa, dtype=complex)
    if np.any(k == 0):
        raise ValueError("kappa must be nonzero")
    v, s, dv, ds = _propagate(spec, k, derivative=True)
    F = v - 1j * s / k
    dF = dv - 1j * (ds / k - s / (k * k))
    return _unwrap(F), _unwrap(dF)


def characteristic_polynomial(spec: StringSpec) -> CharPolynomial:
    if not spec.is_atomic:
        raise ValueError("characteristic polynomial exists only for purely atomic strings")
    v = np.array([1.0])
    s = np.array([0.0])
    for kind, q, _ in _pieces(spec):
        if kind == "atom":
            s = P.polysub(s, q * P.polymulx(P.polymulx(v)))
        else:
            v = P.polyadd(v, q * s)
    n = max(len(v), len(s) - 1)
    v = np.pad(v, (0, n - len(v)))
    s = np.pad(s, (0, n + 1 - len(s)))
    # slope carries a kappa^2 factor, so dividing by kappa is a shift
    coef = v.astype(complex) - 1j * s[1:]
    nz = np.nonzero(coef)[0]
    coef = coef[: nz[-1] + 1] if len(nz) else np.array([0j])
    return CharPolynomial(coef)


def series_coefficients(spec: StringSpec, J: int) -> list[float]:
    """``[phi_0(1), ..., phi_J(1)]`` with ``phi(1, k) = sum (-1)^j phi_j(1) k^(2j)``.

    Uses the nested integral ``phi_j(x) = int_{(-inf, x]} (x - s) phi_{j-1}(s) dM(s)``
    directly, holding each ``phi_j`` as a polynomial on every interval between
    breakpoints.  Independent of the transfer-matrix walk above.
    """
    if J < 0:
        raise ValueError("J must be nonnegative")
    a1 = left_end(spec)
    pts = sorted({a1, 1.0, *(a.x for a in spec.atoms),
                  *(p for s in spec.segments for p in (s.left, s.right))})
    pts = [p for p in pts if p >= a1]
    atoms = {a.x: a.mass for a in spec.atoms}
    intervals = []
    for lo, hi in zip(pts, pts[1:]):
        rho = 0.0
        for seg in spec.segments:
            if seg.left <= lo and hi <= seg.right:
                rho = seg.density
        intervals.append((lo, hi - lo, rho))

    # phi_{j-1} as (value at each breakpoint, local polynomial on each interval)
    prev_pts = [1.0] * len(pts)
    prev_polys = [Polynomial([1.0]) for _ in intervals]
    out = [1.0]
    for _ in range(J):
        value = 0.0
        weight = 0.0  # int_{(-inf, x]} phi_{j-1} dM
        vals = []
        polys = []
        for idx, p in enumerate(pts):
            weight += atoms.get(p, 0.0) * prev_pts[idx]
            vals.append(value)
            if idx == len(intervals):
                break
            _, length, rho = intervals[idx]
            prev = prev_polys[idx]
            local = Polynomial([value, weight])
            if rho:
                local = local + rho * prev.integ(2)
                weight += rho * prev.integ(1)(length)
            polys.append(local)
            value = local(length)
        out.append(float(vals[-1]))
        prev_pts, prev_polys = vals, polys
    return out
