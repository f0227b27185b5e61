"""Resonances of a string: zeros of ``F`` in the upper half-plane.

Two routes are available.  For purely atomic strings ``F`` is a polynomial
and the whole spectrum comes from companion-matrix eigenvalues, polished by
Newton's method on the propagated ``F``.  For strings with density pieces
``F`` is transcendental; zeros are then located inside a user box by the
argument principle and recursive bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .propagator import (
    CharPolynomial,
    _pieces,
    characteristic,
    characteristic_polynomial,
    characteristic_with_derivative,
)
from .string_model import StringSpec, left_end, validate_string

IMAG_AXIS_RTOL = 1e-9
# decay rates below this (relative to |k|) are not resolved in double precision
NEAR_REAL_RTOL = 1e-10
_MP_DPS = 60
_MP_DPS_MAX = 960


class SolverError(RuntimeError):
    """Root finding failed; ``diagnostics`` holds what was known at the time."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class ZeroNearContourError(SolverError):
    pass


@dataclass(frozen=True)
class Box:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self) -> None:
        if not self.im_min > 0:
            raise ValueError("box must satisfy im_min > 0")
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate box {self}")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    @property
    def is_symmetric(self) -> bool:
        return self.re_min == -self.re_max

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (
            self.re_min - margin <= z.real <= self.re_max + margin
            and self.im_min - margin <= z.imag <= self.im_max + margin
        )

    def split(self, frac: float) -> tuple["Box", "Box"]:
        if self.re_max - self.re_min >= self.im_max - self.im_min:
            c = self.re_min + frac * (self.re_max - self.re_min)
            return (Box(self.re_min, c, self.im_min, self.im_max),
                    Box(c, self.re_max, self.im_min, self.im_max))
        c = self.im_min + frac * (self.im_max - self.im_min)
        return (Box(self.re_min, self.re_max, self.im_min, c),
                Box(self.re_min, self.re_max, c, self.im_max))

    @classmethod
    def parse(cls, text: str) -> "Box":
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError("box needs four numbers re0,re1,im0,im1")
        return cls(*parts)


@dataclass(frozen=True)
class Spectrum:
    """Multiset of resonances, sorted by ``(Re, Im)``.

    When ``box`` is set the list is complete only inside that rectangle.
    """

    entries: tuple[tuple[complex, int], ...]
    method: str
    residual: float = 0.0
    box: Box | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def total_multiplicity(self) -> int:
        return sum(r for _, r in self.entries)

    @property
    def complete(self) -> bool:
        return self.method == "polynomial"

    def expanded(self) -> np.ndarray:
        """Roots repeated according to multiplicity."""
        return np.array([k for k, r in self.entries for _ in range(r)], dtype=complex)

    def to_records(self) -> list[dict]:
        return [{"re": k.real, "im": k.imag, "mult": r} for k, r in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _sorted_entries(entries):
    return tuple(sorted(((complex(k), int(r)) for k, r in entries),
                        key=lambda e: (e[0].real, e[0].imag)))


def _is_imaginary(k: complex) -> bool:
    return abs(k.real) <= IMAG_AXIS_RTOL * max(1.0, abs(k))


def _newton_polish(spec: StringSpec, z0: np.ndarray, radius: np.ndarray, iters: int = 60):
    """Vectorized Newton on F, each iterate confined to a ball around its start."""
    z = z0.astype(complex).copy()
    F, dF = characteristic_with_derivative(spec, z)
    best = np.abs(F)
    active = np.ones(z.shape, dtype=bool)
    for _ in range(iters):
        if not active.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(active, F / dF, 0)
        trial = z - step
        ok = active & np.isfinite(trial) & (np.abs(trial - z0) <= radius)
        if not ok.any():
            break
        Ft, dFt = characteristic_with_derivative(spec, np.where(ok, trial, z))
        improved = ok & (np.abs(Ft) <= best)
        z = np.where(improved, trial, z)
        F = np.where(improved, Ft, F)
        dF = np.where(improved, dFt, dF)
        tiny = np.abs(step) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(z))
        active = improved & ~tiny
        best = np.where(improved, np.abs(Ft), best)
    return z


def _cluster(z: np.ndarray, tol: float) -> list[list[int]]:
    n = len(z)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= tol * max(1.0, abs(z[i]), abs(z[j])):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _refine_multiple(poly: CharPolynomial, z: complex, r: int, iters: int = 30) -> complex:
    """Newton on the (r-1)-th derivative, whose zero is simple at an r-fold root of F."""
    g = poly.deriv(r - 1)
    dg = g.deriv(1)
    best, fbest = z, abs(g(z))
    for _ in range(iters):
        d = dg(z)
        if d == 0:
            break
        z = z - g(z) / d
        if abs(g(z)) < fbest:
            best, fbest = z, abs(g(z))
        else:
            break
    return best


def _mirror_symmetrize(entries, strict: bool):
    """Snap near-axis roots onto iR and pair the others under ``k -> -conj(k)``."""
    imag = []
    right = []
    left = []
    for k, r in entries:
        if _is_imaginary(k):
            imag.append((complex(0.0, k.imag), r))
        elif k.real > 0:
            right.append((k, r))
        else:
            left.append((k, r))
    unmatched = list(left)
    paired = []
    for k, r in right:
        if not unmatched:
            break
        j = min(range(len(unmatched)), key=lambda i: abs(unmatched[i][0] + k.conjugate()))
        km, rm = unmatched[j]
        if rm == r and abs(km + k.conjugate()) <= 1e-6 * max(1.0, abs(k)):
            unmatched.pop(j)
            avg = 0.5 * (k - km.conjugate())
            paired.append((avg, r))
            paired.append((-avg.conjugate(), r))
        else:
            break
    if len(paired) != 2 * len(right) or unmatched:
        if strict:
            raise SolverError("resonances are not symmetric about the imaginary axis",
                              right=right, left=left)
        return list(entries)
    return imag + paired


def _mp_coefficients(spec: StringSpec) -> list:
    """Characteristic polynomial coefficients (ascending) in extended precision."""
    v = [mpmath.mpf(1)]
    s = [mpmath.mpf(0)]

    def add(p, q, f):
        n = max(len(p), len(q))
        p = p + [0] * (n - len(p))
        q = q + [0] * (n - len(q))
        return [a + f * b for a, b in zip(p, q)]

    for kind, q, _ in _pieces(spec):
        if kind == "atom":
            s = add(s, [0, 0] + v, -mpmath.mpf(q))
        else:
            v = add(v, s, mpmath.mpf(q))
    n = max(len(v), len(s) - 1)
    v = v + [0] * (n - len(v))
    s = s + [0] * (n + 1 - len(s))
    coef = [mpmath.mpc(a, -b) for a, b in zip(v, s[1:])]
    while len(coef) > 1 and coef[-1] == 0:
        coef.pop()
    return coef


def _mp_newton(spec: StringSpec, k: complex) -> complex:
    """Newton at growing precision until the imaginary part is resolved."""
    dps = _MP_DPS
    while dps <= _MP_DPS_MAX:
        with mpmath.workdps(dps):
            coef = _mp_coefficients(spec)[::-1]
            dcoef = [c * (len(coef) - 1 - i) for i, c in enumerate(coef[:-1])]
            floor = mpmath.mpf(10) ** (10 - dps)
            z = mpmath.mpc(k.real, abs(k.imag))
            for _ in range(200):
                step = mpmath.polyval(coef, z) / mpmath.polyval(dcoef, z)
                z -= step
                if abs(step) <= floor * abs(z.imag):
                    break
            if z.imag > floor * 1e10 * abs(z):
                return complex(z)
        dps *= 2
    raise SolverError("decay rate below extended-precision resolution", root=k, dps=dps)


def _refine_near_real(spec: StringSpec, entries):
    """Re-polish simple roots hugging the real axis in extended precision.

    Such nearly trapped modes have decay rates far below what double-precision
    evaluation of ``F`` resolves, so their computed imaginary parts are noise
    and may even come out negative.  Rebuilding the polynomial from the atom
    data at higher precision recovers them.
    """
    flagged = [i for i, (k, r) in enumerate(entries)
               if r == 1 and k.real > 0 and k.imag <= NEAR_REAL_RTOL * abs(k)]
    if not flagged:
        return entries
    out = list(entries)
    for i in flagged:
        k = entries[i][0]
        new = _mp_newton(spec, k)
        j = next(j for j, (km, rm) in enumerate(out)
                 if rm == 1 and km.real < 0 and abs(km + k.conjugate()) <= 1e-6 * abs(k))
        out[i] = (new, 1)
        out[j] = (-new.conjugate(), 1)
    return out


def spectrum(spec: StringSpec, cluster_tol: float = 1e-6) -> Spectrum:
    """All resonances of a purely atomic string, with multiplicities."""
    spec = validate_string(spec)
    if not spec.is_atomic:
        raise ValueError("polynomial path needs a purely atomic string; use spectrum_in_box")
    if spec.is_zero:
        return Spectrum((), "polynomial", 0.0)
    poly = characteristic_polynomial(spec)
    c = poly.coefficients
    if poly.degree == 1:
        entries = [(-c[0] / c[1], 1)]
    else:
        raw = np.roots(c[::-1])
        gaps = np.abs(raw[:, None] - raw[None, :])
        np.fill_diagonal(gaps, np.inf)
        radius = 0.5 * gaps.min(axis=1)
        polished = _newton_polish(spec, raw, radius)
        entries = []
        for group in _cluster(polished, cluster_tol):
            r = len(group)
            k = complex(np.mean(polished[group]))
            if r > 1:
                k = _refine_multiple(poly, k, r)
            entries.append((k, r))
        entries = _mirror_symmetrize(entries, strict=True)
        entries = _refine_near_real(spec, entries)
    if any(k.imag <= 0 for k, _ in entries):
        raise SolverError("resonance outside the upper half-plane", entries=entries)
    ks = np.array([k for k, _ in entries])
    residual = float(np.max(np.abs(characteristic(spec, ks))))
    scale = float(np.max(np.abs(c)) * max(1.0, np.max(np.abs(ks))) ** poly.degree)
    if not residual <= 1e-6 * scale:
        raise SolverError("Newton polishing did not converge", residual=residual, entries=entries)
    return Spectrum(_sorted_entries(entries), "polynomial", residual,
                    diagnostics={"degree": poly.degree})


def default_box(spec: StringSpec, margin: float = 1.5) -> Box:
    """A box holding every resonance of an atomic string.

    The outer edges come from Fujiwara's bound on the roots of the
    characteristic polynomial; the lower edge sits below the smallest decay rate found on
    the polynomial path (the disk exclusions alone do not bound Im from below).
    """
    spec = validate_string(spec)
    poly = characteristic_polynomial(spec)
    c = poly.coefficients
    ratios = np.abs(c[:-1] / c[-1])[::-1]
    k = np.arange(1, len(ratios) + 1)
    ratios[-1] /= 2.0
    R = margin * 2.0 * float(np.max(ratios ** (1.0 / k)))
    spec_poly = spectrum(spec)
    im_lo = min(k.imag for k, _ in spec_poly.entries) / margin
    return Box(-R, R, im_lo, R)


# ---------------------------------------------------------------- contour path

def _optical_length(spec: StringSpec) -> float:
    return (1.0 - left_end(spec)) + sum(math.sqrt(s.density) * s.length for s in spec.segments)


def _edge_phase(spec: StringSpec, a: complex, b: complex, n0: int,
                max_passes: int = 60, min_frac: float = 1e-11) -> float:
    t = np.linspace(0.0, 1.0, n0 + 1)
    F = np.asarray(characteristic(spec, a + (b - a) * t))
    for _ in range(max_passes):
        if np.any(F == 0) or not np.all(np.isfinite(F)):
            raise ZeroNearContourError("F vanishes on the contour", a=a, b=b)
        dphi = np.angle(F[1:] / F[:-1])
        bad = np.abs(dphi) >= 0.5 * math.pi
        if not bad.any():
            return float(dphi.sum())
        if np.min(np.diff(t)[bad]) < min_frac:
            raise ZeroNearContourError("zero too close to the contour", a=a, b=b,
                                       where=complex(a + (b - a) * t[np.argmax(bad)]))
        mids = 0.5 * (t[:-1] + t[1:])[bad]
        Fm = np.asarray(characteristic(spec, a + (b - a) * mids))
        t = np.concatenate([t, mids])
        F = np.concatenate([F, Fm])
        order = np.argsort(t, kind="stable")
        t, F = t[order], F[order]
    raise ZeroNearContourError("phase refinement did not settle", a=a, b=b)


def count_zeros(spec: StringSpec, box: Box) -> int:
    """Number of zeros of ``F`` inside ``box`` (with multiplicity), by the argument principle."""
    spec = validate_string(spec)
    if spec.is_zero:
        return 0
    corners = [complex(box.re_min, box.im_min), complex(box.re_max, box.im_min),
               complex(box.re_max, box.im_max), complex(box.re_min, box.im_max)]
    rate = 1.0 + _optical_length(spec)
    total = 0.0
    for a, b in zip(corners, corners[1:] + corners[:1]):
        n0 = 16 + int(math.ceil(8 * abs(b - a) * rate))
        total += _edge_phase(spec, a, b, n0)
    winding = total / (2 * math.pi)
    n = int(round(winding))
    if abs(winding - n) > 0.1 or n < 0:
        raise ZeroNearContourError("winding number is not an integer", winding=winding, box=box)
    return n


_SPLITS = (0.5, 0.5731, 0.4387, 0.6129, 0.3851, 0.5219, 0.4711)


def _newton_in_box(spec, z, box, mult=1, iters=60):
    margin = 0.05 * box.diameter
    for _ in range(iters):
        F, dF = characteristic_with_derivative(spec, z)
        if dF == 0:
            return None
        step = mult * F / dF
        z = z - step
        if not box.contains(z, margin) or not np.isfinite(z):
            return None
        if abs(step) <= 4 * np.finfo(float).eps * max(1.0, abs(z)):
            break
    return z if box.contains(z) else None


def _refine_cluster(spec: StringSpec, z: complex, r: int, iters: int = 20) -> complex:
    """Refine an r-fold zero; for r = 2 run Newton on F' (a simple zero there)."""
    start = z
    for _ in range(iters):
        F, dF = characteristic_with_derivative(spec, z)
        if r == 2:
            h = 1e-5 * max(1.0, abs(z))
            d2F = (characteristic_with_derivative(spec, z + h)[1]
                   - characteristic_with_derivative(spec, z - h)[1]) / (2 * h)
            step = dF / d2F if d2F != 0 else 0.0
        else:
            step = r * F / dF if dF != 0 else 0.0
        if not np.isfinite(step) or abs(z - step - start) > 1e-3 * max(1.0, abs(start)):
            break
        z = z - step
        if abs(step) <= 4 * np.finfo(float).eps * max(1.0, abs(z)):
            break
    return z


def spectrum_in_box(spec: StringSpec, box: Box, tol: float = 1e-8,
                    cluster_tol: float = 1e-6, max_depth: int = 80) -> Spectrum:
    """Resonances inside ``box`` by recursive bisection and Newton refinement.

    ``tol`` bounds the reported residual ``|F|`` relative to ``max(1, |F'|)``
    at each root; a root whose sub-box shrinks below ``cluster_tol`` while
    still holding several zeros is reported once with that multiplicity.
    """
    spec = validate_string(spec)
    found: list[tuple[complex, int]] = []

    def split_counted(b: Box, n: int):
        last = None
        for frac in _SPLITS:
            halves = b.split(frac)
            try:
                counts = [count_zeros(spec, h) for h in halves]
            except ZeroNearContourError as exc:
                last = exc
                continue
            if sum(counts) == n:
                return list(zip(halves, counts))
            last = SolverError("sub-box counts disagree with parent", box=b, counts=counts, n=n)
        raise last

    def search(b: Box, n: int, depth: int):
        if n == 0:
            return
        if depth > max_depth:
            raise SolverError("iteration cap exceeded", box=b, count=n)
        c = b.center
        if n == 1:
            z = _newton_in_box(spec, c, b)
            if z is not None:
                found.append((z, 1))
                return
        elif b.diameter <= cluster_tol * max(1.0, abs(c)):
            z = _newton_in_box(spec, c, b, mult=n)
            found.append((c if z is None else z, n))
            return
        for sub, m in split_counted(b, n):
            search(sub, m, depth + 1)

    search(box, count_zeros(spec, box), 0)

    # a multiple zero may surface as several numerically split simple ones
    zs = np.array([z for z, _ in found], dtype=complex)
    entries = []
    for group in _cluster(zs, cluster_tol):
        r = sum(found[i][1] for i in group)
        z = complex(np.mean(zs[group]))
        if r > 1 and len(group) > 1:
            z = _refine_cluster(spec, z, r)
        entries.append((z, r))
    if box.is_symmetric:
        entries = _mirror_symmetrize(entries, strict=False)
    residual = 0.0
    for z, r in entries:
        F, dF = characteristic_with_derivative(spec, z)
        if r == 1:
            rel = abs(F) / max(1.0, abs(dF))
            if rel > tol:
                raise SolverError("root residual above tolerance", root=z, residual=rel)
        residual = max(residual, abs(F))
    if any(z.imag <= 0 for z, _ in entries):
        raise SolverError("resonance outside the upper half-plane", entries=entries)
    return Spectrum(_sorted_entries(entries), "contour", residual, box)
