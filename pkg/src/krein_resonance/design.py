"""Optimal placement of a resonance under total-mass and statical-moment bounds.

For bounds ``(m, S)`` every admissible string has its resonances in

    i[1/m, inf)  union  C+ minus (open disk of radius 1/m at i/m
                                   union open disk of radius 1/sqrt(S) at 0),

and every point of that set is reached by some single-atom string.  Hence
the smallest decay rate ``I(alpha)`` on the vertical line ``Re k = alpha`` is
explicit, and so is the unique string attaining it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

from .string_model import (
    Constraints,
    StringSpec,
    single_atom,
    statical_moment,
    total_mass,
)

BRANCHES = ("imaginary_axis", "mass_circle", "moment_circle", "not_attained")


class DesignError(RuntimeError):
    pass


@dataclass(frozen=True)
class DesignResult:
    alpha: float
    I: float
    attained: bool
    branch: str
    kappa: complex | None = None
    string: StringSpec | None = None
    active_constraints: tuple[str, ...] = ()
    suggested_betas: tuple[float, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        out = {
            "alpha": self.alpha,
            "I": self.I,
            "attained": self.attained,
            "branch": self.branch,
            "active_constraints": list(self.active_constraints),
        }
        if self.kappa is not None:
            out["kappa"] = {"re": self.kappa.real, "im": self.kappa.imag}
        if self.string is not None:
            out["string"] = self.string.to_dict()
        if self.suggested_betas:
            out["suggested_betas"] = list(self.suggested_betas)
        return out


def single_atom_resonances(x0: float, A: float) -> list[complex]:
    """Closed-form resonances of one atom ``A`` at ``x0`` (repeated by multiplicity)."""
    if x0 == 1.0:
        return [1j / A]
    d = 1.0 - x0
    root = cmath.sqrt(1.0 / (A * d) - 1.0 / (4.0 * d * d))
    center = 0.5j / d
    return [center - root, center + root]


def feasible(kappa: complex, c: Constraints, tol: float = 0.0) -> bool:
    """Whether ``kappa`` is a resonance of some admissible string.

    ``tol`` loosens both disk tests by a relative amount (boundaries are
    always feasible).
    """
    kappa = complex(kappa)
    if not kappa.imag > 0:
        raise ValueError("feasibility is defined on the open upper half-plane")
    if kappa.real == 0.0 and kappa.imag * c.m >= 1.0 - tol:
        return True
    r2 = kappa.real**2 + kappa.imag**2
    outside_mass = c.m * r2 - 2.0 * kappa.imag >= -tol * max(c.m * r2, 2.0 * kappa.imag)
    outside_moment = c.S * r2 >= 1.0 - tol
    return outside_mass and outside_moment


def critical_alpha(c: Constraints) -> float | None:
    """Frequency where the mass and moment circles cross (only when S > m^2/4)."""
    if c.S <= c.m * c.m / 4.0:
        return None
    return math.sqrt(1.0 / c.S - c.m * c.m / (4.0 * c.S * c.S))


def min_decay(alpha: float, c: Constraints) -> tuple[float, bool]:
    """``(I(alpha), attained)`` from the piecewise closed form."""
    a = abs(alpha)
    m, S = c.m, c.S
    edge = 1.0 / math.sqrt(S)
    attained = a < edge
    if a == 0.0:
        return 1.0 / m, True
    if a >= edge:
        return 0.0, False
    a_star = critical_alpha(c)
    if a_star is not None and a < a_star:
        return 1.0 / m + math.sqrt(1.0 / (m * m) - a * a), attained
    return math.sqrt(1.0 / S - a * a), attained


def min_decay_geometric(alpha: float, c: Constraints, tol: float = 1e-12) -> float:
    """Lowest point of the feasible set on the line ``Re k = alpha``.

    Scans the points where that line crosses the two circles and keeps the
    lowest one :func:`feasible` accepts.
    """
    a = abs(alpha)
    m, S = c.m, c.S
    if a == 0.0:
        return 1.0 / m
    if a >= 1.0 / math.sqrt(S):
        # alpha + i*eps lies outside both disks for every small eps > 0
        return 0.0
    candidates = [math.sqrt(1.0 / S - a * a)]
    if a <= 1.0 / m:
        s = math.sqrt(1.0 / (m * m) - a * a)
        candidates += [1.0 / m - s, 1.0 / m + s]
    good = [b for b in candidates if b > 0 and feasible(complex(a, b), c, tol)]
    if not good:
        raise DesignError(f"no feasible point found on Re k = {alpha}")
    return min(good)


def _active(spec: StringSpec, c: Constraints, rtol: float = 1e-12) -> tuple[str, ...]:
    out = []
    if abs(total_mass(spec) - c.m) <= rtol * c.m:
        out.append("mass")
    if abs(statical_moment(spec) - c.S) <= rtol * c.S:
        out.append("moment")
    return tuple(out)


def _check_design(x0: float, A: float, kappa: complex, c: Constraints) -> StringSpec:
    spec = single_atom(x0, A)
    if not c.admits(spec):
        raise DesignError(f"designed string ({x0}, {A}) is not admissible for {c}")
    roots = single_atom_resonances(x0, A)
    if min(abs(r - kappa) for r in roots) > 1e-9 * max(1.0, abs(kappa)):
        raise DesignError(f"designed string ({x0}, {A}) misses kappa={kappa}: {roots}")
    return spec


def optimal_string(alpha: float, c: Constraints) -> DesignResult:
    """Unique admissible string with a resonance at ``alpha + i I(alpha)``."""
    I, attained = min_decay(alpha, c)
    if not attained:
        return DesignResult(alpha, I, False, "not_attained", suggested_betas=suggest_betas(alpha, c))
    a = abs(alpha)
    m, S = c.m, c.S
    kappa = complex(alpha, I)
    if a == 0.0:
        x0, A, branch = 1.0, m, "imaginary_axis"
    else:
        a_star = critical_alpha(c)
        if a_star is not None and a < a_star:
            x0 = 1.0 - m / (2.0 + 2.0 * math.sqrt(1.0 - a * a * m * m))
            A = m
            branch = "mass_circle"
        else:
            q = math.sqrt(1.0 / S - a * a)
            x0 = 1.0 - 1.0 / (2.0 * q)
            A = 2.0 * S * q
            branch = "moment_circle"
    spec = _check_design(x0, A, kappa, c)
    active = _active(spec, c)
    if not active:
        raise DesignError(f"optimal string for alpha={alpha} saturates neither bound")
    return DesignResult(alpha, I, True, branch, kappa, spec, active)


def _sequence_atom(alpha: float, beta: float) -> tuple[float, float]:
    return 1.0 - 1.0 / (2.0 * beta), 2.0 * beta / (alpha * alpha + beta * beta)


def optimizing_sequence(alpha: float, c: Constraints, betas: Sequence[float]) -> list[StringSpec]:
    """Admissible single atoms with resonances ``+-alpha + i beta`` for each ``beta``.

    Only meaningful when the infimum is not attained, ``|alpha| >= 1/sqrt(S)``.
    """
    if abs(alpha) < 1.0 / math.sqrt(c.S):
        raise ValueError("optimizing sequences are for |alpha| >= 1/sqrt(S); use optimal_string")
    out = []
    for beta in betas:
        if not beta > 0:
            raise ValueError(f"beta must be positive, got {beta}")
        x0, A = _sequence_atom(alpha, beta)
        if A > c.m or 1.0 / (alpha * alpha + beta * beta) > c.S:
            raise ValueError(f"beta={beta} gives an inadmissible string (A={A})")
        out.append(_check_design(x0, A, complex(abs(alpha), beta), c))
    return out


def suggest_betas(alpha: float, c: Constraints, count: int = 5) -> tuple[float, ...]:
    """Decreasing admissible decay rates for an optimizing sequence."""
    a = abs(alpha)
    if a < 1.0 / math.sqrt(c.S):
        return ()
    # mass bound 2b/(a^2 + b^2) <= m holds for b below the smaller root
    if a * c.m < 1.0:
        b_max = (1.0 - math.sqrt(1.0 - a * a * c.m * c.m)) / c.m
    else:
        b_max = math.inf
    b0 = min(0.1, 0.5 * b_max)
    return tuple(b0 / 10.0**k for k in range(count))


def mult_separation(alpha: float, c: Constraints) -> float:
    """Distance from the optimal resonance to a region containing every multiple resonance.

    The region is ``i[2/m, inf)`` together with the closed upper half-plane
    outside ``D(2i/m, 2/m)`` and ``D(0, sqrt(2/S))``.
    """
    if abs(alpha) >= 1.0 / math.sqrt(c.S):
        raise ValueError("separation is defined only where the optimum is attained")
    I, _ = min_decay(alpha, c)
    p = complex(alpha, I)
    cm = 2.0j / c.m
    r1 = 2.0 / c.m
    r2 = math.sqrt(2.0 / c.S)

    def outside(z: complex) -> bool:
        return abs(z - cm) >= r1 * (1 - 1e-15) and abs(z) >= r2 * (1 - 1e-15) and z.imag >= -1e-15

    if outside(p):
        return 0.0
    dists = [abs(p - 1j * max(r1, p.imag))]
    cands = [r2, -r2]
    if p != cm:
        cands.append(cm + r1 * (p - cm) / abs(p - cm))
    cands.append(r2 * p / abs(p))
    h = r2 * r2 / (2.0 * r1)
    if r2 >= h:
        w = math.sqrt(r2 * r2 - h * h)
        cands += [complex(w, h), complex(-w, h)]
    dists += [abs(p - z) for z in cands if outside(z)]
    return min(dists)
