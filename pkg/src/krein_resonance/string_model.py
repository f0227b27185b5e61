"""Regular Krein strings built from point masses and constant-density pieces.

A string lives on ``(-inf, 1]``; the right end ``x = 1`` carries the
dissipative boundary condition.  Only finitely many atoms and finitely many
density segments are representable, which keeps every functional exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Iterable


class StringError(ValueError):
    """Raised for string data that violates the model invariants."""


@dataclass(frozen=True)
class Atom:
    x: float
    mass: float


@dataclass(frozen=True)
class Segment:
    left: float
    right: float
    density: float

    @property
    def length(self) -> float:
        return self.right - self.left


@dataclass(frozen=True)
class StringSpec:
    """Mass distribution ``dM`` of a regular string.

    Instances returned by :func:`validate_string` are normalized: atoms are
    sorted with distinct positions, segments are sorted, disjoint, of positive
    density, adjacent equal-density pieces are merged, and no atom sits in a
    segment interior (segments are split there instead).
    """

    atoms: tuple[Atom, ...] = ()
    segments: tuple[Segment, ...] = ()

    @property
    def is_atomic(self) -> bool:
        return not self.segments

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.segments

    def to_dict(self) -> dict[str, Any]:
        return {
            "atoms": [{"x": a.x, "mass": a.mass} for a in self.atoms],
            "segments": [
                {"left": s.left, "right": s.right, "density": s.density}
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StringSpec":
        if not isinstance(data, dict):
            raise StringError("string description must be a JSON object")
        try:
            atoms = [Atom(float(a["x"]), float(a["mass"])) for a in data.get("atoms", [])]
            segments = [
                Segment(float(s["left"]), float(s["right"]), float(s["density"]))
                for s in data.get("segments", [])
            ]
        except (KeyError, TypeError) as exc:
            raise StringError(f"malformed string description: {exc!r}") from exc
        return validate_string(cls(tuple(atoms), tuple(segments)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "StringSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StringError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class Constraints:
    """Bounds ``m`` on total mass and ``S`` on statical moment.

    ``m = inf`` stands for an absent mass bound.
    """

    m: float
    S: float

    def __post_init__(self) -> None:
        if not self.m > 0:
            raise ValueError(f"mass bound must be positive, got {self.m}")
        if not (math.isfinite(self.S) and self.S > 0):
            raise ValueError(f"moment bound must be positive, got {self.S}")

    def admits(self, spec: StringSpec, rtol: float = 1e-12) -> bool:
        """Membership in the admissible family (up to a relative slack)."""
        tm = total_mass(spec)
        return 0 < tm <= self.m * (1 + rtol) and statical_moment(spec) <= self.S * (1 + rtol)


def single_atom(x0: float, mass: float) -> StringSpec:
    return validate_string(StringSpec(atoms=(Atom(x0, mass),)))


def validate_string(spec: StringSpec) -> StringSpec:
    """Check the invariants of ``spec`` and return its normalized form."""
    atoms: dict[float, float] = {}
    for a in spec.atoms:
        if not (math.isfinite(a.x) and math.isfinite(a.mass)):
            raise StringError(f"non-finite atom {a}")
        if a.mass <= 0:
            raise StringError(f"atom at x={a.x} has non-positive mass {a.mass}")
        if a.x > 1:
            raise StringError(f"atom position {a.x} lies right of x=1")
        atoms[a.x] = atoms.get(a.x, 0.0) + a.mass

    segs = []
    for s in spec.segments:
        if not all(math.isfinite(v) for v in (s.left, s.right, s.density)):
            raise StringError(f"non-finite segment {s}")
        if s.density < 0:
            raise StringError(f"segment {s} has negative density")
        if not s.left < s.right:
            raise StringError(f"segment {s} needs left < right")
        if s.right > 1:
            raise StringError(f"segment right end {s.right} lies right of x=1")
        if s.density > 0:
            segs.append(s)
    segs.sort(key=lambda s: s.left)
    for prev, cur in zip(segs, segs[1:]):
        if cur.left < prev.right:
            raise StringError(f"segments {prev} and {cur} overlap")

    merged: list[Segment] = []
    for s in segs:
        if merged and merged[-1].right == s.left and merged[-1].density == s.density:
            merged[-1] = Segment(merged[-1].left, s.right, s.density)
        else:
            merged.append(s)

    # split segments at interior atoms so atoms only ever sit at endpoints
    split: list[Segment] = []
    atom_xs = sorted(atoms)
    for s in merged:
        left = s.left
        for x in atom_xs:
            if left < x < s.right:
                split.append(Segment(left, x, s.density))
                left = x
        split.append(Segment(left, s.right, s.density))

    return StringSpec(
        atoms=tuple(Atom(x, atoms[x]) for x in atom_xs),
        segments=tuple(split),
    )


def total_mass(spec: StringSpec) -> float:
    return math.fsum([a.mass for a in spec.atoms] + [s.density * s.length for s in spec.segments])


def statical_moment(spec: StringSpec) -> float:
    """First moment ``int (1 - x) dM`` about the right end."""
    terms = [a.mass * (1.0 - a.x) for a in spec.atoms]
    # int_l^r (1 - x) dx = length * (1 - midpoint)
    terms += [s.density * s.length * (1.0 - 0.5 * (s.left + s.right)) for s in spec.segments]
    return math.fsum(terms)


def left_end(spec: StringSpec) -> float:
    starts = [a.x for a in spec.atoms] + [s.left for s in spec.segments if s.density > 0]
    return min(starts) if starts else 1.0


def _tail_start(spec: StringSpec) -> float:
    if spec.atoms and spec.atoms[-1].x == 1.0:
        return 1.0
    right = 1.0
    for s in reversed(spec.segments):
        if s.right != right or s.density != 1.0:
            break
        right = s.left
        # an atom at the left end of this piece stops the tail here
        if any(a.x == right for a in spec.atoms):
            break
    return right


def _reduce_once(spec: StringSpec) -> tuple[StringSpec, float]:
    cut = _tail_start(spec)
    if cut == 1.0:
        return spec, 0.0
    ell = 1.0 - cut
    atoms = tuple(Atom(min(a.x + ell, 1.0), a.mass) for a in spec.atoms if a.x <= cut)
    shifted = (Segment(s.left + ell, min(s.right + ell, 1.0), s.density)
               for s in spec.segments if s.right <= cut)
    # pieces narrower than the float spacing near their new position vanish
    segments = tuple(s for s in shifted if s.left < s.right)
    return validate_string(StringSpec(atoms, segments)), ell


def _reduce(spec: StringSpec) -> tuple[StringSpec, float]:
    # the shift can close a gap below float resolution and expose a new tail
    spec = validate_string(spec)
    total = 0.0
    while True:
        spec, ell = _reduce_once(spec)
        if ell == 0.0:
            return spec, total
        total += ell


def tail_length(spec: StringSpec) -> float:
    """Length of the maximal interval ``(1 - l, 1]`` where ``dM`` is Lebesgue measure."""
    return _reduce(spec)[1]


def reduce(spec: StringSpec) -> StringSpec:
    """Drop the density-1 tail and shift the rest right so it ends at ``x = 1``."""
    return _reduce(spec)[0]


def breakpoints(spec: StringSpec) -> Iterable[float]:
    pts = {a.x for a in spec.atoms}
    for s in spec.segments:
        pts.update((s.left, s.right))
    return sorted(pts)


__all__ = [
    "Atom",
    "Constraints",
    "Segment",
    "StringError",
    "StringSpec",
    "breakpoints",
    "left_end",
    "reduce",
    "single_atom",
    "statical_moment",
    "tail_length",
    "total_mass",
    "validate_string",
]
