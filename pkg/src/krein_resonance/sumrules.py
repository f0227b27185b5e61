"""Identities tying the resonances of a string to its mass data.

* mass rule:    ``sum_j |Im(1/k_j)| = Tm - l``
* moment rule:  ``Stm`` from pair sums over resonances plus ``l (Tm - l/2)``,
  and its compact form ``Stm = Tm^2/2 + 1/2 sum_j (Re^2 k_j - Im^2 k_j)/|k_j|^4``
* product form: ``F(k) = e^{i k l} prod_{Re k_j > 0}(1 - k/k_j)(1 + k/conj(k_j))
  prod_{Re k_j = 0}(1 - k/k_j)``

Every sum runs over roots repeated by multiplicity.  On a box-limited
spectrum the identities cannot be checked, so the residuals become signed
advisory defects instead.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .propagator import characteristic
from .roots import IMAG_AXIS_RTOL, Spectrum
from .string_model import StringSpec, statical_moment, tail_length, total_mass


def _split_halfplanes(roots: np.ndarray, imag_rtol: float = IMAG_AXIS_RTOL):
    """Right half-plane representatives and purely imaginary roots."""
    imag_mask = np.abs(roots.real) <= imag_rtol * np.maximum(1.0, np.abs(roots))
    return roots[(~imag_mask) & (roots.real > 0)], roots[imag_mask]


def mass_sum(spectrum: Spectrum) -> float:
    k = spectrum.expanded()
    return float(np.sum(np.abs((1.0 / k).imag))) if len(k) else 0.0


def check_mass_rule(spec: StringSpec, spectrum: Spectrum) -> float:
    """``|sum |Im 1/k| - (Tm - l)|``; signed defect for box-limited spectra."""
    defect = mass_sum(spectrum) - (total_mass(spec) - tail_length(spec))
    return abs(defect) if spectrum.complete else defect


def moment_long(spec: StringSpec, spectrum: Spectrum, imag_rtol: float = IMAG_AXIS_RTOL) -> float:
    """Statical moment from the pair-sum representation.

    Pair sums are over unordered pairs of distinct indices, so an r-fold
    root contributes ``r (r - 1) / 2`` self-pairs.
    """
    right, imag = _split_halfplanes(spectrum.expanded(), imag_rtol)
    ell = tail_length(spec)
    y_r = right.imag / np.abs(right) ** 2
    y_i = imag.imag / np.abs(imag) ** 2
    sr, si = y_r.sum(), y_i.sum()
    pairs_rr = 0.5 * (sr * sr - np.sum(y_r * y_r))
    pairs_ii = 0.5 * (si * si - np.sum(y_i * y_i))
    return float(
        np.sum(1.0 / np.abs(right) ** 2)
        + 4.0 * pairs_rr
        + 2.0 * sr * si
        + pairs_ii
        + ell * (total_mass(spec) - 0.5 * ell)
    )


def compact_sum(roots: np.ndarray) -> float:
    """``sum_j (Re^2 k_j - Im^2 k_j) / |k_j|^4`` over the given roots."""
    if not len(roots):
        return 0.0
    return float(np.sum((roots.real**2 - roots.imag**2) / np.abs(roots) ** 4))


def moment_compact(spec: StringSpec, spectrum: Spectrum) -> float:
    tm = total_mass(spec)
    return 0.5 * tm * tm + 0.5 * compact_sum(spectrum.expanded())


def check_moment_rule(spec: StringSpec, spectrum: Spectrum,
                      imag_rtol: float = IMAG_AXIS_RTOL) -> tuple[float, float]:
    stm = statical_moment(spec)
    long_res = moment_long(spec, spectrum, imag_rtol) - stm
    compact_res = moment_compact(spec, spectrum) - stm
    if spectrum.complete:
        return abs(long_res), abs(compact_res)
    return long_res, compact_res


def product_form(spectrum: Spectrum, ell: float, kappa, imag_rtol: float = IMAG_AXIS_RTOL):
    k = np.asarray(kappa, dtype=complex)
    right, imag = _split_halfplanes(spectrum.expanded(), imag_rtol)
    out = np.exp(1j * k * ell)
    for kj in right:
        out = out * (1 - k / kj) * (1 + k / np.conj(kj))
    for kj in imag:
        out = out * (1 - k / kj)
    return out


def check_product_formula(spec: StringSpec, spectrum: Spectrum,
                          samples: Sequence[complex]) -> float:
    k = np.asarray(samples, dtype=complex)
    if k.size == 0:
        return 0.0
    F = np.asarray(characteristic(spec, k))
    Q = product_form(spectrum, tail_length(spec), k)
    return float(np.max(np.abs(F - Q) / np.maximum(1.0, np.abs(F))))


@dataclass
class SumRuleReport:
    mass_residual: float
    moment_residual_long: float
    moment_residual_compact: float
    product_residual: float
    complete: bool

    def to_dict(self) -> dict:
        return asdict(self)


def default_samples(n: int = 20, seed: int = 0) -> np.ndarray:
    """Points in the annulus ``0.1 <= |k| <= 5`` (fixed seed, reproducible)."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(0.1**2, 5.0**2, n))
    return r * np.exp(2j * np.pi * rng.uniform(size=n))


def report(spec: StringSpec, spectrum: Spectrum, samples=None) -> SumRuleReport:
    if samples is None:
        samples = default_samples()
    long_res, compact_res = check_moment_rule(spec, spectrum)
    return SumRuleReport(
        mass_residual=check_mass_rule(spec, spectrum),
        moment_residual_long=long_res,
        moment_residual_compact=compact_res,
        product_residual=check_product_formula(spec, spectrum, samples),
        complete=spectrum.complete,
    )
