"""Resonances of Krein strings with a dissipative right end, and their optimal design."""

from .design import (
    DesignResult,
    feasible,
    min_decay,
    min_decay_geometric,
    mult_separation,
    optimal_string,
    optimizing_sequence,
)
from .propagator import (
    CharPolynomial,
    StateVector,
    characteristic,
    characteristic_polynomial,
    propagate,
    series_coefficients,
)
from .roots import Box, SolverError, Spectrum, ZeroNearContourError, count_zeros, spectrum, spectrum_in_box
from .string_model import (
    Atom,
    Constraints,
    Segment,
    StringError,
    StringSpec,
    left_end,
    reduce,
    single_atom,
    statical_moment,
    tail_length,
    total_mass,
    validate_string,
)
from .sumrules import check_mass_rule, check_moment_rule, check_product_formula

__version__ = "0.1.0"
