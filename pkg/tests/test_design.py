import math

import numpy as np
import pytest

from krein_resonance import (
    Constraints,
    feasible,
    min_decay,
    min_decay_geometric,
    mult_separation,
    optimal_string,
    optimizing_sequence,
    spectrum,
    statical_moment,
    total_mass,
)
from krein_resonance.design import critical_alpha, single_atom_resonances, suggest_betas
from strategies import make, random_atomic, separation_oracle

C21 = Constraints(2.0, 1.0)
C11 = Constraints(1.0, 1.0)


def random_constraints(rng):
    return Constraints(float(np.exp(rng.uniform(-1.5, 1.5))), float(np.exp(rng.uniform(-1.5, 1.5))))


@pytest.mark.parametrize(
    "kappa, expected",
    [(0.6j, True), (0.2 + 0.3j, False), (0.6 + 0.8j, True), (0.3j, False), (0.5j, True), (1.5 + 0.01j, True)],
)
def test_feasible_examples(kappa, expected):
    assert feasible(kappa, C21) is expected


def test_feasible_rejects_lower_half_plane():
    for k in (1.0, 1.0 - 0.1j):
        with pytest.raises(ValueError):
            feasible(k, C21)


@pytest.mark.parametrize(
    "alpha, c, I, attained",
    [
        (0.0, C21, 0.5, True),
        (0.6, C21, 0.8, True),
        (0.5, C11, 1 + math.sqrt(0.75), True),
        (2.0, C11, 0.0, False),
        (-0.6, C21, 0.8, True),
    ],
)
def test_min_decay_examples(alpha, c, I, attained):
    got, att = min_decay(alpha, c)
    assert got == pytest.approx(I, abs=1e-15)
    assert att is attained


def test_min_decay_geometric_examples():
    assert min_decay_geometric(0.9, C11) == pytest.approx(math.sqrt(0.19), abs=1e-15)
    assert min_decay_geometric(0.8, C11) == pytest.approx(1.6, abs=1e-15)


def test_formula_matches_geometry_random():
    rng = np.random.default_rng(31)
    for _ in range(3000):
        c = random_constraints(rng)
        alpha = rng.uniform(-1.3, 1.3) / math.sqrt(c.S)
        assert abs(min_decay(alpha, c)[0] - min_decay_geometric(alpha, c)) <= 1e-12


def test_jump_at_critical_alpha():
    # S > m^2/2: the two branches do not meet at alpha*
    c = C11
    a_star = critical_alpha(c)
    assert a_star == pytest.approx(math.sqrt(0.75), abs=1e-15)
    below, above = a_star * (1 - 1e-9), a_star * (1 + 1e-9)
    for a in (below, above):
        assert min_decay(a, c)[0] == pytest.approx(min_decay_geometric(a, c), abs=1e-12)
    assert min_decay(below, c)[0] - min_decay(above, c)[0] == pytest.approx(1.0, abs=1e-6)
    # the sweep values quoted for plotting
    assert min_decay(0.86, c)[0] == pytest.approx(1.5102, abs=1e-4)
    assert min_decay(0.87, c)[0] == pytest.approx(0.4931, abs=1e-4)


def test_branches_meet_when_moment_is_moderate():
    # m^2/4 < S <= m^2/2: continuous at alpha*
    c = Constraints(2.0, 1.5)
    a_star = critical_alpha(c)
    lo = min_decay(a_star * (1 - 1e-10), c)[0]
    hi = min_decay(a_star, c)[0]
    assert abs(lo - hi) < 1e-4


def test_optimal_string_examples():
    r = optimal_string(0.0, C21)
    assert r.branch == "imaginary_axis" and r.kappa == 0.5j
    assert (r.string.atoms[0].x, r.string.atoms[0].mass) == (1.0, 2.0)
    assert r.active_constraints == ("mass",)

    r = optimal_string(0.6, C21)
    a = r.string.atoms[0]
    assert a.x == pytest.approx(0.375, abs=1e-15) and a.mass == pytest.approx(1.6, abs=1e-15)
    assert r.kappa == pytest.approx(0.6 + 0.8j, abs=1e-15)
    assert r.branch == "moment_circle" and "moment" in r.active_constraints

    r = optimal_string(0.5, C11)
    a = r.string.atoms[0]
    assert a.x == pytest.approx(math.sqrt(3) - 1, abs=1e-12) and a.mass == 1.0
    assert r.kappa == pytest.approx(0.5 + (1 + math.sqrt(0.75)) * 1j, abs=1e-15)
    assert r.branch == "mass_circle" and r.active_constraints[0] == "mass"

    r = optimal_string(1.5, C21)
    assert not r.attained and r.string is None and r.I == 0 and r.branch == "not_attained"
    assert r.suggested_betas


def test_boundary_cases():
    a_star = critical_alpha(C11)
    assert optimal_string(a_star, C11).branch == "moment_circle"
    r = optimal_string(1.0, C11)
    assert not r.attained and r.I == 0.0


def test_designs_sit_on_named_boundaries():
    rng = np.random.default_rng(32)
    for _ in range(500):
        c = random_constraints(rng)
        alpha = rng.uniform(-0.999, 0.999) / math.sqrt(c.S)
        r = optimal_string(alpha, c)
        k = r.kappa
        assert feasible(k, c, tol=1e-12)
        if r.branch == "imaginary_axis":
            assert k == 1j / c.m
        elif r.branch == "mass_circle":
            assert abs(abs(k - 1j / c.m) - 1 / c.m) <= 1e-12
        else:
            assert abs(abs(k) - 1 / math.sqrt(c.S)) <= 1e-12
        tm, stm = total_mass(r.string), statical_moment(r.string)
        assert tm <= c.m * (1 + 1e-12) and stm <= c.S * (1 + 1e-12)
        assert abs(tm - c.m) <= 1e-12 * c.m or abs(stm - c.S) <= 1e-12 * c.S


def test_designs_are_symmetric_in_alpha():
    rng = np.random.default_rng(33)
    for _ in range(100):
        c = random_constraints(rng)
        alpha = rng.uniform(0, 0.999) / math.sqrt(c.S)
        assert optimal_string(alpha, c).string == optimal_string(-alpha, c).string


def test_moment_branch_is_decreasing():
    for c in (C21, C11, Constraints(0.5, 3.0)):
        lo = critical_alpha(c) or 0.0
        a = np.linspace(lo, 1 / math.sqrt(c.S), 200)[1:-1]
        I = [min_decay(x, c)[0] for x in a]
        assert np.all(np.diff(I) < 0)


def test_design_spectrum_round_trip():
    rng = np.random.default_rng(34)
    for _ in range(100):
        c = random_constraints(rng)
        alpha = rng.uniform(-0.999, 0.999) / math.sqrt(c.S)
        r = optimal_string(alpha, c)
        ks = spectrum(r.string).expanded()
        if alpha == 0:
            expected = [1j / c.m]
        else:
            expected = [-abs(alpha) + 1j * r.I, abs(alpha) + 1j * r.I]
        np.testing.assert_allclose(sorted(ks, key=lambda z: z.real), expected, atol=1e-10)


def test_optimizing_sequence_examples():
    strings = optimizing_sequence(1.5, C21, [0.1, 0.01])
    a = strings[0].atoms[0]
    assert a.x == pytest.approx(-4.0, abs=1e-15)
    assert a.mass == pytest.approx(0.2 / 2.26, rel=1e-14)
    assert strings[1].atoms[0].x == pytest.approx(-49.0, abs=1e-13)
    assert strings[1].atoms[0].mass == pytest.approx(0.0088884, rel=1e-4)
    for beta, s in zip([0.1, 0.01], strings):
        np.testing.assert_allclose(sorted(spectrum(s).expanded(), key=lambda z: z.real),
                                   [-1.5 + 1j * beta, 1.5 + 1j * beta], atol=1e-9)
    # alpha right at 1/sqrt(S) is still fine
    s = optimizing_sequence(1.0, C11, [0.1])[0]
    assert statical_moment(s) < 1.0


def test_optimizing_sequence_errors():
    with pytest.raises(ValueError):
        optimizing_sequence(0.5, C21, [0.1])
    with pytest.raises(ValueError):
        optimizing_sequence(1.5, C21, [0.0])
    # A = 2b/(a^2+b^2) exceeds m = 0.1 for b = 0.5
    with pytest.raises(ValueError):
        optimizing_sequence(1.5, Constraints(0.1, 1.0), [0.5])


def test_suggested_betas_are_admissible():
    rng = np.random.default_rng(35)
    for _ in range(200):
        c = random_constraints(rng)
        alpha = rng.uniform(1.0, 3.0) / math.sqrt(c.S)
        betas = suggest_betas(alpha, c)
        assert list(betas) == sorted(betas, reverse=True)
        optimizing_sequence(alpha, c, betas)


def test_single_atom_closed_form_matches_solver():
    rng = np.random.default_rng(36)
    for _ in range(100):
        x0, A = rng.uniform(-3, 1), rng.uniform(0.01, 4)
        got = sorted(spectrum(make([(x0, A)])).expanded(), key=lambda z: (z.real, z.imag))
        want = sorted(single_atom_resonances(x0, A), key=lambda z: (z.real, z.imag))
        np.testing.assert_allclose(got, want, atol=1e-10)


def test_mult_separation_examples():
    assert mult_separation(0.0, C21) == pytest.approx(0.5, abs=1e-9)
    assert separation_oracle(0.5j, C21) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ValueError):
        mult_separation(1.0, C21)


def test_mult_separation_against_sampling():
    rng = np.random.default_rng(37)
    for _ in range(300):
        c = random_constraints(rng)
        alpha = rng.uniform(-0.99, 0.99) / math.sqrt(c.S)
        p = complex(abs(alpha), min_decay(alpha, c)[0])
        d = mult_separation(alpha, c)
        assert d > 0
        assert d <= abs(p - 2j / c.m) + 2 / c.m
        assert d == pytest.approx(separation_oracle(p, c), abs=1e-8 * max(1.0, abs(p)))


def test_roots_of_admissible_strings_are_feasible():
    rng = np.random.default_rng(38)
    for _ in range(100):
        s = random_atomic(rng)
        # the tightest bounds the string still satisfies
        c = Constraints(total_mass(s), max(statical_moment(s), 1e-300))
        for k in spectrum(s).expanded():
            assert feasible(k, c, tol=1e-9)
