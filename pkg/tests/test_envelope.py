import math

import numpy as np
import pytest
import sympy
from pydantic import ValidationError

from heckeenv import envelope
from heckeenv.envelope import Family, Role
from heckeenv.errors import NonPositiveRError, OutOfRangeError

# 4-decimal table: r -> (delta^-, rho^-, theta, rho^+, delta^+)
TABLE = {
    0.0: (-0.5, -0.3333, 0.0, 0.0, 0.0),
    0.5: (-0.2929, -0.2113, -0.1512, -0.1185, -0.0652),
    1.0: (0.0, 0.0, 0.0, 0.0, 0.0),
    1.5: (0.4142, 0.3660, 0.3581, 0.3502, 0.2899),
    2.0: (1.0, 1.0, 1.0, 1.0, 1.0),
    2.5: (1.8284, 2.0981, 2.1043, 2.1115, 2.5266),
    3.0: (3.0, 4.0, 4.0, 4.0, 5.6667),
    3.5: (4.6569, 7.2942, 7.2781, 7.2576, 12.0177),
    4.0: (7.0, 13.0, 13.0, 13.0, 24.7778),
}
ENVELOPE_R = [0.1, 0.5, 0.9, 1.5, 2.5, 3.5, 5.0]
SIGN_R = [0.1, 0.5, 0.9, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0]


def test_params_validation():
    assert envelope.default_params(Family.minus).kappa == 0.25
    assert envelope.default_params(Family.plus).eta == pytest.approx(0.529129, abs=1e-6)
    with pytest.raises(ValidationError):
        envelope.EnvelopeParams(kappa=0.6, eta=0.4, family=Family.minus)
    with pytest.raises(ValidationError):
        envelope.EnvelopeParams(kappa=0.0, eta=0.4, family=Family.minus)


def test_r_one_minus_is_identity():
    coeffs = envelope.envelope_coefficients(1.0, Family.minus)
    assert coeffs.a == pytest.approx((0.0, 1.0, 0.0, 0.0, 0.0), abs=1e-15)


@pytest.mark.parametrize("family", [Family.minus, Family.plus])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_integer_r_gives_unit_vector(r, family):
    coeffs = envelope.envelope_coefficients(float(r), family)
    expected = np.zeros(5)
    expected[r] = 1.0
    assert np.max(np.abs(np.array(coeffs.a) - expected)) <= 1e-10
    assert abs(envelope.rho_from_coefficients(coeffs) - envelope.INTEGER_COINCIDENCES[r]) <= 1e-10


def test_half_minus_coefficients_match_exact_solution():
    t, a1, a2, a3, a4 = sympy.symbols("t a1:5")
    h = sympy.sqrt(t) - (a1 * t + a2 * t**2 + a3 * t**3 + a4 * t**4)
    equations = [
        expr.subs(t, point)
        for point in (sympy.Rational(1, 4), sympy.Rational(3, 4))
        for expr in (h, sympy.diff(h, t))
    ]
    (solution,) = sympy.linsolve(equations, [a1, a2, a3, a4])
    coeffs = envelope.envelope_coefficients(0.5, Family.minus)
    assert coeffs.a[0] == 0.0
    for value, exact in zip(coeffs.a[1:], solution):
        assert value == pytest.approx(float(exact), abs=1e-12)


def test_non_positive_r():
    with pytest.raises(NonPositiveRError):
        envelope.envelope_coefficients(0.0, Family.minus)
    with pytest.raises(NonPositiveRError):
        envelope.optimize_parameters(-1.0, Family.minus, 1e-2)


@pytest.mark.parametrize("family", [Family.minus, Family.plus])
@pytest.mark.parametrize("r", ENVELOPE_R)
def test_closed_forms_solve_contact_system(r, family):
    coeffs = envelope.envelope_coefficients(r, family)
    solved = envelope.solve_constraints(r, family, coeffs.params.kappa, coeffs.params.eta)
    scale = max(1.0, float(np.max(np.abs(solved))))
    assert np.max(np.abs(np.array(coeffs.a) - solved)) <= 1e-10 * scale
    for t in (coeffs.params.kappa, coeffs.params.eta):
        slope = (envelope.h_eval(t + 1e-6, coeffs) - envelope.h_eval(t - 1e-6, coeffs)) / 2e-6
        assert abs(slope) <= 1e-5
        if family is Family.minus:
            assert abs(envelope.h_eval(t, coeffs)) <= 1e-10
        else:
            assert abs(envelope.h_eval(t, coeffs) - envelope.h_eval(1.0, coeffs)) <= 1e-10


@pytest.mark.parametrize("family", [Family.minus, Family.plus])
@pytest.mark.parametrize("r", SIGN_R)
def test_envelope_sign_pattern(r, family):
    report = envelope.verify_envelope(r, family, 10**5)
    assert report.passed
    assert report.in_minus_region == envelope.in_minus_region(r)


def test_envelope_r_one_is_flat():
    report = envelope.verify_envelope(1.0, Family.minus, 1000)
    assert report.minimum == 0.0 and report.maximum == 0.0
    plus = envelope.verify_envelope(1.0, Family.plus, 1000)
    assert plus.passed and abs(plus.minimum) <= 1e-12 and abs(plus.maximum) <= 1e-12


def test_verify_envelope_grid_floor():
    with pytest.raises(OutOfRangeError):
        envelope.verify_envelope(0.5, Family.minus, 999)


def test_h_eval_domain():
    coeffs = envelope.envelope_coefficients(0.5, Family.minus)
    assert envelope.h_eval(0.0, coeffs) == 0.0
    with pytest.raises(OutOfRangeError):
        envelope.h_eval(1.5, coeffs)


@pytest.mark.parametrize("family", [Family.minus, Family.plus])
@pytest.mark.parametrize("r", [0.5, 1.5, 3.5])
def test_prime_values_against_quartic(r, family):
    coeffs = envelope.envelope_coefficients(r, family)
    h1 = envelope.h_eval(1.0, coeffs) if family is Family.plus else 0.0
    for lam in np.linspace(-2.0, 2.0, 41):
        u = (lam / 2) ** 2
        expected = 4**r * (u**r - envelope.h_eval(u, coeffs) + h1)
        assert envelope.envelope_at_prime(lam, r, family) == pytest.approx(expected, abs=1e-9)
    with pytest.raises(OutOfRangeError):
        envelope.envelope_at_prime(2.5, r, family)


def test_prime_values_at_r_one():
    for lam in (-2.0, -1.3, 0.0, 0.7, 2.0):
        assert envelope.envelope_at_prime(lam, 1.0, Family.minus) == lam * lam


def test_regions():
    assert envelope.lower_family(0.5) is Family.minus
    assert envelope.lower_family(1.5) is Family.plus
    assert envelope.lower_family(3.5) is Family.plus
    assert envelope.lower_family(4.5) is Family.minus
    for r in (1.0, 2.0, 3.0, 4.0):
        assert envelope.in_minus_region(r) and envelope.in_plus_region(r)
        assert envelope.lower_family(r) is Family.minus
    assert envelope.family_for_role(1.5, Role.upper) is Family.minus
    assert envelope.role_of(Family.plus, 0.5) is Role.upper
    assert envelope.rankin_region(0.5) == (True, False)
    assert envelope.rankin_region(1.5) == (False, True)
    assert envelope.rankin_region(3.5) == (True, False)


def test_exponent_table_matches_four_decimal_values():
    for row in envelope.exponent_table(list(TABLE)):
        assert row.row() == pytest.approx(TABLE[row.r], abs=5e-5)


def test_closed_forms_at_misquoted_cells():
    assert envelope.rho_minus_closed(3.5) == pytest.approx((9 * math.sqrt(3) - 1) / 2, abs=1e-12)
    assert abs(envelope.rho_minus_closed(3.5) - 7.2945) > 2e-4
    assert abs(envelope.rho_plus_closed(2.5) - 2.1112) > 3e-4
    assert envelope.rho_plus_closed(2.5) == pytest.approx(2.11154, abs=1e-5)


@pytest.mark.parametrize("r,value", sorted(envelope.INTEGER_COINCIDENCES.items()))
def test_integer_coincidences(r, value):
    e = envelope.exponents(r)
    assert abs(e.rho_minus - value) <= 1e-10
    assert abs(e.theta - value) <= 1e-10
    assert abs(e.rho_plus - value) <= 1e-10


def test_theta_at_one_half():
    assert envelope.theta_exponent(0.5) == pytest.approx(8 / (3 * math.pi) - 1, abs=1e-14)


def test_rho_formula_matches_closed_forms():
    for r in np.linspace(0.12, 6.0, 50):
        minus = envelope.rho_from_coefficients(envelope.envelope_coefficients(r, Family.minus))
        plus = envelope.rho_from_coefficients(envelope.envelope_coefficients(r, Family.plus))
        assert abs(minus - envelope.rho_minus_closed(r)) <= 1e-9
        assert abs(plus - envelope.rho_plus_closed(r)) <= 1e-9


def test_rho_is_a_sato_tate_average():
    for r in (0.5, 2.5):
        for family in (Family.minus, Family.plus):
            coeffs = envelope.envelope_coefficients(r, family)
            average = sum(a * envelope.sato_tate_moment(j) for j, a in enumerate(coeffs.a))
            assert 4**r * average - 1 == pytest.approx(envelope.rho_from_coefficients(coeffs), abs=1e-12)
    for j in range(5):
        assert envelope.TRACE_MULTIPLICITIES[j] == sympy.catalan(j)


def test_rho_plus_is_radau_quadrature():
    nodes = np.array([envelope.KAPPA_PLUS, envelope.ETA_PLUS, 1.0])
    moments = np.array([1.0, 1 / 4, 1 / 8])
    weights = np.linalg.solve(np.vander(nodes, 3, increasing=True).T, moments)
    for r in (0.3, 1.7, 4.2):
        assert envelope.rho_plus_closed(r) == pytest.approx(4**r * weights @ nodes**r - 1, abs=1e-12)


def test_rho_plus_exact_at_two():
    s = sympy.sqrt(21)
    r = 2
    exact = (102 + 7 * s) / 210 * ((6 - s) / 5) ** r + (102 - 7 * s) / 210 * ((6 + s) / 5) ** r + sympy.Rational(4**r, 35) - 1
    assert sympy.simplify(exact) == 1


@pytest.mark.parametrize("r", [0.5, 1.5, 2.5, 3.5, 4.5])
def test_second_derivative_at_contacts(r):
    curvature = envelope.second_derivative_at_contacts(r)
    assert curvature.at_kappa_closed == pytest.approx(curvature.at_kappa_direct, rel=1e-8, abs=1e-10)
    assert curvature.at_eta_closed == pytest.approx(curvature.at_eta_direct, rel=1e-8, abs=1e-10)
    sign = 1 if envelope.in_minus_region(r) else -1
    assert sign * curvature.at_kappa_closed > 0
    assert sign * curvature.at_eta_closed > 0


@pytest.mark.parametrize("r", [1.0, 2.0, 3.0, 4.0])
def test_second_derivative_vanishes_at_integers(r):
    curvature = envelope.second_derivative_at_contacts(r)
    assert abs(curvature.at_kappa_closed) <= 1e-12
    assert abs(curvature.at_eta_closed) <= 1e-12


def test_optimizer_coarse_grid():
    minus = envelope.optimize_parameters(0.5, Family.minus, 1e-2)
    assert minus.role is Role.lower
    assert abs(minus.kappa - 0.25) <= 2e-2 and abs(minus.eta - 0.75) <= 2e-2
    assert minus.objective == pytest.approx(envelope.rho_minus_closed(0.5), abs=1e-3)
    plus = envelope.optimize_parameters(0.5, Family.plus, 1e-2)
    assert plus.role is Role.upper
    assert abs(plus.kappa - envelope.KAPPA_PLUS) <= 2e-2 and abs(plus.eta - envelope.ETA_PLUS) <= 2e-2


def test_optimizer_degenerate_r():
    result = envelope.optimize_parameters(1.0, Family.minus, 1e-2)
    assert abs(result.objective) <= 1e-6


def test_optimizer_step_range():
    with pytest.raises(OutOfRangeError):
        envelope.optimize_parameters(0.5, Family.minus, 0.5)


@pytest.mark.slow
def test_optimizer_fine_grid():
    minus = envelope.optimize_parameters(0.5, Family.minus, 1e-3)
    plus = envelope.optimize_parameters(0.5, Family.plus, 1e-3)
    assert abs(minus.kappa - 0.25) <= 2e-3 and abs(minus.eta - 0.75) <= 2e-3
    assert abs(plus.kappa - 0.070871) <= 2e-3 and abs(plus.eta - 0.529129) <= 2e-3


@pytest.mark.parametrize("r", [0.5, 1.5, 2.5, 3.5])
def test_sato_tate_exponent_between_lower_and_upper(r):
    e = envelope.exponents(r)
    rho = {Family.minus: e.rho_minus, Family.plus: e.rho_plus}
    assert rho[envelope.family_for_role(r, Role.lower)] < e.theta < rho[envelope.family_for_role(r, Role.upper)]
