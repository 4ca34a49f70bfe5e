"""Quartic envelopes of t^r, the multiplicative majorant/minorant at primes, and their exponents.

For t = cos^2(theta) in [0, 1] the quartic

    h_r(t; a) = t^r - a_1 t - a_2 t^2 - a_3 t^3 - a_4 t^4

is pinned by double contact at two points (kappa, eta). The minus family
also vanishes at t = 0; the plus family is levelled with t = 1 and carries
the constant a_0 = h_r(1). Depending on r one family lies below t^r and the
other above it.
"""
import logging
import math
from enum import Enum
from typing import Iterable, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gammaln

from .errors import NonPositiveRError, NoValidCandidateError, OutOfRangeError

logger = logging.getLogger(__name__)

SQRT21 = math.sqrt(21.0)
KAPPA_MINUS, ETA_MINUS = 0.25, 0.75
KAPPA_PLUS, ETA_PLUS = (6 - SQRT21) / 20, (6 + SQRT21) / 20

# Sato-Tate moments E[(2 cos theta)^(2j)] = m_j; E[cos^(2j) theta] = m_j / 4^j
TRACE_MULTIPLICITIES = (1, 1, 2, 5, 14)
INTEGER_COINCIDENCES = {1: 0.0, 2: 1.0, 3: 4.0, 4: 13.0}

ArrayLike = Union[float, np.ndarray]


# ---------- DATA MODELS ----------
class Family(str, Enum):
    minus = "minus"
    plus = "plus"


class Role(str, Enum):
    lower = "lower"
    upper = "upper"


class EnvelopeParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(..., gt=0, lt=1)
    eta: float = Field(..., gt=0, lt=1)
    family: Family

    @model_validator(mode="after")
    def _ordered(self) -> "EnvelopeParams":
        if not self.kappa < self.eta:
            raise ValueError(f"need kappa < eta, got {self.kappa} >= {self.eta}")
        return self


class EnvelopeCoefficients(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: float = Field(..., gt=0)
    family: Family
    a: Tuple[float, float, float, float, float]
    params: EnvelopeParams


class ExponentSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: float
    delta_minus: float
    rho_minus: float
    theta: float
    rho_plus: float
    delta_plus: float

    def row(self) -> Tuple[float, float, float, float, float]:
        return (self.delta_minus, self.rho_minus, self.theta, self.rho_plus, self.delta_plus)


class EnvelopeReport(BaseModel):
    r: float
    family: Family
    grid_size: int
    minimum: float = Field(..., description="min of h (minus) or h - h(1) (plus) on the grid")
    maximum: float
    in_minus_region: bool
    in_plus_region: bool
    passed: bool


class OptimizationResult(BaseModel):
    r: float
    family: Family
    role: Role
    kappa: float
    eta: float
    objective: float
    candidates: int
    checked: int


class ContactCurvature(BaseModel):
    r: float
    at_kappa_closed: float
    at_kappa_direct: float
    at_eta_closed: float
    at_eta_direct: float


# ---------- REGIONS ----------
def in_minus_region(r: float) -> bool:
    """r in [0,1] u [2,3] u [4, inf): the minus family minorizes t^r."""
    return 0 <= r <= 1 or 2 <= r <= 3 or r >= 4


def in_plus_region(r: float) -> bool:
    """r in [1,2] u [3,4]: the plus family minorizes t^r."""
    return 1 <= r <= 2 or 3 <= r <= 4


def rankin_region(r: float) -> Tuple[bool, bool]:
    """Membership of r in Rankin's older regions ([0,1] u [2,inf), [1,2]) for delta^-/delta^+."""
    return (0 <= r <= 1 or r >= 2), (1 <= r <= 2)


def lower_family(r: float) -> Family:
    """Family minorizing |lambda|^(2r); minus on region boundaries."""
    return Family.minus if in_minus_region(r) else Family.plus


def family_for_role(r: float, role: Role) -> Family:
    lower = lower_family(r)
    if Role(role) is Role.lower:
        return lower
    return Family.plus if lower is Family.minus else Family.minus


def role_of(family: Family, r: float) -> Role:
    return Role.lower if Family(family) is lower_family(r) else Role.upper


def default_params(family: Family) -> EnvelopeParams:
    if Family(family) is Family.minus:
        return EnvelopeParams(kappa=KAPPA_MINUS, eta=ETA_MINUS, family=Family.minus)
    return EnvelopeParams(kappa=KAPPA_PLUS, eta=ETA_PLUS, family=Family.plus)


# ---------- CLOSED FORMS ----------
def _p_minus(j: int, r: float, k: ArrayLike, e: ArrayLike) -> ArrayLike:
    if j == 1:
        return ((4 - r) * k + (r - 2) * e) * k ** (r - 1) * e**2
    if j == 2:
        return ((2 * r - 8) * k**2 + (1 - r) * k * e + (1 - r) * e**2) * k ** (r - 2) * e
    if j == 3:
        return ((4 - r) * k**2 + (4 - r) * k * e + 2 * (r - 1) * e**2) * k ** (r - 2)
    return ((r - 3) * k + (1 - r) * e) * k ** (r - 2)


def _p_plus(j: int, r: float, k: ArrayLike, e: ArrayLike) -> ArrayLike:
    lead = r * k ** (r - 1) * (k - 1)
    if j == 1:
        return (
            lead * e * (e - k) * (k * e + 2 * k + e) * (e - 1) ** 2
            + 2 * (k**r - 1) * k * e * (e - 1) ** 2 * (2 * k * e + 4 * k - e**2 - 2 * e - 3)
        )
    if j == 2:
        return lead * (k - e) * (e - 1) ** 2 * (2 * k * e + k + e**2 + 2 * e) + (e**r - 1) * (k - 1) ** 2 * (
            8 * k * e**2 + 4 * e**2 - e * k**2 - 2 * k * e - 3 * e - k**3 - 2 * k**2 - 3 * k
        )
    if j == 3:
        return lead * (k + 2 * e + 1) * (e - k) * (e - 1) ** 2 + 2 * (k**r - 1) * (
            2 * k**2 + 2 * k * e - e**2 - 2 * e - 1
        ) * (e - 1) ** 2
    return lead * (k - e) * (e - 1) ** 2 + (e**r - 1) * (k - 1) ** 2 * (3 * e - k - 2)


def closed_form_coefficients(r: float, family: Family, kappa: ArrayLike, eta: ArrayLike) -> np.ndarray:
    """(a_0, ..., a_4) for contact points (kappa, eta); broadcasts over array inputs."""
    k = np.asarray(kappa, dtype=np.float64)
    e = np.asarray(eta, dtype=np.float64)
    if Family(family) is Family.minus:
        denominator = (k - e) ** 3
        a = [(_p_minus(j, r, k, e) - _p_minus(j, r, e, k)) / denominator for j in range(1, 5)]
        a0 = np.zeros_like(a[0])
    else:
        denominator = (k - 1) ** 2 * (e - 1) ** 2 * (k - e) ** 3
        a = [(_p_plus(j, r, k, e) - _p_plus(j, r, e, k)) / denominator for j in range(1, 5)]
        a0 = 1 - a[0] - a[1] - a[2] - a[3]
    return np.stack([a0, *a], axis=-1)


def solve_constraints(r: float, family: Family, kappa: float, eta: float) -> np.ndarray:
    """(a_0, ..., a_4) from the contact conditions as a 4x4 linear system."""
    rows, rhs = [], []
    for t in (kappa, eta):
        rows.append([j * t ** (j - 1) for j in range(1, 5)])
        rhs.append(r * t ** (r - 1))
        if Family(family) is Family.minus:
            rows.append([t**j for j in range(1, 5)])
            rhs.append(t**r)
        else:
            rows.append([1 - t**j for j in range(1, 5)])
            rhs.append(1 - t**r)
    a = np.linalg.solve(np.array(rows), np.array(rhs))
    a0 = 0.0 if Family(family) is Family.minus else 1 - a.sum()
    return np.concatenate([[a0], a])


def envelope_coefficients(r: float, family: Family, params: EnvelopeParams = None) -> EnvelopeCoefficients:
    if not r > 0:
        raise NonPositiveRError(f"r must be positive, got {r}")
    family = Family(family)
    params = params or default_params(family)
    a = closed_form_coefficients(r, family, params.kappa, params.eta)
    return EnvelopeCoefficients(r=r, family=family, a=tuple(float(x) for x in a), params=params)


# ---------- EVALUATION ----------
def h_values(t: np.ndarray, r: float, a: Iterable[float]) -> np.ndarray:
    """t^r - sum_{j=1..4} a_j t^j; the a_0 entry of ``a`` is ignored."""
    _, a1, a2, a3, a4 = a
    t = np.asarray(t, dtype=np.float64)
    return t**r - t * (a1 + t * (a2 + t * (a3 + t * a4)))


def h_eval(t: float, coeffs: EnvelopeCoefficients) -> float:
    if not 0 <= t <= 1:
        raise OutOfRangeError(f"t must lie in [0, 1], got {t}")
    return float(h_values(np.array(t), coeffs.r, coeffs.a))


def _sign_verdict(family: Family, r: float, minimum: float, maximum: float, tolerance: float) -> bool:
    # minus: h >= 0 on R^-, h <= 0 on R^+; plus: h - h(1) <= 0 on R^-, >= 0 on R^+
    nonnegative_required = in_minus_region(r) if family is Family.minus else in_plus_region(r)
    nonpositive_required = in_plus_region(r) if family is Family.minus else in_minus_region(r)
    ok = True
    if nonnegative_required:
        ok = ok and minimum >= -tolerance
    if nonpositive_required:
        ok = ok and maximum <= tolerance
    return ok


def verify_envelope(r: float, family: Family, grid_size: int, tolerance: float = 1e-12) -> EnvelopeReport:
    if grid_size < 1000:
        raise OutOfRangeError(f"grid_size must be >= 1000, got {grid_size}")
    coeffs = envelope_coefficients(r, family)
    t = np.linspace(0.0, 1.0, grid_size + 1)
    h = h_values(t, r, coeffs.a)
    if coeffs.family is Family.plus:
        h = h - h[-1]
    minimum, maximum = float(h.min()), float(h.max())
    return EnvelopeReport(
        r=r,
        family=coeffs.family,
        grid_size=grid_size,
        minimum=minimum,
        maximum=maximum,
        in_minus_region=in_minus_region(r),
        in_plus_region=in_plus_region(r),
        passed=_sign_verdict(coeffs.family, r, minimum, maximum, tolerance),
    )


def envelope_prime_values(lambdas: np.ndarray, coeffs: EnvelopeCoefficients) -> np.ndarray:
    """sum_j 4^(r-j) a_j lambda^(2j) = 4^r (a_0 + sum_j a_j u^j) with u = (lambda/2)^2."""
    u = (np.asarray(lambdas, dtype=np.float64) / 2) ** 2
    a0, a1, a2, a3, a4 = coeffs.a
    return 4.0**coeffs.r * (a0 + u * (a1 + u * (a2 + u * (a3 + u * a4))))


def envelope_at_prime(lambda_p: float, r: float, family: Family) -> float:
    if abs(lambda_p) > 2 + 1e-12:
        raise OutOfRangeError(f"|lambda_p| must be <= 2, got {lambda_p}")
    return float(envelope_prime_values(np.array(lambda_p), envelope_coefficients(r, family)))


# ---------- EXPONENTS ----------
def theta_exponent(r: float) -> float:
    """4^r Gamma(r + 1/2) / (sqrt(pi) Gamma(r + 2)) - 1, the Sato-Tate exponent."""
    return math.exp(r * math.log(4) + gammaln(r + 0.5) - 0.5 * math.log(math.pi) - gammaln(r + 2)) - 1


def rho_minus_closed(r: float) -> float:
    return (3 ** (r - 1) - 1) / 2


def rho_plus_closed(r: float) -> float:
    return (
        (102 + 7 * SQRT21) / 210 * ((6 - SQRT21) / 5) ** r
        + (102 - 7 * SQRT21) / 210 * ((6 + SQRT21) / 5) ** r
        + 4**r / 35
        - 1
    )


def exponents(r: float) -> ExponentSet:
    if r < 0:
        raise OutOfRangeError(f"r must be nonnegative, got {r}")
    return ExponentSet(
        r=r,
        delta_minus=2 ** (r - 1) - 1,
        rho_minus=rho_minus_closed(r),
        theta=theta_exponent(r),
        rho_plus=rho_plus_closed(r),
        delta_plus=2 ** (r - 1) / 5 * (2**r + 3 ** (2 - r)) - 1,
    )


def sato_tate_moment(j: int) -> float:
    """E[cos^(2j) theta] under (2/pi) sin^2(theta) d(theta)."""
    return TRACE_MULTIPLICITIES[j] / 4**j


def _rho(r: float, a: np.ndarray) -> np.ndarray:
    weights = np.array([2.0**8, 2.0**6, 2.0**4 * 2, 2.0**2 * 5, 14.0])
    return 2.0 ** (2 * r - 8) * (a @ weights) - 1


def rho_from_coefficients(coeffs: EnvelopeCoefficients) -> float:
    return float(_rho(coeffs.r, np.asarray(coeffs.a)))


def _rounded(value: float) -> float:
    return round(value, 4) + 0.0


def exponent_table(r_values: Iterable[float]) -> List[ExponentSet]:
    rows = []
    for r in r_values:
        e = exponents(r)
        rows.append(ExponentSet(r=r, **{k: _rounded(v) for k, v in e.model_dump().items() if k != "r"}))
    return rows


def second_derivative_at_contacts(r: float) -> ContactCurvature:
    """h_r'' at kappa_- = 1/4 and eta_- = 3/4, closed forms against direct differentiation."""
    coeffs = envelope_coefficients(r, Family.minus)
    _, _, a2, a3, a4 = coeffs.a

    def direct(t: float) -> float:
        return r * (r - 1) * t ** (r - 2) - 2 * a2 - 6 * a3 * t - 12 * a4 * t * t

    scale = 8 * 4.0 ** (-r)
    at_kappa = scale * (2 * r * r - 2 * r + 3 + 2 * r * 3 ** (r - 2) - 11 * 3 ** (r - 2))
    at_eta = scale * (3 ** (r - 2) * (2 * r * r - 18 * r + 43) - 6 * r - 3)
    return ContactCurvature(
        r=r,
        at_kappa_closed=at_kappa,
        at_kappa_direct=direct(KAPPA_MINUS),
        at_eta_closed=at_eta,
        at_eta_direct=direct(ETA_MINUS),
    )


# ---------- OPTIMIZER ----------
def optimize_parameters(
    r: float,
    family: Family,
    step: float,
    verify_grid: int = 4000,
    tolerance: float = 1e-10,
    batch: int = 1024,
) -> OptimizationResult:
    """Exhaustive grid search over 0 < kappa < eta < 1.

    Candidates are ranked by rho (descending for the minorant, ascending for
    the majorant) and checked in that order; the first valid envelope wins.
    """
    if not r > 0:
        raise NonPositiveRError(f"r must be positive, got {r}")
    if not 0 < step <= 1e-2:
        raise OutOfRangeError(f"step must lie in (0, 1e-2], got {step}")
    family = Family(family)
    role = role_of(family, r)

    nodes = np.arange(1, int(round(1 / step))) * step
    nodes = nodes[nodes < 1]
    i, j = np.triu_indices(nodes.size, k=1)
    kappa, eta = nodes[i], nodes[j]
    with np.errstate(all="ignore"):
        a = closed_form_coefficients(r, family, kappa, eta)
        rho = _rho(r, a)
    finite = np.isfinite(rho) & np.all(np.isfinite(a), axis=1)
    kappa, eta, a, rho = kappa[finite], eta[finite], a[finite], rho[finite]
    order = np.argsort(-rho if role is Role.lower else rho, kind="stable")

    t = np.linspace(0.0, 1.0, verify_grid + 1)
    t_r = t**r
    powers = np.stack([t**k for k in range(1, 5)])
    checked = 0
    for start in range(0, order.size, batch):
        chunk = order[start : start + batch]
        h = t_r[None, :] - a[chunk, 1:] @ powers
        if family is Family.plus:
            h = h - h[:, -1:]
        minimum, maximum = h.min(axis=1), h.max(axis=1)
        valid = np.array(
            [_sign_verdict(family, r, lo, hi, tolerance) for lo, hi in zip(minimum.tolist(), maximum.tolist())]
        )
        checked += chunk.size
        logger.debug("optimizer r=%g %s: checked %d/%d candidates", r, family.value, checked, order.size)
        if valid.any():
            best = chunk[int(np.argmax(valid))]
            return OptimizationResult(
                r=r,
                family=family,
                role=role,
                kappa=float(kappa[best]),
                eta=float(eta[best]),
                objective=float(rho[best]),
                candidates=int(order.size),
                checked=checked,
            )
    raise NoValidCandidateError(f"no valid (kappa, eta) for r={r}, family={family.value}, step={step}")
