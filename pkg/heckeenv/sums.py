"""Summatory functions of the eigenvalues and their desk-scale diagnostics.

Every series is sampled at checkpoints x_1 < x_2 < ... <= X. Segment sums
between consecutive checkpoints use numpy's pairwise summation and are then
accumulated in order, so results are reproducible bit for bit.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import brentq
from scipy.stats import kstest

from . import arith
from .envelope import (
    Family,
    Role,
    envelope_coefficients,
    envelope_prime_values,
    family_for_role,
    rho_from_coefficients,
    rho_minus_closed,
    rho_plus_closed,
)
from .errors import (
    BoundExceededError,
    InsufficientDataError,
    NonPositiveRError,
    NonPositiveSeriesError,
    OutOfRangeError,
)
from .hecke_core import CoefficientTable

logger = logging.getLogger(__name__)

SLACK = 1e-9
SIGN_COUNT_EXPONENT = 1 - 1 / math.sqrt(3)
SATO_TATE_EXPONENT = 2 - 16 / (3 * math.pi)


class SeriesKind(str, Enum):
    power_sum = "power_sum"
    signed_sum = "signed_sum"
    sign_count_plus = "sign_count_plus"
    sign_count_minus = "sign_count_minus"
    envelope_lower = "envelope_lower"
    envelope_upper = "envelope_upper"
    prime_mean = "prime_mean"


@dataclass(frozen=True)
class SumSeries:
    kind: SeriesKind
    checkpoints: np.ndarray
    values: np.ndarray
    r: Optional[float] = None

    def __post_init__(self) -> None:
        if self.checkpoints.size != self.values.size:
            raise ValueError("checkpoints and values differ in length")
        if np.any(np.diff(self.checkpoints) <= 0):
            raise ValueError("checkpoints must be strictly ascending")

    def rows(self) -> List[Tuple[int, float]]:
        return list(zip(self.checkpoints.tolist(), self.values.tolist()))

    def is_nondecreasing(self, slack: float = SLACK) -> bool:
        return bool(np.all(np.diff(self.values) >= -slack * np.maximum(1.0, np.abs(self.values[1:]))))


class FitResult(BaseModel):
    rho_hat: float
    intercept: float
    residual: float = Field(..., ge=0, description="max absolute regression residual")
    points: int


class SandwichReport(BaseModel):
    r: float
    lower_family: Family
    upper_family: Family
    limit: int
    worst_lower_margin: float = Field(..., description="min_n |lambda(n)|^(2r) - lower(n)")
    worst_upper_margin: float = Field(..., description="min_n upper(n) - |lambda(n)|^(2r)")
    prime_power_violations: int
    composite_violations: int
    negative_minorant_primes: int
    summatory_ordered: bool
    checkpoints: List[int]
    lower: List[float]
    power_sum: List[float]
    upper: List[float]
    passed: bool


class SignCountReport(BaseModel):
    checkpoints: List[int]
    a_plus: List[float]
    a_minus: List[float]
    b: List[float]
    n_plus: List[int]
    n_minus: List[int]
    cs_bound_plus: List[float]
    cs_bound_minus: List[float]
    ratio_plus: List[Optional[float]] = Field(..., description="N+(x) (log x)^(1-1/sqrt3) / x")
    ratio_minus: List[Optional[float]]
    st_ratio_plus: List[Optional[float]] = Field(..., description="N+(x) (log x)^(2-16/(3pi)) / x")
    st_ratio_minus: List[Optional[float]]
    abs_ratio_plus: List[Optional[float]] = Field(..., description="A+(x) / (x (log x)^rho^-_(1/2))")
    abs_ratio_minus: List[Optional[float]]
    cauchy_schwarz_holds: bool


class SatoTateReport(BaseModel):
    bound: int
    primes: int
    bins: int
    edges: List[float]
    counts: List[int]
    ks: float
    pvalue: float


# ---------- CHECKPOINTS ----------
def default_checkpoints(bound: int) -> np.ndarray:
    """10^2, 10^2.25, ... up to ``bound``, with ``bound`` itself appended."""
    points = [int(math.floor(10 ** (2 + 0.25 * k))) for k in range(64) if 10 ** (2 + 0.25 * k) <= bound]
    points.append(bound)
    return np.unique(np.array(points, dtype=np.int64))


def _validate(table: CoefficientTable, checkpoints: Sequence[int]) -> np.ndarray:
    x = np.asarray(checkpoints, dtype=np.int64)
    if x.size == 0:
        raise OutOfRangeError("at least one checkpoint is required")
    if x[0] < 1 or np.any(np.diff(x) <= 0):
        raise OutOfRangeError("checkpoints must be positive and strictly ascending")
    if x[-1] > table.bound:
        raise BoundExceededError(f"checkpoint {int(x[-1])} exceeds the table bound {table.bound}")
    return x


def checkpoint_sums(terms: np.ndarray, checkpoints: np.ndarray) -> np.ndarray:
    """Partial sums sum_{n <= x} terms[n - 1] at each checkpoint."""
    starts = np.concatenate([[0], checkpoints[:-1]])
    segments = np.array([terms[a:b].sum() for a, b in zip(starts.tolist(), checkpoints.tolist())])
    return np.cumsum(segments)


def power_terms(table: CoefficientTable, r: float, limit: int) -> np.ndarray:
    """|lambda(n)|^(2r) for n <= limit; at r = 0 a vanishing lambda(n) contributes 0."""
    if r == 0:
        return (table.signs[:limit] != 0).astype(np.float64)
    return np.abs(table.lambdas[:limit]) ** (2 * r)


# ---------- SERIES ----------
def power_sum_series(table: CoefficientTable, r: float, checkpoints: Sequence[int]) -> SumSeries:
    if r < 0:
        raise OutOfRangeError(f"r must be nonnegative, got {r}")
    x = _validate(table, checkpoints)
    values = checkpoint_sums(power_terms(table, r, int(x[-1])), x)
    return SumSeries(kind=SeriesKind.power_sum, checkpoints=x, values=values, r=r)


def signed_sum_series(table: CoefficientTable, checkpoints: Sequence[int]) -> SumSeries:
    x = _validate(table, checkpoints)
    values = checkpoint_sums(table.lambdas[: int(x[-1])], x)
    return SumSeries(kind=SeriesKind.signed_sum, checkpoints=x, values=values)


def sign_counts(table: CoefficientTable, checkpoints: Sequence[int]) -> Tuple[SumSeries, SumSeries, np.ndarray]:
    """N+(x), N-(x) and #{n <= x : tau(n) = 0}, from the exact signs."""
    x = _validate(table, checkpoints)
    signs = table.signs[: int(x[-1])]
    plus = np.cumsum(signs > 0)[x - 1]
    minus = np.cumsum(signs < 0)[x - 1]
    zeros = x - plus - minus
    return (
        SumSeries(kind=SeriesKind.sign_count_plus, checkpoints=x, values=plus.astype(np.float64)),
        SumSeries(kind=SeriesKind.sign_count_minus, checkpoints=x, values=minus.astype(np.float64)),
        zeros,
    )


def envelope_terms(table: CoefficientTable, r: float, role: Role, limit: int) -> np.ndarray:
    """lambda^role(n) for n <= limit: multiplicative, envelope values at primes.

    The minorant vanishes on p^nu for nu >= 2; the majorant equals
    |lambda(p^nu)|^(2r) there.
    """
    if not r > 0:
        raise NonPositiveRError(f"r must be positive, got {r}")
    role = Role(role)
    coeffs = envelope_coefficients(r, family_for_role(r, role))
    lambdas = table.lambdas
    primes = table.primes[table.primes <= limit]
    prime_values = envelope_prime_values(lambdas[primes - 1], coeffs)

    def higher(p: int, nu: int) -> float:
        if role is Role.lower:
            return 0.0
        return abs(float(lambdas[p**nu - 1])) ** (2 * r)

    return arith.multiplicative_sieve(limit, primes, prime_values, higher)[1:]


def envelope_summatory(table: CoefficientTable, r: float, role: Role, checkpoints: Sequence[int]) -> SumSeries:
    x = _validate(table, checkpoints)
    role = Role(role)
    values = checkpoint_sums(envelope_terms(table, r, role, int(x[-1])), x)
    kind = SeriesKind.envelope_lower if role is Role.lower else SeriesKind.envelope_upper
    return SumSeries(kind=kind, checkpoints=x, values=values, r=r)


def _prime_power_mask(limit: int, primes: np.ndarray) -> np.ndarray:
    """mask[n - 1] is True for n = 1 and for prime powers n <= limit."""
    mask = np.zeros(limit, dtype=bool)
    mask[0] = True
    for p in primes.tolist():
        power = p
        while power <= limit:
            mask[power - 1] = True
            if p * p > limit:
                break
            power *= p
    return mask


def sandwich_check(table: CoefficientTable, r: float, checkpoints: Sequence[int]) -> SandwichReport:
    """Termwise and summatory ordering lower(n) <= |lambda(n)|^(2r) <= upper(n).

    Prime powers are always held to the inequality. Composite n are held to it
    only when the minorant is nonnegative at every prime; a sign-changing
    minorant can exceed |lambda(n)|^(2r) at products of primes where it is
    negative, and such n are reported instead.
    """
    x = _validate(table, checkpoints)
    limit = int(x[-1])
    lower = envelope_terms(table, r, Role.lower, limit)
    upper = envelope_terms(table, r, Role.upper, limit)
    target = power_terms(table, r, limit)

    lower_margin = target - lower
    upper_margin = upper - target
    tolerance = SLACK * np.maximum(1.0, target)
    violated = (lower_margin < -tolerance) | (upper_margin < -tolerance)
    prime_powers = _prime_power_mask(limit, table.primes[table.primes <= limit])
    prime_power_violations = int(np.count_nonzero(violated & prime_powers))
    composite_violations = int(np.count_nonzero(violated & ~prime_powers))

    primes = table.primes[table.primes <= limit]
    negative_primes = int(np.count_nonzero(lower[primes - 1] < 0))

    lower_sums = checkpoint_sums(lower, x)
    target_sums = checkpoint_sums(target, x)
    upper_sums = checkpoint_sums(upper, x)
    scale = SLACK * np.maximum(1.0, target_sums)
    ordered = bool(np.all(lower_sums <= target_sums + scale) and np.all(target_sums <= upper_sums + scale))

    if composite_violations and negative_primes:
        logger.warning(
            "r=%g: %d composite n exceed the sign-changing minorant (%d primes with negative minorant)",
            r,
            composite_violations,
            negative_primes,
        )
    passed = prime_power_violations == 0 and ordered and (negative_primes > 0 or composite_violations == 0)
    return SandwichReport(
        r=r,
        lower_family=family_for_role(r, Role.lower),
        upper_family=family_for_role(r, Role.upper),
        limit=limit,
        worst_lower_margin=float(lower_margin.min()),
        worst_upper_margin=float(upper_margin.min()),
        prime_power_violations=prime_power_violations,
        composite_violations=composite_violations,
        negative_minorant_primes=negative_primes,
        summatory_ordered=ordered,
        checkpoints=x.tolist(),
        lower=lower_sums.tolist(),
        power_sum=target_sums.tolist(),
        upper=upper_sums.tolist(),
        passed=passed,
    )


# ---------- GROWTH DIAGNOSTICS ----------
def fit_exponent(series: SumSeries, x_min: float = 100, x_max: Optional[float] = None) -> FitResult:
    """Least squares log(S(x)/x) = rho log log x + c over checkpoints in [x_min, x_max]."""
    x = series.checkpoints.astype(np.float64)
    keep = x >= x_min
    if x_max is not None:
        keep &= x <= x_max
    x, values = x[keep], series.values[keep]
    if x.size < 5:
        raise InsufficientDataError(f"need at least 5 checkpoints with x >= {x_min}, got {x.size}")
    if np.any(values <= 0):
        raise NonPositiveSeriesError("series must be positive to fit log(S(x)/x)")
    loglog = np.log(np.log(x))
    y = np.log(values / x)
    slope, intercept = np.polyfit(loglog, y, 1)
    residual = float(np.max(np.abs(y - (slope * loglog + intercept))))
    return FitResult(rho_hat=float(slope), intercept=float(intercept), residual=residual, points=int(x.size))


def theorem2_ratio(table: CoefficientTable, checkpoints: Sequence[int]) -> np.ndarray:
    """|S(x)| / (x^(1/3) (log x)^rho^+_(1/2)) for each checkpoint x >= 2."""
    x = _validate(table, checkpoints)
    if x[0] < 2:
        raise OutOfRangeError("the ratio needs x >= 2")
    signed = signed_sum_series(table, x).values
    xf = x.astype(np.float64)
    return np.abs(signed) / (np.cbrt(xf) * np.log(xf) ** rho_plus_closed(0.5))


def _normalized(numerator: np.ndarray, x: np.ndarray, exponent: float, divide: bool) -> List[Optional[float]]:
    out: List[Optional[float]] = []
    for value, point in zip(numerator.tolist(), x.tolist()):
        if point < 2:
            out.append(None)
            continue
        log_x = math.log(point)
        out.append(value / (point * log_x**exponent) if divide else value * log_x**exponent / point)
    return out


def corollary_diagnostic(table: CoefficientTable, checkpoints: Sequence[int]) -> SignCountReport:
    """Cauchy-Schwarz: (sum_{lambda>0} |lambda|)^2 <= N+(x) * sum |lambda|^2, likewise for N-."""
    x = _validate(table, checkpoints)
    limit = int(x[-1])
    lam = table.lambdas[:limit]
    signs = table.signs[:limit]
    a_plus = checkpoint_sums(np.where(signs > 0, np.abs(lam), 0.0), x)
    a_minus = checkpoint_sums(np.where(signs < 0, np.abs(lam), 0.0), x)
    b = checkpoint_sums(lam * lam, x)
    n_plus, n_minus, _ = sign_counts(table, x)
    bound_plus, bound_minus = a_plus**2 / b, a_minus**2 / b
    holds = bool(
        np.all(bound_plus <= n_plus.values + SLACK * np.maximum(1.0, n_plus.values))
        and np.all(bound_minus <= n_minus.values + SLACK * np.maximum(1.0, n_minus.values))
    )
    rho_half = rho_minus_closed(0.5)
    return SignCountReport(
        checkpoints=x.tolist(),
        a_plus=a_plus.tolist(),
        a_minus=a_minus.tolist(),
        b=b.tolist(),
        n_plus=n_plus.values.astype(np.int64).tolist(),
        n_minus=n_minus.values.astype(np.int64).tolist(),
        cs_bound_plus=bound_plus.tolist(),
        cs_bound_minus=bound_minus.tolist(),
        ratio_plus=_normalized(n_plus.values, x, SIGN_COUNT_EXPONENT, divide=False),
        ratio_minus=_normalized(n_minus.values, x, SIGN_COUNT_EXPONENT, divide=False),
        st_ratio_plus=_normalized(n_plus.values, x, SATO_TATE_EXPONENT, divide=False),
        st_ratio_minus=_normalized(n_minus.values, x, SATO_TATE_EXPONENT, divide=False),
        abs_ratio_plus=_normalized(a_plus, x, rho_half, divide=True),
        abs_ratio_minus=_normalized(a_minus, x, rho_half, divide=True),
        cauchy_schwarz_holds=holds,
    )


def prime_mean_series(table: CoefficientTable, r: float, role: Role, checkpoints: Sequence[int]) -> SumSeries:
    """sum_{p <= x} lambda^role(p)/p - (rho + 1) log log x; expected to settle to a constant."""
    x = _validate(table, checkpoints)
    if x[0] < 2:
        raise OutOfRangeError("the prime mean needs x >= 2")
    coeffs = envelope_coefficients(r, family_for_role(r, Role(role)))
    limit = int(x[-1])
    terms = np.zeros(limit)
    primes = table.primes[table.primes <= limit]
    terms[primes - 1] = envelope_prime_values(table.lambdas[primes - 1], coeffs) / primes
    xf = x.astype(np.float64)
    values = checkpoint_sums(terms, x) - (rho_from_coefficients(coeffs) + 1) * np.log(np.log(xf))
    return SumSeries(kind=SeriesKind.prime_mean, checkpoints=x, values=values, r=r)


# ---------- SATO-TATE ----------
def sato_tate_cdf(theta: np.ndarray) -> np.ndarray:
    """F(theta) = (theta - sin(theta)cos(theta))/pi, the law (2/pi) sin^2 on [0, pi]."""
    theta = np.asarray(theta, dtype=np.float64)
    return (theta - np.sin(theta) * np.cos(theta)) / math.pi


def sato_tate_quantile(probability: float) -> float:
    if not 0 <= probability <= 1:
        raise OutOfRangeError(f"probability must lie in [0, 1], got {probability}")
    if probability in (0, 1):
        return math.pi * probability
    return brentq(lambda t: float(sato_tate_cdf(t)) - probability, 0.0, math.pi, xtol=1e-15)


def ks_distance(angles: np.ndarray) -> Tuple[float, float]:
    result = kstest(np.asarray(angles, dtype=np.float64), sato_tate_cdf)
    return float(result.statistic), float(result.pvalue)


def prime_angles(table: CoefficientTable, bound: int) -> np.ndarray:
    primes = table.primes[table.primes <= bound]
    return np.arccos(np.clip(table.lambdas[primes - 1] / 2, -1.0, 1.0))


def sato_tate_stats(table: CoefficientTable, bound: int, bins: int) -> SatoTateReport:
    if bins < 10:
        raise OutOfRangeError(f"bins must be >= 10, got {bins}")
    if bound > table.bound:
        raise BoundExceededError(f"X={bound} exceeds the table bound {table.bound}")
    angles = prime_angles(table, bound)
    if angles.size == 0:
        raise InsufficientDataError(f"no primes up to {bound}")
    counts, edges = np.histogram(angles, bins=bins, range=(0.0, math.pi))
    ks, pvalue = ks_distance(angles)
    logger.info("Sato-Tate: %d primes up to %d, KS distance %.4f", angles.size, bound, ks)
    return SatoTateReport(
        bound=bound,
        primes=int(angles.size),
        bins=bins,
        edges=edges.tolist(),
        counts=counts.tolist(),
        ks=ks,
        pvalue=pvalue,
    )
