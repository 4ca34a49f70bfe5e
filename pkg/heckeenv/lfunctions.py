"""Trace polynomials and local Euler factors of symmetric powers.

With x = 2cos(theta), T_m(x) = sin((m+1)theta)/sin(theta) is the trace of
sym^m at an unramified prime. Writing x^(2j) in the T_(2i) basis,

    x^(2j) = m_j + sum_{i=1..j} c_i T_(2i)(x),

factors the local series F_j = sum_nu lambda(p^nu)^(2j) T^nu as
zeta_p^(m_j) * prod_i L_p(sym^(2i))^(c_i) * H_(j,p), where H_(j,p) has no
linear term.
"""
import cmath
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy

from .errors import OutOfRangeError, SeriesDivisionError, UnsupportedDegreeError, VerificationFailedError
from .hecke_core import CoefficientTable, angle_eigenvalue, prime_local_data

logger = logging.getLogger(__name__)

X = sympy.Symbol("x")
MAX_TRACE_DEGREE = 8
MAX_POWER = 4


# ---------- POLYNOMIALS ----------
@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial in x, coefficients in ascending degree."""

    coefficients: Tuple[int, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(int(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs or (0,))

    @classmethod
    def from_expr(cls, expr: sympy.Expr) -> "IntPolynomial":
        poly = sympy.Poly(sympy.expand(expr), X, domain="ZZ")
        return cls(tuple(reversed([int(c) for c in poly.all_coeffs()])))

    def to_expr(self) -> sympy.Expr:
        return sum(c * X**k for k, c in enumerate(self.coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, np.array(self.coefficients, dtype=np.float64))

    def __str__(self) -> str:
        return str(self.to_expr())


@lru_cache(maxsize=None)
def _trace_expressions() -> Tuple[sympy.Expr, ...]:
    exprs = [sympy.Integer(1), X]
    while len(exprs) <= MAX_TRACE_DEGREE:
        exprs.append(sympy.expand(X * exprs[-1] - exprs[-2]))
    return tuple(exprs)


def trace_polynomial(m: int) -> IntPolynomial:
    """T_m from T_(n+1) = x T_n - T_(n-1), T_0 = 1, T_1 = x; even m only."""
    if m % 2 or not 0 <= m <= MAX_TRACE_DEGREE:
        raise UnsupportedDegreeError(f"trace polynomial index must be even in 0..{MAX_TRACE_DEGREE}, got {m}")
    return IntPolynomial.from_expr(_trace_expressions()[m])


@lru_cache(maxsize=None)
def power_to_trace_basis(j: int) -> Tuple[int, ...]:
    """(c_0, ..., c_j) with x^(2j) = sum_i c_i T_(2i), by back-substitution on the monic T basis."""
    if not 0 <= j <= MAX_POWER:
        raise UnsupportedDegreeError(f"j must lie in 0..{MAX_POWER}, got {j}")
    remainder = sympy.Poly(X ** (2 * j), X, domain="ZZ")
    row = [0] * (j + 1)
    for i in range(j, -1, -1):
        c = int(remainder.coeff_monomial(X ** (2 * i)))
        row[i] = c
        remainder = remainder - c * sympy.Poly(_trace_expressions()[2 * i], X, domain="ZZ")
    if not remainder.is_zero:
        raise VerificationFailedError(f"x^{2 * j} is not in the span of T_0..T_{2 * j}")
    return tuple(row)


@dataclass(frozen=True)
class Multiplicities:
    m: Tuple[int, int, int, int]
    trace_basis: Tuple[Tuple[int, ...], ...]

    def g_exponents(self, j: int) -> Tuple[int, ...]:
        """Exponents of L(sym^2), ..., L(sym^(2j)) in G_j."""
        return self.trace_basis[j][1:]


@lru_cache(maxsize=None)
def multiplicities() -> Multiplicities:
    rows = tuple(power_to_trace_basis(j) for j in range(MAX_POWER + 1))
    return Multiplicities(m=tuple(row[0] for row in rows[1:]), trace_basis=rows)


# ---------- LOCAL SERIES ----------
@dataclass(frozen=True)
class LocalSeries:
    """Truncated power series c_0 + c_1 T + ... + c_depth T^depth in T = p^(-s)."""

    p: Optional[int]
    depth: int
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        if self.coefficients.size != self.depth + 1:
            raise ValueError(f"expected {self.depth + 1} coefficients, got {self.coefficients.size}")

    def __mul__(self, other: "LocalSeries") -> "LocalSeries":
        depth = min(self.depth, other.depth)
        product = np.convolve(self.coefficients[: depth + 1], other.coefficients[: depth + 1])[: depth + 1]
        return LocalSeries(p=self.p, depth=depth, coefficients=product)

    def __pow__(self, exponent: int) -> "LocalSeries":
        result = LocalSeries.one(self.p, self.depth)
        for _ in range(exponent):
            result = result * self
        return result

    def __truediv__(self, divisor: "LocalSeries") -> "LocalSeries":
        """Formal division: q_nu = (f_nu - sum_{k=1..nu} d_k q_(nu-k)) / d_0."""
        lead = divisor.coefficients[0]
        if lead == 0:
            raise SeriesDivisionError("divisor has zero constant term")
        depth = min(self.depth, divisor.depth)
        d = divisor.coefficients
        q = np.zeros(depth + 1)
        for nu in range(depth + 1):
            q[nu] = (self.coefficients[nu] - np.dot(d[1 : nu + 1], q[nu - 1 :: -1][:nu])) / lead
        return LocalSeries(p=self.p, depth=depth, coefficients=q)

    @classmethod
    def one(cls, p: Optional[int], depth: int) -> "LocalSeries":
        coefficients = np.zeros(depth + 1)
        coefficients[0] = 1.0
        return cls(p=p, depth=depth, coefficients=coefficients)

    def coefficient(self, k: int) -> float:
        return float(self.coefficients[k])


def _check_angle(theta: float) -> None:
    if not 0 <= theta <= math.pi:
        raise OutOfRangeError(f"theta must lie in [0, pi], got {theta}")


def sym_local_factor(theta: float, m: int, depth: int, p: Optional[int] = None) -> LocalSeries:
    """prod_{j=0..m} (1 - e^(i(m-2j)theta) T)^(-1), expanded to T^depth."""
    _check_angle(theta)
    if not 0 <= m <= MAX_TRACE_DEGREE:
        raise UnsupportedDegreeError(f"symmetric power must lie in 0..{MAX_TRACE_DEGREE}, got {m}")
    if depth < 1:
        raise OutOfRangeError(f"depth must be >= 1, got {depth}")
    coeffs = [1 + 0j] + [0j] * depth
    for j in range(m + 1):
        root = cmath.exp(1j * (m - 2 * j) * theta)
        for k in range(1, depth + 1):
            coeffs[k] += root * coeffs[k - 1]
    values = np.array(coeffs)
    scale = max(1.0, float(np.max(np.abs(values.real))))
    if float(np.max(np.abs(values.imag))) > 1e-12 * scale:
        raise VerificationFailedError(f"sym^{m} factor at theta={theta} has a non-real coefficient")
    return LocalSeries(p=p, depth=depth, coefficients=values.real.copy())


def zeta_local_factor(depth: int, p: Optional[int] = None) -> LocalSeries:
    return LocalSeries(p=p, depth=depth, coefficients=np.ones(depth + 1))


def power_local_series(theta: float, j: int, depth: int, p: Optional[int] = None) -> LocalSeries:
    """F_(j,p) = sum_nu lambda(p^nu)^(2j) T^nu with lambda(p^nu) from the angle."""
    _check_angle(theta)
    values = np.array([angle_eigenvalue(theta, nu) ** (2 * j) for nu in range(depth + 1)])
    return LocalSeries(p=p, depth=depth, coefficients=values)


def decomposition_divisor(theta: float, j: int, depth: int, p: Optional[int] = None) -> LocalSeries:
    mult = multiplicities()
    divisor = zeta_local_factor(depth, p) ** mult.m[j - 1]
    for i, exponent in enumerate(mult.g_exponents(j), start=1):
        divisor = divisor * sym_local_factor(theta, 2 * i, depth, p) ** exponent
    return divisor


def decomposition_residual(theta: float, j: int, depth: int, p: Optional[int] = None) -> LocalSeries:
    """H_(j,p) = F_(j,p) / (zeta_p^(m_j) G_(j,p)); its linear coefficient vanishes."""
    if not 1 <= j <= MAX_POWER:
        raise UnsupportedDegreeError(f"j must lie in 1..{MAX_POWER}, got {j}")
    if depth < 2:
        raise OutOfRangeError(f"depth must be >= 2, got {depth}")
    return power_local_series(theta, j, depth, p) / decomposition_divisor(theta, j, depth, p)


# ---------- IDENTITIES ----------
def exact_linear_defect(j: int, value: sympy.Expr) -> sympy.Expr:
    """x^(2j) - (m_j + sum_i c_i T_(2i)(x)) at an exact value; zero for every x."""
    row = power_to_trace_basis(j)
    expr = X ** (2 * j) - sum(c * _trace_expressions()[2 * i] for i, c in enumerate(row))
    return sympy.simplify(expr.subs(X, value))


def trace_identity_error(grid_points: int = 1000) -> float:
    """max over theta in [0, pi] and j = 1..4 of |x^(2j) - m_j - sum_i c_i T_(2i)(x)|, x = 2cos(theta)."""
    x = 2 * np.cos(np.linspace(0.0, math.pi, grid_points))
    worst = 0.0
    for j in range(1, MAX_POWER + 1):
        row = power_to_trace_basis(j)
        fitted = sum(c * trace_polynomial(2 * i)(x) for i, c in enumerate(row))
        worst = max(worst, float(np.max(np.abs(x ** (2 * j) - fitted))))
    return worst


def residual_table(table: CoefficientTable, bound: int, depth: int) -> List[Tuple[int, int, int, Sequence[float]]]:
    """(p, j, depth, [c_1, ..., c_depth]) of H_(j,p) for every prime p <= bound."""
    rows = []
    for p in table.primes[table.primes <= bound].tolist():
        theta = prime_local_data(table, p).theta_p
        for j in range(1, MAX_POWER + 1):
            residual = decomposition_residual(theta, j, depth, p)
            rows.append((p, j, depth, residual.coefficients[1:].tolist()))
    logger.debug("residual table: %d rows up to p=%d", len(rows), bound)
    return rows
