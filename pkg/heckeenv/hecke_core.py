"""Exact Fourier coefficients of the discriminant form and its Hecke eigenvalues.

tau(n) is the coefficient of q^n in q * prod_{m>=1} (1 - q^m)^24. The
normalized eigenvalue is lambda(n) = tau(n) / n^(11/2).
"""
import cmath
import hashlib
import logging
import math
import struct
import time
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import arith, ntt
from .errors import (
    BadMagicError,
    BadVersionError,
    BoundExceededError,
    CacheFormatError,
    ChecksumMismatchError,
    DeligneViolationError,
    NotPrimeError,
    OutOfRangeError,
    TruncatedFileError,
    UnreachablePrimeError,
)
from .settings import thread_count

logger = logging.getLogger(__name__)

FAST_CAP = 3_000_000
ORACLE_CAP = 10_000
HALF_WEIGHT = 5.5  # (k - 1) / 2 for k = 12

CACHE_MAGIC = b"TAUC"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIIIQ")
_RECORD_SIZE = 16
_CHECKSUM_SIZE = 8


# ---------- DATA MODELS ----------
class Backend(str, Enum):
    fast = "fast"
    oracle = "oracle"


BACKEND_CAPS = {Backend.fast: FAST_CAP, Backend.oracle: ORACLE_CAP}


class FormSpec(BaseModel):
    """Weight and level of the newform; only the discriminant form (12, 1) is supported."""

    model_config = ConfigDict(frozen=True)

    weight: int = Field(12, description="Even weight k.")
    level: int = Field(1, description="Level N.")

    @field_validator("weight")
    @classmethod
    def _weight_is_twelve(cls, value: int) -> int:
        if value != 12:
            raise ValueError(f"only weight 12 is supported, got {value}")
        return value

    @field_validator("level")
    @classmethod
    def _level_is_one(cls, value: int) -> int:
        if value != 1:
            raise ValueError(f"only level 1 is supported, got {value}")
        return value


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """tau(1..bound) as exact Python ints; ``raw[n - 1] = tau(n)``.

    Immutable once built. The sieves and the float eigenvalues are derived
    lazily and cached on first use.
    """

    spec: FormSpec
    bound: int
    raw: np.ndarray
    backend_tag: Backend

    def __post_init__(self) -> None:
        if self.raw.size != self.bound:
            raise ValueError(f"expected {self.bound} coefficients, got {self.raw.size}")
        if self.bound and self.raw[0] != 1:
            raise ValueError("tau(1) must be 1")
        self.raw.flags.writeable = False

    def tau(self, n: int) -> int:
        if not 1 <= n <= self.bound:
            raise BoundExceededError(f"n={n} outside stored range 1..{self.bound}")
        return int(self.raw[n - 1])

    def same_coefficients(self, other: "CoefficientTable") -> bool:
        return self.bound == other.bound and all(a == b for a, b in zip(self.raw.tolist(), other.raw.tolist()))

    @cached_property
    def spf(self) -> np.ndarray:
        return arith.smallest_prime_factor(self.bound)

    @cached_property
    def primes(self) -> np.ndarray:
        return arith.primes_from_spf(self.spf)

    @cached_property
    def divisor_counts(self) -> np.ndarray:
        return arith.divisor_counts(self.bound, self.primes)

    @cached_property
    def lambdas(self) -> np.ndarray:
        """lambda(n) for n = 1..bound (index n - 1), double precision."""
        n = np.arange(1, self.bound + 1, dtype=np.float64)
        return self.raw.astype(np.float64) / n**HALF_WEIGHT

    @cached_property
    def signs(self) -> np.ndarray:
        """Exact sign of tau(n) as int8, index n - 1."""
        positive = np.asarray(self.raw > 0, dtype=bool)
        negative = np.asarray(self.raw < 0, dtype=bool)
        return positive.astype(np.int8) - negative.astype(np.int8)


@dataclass(frozen=True)
class PrimeLocalData:
    p: int
    lambda_p: float
    theta_p: float
    alpha: complex
    beta: complex


class HeckeReport(BaseModel):
    bound: int
    hecke_relation_max: float = Field(..., description="max |lambda(m)lambda(n) - sum_d lambda(mn/d^2)|")
    deligne_excess_max: float = Field(..., description="max |lambda(n)| - d(n)")
    angle_recurrence_max: float = Field(..., description="max |lambda(p^nu) - sin((nu+1)theta)/sin theta|")


# ---------- TABLE CONSTRUCTION ----------
def eta_cube_seed(length: int) -> np.ndarray:
    """prod (1 - q^m)^3 truncated at q^length, via the Jacobi identity."""
    seed = np.zeros(length, dtype=np.int64)
    k = 0
    while k * (k + 1) // 2 < length:
        seed[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return seed


def _fast_coefficients(bound: int, threads: int) -> np.ndarray:
    return ntt.power_of_two_power(eta_cube_seed(bound), 3, bound, threads)


def _oracle_coefficients(bound: int) -> np.ndarray:
    """Direct expansion of prod (1 - q^m)^24 in Python integers, one factor at a time."""
    signed_binomials = [(-1) ** k * math.comb(24, k) for k in range(25)]
    series = np.zeros(bound, dtype=object)
    series[0] = 1
    for m in range(1, bound):
        previous = series.copy()
        for k in range(1, 25):
            shift = m * k
            if shift >= bound:
                break
            series[shift:] = series[shift:] + signed_binomials[k] * previous[: bound - shift]
    return series


def build_coefficient_table(
    bound: int, backend: Backend = Backend.fast, threads: Optional[int] = None
) -> CoefficientTable:
    backend = Backend(backend)
    cap = BACKEND_CAPS[backend]
    if not 1 <= bound <= cap:
        raise BoundExceededError(f"X={bound} outside 1..{cap} for the {backend.value} backend")
    logger.info("Building tau table: X=%d, backend=%s", bound, backend.value)
    started = time.perf_counter()
    if backend is Backend.fast:
        raw = _fast_coefficients(bound, threads or thread_count())
    else:
        raw = _oracle_coefficients(bound)
    ntt.check_int128(raw)
    table = CoefficientTable(spec=FormSpec(), bound=bound, raw=raw, backend_tag=backend)
    logger.info("tau table ready in %.2fs", time.perf_counter() - started)
    return table


# ---------- EIGENVALUES ----------
def prime_power_eigenvalue(table: CoefficientTable, p: int, nu: int) -> float:
    """lambda(p^nu): exact when p^nu <= X, else lambda(p^(k+1)) = lambda(p)lambda(p^k) - lambda(p^(k-1))."""
    if p ** nu <= table.bound:
        return float(table.lambdas[p**nu - 1])
    if p > table.bound:
        raise UnreachablePrimeError(f"prime {p} exceeds the table bound {table.bound}")
    lam_p = float(table.lambdas[p - 1])
    previous, current, k = 1.0, lam_p, 1
    while k < nu:
        if p ** (k + 1) <= table.bound:
            previous, current = current, float(table.lambdas[p ** (k + 1) - 1])
        else:
            previous, current = current, lam_p * current - previous
        k += 1
    return current


def eigenvalue(table: CoefficientTable, n: int) -> float:
    if n < 1:
        raise OutOfRangeError(f"n must be positive, got {n}")
    if n <= table.bound:
        return float(table.lambdas[n - 1])
    factors, cofactor = arith.factorize(n, table.primes)
    if cofactor > 1:
        raise UnreachablePrimeError(f"{n} has a prime factor above the table bound {table.bound}")
    value = 1.0
    for p, nu in factors:
        value *= prime_power_eigenvalue(table, p, nu)
    return value


def prime_local_data(table: CoefficientTable, p: int) -> PrimeLocalData:
    if p > table.bound:
        raise BoundExceededError(f"p={p} exceeds the table bound {table.bound}")
    if p < 2 or table.spf[p] != p:
        raise NotPrimeError(f"{p} is not prime")
    lam = float(table.lambdas[p - 1])
    if abs(lam) > 2 + 1e-9:
        raise DeligneViolationError(f"|lambda({p})| = {abs(lam)!r} > 2")
    theta = math.acos(min(1.0, max(-1.0, lam / 2)))
    return PrimeLocalData(
        p=p, lambda_p=lam, theta_p=theta, alpha=cmath.exp(1j * theta), beta=cmath.exp(-1j * theta)
    )


def angle_eigenvalue(theta: float, nu: int) -> float:
    """sin((nu+1)theta)/sin(theta), with the limits nu+1 at 0 and (-1)^nu (nu+1) at pi."""
    s = math.sin(theta)
    if abs(s) < 1e-12:
        return float(nu + 1) if math.cos(theta) > 0 else float((-1) ** nu * (nu + 1))
    return math.sin((nu + 1) * theta) / s


# ---------- PROPERTY CHECKS ----------
def check_hecke_identities(table: CoefficientTable, limit: int) -> HeckeReport:
    if limit < 1 or limit * limit > table.bound:
        raise BoundExceededError(f"M={limit} needs M^2 <= X={table.bound}")
    lam = table.lambdas
    m = np.arange(1, limit + 1, dtype=np.int64)[:, None]
    n = np.arange(1, limit + 1, dtype=np.int64)[None, :]
    m, n = np.broadcast_arrays(m, n)
    rhs = np.zeros(m.shape)
    for d in range(1, limit + 1):
        mask = (m % d == 0) & (n % d == 0)
        rhs[mask] += lam[(m[mask] * n[mask]) // (d * d) - 1]
    lhs = lam[m - 1] * lam[n - 1]
    hecke = float(np.max(np.abs(lhs - rhs)))

    head = np.arange(limit)
    deligne = float(np.max(np.abs(lam[head]) - table.divisor_counts[1 : limit + 1]))

    angle = 0.0
    for p in table.primes[table.primes <= limit].tolist():
        theta = prime_local_data(table, p).theta_p
        if theta < 1e-6 or theta > math.pi - 1e-6:
            continue
        for nu in range(1, 7):
            angle = max(angle, abs(prime_power_eigenvalue(table, p, nu) - angle_eigenvalue(theta, nu)))
    return HeckeReport(
        bound=limit, hecke_relation_max=hecke, deligne_excess_max=deligne, angle_recurrence_max=angle
    )


def check_deligne_exact(table: CoefficientTable) -> Optional[int]:
    """First n with tau(n)^2 > d(n)^2 n^11 (exact integers), or None."""
    n = np.arange(1, table.bound + 1, dtype=object)
    d = table.divisor_counts[1:].astype(object)
    violations = np.flatnonzero(np.asarray(table.raw * table.raw > d * d * n**11, dtype=bool))
    return int(violations[0]) + 1 if violations.size else None


# ---------- BINARY CACHE ----------
def write_cache(table: CoefficientTable, path: Path) -> None:
    records = b"".join(int(v).to_bytes(_RECORD_SIZE, "little", signed=True) for v in table.raw.tolist())
    header = _HEADER.pack(CACHE_MAGIC, CACHE_VERSION, table.spec.weight, table.spec.level, table.bound)
    checksum = hashlib.blake2b(records, digest_size=_CHECKSUM_SIZE).digest()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + records + checksum)
    logger.info("Wrote %d records to %s", table.bound, path)


def read_cache(path: Path) -> CoefficientTable:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise TruncatedFileError(f"{path}: shorter than the {_HEADER.size}-byte header")
    magic, version, weight, level, bound = _HEADER.unpack_from(blob)
    if magic != CACHE_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != CACHE_VERSION:
        raise BadVersionError(f"{path}: unsupported format version {version}")
    expected = _HEADER.size + bound * _RECORD_SIZE + _CHECKSUM_SIZE
    if len(blob) != expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, found {len(blob)}")
    records = blob[_HEADER.size : expected - _CHECKSUM_SIZE]
    if hashlib.blake2b(records, digest_size=_CHECKSUM_SIZE).digest() != blob[expected - _CHECKSUM_SIZE :]:
        raise ChecksumMismatchError(f"{path}: checksum mismatch")
    try:
        spec = FormSpec(weight=weight, level=level)
    except ValueError as exc:
        raise CacheFormatError(f"{path}: {exc}") from exc
    words = np.frombuffer(records, dtype="<u8").reshape(-1, 2)
    high = words[:, 1].view("<i8").astype(object)
    raw = high * (1 << 64) + words[:, 0].astype(object)
    if bound and raw[0] != 1:
        raise CacheFormatError(f"{path}: first record is not tau(1) = 1")
    return CoefficientTable(spec=spec, bound=int(bound), raw=raw, backend_tag=Backend.fast)
