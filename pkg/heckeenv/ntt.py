"""Exact truncated series products via multi-prime number-theoretic transforms.

Every prime P satisfies 2^23 | P - 1 and P < 2^31, so residue products fit a
uint64 lane and transforms up to length 2^23 exist. Five primes give a CRT
modulus of about 2^150, more than twice the largest |tau(n)| for n <= 3e6.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import List, Sequence

import numpy as np
import sympy

from .errors import CoefficientOverflowError

logger = logging.getLogger(__name__)

CONVOLUTION_PRIMES = (
    2013265921,  # 15 * 2^27 + 1
    1811939329,  # 27 * 2^26 + 1
    469762049,  # 7 * 2^26 + 1
    998244353,  # 119 * 2^23 + 1
    754974721,  # 45 * 2^24 + 1
)
MAX_LOG_LENGTH = 23
INT128_BOUND = 1 << 127


@lru_cache(maxsize=None)
def primitive_root(p: int) -> int:
    """Smallest generator of (Z/pZ)^*."""
    if not sympy.isprime(p):
        raise ValueError(f"NTT modulus {p} is not prime")
    return int(sympy.primitive_root(p))


@lru_cache(maxsize=None)
def _bit_reversal(log_n: int) -> np.ndarray:
    idx = np.arange(1 << log_n, dtype=np.int64)
    rev = np.zeros_like(idx)
    for bit in range(log_n):
        rev |= ((idx >> bit) & 1) << (log_n - 1 - bit)
    return rev


def _root_powers(omega: int, count: int, p: int) -> np.ndarray:
    """omega^k mod p for 0 <= k < count (count a power of two), by doubling."""
    powers = np.ones(1, dtype=np.uint64)
    step = omega
    while powers.size < count:
        powers = np.concatenate([powers, powers * np.uint64(step) % np.uint64(p)])
        step = step * step % p
    return powers[:count]


def transform(values: np.ndarray, p: int, inverse: bool = False) -> np.ndarray:
    """Iterative radix-2 NTT over Z/pZ; ``values.size`` must be a power of two."""
    n = values.size
    log_n = n.bit_length() - 1
    if 1 << log_n != n or log_n > MAX_LOG_LENGTH:
        raise ValueError(f"transform length {n} is not a supported power of two")
    omega = pow(primitive_root(p), (p - 1) // n, p)
    if inverse:
        omega = pow(omega, p - 2, p)
    table = _root_powers(omega, max(n // 2, 1), p)
    a = values[_bit_reversal(log_n)].astype(np.uint64)
    modulus = np.uint64(p)
    half = 1
    while half < n:
        blocks = a.reshape(-1, 2 * half)
        twiddles = table[:: n // (2 * half)][:half]
        u = blocks[:, :half].copy()
        v = blocks[:, half:] * twiddles % modulus
        blocks[:, :half] = (u + v) % modulus
        blocks[:, half:] = (u + modulus - v) % modulus
        half *= 2
    if inverse:
        a = a * np.uint64(pow(n, p - 2, p)) % modulus
    return a


def square_truncated(residues: np.ndarray, p: int, length: int) -> np.ndarray:
    """(sum r_i q^i)^2 mod (p, q^length)."""
    size = 1
    while size < 2 * length - 1:
        size *= 2
    padded = np.zeros(size, dtype=np.uint64)
    padded[:length] = residues[:length]
    spectrum = transform(padded, p)
    spectrum = spectrum * spectrum % np.uint64(p)
    return transform(spectrum, p, inverse=True)[:length]


def reduce_signed(coefficients: np.ndarray, p: int) -> np.ndarray:
    return np.mod(coefficients.astype(np.int64), p).astype(np.uint64)


def crt_reconstruct(residues: Sequence[np.ndarray], primes: Sequence[int]) -> np.ndarray:
    """Garner mixed-radix CRT, centered into (-M/2, M/2]; object array of Python ints."""
    digits: List[np.ndarray] = []
    for i, p in enumerate(primes):
        modulus = np.uint64(p)
        x = residues[i].astype(np.uint64) % modulus
        for j, digit in enumerate(digits):
            inverse = np.uint64(pow(primes[j], p - 2, p))
            x = (x + modulus - digit % modulus) % modulus * inverse % modulus
        digits.append(x)
    value = digits[-1].astype(object)
    for digit, p in zip(reversed(digits[:-1]), reversed(primes[:-1])):
        value = value * p + digit.astype(object)
    modulus_product = 1
    for p in primes:
        modulus_product *= p
    return np.where(value > modulus_product // 2, value - modulus_product, value)


def check_int128(values: np.ndarray) -> None:
    if values.size and (np.any(values >= INT128_BOUND) or np.any(values < -INT128_BOUND)):
        raise CoefficientOverflowError("CRT-reconstructed coefficient outside the signed 128-bit range")


def power_of_two_power(
    seed: np.ndarray,
    squarings: int,
    length: int,
    threads: int,
    primes: Sequence[int] = CONVOLUTION_PRIMES,
) -> np.ndarray:
    """seed^(2^squarings) truncated at q^length, exact, as an object array of ints."""

    def per_prime(p: int) -> np.ndarray:
        residues = reduce_signed(seed[:length], p)
        for step in range(squarings):
            residues = square_truncated(residues, p, length)
            logger.debug("prime %d: squaring %d/%d done", p, step + 1, squarings)
        return residues

    with ThreadPoolExecutor(max_workers=max(1, min(threads, len(primes)))) as pool:
        residues = list(pool.map(per_prime, primes))
    values = crt_reconstruct(residues, primes)
    check_int128(values)
    return values
