"""Elementary sieves shared by the coefficient table and the summatory functions."""
from math import isqrt
from typing import Callable, List, Tuple

import numpy as np


def smallest_prime_factor(limit: int) -> np.ndarray:
    """spf[n] for 0 <= n <= limit; spf[0] = 0 and spf[1] = 1."""
    spf = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, isqrt(limit) + 1):
        if spf[p] != p:
            continue
        block = spf[p * p :: p]
        mask = block == np.arange(p * p, limit + 1, p, dtype=np.int64)
        block[mask] = p
    return spf


def primes_from_spf(spf: np.ndarray) -> np.ndarray:
    n = np.arange(spf.size, dtype=np.int64)
    return n[(n >= 2) & (spf == n)]


def multiplicative_sieve(
    limit: int,
    primes: np.ndarray,
    prime_values: np.ndarray,
    higher_power: Callable[[int, int], float],
    dtype=np.float64,
) -> np.ndarray:
    """Values of the multiplicative g on 0..limit (index 0 is set to 0).

    ``prime_values[i]`` is g(primes[i]); ``higher_power(p, nu)`` gives g(p^nu)
    for nu >= 2, needed only for p <= sqrt(limit).
    """
    values = np.ones(limit + 1, dtype=dtype)
    values[0] = 0
    root = isqrt(limit)
    for p, g_p in zip(primes.tolist(), prime_values.tolist()):
        if p > root:
            values[p::p] *= g_p
            continue
        power, nu = p, 1
        while power <= limit:
            idx = np.arange(power, limit + 1, power, dtype=np.int64)
            idx = idx[idx % (power * p) != 0]
            values[idx] *= g_p if nu == 1 else higher_power(p, nu)
            power *= p
            nu += 1
    return values


def divisor_counts(limit: int, primes: np.ndarray) -> np.ndarray:
    return multiplicative_sieve(
        limit,
        primes,
        np.full(primes.size, 2, dtype=np.int64),
        lambda p, nu: nu + 1,
        dtype=np.int64,
    )


def factorize(n: int, primes: np.ndarray) -> Tuple[List[Tuple[int, int]], int]:
    """Trial division of n by ``primes``.

    Returns the (p, nu) pairs found and the unfactored cofactor; the cofactor
    is 1 or a number whose prime factors all exceed the largest trial prime.
    """
    factors: List[Tuple[int, int]] = []
    for p in primes.tolist():
        if p * p > n:
            break
        if n % p:
            continue
        nu = 0
        while n % p == 0:
            n //= p
            nu += 1
        factors.append((p, nu))
    if n > 1 and primes.size and n <= int(primes[-1]):
        factors.append((n, 1))
        n = 1
    return factors, n
