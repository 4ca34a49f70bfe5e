import math

import numpy as np
import pytest
from pydantic import ValidationError

from heckeenv import hecke_core
from heckeenv.errors import (
    BadMagicError,
    BadVersionError,
    BoundExceededError,
    ChecksumMismatchError,
    NotPrimeError,
    OutOfRangeError,
    TruncatedFileError,
    UnreachablePrimeError,
)
from heckeenv.hecke_core import Backend, FormSpec

from .conftest import KNOWN_TAU


def test_form_spec_is_fixed():
    assert FormSpec().weight == 12 and FormSpec().level == 1
    with pytest.raises(ValidationError):
        FormSpec(weight=10)
    with pytest.raises(ValidationError):
        FormSpec(level=2)


def test_eta_cube_seed():
    # (1 - q)^3 (1 - q^2)^3 ... = 1 - 3q + 5q^3 - 7q^6 + 9q^10 - ...
    assert hecke_core.eta_cube_seed(11).tolist() == [1, -3, 0, 5, 0, 0, -7, 0, 0, 0, 9]


@pytest.mark.parametrize("backend", [Backend.fast, Backend.oracle])
def test_known_tau_values(backend):
    table = hecke_core.build_coefficient_table(len(KNOWN_TAU), backend)
    assert [table.tau(n) for n in range(1, len(KNOWN_TAU) + 1)] == KNOWN_TAU
    assert table.backend_tag is backend


def test_single_coefficient_table():
    assert hecke_core.build_coefficient_table(1, Backend.fast).tau(1) == 1


def test_fast_matches_oracle(oracle_table, fast_table):
    head = fast_table.raw[: oracle_table.bound]
    assert all(a == b for a, b in zip(head.tolist(), oracle_table.raw.tolist()))


def test_tau_23_and_ramanujan_congruence(fast_table):
    assert fast_table.tau(23) == 18643272
    # tau(n) = sigma_11(n) mod 691
    for n in range(1, 200):
        sigma = sum(d**11 for d in range(1, n + 1) if n % d == 0)
        assert (fast_table.tau(n) - sigma) % 691 == 0


@pytest.mark.parametrize(
    "bound,backend",
    [(0, Backend.fast), (hecke_core.FAST_CAP + 1, Backend.fast), (hecke_core.ORACLE_CAP + 1, Backend.oracle)],
)
def test_bound_limits(bound, backend):
    with pytest.raises(BoundExceededError):
        hecke_core.build_coefficient_table(bound, backend)


def test_table_is_read_only(oracle_table):
    with pytest.raises(ValueError):
        oracle_table.raw[0] = 2
    with pytest.raises(BoundExceededError):
        oracle_table.tau(oracle_table.bound + 1)


def test_eigenvalue_normalization(oracle_table):
    assert hecke_core.eigenvalue(oracle_table, 1) == 1.0
    assert hecke_core.eigenvalue(oracle_table, 2) == pytest.approx(-24 / 2**5.5, rel=1e-15)
    assert hecke_core.eigenvalue(oracle_table, 6) == pytest.approx(
        hecke_core.eigenvalue(oracle_table, 2) * hecke_core.eigenvalue(oracle_table, 3), rel=1e-12
    )


def test_eigenvalue_beyond_bound_uses_recurrence(oracle_table):
    small = hecke_core.build_coefficient_table(100, Backend.oracle)
    assert hecke_core.prime_power_eigenvalue(small, 2, 10) == pytest.approx(
        hecke_core.eigenvalue(oracle_table, 1024), abs=1e-9
    )
    # 3 * 7 * 97 > 100 but every prime factor is stored
    assert hecke_core.eigenvalue(small, 2037) == pytest.approx(hecke_core.eigenvalue(oracle_table, 2037), abs=1e-9)
    with pytest.raises(UnreachablePrimeError):
        hecke_core.eigenvalue(small, 2 * 101)
    with pytest.raises(OutOfRangeError):
        hecke_core.eigenvalue(small, 0)


def test_prime_local_data(oracle_table):
    data = hecke_core.prime_local_data(oracle_table, 2)
    assert data.lambda_p == pytest.approx(2 * math.cos(data.theta_p), abs=1e-12)
    assert 0 <= data.theta_p <= math.pi
    assert (data.alpha + data.beta).real == pytest.approx(data.lambda_p, abs=1e-12)
    assert data.alpha * data.beta == pytest.approx(1.0)
    with pytest.raises(NotPrimeError):
        hecke_core.prime_local_data(oracle_table, 9)
    for not_prime in (0, 1):
        with pytest.raises(NotPrimeError):
            hecke_core.prime_local_data(oracle_table, not_prime)
    with pytest.raises(BoundExceededError):
        hecke_core.prime_local_data(oracle_table, 2003)


def test_angle_eigenvalue_limits():
    assert hecke_core.angle_eigenvalue(0.0, 4) == 5.0
    assert hecke_core.angle_eigenvalue(math.pi, 3) == -4.0
    assert hecke_core.angle_eigenvalue(math.pi, 4) == 5.0
    theta = 1.1
    assert hecke_core.angle_eigenvalue(theta, 2) == pytest.approx((2 * math.cos(theta)) ** 2 - 1)


def test_hecke_identities(fast_table):
    report = hecke_core.check_hecke_identities(fast_table, 141)
    assert report.hecke_relation_max <= 1e-9
    assert report.deligne_excess_max <= 1e-9
    assert report.angle_recurrence_max <= 1e-9
    with pytest.raises(BoundExceededError):
        hecke_core.check_hecke_identities(fast_table, 142)


def test_deligne_exact(fast_table):
    assert hecke_core.check_deligne_exact(fast_table) is None


def test_signs_and_lambdas(oracle_table):
    assert oracle_table.signs[:4].tolist() == [1, -1, 1, -1]
    assert np.all(np.abs(oracle_table.lambdas[oracle_table.primes - 1]) <= 2)


# ---------- cache ----------
def test_cache_round_trip(tmp_path, oracle_table):
    path = tmp_path / "tau.bin"
    hecke_core.write_cache(oracle_table, path)
    restored = hecke_core.read_cache(path)
    assert restored.bound == oracle_table.bound
    assert restored.same_coefficients(oracle_table)
    assert path.stat().st_size == 24 + 16 * oracle_table.bound + 8


def _corrupt(path, offset, value):
    blob = bytearray(path.read_bytes())
    blob[offset] = value
    path.write_bytes(bytes(blob))


def test_cache_detects_corruption(tmp_path, oracle_table):
    path = tmp_path / "tau.bin"
    hecke_core.write_cache(oracle_table, path)
    original = path.read_bytes()

    _corrupt(path, 24 + 5, original[24 + 5] ^ 0xFF)
    with pytest.raises(ChecksumMismatchError):
        hecke_core.read_cache(path)

    path.write_bytes(original)
    _corrupt(path, 0, ord("X"))
    with pytest.raises(BadMagicError):
        hecke_core.read_cache(path)

    path.write_bytes(original)
    _corrupt(path, 4, 2)
    with pytest.raises(BadVersionError):
        hecke_core.read_cache(path)

    path.write_bytes(original[:-3])
    with pytest.raises(TruncatedFileError):
        hecke_core.read_cache(path)

    path.write_bytes(original[:10])
    with pytest.raises(TruncatedFileError):
        hecke_core.read_cache(path)
