import pytest

from heckeenv.hecke_core import Backend, build_coefficient_table

# tau(1..12)
KNOWN_TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920, 534612, -370944]


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale acceptance checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def oracle_table():
    return build_coefficient_table(2000, Backend.oracle)


@pytest.fixture(scope="session")
def fast_table():
    return build_coefficient_table(20000, Backend.fast, threads=2)


@pytest.fixture(scope="session")
def desk_table():
    return build_coefficient_table(10**6, Backend.fast)
