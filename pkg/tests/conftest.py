import pytest

from minlab import bd


@pytest.fixture(scope="session")
def q_one():
    """Symmetric quadratic chain, regular."""
    return bd("(i+1)^2", "(i+1)^2")


@pytest.fixture(scope="session")
def q_two():
    """Quadratic chain with doubled births, explosive."""
    return bd("2*(i+1)^2", "(i+1)^2")


@pytest.fixture(scope="session")
def poisson():
    return bd("1")


@pytest.fixture(scope="session")
def two_state():
    from minlab import validate
    return validate({"rows": [
        {"i": 0, "entries": [[1, 1.0]], "qi": 1.0},
        {"i": 1, "entries": [[0, 1.0]], "qi": 1.0},
    ]})
