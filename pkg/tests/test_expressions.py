"""Rate expression grammar: parsing, evaluation, rejection."""

import math

import pytest
from hypothesis import given, strategies as st

from minlab import parse_rate, poly_dominates
from minlab.errors import MalformedExpressionError


@pytest.mark.parametrize("text,at,expected", [
    ("1", 0, 1.0),
    ("i", 5, 5.0),
    ("i + 1", 0, 1.0),
    ("(i+1)^2", 3, 16.0),
    ("2*(i+1)^2", 2, 18.0),
    ("0.5*i + 1", 4, 3.0),
    ("i^2 + i + 1", 3, 13.0),
    ("(i+1)*(i+2)", 1, 6.0),
    ("3", 100, 3.0),
    ("1e2", 0, 100.0),
])
def test_eval(text, at, expected):
    assert parse_rate(text)(at) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("text", [
    "i - 1", "1/i", "-1", "2^i", "i^(1+1)", "i^-1",
    "", "1 +", "((i)", "q", "i**2", "1e400",
])
def test_rejects(text):
    with pytest.raises(MalformedExpressionError):
        parse_rate(text)


def test_text_round_trip():
    p = parse_rate("2*(i+1)^2")
    q = parse_rate(p.text)
    for i in range(20):
        assert p(i) == q(i)


def test_degree_and_zero():
    assert parse_rate("0").is_zero
    assert parse_rate("i^3").degree == 3
    assert parse_rate("5").degree == 0
    assert not parse_rate("i").is_zero


@given(st.integers(0, 1000))
def test_nonnegative_everywhere(i):
    # the grammar cannot express a sign change
    for text in ("(i+1)^2", "0.3*i^2 + 7", "i*(i+1)"):
        assert parse_rate(text)(i) >= 0.0


def test_evaluate_many_matches_scalar():
    import numpy as np
    p = parse_rate("(i+1)^2 + 3*i")
    xs = np.arange(50)
    vec = p.evaluate_many(xs)
    for i in range(50):
        assert vec[i] == pytest.approx(p(i), rel=1e-15)


def test_poly_dominates():
    # poly_dominates(small, big) certifies big >= small on {0,1,...}
    b1 = parse_rate("(i+1)^2")
    b2 = parse_rate("2*(i+1)^2")
    assert poly_dominates(b1, b2)
    assert not poly_dominates(b2, b1)
    assert poly_dominates(b1, b1)


def test_finite_values_only():
    p = parse_rate("(i+1)^2")
    assert math.isfinite(p(10**6))
