"""Nonnegative polynomial rate expressions.

Closed-form rate specs are written in a small grammar (whitespace ignored)::

    expr   := term ('+' term)*
    term   := factor ('*' factor)*
    factor := atom ('^' INT)?
    atom   := NUMBER | 'i' | '(' expr ')'

Only sums and products of nonnegative constants and the state index are
allowed, so every expression is a polynomial in ``i`` with nonnegative
coefficients and is therefore nonnegative on {0, 1, 2, ...} by construction.
Typical specs: ``"(i+1)^2"``, ``"2*(i+1)^2"``, ``"0.5*i + 1"``.
"""

import re

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import MalformedExpressionError

_MAX_DEGREE = 16
_MAX_POWER = 16

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|(?P<var>i)|(?P<op>[-()+*^/]))"
)


class RatePoly:
    """Polynomial in the state index with nonnegative coefficients.

    Instances are immutable; ``coeffs`` holds ascending-power coefficients
    and ``text`` keeps the original expression for serialization.
    """

    __slots__ = ("coeffs", "text")

    def __init__(self, coeffs, text):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        nz = np.nonzero(c)[0]
        c = c[: nz[-1] + 1].copy() if nz.size else np.zeros(1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "text", text)

    def __setattr__(self, name, value):
        raise AttributeError("RatePoly is immutable")

    def __call__(self, i):
        return float(npoly.polyval(float(i), self.coeffs))

    def evaluate_many(self, states):
        return npoly.polyval(np.asarray(states, dtype=float), self.coeffs)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return len(self.coeffs) == 1 and self.coeffs[0] == 0.0

    def __eq__(self, other):
        return isinstance(other, RatePoly) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def __repr__(self):
        return f"RatePoly({self.text!r})"


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise MalformedExpressionError(
                f"unexpected character {text[pos:].strip()[0]!r} in rate expression {text!r}"
            )
        if m.group("num") is not None:
            tokens.append(("num", float(m.group("num"))))
        elif m.group("var") is not None:
            tokens.append(("var", "i"))
        else:
            op = m.group("op")
            if op in "-/":
                raise MalformedExpressionError(
                    f"operator {op!r} is not allowed; rates are sums and products "
                    f"of nonnegative terms (got {text!r})"
                )
            tokens.append(("op", op))
        pos = m.end()
    return tokens


def _parse_expr(tokens, pos):
    coeffs, pos = _parse_term(tokens, pos)
    while pos < len(tokens) and tokens[pos] == ("op", "+"):
        rhs, pos = _parse_term(tokens, pos + 1)
        coeffs = npoly.polyadd(coeffs, rhs)
    return coeffs, pos


def _parse_term(tokens, pos):
    coeffs, pos = _parse_factor(tokens, pos)
    while pos < len(tokens) and tokens[pos] == ("op", "*"):
        rhs, pos = _parse_factor(tokens, pos + 1)
        coeffs = npoly.polymul(coeffs, rhs)
        if len(coeffs) > _MAX_DEGREE + 1:
            raise MalformedExpressionError(f"degree above {_MAX_DEGREE} not supported")
    return coeffs, pos


def _parse_factor(tokens, pos):
    base, pos = _parse_atom(tokens, pos)
    if pos < len(tokens) and tokens[pos] == ("op", "^"):
        pos += 1
        if pos >= len(tokens) or tokens[pos][0] != "num":
            raise MalformedExpressionError("'^' must be followed by an integer")
        exp = tokens[pos][1]
        if exp != int(exp) or exp < 0 or exp > _MAX_POWER:
            raise MalformedExpressionError(
                f"exponent must be an integer in [0, {_MAX_POWER}], got {exp}"
            )
        pos += 1
        out = np.ones(1)
        for _ in range(int(exp)):
            out = npoly.polymul(out, base)
            if len(out) > _MAX_DEGREE + 1:
                raise MalformedExpressionError(f"degree above {_MAX_DEGREE} not supported")
        return out, pos
    return base, pos


def _parse_atom(tokens, pos):
    if pos >= len(tokens):
        raise MalformedExpressionError("rate expression ended unexpectedly")
    kind, value = tokens[pos]
    if kind == "num":
        return np.array([value]), pos + 1
    if kind == "var":
        return np.array([0.0, 1.0]), pos + 1
    if (kind, value) == ("op", "("):
        coeffs, pos = _parse_expr(tokens, pos + 1)
        if pos >= len(tokens) or tokens[pos] != ("op", ")"):
            raise MalformedExpressionError("unbalanced parentheses")
        return coeffs, pos + 1
    raise MalformedExpressionError(f"unexpected token {value!r}")


def parse_rate(text):
    """Parse a rate expression into a :class:`RatePoly`.

    Accepts a string in the grammar above, or a bare nonnegative number.
    Raises :class:`MalformedExpressionError` on anything else.
    """
    if isinstance(text, RatePoly):
        return text
    if isinstance(text, (int, float)):
        if not np.isfinite(text) or text < 0:
            raise MalformedExpressionError(f"constant rate must be finite and >= 0, got {text}")
        return RatePoly([float(text)], repr(float(text)))
    if not isinstance(text, str):
        raise MalformedExpressionError(f"rate spec must be a string or number, got {type(text)}")
    tokens = _tokenize(text)
    if not tokens:
        raise MalformedExpressionError("empty rate expression")
    coeffs, pos = _parse_expr(tokens, 0)
    if pos != len(tokens):
        raise MalformedExpressionError(f"trailing tokens in rate expression {text!r}")
    if len(coeffs) > _MAX_DEGREE + 1:
        raise MalformedExpressionError(f"degree above {_MAX_DEGREE} not supported")
    if not np.all(np.isfinite(coeffs)):
        raise MalformedExpressionError(f"non-finite coefficient in {text!r}")
    return RatePoly(coeffs, text.strip())


def poly_dominates(small, big, slack=1e-12):
    """Certify big(i) >= small(i) for every integer i >= 0.

    Sufficient coefficient test: the difference has nonnegative coefficients
    either in powers of i or in powers of (i+1). Returns False when the test
    is inconclusive (the caller falls back to range checks).
    """
    diff = npoly.polysub(big.coeffs, small.coeffs)
    if np.all(diff >= -slack):
        return True
    # rewrite the difference in powers of (i+1): substitute i = y - 1
    shifted = np.zeros(1)
    for c in diff[::-1]:
        shifted = npoly.polyadd(npoly.polymul(shifted, [-1.0, 1.0]), [c])
    return bool(np.all(shifted >= -slack))
