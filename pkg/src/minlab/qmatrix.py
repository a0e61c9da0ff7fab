"""Rate matrices on the countable state space {0, 1, 2, ...}.

A :class:`QMatrix` is a totally stable rate matrix given by a per-row
oracle: ``row(i)`` returns the finite off-diagonal support of row ``i`` as
``(target, rate)`` pairs and ``q(i)`` returns the diagonal rate (so the
diagonal entry is ``-q(i)``).  Rows may be sub-conservative; the slack

    d_i = q_i - sum_j q_ij  >=  0

is the killing rate of state ``i``.  Validated rows are cached, instances
are immutable after construction, and reads are safe from multiple threads.

Serializable specs
------------------
``validate`` accepts (and ``load_spec`` reads from JSON):

* closed-form families::

      {"family": "birth-death", "birth": "2*(i+1)^2", "death": "(i+1)^2"}
      {"family": "pure-birth", "birth": "1"}

  Rate expressions follow the grammar in :mod:`minlab.expressions`.  The
  death rate applies from state 1 upward; state 0 has no down-neighbor.

* explicit finite matrices::

      {"rows": [{"i": 0, "entries": [[1, 1.0]], "qi": 1.0},
                {"i": 1, "entries": [[0, 4.0], [2, 4.0]], "qi": 8.0}]}

  ``qi`` defaults to the off-diagonal row sum (a conservative row); values
  above the sum declare killing.  Rows not listed are zero (absorbing).
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    InfiniteSupportError,
    MalformedExpressionError,
    NegativeRateError,
    NonFiniteInputError,
    SuperConservativeError,
)
from .expressions import RatePoly, parse_rate

ROW_SUM_TOL = 1e-12
_MAX_ROW_SUPPORT = 1_000_000


@dataclass(frozen=True)
class RowDefect:
    """Killing rate of one row: d_i = q_i - sum of off-diagonal rates."""

    i: int
    defect: float


@dataclass(frozen=True)
class BirthDeathSpec:
    """Closed-form birth-death rates.

    ``birth(i)`` is the up-rate from state i; ``death(i)`` the down-rate,
    applied for i >= 1 only (state 0 cannot move down).  A zero birth rate
    is allowed only with ``absorbing_ok=True``.
    """

    birth: RatePoly
    death: RatePoly
    absorbing_ok: bool = False

    @classmethod
    def from_strings(cls, birth, death="0", absorbing_ok=False):
        return cls(parse_rate(birth), parse_rate(death), absorbing_ok)

    def to_dict(self):
        family = "pure-birth" if self.death.is_zero else "birth-death"
        out = {"family": family, "birth": self.birth.text}
        if not self.death.is_zero:
            out["death"] = self.death.text
        return out


class QMatrix:
    """Totally stable rate matrix defined by a lazy row oracle.

    Parameters
    ----------
    row_oracle : callable
        ``i -> iterable of (target, rate)`` off-diagonal pairs, finite support.
    diag_rate : callable
        ``i -> q_i``, the total jump rate out of state i.
    family_tag : str
        One of ``birth-death``, ``single-birth``, ``pure-birth``,
        ``explicit``, ``custom``.
    birth_death : BirthDeathSpec, optional
        Present for closed-form families; enables family-level arguments.
    name : str, optional
        Stable label used in provenance strings and reports.
    """

    def __init__(self, row_oracle, diag_rate, family_tag="custom",
                 birth_death=None, name=None):
        self._row_oracle = row_oracle
        self._diag_rate = diag_rate
        self.family_tag = family_tag
        self.birth_death = birth_death
        self.name = name or family_tag
        self._rows = {}
        self._diags = {}

    # dict get/set are atomic under the GIL, so concurrent reads are fine
    def row(self, i):
        """Validated off-diagonal row support, sorted by target."""
        cached = self._rows.get(i)
        if cached is not None:
            return cached
        raw = list(self._row_oracle(i))
        if len(raw) > _MAX_ROW_SUPPORT:
            raise InfiniteSupportError(
                f"row {i} yielded more than {_MAX_ROW_SUPPORT} entries"
            )
        merged = {}
        for j, rate in raw:
            j = int(j)
            rate = float(rate)
            if j < 0 or j == i:
                raise NegativeRateError(
                    f"row {i} has an entry at invalid target {j}"
                )
            if not np.isfinite(rate):
                raise NonFiniteInputError(f"rate q[{i},{j}] is not finite")
            if rate < 0:
                raise NegativeRateError(f"rate q[{i},{j}] = {rate} is negative")
            if rate > 0:
                merged[j] = merged.get(j, 0.0) + rate
        entries = tuple(sorted(merged.items()))
        qi = self.q(i)
        s = sum(r for _, r in entries)
        if s > qi + max(ROW_SUM_TOL, ROW_SUM_TOL * qi):
            raise SuperConservativeError(
                f"row {i}: off-diagonal sum {s} exceeds q_{i} = {qi}"
            )
        self._rows[i] = entries
        return entries

    def q(self, i):
        cached = self._diags.get(i)
        if cached is not None:
            return cached
        qi = float(self._diag_rate(i))
        if not np.isfinite(qi):
            raise NonFiniteInputError(f"q_{i} is not finite")
        if qi < 0:
            raise NegativeRateError(f"q_{i} = {qi} is negative")
        self._diags[i] = qi
        return qi

    def defect(self, i):
        """Killing rate d_i >= 0 of state i."""
        s = sum(r for _, r in self.row(i))
        return max(self.q(i) - s, 0.0)

    def row_defect(self, i):
        return RowDefect(i, self.defect(i))

    def max_target(self, i):
        """Largest jump target of row i, or i itself for an absorbing row."""
        entries = self.row(i)
        return entries[-1][0] if entries else i

    def is_bounded(self):
        """True/False when decidable (closed-form families and explicit
        matrices), None when the oracle gives no certificate."""
        if self.birth_death is not None:
            return self.birth_death.birth.degree == 0 and self.birth_death.death.degree == 0
        if self.family_tag == "explicit":
            return True
        return None

    def describe(self):
        if self.birth_death is not None:
            bd = self.birth_death
            return f"{self.family_tag}[birth={bd.birth.text}, death={bd.death.text}]"
        return f"{self.family_tag}[{self.name}]"

    def __repr__(self):
        return f"QMatrix({self.describe()})"


def make_birth_death(spec, absorbing_ok=None):
    """Build the QMatrix of a birth-death family.

    ``spec`` is a :class:`BirthDeathSpec` or a ``(birth, death)`` pair of
    expressions.  Row i has the down-rate ``death(i)`` (for i >= 1), the
    up-rate ``birth(i)``, and diagonal rate equal to their sum, so the
    matrix is conservative by construction.

    Raises :class:`MalformedExpressionError` for bad expressions and for a
    zero birth rate without ``absorbing_ok``.
    """
    if isinstance(spec, BirthDeathSpec):
        bd = spec
    elif isinstance(spec, (tuple, list)) and len(spec) == 2:
        bd = BirthDeathSpec(parse_rate(spec[0]), parse_rate(spec[1]),
                            bool(absorbing_ok))
    else:
        raise MalformedExpressionError(
            "birth-death spec must be a BirthDeathSpec or a (birth, death) pair"
        )
    if absorbing_ok is not None and not isinstance(spec, BirthDeathSpec):
        bd = BirthDeathSpec(bd.birth, bd.death, bool(absorbing_ok))
    # nonnegative coefficients make rates nondecreasing in i, so the only
    # possible zeros of the birth rate are the zero polynomial and i = 0
    if not bd.absorbing_ok:
        if bd.birth.is_zero:
            raise MalformedExpressionError(
                "birth rate is identically zero; pass absorbing_ok=True if intended"
            )
        if bd.birth(0) == 0.0:
            raise MalformedExpressionError(
                "birth rate vanishes at state 0; pass absorbing_ok=True if intended"
            )
    birth, death = bd.birth, bd.death

    def row_oracle(i):
        entries = []
        if i >= 1:
            a = death(i)
            if a > 0:
                entries.append((i - 1, a))
        b = birth(i)
        if b > 0:
            entries.append((i + 1, b))
        return entries

    def diag(i):
        a = death(i) if i >= 1 else 0.0
        return a + birth(i)

    tag = "pure-birth" if death.is_zero else "birth-death"
    return QMatrix(row_oracle, diag, family_tag=tag, birth_death=bd,
                   name=f"b={birth.text},a={death.text}")


def bd(birth, death="0", absorbing_ok=False):
    """Shorthand: birth-death QMatrix from rate expressions."""
    return make_birth_death(BirthDeathSpec(parse_rate(birth), parse_rate(death),
                                           absorbing_ok))


def _explicit_qmatrix(rows_spec):
    table = {}
    for entry in rows_spec:
        i = int(entry["i"])
        pairs = [(int(j), float(r)) for j, r in entry.get("entries", [])]
        qi = entry.get("qi")
        if qi is None:
            qi = sum(r for _, r in pairs)
        table[i] = (tuple(pairs), float(qi))

    def row_oracle(i):
        return table.get(i, ((), 0.0))[0]

    def diag(i):
        return table.get(i, ((), 0.0))[1]

    n = max(table) + 1 if table else 0
    return QMatrix(row_oracle, diag, family_tag="explicit",
                   name=f"rows={n}")


def validate(spec, check_rows=32):
    """Validate a matrix spec and return the QMatrix.

    ``spec`` may be a dict (see the module docstring for the grammar), a
    :class:`BirthDeathSpec`, or an existing :class:`QMatrix`.  The first
    ``check_rows`` rows are validated eagerly (defects computed); every row
    is re-validated lazily on first access.

    Raises NegativeRateError, SuperConservativeError, InfiniteSupportError,
    or MalformedExpressionError as appropriate.
    """
    if isinstance(spec, QMatrix):
        q = spec
    elif isinstance(spec, BirthDeathSpec):
        q = make_birth_death(spec)
    elif isinstance(spec, dict):
        if "rows" in spec:
            q = _explicit_qmatrix(spec["rows"])
        elif "family" in spec:
            family = spec["family"]
            if family not in ("birth-death", "pure-birth"):
                raise MalformedExpressionError(f"unknown family {family!r}")
            birth = parse_rate(spec.get("birth", "0"))
            death = parse_rate(spec.get("death", "0"))
            q = make_birth_death(
                BirthDeathSpec(birth, death, bool(spec.get("absorbing_ok", False)))
            )
        else:
            raise MalformedExpressionError(
                "matrix spec dict needs a 'family' or 'rows' key"
            )
        if "name" in spec:
            q.name = str(spec["name"])
    else:
        raise MalformedExpressionError(f"cannot interpret spec of type {type(spec)}")
    for i in range(check_rows):
        q.row(i)
        q.defect(i)
    return q


def load_spec(path):
    """Read a JSON matrix spec from ``path`` and validate it."""
    with open(path) as fh:
        return validate(json.load(fh))


def is_conservative(Q, up_to=200, tol=ROW_SUM_TOL):
    """True when every row i <= up_to has defect below tolerance."""
    return all(Q.defect(i) <= max(tol, tol * Q.q(i)) for i in range(up_to + 1))


def is_single_birth(Q, up_to=200):
    """True when every row i <= up_to jumps up by exactly one: the rate to
    i+1 is positive and no target exceeds i+1 (down-jumps unconstrained)."""
    for i in range(up_to + 1):
        entries = dict(Q.row(i))
        if entries.get(i + 1, 0.0) <= 0.0:
            return False
        if any(j > i + 1 for j in entries):
            return False
    return True
