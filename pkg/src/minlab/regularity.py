"""Uniqueness tests for minimal Q-processes.

Four routes, deliberately independent so they can cross-check each other:

* ``deficiency_test``: resolvent row defects z_i = 1 - lambda * sum_j R_ij
  on a ladder of zero-scheme truncations.  The truncated defects decrease
  to the true deficiency, so a value below tolerance certifies regularity
  (up to that tolerance), while a stabilized positive value is strong
  numerical evidence of explosion.
* ``lyapunov_test``: a drift certificate on an unbounded test function.
  Sufficient only; a failed certificate proves nothing.
* ``birth_death_series``: the classical divergence criterion for
  birth-death chains, evaluated with an overflow-safe ratio recurrence.
* ``regularity_by_comparison``: transfers a regularity certificate down
  a generator-dominance relation.

Nonregularity is inherently a statement about a limit, so it is only ever
reported as ``nonregular-numerical``, never as certified.  The one-sided
certificates all point the other way: truncated defects are upper bounds
for the true ones.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._kernels import series_terms
from .errors import (
    BadLambdaError,
    DominancePreconditionFailedError,
    MonotonicityViolationError,
    NegativePhiError,
    NegativeRateError,
    NotConservativeError,
    PreconditionFailedError,
    ZeroBirthRateError,
)
from .qmatrix import BirthDeathSpec, QMatrix, is_conservative
from .semigroup import resolvent_deficiencies, transition
from .truncation import geometric_levels, truncate_absorb, truncate_mask, truncate_zero

REGULAR = "regular-certified-up-to-tol"
NONREGULAR = "nonregular-numerical"
INDETERMINATE = "indeterminate"

DEFAULT_DEFICIENCY_SCHEDULE = geometric_levels(8, 2, 14)
DEFAULT_PROBE = (0, 1, 2, 3, 4, 5)

# A series chunk counts as numerically converged when its largest term is
# below this fraction of the running total.
SERIES_CONVERGED_REL = 1e-14


@dataclass(frozen=True)
class RegularityVerdict:
    """Outcome of one uniqueness test.

    Attributes:
        verdict: one of REGULAR, NONREGULAR, INDETERMINATE.
        method: "deficiency", "lyapunov", "birth-death-series" or
            "comparison".
        evidence: method-specific payload (JSON-friendly).
        flags: short machine-readable notes on how the verdict was reached.
    """

    verdict: str
    method: str
    evidence: dict = field(default_factory=dict)
    flags: tuple = ()

    @property
    def is_regular(self):
        return self.verdict == REGULAR

    @property
    def is_nonregular(self):
        return self.verdict == NONREGULAR

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "method": self.method,
            "evidence": self.evidence,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class LyapunovCertificate:
    """Drift certificate: margin_i = c*(1 + phi_i) - sum_j q_ij*(phi_j - phi_i).

    Valid when every probed margin clears ``-margin_tol``, phi is
    nonnegative and nondecreasing on the probe range, and phi grows at
    least as fast as the declared floor.  Unboundedness of phi beyond the
    probe range is an assumption, recorded in ``growth_assumption``.
    """

    c: float
    probe_max: int
    margins: tuple
    min_margin: float
    argmin: int
    phi_start: float
    phi_end: float
    growth_assumption: str
    growth_ok: bool
    nondecreasing: bool
    margin_tol: float

    @property
    def valid(self):
        return self.min_margin >= -self.margin_tol and self.growth_ok and self.nondecreasing

    def to_dict(self):
        return {
            "c": self.c,
            "probe_max": self.probe_max,
            "min_margin": self.min_margin,
            "argmin": self.argmin,
            "phi_start": self.phi_start,
            "phi_end": self.phi_end,
            "growth_assumption": self.growth_assumption,
            "growth_ok": self.growth_ok,
            "nondecreasing": self.nondecreasing,
            "valid": self.valid,
        }


def _stabilized_lower_estimate(z_levels):
    """Extrapolated lower bound for the limit of a nonincreasing sequence.

    Uses the last two decrements: if they shrink geometrically with ratio
    r <= 0.7, the remaining decrease is at most dec * r / (1 - r), which is
    below 4 * dec for the accepted ratios.  Returns None when the sequence
    has not stabilized in that sense.
    """
    if len(z_levels) < 3:
        return None
    dec_prev = z_levels[-3] - z_levels[-2]
    dec = z_levels[-2] - z_levels[-1]
    if dec < 0 or dec_prev < 0:
        return None
    if dec == 0.0:
        return z_levels[-1]
    if dec_prev <= 0.0:
        return None
    ratio = dec / dec_prev
    if ratio > 0.7:
        return None
    return z_levels[-1] - 4.0 * dec


def deficiency_test(Q, lam=1.0, i_probe=DEFAULT_PROBE, tol=1e-6,
                    schedule=DEFAULT_DEFICIENCY_SCHEDULE):
    """Resolvent-deficiency ladder on zero-scheme truncations.

    Args:
        Q: the QMatrix under test.
        lam: resolvent parameter, must be positive.
        i_probe: states whose deficiencies are tracked.
        tol: certification tolerance; all probed defects below ``tol``
            yields REGULAR.
        schedule: truncation levels, nondecreasing.

    Returns:
        RegularityVerdict with per-level defect table in the evidence.

    Raises:
        BadLambdaError: lam <= 0 or not finite.
        MonotonicityViolationError: a probed defect increased by more than
            1e-12 between levels, which the construction forbids.
    """
    if not (lam > 0.0) or not math.isfinite(lam):
        raise BadLambdaError(f"resolvent parameter must be positive, got {lam}")
    probe = tuple(int(i) for i in i_probe)
    if not probe or min(probe) < 0:
        raise ValueError("i_probe must be a nonempty set of states")
    top = max(probe)
    levels = [int(n) for n in schedule if int(n) >= top + 2]
    if not levels:
        raise ValueError("schedule has no level beyond the probe states")

    table = []
    used = []
    for n in levels:
        z = resolvent_deficiencies(truncate_zero(Q, n), lam)
        row = [float(z[i]) for i in probe]
        if table:
            prev = table[-1]
            for pos, (a, b) in enumerate(zip(prev, row)):
                if b > a + 1e-12:
                    raise MonotonicityViolationError(
                        f"z_{probe[pos]}({lam}) rose from {a:.3e} to {b:.3e} "
                        f"between levels {used[-1]} and {n}"
                    )
        table.append(row)
        used.append(n)
        if max(row) < tol:
            break

    last = table[-1]
    evidence = {
        "lam": lam,
        "tol": tol,
        "probe": list(probe),
        "levels": used,
        "z": table,
        "z_final": last,
    }
    if max(last) < tol:
        return RegularityVerdict(REGULAR, "deficiency", evidence,
                                 flags=("upper-bounds-below-tol",))

    worst = max(range(len(probe)), key=lambda p: last[p])
    seq = [table[r][worst] for r in range(len(table))]
    lower = _stabilized_lower_estimate(seq)
    evidence["stabilized_lower_estimate"] = lower
    if lower is not None and lower > 10.0 * tol:
        return RegularityVerdict(NONREGULAR, "deficiency", evidence,
                                 flags=("stabilized",))
    return RegularityVerdict(INDETERMINATE, "deficiency", evidence,
                             flags=("schedule-exhausted",))


def lyapunov_test(Q, phi, c, probe_max=200, growth_floor=None,
                  margin_tol=1e-10):
    """Drift-certificate check.

    Verifies margin_i = c*(1 + phi_i) - sum_j q_ij*(phi_j - phi_i) >= 0
    (within ``margin_tol``) on rows 0..probe_max, plus the growth proxy
    phi(probe_max) >= phi(0) + growth_floor(probe_max).  A valid
    certificate yields REGULAR; an invalid one yields INDETERMINATE since
    the criterion is sufficient only.

    Args:
        Q: conservative QMatrix.
        phi: nonnegative nondecreasing test function on states.
        c: drift constant, c >= 0.
        probe_max: last row checked.
        growth_floor: callable declaring the assumed growth of phi;
            defaults to log(1 + i).

    Returns:
        (RegularityVerdict, LyapunovCertificate).

    Raises:
        NotConservativeError: a probed row has positive defect.
        NegativePhiError: phi takes a negative value on a needed state.
    """
    if c < 0 or not math.isfinite(c):
        raise ValueError(f"drift constant must be a nonnegative real, got {c}")
    floor = growth_floor if growth_floor is not None else math.log1p
    floor_text = "log1p" if growth_floor is None else getattr(
        growth_floor, "__name__", "user-declared")

    phi_cache = {}

    def _phi(j):
        if j not in phi_cache:
            v = float(phi(j))
            if v < 0 or not math.isfinite(v):
                raise NegativePhiError(f"phi({j}) = {v} is not a nonnegative real")
            phi_cache[j] = v
        return phi_cache[j]

    margins = []
    nondecreasing = True
    for i in range(probe_max + 1):
        if Q.defect(i) > 1e-12 * max(1.0, Q.q(i)):
            raise NotConservativeError(
                f"row {i} has defect {Q.defect(i):.3e}; the drift criterion "
                f"needs conservative rows"
            )
        fi = _phi(i)
        if i > 0 and fi < _phi(i - 1) - 1e-12:
            nondecreasing = False
        drift = 0.0
        for j, rate in Q.row(i):
            drift += rate * (_phi(j) - fi)
        margins.append(c * (1.0 + fi) - drift)

    arr = np.asarray(margins)
    argmin = int(np.argmin(arr))
    floor_gain = float(floor(probe_max))
    growth_ok = _phi(probe_max) >= _phi(0) + floor_gain - 1e-12
    cert = LyapunovCertificate(
        c=float(c),
        probe_max=probe_max,
        margins=tuple(margins),
        min_margin=float(arr[argmin]),
        argmin=argmin,
        phi_start=_phi(0),
        phi_end=_phi(probe_max),
        growth_assumption=(
            f"phi({probe_max}) >= phi(0) + {floor_text}({probe_max}) "
            f"= phi(0) + {floor_gain:.6g}, assumed to persist beyond the probe"
        ),
        growth_ok=growth_ok,
        nondecreasing=nondecreasing,
        margin_tol=margin_tol,
    )
    evidence = {"certificate": cert.to_dict(), "probe_max": probe_max}
    if cert.valid:
        verdict = RegularityVerdict(REGULAR, "lyapunov", evidence,
                                    flags=("certificate-valid",))
    else:
        reasons = []
        if cert.min_margin < -margin_tol:
            reasons.append(f"margin-violated-at-{argmin}")
        if not growth_ok:
            reasons.append("growth-floor-unmet")
        if not nondecreasing:
            reasons.append("phi-not-nondecreasing")
        verdict = RegularityVerdict(INDETERMINATE, "lyapunov", evidence,
                                    flags=tuple(reasons))
    return verdict, cert


def _series_chunks(n_terms):
    edges = [0]
    e = 8
    while e < n_terms:
        edges.append(e)
        e *= 2
    edges.append(n_terms)
    return list(zip(edges[:-1], edges[1:]))


def birth_death_series(spec, n_terms=1 << 25, divergence_threshold=1e6):
    """Classical series criterion for birth-death chains.

    Evaluates R = sum_n (1/(b_n pi_n)) * sum_{k<=n} pi_k through the ratio
    recurrence T_n = 1 + (a_n/b_{n-1}) T_{n-1}, term_n = T_n/b_n, which
    never forms the potentially astronomical pi products.  R = infinity
    means no explosion (regular); a finite R means the chain explodes.

    Verdict rules: REGULAR when the partial sum crosses
    ``divergence_threshold``, when the recurrence overflows, or when the
    final doubling still contributes more than 1% of the total
    (slow divergence).  NONREGULAR when every term of a doubling drops
    below 1e-14 of the running total.  Otherwise INDETERMINATE.

    Args:
        spec: BirthDeathSpec, or a QMatrix built from one.
        n_terms: series length cap.
        divergence_threshold: partial-sum level treated as divergence.

    Raises:
        ZeroBirthRateError: some b_n <= 0 in range.
        NegativeRateError: some a_n < 0 in range.
    """
    if isinstance(spec, QMatrix):
        if spec.birth_death is None:
            raise ValueError("series criterion needs a birth-death chain")
        spec = spec.birth_death
    if not isinstance(spec, BirthDeathSpec):
        raise TypeError(f"expected BirthDeathSpec or QMatrix, got {type(spec)!r}")
    bco = spec.birth.coeffs
    aco = spec.death.coeffs

    S = 0.0
    T = 0.0
    partials = []
    verdict = None
    flags = ()
    n_used = 0
    chunk_sum = 0.0
    chunk_max = 0.0
    for lo, hi in _series_chunks(int(n_terms)):
        chunk_sum, T, chunk_max, code, stop = series_terms(bco, aco, lo, hi, T)
        S += chunk_sum
        n_used = stop
        if code == 1:
            raise ZeroBirthRateError(
                f"birth rate b({stop}) = {spec.birth(stop)} is not positive; "
                f"the series criterion does not apply"
            )
        if code == 2:
            raise NegativeRateError(f"death rate a({stop}) = {spec.death(stop)} < 0")
        partials.append((stop, S))
        if code == 3:
            verdict, flags = REGULAR, ("series-overflow",)
            break
        if S >= divergence_threshold:
            verdict, flags = REGULAR, ("threshold-exceeded",)
            break
        if lo >= 8 and S > 0 and chunk_max < SERIES_CONVERGED_REL * S:
            verdict, flags = NONREGULAR, ("series-converged",)
            break

    if verdict is None:
        if S > 0 and chunk_sum > 0.01 * S:
            verdict, flags = REGULAR, ("sustained-growth",)
        else:
            verdict, flags = INDETERMINATE, ("exhausted",)

    evidence = {
        "total": S,
        "n_used": n_used,
        "threshold": divergence_threshold,
        "last_chunk_sum": chunk_sum,
        "last_chunk_max_term": chunk_max,
        "partial_sums": [(n, s) for n, s in partials[-12:]],
        "birth": spec.birth.text,
        "death": spec.death.text,
    }
    return RegularityVerdict(verdict, "birth-death-series", evidence, flags=flags)


def regularity_by_comparison(Q1, Q2, q2_evidence, M_max=50, lam=1.0,
                             tol=1e-6, schedule=DEFAULT_DEFICIENCY_SCHEDULE):
    """Regularity of Q1 from generator dominance by a regular Q2.

    Preconditions, all enforced: both matrices conservative on the checked
    range, generator dominance Q1 <= Q2 holds up to M_max, and
    ``q2_evidence`` is a regular verdict for Q2.  The conclusion is then
    cross-checked numerically with a deficiency ladder on Q1.

    Raises:
        PreconditionFailedError: any hypothesis missing.
    """
    from .dominance import generator_dominance

    for tag, Q in (("first", Q1), ("second", Q2)):
        if not is_conservative(Q, up_to=min(M_max + 2, 200)):
            raise PreconditionFailedError(
                f"the {tag} matrix is not conservative on the checked rows"
            )
    if not isinstance(q2_evidence, RegularityVerdict) or not q2_evidence.is_regular:
        raise PreconditionFailedError(
            "comparison transfer needs a regular verdict for the dominating matrix"
        )
    gen = generator_dominance(Q1, Q2, M_max=M_max)
    if not gen.holds:
        raise PreconditionFailedError(
            f"generator dominance does not hold (witness {gen.witness})"
        )

    cross = deficiency_test(Q1, lam=lam, tol=tol, schedule=schedule)
    evidence = {
        "dominance_cells": gen.cells_checked,
        "q2_method": q2_evidence.method,
        "cross_check": cross.verdict,
        "cross_check_z_final": cross.evidence.get("z_final"),
    }
    if cross.is_nonregular:
        # Numerics contradicting the transfer means the inputs violate a
        # hypothesis somewhere; refuse to certify rather than pick a side.
        return RegularityVerdict(INDETERMINATE, "comparison", evidence,
                                 flags=("cross-check-contradiction",))
    flag = "cross-check-regular" if cross.is_regular else "cross-check-indeterminate"
    return RegularityVerdict(REGULAR, "comparison", evidence, flags=(flag,))


@dataclass(frozen=True)
class ComparisonRow:
    t: float
    i: int
    tail_q1: float
    tail_q2: float
    head_abs_q1: float
    head_mask_q1: float
    head_abs_q2: float
    head_mask_q2: float


@dataclass(frozen=True)
class ComparisonTable:
    """Row-wise truncated comparison at one level.

    ``tail_q1 <= tail_q2`` is the dominance inequality for mass pushed to
    the absorbing boundary; the head columns cross-check that absorbing
    and masking produce identical in-window mass (localization).
    """

    n: int
    t_grid: tuple
    rows: tuple
    tol: float

    @property
    def max_tail_violation(self):
        return max((r.tail_q1 - r.tail_q2 for r in self.rows), default=0.0)

    @property
    def inequality_ok(self):
        return self.max_tail_violation <= self.tol

    @property
    def max_localization_gap(self):
        gaps = [abs(r.head_abs_q1 - r.head_mask_q1) for r in self.rows]
        gaps += [abs(r.head_abs_q2 - r.head_mask_q2) for r in self.rows]
        return max(gaps, default=0.0)

    @property
    def localization_ok(self):
        return self.max_localization_gap <= self.tol


def truncated_comparison_probe(Q1, Q2, n, t_grid=(0.25, 1.0, 4.0), tol=1e-9):
    """Boundary-mass comparison of absorbing truncations at level n.

    Requires generator dominance Q1 <= Q2 on the probed rows, then checks
    for every i < n and t in the grid that the absorbed mass of the first
    chain stays below the second's, and that head sums over the window
    agree between the absorbing and masking truncations.

    Raises:
        DominancePreconditionFailedError: dominance fails below level n.
    """
    from .dominance import generator_dominance

    gen = generator_dominance(Q1, Q2, M_max=n)
    if not gen.holds:
        raise DominancePreconditionFailedError(
            f"generator dominance fails at witness {gen.witness}; "
            f"the truncated comparison needs it on rows below {n}"
        )

    window = range(n)
    kernels = {}
    for tag, Q in (("q1", Q1), ("q2", Q2)):
        kernels[tag, "abs"] = truncate_absorb(Q, n)
        kernels[tag, "mask"] = truncate_mask(Q, window)

    rows = []
    for t in t_grid:
        mats = {key: transition(Qf, float(t)).matrix for key, Qf in kernels.items()}
        for i in range(n):
            a1 = mats["q1", "abs"]
            a2 = mats["q2", "abs"]
            m1 = mats["q1", "mask"]
            m2 = mats["q2", "mask"]
            rows.append(ComparisonRow(
                t=float(t),
                i=i,
                tail_q1=float(a1[i, n]),
                tail_q2=float(a2[i, n]),
                head_abs_q1=float(a1[i, :n].sum()),
                head_mask_q1=float(m1[i, :n].sum()),
                head_abs_q2=float(a2[i, :n].sum()),
                head_mask_q2=float(m2[i, :n].sum()),
            ))
    return ComparisonTable(n=n, t_grid=tuple(float(t) for t in t_grid),
                           rows=tuple(rows), tol=tol)
