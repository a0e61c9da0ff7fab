"""Stochastic comparability: generator-level and process-level dominance.

Two countable chains are stochastically comparable when every tail sum of
the first process is dominated by the matching tail sum of the second for
ordered start states.  The generator analogue compares tail sums of rate
rows.  The two notions agree under extra hypotheses (both generators
bounded, or the dominating chain regular: the extended Kirstein transfer)
but not in general, which is exactly what the quadratic counterexample in
:mod:`minlab.scenarios` exhibits.

Verdict semantics
-----------------
``holds`` and ``fails`` are certified by brackets: ``fails`` carries a
witness cell whose left lower bound strictly exceeds the right upper bound
(the stabilized ``numeric_hi`` counts as the right cap when the rigorous
one stalls at 1, and the report says so via the witness flags).
Everything else is ``indeterminate``.
"""

from dataclasses import dataclass, field

from .expressions import poly_dominates
from .qmatrix import is_conservative, is_single_birth
from .semigroup import DEFAULT_SCHEDULE, minimal_tail
from .errors import PreconditionFailedError

HOLDS = "holds"
FAILS = "fails"
INDETERMINATE = "indeterminate"


def row_tail(Q, i, k):
    """Tail sum over columns >= k of generator row i, diagonal included."""
    s = sum(rate for j, rate in Q.row(i) if j >= k)
    if i >= k:
        s -= Q.q(i)
    return s


def row_head(Q, i, k):
    """Head sum over columns <= k of generator row i, diagonal included."""
    s = sum(rate for j, rate in Q.row(i) if j <= k)
    if i <= k:
        s -= Q.q(i)
    return s


@dataclass(frozen=True)
class DominanceReport:
    """Outcome of a dominance check with the cells that decided it."""

    verdict: str
    kind: str                 # "generator" or "process"
    reduction_used: str = ""  # generator only: "full" or "conservative"
    m_max: int = 0
    k_max: int = None
    t_grid: tuple = ()
    witness: tuple = None     # (i, m, k) or (i, m, k, t)
    witness_values: tuple = None
    cells_checked: int = 0
    flags: frozenset = field(default_factory=frozenset)

    @property
    def holds(self):
        return self.verdict == HOLDS


def _gen_cell_ok(Q1, Q2, i, m, k, tol):
    return row_tail(Q1, i, k) <= row_tail(Q2, m, k) + tol


def generator_dominance(Q1, Q2, M_max=50, reduction="auto", tol=1e-12):
    """Check the generator dominance condition on start states up to M_max.

    For every ordered pair i <= m <= M_max the tail sums (diagonal
    included) of row i of Q1 and row m of Q2 are compared at cutoffs
    k <= i and k > m; cutoffs strictly between leave the condition vacuous.
    The upper cutoff range stops past both rows' supports, where every
    tail is zero.

    With ``reduction="auto"`` a conservative pair is checked through the
    equivalent head/tail two-sided form and the report records
    ``reduction_used="conservative"``; ``"full"`` forces the direct form.

    Returns a :class:`DominanceReport` with the first failing cell (lexicographic
    in (i, m, k)) as witness.  Rate-polynomial families that dominate
    coefficientwise get a ``family-certified`` flag, covering all states,
    not only those scanned.
    """
    if reduction not in ("auto", "full", "conservative"):
        raise ValueError(f"unknown reduction {reduction!r}")
    conservative = (is_conservative(Q1, M_max + 1)
                    and is_conservative(Q2, M_max + 1))
    if reduction == "conservative" and not conservative:
        raise PreconditionFailedError(
            "conservative reduction requested for a non-conservative pair"
        )
    use_reduction = conservative and reduction != "full"
    flags = set()
    if use_reduction:
        flags.add("conservative-pair")
    cells = 0
    witness = None
    witness_values = None
    for m in range(M_max + 1):
        for i in range(m + 1):
            hi_stop = max(Q1.max_target(i), Q2.max_target(m), i, m) + 1
            if use_reduction:
                # heads below i, tails above m: two one-sided checks that
                # together are equivalent to the full form when both rows
                # carry zero defect
                for k in range(i):
                    cells += 1
                    if not row_head(Q1, i, k) >= row_head(Q2, m, k) - tol:
                        # normalize to tail coordinates: a head violation
                        # at k is a tail violation at k + 1
                        witness = (i, m, k + 1)
                        witness_values = (row_tail(Q1, i, k + 1),
                                          row_tail(Q2, m, k + 1))
                        break
                if witness is None:
                    for k in range(m + 1, hi_stop + 1):
                        cells += 1
                        if not _gen_cell_ok(Q1, Q2, i, m, k, tol):
                            witness = (i, m, k)
                            witness_values = (row_tail(Q1, i, k),
                                              row_tail(Q2, m, k))
                            break
            else:
                for k in list(range(i + 1)) + list(range(m + 1, hi_stop + 1)):
                    cells += 1
                    if not _gen_cell_ok(Q1, Q2, i, m, k, tol):
                        witness = (i, m, k)
                        witness_values = (row_tail(Q1, i, k),
                                          row_tail(Q2, m, k))
                        break
            if witness is not None:
                break
        if witness is not None:
            break
    verdict = FAILS if witness is not None else HOLDS
    if verdict == HOLDS and Q1.birth_death is not None and Q2.birth_death is not None:
        bd1, bd2 = Q1.birth_death, Q2.birth_death
        if (poly_dominates(bd1.birth, bd2.birth)
                and poly_dominates(bd2.death, bd1.death)):
            flags.add("family-certified")
    return DominanceReport(
        verdict=verdict, kind="generator",
        reduction_used="conservative" if use_reduction else "full",
        m_max=M_max, witness=witness, witness_values=witness_values,
        cells_checked=cells, flags=frozenset(flags),
    )


def conservative_reduction_check(Q1, Q2, M_max=50, tol=1e-12):
    """Evaluate the full and the reduced generator conditions independently.

    For conservative pairs the two must agree; property tests lean on this.
    Returns (full_report, reduced_report).
    """
    full = generator_dominance(Q1, Q2, M_max, reduction="full", tol=tol)
    red = generator_dominance(Q1, Q2, M_max, reduction="conservative", tol=tol)
    return full, red


def process_dominance(Q1, Q2, M_max=10, K_max=15, t_grid=(0.5, 1.0, 2.0),
                      tol=1e-6, schedule=DEFAULT_SCHEDULE, compare_tol=None):
    """Decide tail-sum dominance of the two minimal processes.

    Every cell (i <= m <= M_max, k <= K_max, t in t_grid) is decided from
    brackets of the two tails.  A cell certifies when the left upper bound
    sits at or below the right lower bound plus ``tol``; it refutes when
    the left lower bound strictly exceeds the right's best upper bound
    (stabilized cap when the rigorous bound stalls at 1) by more than
    ``compare_tol`` (default ``tol``).  First refuting cell, scanned
    lexicographically in (t, i, m, k) with t in grid order, becomes the
    witness.

    The Q1 == Q2 instance (monotonicity check) skips diagonal cells i == m,
    which hold trivially.

    Returns a :class:`DominanceReport` with kind "process".  Flags:
    ``right-stabilized`` marks a witness that leans on a numeric cap.
    """
    if compare_tol is None:
        compare_tol = tol
    same = Q1 is Q2
    cells = 0
    any_uncertified = False
    flags = set()
    witness = None
    witness_values = None
    for t in t_grid:
        for m in range(M_max + 1):
            for i in range(m + 1):
                if same and i == m:
                    continue
                for k in range(K_max + 1):
                    cells += 1
                    left = minimal_tail(Q1, i, k, t, tol=tol, schedule=schedule)
                    right = minimal_tail(Q2, m, k, t, tol=tol, schedule=schedule)
                    if left.lo > right.best_hi() + compare_tol:
                        witness = (i, m, k, t)
                        witness_values = (left, right)
                        if right.numeric_hi is not None and left.lo <= right.hi:
                            flags.add("right-stabilized")
                        break
                    if left.hi > right.lo + tol:
                        any_uncertified = True
                if witness is not None:
                    break
            if witness is not None:
                break
        if witness is not None:
            break
    if witness is not None:
        verdict = FAILS
    elif any_uncertified:
        verdict = INDETERMINATE
        flags.add("bracket-overlap")
    else:
        verdict = HOLDS
    return DominanceReport(
        verdict=verdict, kind="process", m_max=M_max, k_max=K_max,
        t_grid=tuple(t_grid), witness=witness, witness_values=witness_values,
        cells_checked=cells, flags=frozenset(flags),
    )


def is_monotone_process(Q, M_max=5, K_max=10, t_grid=(0.5, 1.0),
                        tol=1e-6, schedule=DEFAULT_SCHEDULE):
    """Self-comparability across ordered starts: Q against itself."""
    return process_dominance(Q, Q, M_max=M_max, K_max=K_max, t_grid=t_grid,
                             tol=tol, schedule=schedule)


@dataclass(frozen=True)
class TransferReport:
    """Generator verdict, process verdict, and what theory promised."""

    generator: DominanceReport
    process: DominanceReport
    q2_bounded: bool
    q2_regular_evidence: str   # "bounded-pair", "certified", "none"
    expected_transfer: bool
    flags: frozenset = field(default_factory=frozenset)

    @property
    def consistent(self):
        if "theory-violation" in self.flags:
            return False
        return True


def kirstein_transfer(Q1, Q2, M_max=10, K_max=15, t_grid=(0.5, 1.0, 2.0),
                      tol=1e-6, schedule=DEFAULT_SCHEDULE, gen_M_max=50,
                      q2_regular_evidence="none"):
    """Run the generator check, then the process check, then compare with
    what the transfer theorem promises.

    Process dominance always implies generator dominance.  The converse
    needs extra input: both generators bounded, or the dominating chain
    regular.  ``q2_regular_evidence`` is the caller's certificate tag for
    the latter ("certified" from a regularity test, "none" otherwise);
    boundedness is read off the rate families when decidable.

    A ``theory-violation`` flag (never expected) marks a contradiction
    between a promised transfer and a certified process refutation; an
    ``outside-transfer-hypotheses`` flag marks the diagnostic-only regime
    where the theorem is silent and the process verdict stands alone.
    """
    gen = generator_dominance(Q1, Q2, M_max=gen_M_max)
    bounded = (Q1.is_bounded() is True) and (Q2.is_bounded() is True)
    if bounded:
        evidence = "bounded-pair"
    elif q2_regular_evidence == "certified":
        evidence = "certified"
    else:
        evidence = "none"
    expected = gen.holds and evidence != "none"
    proc = process_dominance(Q1, Q2, M_max=M_max, K_max=K_max, t_grid=t_grid,
                             tol=tol, schedule=schedule)
    flags = set()
    if expected and proc.verdict == FAILS:
        flags.add("theory-violation")
    if not gen.holds and proc.verdict == HOLDS:
        # process dominance implies generator dominance, so this pairing
        # can only come from a bug (or an M_max mismatch between the scans)
        flags.add("theory-violation")
        flags.add("converse-direction")
    if gen.holds and evidence == "none":
        flags.add("outside-transfer-hypotheses")
    return TransferReport(generator=gen, process=proc, q2_bounded=bounded,
                          q2_regular_evidence=evidence,
                          expected_transfer=expected, flags=frozenset(flags))


@dataclass(frozen=True)
class MonotonicityReport:
    """Single-birth criterion: monotone iff regular and self-dominating at
    the generator level."""

    generator_self: DominanceReport
    process_self: DominanceReport
    regular_verdict: str
    biconditional_ok: bool


def single_birth_monotonicity(Q, regular_verdict, M_max=5, K_max=10,
                              t_grid=(0.5, 1.0), tol=1e-6,
                              schedule=DEFAULT_SCHEDULE, gen_M_max=50):
    """Check the single-birth monotonicity criterion against computation.

    ``regular_verdict`` comes from a regularity test ("regular",
    "nonregular", or "indeterminate").  For single-birth Q, monotone is
    equivalent to (regular and generator self-dominance).  The report's
    ``biconditional_ok`` is True when both sides are decided and agree, and
    also when either side is undecided (nothing to contradict).
    """
    if not is_single_birth(Q, up_to=max(gen_M_max, 50)):
        raise PreconditionFailedError(
            "single-birth criterion applied to a non-single-birth matrix"
        )
    gen = generator_dominance(Q, Q, M_max=gen_M_max)
    proc = is_monotone_process(Q, M_max=M_max, K_max=K_max, t_grid=t_grid,
                               tol=tol, schedule=schedule)
    lhs = proc.verdict
    rhs_known = regular_verdict in ("regular", "nonregular")
    ok = True
    if lhs != INDETERMINATE and rhs_known:
        rhs = regular_verdict == "regular" and gen.holds
        ok = (lhs == HOLDS) == rhs
    return MonotonicityReport(generator_self=gen, process_self=proc,
                              regular_verdict=regular_verdict,
                              biconditional_ok=ok)
