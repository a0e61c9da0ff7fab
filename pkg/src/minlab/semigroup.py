"""Transition kernels, resolvents, and certified brackets.

The minimal process of a countable Q is approached from below by the
zero-outside truncations: entries, row masses, and tail sums computed on
the window {0..n} increase to the minimal values as the window grows.
Everything here rests on that single monotonicity fact.

Finite kernels are computed by uniformization.  The window matrix is
extended by two cemetery states before scaling:

* a *kill* cemetery absorbing each row's genuine killing rate (the defect
  the row already had in the countable matrix), and
* a *cut* cemetery absorbing the outflow created by the truncation itself.

Splitting the lost mass this way gives two-sided brackets: the kill column
never returns to the window in the minimal process either, so only the cut
column counts against an upper bound.  For a finite input matrix the cut
column is identically zero and brackets collapse to (Poisson-tail) width.

Certified bracket semantics
---------------------------
``BracketedValue.lo <= true value <= BracketedValue.hi`` always, with the
Poisson series tail (< 1e-12 per row) folded into ``hi``.  The ``numeric_hi``
field, when set, is the *heuristic* stabilized estimate ``lo + tol`` used to
call limits that converge too slowly to certify; flags say which is which:

* ``certified``: hi - lo <= tol at the reported level.
* ``numerical-limit``: lo stalled (increment < tol/100 over a doubling);
  ``numeric_hi`` is set, the rigorous ``hi`` is untouched.
* ``indeterminate-width``: schedule exhausted, neither of the above.
* ``finite-exact``: the window provably captured all reachable mass.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.stats import poisson

from . import _kernels
from .errors import (
    BadLambdaError,
    MonotonicityViolationError,
    NonFiniteInputError,
    SingularSystemError,
)
from .truncation import (
    FiniteQMatrix,
    geometric_levels,
    truncate,
    truncate_zero,
)

TAIL_EPS = 1e-12
_TAIL_SPLIT = 5e-13
DEFAULT_SCHEDULE = geometric_levels(8, 2, 8)
MONOTONE_TOL = 1e-12
# The ladder guard must sit above transition-solver roundoff at deep levels
# (rates ~n^2 leave ~1e-11 noise near n=512) but below any real scheme bug.
LADDER_GUARD_TOL = 1e-9


def _poisson_window(mu):
    """Index window [k_lo, k_hi] and pmf weights covering all but < 1e-12
    of the Poisson(mu) mass, split evenly between the two tails."""
    if mu <= 0.0:
        return 0, 0, np.ones(1)
    k_lo = int(poisson.ppf(_TAIL_SPLIT, mu))
    k_hi = int(poisson.isf(_TAIL_SPLIT, mu))
    k_lo = max(k_lo - 1, 0)
    k_hi = max(k_hi + 1, k_lo)
    w = poisson.pmf(np.arange(k_lo, k_hi + 1), mu)
    return k_lo, k_hi, w


def _extended_matrix(Qf, kill_rates):
    """CSR of M = I + Q_ext / Lambda on the window plus two cemetery
    columns (kill at index size, cut at size + 1).  Returns (indptr,
    indices, data, Lambda)."""
    size = Qf.size
    if kill_rates is None:
        kill = Qf.defects
    else:
        kill = np.minimum(np.asarray(kill_rates, dtype=np.float64), Qf.defects)
        kill = np.maximum(kill, 0.0)
    cut = Qf.defects - kill
    lam = Qf.max_rate()
    dim = size + 2
    rows = []
    cols = []
    vals = []
    if lam > 0.0:
        inv = 1.0 / lam
        for i in range(size):
            lo, hi = Qf.indptr[i], Qf.indptr[i + 1]
            for p in range(lo, hi):
                rows.append(i)
                cols.append(int(Qf.indices[p]))
                vals.append(Qf.data[p] * inv)
            if kill[i] > 0.0:
                rows.append(i)
                cols.append(size)
                vals.append(kill[i] * inv)
            if cut[i] > 0.0:
                rows.append(i)
                cols.append(size + 1)
                vals.append(cut[i] * inv)
            rows.append(i)
            cols.append(i)
            vals.append(max(1.0 - Qf.q[i] * inv, 0.0))
    else:
        for i in range(size):
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
    for c in (size, size + 1):
        rows.append(c)
        cols.append(c)
        vals.append(1.0)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return M.indptr, M.indices, M.data, lam


@dataclass(frozen=True)
class RowGrid:
    """One start state, several times: in-window probabilities plus the
    two cemetery masses per time."""

    start: int
    ts: tuple
    probs: np.ndarray      # (n_t, size)
    killed: np.ndarray     # (n_t,)
    cut: np.ndarray        # (n_t,)

    def row_sum(self, r=0):
        return float(self.probs[r].sum())


def transition_row_grid(Qf, i, ts, kill_rates=None):
    """Row i of exp(t Q) for every t in ``ts`` in one series pass.

    Parameters
    ----------
    Qf : FiniteQMatrix
    i : int
        Start state, inside the window.
    ts : sequence of float
        Nonnegative times; one uniformization run covers them all.
    kill_rates : array, optional
        Per-row genuine killing rates (defaults to all of ``Qf.defects``).
        The remainder ``defects - kill_rates`` is tracked separately as
        truncation-cut mass.

    Returns
    -------
    RowGrid
        Probabilities clipped to [0, 1]; per-time kill and cut masses.
    """
    ts = [float(t) for t in ts]
    if any(not math.isfinite(t) or t < 0 for t in ts):
        raise NonFiniteInputError(f"bad time grid {ts}")
    if not 0 <= i < Qf.size:
        raise NonFiniteInputError(f"start state {i} outside window of {Qf}")
    indptr, indices, data, lam = _extended_matrix(Qf, kill_rates)
    size = Qf.size
    dim = size + 2
    n_t = len(ts)
    k_los = np.zeros(n_t, dtype=np.int64)
    k_his = np.zeros(n_t, dtype=np.int64)
    w_parts = []
    w_off = np.zeros(n_t, dtype=np.int64)
    off = 0
    for r, t in enumerate(ts):
        k_lo, k_hi, w = _poisson_window(lam * t)
        k_los[r] = k_lo
        k_his[r] = k_hi
        w_off[r] = off
        w_parts.append(w)
        off += len(w)
    w_flat = np.concatenate(w_parts) if w_parts else np.zeros(0)
    k_top = int(k_his.max()) if n_t else 0
    acc = _kernels.series_row(indptr, indices, data, dim, i, k_top,
                              k_los, k_his, w_flat, w_off)
    probs = np.clip(acc[:, :size], 0.0, 1.0)
    return RowGrid(start=i, ts=tuple(ts), probs=probs,
                   killed=acc[:, size].copy(), cut=acc[:, size + 1].copy())


@dataclass(frozen=True)
class TransitionKernel:
    """Full finite-window kernel P(t) with per-row lost-mass accounting."""

    t: float
    matrix: np.ndarray
    killed: np.ndarray
    cut: np.ndarray
    method: str = "uniformization"

    @property
    def size(self):
        return self.matrix.shape[0]

    def entry(self, i, j):
        return float(self.matrix[i, j])

    @property
    def row_sums(self):
        return self.matrix.sum(axis=1)


def transition(Qf, t, kill_rates=None):
    """P(t) = exp(t Q) for a finite matrix, by uniformization.

    Rows are computed independently; each row's Poisson series is cut so
    the dropped tail is below 1e-12.  Lost mass appears in ``killed`` and
    ``cut``, never renormalized away.  Intended for small windows; bracket
    drivers use :func:`transition_row_grid` instead.
    """
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise NonFiniteInputError(f"bad time {t}")
    size = Qf.size
    mat = np.zeros((size, size))
    killed = np.zeros(size)
    cut = np.zeros(size)
    for i in range(size):
        grid = transition_row_grid(Qf, i, (t,), kill_rates)
        mat[i] = grid.probs[0]
        killed[i] = grid.killed[0]
        cut[i] = grid.cut[0]
    return TransitionKernel(t=t, matrix=mat, killed=killed, cut=cut)


def transition_ode(Qf, t, rtol=1e-11, atol=1e-13):
    """Independent check kernel: integrate P' = P Q with a high-order
    Runge-Kutta scheme.  Small windows only."""
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise NonFiniteInputError(f"bad time {t}")
    size = Qf.size
    gen = Qf.dense_generator()
    if t == 0.0:
        return TransitionKernel(t=0.0, matrix=np.eye(size),
                                killed=np.zeros(size), cut=np.zeros(size),
                                method="ode-check")

    def rhs(_, y):
        return (y.reshape(size, size) @ gen).ravel()

    sol = solve_ivp(rhs, (0.0, t), np.eye(size).ravel(), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=False)
    if not sol.success:
        raise NonFiniteInputError(f"ODE integration failed: {sol.message}")
    mat = sol.y[:, -1].reshape(size, size)
    lost = 1.0 - mat.sum(axis=1)
    return TransitionKernel(t=t, matrix=mat, killed=np.maximum(lost, 0.0),
                            cut=np.zeros(size), method="ode-check")


@dataclass(frozen=True)
class ResolventSlice:
    """One resolvent row R_ij(lam) and its deficiency z_i(lam)."""

    lam: float
    i: int
    values: np.ndarray
    z: float


def _shifted_solve(Qf, lam, rhs, transpose=False):
    if not (isinstance(lam, (int, float)) and math.isfinite(lam)) or lam <= 0:
        raise BadLambdaError(f"resolvent parameter must be positive, got {lam}")
    A = (sp.identity(Qf.size, format="csr") * lam - Qf.generator_csr()).tocsc()
    if transpose:
        A = A.T.tocsc()
    try:
        x = spla.spsolve(A, rhs)
    except Exception as exc:  # scipy raises a few different types here
        raise SingularSystemError(f"resolvent solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("resolvent solve produced non-finite values")
    return x


def resolvent_row(Qf, lam, i):
    """Row i of the resolvent (lam - Q)^{-1} and its deficiency.

    Solves the transposed system (lam I - Q)^T x = e_i, so x_j = R_ij(lam).
    The identity lam * sum_j R_ij + z_i = 1 holds by construction of z.
    """
    e = np.zeros(Qf.size)
    e[i] = 1.0
    x = _shifted_solve(Qf, lam, e, transpose=True)
    x = np.maximum(x, 0.0)
    z = 1.0 - lam * float(x.sum())
    if z < -1e-10 or z > 1.0 + 1e-10:
        raise SingularSystemError(f"deficiency z_{i}({lam}) = {z} out of range")
    return ResolventSlice(lam=float(lam), i=i, values=x, z=min(max(z, 0.0), 1.0))


def resolvent_deficiencies(Qf, lam):
    """All deficiencies z_i(lam) = 1 - lam * (resolvent row sum) at once,
    from the single solve (lam I - Q) x = 1."""
    x = _shifted_solve(Qf, lam, np.ones(Qf.size))
    z = 1.0 - lam * x
    if np.any(z < -1e-10) or np.any(z > 1.0 + 1e-10):
        raise SingularSystemError(f"deficiency out of [0, 1] at lam={lam}")
    return np.clip(z, 0.0, 1.0)


@dataclass(frozen=True)
class BracketedValue:
    """Certified enclosure [lo, hi] of a minimal-process quantity.

    ``numeric_hi`` is a non-rigorous stabilized cap (see module docstring);
    ``history`` records (level, lo, hi) per ladder rung.
    """

    lo: float
    hi: float
    quantity: str
    level: int
    flags: frozenset = field(default_factory=frozenset)
    numeric_hi: float = None
    history: tuple = ()

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def certified(self):
        return "certified" in self.flags

    def best_hi(self):
        """Stabilized cap when present, else the rigorous hi."""
        return self.hi if self.numeric_hi is None else min(self.hi, self.numeric_hi)

    def __contains__(self, value):
        return self.lo <= value <= self.hi


def _schedule_for(schedule, *needed):
    floor = max([1] + [int(x) + 1 for x in needed if x is not None])
    out = []
    for n in schedule:
        m = max(int(n), floor)
        if not out or m > out[-1]:
            out.append(m)
    return out


def _kill_rates_for(Q, n):
    return np.array([Q.defect(r) for r in range(n + 1)])


class _LevelValues:
    """lo/hi pair of one quantity at one level."""

    __slots__ = ("lo", "hi", "exact")

    def __init__(self, lo, hi, exact=False):
        self.lo = lo
        self.hi = hi
        self.exact = exact


def _quantity_values(grid, spec):
    kind, arg = spec
    probs = grid.probs[0]
    cut = float(grid.cut[0])
    killed = float(grid.killed[0])
    if kind == "entry":
        lo = float(probs[arg])
        hi = min(lo + cut + TAIL_EPS, 1.0)
    elif kind == "mass":
        lo = float(probs.sum())
        hi = min(1.0 - killed + TAIL_EPS, 1.0)
    elif kind == "tail":
        lo = float(probs[arg:].sum())
        head = float(probs[:arg].sum())
        hi = min(1.0 - head - killed + TAIL_EPS, 1.0)
    else:  # pragma: no cover
        raise ValueError(kind)
    exact = cut <= 0.0
    return _LevelValues(lo, min(max(hi, lo), 1.0), exact)


def _bracket_ladder(Q, i, t, tol, schedule, quantity, spec):
    if tol <= 0:
        raise ValueError("tol must be positive")
    if spec == ("tail", 0):
        # an empty head sum makes the k=0 tail the row mass; share the ladder
        spec = ("mass", None)
    key = (spec, i, t, tol, tuple(schedule))
    cache = getattr(Q, "_bracket_cache", None)
    if cache is None:
        cache = Q._bracket_cache = {}
    hit = cache.get(key)
    if hit is not None:
        return hit
    result = _bracket_ladder_impl(Q, i, t, tol, schedule, quantity, spec)
    cache[key] = result
    return result


def _row_grid_cached(Q, i, t, n):
    # Ladders for different tail cutoffs at one (i, t) reuse the same
    # per-level grids, so keep them on the matrix.
    cache = getattr(Q, "_rowgrid_cache", None)
    if cache is None:
        cache = Q._rowgrid_cache = {}
    key = (i, t, n)
    grid = cache.get(key)
    if grid is None:
        Qf = truncate_zero(Q, n)
        grid = transition_row_grid(Qf, i, (t,), _kill_rates_for(Q, n))
        cache[key] = grid
    return grid


def _bracket_ladder_impl(Q, i, t, tol, schedule, quantity, spec):
    levels = _schedule_for(schedule, i, spec[1] if spec[0] != "mass" else None)
    history = []
    prev_lo = None
    best_hi = 1.0
    flags = set()
    numeric_hi = None
    final_level = levels[-1]
    for n in levels:
        grid = _row_grid_cached(Q, i, t, n)
        vals = _quantity_values(grid, spec)
        if prev_lo is not None and vals.lo < prev_lo - LADDER_GUARD_TOL:
            raise MonotonicityViolationError(
                f"{quantity} dropped from {prev_lo} to {vals.lo} at level {n}"
            )
        best_hi = min(best_hi, vals.hi)
        lo = max(vals.lo, history[-1][1] if history else 0.0)
        history.append((n, lo, best_hi))
        final_level = n
        if vals.exact and best_hi - lo <= 4 * TAIL_EPS:
            flags.update(("certified", "finite-exact"))
            break
        if best_hi - lo <= tol:
            flags.add("certified")
            break
        if prev_lo is not None and lo - prev_lo < tol / 100.0:
            flags.add("numerical-limit")
            numeric_hi = min(best_hi, lo + tol)
            break
        prev_lo = lo
    lo = history[-1][1]
    if not flags:
        flags.add("indeterminate-width")
    return BracketedValue(lo=lo, hi=best_hi, quantity=quantity,
                          level=final_level, flags=frozenset(flags),
                          numeric_hi=numeric_hi, history=tuple(history))


def minimal_entry(Q, i, j, t, tol=1e-6, schedule=DEFAULT_SCHEDULE):
    """Bracket the minimal-process entry P_ij(t).

    The lower side is the window entry at the last level (nondecreasing in
    the level; a decrease beyond 1e-12 raises MonotonicityViolationError
    since it can only come from a bug).  The upper side adds the mass the
    truncation pushed across the boundary.
    """
    return _bracket_ladder(Q, i, float(t), tol, schedule,
                           f"entry P[{i},{j}]({t})", ("entry", j))


def minimal_mass(Q, i, t, tol=1e-6, schedule=DEFAULT_SCHEDULE):
    """Bracket the minimal-process row mass sum_j P_ij(t).

    A certified lo near 1 proves honesty at scale tol; a stalled lo well
    below 1 is reported with the ``numerical-limit`` flag and a stabilized
    ``numeric_hi``, never as a certificate (the rigorous hi stays
    1 - killed mass).
    """
    return _bracket_ladder(Q, i, float(t), tol, schedule,
                           f"mass sum_j P[{i},j]({t})", ("mass", None))


def minimal_tail(Q, i, k, t, tol=1e-6, schedule=DEFAULT_SCHEDULE):
    """Bracket the minimal-process tail sum_{j >= k} P_ij(t).

    lo sums the in-window tail (increasing in the level); hi is one minus
    the head sum minus genuinely killed mass (decreasing).  k = 0 reduces
    to :func:`minimal_mass`.
    """
    return _bracket_ladder(Q, i, float(t), tol, schedule,
                           f"tail sum_(j>={k}) P[{i},j]({t})", ("tail", int(k)))


@dataclass(frozen=True)
class ProbeReport:
    """Level trace of one kernel entry under a chosen truncation scheme."""

    scheme: str
    i: int
    j: int
    t: float
    levels: tuple
    values: tuple
    row_sums: tuple
    monotone: bool
    max_drop: float
    drop_at: tuple  # (level_prev, level_next) of the worst drop, or ()
    zero_bracket: BracketedValue
    limit_in_bracket: bool


def scheme_convergence_probe(Q, scheme, i, j, t, schedule=DEFAULT_SCHEDULE,
                             mask_mode="index", boundary=None,
                             expect_regular=False, tol=1e-6):
    """Trace P^(n)_ij(t) across levels for any truncation scheme.

    The zero scheme must be monotone (that is machine-checked elsewhere and
    here); other schemes may move either way, which is exactly what this
    probe is for.  The final value is compared against the zero-scheme
    bracket; with ``expect_regular`` the probe asserts the limit landed in
    it.

    Returns a :class:`ProbeReport`; raises nothing on non-monotone traces.
    """
    t = float(t)
    levels = _schedule_for(schedule, i, j)
    values = []
    row_sums = []
    for n in levels:
        Qf = truncate(Q, scheme, n, mask_mode=mask_mode, boundary=boundary)
        if i >= Qf.size:
            # the state sits past the materialized window, where every row
            # is zero, i.e. absorbing
            values.append(1.0 if i == j else 0.0)
            row_sums.append(1.0)
            continue
        grid = transition_row_grid(Qf, i, (t,))
        values.append(float(grid.probs[0, j]) if j < Qf.size else 0.0)
        row_sums.append(grid.row_sum())
    max_drop = 0.0
    drop_at = ()
    for a, b in zip(range(len(values) - 1), range(1, len(values))):
        drop = values[a] - values[b]
        if drop > max_drop:
            max_drop = drop
            drop_at = (levels[a], levels[b])
    monotone = max_drop <= MONOTONE_TOL
    zb = minimal_entry(Q, i, j, t, tol=tol, schedule=schedule)
    limit_ok = zb.lo - tol <= values[-1] <= zb.best_hi() + tol
    if expect_regular and not limit_ok:
        raise MonotonicityViolationError(
            f"scheme {scheme} limit {values[-1]} escaped the minimal bracket "
            f"[{zb.lo}, {zb.hi}] for a regular matrix"
        )
    return ProbeReport(scheme=scheme, i=i, j=j, t=t, levels=tuple(levels),
                       values=tuple(values), row_sums=tuple(row_sums),
                       monotone=monotone, max_drop=max_drop, drop_at=drop_at,
                       zero_bracket=zb, limit_in_bracket=limit_ok)


def _uniform_csr_plain(Qf, lam, dim):
    """M = I + Q/lam on a dim-sized index space, cemeteries dropped (mass
    just leaks).  Rows at or past Qf.size are zero."""
    rows, cols, vals = [], [], []
    for i in range(Qf.size):
        lo, hi = Qf.indptr[i], Qf.indptr[i + 1]
        for p in range(lo, hi):
            rows.append(i)
            cols.append(int(Qf.indices[p]))
            vals.append(Qf.data[p] / lam)
        rows.append(i)
        cols.append(i)
        vals.append(max(1.0 - Qf.q[i] / lam, 0.0))
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def entry_trace_rows(Q, i, t, schedule=DEFAULT_SCHEDULE, j_max=None):
    """Zero-scheme traces of every entry P^(n)_ij(t), exactly monotone.

    Direct per-level uniformization carries rounding drift around 1e-11 at
    large windows, which would swamp a 1e-12 monotonicity check once the
    true level increments fall below it.  This driver instead computes each
    doubling increment with a coupled pair run: both windows share one
    uniformization rate, and the difference vector evolves by nonnegative
    updates only, so increments are nonnegative floats by construction and
    the accumulated trace never decreases.

    Returns (levels, rows): rows[r][j] approximates P^(levels[r])_ij(t) to
    about 1e-11, and rows[r+1] >= rows[r] holds entrywise exactly.
    """
    t = float(t)
    levels = _schedule_for(schedule, i)
    if j_max is None:
        j_max = levels[0]
    width = j_max + 1
    out = np.zeros((len(levels), width))
    Qf = truncate_zero(Q, levels[0])
    grid = transition_row_grid(Qf, i, (t,), _kill_rates_for(Q, levels[0]))
    cols = min(width, Qf.size)
    out[0, :cols] = grid.probs[0, :cols]
    for r in range(len(levels) - 1):
        n1, n2 = levels[r], levels[r + 1]
        Qf1 = truncate_zero(Q, n1)
        Qf2 = truncate_zero(Q, n2)
        lam = Qf2.max_rate()
        dim = Qf2.size
        if lam <= 0.0:
            out[r + 1] = out[r]
            continue
        A = _uniform_csr_plain(Qf2, lam, dim)
        B = _uniform_csr_plain(Qf1, lam, dim)
        erows, ecols, evals = [], [], []
        for ii in range(Qf1.size):
            for jj, rate in Q.row(ii):
                if n1 < jj <= n2:
                    erows.append(ii)
                    ecols.append(jj)
                    evals.append(rate / lam)
        for ii in range(Qf1.size, dim):
            lo, hi = Qf2.indptr[ii], Qf2.indptr[ii + 1]
            for p in range(lo, hi):
                erows.append(ii)
                ecols.append(int(Qf2.indices[p]))
                evals.append(Qf2.data[p] / lam)
            erows.append(ii)
            ecols.append(ii)
            evals.append(max(1.0 - Qf2.q[ii] / lam, 0.0))
        E = sp.csr_matrix((evals, (erows, ecols)), shape=(dim, dim))
        k_lo, k_hi, w = _poisson_window(lam * t)
        inc = _kernels.coupled_inc_row(
            B.indptr, B.indices, B.data,
            A.indptr, A.indices, A.data,
            E.indptr, E.indices, E.data,
            dim, i, k_hi, k_lo, k_hi, w,
        )
        out[r + 1] = out[r] + inc[:width]
    return tuple(levels), out
