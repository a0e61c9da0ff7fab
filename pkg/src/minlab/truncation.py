"""Finite approximations of a countable-state rate matrix.

Five ways to cut an infinite Q down to something computable:

* ``truncate_zero``: keep the window, drop outflow (rows go sub-conservative).
* ``truncate_absorb``: redirect outflow into an absorbing boundary state.
* ``truncate_mask``: zero out rows off the window, keep surviving rows whole.
* ``truncate_stop``: rows past level n repeat row n verbatim.
* ``truncate_general``: keep the window, let a user oracle place boundary rates.

The zero and absorb schemes are the two instances of the general form
(zero oracle, lump oracle).  The stop scheme is structurally not an
instance: it keeps rows outside the window nonzero.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    BoundaryViolationError,
    InfiniteSupportError,
    SuperConservativeError,
    WindowTooSmallError,
)
from .qmatrix import ROW_SUM_TOL, QMatrix

_MASK_SCAN_LIMIT = 65536


@dataclass(frozen=True)
class Provenance:
    """Where a finite matrix came from: source label, scheme, level."""

    source: str
    scheme: str
    level: object

    def __str__(self):
        return f"{self.scheme}(n={self.level}) of {self.source}"


class FiniteQMatrix:
    """Rate matrix on the finite window {0, ..., size-1}.

    Off-diagonal entries are kept in CSR form; ``q`` holds the diagonal
    rates (the diagonal entry of the generator is ``-q[i]``) and ``defects``
    the per-row killing rates ``q[i] - row_sum[i] >= 0``.  Instances are
    immutable and always carry :class:`Provenance`.
    """

    def __init__(self, rows, q, provenance):
        size = len(rows)
        if len(q) != size:
            raise ValueError("rows and q must have equal length")
        indptr = np.zeros(size + 1, dtype=np.int64)
        indices = []
        data = []
        for i, entries in enumerate(rows):
            for j, rate in entries:
                indices.append(j)
                data.append(rate)
            indptr[i + 1] = len(indices)
        self.size = size
        self.indptr = indptr
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        if self.indices.size and int(self.indices.max()) >= size:
            raise ValueError("row entry targets a state outside the window")
        self.q = np.asarray(q, dtype=np.float64)
        sums = np.zeros(size)
        for i in range(size):
            lo, hi = indptr[i], indptr[i + 1]
            sums[i] = self.data[lo:hi].sum()
        slack = np.maximum(ROW_SUM_TOL, ROW_SUM_TOL * self.q)
        bad = np.nonzero(sums > self.q + slack)[0]
        if bad.size:
            i = int(bad[0])
            raise SuperConservativeError(
                f"truncated row {i}: sum {sums[i]} exceeds q_{i} = {self.q[i]}"
            )
        self.defects = np.maximum(self.q - sums, 0.0)
        self.provenance = provenance

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return tuple(zip(self.indices[lo:hi].tolist(), self.data[lo:hi].tolist()))

    def row_sum(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return float(self.data[lo:hi].sum())

    def max_rate(self):
        return float(self.q.max()) if self.size else 0.0

    def offdiag_csr(self):
        return sp.csr_matrix(
            (self.data, self.indices, self.indptr), shape=(self.size, self.size)
        )

    def generator_csr(self):
        gen = self.offdiag_csr().tolil()
        gen.setdiag(gen.diagonal() - self.q)
        return gen.tocsr()

    def dense_generator(self):
        gen = self.offdiag_csr().toarray()
        gen[np.diag_indices(self.size)] -= self.q
        return gen

    def is_conservative(self, tol=ROW_SUM_TOL):
        slack = np.maximum(tol, tol * self.q)
        return bool(np.all(self.defects <= slack))

    def as_qmatrix(self):
        """View as a countable-state matrix (states past the window are
        zero rows)."""

        def oracle(i):
            return self.row(i) if i < self.size else ()

        def diag(i):
            return float(self.q[i]) if i < self.size else 0.0

        return QMatrix(oracle, diag, family_tag="truncated",
                       name=str(self.provenance))

    def __repr__(self):
        return f"FiniteQMatrix(size={self.size}, {self.provenance})"


def _window_rows(Q, n):
    rows = [Q.row(i) for i in range(n + 1)]
    q = [Q.q(i) for i in range(n + 1)]
    return rows, q


def truncate_zero(Q, n):
    """Window {0..n}; entries outside are dropped, diagonals kept.

    Boundary rows lose their outflow, so the result is sub-conservative
    exactly on rows that jumped across the cut.  Entries are monotone in n
    and so are the minimal kernels built from them.
    """
    rows, q = _window_rows(Q, n)
    cut = [tuple((j, r) for j, r in row if j <= n) for row in rows]
    return FiniteQMatrix(cut, q, Provenance(Q.describe(), "zero", n))


def truncate_absorb(Q, n):
    """Window {0..n}; outflow of rows below n is lumped onto state n,
    which is absorbing.  Conservative input rows stay conservative."""
    out = []
    q = []
    for i in range(n):
        kept = [(j, r) for j, r in Q.row(i) if j <= n - 1]
        lump = sum(r for j, r in Q.row(i) if j >= n)
        if lump > 0:
            kept.append((n, lump))
        out.append(tuple(sorted(kept)))
        q.append(Q.q(i))
    out.append(())
    q.append(0.0)
    return FiniteQMatrix(out, q, Provenance(Q.describe(), "absorb", n))


def mask_window(Q, n, mode="rate"):
    """The state set used by :func:`truncate_mask` at level n.

    ``rate`` mode gives {i : q_i <= n}, scanned upward assuming total rates
    are nondecreasing (true for polynomial-rate families); ``index`` mode
    gives {0..n}.  Pass an explicit set to ``truncate_mask`` for anything
    fancier.
    """
    if mode == "index":
        return frozenset(range(n + 1))
    if mode != "rate":
        raise ValueError(f"unknown mask window mode {mode!r}")
    members = []
    i = 0
    while Q.q(i) <= n:
        members.append(i)
        i += 1
        if i > _MASK_SCAN_LIMIT:
            raise InfiniteSupportError(
                f"rate window {{i: q_i <= {n}}} still growing after "
                f"{_MASK_SCAN_LIMIT} states; pass an explicit state set"
            )
    return frozenset(members)


def truncate_mask(Q, window, mode="rate"):
    """Rows inside the window survive whole; rows outside are zeroed.

    ``window`` is a level n (expanded via :func:`mask_window` with
    ``mode``) or an explicit finite state set.  Surviving rows keep every
    entry, including those pointing outside the window, so the result is a
    bounded matrix that is conservative whenever Q is.
    """
    if isinstance(window, (int, np.integer)):
        members = mask_window(Q, int(window), mode=mode)
        level = int(window)
    else:
        members = frozenset(int(i) for i in window)
        level = f"set:{len(members)}"
    cap = 0
    for i in members:
        cap = max(cap, i, Q.max_target(i))
    size = cap + 1 if members else 1
    rows = []
    q = []
    for i in range(size):
        if i in members:
            rows.append(Q.row(i))
            q.append(Q.q(i))
        else:
            rows.append(())
            q.append(0.0)
    return FiniteQMatrix(rows, q, Provenance(Q.describe(), "mask", level))


def truncate_stop(Q, n, window_cap=None):
    """Rows past n repeat row n, with its original (absolute) targets.

    The matrix is materialized on {0..window_cap}; the default cap is the
    largest jump target among rows 0..n.  Any row whose support sticks out
    of the cap raises :class:`WindowTooSmallError`.  States above the cap
    are unreachable from below it, so the cut is exact, and a conservative
    Q stays conservative.
    """
    rows, q = _window_rows(Q, n)
    reach = max([n] + [Q.max_target(i) for i in range(n + 1)])
    if window_cap is None:
        window_cap = reach
    elif reach > window_cap:
        raise WindowTooSmallError(
            f"rows 0..{n} jump up to state {reach}, beyond cap {window_cap}"
        )
    out = list(rows) + [rows[n]] * (window_cap - n)
    qs = list(q) + [q[n]] * (window_cap - n)
    return FiniteQMatrix(out, qs, Provenance(Q.describe(), "stop", n))


def zero_boundary(i):
    """Boundary oracle of the plain cut: no redistributed rates."""
    return ()


def lumping_boundary(Q, n):
    """Boundary oracle that lumps each row's outflow onto state n.

    With window {0..n-1} this reproduces the absorbing-boundary scheme.
    """

    def oracle(i):
        lump = sum(r for j, r in Q.row(i) if j >= n)
        return ((n, lump),) if lump > 0 else ()

    return oracle


def truncate_general(Q, window, boundary):
    """Windowed cut with caller-chosen boundary rates.

    Rows inside the window keep their in-window entries plus whatever the
    ``boundary`` oracle assigns to states outside; rows outside the window
    are zero.  The oracle must return nonnegative rates at out-of-window
    targets and may not push a row past conservative; violations raise
    :class:`BoundaryViolationError`.
    """
    if isinstance(window, (int, np.integer)):
        members = frozenset(range(int(window) + 1))
        level = int(window)
    else:
        members = frozenset(int(i) for i in window)
        level = f"set:{len(members)}"
    boundary_rows = {}
    cap = max(members) if members else 0
    for i in sorted(members):
        extra = []
        for j, rate in boundary(i):
            j = int(j)
            rate = float(rate)
            if j in members:
                raise BoundaryViolationError(
                    f"boundary oracle for row {i} targets in-window state {j}"
                )
            if not np.isfinite(rate) or rate < 0:
                raise BoundaryViolationError(
                    f"boundary rate q[{i},{j}] = {rate} is invalid"
                )
            if rate > 0:
                extra.append((j, rate))
                cap = max(cap, j)
        inside = sum(r for j, r in Q.row(i) if j in members)
        total = inside + sum(r for _, r in extra)
        qi = Q.q(i)
        if total > qi + max(ROW_SUM_TOL, ROW_SUM_TOL * qi):
            raise BoundaryViolationError(
                f"boundary oracle makes row {i} super-conservative "
                f"({total} > q_{i} = {qi})"
            )
        boundary_rows[i] = extra
        cap = max(cap, max((j for j, _ in Q.row(i) if j in members), default=0))
    rows = []
    q = []
    for i in range(cap + 1):
        if i in members:
            kept = [(j, r) for j, r in Q.row(i) if j in members]
            rows.append(tuple(sorted(kept + boundary_rows[i])))
            q.append(Q.q(i))
        else:
            rows.append(())
            q.append(0.0)
    return FiniteQMatrix(rows, q, Provenance(Q.describe(), "general", level))


SCHEMES = ("zero", "absorb", "mask", "stop", "general")


def truncate(Q, scheme, n, mask_mode="rate", boundary=None, window_cap=None):
    """Dispatch by scheme name (see :data:`SCHEMES`)."""
    if scheme == "zero":
        return truncate_zero(Q, n)
    if scheme == "absorb":
        return truncate_absorb(Q, n)
    if scheme == "mask":
        return truncate_mask(Q, n, mode=mask_mode)
    if scheme == "stop":
        return truncate_stop(Q, n, window_cap=window_cap)
    if scheme == "general":
        return truncate_general(Q, n, boundary or zero_boundary)
    raise ValueError(f"unknown scheme {scheme!r}")


def geometric_levels(start=8, factor=2, count=8):
    """Level schedule start, start*factor, ... (ints, strictly increasing)."""
    levels = []
    n = float(start)
    for _ in range(count):
        m = int(round(n))
        if levels and m <= levels[-1]:
            m = levels[-1] + 1
        levels.append(m)
        n *= factor
    return tuple(levels)


def entrywise_equal(A, B, tol=0.0):
    """True when two finite matrices agree entrywise (zero-padded to the
    larger window), diagonals included."""
    size = max(A.size, B.size)
    da = np.zeros((size, size))
    db = np.zeros((size, size))
    da[: A.size, : A.size] = A.offdiag_csr().toarray()
    db[: B.size, : B.size] = B.offdiag_csr().toarray()
    qa = np.zeros(size)
    qb = np.zeros(size)
    qa[: A.size] = A.q
    qb[: B.size] = B.q
    return bool(
        np.all(np.abs(da - db) <= tol) and np.all(np.abs(qa - qb) <= tol)
    )
