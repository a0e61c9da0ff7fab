"""Stochastic simulation oracle.

Samples jump-chain paths (exponential holding times, targets proportional
to off-diagonal rates, killing with the row defect) so that transition
probabilities, tail sums and mass defects produced by the series/resolvent
code can be validated against something that shares none of its machinery.

Randomness is counter-based (a splitmix64 stream per path index), so
results are bit-reproducible from ``seed`` and independent of path order.

Explosive birth-death chains get an early-exit: once the certified bound
on the expected remaining explosion time drops below 1% of the remaining
horizon, the path is classified as exploded without simulating its
remaining (possibly astronomically many) jumps.  The misclassification
probability is below 1e-2 per triggered path by Markov's inequality, and
triggering itself requires being deep in the explosive regime; the bias is
far inside the 4-sigma envelopes used by the calling tests.  Chains
without the certificate simply never trigger it.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._kernels import AT_STATE, EXPLODED, JUMP_BUDGET, KILLED, bd_paths, dense_paths
from .errors import InfiniteSupportError
from .qmatrix import QMatrix

_STATE_CAP = 65536
_BOUND_LEN = 4096


def _explosion_bound(spec):
    """Per-state upper bounds for the expected time to explode.

    For a birth-death chain with up-rates b and down-rates a, the expected
    passage time from k to k+1 is m_k = sum_{j<=k} (1/b_j) prod (a/b), so
    with r = sup a_j/b_j < 1 the total time above s is at most
    (1/(1-r)) * (sum_{j>=s} 1/b_j + sum_{j<s} r^(s-j)/b_j).  When no such
    r < 1 exists, or the rate sum diverges, every bound is +inf and the
    early exit never fires.
    """
    inf = np.full(_BOUND_LEN + 1, np.inf)
    if spec.birth.degree < 2 or spec.death.degree > spec.birth.degree:
        # sum 1/b diverges, or the ratio a/b grows without bound
        return inf
    ks = np.arange(0, _BOUND_LEN + 2, dtype=float)
    b = spec.birth.evaluate_many(ks)
    a = spec.death.evaluate_many(ks)
    if np.any(b <= 0.0):
        return inf
    r = float(np.max(a[1:] / b[1:]))
    if spec.death.degree == spec.birth.degree:
        r = max(r, float(spec.death.coeffs[-1] / spec.birth.coeffs[-1]))
    if r >= 0.95:
        return inf
    # b has nonnegative coefficients, hence is nondecreasing on x >= 0,
    # so the integral from N - 1 bounds the rate sum beyond N
    tail, err = integrate.quad(lambda x: 1.0 / spec.birth(x), _BOUND_LEN + 1, np.inf)
    inv_b = 1.0 / b
    suffix = np.cumsum(inv_b[::-1])[::-1][: _BOUND_LEN + 1] + tail + err
    below = np.empty(_BOUND_LEN + 1)
    below[0] = 0.0
    for s in range(1, _BOUND_LEN + 1):
        below[s] = r * (below[s - 1] + inv_b[s - 1])
    bound = (suffix + below) / (1.0 - r)
    # the array is indexed by min(state, len-1); the clamped entry stays
    # valid for deeper states, where the true bound only shrinks
    return bound


def _reachable_size(Q, i0, cap=_STATE_CAP):
    bound = i0
    j = 0
    while j <= bound:
        if Q.q(j) > 0.0:
            bound = max(bound, Q.max_target(j))
        if bound >= cap:
            raise InfiniteSupportError(
                f"reachable state space from {i0} exceeds {cap}; dense-table "
                f"simulation needs a finite chain (use a birth-death spec "
                f"for unbounded ones)"
            )
        j += 1
    return bound + 1


def _dense_tables(Q, size):
    width = max((len(Q.row(s)) for s in range(size)), default=1)
    width = max(width, 1)
    q = np.zeros(size)
    nnz = np.zeros(size, dtype=np.int64)
    tgt = np.zeros((size, width), dtype=np.int64)
    cum = np.zeros((size, width))
    for s in range(size):
        q[s] = Q.q(s)
        acc = 0.0
        for k, (j, rate) in enumerate(Q.row(s)):
            acc += rate
            tgt[s, k] = j
            cum[s, k] = acc
        nnz[s] = len(Q.row(s))
    return q, cum, tgt, nnz


@dataclass(frozen=True)
class SimulationResult:
    """Aggregated path outcomes.

    ``states``/``freqs`` describe paths still alive at the horizon; the
    three defect channels are explosion (including exhausted jump budgets,
    counted conservatively as explosions), killing, and their sum is the
    empirical mass defect.
    """

    i: int
    t: float
    n_paths: int
    seed: int
    max_jumps: int
    method: str
    states: np.ndarray
    freqs: np.ndarray
    exploded: int
    killed: int
    budget_exhausted: int

    @property
    def mass(self):
        return float(self.freqs.sum()) / self.n_paths

    @property
    def explosion_frequency(self):
        return (self.exploded + self.budget_exhausted) / self.n_paths

    @property
    def kill_frequency(self):
        return self.killed / self.n_paths

    @property
    def defect_frequency(self):
        return 1.0 - self.mass

    def prob(self, j):
        """Empirical P_ij(t)."""
        idx = np.searchsorted(self.states, j)
        if idx < len(self.states) and self.states[idx] == j:
            return float(self.freqs[idx]) / self.n_paths
        return 0.0

    def tail_frequency(self, k):
        """Empirical sum_{j >= k} P_ij(t); exploded and killed paths count
        in neither head nor tail, matching the minimal process."""
        return float(self.freqs[self.states >= k].sum()) / self.n_paths

    def se(self, p):
        """Binomial standard error for an empirical frequency p."""
        p = min(max(p, 0.0), 1.0)
        return math.sqrt(p * (1.0 - p) / self.n_paths)

    def to_dict(self, head=32):
        top = {int(s): float(f) / self.n_paths
               for s, f in zip(self.states[:head], self.freqs[:head])}
        return {
            "i": self.i, "t": self.t, "n_paths": self.n_paths,
            "seed": self.seed, "method": self.method,
            "mass": self.mass,
            "explosion_frequency": self.explosion_frequency,
            "kill_frequency": self.kill_frequency,
            "se_defect": self.se(self.defect_frequency),
            "distribution_head": top,
        }


def simulate(Q, i, t, n_paths=100_000, max_jumps=1_000_000, seed=0):
    """Sample n_paths trajectories of the minimal process started at i.

    Birth-death families run through a closed-form kernel on their rate
    polynomials; anything else is materialized into dense jump tables,
    which requires the reachable space to be finite.

    Returns a :class:`SimulationResult`; identical arguments give
    bit-identical results.
    """
    if not isinstance(Q, QMatrix):
        raise TypeError(f"expected QMatrix, got {type(Q)!r}")
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    t = float(t)
    if not (t >= 0.0) or not math.isfinite(t):
        raise ValueError(f"horizon must be a finite nonnegative time, got {t}")

    if Q.birth_death is not None:
        spec = Q.birth_death
        bound = _explosion_bound(spec)
        out, state = bd_paths(spec.birth.coeffs, spec.death.coeffs,
                              int(i), t, int(n_paths), int(max_jumps),
                              int(seed), bound)
        method = "birth-death"
    else:
        size = _reachable_size(Q, int(i))
        q, cum, tgt, nnz = _dense_tables(Q, size)
        out, state = dense_paths(q, cum, tgt, nnz, int(i), t,
                                 int(n_paths), int(max_jumps), int(seed))
        method = "dense"

    alive = state[out == AT_STATE]
    states, freqs = np.unique(alive, return_counts=True)
    return SimulationResult(
        i=int(i), t=t, n_paths=int(n_paths), seed=int(seed),
        max_jumps=int(max_jumps), method=method,
        states=states, freqs=freqs.astype(np.int64),
        exploded=int(np.count_nonzero(out == EXPLODED)),
        killed=int(np.count_nonzero(out == KILLED)),
        budget_exhausted=int(np.count_nonzero(out == JUMP_BUDGET)),
    )
