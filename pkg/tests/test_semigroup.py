"""Transition kernels and certified brackets against independent oracles.

The oracles here never reuse the uniformization path under test: dense
matrix exponentials come from scipy.linalg.expm, time integration from
solve_ivp inside the package's own ODE cross-check, and closed forms from
pencil and paper.
"""

import math

import numpy as np
import pytest
import scipy.linalg

from minlab import (
    bd,
    minimal_entry,
    minimal_mass,
    minimal_tail,
    resolvent_deficiencies,
    resolvent_row,
    scheme_convergence_probe,
    transition,
    transition_ode,
    transition_row_grid,
    truncate_zero,
    validate,
)
from minlab.semigroup import entry_trace_rows
from minlab.errors import BadLambdaError, NonFiniteInputError


def _random_finite(rng, size=6, conservative=True):
    rates = rng.uniform(0.0, 3.0, (size, size))
    np.fill_diagonal(rates, 0.0)
    rows = []
    for i in range(size):
        entries = [[j, float(rates[i, j])] for j in range(size) if rates[i, j] > 0]
        row = {"i": i, "entries": entries}
        if not conservative:
            row["qi"] = float(rates[i].sum() + rng.uniform(0.0, 1.0))
        rows.append(row)
    Q = validate({"rows": rows})
    return truncate_zero(Q, size - 1)


def _expm_oracle(Qf, t):
    return scipy.linalg.expm(Qf.dense_generator() * t)


# ---------------------------------------------------------------------------
# kernel soundness
# ---------------------------------------------------------------------------


def test_uniformization_matches_expm():
    rng = np.random.default_rng(42)
    for trial in range(8):
        Qf = _random_finite(rng, conservative=(trial % 2 == 0))
        t = float(rng.uniform(0.1, 2.0))
        K = transition(Qf, t)
        np.testing.assert_allclose(K.matrix, _expm_oracle(Qf, t), atol=1e-10)


def test_uniformization_matches_ode():
    rng = np.random.default_rng(7)
    for _ in range(5):
        Qf = _random_finite(rng)
        t = float(rng.uniform(0.2, 1.5))
        K = transition(Qf, t)
        O = transition_ode(Qf, t)
        np.testing.assert_allclose(K.matrix, O.matrix, atol=1e-8)
        assert O.method != K.method


def test_identity_at_time_zero(two_state):
    Qf = truncate_zero(two_state, 1)
    K = transition(Qf, 0.0)
    np.testing.assert_allclose(K.matrix, np.eye(2), atol=0)


def test_two_state_closed_form(two_state):
    # P00(t) = (1 + exp(-2t)) / 2 for the symmetric rate-1 flip chain
    Qf = truncate_zero(two_state, 1)
    for t in (0.1, 0.5, 1.0, 3.0):
        K = transition(Qf, t)
        want = 0.5 * (1.0 + math.exp(-2.0 * t))
        assert K.entry(0, 0) == pytest.approx(want, abs=1e-10)
        assert K.entry(0, 1) == pytest.approx(1.0 - want, abs=1e-10)


def test_poisson_closed_form(poisson):
    # P_0j(t) = exp(-t) t^j / j!
    t = 0.8
    Qf = truncate_zero(poisson, 40)
    grid = transition_row_grid(Qf, 0, (t,))
    for j in range(12):
        want = math.exp(-t) * t**j / math.factorial(j)
        assert grid.probs[0, j] == pytest.approx(want, abs=1e-10)


def test_linear_death_closed_form():
    # starting at n with unit per-individual death: binomial thinning
    Q = bd("0", "i", absorbing_ok=True)
    n, t = 6, 0.7
    Qf = truncate_zero(Q, 8)
    grid = transition_row_grid(Qf, n, (t,))
    p = math.exp(-t)
    for k in range(n + 1):
        want = math.comb(n, k) * p**k * (1 - p) ** (n - k)
        assert grid.probs[0, k] == pytest.approx(want, abs=1e-10)


def test_chapman_kolmogorov():
    rng = np.random.default_rng(3)
    for _ in range(3):
        Qf = _random_finite(rng)
        s, t = 0.3, 0.7
        Ps = transition(Qf, s).matrix
        Pt = transition(Qf, t).matrix
        Pst = transition(Qf, s + t).matrix
        np.testing.assert_allclose(Ps @ Pt, Pst, atol=1e-9)


def test_mass_accounting(q_two):
    # in-window mass + killed + cut accounts for everything
    Qf = truncate_zero(q_two, 30)
    grid = transition_row_grid(Qf, 0, (0.5, 1.0))
    for r in range(2):
        total = grid.row_sum(r) + grid.killed[r] + grid.cut[r]
        assert total == pytest.approx(1.0, abs=1e-9)


def test_bad_time_rejected(q_one):
    Qf = truncate_zero(q_one, 4)
    with pytest.raises(NonFiniteInputError):
        transition(Qf, float("nan"))
    with pytest.raises(NonFiniteInputError):
        transition(Qf, -1.0)


# ---------------------------------------------------------------------------
# resolvent
# ---------------------------------------------------------------------------


def test_resolvent_is_laplace_transform(two_state):
    # R_ij(lam) = integral exp(-lam t) P_ij(t) dt, two-state closed form:
    # R_00 = (1/lam + 1/(lam+2)) / 2
    Qf = truncate_zero(two_state, 1)
    for lam in (0.5, 1.0, 4.0):
        s = resolvent_row(Qf, lam, 0)
        want = 0.5 * (1.0 / lam + 1.0 / (lam + 2.0))
        assert s.values[0] == pytest.approx(want, rel=1e-12)
        assert s.z == pytest.approx(0.0, abs=1e-12)


def test_deficiency_identity():
    rng = np.random.default_rng(11)
    Qf = _random_finite(rng, conservative=False)
    lam = 1.3
    z = resolvent_deficiencies(Qf, lam)
    for i in range(Qf.size):
        s = resolvent_row(Qf, lam, i)
        # z_i = 1 - lam * sum_j R_ij by definition, two solves must agree
        assert s.z == pytest.approx(z[i], abs=1e-10)
        assert lam * s.values.sum() + s.z == pytest.approx(1.0, abs=1e-12)


def test_deficiency_zero_matrix():
    Q = bd("0", "0", absorbing_ok=True)
    Qf = truncate_zero(Q, 5)
    z = resolvent_deficiencies(Qf, 1.0)
    np.testing.assert_allclose(z, 0.0, atol=1e-14)


def test_bad_lambda(q_one):
    Qf = truncate_zero(q_one, 4)
    with pytest.raises(BadLambdaError):
        resolvent_row(Qf, 0.0, 0)
    with pytest.raises(BadLambdaError):
        resolvent_deficiencies(Qf, -2.0)


# ---------------------------------------------------------------------------
# brackets
# ---------------------------------------------------------------------------


def test_bracket_contains_limit(q_one):
    # independent limit estimate: zero truncation at twice the bracket level
    t = 0.25
    b = minimal_entry(q_one, 0, 0, t, tol=1e-6)
    Qf = truncate_zero(q_one, 2 * b.level)
    deep = transition_row_grid(Qf, 0, (t,)).probs[0, 0]
    assert b.lo - 1e-9 <= deep <= b.best_hi() + 1e-9
    assert b.lo <= b.hi
    assert 0.0 <= b.lo and b.hi <= 1.0


def test_bracket_history_monotone(q_two):
    b = minimal_mass(q_two, 0, 1.0, tol=2e-2,
                     schedule=(8, 16, 32, 64, 128, 256, 512, 640, 800, 1000))
    los = [lo for _, lo, _ in b.history]
    his = [hi for _, _, hi in b.history]
    assert los == sorted(los)
    assert his == sorted(his, reverse=True)
    assert "numerical-limit" in b.flags
    assert b.numeric_hi is not None and b.numeric_hi < 1.0


def test_finite_exact_bracket(two_state):
    b = minimal_entry(two_state, 0, 1, 0.5, tol=1e-6)
    assert "finite-exact" in b.flags
    want = 0.5 * (1.0 - math.exp(-1.0))
    assert b.lo <= want <= b.hi
    assert b.hi - b.lo <= 1e-11


def test_tail_plus_head_is_mass(q_one):
    # tail(k) + head(k-1) = mass, brackets must be consistent
    i, k, t = 0, 3, 0.5
    tail = minimal_tail(q_one, i, k, t, tol=1e-7)
    mass = minimal_mass(q_one, i, t, tol=1e-7)
    assert tail.lo <= mass.hi
    assert tail.best_hi() <= mass.best_hi() + 1e-7


def test_tail_zero_equals_mass(q_two):
    a = minimal_tail(q_two, 1, 0, 0.5, tol=1e-2)
    b = minimal_mass(q_two, 1, 0.5, tol=1e-2)
    assert a.lo == b.lo and a.hi == b.hi


# ---------------------------------------------------------------------------
# traces and probes
# ---------------------------------------------------------------------------


def test_entry_traces_nondecreasing(q_two):
    levels, rows = entry_trace_rows(q_two, 0, 0.25, schedule=(8, 16, 32, 64),
                                    j_max=8)
    assert list(levels) == [8, 16, 32, 64]
    diffs = np.diff(rows, axis=0)
    assert diffs.min() >= 0.0


def test_trace_agrees_with_direct(q_one):
    t = 0.25
    levels, rows = entry_trace_rows(q_one, 0, t, schedule=(8, 16, 32), j_max=5)
    Qf = truncate_zero(q_one, 32)
    direct = transition_row_grid(Qf, 0, (t,)).probs[0, :6]
    np.testing.assert_allclose(rows[-1], direct, atol=1e-9)


def test_probe_zero_monotone(q_two):
    zero = scheme_convergence_probe(q_two, "zero", 0, 2, 0.25,
                                    schedule=(8, 16, 32, 64))
    assert zero.monotone
    assert zero.limit_in_bracket


def test_probe_mask_converges_interior(q_two):
    # interior mask columns settle into the zero-scheme bracket; the
    # non-monotone behavior lives at the moving boundary column, which
    # mask_monotonicity_witness exhibits (see scenario tests)
    mask = scheme_convergence_probe(q_two, "mask", 0, 3, 1.0,
                                    schedule=(8, 16, 32, 64),
                                    mask_mode="index")
    assert mask.limit_in_bracket
    assert abs(mask.values[-1] - mask.values[-2]) < 1e-6
