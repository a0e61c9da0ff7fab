"""Path sampler checks against closed forms and the numerical kernel.

The sampler is the one component with no analytic fallback for explosive
chains, so everything here pins it to cases where the answer is known:
finite chains (exact kernels), Poisson counts, pure killing, and the
quadratic explosive chain whose defect the bracket machinery computes.
"""

import math

import numpy as np
import pytest

from minlab import QMatrix, bd, minimal_mass, simulate, validate
from minlab.errors import InfiniteSupportError


def _sigma(p, n):
    return math.sqrt(p * (1.0 - p) / n)


def test_same_seed_is_bit_identical(q_two):
    a = simulate(q_two, 0, 1.0, n_paths=5_000, seed=7)
    b = simulate(q_two, 0, 1.0, n_paths=5_000, seed=7)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.freqs, b.freqs)
    assert (a.exploded, a.killed, a.budget_exhausted) == (
        b.exploded, b.killed, b.budget_exhausted)


def test_seed_actually_matters(q_two):
    a = simulate(q_two, 0, 1.0, n_paths=5_000, seed=7)
    b = simulate(q_two, 0, 1.0, n_paths=5_000, seed=8)
    assert a.exploded != b.exploded or not np.array_equal(a.freqs, b.freqs)


def test_horizon_zero(q_two):
    r = simulate(q_two, 3, 0.0, n_paths=1_000, seed=1)
    assert r.prob(3) == 1.0
    assert r.mass == 1.0
    assert r.exploded == r.killed == r.budget_exhausted == 0


def test_two_state_closed_form(two_state):
    # Symmetric flip at rate 1: P00(t) = (1 + exp(-2t)) / 2.
    t, n = 0.7, 40_000
    r = simulate(two_state, 0, t, n_paths=n, seed=3)
    exact = 0.5 * (1.0 + math.exp(-2.0 * t))
    assert r.method == "dense"
    assert abs(r.prob(0) - exact) < 4.0 * _sigma(exact, n)
    assert r.mass == 1.0


def test_poisson_closed_form(poisson):
    t, n = 1.5, 40_000
    r = simulate(poisson, 0, t, n_paths=n, seed=5)
    assert r.method == "birth-death"
    assert r.mass == 1.0
    for j in (0, 1, 2, 4):
        exact = math.exp(-t) * t**j / math.factorial(j)
        assert abs(r.prob(j) - exact) < 4.0 * _sigma(exact, n)


def test_pure_killing_channel():
    # One state, no transitions, unit killing: survival is exp(-t).
    Q = validate({"family": "explicit", "states": 1,
                  "rows": [{"i": 0, "entries": [], "qi": 1.0}]})
    t, n = 0.9, 40_000
    r = simulate(Q, 0, t, n_paths=n, seed=2)
    exact = math.exp(-t)
    assert r.exploded == 0
    assert r.killed == n - int(round(r.mass * n))
    assert abs(r.mass - exact) < 4.0 * _sigma(exact, n)
    assert abs(r.kill_frequency - (1.0 - exact)) < 4.0 * _sigma(exact, n)


def test_explosion_frequency_matches_bracket(q_two):
    # The explosive quadratic chain loses mass; the sampler's explosion
    # frequency must agree with the bracketed defect of the minimal kernel.
    t, n = 1.0, 30_000
    r = simulate(q_two, 0, t, n_paths=n, seed=11)
    mass = minimal_mass(q_two, 0, t)
    defect_lo = 1.0 - mass.best_hi()
    defect_hi = 1.0 - mass.lo
    mid = 0.5 * (defect_lo + defect_hi)
    assert r.exploded > 0
    assert abs(r.explosion_frequency - mid) < 4.0 * _sigma(mid, n) + (defect_hi - defect_lo)


def test_jump_budget_counts_as_explosion(q_two):
    r = simulate(q_two, 0, 1.0, n_paths=2_000, max_jumps=40, seed=4)
    assert r.budget_exhausted > 0
    assert r.explosion_frequency == (r.exploded + r.budget_exhausted) / r.n_paths
    # Same seed, bigger budget: cut paths either survive or explode on
    # their own, so the flagged set can only shrink.
    full = simulate(q_two, 0, 1.0, n_paths=2_000, max_jumps=100_000, seed=4)
    assert full.budget_exhausted < r.budget_exhausted + r.exploded
    assert full.explosion_frequency <= r.explosion_frequency


def test_tail_and_prob_consistency(q_one):
    r = simulate(q_one, 1, 0.8, n_paths=10_000, seed=9)
    assert r.tail_frequency(0) == pytest.approx(r.mass)
    total = sum(r.prob(int(j)) for j in r.states)
    assert total == pytest.approx(r.mass)
    assert r.defect_frequency == pytest.approx(1.0 - r.mass)


def test_to_dict_shape(poisson):
    d = simulate(poisson, 0, 0.5, n_paths=1_000, seed=0).to_dict(head=4)
    assert set(d) == {"i", "t", "n_paths", "seed", "method", "mass",
                      "explosion_frequency", "kill_frequency", "se_defect",
                      "distribution_head"}
    assert len(d["distribution_head"]) <= 4
    assert d["se_defect"] >= 0.0


def test_standard_error():
    r = simulate(bd("1", "0"), 0, 0.1, n_paths=400, seed=0)
    assert r.se(0.0) == 0.0
    assert r.se(0.5) == pytest.approx(math.sqrt(0.25 / 400))
    assert r.se(2.0) == 0.0  # clamped


def test_rejects_bad_arguments(poisson):
    with pytest.raises(TypeError):
        simulate("not a matrix", 0, 1.0)
    with pytest.raises(ValueError):
        simulate(poisson, 0, 1.0, n_paths=0)
    with pytest.raises(ValueError):
        simulate(poisson, 0, float("inf"))
    with pytest.raises(ValueError):
        simulate(poisson, 0, -1.0)


def test_infinite_dense_support_is_refused():
    # A two-step skip chain is not birth-death, so the sampler would need
    # dense tables over an unbounded reachable set.
    Q = QMatrix(lambda i: [(i + 2, 1.0)], lambda i: 1.0, family_tag="skip")
    with pytest.raises(InfiniteSupportError):
        simulate(Q, 0, 1.0, n_paths=10)
