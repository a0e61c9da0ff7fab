"""Dominance deciders: generator form, reduction, process form, transfer."""

import pytest
from hypothesis import given, settings, strategies as st

from minlab import (
    bd,
    conservative_reduction_check,
    generator_dominance,
    is_monotone_process,
    kirstein_transfer,
    process_dominance,
    row_head,
    row_tail,
    single_birth_monotonicity,
    validate,
)
from minlab.dominance import FAILS, HOLDS
from minlab.errors import PreconditionFailedError


def test_row_tail_head(q_two):
    # row 3: down 16 to state 2, up 32 to state 4, diagonal -48
    assert row_tail(q_two, 3, 4) == pytest.approx(32.0)
    assert row_tail(q_two, 3, 3) == pytest.approx(32.0 - 48.0)
    assert row_tail(q_two, 3, 0) == pytest.approx(0.0)
    assert row_head(q_two, 3, 2) == pytest.approx(16.0)
    assert row_head(q_two, 3, 3) == pytest.approx(16.0 - 48.0)
    assert row_head(q_two, 3, 4) == pytest.approx(0.0)


def test_quadratic_pair_generator_holds(q_one, q_two):
    rep = generator_dominance(q_one, q_two, M_max=50)
    assert rep.verdict == HOLDS
    assert rep.witness is None
    assert "family-certified" in rep.flags
    assert rep.reduction_used == "conservative"


def test_reversed_pair_fails_with_witness(q_one, q_two):
    rep = generator_dominance(q_two, q_one, M_max=10)
    assert rep.verdict == FAILS
    assert rep.witness == (0, 0, 1)
    v1, v2 = rep.witness_values
    assert v1 == pytest.approx(2.0)
    assert v2 == pytest.approx(1.0)


def test_full_and_reduced_agree_on_pair(q_one, q_two):
    full, red = conservative_reduction_check(q_one, q_two, M_max=20)
    assert full.verdict == red.verdict == HOLDS
    assert full.reduction_used == "full"
    assert red.reduction_used == "conservative"


def test_reduction_requires_conservative():
    killed = validate({"rows": [{"i": 0, "entries": [[1, 1.0]], "qi": 2.0}]})
    with pytest.raises(PreconditionFailedError):
        generator_dominance(killed, killed, M_max=3, reduction="conservative")
    # the full form still runs
    rep = generator_dominance(killed, killed, M_max=3, reduction="full")
    assert rep.verdict == HOLDS


_coef = st.integers(0, 3)


@st.composite
def _bd_matrix(draw):
    b0 = draw(_coef)
    b1 = draw(_coef)
    a1 = draw(_coef)
    if b0 + b1 == 0:
        b0 = 1
    birth = f"{b0} + {b1}*i"
    death = f"{a1}*i"
    return bd(birth, death, absorbing_ok=True)


@settings(max_examples=40, deadline=None)
@given(_bd_matrix(), _bd_matrix())
def test_full_equals_reduced_property(Q1, Q2):
    # both forms must agree verdict-for-verdict on conservative pairs
    full, red = conservative_reduction_check(Q1, Q2, M_max=8)
    assert full.verdict == red.verdict
    if full.verdict == FAILS:
        # witnesses are normalized to tail coordinates, values must differ
        # in the violating direction at the reduced witness too
        i, m, k = red.witness
        assert row_tail(Q1, i, k) > row_tail(Q2, m, k)


@settings(max_examples=25, deadline=None)
@given(_bd_matrix())
def test_generator_self_dominance(Q):
    rep = generator_dominance(Q, Q, M_max=8)
    assert rep.verdict == HOLDS


def test_process_dominance_bounded_pair():
    Q1 = bd("1", "1")
    Q2 = bd("2", "1")
    rep = process_dominance(Q1, Q2, M_max=4, K_max=6, t_grid=(0.5, 1.0))
    assert rep.verdict == HOLDS
    assert rep.kind == "process"
    assert rep.cells_checked > 0


def test_process_implies_generator_contrapositive():
    # higher death rate on the right violates the generator condition, and
    # the process comparison must refute as well (tails really are smaller)
    Q1 = bd("1", "1")
    Q2 = bd("1", "2")
    gen = generator_dominance(Q1, Q2, M_max=10)
    assert gen.verdict == FAILS
    proc = process_dominance(Q1, Q2, M_max=3, K_max=4, t_grid=(1.0,),
                             tol=1e-6)
    assert proc.verdict == FAILS


def test_process_witness_format(q_one, q_two):
    rep = process_dominance(q_one, q_two, M_max=2, K_max=3, t_grid=(1.0,),
                            tol=2e-2,
                            schedule=(8, 16, 32, 64, 128, 256, 512, 640, 800, 1000))
    assert rep.verdict == FAILS
    i, m, k, t = rep.witness
    assert (i, m, k, t) == (0, 0, 0, 1.0)
    left, right = rep.witness_values
    assert left.lo > right.best_hi()


def test_monotone_poisson(poisson):
    rep = is_monotone_process(poisson, M_max=3, K_max=5, t_grid=(0.5,))
    assert rep.verdict == HOLDS


def test_monotone_two_state(two_state):
    rep = is_monotone_process(two_state, M_max=1, K_max=2, t_grid=(0.5, 1.0))
    assert rep.verdict == HOLDS


def test_transfer_bounded(q_one):
    rep = kirstein_transfer(bd("1", "1"), bd("2", "1"), M_max=3, K_max=4,
                            t_grid=(0.5,))
    assert rep.q2_bounded
    assert rep.expected_transfer
    assert rep.generator.verdict == HOLDS
    assert rep.process.verdict == HOLDS
    assert rep.consistent


def test_transfer_counterexample_flags(q_one, q_two):
    rep = kirstein_transfer(q_one, q_two, M_max=2, K_max=3, t_grid=(1.0,),
                            tol=2e-2,
                            schedule=(8, 16, 32, 64, 128, 256, 512, 640, 800, 1000))
    assert not rep.q2_bounded
    assert rep.q2_regular_evidence == "none"
    assert not rep.expected_transfer
    assert "outside-transfer-hypotheses" in rep.flags
    assert rep.generator.verdict == HOLDS
    assert rep.process.verdict == FAILS
    assert rep.consistent


def test_single_birth_monotonicity(q_one):
    rep = single_birth_monotonicity(q_one, "regular", M_max=2, K_max=3,
                                    t_grid=(0.5,))
    assert rep.biconditional_ok