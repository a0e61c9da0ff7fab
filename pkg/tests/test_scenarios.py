"""End-to-end scenario reports.

Each scenario re-derives its own pass/fail from the findings it carries,
so these tests double as tamper checks: edit a finding and the report
must flip to failing without any cached verdict getting in the way.
"""

import copy

import pytest

from minlab import (
    mask_monotonicity_witness,
    quadratic_pair,
    run_counterexample,
    run_footnote_example,
    run_kirstein_demo,
)
from minlab._jsonutil import dumps
from minlab.errors import WitnessNotFoundError

# Trimmed path counts keep the full-report tests comfortably fast; the
# statistical agreement check tolerates the wider standard error.
FAST_PATHS = 20_000


@pytest.fixture(scope="module")
def cx_report():
    return run_counterexample(n_paths=FAST_PATHS)


@pytest.fixture(scope="module")
def fn_report():
    return run_footnote_example()


@pytest.fixture(scope="module")
def kd_report():
    return run_kirstein_demo()


def test_quadratic_pair_alpha_validation():
    with pytest.raises(ValueError):
        quadratic_pair(0.0)
    with pytest.raises(ValueError):
        quadratic_pair(float("inf"))
    Q1, Q2 = quadratic_pair(1.0)
    assert Q1.birth_death is not None and Q2.birth_death is not None


def test_counterexample_passes(cx_report):
    assert cx_report.passed()
    names = {c.name for c in cx_report.checks()}
    assert "generator-dominance-holds" in names
    assert "process-dominance-fails" in names
    assert "witness-at-origin" in names
    assert "mc-defect-agrees" in names


def test_counterexample_report_dict(cx_report):
    d = cx_report.to_dict()
    assert d["report_version"] == 1
    assert d["scenario"] == "counterexample"
    assert d["passed"] is True
    assert all(c["ok"] for c in d["checks"])
    # Byte-determinism of the serialized report.
    assert dumps(d) == dumps(cx_report.to_dict())


def test_counterexample_tamper_flips_verdict(cx_report):
    broken = copy.deepcopy(cx_report)
    broken.findings["generator"]["verdict"] = "fails"
    assert not broken.passed()
    bad = [c.name for c in broken.checks() if not c.ok]
    assert "generator-dominance-holds" in bad
    # The original is untouched.
    assert cx_report.passed()


def test_counterexample_defect_grows_with_alpha(cx_report):
    hotter = run_counterexample(alpha=4.0, n_paths=FAST_PATHS)
    assert hotter.passed()

    def defect(rep):
        mass = rep.findings["mass_q2"]
        return 1.0 - mass["best_hi"]

    assert defect(hotter) > defect(cx_report) > 0.0


def test_counterexample_regular_regime():
    rep = run_counterexample(alpha=1.0, n_paths=FAST_PATHS)
    assert rep.passed()
    assert "outside-counterexample-regime" in rep.flags
    names = {c.name for c in rep.checks()}
    assert "q2-regular" in names
    assert "process-dominance-not-refuted" in names
    assert "process-dominance-fails" not in names


def test_footnote_passes(fn_report):
    assert fn_report.passed()
    names = {c.name for c in fn_report.checks()}
    assert "row-sums-honest" in names
    assert "decreasing-entry-found" in names
    assert "mass-deficient" in names


def test_footnote_witness_sits_at_boundary(fn_report):
    # The decrease lives in the moving boundary column: the first masked
    # state j = n + 1 collects mass at level n and releases it at n + 1.
    n, n1, start, j, t, v_n, v_n1 = fn_report.findings["search"]["witness"]
    assert n1 == n + 1
    assert j == n + 1
    assert v_n > v_n1 + 1e-9


def test_footnote_regular_regime():
    rep = run_footnote_example(alpha=1.0)
    assert rep.passed()
    names = {c.name for c in rep.checks()}
    assert "mass-honest" in names
    assert "mask-limit-in-minimal-bracket" in names


def test_footnote_explicit_spec_no_witness():
    # The zero generator never moves, so masked kernels are exactly the
    # identity at every level and no decreasing entry exists.
    spec = {"family": "explicit", "states": 4, "rows": []}
    rep = run_footnote_example(spec=spec, starts=(0, 1), t_grid=(1.0,),
                               level_lo=2, level_hi=3, limit_level=8)
    assert rep.passed()
    assert rep.findings["search"]["witness"] is None

    # Demanding a witness anyway raises, with the computed report attached
    # so callers can still inspect what the search visited.
    with pytest.raises(WitnessNotFoundError) as err:
        run_footnote_example(spec=spec, starts=(0, 1), t_grid=(1.0,),
                             level_lo=2, level_hi=3, limit_level=8,
                             require_witness=True)
    attached = err.value.report
    assert attached is not None
    assert attached.findings["search"]["witness"] is None
    assert attached.findings["search"]["levels_visited"] == [2, 3]


def test_mask_witness_search_direct(q_two):
    out = mask_monotonicity_witness(q_two, starts=(0,), t_grid=(1.0,),
                                    level_lo=8, level_hi=32)
    assert out["witness"] is not None
    n, n1, start, j, t, v_n, v_n1 = out["witness"]
    assert n1 == n + 1 and j == n + 1 and start == 0 and t == 1.0
    assert v_n > v_n1
    assert out["row_sums_ok"]
    assert out["worst_row_sum_deviation"] <= 1e-9


def test_kirstein_demo_passes(kd_report):
    assert kd_report.passed()
    d = kd_report.to_dict()
    assert d["scenario"] == "kirstein"
    assert dumps(d) == dumps(kd_report.to_dict())


def test_kirstein_demo_contains_three_cases(kd_report):
    f = kd_report.findings
    assert f["bounded_pair"]["consistent"] is True
    assert f["certified_pair"]["consistent"] is True
    assert f["lyapunov_verdict"]["verdict"] == "regular-certified-up-to-tol"
    gap = f["counterexample_pair"]
    assert gap["generator"]["verdict"] == "holds"
    assert gap["process"]["verdict"] == "fails"
    assert gap["expected_transfer"] is False


def test_reports_are_recomputed_not_cached(fn_report):
    broken = copy.deepcopy(fn_report)
    broken.findings["mass"]["best_hi"] = 1.0
    assert not broken.passed()


def test_scenario_rerun_is_deterministic():
    a = run_counterexample(n_paths=5_000, schedule=(8, 16, 32, 64, 128, 256))
    b = run_counterexample(n_paths=5_000, schedule=(8, 16, 32, 64, 128, 256))
    assert dumps(a.to_dict()) == dumps(b.to_dict())
