"""Regularity deciders: resolvent deficiency, the drift criterion,
the birth-death rate series, and transfer along generator dominance.

The corpus below sticks to families where both numerical deciders are
decisive at their default tolerances.  Linear-rate regular chains are
deliberately absent: their deficiency decays like 1/n and stalls the
level schedule without reaching a verdict.
"""

import math

import pytest

from minlab import (
    bd,
    birth_death_series,
    deficiency_test,
    lyapunov_test,
    regularity_by_comparison,
    truncated_comparison_probe,
    validate,
)
from minlab.errors import (
    BadLambdaError,
    DominancePreconditionFailedError,
    NegativePhiError,
    NotConservativeError,
    PreconditionFailedError,
    ZeroBirthRateError,
)

REGULAR = "regular-certified-up-to-tol"
NONREGULAR = "nonregular-numerical"

# (birth, death, is_regular)
CORPUS = [
    ("0.4*(i+1)^2", "(i+1)^2", True),
    ("0.5*(i+1)^2", "(i+1)^2", True),
    ("(i+1)^2", "(i+1)^2", True),
    ("2*(i+1)^2", "(i+1)^2", False),
    ("3*(i+1)^2", "(i+1)^2", False),
    ("4*(i+1)^2", "(i+1)^2", False),
    ("(i+1)^2", "0", False),
    ("(i+1)^2", "3*(i+1)^2", True),
    ("1", "0", True),
    ("1", "1", True),
    ("2", "1", True),
]


class TestDeficiency:
    def test_quadratic_pair_verdicts(self, q_one, q_two):
        v1 = deficiency_test(q_one)
        v2 = deficiency_test(q_two)
        assert v1.verdict == REGULAR
        assert v1.is_regular and not v1.is_nonregular
        assert v2.verdict == NONREGULAR
        assert v2.is_nonregular and not v2.is_regular

    def test_nonregular_z_strictly_increasing(self, q_two):
        # Deficiency grows with the starting state: higher starts explode
        # sooner, so they lose more resolvent mass.
        v = deficiency_test(q_two)
        z = v.evidence["z_final"]
        assert len(z) == 6
        for lo, hi in zip(z, z[1:]):
            assert hi - lo > 1e-6
        assert all(0.0 < zi < 1.0 for zi in z)

    def test_lambda_independence(self, q_one, q_two):
        # Regularity does not depend on the resolvent parameter; only the
        # numerical z values do.  Small lam slows truncation convergence
        # for regular chains, so the regular side probes lam >= 1 only.
        for lam in (2.0, 4.0):
            assert deficiency_test(q_one, lam=lam).is_regular
        for lam in (0.5, 2.0):
            assert deficiency_test(q_two, lam=lam).is_nonregular

    def test_zero_matrix_is_regular(self):
        Q = validate({"family": "explicit", "states": 3, "rows": []})
        v = deficiency_test(Q)
        assert v.is_regular
        assert max(abs(zi) for zi in v.evidence["z_final"]) < 1e-12

    @pytest.mark.parametrize("lam", [0.0, -1.0, float("nan")])
    def test_bad_lambda_rejected(self, q_one, lam):
        with pytest.raises(BadLambdaError):
            deficiency_test(q_one, lam=lam)


class TestSeries:
    @pytest.mark.parametrize("birth,death,regular", CORPUS)
    def test_corpus_verdicts(self, birth, death, regular):
        v = birth_death_series(bd(birth, death))
        assert v.is_regular == regular
        assert v.is_nonregular == (not regular)

    @pytest.mark.parametrize("birth,death,regular", CORPUS)
    def test_agrees_with_deficiency(self, birth, death, regular):
        Q = bd(birth, death)
        assert birth_death_series(Q).is_regular == deficiency_test(Q).is_regular

    def test_rejects_zero_birth_rate(self):
        Q = bd("i", "i", absorbing_ok=True)
        with pytest.raises(ZeroBirthRateError):
            birth_death_series(Q)

    def test_rejects_general_matrix(self, two_state):
        with pytest.raises(ValueError):
            birth_death_series(two_state)


class TestLyapunov:
    def test_linear_symmetric_margins_exact(self):
        # Drift of phi(i) = i vanishes identically when birth == death,
        # so every margin is exactly zero at c = 0.
        Q = bd("i", "i", absorbing_ok=True)
        verdict, cert = lyapunov_test(Q, lambda i: float(i), c=0.0)
        assert verdict.is_regular
        assert verdict.method == "lyapunov"
        assert cert.margins == tuple(0.0 for _ in cert.margins)
        assert cert.min_margin == 0.0
        assert cert.growth_ok and cert.nondecreasing

    def test_poisson_margins_exact(self):
        # Unit drift against c*(1 + i) leaves margin exactly i.
        Q = bd("1", "0")
        verdict, cert = lyapunov_test(Q, lambda i: float(i), c=1.0)
        assert verdict.is_regular
        assert cert.margins == tuple(float(i) for i in range(cert.probe_max + 1))
        assert cert.argmin == 0

    def test_subcritical_quadratic_certified(self):
        # At the reflecting origin the drift is b(0) = 0.4, so c must
        # absorb it; away from 0 the net drift is -0.6*(i+1)^2 < 0.
        verdict, cert = lyapunov_test(
            bd("0.4*(i+1)^2", "(i+1)^2"), lambda i: float(i), c=0.4
        )
        assert verdict.is_regular
        assert cert.min_margin == 0.0 and cert.argmin == 0

    def test_sound_against_deficiency(self):
        # A valid certificate must never contradict the resolvent decider.
        for birth, death in [("0.4*(i+1)^2", "(i+1)^2"), ("1", "1")]:
            Q = bd(birth, death)
            verdict, _ = lyapunov_test(Q, lambda i: float(i), c=1.0)
            if verdict.is_regular:
                assert not deficiency_test(Q).is_nonregular

    def test_rejects_killing(self):
        Q = validate({
            "family": "explicit",
            "states": 2,
            "rows": [
                {"i": 0, "entries": [[1, 1.0]], "qi": 2.0},
                {"i": 1, "entries": [[0, 1.0]]},
            ],
        })
        assert Q.defect(0) > 0
        with pytest.raises(NotConservativeError):
            lyapunov_test(Q, lambda i: float(i), c=1.0)

    def test_rejects_negative_phi(self):
        with pytest.raises(NegativePhiError):
            lyapunov_test(bd("1", "0"), lambda i: float(i) - 5.0, c=1.0)

    def test_failed_certificate_is_not_a_verdict(self, q_two):
        # phi(i) = i cannot certify an explosive chain; the test must
        # report an invalid certificate rather than claim nonregularity.
        verdict, cert = lyapunov_test(q_two, lambda i: float(i), c=0.0)
        assert not verdict.is_regular
        assert not verdict.is_nonregular
        assert cert.min_margin < 0.0


class TestComparisonTransfer:
    def test_transfer_from_certified_majorant(self):
        Q1 = bd("1", "1")
        Q2 = bd("i+1", "1")
        evidence, _ = lyapunov_test(Q2, lambda i: float(i), c=1.0)
        assert evidence.is_regular
        out = regularity_by_comparison(Q1, Q2, evidence)
        assert out.is_regular
        assert out.method == "comparison"
        assert "cross-check-regular" in out.flags
        assert out.evidence["q2_method"] == "lyapunov"

    def test_refuses_without_dominance(self, q_one, q_two):
        # q_two is not dominated by q_one, so no conclusion transfers.
        evidence = deficiency_test(q_one)
        with pytest.raises(PreconditionFailedError):
            regularity_by_comparison(q_two, q_one, evidence)

    def test_refuses_nonregular_evidence(self, q_one, q_two):
        evidence = deficiency_test(q_two)
        assert not evidence.is_regular
        with pytest.raises(PreconditionFailedError):
            regularity_by_comparison(q_one, q_two, evidence)


class TestTruncatedComparison:
    def test_quadratic_pair_probe(self, q_one, q_two):
        table = truncated_comparison_probe(q_one, q_two, 16)
        assert table.n == 16
        assert len(table.rows) == 16 * len(table.t_grid)
        assert table.inequality_ok
        assert table.localization_ok
        # The faster chain pushes strictly more mass to the boundary.
        assert all(r.tail_q1 < r.tail_q2 for r in table.rows)

    def test_probe_refuses_reversed_pair(self, q_one, q_two):
        with pytest.raises(DominancePreconditionFailedError):
            truncated_comparison_probe(q_two, q_one, 16)

    def test_localization_gap_is_tiny(self, q_one, q_two):
        table = truncated_comparison_probe(q_one, q_two, 12, t_grid=(0.5,))
        assert table.max_localization_gap <= 1e-11
        assert table.max_tail_violation <= 0.0
