"""minlab: minimal Q-processes, stochastic comparability, regularity."""

from .dominance import (
    DominanceReport,
    TransferReport,
    conservative_reduction_check,
    generator_dominance,
    is_monotone_process,
    kirstein_transfer,
    process_dominance,
    row_head,
    row_tail,
    single_birth_monotonicity,
)
from .expressions import RatePoly, parse_rate, poly_dominates
from .montecarlo import SimulationResult, simulate
from .qmatrix import (
    BirthDeathSpec,
    QMatrix,
    bd,
    is_conservative,
    is_single_birth,
    load_spec,
    make_birth_death,
    validate,
)
from .regularity import (
    LyapunovCertificate,
    RegularityVerdict,
    birth_death_series,
    deficiency_test,
    lyapunov_test,
    regularity_by_comparison,
    truncated_comparison_probe,
)
from .scenarios import (
    ScenarioReport,
    mask_monotonicity_witness,
    quadratic_pair,
    run_counterexample,
    run_footnote_example,
    run_kirstein_demo,
)
from .semigroup import (
    BracketedValue,
    TransitionKernel,
    entry_trace_rows,
    minimal_entry,
    minimal_mass,
    minimal_tail,
    resolvent_deficiencies,
    resolvent_row,
    scheme_convergence_probe,
    transition,
    transition_ode,
    transition_row_grid,
)
from .truncation import (
    FiniteQMatrix,
    Provenance,
    geometric_levels,
    truncate,
    truncate_absorb,
    truncate_general,
    truncate_mask,
    truncate_stop,
    truncate_zero,
)

__version__ = "0.1.0"

__all__ = [
    "BirthDeathSpec",
    "BracketedValue",
    "DominanceReport",
    "FiniteQMatrix",
    "LyapunovCertificate",
    "Provenance",
    "QMatrix",
    "RatePoly",
    "RegularityVerdict",
    "ScenarioReport",
    "SimulationResult",
    "TransferReport",
    "TransitionKernel",
    "bd",
    "birth_death_series",
    "conservative_reduction_check",
    "deficiency_test",
    "entry_trace_rows",
    "generator_dominance",
    "geometric_levels",
    "is_conservative",
    "is_monotone_process",
    "is_single_birth",
    "kirstein_transfer",
    "load_spec",
    "lyapunov_test",
    "make_birth_death",
    "mask_monotonicity_witness",
    "minimal_entry",
    "minimal_mass",
    "minimal_tail",
    "parse_rate",
    "poly_dominates",
    "process_dominance",
    "quadratic_pair",
    "regularity_by_comparison",
    "resolvent_deficiencies",
    "resolvent_row",
    "row_head",
    "row_tail",
    "run_counterexample",
    "run_footnote_example",
    "run_kirstein_demo",
    "scheme_convergence_probe",
    "simulate",
    "single_birth_monotonicity",
    "transition",
    "transition_ode",
    "transition_row_grid",
    "truncate",
    "truncate_absorb",
    "truncate_general",
    "truncate_mask",
    "truncate_stop",
    "truncate_zero",
    "truncated_comparison_probe",
    "validate",
    "__version__",
]
