"""Simulation and estimation toolkit for two-period, two-arm sequential experiments."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Assignment,
    AssumptionReport,
    DesignKind,
    Estimands,
    Panel,
    PanelMeta,
    PotentialOutcomeTable,
    assign,
    carryover,
    check_assumptions,
    observe,
    oracle_estimands,
)
from .estimators import (  # noqa: E402
    EstimateResult,
    EstimatorKind,
    FwlDecomposition,
    estimate,
    fwl_decompose,
    stack,
)
from .dgp import (  # noqa: E402
    CarryoverKind,
    CovariateDrift,
    DgpConfig,
    constant_symmetric,
    expected_naive_coefficient,
    gen_covariates,
    gen_outcomes,
    gen_unit,
    simulate_panel,
)
from .stats import (  # noqa: E402
    CollinearityError,
    DegenerateOutcome,
    SeparationWarning,
    fisher_exact_2x2,
    logistic_fit,
    ols_fit,
    residualize,
)
from .diagnostics import DiagnosticReport, diagnose, fisher_t1, heuristic_gap, washout_preview  # noqa: E402
from .harness import SweepConfig, SweepResult, preset_fig3, preset_fig5, run_sweep  # noqa: E402

__all__ = [
    "__version__",
    "assign",
    "Assignment",
    "AssumptionReport",
    "carryover",
    "CarryoverKind",
    "check_assumptions",
    "CollinearityError",
    "constant_symmetric",
    "CovariateDrift",
    "DegenerateOutcome",
    "DesignKind",
    "DgpConfig",
    "diagnose",
    "DiagnosticReport",
    "Estimands",
    "estimate",
    "EstimateResult",
    "EstimatorKind",
    "expected_naive_coefficient",
    "fisher_exact_2x2",
    "fisher_t1",
    "fwl_decompose",
    "FwlDecomposition",
    "gen_covariates",
    "gen_outcomes",
    "gen_unit",
    "heuristic_gap",
    "logistic_fit",
    "observe",
    "ols_fit",
    "oracle_estimands",
    "Panel",
    "PanelMeta",
    "PotentialOutcomeTable",
    "preset_fig3",
    "preset_fig5",
    "residualize",
    "run_sweep",
    "SeparationWarning",
    "simulate_panel",
    "stack",
    "SweepConfig",
    "SweepResult",
    "washout_preview",
]
