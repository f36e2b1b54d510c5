"""Simulation and evaluation toolkit for source-level LR systems.

A synthetic evidence world (hierarchical Gaussian: sources drawn from
populations, measurements drawn around sources) is shared by eight ways of
computing a likelihood ratio for "trace and reference share a source".
Closed forms live in lrsystems, a sampling oracle that replays each
system's generative recipe lives in oracle, and harness/costmodel/cli
score the systems against each other with strictly proper scoring rules
and account for what each would cost to field.
"""

from .genmodel import (
    CaseBatch,
    CaseRecord,
    CaseStream,
    ConfigError,
    Hypothesis,
    NoiseModel,
    PopulationModel,
    ScenarioKind,
    ScoreKind,
    WorldConfig,
    generate_case,
    generate_cases,
    load_world,
    with_population,
    world_from_json_dict,
    world_to_json_dict,
)
from .lrsystems import (
    AnchorKind,
    CaseView,
    LrResult,
    PathOracleConfig,
    ProfileMode,
    SystemId,
    anchor_lr,
    clamp_log10_lr,
    discrete_profile_lr,
    evaluate,
    log_lr_batch,
    posterior_from_log10_lr,
    posterior_from_lr,
)
from .oracle import (
    InsufficientPathsError,
    OracleComparison,
    OracleEstimate,
    compare_closed_vs_oracle,
    default_evidence_grid,
    path_oracle,
    path_oracle_lr,
)
from .scoring import (
    CalibrationReport,
    MeanScore,
    ScoringRule,
    calibration_report,
    honesty_check,
    mean_score,
    score,
    scores_batch,
)
from .harness import (
    ALL_SYSTEMS,
    RANKING_CLAIMS,
    EvalReport,
    ExperimentConfig,
    Verdict,
    cs_update_ss_prior_experiment,
    ill_conditioning_experiment,
    run_experiment,
    total_expectation_check,
    verify_ranking,
)
from .costmodel import (
    DemandProfile,
    demand_table,
    feasibility_rank,
    tail_bound_check,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_SYSTEMS",
    "AnchorKind",
    "CalibrationReport",
    "CaseBatch",
    "CaseRecord",
    "CaseStream",
    "CaseView",
    "ConfigError",
    "DemandProfile",
    "EvalReport",
    "ExperimentConfig",
    "Hypothesis",
    "InsufficientPathsError",
    "LrResult",
    "MeanScore",
    "NoiseModel",
    "OracleComparison",
    "OracleEstimate",
    "PathOracleConfig",
    "PopulationModel",
    "ProfileMode",
    "RANKING_CLAIMS",
    "ScenarioKind",
    "ScoreKind",
    "ScoringRule",
    "SystemId",
    "Verdict",
    "WorldConfig",
    "anchor_lr",
    "calibration_report",
    "clamp_log10_lr",
    "compare_closed_vs_oracle",
    "cs_update_ss_prior_experiment",
    "default_evidence_grid",
    "demand_table",
    "discrete_profile_lr",
    "evaluate",
    "feasibility_rank",
    "generate_case",
    "generate_cases",
    "honesty_check",
    "ill_conditioning_experiment",
    "load_world",
    "log_lr_batch",
    "mean_score",
    "path_oracle",
    "path_oracle_lr",
    "posterior_from_log10_lr",
    "posterior_from_lr",
    "run_experiment",
    "score",
    "scores_batch",
    "tail_bound_check",
    "total_expectation_check",
    "verify_ranking",
    "with_population",
    "world_from_json_dict",
    "world_to_json_dict",
    "__version__",
]
