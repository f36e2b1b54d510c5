"""Experimental-demand accounting and LR tail-bound diagnostics.

The demand side is a symbolic calculator, not a simulation: it encodes the
documented measurement counts each class of LR system typically needs to
justify a target LR range, together with the scaling rule that a range of
[lr_min, lr_max] needs about ceil(1/lr_min) scores under H1 and
ceil(lr_max) scores under H2. Those bounds follow from tail inequalities
that hold for any genuine likelihood ratio:

    P(LR > k | H2) <= 1/k    and    P(LR < 1/k | H1) <= 1/k

tail_bound_check verifies both inequalities by simulation for any system,
which doubles as a miscalibration detector: feed it densities from the
wrong world and the bound breaks.

The numbers in the default table are order-of-magnitude conventions from
practice (20 background objects, 50 anchor categories, 3 repeats); they
are stored verbatim as constants rather than re-derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .genmodel import ConfigError, Hypothesis, WorldConfig, generate_cases
from .lrsystems import LOG10_E, SPECIFIC_SOURCE, SystemId, log_lr_batch

__all__ = [
    "ANCHOR_CATEGORIES",
    "BACKGROUND_OBJECTS",
    "CSFLR_REPEATS",
    "DemandProfile",
    "TailBoundRow",
    "TradeoffRow",
    "demand_csv_rows",
    "demand_table",
    "feasibility_rank",
    "tail_bound_check",
    "tradeoff_csv_rows",
]

# Conventional sizes carried through the table.
BACKGROUND_OBJECTS = 20   # objects measured from a background population
ANCHOR_CATEGORIES = 50    # resolution of conditioning on the anchor value
CSFLR_REPEATS = 3         # repeated measurements per case for joint modeling
SHORTCUT_OBJECTS = 20     # same-source objects in the cross-comparison trick
SHORTCUT_BACKGROUND = 70  # background traces each is compared against

Count = int | str


@dataclass(frozen=True)
class DemandProfile:
    """What one class of LR system costs to run, for a target LR range.

    Counts are integers where the accounting is concrete and short strings
    where it is inherently symbolic. h1_scores / h2_scores are the score
    counts the construction yields (None for feature-based systems, which
    model densities rather than score distributions). The shortcut fields
    are only populated for the default target range, where the documented
    cross-comparison numbers apply.
    """

    system: SystemId
    per_case_source_measurements: Count
    per_case_trace_measurements: Count
    reusable_background_measurements: Count
    reusable: bool
    info_loss_dims: frozenset[str]
    feasibility_note: str
    required_h1_scores: int
    required_h2_scores: int
    h1_scores: int | None = None
    h2_scores: int | None = None
    shortcut_h1_comparisons: int | None = None
    shortcut_h2_comparisons: int | None = None


_INFO_LOSS: dict[SystemId, frozenset[str]] = {
    SystemId.SSFLR: frozenset(),
    SystemId.SSYASLR: frozenset({"X"}),
    SystemId.SSSLR: frozenset({"X", "Y"}),
    SystemId.CSFLR: frozenset({"R"}),
    SystemId.CSYASLR: frozenset({"R", "X"}),
    SystemId.CSXASLR: frozenset({"R", "Y"}),
    SystemId.CSSLR: frozenset({"R", "X", "Y"}),
}

_DEMAND_RANK: dict[SystemId, int] = {
    SystemId.CSSLR: 1,
    SystemId.CSFLR: 2,
    SystemId.CSYASLR: 3,
    SystemId.CSXASLR: 3,
    SystemId.SSSLR: 4,
    SystemId.SSYASLR: 5,
    SystemId.SSFLR: 6,
}


def demand_table(target_lr_min: float = 1.0 / 100.0,
                 target_lr_max: float = 1000.0) -> list[DemandProfile]:
    """Demand profiles for the seven informative systems, least demanding first.

    SSXASLR is omitted: its LR is constant, so there is nothing to model
    and no experiment to size.
    """
    if not (0.0 < target_lr_min < 1.0 < target_lr_max):
        raise ConfigError(
            f"need 0 < target_lr_min < 1 < target_lr_max, got "
            f"[{target_lr_min}, {target_lr_max}]")
    n_h1 = math.ceil(1.0 / target_lr_min)
    n_h2 = math.ceil(target_lr_max)
    default_range = (n_h1, n_h2) == (100, 1000)

    profiles = [
        DemandProfile(
            system=SystemId.CSSLR,
            per_case_source_measurements=1,
            per_case_trace_measurements=1,
            reusable_background_measurements=2 * n_h1 + BACKGROUND_OBJECTS,
            reusable=True,
            info_loss_dims=_INFO_LOSS[SystemId.CSSLR],
            feasibility_note=(
                f"least demanding: {2 * n_h1} same-population objects pair "
                f"into {n_h1} i.i.d. H1 scores; crossing them with "
                f"{BACKGROUND_OBJECTS} background objects gives "
                f"{2 * n_h1 * BACKGROUND_OBJECTS} (dependent) H2 scores; "
                f"everything reusable across cases"),
            required_h1_scores=n_h1,
            required_h2_scores=n_h2,
            h1_scores=n_h1,
            h2_scores=2 * n_h1 * BACKGROUND_OBJECTS,
        ),
        DemandProfile(
            system=SystemId.CSFLR,
            per_case_source_measurements=CSFLR_REPEATS,
            per_case_trace_measurements=CSFLR_REPEATS,
            reusable_background_measurements=BACKGROUND_OBJECTS,
            reusable=True,
            info_loss_dims=_INFO_LOSS[SystemId.CSFLR],
            feasibility_note=(
                f"favourable trade-off: roughly {CSFLR_REPEATS} repeats per "
                f"case plus a one-time collection of ~{BACKGROUND_OBJECTS} "
                f"background references; only the source identity is "
                f"averaged out"),
            required_h1_scores=n_h1,
            required_h2_scores=n_h2,
        ),
        DemandProfile(
            system=SystemId.CSYASLR,
            per_case_source_measurements=1,
            per_case_trace_measurements=1,
            reusable_background_measurements=ANCHOR_CATEGORIES * n_h1,
            reusable=True,
            info_loss_dims=_INFO_LOSS[SystemId.CSYASLR],
            feasibility_note=(
                f"conditioning on {ANCHOR_CATEGORIES} reference-anchor "
                f"categories needs {ANCHOR_CATEGORIES * n_h1} sources (plus "
                f"as many trace measurements, and the same again from the "
                f"suspect-side population when it differs) to keep {n_h1} "
                f"relevant H1 pairs; {BACKGROUND_OBJECTS} background "
                f"sources give {BACKGROUND_OBJECTS * n_h1} anchored H2 "
                f"scores; reusable but bulky"),
            required_h1_scores=n_h1,
            required_h2_scores=n_h2,
            h1_scores=n_h1,
            h2_scores=BACKGROUND_OBJECTS * n_h1,
        ),
        DemandProfile(
            system=SystemId.CSXASLR,
            per_case_source_measurements=1,
            per_case_trace_measurements=1,
            reusable_background_measurements=ANCHOR_CATEGORIES * n_h1,
            reusable=True,
            info_loss_dims=_INFO_LOSS[SystemId.CSXASLR],
            feasibility_note=(
                "same accounting as the reference-anchored variant, with "
                "the H2 side selected from the trace background population "
                "by closeness to the trace anchor"),
            required_h1_scores=n_h1,
            required_h2_scores=n_h2,
            h1_scores=n_h1,
            h2_scores=BACKGROUND_OBJECTS * n_h1,
        ),
        DemandProfile(
            system=SystemId.SSSLR,
            per_case_source_measurements=n_h1,
            per_case_trace_measurements=n_h1,
            reusable_background_measurements=BACKGROUND_OBJECTS,
            reusable=False,
            info_loss_dims=_INFO_LOSS[SystemId.SSSLR],
            feasibility_note=(
                f"per case, {n_h1} reference and {n_h1} trace objects from "
                f"the suspect source give {n_h1} i.i.d. H1 scores; "
                f"{BACKGROUND_OBJECTS} reusable background traces give "
                f"{BACKGROUND_OBJECTS * n_h1} (dependent) H2 scores; a "
                f"cross-comparison shortcut trades i.i.d.-ness for far "
                f"fewer objects"),
            required_h1_scores=n_h1,
            required_h2_scores=n_h2,
            h1_scores=n_h1,
            h2_scores=n_h2,
            shortcut_h1_comparisons=(
                SHORTCUT_OBJECTS * (SHORTCUT_OBJECTS - 1) // 2
                if default_range else None),
            shortcut_h2_comparisons=(
                SHORTCUT_OBJECTS * SHORTCUT_BACKGROUND
                if default_range else None),
        ),
        DemandProfile(
            system=SystemId.SSYASLR,
            per_case_source_measurements=n_h1,
            per_case_trace_measurements=1,
            reusable_background_measurements=n_h2,
            reusable=False,
            info_loss_dims=_INFO_LOSS[SystemId.SSYASLR],
            feasibility_note=(
                f"per case, {n_h1} objects from the suspect source scored "
                f"against the fixed reference give the H1 side; {n_h2} "
                f"background trace measurements (reusable) give the H2 "
                f"side"),
            required_h1_scores=n_h1,
            required_h2_scores=n_h2,
            h1_scores=n_h1,
            h2_scores=n_h2,
        ),
        DemandProfile(
            system=SystemId.SSFLR,
            per_case_source_measurements="1 (exact measurement) or impractically many",
            per_case_trace_measurements=1,
            reusable_background_measurements=0,
            reusable=False,
            info_loss_dims=_INFO_LOSS[SystemId.SSFLR],
            feasibility_note=(
                "no information loss, but the suspect-source density must "
                "be pinned down per case from reference measurements "
                "alone; with measurement randomness and more than one "
                "feature this is infeasible in practice"),
            required_h1_scores=n_h1,
            required_h2_scores=n_h2,
        ),
    ]
    return profiles


@dataclass(frozen=True)
class TradeoffRow:
    system: SystemId
    performance_rank: int   # 1 + number of dimensions averaged out
    demand_rank: int        # 1 = least experimental effort
    infeasible: bool
    favourable: bool
    info_loss_dims: frozenset[str]
    note: str


def feasibility_rank() -> list[TradeoffRow]:
    """Ordinal performance-versus-effort table, least demanding first.

    Performance rank is 1 plus the number of evidence dimensions a system
    averages over, which reproduces the empirical score ordering. Ties in
    either rank are genuine ties.
    """
    rows = []
    for system, demand in sorted(_DEMAND_RANK.items(),
                                 key=lambda kv: (kv[1], kv[0].value)):
        dims = _INFO_LOSS[system]
        infeasible = system is SystemId.SSFLR
        favourable = system is SystemId.CSFLR
        if infeasible:
            note = ("best performance; infeasible when measurements are "
                    "noisy and features exceed one")
        elif favourable:
            note = "near-top performance at a one-time, reusable cost"
        elif system is SystemId.CSSLR:
            note = "cheapest to field; averages over every dimension"
        else:
            note = ""
        rows.append(TradeoffRow(
            system=system,
            performance_rank=1 + len(dims),
            demand_rank=demand,
            infeasible=infeasible,
            favourable=favourable,
            info_loss_dims=dims,
            note=note,
        ))
    return rows


@dataclass(frozen=True)
class TailBoundRow:
    k: float
    side: str                   # "H2" (large LR) or "H1" (small LR)
    empirical_exceedance: float
    bound: float
    passed: bool


def tail_bound_check(
    system: SystemId,
    world: WorldConfig,
    n_cases: int = 100_000,
    k_values: tuple[float, ...] = (3.0, 10.0, 30.0, 100.0),
    seed: int = 0,
    believed_world: WorldConfig | None = None,
) -> list[TailBoundRow]:
    """Check P(LR > k | H2) and P(LR < 1/k | H1) against 1/k plus noise.

    Simulates n_cases under each hypothesis, evaluates the system's own
    LR, and accepts an exceedance up to 1/k + 3 binomial standard errors.
    Passing believed_world makes the evaluator use densities that differ
    from the generating world; genuine LRs satisfy the bound, mis-believed
    ones generally break it.
    """
    world.validate()
    for k in k_values:
        if k < 1.0:
            raise ConfigError(f"k values must be >= 1, got {k}")
    w = believed_world or world
    batch_h2 = generate_cases(world, seed, n_cases, force_truth=Hypothesis.H2)
    batch_h1 = generate_cases(world, seed + 1, n_cases, force_truth=Hypothesis.H1)

    def own_log10(batch):
        theta = batch.theta_r if system in SPECIFIC_SOURCE else None
        return log_lr_batch(system, batch.x_mean, batch.y_mean, w,
                            theta_r=theta) * LOG10_E

    log10_h2 = own_log10(batch_h2)
    log10_h1 = own_log10(batch_h1)

    rows = []
    for k in k_values:
        p = 1.0 / k
        bound = p + 3.0 * math.sqrt(p * (1.0 - p) / n_cases)
        log10_k = math.log10(k)
        exc_h2 = float(np.mean(log10_h2 > log10_k))
        exc_h1 = float(np.mean(log10_h1 < -log10_k))
        rows.append(TailBoundRow(k=k, side="H2", empirical_exceedance=exc_h2,
                                 bound=bound, passed=exc_h2 <= bound))
        rows.append(TailBoundRow(k=k, side="H1", empirical_exceedance=exc_h1,
                                 bound=bound, passed=exc_h1 <= bound))
    return rows


# ---------------------------------------------------------------------------
# flat rows for CSV emission

def demand_csv_rows(profiles: list[DemandProfile]) -> list[dict[str, object]]:
    def fmt(v):
        return "" if v is None else v
    return [
        {
            "system": p.system.value,
            "per_case_source_measurements": p.per_case_source_measurements,
            "per_case_trace_measurements": p.per_case_trace_measurements,
            "reusable_background_measurements": p.reusable_background_measurements,
            "reusable": str(p.reusable).lower(),
            "info_loss_dims": "+".join(sorted(p.info_loss_dims)) or "none",
            "required_h1_scores": p.required_h1_scores,
            "required_h2_scores": p.required_h2_scores,
            "h1_scores": fmt(p.h1_scores),
            "h2_scores": fmt(p.h2_scores),
            "shortcut_h1_comparisons": fmt(p.shortcut_h1_comparisons),
            "shortcut_h2_comparisons": fmt(p.shortcut_h2_comparisons),
            "notes": p.feasibility_note,
        }
        for p in profiles
    ]


def tradeoff_csv_rows(rows: list[TradeoffRow] | None = None) -> list[dict[str, object]]:
    if rows is None:
        rows = feasibility_rank()
    return [
        {
            "system": r.system.value,
            "performance_rank": r.performance_rank,
            "demand_rank": r.demand_rank,
            "info_loss_dims": "+".join(sorted(r.info_loss_dims)) or "none",
            "infeasible": str(r.infeasible).lower(),
            "favourable": str(r.favourable).lower(),
            "notes": r.note,
        }
        for r in rows
    ]
