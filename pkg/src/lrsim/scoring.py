"""Scoring rules for stated probabilities, all in reward orientation.

Higher is better throughout. Logarithmic and Brier are strictly proper: the
expected reward under a belief p is uniquely maximised by stating p. The
table rule is a deliberately broken counterexample used in tests and
demonstrations; under it a forecaster who believes 0.1 earns more by
stating 0.0.

A logarithmic score of a categorical mistake (stated probability exactly
zero on the realised hypothesis) is negative infinity. Such sentinels are
never averaged silently: mean_score drops them from the mean and reports
how many there were.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .genmodel import ConfigError, Hypothesis

__all__ = [
    "CalibrationReport",
    "HonestyReport",
    "IMPROPER_TABLE",
    "MeanScore",
    "ScoringRule",
    "calibration_report",
    "expected_score",
    "honesty_check",
    "mean_score",
    "score",
    "scores_batch",
]


class ScoringRule(str, Enum):
    Logarithmic = "Logarithmic"
    Brier = "Brier"
    ImproperTable3 = "ImproperTable3"


# Reward table of the improper rule: stated probability of the event in
# steps of 0.1, one payout row for the event happening and one for it not.
IMPROPER_TABLE = {
    "stated": np.round(np.linspace(0.0, 1.0, 11), 1),
    "if_h1": np.array(
        [0.0, 1.00, 1.30, 1.48, 1.60, 1.70, 1.78, 1.85, 1.90, 1.95, 3.0]),
    "if_h2": np.array(
        [3.0, 1.95, 1.90, 1.85, 1.78, 1.70, 1.60, 1.48, 1.30, 1.00, 0.0]),
}


def scores_batch(rule: ScoringRule, stated_p: np.ndarray, is_h1: np.ndarray) -> np.ndarray:
    """Score arrays of stated P(H1) against realised hypotheses."""
    p = np.asarray(stated_p, dtype=np.float64)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ConfigError("stated probabilities must lie in [0, 1]")
    h1 = np.asarray(is_h1, dtype=bool)
    q = np.where(h1, p, 1.0 - p)  # probability assigned to what happened
    if rule is ScoringRule.Logarithmic:
        with np.errstate(divide="ignore"):
            return np.log2(q)
    if rule is ScoringRule.Brier:
        return -2.0 * (1.0 - q) ** 2
    if rule is ScoringRule.ImproperTable3:
        idx = np.clip(np.rint(p * 10).astype(np.int64), 0, 10)
        return np.where(h1, IMPROPER_TABLE["if_h1"][idx],
                        IMPROPER_TABLE["if_h2"][idx])
    raise ConfigError(f"unknown scoring rule {rule!r}")


def score(rule: ScoringRule, stated_p: float, realized: Hypothesis) -> float:
    return float(scores_batch(rule, np.float64(stated_p),
                              np.asarray(realized is Hypothesis.H1)))


def expected_score(rule: ScoringRule, stated_p: float, believed_p: float) -> float:
    """Expected reward of stating stated_p while believing believed_p.

    A zero-probability branch contributes nothing even when its score is
    -inf, so degenerate beliefs stay well defined.
    """
    if not (0.0 <= believed_p <= 1.0):
        raise ConfigError(f"believed_p must lie in [0, 1], got {believed_p!r}")
    total = 0.0
    if believed_p > 0.0:
        total += believed_p * score(rule, stated_p, Hypothesis.H1)
    if believed_p < 1.0:
        total += (1.0 - believed_p) * score(rule, stated_p, Hypothesis.H2)
    return total


@dataclass(frozen=True)
class HonestyReport:
    rule: ScoringRule
    grid_step: float
    is_honest: bool
    counterexamples: list[tuple[float, float]]  # (believed, better stated)


def honesty_check(rule: ScoringRule, grid_step: float = 0.01) -> HonestyReport:
    """Verify that honest reporting maximises expected reward on a grid.

    For every believed p on the grid the argmax over stated q of the
    expected score must sit at q == p, strictly: any other q whose expected
    score comes within numerical noise of the honest one is flagged.
    """
    if not (0.0 < grid_step <= 0.1):
        raise ConfigError(f"grid_step must be in (0, 0.1], got {grid_step!r}")
    grid = np.round(np.arange(0.0, 1.0 + grid_step / 2.0, grid_step), 12)
    counterexamples: list[tuple[float, float]] = []
    for believed in grid:
        honest = expected_score(rule, float(believed), float(believed))
        tol = 1e-12 * max(1.0, abs(honest))
        for stated in grid:
            if stated == believed:
                continue
            other = expected_score(rule, float(stated), float(believed))
            if other > honest - tol:
                counterexamples.append((float(believed), float(stated)))
    return HonestyReport(rule=rule, grid_step=grid_step,
                         is_honest=not counterexamples,
                         counterexamples=counterexamples)


@dataclass(frozen=True)
class MeanScore:
    mean: float
    se: float
    n: int
    n_neg_inf: int


def mean_score(scores: np.ndarray) -> MeanScore:
    """Mean and standard error, excluding (but counting) -inf sentinels."""
    arr = np.asarray(scores, dtype=np.float64)
    neg_inf = np.isneginf(arr)
    finite = arr[~neg_inf]
    n_fin = int(finite.shape[0])
    if n_fin == 0:
        return MeanScore(mean=math.nan, se=math.nan, n=int(arr.shape[0]),
                         n_neg_inf=int(neg_inf.sum()))
    se = float(np.std(finite, ddof=1) / math.sqrt(n_fin)) if n_fin > 1 else math.nan
    return MeanScore(mean=float(finite.mean()), se=se, n=int(arr.shape[0]),
                     n_neg_inf=int(neg_inf.sum()))


@dataclass(frozen=True)
class CalibrationReport:
    """Binned reliability summary of stated probabilities.

    Bins with fewer than min_count records are kept in the arrays but do
    not contribute to max_abs_gap or to the pass decision; tiny bins carry
    no usable frequency information.
    """

    bin_edges: np.ndarray
    bin_counts: np.ndarray
    mean_stated_p: np.ndarray
    empirical_freq: np.ndarray
    min_count: int

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(self.mean_stated_p - self.empirical_freq)

    @property
    def binomial_se(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            p = self.mean_stated_p
            return np.sqrt(p * (1.0 - p) / self.bin_counts)

    @property
    def qualifying(self) -> np.ndarray:
        return self.bin_counts >= self.min_count

    @property
    def max_abs_gap(self) -> float:
        q = self.qualifying
        if not q.any():
            return math.nan
        return float(self.gaps[q].max())

    def passes(self, se_mult: float = 3.0) -> bool:
        """Every qualifying bin's gap must stay under se_mult binomial SEs."""
        q = self.qualifying
        if not q.any():
            return True
        return bool(np.all(self.gaps[q] < se_mult * self.binomial_se[q]))


def calibration_report(
    stated_p: np.ndarray,
    is_h1: np.ndarray,
    n_bins: int = 10,
    min_count: int = 50,
) -> CalibrationReport:
    """Equal-width reliability bins over [0, 1]."""
    if n_bins < 1:
        raise ConfigError(f"n_bins must be >= 1, got {n_bins}")
    p = np.asarray(stated_p, dtype=np.float64)
    h1 = np.asarray(is_h1, dtype=bool)
    if np.any((p < 0.0) | (p > 1.0)) or np.any(~np.isfinite(p)):
        raise ConfigError("stated probabilities must lie in [0, 1]")
    idx = np.minimum((p * n_bins).astype(np.int64), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    sum_p = np.bincount(idx, weights=p, minlength=n_bins)
    sum_h1 = np.bincount(idx, weights=h1.astype(np.float64), minlength=n_bins)
    with np.errstate(invalid="ignore"):
        mean_p = np.where(counts > 0, sum_p / counts, np.nan)
        freq = np.where(counts > 0, sum_h1 / counts, np.nan)
    return CalibrationReport(
        bin_edges=np.linspace(0.0, 1.0, n_bins + 1),
        bin_counts=counts,
        mean_stated_p=mean_p,
        empirical_freq=freq,
        min_count=int(min_count),
    )
