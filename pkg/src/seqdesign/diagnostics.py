"""
Checks an analyst can run on observed panels.

The period-1 Fisher test uses only first-period data, where assignment is a
plain randomized experiment. The period gap compares the two
single-period estimates. A large standardized gap is a warning sign for
carryover or time drift, but the check is neither necessary nor sufficient:
estimates can differ through sampling noise alone, and offsetting biases can
make them agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Panel
from .dgp import CarryoverKind, DgpConfig
from .estimators import EstimatorKind, estimate
from .stats import DegenerateOutcome, fisher_exact_2x2

GAP_CAVEAT = (
    "The period-gap check is neither necessary nor sufficient for valid "
    "identification: the two estimates may differ through sampling variability "
    "alone, and matching estimates can still hide compensating biases."
)


@dataclass(frozen=True)
class MedianSplit:
    """Values strictly above the median are "high"; ties go low."""

    def cut(self, y: np.ndarray) -> float:
        return float(np.median(y))

    def describe(self) -> str:
        return "median (ties low)"


@dataclass(frozen=True)
class FixedCut:
    value: float

    def cut(self, y: np.ndarray) -> float:
        return float(self.value)

    def describe(self) -> str:
        return f"fixed cut at {self.value!r} (ties low)"


def fisher_t1(panel: Panel, split=MedianSplit()) -> tuple[float, np.ndarray]:
    """
    Fisher exact test of period-1 treatment against a dichotomized outcome.

    Returns
    -------
    p : float
        Two-sided p-value.
    table : ndarray, shape (2, 2)
        Rows ``z_t1 = 1, 0``; columns high, low.
    """
    z = panel.z_t1
    y = panel.y_t1
    if min((z == 1).sum(), (z == 0).sum()) < 2:
        raise DegenerateOutcome("Fisher test needs at least two units per treatment group")
    if np.ptp(y) == 0:
        raise DegenerateOutcome("all period-1 outcomes are identical")
    high = y > split.cut(y)
    table = np.array(
        [
            [np.sum(high & (z == 1)), np.sum(~high & (z == 1))],
            [np.sum(high & (z == 0)), np.sum(~high & (z == 0))],
        ]
    )
    p, _ = fisher_exact_2x2(*table.ravel())
    return p, table


@dataclass(frozen=True)
class DiagnosticReport:
    fisher_p: float
    dichotomizer: str
    tau_t1_hat: float
    tau_t2_hat: float
    gap: float
    gap_se: float
    gap_z: float
    warn: bool
    threshold: float

    def to_dict(self) -> dict:
        return {
            "fisher_p": self.fisher_p,
            "dichotomizer": self.dichotomizer,
            "tau_t1_hat": self.tau_t1_hat,
            "tau_t2_hat": self.tau_t2_hat,
            "gap": self.gap,
            "gap_se": self.gap_se,
            "gap_z": self.gap_z,
            "warn": self.warn,
            "threshold": self.threshold,
        }

    def render(self) -> str:
        lines = [
            f"Fisher exact test at t1 ({self.dichotomizer}): p = {self.fisher_p:.4g}",
            f"tau_t1_hat = {self.tau_t1_hat:.4g}, tau_t2_hat = {self.tau_t2_hat:.4g}",
            f"gap = {self.gap:.4g} (se {self.gap_se:.4g}, z = {self.gap_z:.3g}, threshold {self.threshold:g})",
            f"warn = {str(self.warn).lower()}",
            "",
            GAP_CAVEAT,
        ]
        return "\n".join(lines)


def _period_gap(panel: Panel) -> tuple[float, float, float, float, float]:
    e1 = estimate(panel, EstimatorKind.DIFF_IN_MEANS_T1)
    e2 = estimate(panel, EstimatorKind.DIFF_IN_MEANS_T2)
    gap = e1.tau_hat - e2.tau_hat
    gap_se = math.hypot(e1.se, e2.se)
    gap_z = gap / gap_se if gap_se > 0 else math.copysign(math.inf, gap) if gap else 0.0
    return e1.tau_hat, e2.tau_hat, gap, gap_se, gap_z


def heuristic_gap(panel: Panel, threshold: float = 1.96, split=MedianSplit()) -> DiagnosticReport:
    """
    Compare single-period difference-in-means estimates.

    ``warn`` is set when ``|gap / gap_se| > threshold``. The gap standard
    error ``sqrt(se1^2 + se2^2)`` treats the periods as independent, which
    is only approximate when the same units appear in both. The report also
    carries the period-1 Fisher p-value for ``split``.

    Raises
    ------
    DegenerateOutcome
        When a period lacks a treatment group or period-1 outcomes are all
        equal.
    """
    t1, t2, gap, gap_se, gap_z = _period_gap(panel)
    p, _ = fisher_t1(panel, split)
    return DiagnosticReport(
        fisher_p=p,
        dichotomizer=split.describe(),
        tau_t1_hat=t1,
        tau_t2_hat=t2,
        gap=gap,
        gap_se=gap_se,
        gap_z=gap_z,
        warn=bool(abs(gap_z) > threshold),
        threshold=threshold,
    )


def diagnose(panel: Panel, threshold: float = 1.96, split=MedianSplit()) -> DiagnosticReport:
    """Period-1 Fisher test plus the period-gap heuristic, as one report."""
    return heuristic_gap(panel, threshold, split)


def washout_preview(cfg: DgpConfig, decay: float) -> DgpConfig:
    """
    Config after a washout period that removes a fraction ``decay`` of the
    direct carryover.

    Covariate shifts caused by the first treatment are left alone: a
    washout lets direct effects fade but does not undo changes in the
    covariates. Covariate-mediated configs are therefore returned unchanged.
    """
    if not 0.0 <= decay <= 1.0:
        raise ValueError("decay must lie in [0, 1]")
    if cfg.carryover in (CarryoverKind.COVARIATE_MEDIATED, CarryoverKind.NONE):
        return cfg
    remaining = (1.0 - cfg.washout_decay) * (1.0 - decay)
    return cfg.replace(washout_decay=1.0 - remaining)
