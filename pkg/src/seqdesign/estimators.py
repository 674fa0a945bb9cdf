"""
Treatment-effect estimators over observed panels.

Pooled strategies work on the stacked panel (one row per unit and observed
period). Period-specific strategies use a single period; period 2 always
drops exited units.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Panel
from .stats import CollinearityError, DegenerateOutcome, RegressionFit, logistic_fit, ols_fit

PROPENSITY_CLIP = 1e-6


class EstimatorKind(str, Enum):
    NO_CONTROL = "no_control"
    DIRECT_CONTROL = "direct_control"
    PROPENSITY_SCORE = "propensity_score"
    FIXED_EFFECTS = "fixed_effects"
    NOISE_CONTROL = "noise_control"
    COLLIDER_CONDITIONED = "collider"
    DIFF_IN_MEANS_T1 = "diff_in_means_t1"
    DIFF_IN_MEANS_T2 = "diff_in_means_t2"
    T2_NAIVE = "t2_naive"
    T2_FIXED_EFFECT = "t2_fixed_effect"


@dataclass(frozen=True)
class Stacked:
    """Long-format panel. ``X`` columns: intercept, z, period-1 dummy, x."""

    X: np.ndarray
    y: np.ndarray
    unit_id: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return self.X[:, 1]

    @property
    def is_t1(self) -> np.ndarray:
        return self.X[:, 2] == 1

    def subset(self, mask) -> "Stacked":
        return Stacked(self.X[mask], self.y[mask], self.unit_id[mask])


def stack(panel: Panel) -> Stacked:
    """
    Stack the two periods: all period-1 rows first, then period-2 rows of
    units that did not exit.
    """
    if len(panel) == 0:
        raise ValueError("panel is empty")
    keep = ~panel.exited
    n1, n2 = len(panel), int(keep.sum())
    X = np.empty((n1 + n2, 4))
    X[:, 0] = 1.0
    X[:n1, 1] = panel.z_t1
    X[n1:, 1] = panel.z_t2[keep]
    X[:n1, 2] = 1.0
    X[n1:, 2] = 0.0
    X[:n1, 3] = panel.x_t1
    X[n1:, 3] = panel.x_t2[keep]
    y = np.concatenate([panel.y_t1, panel.y_t2[keep]])
    ids = np.concatenate([panel.unit_id, panel.unit_id[keep]])
    return Stacked(X, y, ids)


@dataclass(frozen=True)
class EstimateResult:
    tau_hat: float
    se: float
    estimator: EstimatorKind
    n_used: int
    fit: RegressionFit

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator.value,
            "tau_hat": self.tau_hat,
            "se": self.se,
            "n_used": self.n_used,
        }


def _coef_on_z(X: np.ndarray, y: np.ndarray, kind: EstimatorKind) -> EstimateResult:
    fit = ols_fit(X, y)
    return EstimateResult(
        tau_hat=float(fit.coefficients[1]),
        se=float(fit.standard_errors[1]),
        estimator=kind,
        n_used=len(y),
        fit=fit,
    )


def diff_in_means(y, z, kind: EstimatorKind = EstimatorKind.DIFF_IN_MEANS_T1) -> EstimateResult:
    """
    Treated-minus-control mean with the unequal-variance standard error
    ``sqrt(s1^2/n1 + s0^2/n0)``.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z)
    treated, control = y[z == 1], y[z == 0]
    if len(treated) < 2 or len(control) < 2:
        raise DegenerateOutcome("difference in means needs at least two units in each group")
    tau = float(treated.mean() - control.mean())
    se = float(np.sqrt(treated.var(ddof=1) / len(treated) + control.var(ddof=1) / len(control)))
    X = np.column_stack([np.ones_like(y), z.astype(float)])
    return EstimateResult(tau_hat=tau, se=se, estimator=kind, n_used=len(y), fit=ols_fit(X, y))


def _period2(panel: Panel):
    keep = ~panel.exited
    return keep, panel.z_t2[keep], panel.y_t2[keep]


def estimate(panel: Panel, kind: EstimatorKind, rng: np.random.Generator | None = None) -> EstimateResult:
    """
    Estimate the treatment effect with one strategy.

    ==================  =====================================================
    no_control          stacked ``y ~ 1 + z``
    direct_control      stacked ``y ~ 1 + z + x``
    propensity_score    logit ``z ~ 1 + x`` on stacked rows, then
                        ``y ~ 1 + z + e_hat`` (e_hat clipped to [1e-6, 1-1e-6];
                        dropped when constant)
    fixed_effects       stacked ``y ~ 1 + z + period``
    noise_control       stacked ``y ~ 1 + z + u``, ``u ~ N(0, 1)`` from ``rng``
    collider            period 2 ``y_t2 ~ 1 + z_t2 + y_t1``; conditions on a
                        collider and is biased by design, shown as a
                        cautionary example only
    diff_in_means_t1/2  single-period difference in means
    t2_naive            period 2 ``y_t2 ~ 1 + z_t2 + x_t2``
    t2_fixed_effect     period 2 ``y_t2 ~ 1 + z_t2 + z_t1 + x_t2``
    ==================  =====================================================

    Raises
    ------
    CollinearityError
        For example ``t2_fixed_effect`` on a CWSD panel, where
        ``z_t2 = 1 - z_t1``.
    DegenerateOutcome
        When a period used by the estimator lacks a treatment group.
    """
    kind = EstimatorKind(kind)

    if kind is EstimatorKind.DIFF_IN_MEANS_T1:
        return diff_in_means(panel.y_t1, panel.z_t1, kind)
    if kind in (
        EstimatorKind.DIFF_IN_MEANS_T2,
        EstimatorKind.COLLIDER_CONDITIONED,
        EstimatorKind.T2_NAIVE,
        EstimatorKind.T2_FIXED_EFFECT,
    ):
        keep, z2, y2 = _period2(panel)
        if len(np.unique(z2)) < 2:
            raise DegenerateOutcome("period 2 lacks a treatment or control group")
        if kind is EstimatorKind.DIFF_IN_MEANS_T2:
            return diff_in_means(y2, z2, kind)
        cols = [np.ones_like(y2), z2]
        if kind is EstimatorKind.COLLIDER_CONDITIONED:
            cols.append(panel.y_t1[keep])
        elif kind is EstimatorKind.T2_NAIVE:
            cols.append(panel.x_t2[keep])
        else:
            cols += [panel.z_t1[keep].astype(float), panel.x_t2[keep]]
        return _coef_on_z(np.column_stack(cols), y2, kind)

    s = stack(panel)
    if len(np.unique(s.z)) < 2:
        raise DegenerateOutcome("stacked panel lacks a treatment or control group")
    if kind is EstimatorKind.NO_CONTROL:
        X = s.X[:, :2]
    elif kind is EstimatorKind.DIRECT_CONTROL:
        X = s.X[:, [0, 1, 3]]
    elif kind is EstimatorKind.FIXED_EFFECTS:
        X = s.X[:, :3]
    elif kind is EstimatorKind.NOISE_CONTROL:
        if rng is None:
            raise ValueError("noise_control needs an rng")
        X = np.column_stack([s.X[:, :2], rng.standard_normal(len(s.y))])
    elif kind is EstimatorKind.PROPENSITY_SCORE:
        ps = logistic_fit(s.X[:, [0, 3]], s.z)
        e_hat = np.clip(ps.fitted_probabilities, PROPENSITY_CLIP, 1 - PROPENSITY_CLIP)
        X = np.column_stack([s.X[:, :2], e_hat])
        try:
            return _coef_on_z(X, s.y, kind)
        except CollinearityError as exc:
            # a constant score is aliased with the intercept and adjusts nothing
            if exc.column != 2:
                raise
            return _coef_on_z(X[:, :2], s.y, kind)
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown estimator {kind}")
    return _coef_on_z(X, s.y, kind)


@dataclass(frozen=True)
class FwlDecomposition:
    tau_pooled: float
    q: float
    tau_t1_component: float
    tau_t2_component: float

    @property
    def identity_residual(self) -> float:
        """``|tau_pooled - q*tau_t1 - (1-q)*tau_t2|``; empty periods contribute 0."""
        parts = 0.0
        if self.q > 0:
            parts += self.q * self.tau_t1_component
        if self.q < 1:
            parts += (1 - self.q) * self.tau_t2_component
        return abs(self.tau_pooled - parts)

    def to_dict(self) -> dict:
        return {
            "tau_pooled": self.tau_pooled,
            "q": self.q,
            "tau_t1": self.tau_t1_component,
            "tau_t2": self.tau_t2_component,
        }


def fwl_decompose(panel_or_stacked: Panel | Stacked) -> FwlDecomposition:
    """
    Split the pooled coefficient of ``y ~ 1 + z + period + x`` into
    period-specific parts.

    ``tau_pooled`` comes from the full regression. ``y`` and ``z`` are
    residualized on ``W = (1, period, x)`` and, with residuals ``rY``,
    ``rZ``,

        q = sum_t1(rZ^2) / sum(rZ^2)
        tau_t = sum_t(rY*rZ) / sum_t(rZ^2)

    so that ``tau_pooled = q*tau_t1 + (1-q)*tau_t2``. A period whose ``rZ``
    vanishes gets a NaN component and weight 0. When only one period is
    present the period dummy is dropped from ``W``.
    """
    s = stack(panel_or_stacked) if isinstance(panel_or_stacked, Panel) else panel_or_stacked
    t1 = s.is_t1
    cols = [0, 3] if (t1.all() or not t1.any()) else [0, 2, 3]
    W = s.X[:, cols]
    r_y = ols_fit(W, s.y).residuals
    r_z = ols_fit(W, s.z).residuals
    pooled = ols_fit(s.X[:, [0, 1] + cols[1:]], s.y)

    ss1 = float(r_z[t1] @ r_z[t1])
    ss2 = float(r_z[~t1] @ r_z[~t1])
    total = ss1 + ss2
    if total <= 0:
        raise DegenerateOutcome("treatment has no variation after partialling out")
    cp1 = float(r_y[t1] @ r_z[t1])
    cp2 = float(r_y[~t1] @ r_z[~t1])
    q = ss1 / total
    return FwlDecomposition(
        tau_pooled=float(pooled.coefficients[1]),
        q=q,
        tau_t1_component=cp1 / ss1 if ss1 > 0 else float("nan"),
        tau_t2_component=cp2 / ss2 if ss2 > 0 else float("nan"),
    )
