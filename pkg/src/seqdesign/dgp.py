"""
Data-generating processes for two-period designs with carryover.

Each unit draws one period-1 and one period-2 noise term, reused across all
of its counterfactual arms, so unit-level carryover is exactly the
difference of two table entries.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import Assignment, DesignKind, Panel, PanelMeta, PotentialOutcomeTable, assign
from .estimators import EstimatorKind


class CarryoverKind(str, Enum):
    NONE = "none"
    CONSTANT_SYMMETRIC = "constant_symmetric"
    ADDITIVE_INTERACTION = "additive_interaction"
    COMPOUNDING = "compounding"
    COVARIATE_MEDIATED = "covariate_mediated"


class CovariateDrift(str, Enum):
    INDEPENDENT_INCREMENT = "independent_increment"
    TREATMENT_SHIFT = "treatment_shift"


@dataclass(frozen=True)
class DgpConfig:
    """
    Coefficients of the two outcome equations and the carryover structure.

    Period 1: ``y = alpha0 + alpha1*z1 + alpha2*x1 + e1``.
    Period 2 uses the ``beta`` analogues plus a carryover term chosen by
    ``carryover``. ``gamma`` is the carryover magnitude: the interaction
    coefficient, the compounding exponent, the constant ``C`` of symmetric
    carryover, and the covariate shift under ``TREATMENT_SHIFT`` drift.
    ``washout_decay`` scales the direct part (never the covariate shift) by
    ``1 - washout_decay``.
    """

    alpha0: float = 2.0
    alpha1: float = 5.0
    alpha2: float = 5.0
    beta0: float = 2.0
    beta1: float = 5.0
    beta2: float = 5.0
    gamma: float = 0.0
    carryover: CarryoverKind = CarryoverKind.NONE
    covariate_drift: CovariateDrift = CovariateDrift.INDEPENDENT_INCREMENT
    noise_sd: float = 1.0
    time_shift_c: float = 0.0
    n: int = 100
    washout_decay: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "carryover", CarryoverKind(self.carryover))
        object.__setattr__(self, "covariate_drift", CovariateDrift(self.covariate_drift))
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not np.isfinite(v):
                raise ValueError(f"{f.name} must be finite")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be an integer >= 1")
        if not 0.0 <= self.washout_decay <= 1.0:
            raise ValueError("washout_decay must lie in [0, 1]")
        if self.carryover is CarryoverKind.COMPOUNDING:
            g = self.direct_gamma
            if self.beta1 < 0 and g != int(g):
                raise ValueError("compounding with beta1 < 0 needs an integer exponent")
            if self.beta1 == 0 and 1 + g < 0:
                raise ValueError("compounding with beta1 = 0 needs 1 + gamma >= 0")

    @property
    def direct_gamma(self) -> float:
        return self.gamma * (1.0 - self.washout_decay)

    def replace(self, **changes) -> "DgpConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["carryover"] = self.carryover.value
        d["covariate_drift"] = self.covariate_drift.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DgpConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown DgpConfig field(s): {', '.join(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DgpConfig":
        d = json.loads(text)
        if not isinstance(d, dict):
            raise ValueError("DgpConfig JSON must be an object")
        return cls.from_dict(d)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def constant_symmetric(C: float, **kw) -> DgpConfig:
    """Config with symmetric direct carryover of size ``C`` and no drift."""
    return DgpConfig(carryover=CarryoverKind.CONSTANT_SYMMETRIC, gamma=C, **kw)


def _draw_covariates(cfg: DgpConfig, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    x1 = rng.standard_normal(n)
    if cfg.covariate_drift is CovariateDrift.INDEPENDENT_INCREMENT:
        x2 = x1 + rng.standard_normal(n)
        return x1, np.column_stack([x2, x2])
    return x1, np.column_stack([x1, x1 + cfg.gamma])


def gen_covariates(cfg: DgpConfig, z_t1, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """
    Covariates at both periods given the period-1 treatment.

    ``x_t1 ~ N(0, 1)``. Under independent-increment drift
    ``x_t2 = x_t1 + N(0, 1)``; under treatment-shift drift
    ``x_t2 = x_t1 + gamma * z_t1``.
    """
    z = np.atleast_1d(np.asarray(z_t1, dtype=np.int64))
    x1, x2 = _draw_covariates(cfg, len(z), rng)
    return x1, x2[np.arange(len(z)), z]


def _period2(cfg: DgpConfig, z1: int, z2: int, x2: np.ndarray, e2: np.ndarray) -> np.ndarray:
    g = cfg.direct_gamma
    if cfg.carryover is CarryoverKind.ADDITIVE_INTERACTION:
        effect = cfg.beta1 * z2 + g * z1 * z2
    elif cfg.carryover is CarryoverKind.COMPOUNDING:
        effect = cfg.beta1 ** (1.0 + g * z1) * z2
    else:
        effect = cfg.beta1 * z2
    return cfg.beta0 + effect + cfg.beta2 * x2 + e2 + cfg.time_shift_c


def gen_outcomes(cfg: DgpConfig, rng: np.random.Generator, n: int | None = None) -> PotentialOutcomeTable:
    """
    Full potential-outcome table for ``n`` units (default ``cfg.n``).

    Draw order on ``rng``: ``x_t1``, the drift increment (independent
    increment only), ``e1``, ``e2``.
    """
    n = cfg.n if n is None else n
    x1, x2 = _draw_covariates(cfg, n, rng)
    e1 = cfg.noise_sd * rng.standard_normal(n)
    e2 = cfg.noise_sd * rng.standard_normal(n)

    y1 = [cfg.alpha0 + cfg.alpha1 * z + cfg.alpha2 * x1 + e1 for z in (0, 1)]
    noprior = [_period2(cfg.replace(carryover=CarryoverKind.NONE), 0, z, x2[:, 0], e2) for z in (0, 1)]

    y2 = np.empty((n, 2, 2))
    for z1 in (0, 1):
        for z2 in (0, 1):
            if cfg.carryover is CarryoverKind.NONE:
                y2[:, z1, z2] = noprior[z2]
            elif cfg.carryover is CarryoverKind.CONSTANT_SYMMETRIC:
                y2[:, z1, z2] = noprior[z2] + cfg.direct_gamma * (z1 or z2)
            else:
                y2[:, z1, z2] = _period2(cfg, z1, z2, x2[:, z1], e2)
    return PotentialOutcomeTable(
        y_t1_0=y1[0],
        y_t1_1=y1[1],
        y_t2=y2,
        y_t2_noprior_0=noprior[0],
        y_t2_noprior_1=noprior[1],
        x_t1=x1,
        x_t2=x2,
    )


def gen_unit(cfg: DgpConfig, rng: np.random.Generator) -> PotentialOutcomeTable:
    """Single-unit table; see :func:`gen_outcomes`."""
    return gen_outcomes(cfg, rng, n=1)


def simulate_panel(
    cfg: DgpConfig,
    design: DesignKind,
    rng: np.random.Generator,
    seed: int | None = None,
) -> tuple[Panel, PotentialOutcomeTable, Assignment]:
    """Assign, generate and observe one dataset of ``cfg.n`` units."""
    design = DesignKind(design)
    a = assign(design, cfg.n, rng)
    po = gen_outcomes(cfg, rng)
    panel = Panel.from_outcomes(po, a, PanelMeta(design, seed, cfg.fingerprint()))
    return panel, po, a


_POOLED_SHIFTED = (EstimatorKind.NO_CONTROL, EstimatorKind.FIXED_EFFECTS, EstimatorKind.NOISE_CONTROL)
_POOLED_ALL = _POOLED_SHIFTED + (EstimatorKind.DIRECT_CONTROL, EstimatorKind.PROPENSITY_SCORE)


def expected_naive_coefficient(cfg: DgpConfig, design: DesignKind, estimator: EstimatorKind) -> float | None:
    """
    Probability limit of an estimator's treatment coefficient, for the
    combinations that have a closed form; ``None`` otherwise.

    Catalogue (omitted-variable algebra with Bernoulli(0.5) arms):

    * ``DIFF_IN_MEANS_T1`` under any design with a randomized first period
      -> ``alpha1``
    * sequential randomization, t2-only regressions: additive interaction
      -> ``beta1 + gamma/2``; compounding -> ``(beta1 + beta1**(1+gamma))/2``;
      no direct carryover -> ``beta1``
    * linear period-2 model (no carryover, or covariate-mediated) with
      ``alpha1 = beta1 = tau``; ``s = beta2*gamma`` is the outcome shift
      carried by the covariate under treatment-shift drift:

      - sequential randomization: every pooled strategy and the period-2
        difference in means -> ``tau``
      - CWSD: no-control, fixed-effects, noise-control -> ``tau - s/2``;
        period-2 difference in means -> ``tau - s``; direct control and
        propensity score -> ``tau`` when ``alpha2 = beta2`` and the covariate
        enters the outcome (direct control also needs ``alpha0 = beta0``
        when ``s != 0``; propensity is catalogued only for ``s = 0``)
    """
    design = DesignKind(design)
    estimator = EstimatorKind(estimator)
    g = cfg.direct_gamma
    if estimator is EstimatorKind.DIFF_IN_MEANS_T1:
        return None if design is DesignKind.PRE_POST else cfg.alpha1

    seq = design is DesignKind.SEQUENTIAL_RANDOMIZATION
    if estimator in (EstimatorKind.T2_NAIVE, EstimatorKind.T2_FIXED_EFFECT):
        if not seq:
            return None
        if cfg.carryover is CarryoverKind.ADDITIVE_INTERACTION:
            return cfg.beta1 + g / 2.0
        if cfg.carryover is CarryoverKind.COMPOUNDING:
            return (cfg.beta1 + cfg.beta1 ** (1.0 + g)) / 2.0
        if cfg.carryover in (CarryoverKind.NONE, CarryoverKind.COVARIATE_MEDIATED):
            return cfg.beta1
        return None

    if cfg.carryover not in (CarryoverKind.NONE, CarryoverKind.COVARIATE_MEDIATED):
        return None
    if cfg.alpha1 != cfg.beta1 or cfg.time_shift_c != 0:
        return None
    tau = cfg.alpha1
    shifted = cfg.covariate_drift is CovariateDrift.TREATMENT_SHIFT and cfg.gamma != 0
    # NONE tables ignore the drifted covariate; the observed x_t2 then misleads
    # covariate-adjusting estimators
    if shifted and cfg.carryover is CarryoverKind.NONE:
        if estimator in (EstimatorKind.DIRECT_CONTROL, EstimatorKind.PROPENSITY_SCORE):
            return None
        s = 0.0
    else:
        s = cfg.beta2 * cfg.gamma if shifted else 0.0

    if seq:
        if estimator in _POOLED_ALL or estimator is EstimatorKind.DIFF_IN_MEANS_T2:
            return tau
        return None
    if design is not DesignKind.CWSD:
        return None
    if estimator in _POOLED_SHIFTED:
        return tau - s / 2.0
    if estimator is EstimatorKind.DIFF_IN_MEANS_T2:
        return tau - s
    if cfg.alpha2 != cfg.beta2:
        return None
    if estimator is EstimatorKind.DIRECT_CONTROL and (s == 0 or cfg.alpha0 == cfg.beta0):
        return tau
    if estimator is EstimatorKind.PROPENSITY_SCORE and s == 0:
        return tau
    return None
