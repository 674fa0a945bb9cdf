"""
Deterministic Monte Carlo sweeps over carryover magnitudes.

Every (gamma index, replication index) cell owns a Philox stream keyed by
``(master_seed, g, r)``, so results do not depend on the number of workers
or on scheduling.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import DesignKind
from .dgp import CarryoverKind, CovariateDrift, DgpConfig, simulate_panel
from .estimators import EstimatorKind, estimate
from .stats import CollinearityError, DegenerateOutcome

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("gamma", "estimator", "mean", "min", "max", "mc_se", "reps", "failures")
PRESET_SEED = 20250417


def stream(master_seed: int, g: int, r: int) -> np.random.Generator:
    """Random stream for cell ``(g, r)`` of a sweep seeded with ``master_seed``."""
    key = np.random.SeedSequence(master_seed, spawn_key=(g, r)).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SweepConfig:
    gamma_grid: tuple[float, float, int]
    reps: int
    n: int
    design: DesignKind
    dgp: DgpConfig
    estimators: tuple[EstimatorKind, ...]
    master_seed: int = PRESET_SEED
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        start, stop, count = self.gamma_grid
        object.__setattr__(self, "gamma_grid", (float(start), float(stop), int(count)))
        object.__setattr__(self, "design", DesignKind(self.design))
        object.__setattr__(self, "estimators", tuple(EstimatorKind(e) for e in self.estimators))
        object.__setattr__(self, "notes", tuple(self.notes))
        if int(count) < 1:
            raise ValueError("gamma_grid count must be >= 1")
        if start > stop:
            raise ValueError("gamma_grid start must not exceed stop")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.estimators:
            raise ValueError("at least one estimator is required")

    @property
    def gammas(self) -> np.ndarray:
        start, stop, count = self.gamma_grid
        return np.linspace(start, stop, count)

    def replace(self, **changes) -> "SweepConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        start, stop, count = self.gamma_grid
        return {
            "gamma_grid": {"start": start, "stop": stop, "count": count},
            "reps": self.reps,
            "n": self.n,
            "design": self.design.value,
            "dgp": self.dgp.to_dict(),
            "estimators": [e.value for e in self.estimators],
            "master_seed": self.master_seed,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        """Build from a JSON-style dict; unknown or malformed fields raise ``ValueError`` naming them."""
        if not isinstance(d, dict):
            raise ValueError("sweep config must be a JSON object")
        required = {"gamma_grid", "reps", "n", "design", "dgp", "estimators"}
        allowed = required | {"master_seed", "notes"}
        unknown = sorted(set(d) - allowed)
        if unknown:
            raise ValueError(f"unknown field(s): {', '.join(unknown)}")
        missing = sorted(required - set(d))
        if missing:
            raise ValueError(f"missing field(s): {', '.join(missing)}")

        def field_error(name, exc):
            return ValueError(f"field '{name}': {exc}")

        grid = d["gamma_grid"]
        try:
            if isinstance(grid, dict):
                grid = (grid["start"], grid["stop"], grid["count"])
            start, stop, count = grid
            grid = (float(start), float(stop), int(count))
        except (KeyError, TypeError, ValueError) as exc:
            raise field_error("gamma_grid", exc) from None
        try:
            dgp = DgpConfig.from_dict(d["dgp"])
        except (TypeError, ValueError) as exc:
            raise field_error("dgp", exc) from None
        try:
            design = DesignKind(d["design"])
        except ValueError as exc:
            raise field_error("design", exc) from None
        try:
            estimators = tuple(EstimatorKind(e) for e in d["estimators"])
        except (TypeError, ValueError) as exc:
            raise field_error("estimators", exc) from None
        for name in ("reps", "n", "master_seed"):
            if name in d and (isinstance(d[name], bool) or not isinstance(d[name], int)):
                raise field_error(name, "must be an integer")
        try:
            return cls(
                gamma_grid=grid,
                reps=d["reps"],
                n=d["n"],
                design=design,
                dgp=dgp,
                estimators=estimators,
                master_seed=d.get("master_seed", PRESET_SEED),
                notes=tuple(d.get("notes", ())),
            )
        except ValueError as exc:
            raise ValueError(f"invalid sweep config: {exc}") from None

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SweepRow:
    gamma: float
    estimator: EstimatorKind
    mean: float
    min: float
    max: float
    mc_se: float
    reps: int
    failures: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    meta: dict
    estimates: np.ndarray = field(repr=False)  # (gamma, rep, estimator), NaN for failures

    def row(self, gamma: float, estimator: EstimatorKind) -> SweepRow:
        estimator = EstimatorKind(estimator)
        for r in self.rows:
            if r.estimator is estimator and np.isclose(r.gamma, gamma):
                return r
        raise KeyError((gamma, estimator))

    def to_csv(self, path=None) -> str:
        """CSV text; with ``path``, also writes it and a ``<stem>.json`` metadata sidecar."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in self.rows:
            w.writerow(
                [
                    repr(r.gamma),
                    r.estimator.value,
                    repr(r.mean),
                    repr(r.min),
                    repr(r.max),
                    repr(r.mc_se),
                    r.reps,
                    r.failures,
                ]
            )
        text = buf.getvalue()
        if path is not None:
            path = Path(path)
            path.write_text(text)
            path.with_suffix(".json").write_text(json.dumps(self.meta, indent=2, sort_keys=True) + "\n")
        return text

    @property
    def total_failures(self) -> int:
        return sum(r.failures for r in self.rows)


def run_replication(cfg: SweepConfig, g: int, r: int) -> np.ndarray:
    """Estimates for one cell, in ``cfg.estimators`` order (NaN where an estimator failed)."""
    rng = stream(cfg.master_seed, g, r)
    dgp = cfg.dgp.replace(gamma=float(cfg.gammas[g]), n=cfg.n)
    panel, _, _ = simulate_panel(dgp, cfg.design, rng)
    out = np.full(len(cfg.estimators), np.nan)
    for j, kind in enumerate(cfg.estimators):
        try:
            out[j] = estimate(panel, kind, rng).tau_hat
        except (CollinearityError, DegenerateOutcome) as exc:
            log.debug("gamma index %d rep %d %s failed: %s", g, r, kind.value, exc)
    return out


def _run_gamma(args) -> np.ndarray:
    cfg, g = args
    return np.stack([run_replication(cfg, g, r) for r in range(cfg.reps)])


def _summarize(gamma: float, kind: EstimatorKind, values: np.ndarray) -> SweepRow:
    ok = values[~np.isnan(values)]
    k = len(ok)
    if k == 0:
        nan = float("nan")
        return SweepRow(float(gamma), kind, nan, nan, nan, nan, 0, len(values))
    mc_se = float(ok.std(ddof=1) / np.sqrt(k)) if k > 1 else float("nan")
    return SweepRow(
        gamma=float(gamma),
        estimator=kind,
        mean=float(ok.mean()),
        min=float(ok.min()),
        max=float(ok.max()),
        mc_se=mc_se,
        reps=k,
        failures=len(values) - k,
    )


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """
    Run every (gamma, replication) cell and summarize per (gamma, estimator).

    ``workers > 1`` distributes gamma values over processes. Replications
    whose estimator hits collinearity or a degenerate sample are counted in
    ``failures`` and excluded from the summary of that row only.
    """
    t0 = time.perf_counter()
    jobs = [(cfg, g) for g in range(len(cfg.gammas))]
    if workers <= 1 or len(jobs) == 1:
        blocks = [_run_gamma(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_run_gamma, jobs))
    estimates = np.stack(blocks)

    rows = [
        _summarize(gamma, kind, estimates[g, :, j])
        for g, gamma in enumerate(cfg.gammas)
        for j, kind in enumerate(cfg.estimators)
    ]
    meta = {
        "config": cfg.to_dict(),
        "config_fingerprint": cfg.fingerprint(),
        "code_version": __version__,
        "wall_seconds": time.perf_counter() - t0,
        "replications": int(estimates.shape[0] * estimates.shape[1]),
        "failures": int(np.isnan(estimates).sum()),
    }
    log.info("sweep %s: %d replications in %.1fs", cfg.fingerprint(), meta["replications"], meta["wall_seconds"])
    return SweepResult(rows=rows, meta=meta, estimates=estimates)


FIG3_ESTIMATORS = (EstimatorKind.T2_NAIVE, EstimatorKind.T2_FIXED_EFFECT)
FIG5_ESTIMATORS = (
    EstimatorKind.NO_CONTROL,
    EstimatorKind.DIRECT_CONTROL,
    EstimatorKind.PROPENSITY_SCORE,
    EstimatorKind.FIXED_EFFECTS,
    EstimatorKind.NOISE_CONTROL,
)
FIG3_GRID_NOTE = (
    "the carryover grid -5, -4.9, ..., 5 has 101 points although it is sometimes "
    "described as 100 values; 101 points with step 0.1 are used"
)


def preset_fig3(carryover: CarryoverKind = CarryoverKind.ADDITIVE_INTERACTION) -> SweepConfig:
    """
    Carryover-structure study: 100 subjects, independent assignment in both
    periods, period-2 regressions with and without ``z_t1``.
    """
    carryover = CarryoverKind(carryover)
    if carryover not in (CarryoverKind.ADDITIVE_INTERACTION, CarryoverKind.COMPOUNDING):
        raise ValueError("fig3 covers the additive-interaction and compounding structures")
    dgp = DgpConfig(
        alpha0=2.0, alpha1=5.0, alpha2=5.0,
        beta0=2.0, beta1=5.0, beta2=5.0,
        carryover=carryover,
        covariate_drift=CovariateDrift.INDEPENDENT_INCREMENT,
        noise_sd=1.0,
        n=100,
    )
    return SweepConfig(
        gamma_grid=(-5.0, 5.0, 101),
        reps=100,
        n=100,
        design=DesignKind.SEQUENTIAL_RANDOMIZATION,
        dgp=dgp,
        estimators=FIG3_ESTIMATORS,
        notes=(FIG3_GRID_NOTE,),
    )


def preset_fig5(design: DesignKind = DesignKind.CWSD) -> SweepConfig:
    """
    Design comparison: tau = 1, covariate shifted by ``gamma * z_t1``,
    1000 subjects, five pooled strategies.
    """
    design = DesignKind(design)
    if design not in (DesignKind.CWSD, DesignKind.SEQUENTIAL_RANDOMIZATION):
        raise ValueError("fig5 compares CWSD with sequential randomization")
    dgp = DgpConfig(
        alpha0=0.0, alpha1=1.0, alpha2=1.0,
        beta0=0.0, beta1=1.0, beta2=1.0,
        carryover=CarryoverKind.COVARIATE_MEDIATED,
        covariate_drift=CovariateDrift.TREATMENT_SHIFT,
        noise_sd=1.0,
        n=1000,
    )
    return SweepConfig(
        gamma_grid=(-10.0, 10.0, 101),
        reps=100,
        n=1000,
        design=design,
        dgp=dgp,
        estimators=FIG5_ESTIMATORS,
    )


PRESETS = {
    "fig3": lambda: {
        "fig3_additive_interaction": preset_fig3(CarryoverKind.ADDITIVE_INTERACTION),
        "fig3_compounding": preset_fig3(CarryoverKind.COMPOUNDING),
    },
    "fig5": lambda: {
        "fig5_cwsd": preset_fig5(DesignKind.CWSD),
        "fig5_seq_rand": preset_fig5(DesignKind.SEQUENTIAL_RANDOMIZATION),
    },
}
