"""
Potential-outcomes model for two-period, two-arm sequential designs.

Tables and assignments are stored column-wise: every field is an array with
one entry per unit, so a "sequence of tables" is a single
:class:`PotentialOutcomeTable` of length ``n``. Index a table or assignment
with an integer or slice to get a sub-population.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path

import numpy as np


class DesignKind(str, Enum):
    BETWEEN_SUBJECTS = "between"
    CWSD = "cwsd"
    PRE_POST = "prepost"
    SEQUENTIAL_RANDOMIZATION = "seq_rand"
    SELECTIVE_SEQ_RAND = "selective"


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _index(obj, idx):
    """Row-subset every array field of a column-wise dataclass."""
    if isinstance(idx, (int, np.integer)):
        idx = slice(idx, idx + 1 if idx != -1 else None)
    return type(obj)(**{f.name: getattr(obj, f.name)[idx] for f in fields(obj)})


@dataclass(frozen=True)
class Assignment:
    """
    Treatment assignment for ``n`` units.

    ``z_t2`` is float so that exited units can hold NaN (absent).
    """

    z_t1: np.ndarray
    z_t2: np.ndarray
    exited: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z_t1", _frozen(self.z_t1, np.int64))
        object.__setattr__(self, "z_t2", _frozen(self.z_t2, float))
        object.__setattr__(self, "exited", _frozen(self.exited, bool))
        if not (len(self.z_t1) == len(self.z_t2) == len(self.exited)):
            raise ValueError("assignment arrays differ in length")
        if np.any(np.isnan(self.z_t2) != self.exited):
            raise ValueError("z_t2 must be absent exactly for exited units")

    def __len__(self) -> int:
        return len(self.z_t1)

    def __getitem__(self, idx) -> "Assignment":
        return _index(self, idx)

    def check(self, design: DesignKind) -> None:
        """Raise ``ValueError`` if the assignment breaks the design's rules."""
        z1, z2, ex = self.z_t1, self.z_t2, self.exited
        if not np.all((z1 == 0) | (z1 == 1)):
            raise ValueError("z_t1 must be binary")
        present = z2[~ex]
        if not np.all((present == 0) | (present == 1)):
            raise ValueError("z_t2 must be binary where present")
        if design is DesignKind.CWSD:
            if ex.any() or np.any(z2 != 1 - z1):
                raise ValueError("CWSD requires z_t2 = 1 - z_t1 and no exits")
        elif design is DesignKind.PRE_POST:
            if np.any(z1 != 0) or ex.any():
                raise ValueError("pre-post requires z_t1 = 0 and no exits")
        elif design is DesignKind.SELECTIVE_SEQ_RAND:
            if np.any(ex != (z1 == 1)):
                raise ValueError("selective design: units exit exactly when z_t1 = 1")
        elif design is DesignKind.BETWEEN_SUBJECTS:
            if not ex.all():
                raise ValueError("between-subjects design has a single period: every unit exits after t1")
        elif ex.any():
            raise ValueError("sequential randomization has no exits")


def assign(design: DesignKind, n: int, rng: np.random.Generator) -> Assignment:
    """
    Draw assignments for ``n`` units under ``design``.

    ``z_t1`` is Bernoulli(0.5) except under pre-post (all control). The
    second period follows the design: forced switch (CWSD), exit of every
    unit (between-subjects, a single-period design), independent
    Bernoulli(0.5) (sequential randomization, pre-post), or exit for units
    treated at t1 (selective).
    """
    design = DesignKind(design)
    if n < 1:
        raise ValueError("n must be >= 1")
    if design is DesignKind.PRE_POST:
        z1 = np.zeros(n, dtype=np.int64)
    else:
        z1 = rng.integers(0, 2, size=n)
    exited = np.zeros(n, dtype=bool)

    if design is DesignKind.CWSD:
        z2 = (1 - z1).astype(float)
    elif design is DesignKind.BETWEEN_SUBJECTS:
        exited = np.ones(n, dtype=bool)
        z2 = np.full(n, np.nan)
    elif design is DesignKind.SELECTIVE_SEQ_RAND:
        exited = z1 == 1
        z2 = rng.integers(0, 2, size=n).astype(float)
        z2[exited] = np.nan
    else:
        z2 = rng.integers(0, 2, size=n).astype(float)
    return Assignment(z1, z2, exited)


@dataclass(frozen=True)
class PotentialOutcomeTable:
    """
    Every counterfactual outcome for ``n`` units.

    ``y_t2[i, z1, z2]`` is unit ``i``'s period-2 outcome under the sequence
    ``(z1, z2)``; ``y_t2_noprior_z`` is the period-2 outcome with no period-1
    exposure. ``x_t1`` and ``x_t2[i, z1]`` carry the covariate path so that
    the observed ``x_t2`` can be read off once ``z_t1`` is known.
    """

    y_t1_0: np.ndarray
    y_t1_1: np.ndarray
    y_t2: np.ndarray
    y_t2_noprior_0: np.ndarray
    y_t2_noprior_1: np.ndarray
    x_t1: np.ndarray
    x_t2: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _frozen(getattr(self, f.name)))
        n = len(self.y_t1_0)
        if self.y_t2.shape != (n, 2, 2) or self.x_t2.shape != (n, 2):
            raise ValueError("y_t2 must have shape (n, 2, 2) and x_t2 shape (n, 2)")
        for f in fields(self):
            a = getattr(self, f.name)
            if len(a) != n:
                raise ValueError(f"{f.name} has length {len(a)}, expected {n}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{f.name} contains non-finite values")

    def __len__(self) -> int:
        return len(self.y_t1_0)

    def __getitem__(self, idx) -> "PotentialOutcomeTable":
        return _index(self, idx)

    def noprior(self, z2) -> np.ndarray:
        z2 = np.asarray(z2)
        return np.where(z2 == 1, self.y_t2_noprior_1, self.y_t2_noprior_0)


def observe(po: PotentialOutcomeTable, a: Assignment) -> tuple[np.ndarray, np.ndarray]:
    """
    Observed outcomes implied by an assignment.

    Returns ``(y_t1, y_t2)``; ``y_t2`` is NaN for exited units.
    """
    if len(po) != len(a):
        raise ValueError("table and assignment differ in length")
    z1 = a.z_t1
    y1 = np.where(z1 == 1, po.y_t1_1, po.y_t1_0)
    units = np.arange(len(po))
    z2 = np.where(a.exited, 0, np.nan_to_num(a.z_t2)).astype(np.int64)
    y2 = po.y_t2[units, z1, z2].astype(float)
    y2[a.exited] = np.nan
    return y1, y2


def carryover(po: PotentialOutcomeTable, z1: int, z2: int) -> np.ndarray:
    """Direct carryover ``y_t2(z1, z2) - y_t2_noprior(z2)``, one value per unit."""
    return po.y_t2[:, z1, z2] - po.noprior(np.full(len(po), z2))


@dataclass(frozen=True)
class Estimands:
    tau: float
    tau_t1: float
    tau_t2_design: float
    tau_sequence: float
    tau_prepost: float


def oracle_estimands(po: PotentialOutcomeTable) -> Estimands:
    """Population estimands averaged over the units of ``po``."""
    if len(po) == 0:
        raise ValueError("oracle_estimands needs at least one unit")
    tau = float(np.mean(po.y_t1_1 - po.y_t1_0))
    t2 = float(np.mean(po.y_t2[:, 0, 1] - po.y_t2[:, 1, 0]))
    prepost = float(np.mean(po.y_t2[:, 0, 1] - po.y_t2[:, 0, 0]))
    return Estimands(tau=tau, tau_t1=tau, tau_t2_design=t2, tau_sequence=t2, tau_prepost=prepost)


@dataclass(frozen=True)
class AssumptionReport:
    mean_carryover_01: float
    mean_carryover_10: float
    simple_carryover_gap: float
    controlled_carryover_max_abs_violation: float
    parallel_trends_max_deviation: float
    trend_constant_c: float
    tol: float

    @property
    def simple_carryover_holds(self) -> bool:
        return self.simple_carryover_gap <= self.tol

    @property
    def controlled_carryover_holds(self) -> bool:
        return self.controlled_carryover_max_abs_violation <= self.tol

    @property
    def parallel_trends_holds(self) -> bool:
        return self.parallel_trends_max_deviation <= self.tol


def check_assumptions(po: PotentialOutcomeTable, tol: float = 1e-9) -> AssumptionReport:
    """
    Ground-truth check of the carryover and trend conditions.

    simple carryover
        ``|mean C(0->1) - mean C(1->0)|``
    controlled carryover
        ``max |y_t2(z1, z2) - y_t2_noprior(z2)|`` over units and arms
    parallel trends
        ``max |(y_t2_noprior(z) - y_t1(z)) - c|`` over units and ``z``, with
        ``c`` the grand mean of those differences

    Each flag holds when its gap is ``<= tol``.
    """
    if len(po) == 0:
        raise ValueError("check_assumptions needs at least one unit")
    if not tol > 0:
        raise ValueError("tol must be positive")
    c01 = float(np.mean(carryover(po, 0, 1)))
    c10 = float(np.mean(carryover(po, 1, 0)))
    controlled = max(float(np.max(np.abs(carryover(po, z1, z2)))) for z1 in (0, 1) for z2 in (0, 1))
    shifts = np.concatenate([po.y_t2_noprior_0 - po.y_t1_0, po.y_t2_noprior_1 - po.y_t1_1])
    c = float(shifts.mean())
    return AssumptionReport(
        mean_carryover_01=c01,
        mean_carryover_10=c10,
        simple_carryover_gap=abs(c01 - c10),
        controlled_carryover_max_abs_violation=controlled,
        parallel_trends_max_deviation=float(np.max(np.abs(shifts - c))),
        trend_constant_c=c,
        tol=tol,
    )


PANEL_COLUMNS = ("unit_id", "x_t1", "x_t2", "z_t1", "z_t2", "y_t1", "y_t2", "exited")


@dataclass(frozen=True)
class PanelMeta:
    design: DesignKind
    seed: int | None = None
    dgp: str = ""

    def to_dict(self) -> dict:
        return {"design": self.design.value, "seed": self.seed, "dgp": self.dgp}

    @classmethod
    def from_dict(cls, d: dict) -> "PanelMeta":
        return cls(design=DesignKind(d["design"]), seed=d.get("seed"), dgp=d.get("dgp", ""))


@dataclass(frozen=True)
class Panel:
    """
    Observed two-period dataset, one row per unit.

    Absent values (``z_t2`` and ``y_t2`` of exited units) are NaN.
    """

    unit_id: np.ndarray
    x_t1: np.ndarray
    x_t2: np.ndarray
    z_t1: np.ndarray
    z_t2: np.ndarray
    y_t1: np.ndarray
    y_t2: np.ndarray
    exited: np.ndarray
    meta: PanelMeta = field(default_factory=lambda: PanelMeta(DesignKind.SEQUENTIAL_RANDOMIZATION))

    def __post_init__(self):
        dtypes = {"unit_id": np.int64, "z_t1": np.int64, "exited": bool}
        for name in PANEL_COLUMNS:
            object.__setattr__(self, name, _frozen(getattr(self, name), dtypes.get(name, float)))
        n = len(self.unit_id)
        if any(len(getattr(self, c)) != n for c in PANEL_COLUMNS):
            raise ValueError("panel columns differ in length")
        if not np.array_equal(self.unit_id, np.arange(n)):
            raise ValueError("unit_id must be 0..n-1 in order")
        if np.any(np.isnan(self.y_t2) != self.exited):
            raise ValueError("y_t2 must be absent exactly for exited units")
        if np.any(np.isnan(self.y_t1)) or np.any(np.isnan(self.x_t1)):
            raise ValueError("period-1 values may not be absent")
        Assignment(self.z_t1, self.z_t2, self.exited).check(self.meta.design)

    def __len__(self) -> int:
        return len(self.unit_id)

    @property
    def design(self) -> DesignKind:
        return self.meta.design

    @classmethod
    def from_outcomes(
        cls,
        po: PotentialOutcomeTable,
        a: Assignment,
        meta: PanelMeta,
    ) -> "Panel":
        a.check(meta.design)
        y1, y2 = observe(po, a)
        units = np.arange(len(po))
        return cls(
            unit_id=units,
            x_t1=po.x_t1,
            x_t2=po.x_t2[units, a.z_t1],
            z_t1=a.z_t1,
            z_t2=a.z_t2,
            y_t1=y1,
            y_t2=y2,
            exited=a.exited,
            meta=meta,
        )

    def to_csv(self, path=None) -> str:
        """Write the panel as CSV (and ``<stem>.json`` metadata if ``path`` is given)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PANEL_COLUMNS)
        for i in range(len(self)):
            w.writerow(
                [
                    int(self.unit_id[i]),
                    _fmt(self.x_t1[i]),
                    _fmt(self.x_t2[i]),
                    int(self.z_t1[i]),
                    "" if self.exited[i] else int(self.z_t2[i]),
                    _fmt(self.y_t1[i]),
                    "" if self.exited[i] else _fmt(self.y_t2[i]),
                    int(self.exited[i]),
                ]
            )
        text = buf.getvalue()
        if path is not None:
            path = Path(path)
            path.write_text(text)
            sidecar(path).write_text(json.dumps(self.meta.to_dict(), sort_keys=True) + "\n")
        return text

    @classmethod
    def from_csv(cls, path, design: DesignKind | None = None) -> "Panel":
        """
        Read a panel CSV. Metadata come from the sidecar JSON when it exists;
        ``design`` overrides the sidecar's design.
        """
        path = Path(path)
        meta_path = sidecar(path)
        if meta_path.exists():
            meta = PanelMeta.from_dict(json.loads(meta_path.read_text()))
        elif design is None:
            raise ValueError(f"no metadata at {meta_path}; pass the design explicitly")
        else:
            meta = PanelMeta(DesignKind(design))
        if design is not None:
            meta = PanelMeta(DesignKind(design), meta.seed, meta.dgp)

        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != PANEL_COLUMNS:
                raise ValueError(f"unexpected panel header {header}")
            rows = list(reader)
        cols = {name: [r[j] for r in rows] for j, name in enumerate(PANEL_COLUMNS)}

        def num(vals):
            return np.array([float(v) if v != "" else np.nan for v in vals])

        return cls(
            unit_id=np.array([int(v) for v in cols["unit_id"]], dtype=np.int64),
            x_t1=num(cols["x_t1"]),
            x_t2=num(cols["x_t2"]),
            z_t1=np.array([int(v) for v in cols["z_t1"]], dtype=np.int64),
            z_t2=num(cols["z_t2"]),
            y_t1=num(cols["y_t1"]),
            y_t2=num(cols["y_t2"]),
            exited=np.array([v in ("1", "true", "True") for v in cols["exited"]], dtype=bool),
            meta=meta,
        )


def sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def _fmt(v: float) -> str:
    return repr(float(v))
