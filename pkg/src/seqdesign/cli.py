"""
Command-line front end.

Exit status: 0 success, 2 usage or configuration error, 3 degenerate data.
Verbosity comes from ``SEQDESIGN_LOG`` (quiet, info or debug).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from .core import DesignKind, Panel
from .dgp import CarryoverKind, CovariateDrift, DgpConfig, simulate_panel
from .diagnostics import FixedCut, MedianSplit, diagnose
from .estimators import EstimatorKind, estimate, fwl_decompose
from .harness import PRESETS, SweepConfig, run_sweep
from .stats import CollinearityError, DegenerateOutcome

EXIT_USAGE = 2
EXIT_DEGENERATE = 3

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


def _configure_logging() -> None:
    level = os.environ.get("SEQDESIGN_LOG", "quiet").lower()
    logging.basicConfig(level=_LOG_LEVELS.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = secrets.randbits(63)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _enum_choice(enum):
    return [e.value for e in enum]


def _float_arg(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _estimator_list(text: str) -> list[EstimatorKind]:
    try:
        return [EstimatorKind(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"{exc}; choose from {', '.join(_enum_choice(EstimatorKind))}") from None


def cmd_simulate(args) -> int:
    base = {}
    if args.dgp_config:
        try:
            base = DgpConfig.from_json(Path(args.dgp_config).read_text()).to_dict()
        except (OSError, ValueError, TypeError) as exc:
            raise UsageError(f"--dgp-config: {exc}") from None
    carry = CarryoverKind(args.carryover)
    drift = args.drift
    if drift is None:
        drift = base.get("covariate_drift") or (
            CovariateDrift.TREATMENT_SHIFT.value
            if carry is CarryoverKind.COVARIATE_MEDIATED
            else CovariateDrift.INDEPENDENT_INCREMENT.value
        )
    base.update(carryover=carry, gamma=args.gamma, n=args.n, covariate_drift=drift)
    if args.noise_sd is not None:
        base["noise_sd"] = args.noise_sd
    try:
        cfg = DgpConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid DGP settings: {exc}") from None

    seed = _resolve_seed(args.seed)
    panel, _, _ = simulate_panel(cfg, DesignKind(args.design), np.random.default_rng(seed), seed=seed)
    panel.to_csv(args.out)
    logging.getLogger(__name__).info("wrote %d units to %s", len(panel), args.out)
    return 0


def _read_panel(args) -> Panel:
    try:
        return Panel.from_csv(args.input, design=args.design)
    except (OSError, ValueError, KeyError, IndexError) as exc:
        raise UsageError(f"--in: cannot read panel: {exc}") from None


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def cmd_estimate(args) -> int:
    panel = _read_panel(args)
    seed = _resolve_seed(args.seed)
    rng = np.random.default_rng(seed)

    results = []
    status = 0
    for kind in args.estimator:
        try:
            res = estimate(panel, kind, rng)
            results.append({**res.to_dict(), "error": None})
        except (CollinearityError, DegenerateOutcome) as exc:
            results.append({"estimator": kind.value, "tau_hat": None, "se": None, "n_used": None, "error": str(exc)})
            if args.strict:
                status = EXIT_DEGENERATE

    fwl = None
    if args.fwl:
        try:
            dec = fwl_decompose(panel)
            fwl = {**dec.to_dict(), "identity_residual": dec.identity_residual}
        except (CollinearityError, DegenerateOutcome) as exc:
            fwl = {"error": str(exc)}
            if args.strict:
                status = EXIT_DEGENERATE

    if args.format == "json":
        payload = {"estimates": results}
        if fwl is not None:
            payload["fwl"] = fwl
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["estimator", "tau_hat", "se", "n_used", "error"])
        for r in results:
            w.writerow([r["estimator"], _fmt(r["tau_hat"]), _fmt(r["se"]), r["n_used"] or "", r["error"] or ""])
        if fwl is not None:
            w.writerow([])
            keys = ["tau_pooled", "q", "tau_t1", "tau_t2", "identity_residual", "error"]
            w.writerow(keys)
            w.writerow([fwl.get("error", "") if k == "error" else _fmt(fwl.get(k)) for k in keys])
        text = buf.getvalue()

    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


def _split_arg(text: str):
    if text.lower() == "median":
        return MedianSplit()
    try:
        return FixedCut(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'median' or a number, got {text!r}") from None


def cmd_diagnose(args) -> int:
    panel = _read_panel(args)
    print(f"seed: {panel.meta.seed}", file=sys.stderr)
    try:
        report = diagnose(panel, threshold=args.threshold, split=args.split)
    except (DegenerateOutcome, CollinearityError) as exc:
        print(f"degenerate panel: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE

    d = report.to_dict()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(d))
    w.writerow([str(v).lower() if isinstance(v, bool) else v for v in d.values()])
    sys.stdout.write(report.render() + "\n\n" + buf.getvalue())
    if args.out:
        Path(args.out).write_text(json.dumps(_json_safe(d), indent=2, sort_keys=True) + "\n")
    return 0


def _json_safe(d: dict) -> dict:
    return {k: (str(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def _report_sweep(label: str, result) -> None:
    print(f"{label}: replications {result.meta['replications']}, failures {result.total_failures}")


def cmd_sweep(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise UsageError(f"--config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: malformed JSON: {exc}") from None
    try:
        cfg = SweepConfig.from_dict(raw)
    except ValueError as exc:
        raise UsageError(f"--config: {exc}") from None
    print(f"seed: {cfg.master_seed}", file=sys.stderr)
    result = run_sweep(cfg, workers=args.workers)
    result.to_csv(args.out)
    _report_sweep(Path(args.out).stem, result)
    return 0


def cmd_preset(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for label, cfg in PRESETS[args.name]().items():
        changes = {}
        if args.reps is not None:
            changes["reps"] = args.reps
        if args.gamma_count is not None:
            start, stop, _ = cfg.gamma_grid
            changes["gamma_grid"] = (start, stop, args.gamma_count)
        if args.seed is not None:
            changes["master_seed"] = args.seed
        try:
            cfg = cfg.replace(**changes)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        print(f"seed: {cfg.master_seed}", file=sys.stderr)
        result = run_sweep(cfg, workers=args.workers)
        result.to_csv(out / f"{label}.csv")
        _report_sweep(label, result)
    return 0


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqdesign", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a panel CSV")
    s.add_argument("--design", required=True, choices=_enum_choice(DesignKind))
    s.add_argument("--carryover", required=True, choices=_enum_choice(CarryoverKind))
    s.add_argument("--gamma", required=True, type=_float_arg)
    s.add_argument("--n", required=True, type=_positive_int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--drift", choices=_enum_choice(CovariateDrift))
    s.add_argument("--noise-sd", type=_float_arg)
    s.add_argument("--dgp-config", help="JSON DgpConfig used as the base")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="run estimators on a panel CSV")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--estimator", type=_estimator_list, default=[EstimatorKind.NO_CONTROL])
    e.add_argument("--fwl", action="store_true")
    e.add_argument("--strict", action="store_true")
    e.add_argument("--seed", type=int)
    e.add_argument("--design", choices=_enum_choice(DesignKind))
    e.add_argument("--format", choices=["csv", "json"], default="csv")
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    d = sub.add_parser("diagnose", help="Fisher test and period-gap check")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--threshold", type=_float_arg, default=1.96)
    d.add_argument("--split", type=_split_arg, default=MedianSplit())
    d.add_argument("--design", choices=_enum_choice(DesignKind))
    d.add_argument("--out")
    d.set_defaults(func=cmd_diagnose)

    w = sub.add_parser("sweep", help="run a sweep from a JSON config")
    w.add_argument("--config", required=True)
    w.add_argument("--workers", type=_positive_int, default=1)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("preset", help="run a named preset sweep")
    r.add_argument("--name", required=True, choices=sorted(PRESETS))
    r.add_argument("--workers", type=_positive_int, default=1)
    r.add_argument("--out", default=".")
    r.add_argument("--reps", type=_positive_int)
    r.add_argument("--gamma-count", type=_positive_int)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"seqdesign {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
