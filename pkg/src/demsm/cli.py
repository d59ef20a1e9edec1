"""Command-line interface.

Exit codes: 0 success, 2 invalid configuration, 3 unusable data, 4 failed
audit or oracle check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

from . import __version__
from .bounds import (
    CURVE_COLUMNS,
    Model,
    ObservedLaw,
    SensitivitySpec,
    aggregate_bounds,
    compare_models,
    dumps,
    parse_overrides,
    sensitivity_curve,
    validate_curve_grid,
)
from .errors import DataError, ResolutionOutOfRange, ValidationError
from .estimate import EmptyArmWarning, bootstrap_ci, empirical_observed_law, read_sample_csv
from .oracle import build_witness, oracle_comparison, verify_witness

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_AUDIT = 0, 2, 3, 4
GREEDY_TOL = 1e-12


def _num(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"not a number: {text!r}") from None


def _grid(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return [_num(p) for p in parts]


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _write_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# configuration


def _build_spec(args, model: Model) -> SensitivitySpec:
    if args.lam is None:
        raise ValidationError("--lambda is required")
    lam = _num(args.lam)
    if not lam >= 1.0:
        raise ValidationError("lambda must be ≥ 1 for symmetric specification")
    gam_text = args.gamma if args.gamma is not None else args.lam
    gam = math.inf if gam_text.strip().lower() == "inf" else _num(gam_text)
    gam0 = None
    if args.gamma0 is not None:
        gam0 = math.inf if args.gamma0.strip().lower() == "inf" else _num(args.gamma0)
    for name, v in (("gamma", gam), ("gamma0", gam0)):
        if v is not None and not v >= 1.0:
            raise ValidationError(f"{name} must be ≥ 1 for symmetric specification")
    delta = None
    if model is Model.EMSM:
        if args.delta is None:
            raise ValidationError("--delta is required for the emsm model")
        delta = _num(args.delta)
    elif args.delta is not None:
        delta = _num(args.delta)
    if model is Model.MSM:
        gam, gam0 = math.inf, None
    spec = SensitivitySpec.symmetric(lam, gam, gam0, delta)
    if getattr(args, "overrides", None):
        try:
            with open(args.overrides) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read overrides: {exc}") from None
        spec = SensitivitySpec(spec.lam, spec.gam, spec.gam_prime, spec.delta, parse_overrides(raw))
    return spec


def _load_law(args) -> ObservedLaw:
    if bool(args.law) == bool(args.sample):
        raise ValidationError("give exactly one of --law or --sample")
    try:
        if args.law:
            with open(args.law) as fh:
                return ObservedLaw.from_dict(json.load(fh))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyArmWarning)
            return empirical_observed_law(read_sample_csv(args.sample))
    except OSError as exc:
        raise DataError(f"cannot read input: {exc}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"malformed law file: {exc!r}") from None
    except ValidationError as exc:
        # a structurally invalid input file is a data problem, not a configuration one
        raise DataError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands


def cmd_bounds(args) -> int:
    model = Model(args.model)
    spec = _build_spec(args, model)
    if args.boot is not None:
        if not args.sample:
            raise ValidationError("--boot needs --sample")
        if args.boot < 100 or not 0.0 < args.level < 1.0:
            raise ValidationError("--boot must be >= 100 and --level in (0, 1)")
    law = _load_law(args)
    report = aggregate_bounds(law, spec, model)
    if args.format == "csv":
        rows = [{"quantity": q, "lo": report.interval(q)[0], "hi": report.interval(q)[1],
                 "reference": getattr(report, f"{q}_ref")} for q in ("mu1", "mu0", "ate")]
        _emit(_write_csv(rows, ("quantity", "lo", "hi", "reference")), args.out)
        return EXIT_OK
    out = report.to_dict()
    if args.boot is not None:
        sample = read_sample_csv(args.sample)
        boot = bootstrap_ci(sample, spec, model, B=args.boot, level=args.level,
                            seed=args.seed, point=report)
        out["bootstrap"] = boot.to_dict()
    _emit(dumps(out), args.out)
    return EXIT_OK


def cmd_curve(args) -> int:
    model = Model(args.model)
    if args.grid is None:
        raise ValidationError("--grid is required")
    grid = _grid(args.grid)
    lam = None
    if model is Model.EMSM:
        if args.lam is None:
            raise ValidationError("an emsm curve runs over delta and needs --lambda")
        lam = _num(args.lam)
        if not lam >= 1.0:
            raise ValidationError("lambda must be ≥ 1 for symmetric specification")
    grid = validate_curve_grid(grid, model)
    rows = sensitivity_curve(_load_law(args), grid, model, lam)
    if args.format == "json":
        _emit(dumps({"model": model.value, "rows": rows}), args.out)
    else:
        _emit(_write_csv(rows, CURVE_COLUMNS), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.lam is None or args.delta is None:
        raise ValidationError("compare needs --lambda and --delta")
    spec = _build_spec(args, Model.EMSM)
    law = _load_law(args)
    gam = spec.gam.gamma2
    gam0 = spec.gam_prime.gamma2
    out = compare_models(law, spec.lam.lambda2, gam, spec.delta, gam0)
    _emit(dumps(out), args.out)
    return EXIT_OK


def cmd_witness(args) -> int:
    spec = _build_spec(args, Model.DEMSM)
    law = _load_law(args)
    out = {"strata": {}}
    ok = True
    for s in law.strata:
        if s.dist1 is None or s.dist0 is None:
            raise DataError(f"stratum {s.id!r} needs both arm distributions for a witness")
        p = spec.for_stratum(s.id)
        w = build_witness(s.dist1, s.dist0, p.lam, p.gam, p.gam_prime, p_treat=s.propensity)
        if args.corrupt:
            w.y1_given_u[0][0] += 0.01
        audit = verify_witness(w, s.dist1, s.dist0, spec, tol=args.tol, stratum=s.id)
        ok = ok and audit.passed
        out["strata"][s.id] = {"witness": w.to_dict(), "audit": audit.to_dict()}
    out["passed"] = ok
    _emit(dumps(out), args.out)
    if not ok:
        failing = {sid: v["audit"]["checks"] for sid, v in out["strata"].items()}
        names = sorted({(sid, k) for sid, checks in failing.items()
                        for k, c in checks.items() if not c["passed"]})
        print("audit failed: " + ", ".join(f"{sid}:{k}" for sid, k in names), file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


CHECK_COLUMNS = ("stratum", "arm", "reference", "closed_lo", "closed_hi", "greedy_lo", "greedy_hi",
                 "greedy_err", "grid_lo", "grid_hi", "grid_gap_lo", "grid_gap_hi", "grid_tol", "ok")


def cmd_check(args) -> int:
    if not 0.0 < args.resolution <= 0.1:
        raise ResolutionOutOfRange(f"resolution must lie in (0, 0.1], got {args.resolution}")
    spec = _build_spec(args, Model.DEMSM)
    law = _load_law(args)
    rows = []
    ok = True
    for s in law.strata:
        p = spec.for_stratum(s.id)
        for arm, d, gam in ((1, s.dist1, p.gam), (0, s.dist0, p.gam_prime)):
            if d is None:
                continue
            row = oracle_comparison(d, p.lam, gam, args.resolution, arm=arm)
            tol = 2.0 * args.resolution * max(1.0, float(d.support[-1] - d.support[0]))
            good = row["greedy_err"] <= GREEDY_TOL
            if not math.isnan(row["grid_hi"]):
                good = good and all(-GREEDY_TOL <= row[k] <= tol for k in ("grid_gap_lo", "grid_gap_hi"))
            ok = ok and good
            rows.append({"stratum": s.id, "arm": arm, "grid_tol": tol, "ok": good, **row})
    if args.format == "json":
        _emit(dumps({"rows": rows, "passed": ok}), args.out)
    else:
        _emit(_write_csv(rows, CHECK_COLUMNS), args.out)
    if not ok:
        print("oracle check failed", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser, fmt_default: str) -> None:
    src = p.add_argument_group("input")
    src.add_argument("--law", help="observed law as JSON")
    src.add_argument("--sample", help="unit-level CSV with header y,t,x")
    par = p.add_argument_group("sensitivity parameters")
    par.add_argument("--lambda", dest="lam", help="treatment parameter, lambda1 = 1/lambda2 = LAMBDA")
    par.add_argument("--gamma", help="outcome parameter for Y1 ('inf' for none); defaults to --lambda")
    par.add_argument("--gamma0", help="outcome parameter for Y0; defaults to --gamma")
    par.add_argument("--delta", help="eMSM parameter in [0, 1]")
    par.add_argument("--overrides", help="JSON of per-stratum parameter overrides")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=fmt_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demsm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    models = [m.value for m in Model]

    p = sub.add_parser("bounds", help="sharp bounds on mu1, mu0 and the ATE")
    _add_common(p, "json")
    p.add_argument("--model", choices=models, default="demsm")
    p.add_argument("--boot", type=int, metavar="B", help="bootstrap replicates (needs --sample)")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("curve", help="bounds along a grid of sensitivity values")
    _add_common(p, "csv")
    p.add_argument("--model", choices=models, default="demsm",
                   help="demsm: lambda = gamma = value; msm: lambda = value; emsm: delta = value")
    p.add_argument("--grid", help="comma-separated values, e.g. 1,1.5,2")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("compare", help="MSM, deMSM and eMSM bounds side by side")
    _add_common(p, "json")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("witness", help="emit and audit the bound-attaining joint law")
    _add_common(p, "json")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("check", help="closed-form bounds against the greedy and grid oracles")
    _add_common(p, "csv")
    p.add_argument("--resolution", type=float, default=1e-3)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
