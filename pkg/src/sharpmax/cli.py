"""Command-line front end.

Exit codes: 0 success, 1 a verification clause failed, 2 usage or domain error.
Every output row carries ``schema_version`` and the resolved configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from . import lemma_checks, sharpness
from .constants import DEFAULT_TOL, constants_bundle
from .errors import DivergenceError, DomainError
from .simulator import FIELDS, StagedParams, Variant, simulate

SCHEMA_VERSION = 1
ACCEPTANCE_P = (0.05, 0.15, 0.3, 0.5, 0.75, 0.9)

CONSTANTS_COLUMNS = ["schema_version", "p", "p0", "alpha", "C", "c", "frak_c",
                     "residual_p0", "residual_alpha", "residual_c", "residual_frak_c", "tol"]
VERIFY_COLUMNS = ["schema_version", "p", "lemma", "clause", "label", "points",
                  "worst_violation", "tolerance", "passed", "fault"]
SIMULATE_COLUMNS = ["schema_version", "thm", "variant", "p", "beta", "delta", "cap", "n", "seed",
                    "stream", "stratify", "oracle_step", "quantity", "mean", "stderr",
                    "constant_power"]
SHARPNESS_COLUMNS = ["schema_version", "thm", "p", "beta", "beta_fraction", "delta", "K", "N",
                     "numerator", "denominator", "ratio", "limit", "limit_tag", "asymptote"]

QUANTITY_NAMES = {"x_terminal": "E|X|^p", "m_plus": "E(M+)^p", "m_minus": "E(-M-)^p",
                  "m_abs": "E(M)^p"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing helpers


def parse_p_grid(spec: str) -> list[float]:
    """Comma list ``0.1,0.5`` or range ``from:to:count``; empty means no points."""
    spec = spec.strip()
    if not spec:
        return []
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise ValueError
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError
            return [float(v) for v in np.linspace(lo, hi, count)]
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse p-grid {spec!r}; use 'a,b,c' or 'from:to:count'") from None


def parse_sweep(spec: str) -> np.ndarray:
    try:
        lo, hi, steps = spec.split(":")
        return sharpness.sweep_fractions(float(lo), float(hi), int(steps))
    except ValueError:
        raise UsageError(f"cannot parse beta sweep {spec!r}; use 'from:to:steps'") from None


def parse_oracle(spec: str | None) -> float | None:
    if spec is None:
        return None
    key, _, val = spec.partition("=")
    if key.strip() != "step" or not val:
        raise UsageError(f"oracle option must look like step=<dt>, got {spec!r}")
    try:
        return float(val)
    except ValueError:
        raise UsageError(f"bad oracle step {val!r}") from None


def parse_fault(spec: str | None) -> tuple[str, float] | None:
    """``name=rel`` perturbs constant ``name`` (C, c or frak_c) by a relative amount."""
    if spec is None:
        return None
    name, _, val = spec.partition("=")
    name = name.strip()
    if name not in ("C", "c", "frak_c"):
        raise UsageError(f"fault target must be C, c or frak_c, got {name!r}")
    try:
        return name, float(val)
    except ValueError:
        raise UsageError(f"bad fault size {val!r}") from None


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def render(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        data = [{c: _json_value(r.get(c)) for c in columns} for r in rows]
        return json.dumps(data, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def emit(rows: list[dict], columns: list[str], args) -> None:
    text = render(rows, columns, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_constants(args) -> int:
    rows = []
    for p in parse_p_grid(args.p_grid):
        b = constants_bundle(p, args.tol)
        rows.append({"schema_version": SCHEMA_VERSION, "p": b.p, "p0": b.p0, "alpha": b.alpha,
                     "C": b.C, "c": b.c, "frak_c": b.frak_c,
                     **{f"residual_{k}": v for k, v in b.residuals.items()}, "tol": args.tol})
    emit(rows, CONSTANTS_COLUMNS, args)
    return 0


def _lemma_runs(args) -> list[tuple[int, float]]:
    lemmas = [0, 1, 2] if args.lemma == "all" else [int(args.lemma)]
    ps = [args.p] if args.p is not None else list(ACCEPTANCE_P)
    runs = []
    for lemma in lemmas:
        for p in ps:
            if lemma == 2 and not p > 0.5:
                if args.lemma == "2":
                    raise DomainError(f"lemma 2 needs 1/2 < p < 1, got p={p}")
                continue
            runs.append((lemma, p))
    return runs


def cmd_verify(args) -> int:
    fault = parse_fault(args.fault)
    runs = _lemma_runs(args)
    rows = []
    ok = True
    for lemma, p in runs:
        b = constants_bundle(p)
        grid = lemma_checks.default_grid(lemma)
        if args.grid_tol is not None:
            grid = replace(grid, tolerance=args.grid_tol)
        target = None
        if fault is not None:
            name, rel = fault
            target = getattr(b, name) * (1.0 + rel)
        if lemma == 0:
            reports = lemma_checks.verify_lemma0(p, grid, b, target if fault and fault[0] == "C" else None)
        elif lemma == 1:
            reports = lemma_checks.verify_lemma1(p, grid, b, target if fault and fault[0] == "c" else None)
        else:
            reports = lemma_checks.verify_lemma2(p, grid, b, target if fault and fault[0] == "frak_c" else None)
        ok = ok and lemma_checks.all_passed(reports)
        for r in reports:
            rows.append({"schema_version": SCHEMA_VERSION, "p": p, **r.as_row(),
                         "fault": args.fault or ""})
    emit(rows, VERIFY_COLUMNS, args)
    if not ok:
        failed = sorted({(r["lemma"], r["clause"]) for r in rows if not r["passed"]})
        print("failed clauses: " + ", ".join(f"lemma {l}: {c}" for l, c in failed), file=sys.stderr)
    return 0 if ok else 1


def _variant(thm: int, cap: int | None) -> Variant:
    if thm == 1:
        return Variant.THM1_CAPPED if cap is not None else Variant.THM1_UNCAPPED
    if cap is not None:
        raise DomainError("--cap applies to --thm 1 only")
    return Variant.THM2 if thm == 2 else Variant.THM3


def cmd_simulate(args) -> int:
    if args.n < 10:
        raise DomainError(f"--n must be at least 10, got {args.n}")
    if args.seed is None:
        raise UsageError("--seed is required for reproducible simulation")
    step = parse_oracle(args.oracle)
    params = StagedParams(args.p, args.beta, args.delta, _variant(args.thm, args.cap), args.cap)
    res = simulate(params, args.n, args.seed, stream=args.stream, workers=args.workers,
                   stratify=args.stratify, oracle_step=step)
    base = {"schema_version": SCHEMA_VERSION, "thm": args.thm, "variant": params.variant.value,
            "p": params.p, "beta": params.beta, "delta": params.delta, "cap": params.cap,
            "n": args.n, "seed": args.seed, "stream": args.stream, "stratify": args.stratify,
            "oracle_step": step, "constant_power": res.constant_power}
    rows = [{**base, "quantity": QUANTITY_NAMES[f], "mean": res.moments[f].mean,
             "stderr": res.moments[f].stderr} for f in FIELDS]
    rows.append({**base, "quantity": "ratio", "mean": res.ratio, "stderr": res.ratio_stderr})
    emit(rows, SIMULATE_COLUMNS, args)
    return 0


def cmd_sharpness(args) -> int:
    fractions = parse_sweep(args.beta_sweep)
    if args.thm == 3 and not args.p > 0.5:
        raise DomainError(f"thm 3 needs 1/2 < p < 1, got p={args.p}; for p <= 1/2 the constant equals c_p, use --thm 2")
    constants_bundle(args.p)
    pts = sharpness.sharpness_chain(args.thm, args.p, fractions, args.delta, args.K)
    rows = [{"schema_version": SCHEMA_VERSION, **pt.as_row()} for pt in pts]
    emit(rows, SHARPNESS_COLUMNS, args)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sharpmax", description=__doc__.splitlines()[0])
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--format", choices=("csv", "json"), default="csv")
    out.add_argument("--out", help="write to this path instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constants", parents=[out], help="table of p0, alpha, C, c, frak_c")
    c.add_argument("--p-grid", required=True, help="'a,b,c' or 'from:to:count'")
    c.add_argument("--tol", type=float, default=DEFAULT_TOL)
    c.set_defaults(func=cmd_constants)

    v = sub.add_parser("verify", parents=[out], help="grid-verify the special-function lemmas")
    v.add_argument("--lemma", choices=("0", "1", "2", "all"), default="all")
    v.add_argument("--p", type=float)
    v.add_argument("--grid-tol", type=float, help="slack allowed per clause (default 1e-12)")
    v.add_argument("--fault", help="perturb a constant in the majorization target, e.g. c=-1e-3")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", parents=[out], help="Monte Carlo moments of an extremal construction")
    s.add_argument("--thm", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--cap", type=int)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--oracle", help="use the random-walk oracle, e.g. step=1e-4")
    s.add_argument("--stratify", action="store_true")
    s.set_defaults(func=cmd_simulate)

    h = sub.add_parser("sharpness", parents=[out], help="ratio chain towards a sharp constant")
    h.add_argument("--thm", type=int, choices=(1, 2, 3), required=True)
    h.add_argument("--p", type=float, required=True)
    h.add_argument("--beta-sweep", default="0.5:0.999:11",
                   help="fractions of the beta cap as from:to:steps")
    h.add_argument("--delta", type=float, default=sharpness.DELTA_LIMIT)
    h.add_argument("--K", type=float, default=sharpness.K_LIMIT)
    h.set_defaults(func=cmd_sharpness)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, DivergenceError) as exc:
        print(f"sharpmax {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
