"""Command-line entry point: ``w2slab <subcommand> [flags]``.

Subcommands
-----------
sweep           run the grid, write ``sweep.csv`` (and SVGs with ``--svg``)
theory          closed-form predictions for one profile
dims            intrinsic/correlation dimensions of two feature dumps
ridge-bound     ridge-regression W2S bound and optimal regularizers
decompose       MC variance/bias of the four models at one grid point
compare-theory  MC-vs-theory variance table for a sweep CSV

Exit codes: 0 success, 1 configuration or input error, 2 failed
``compare-theory --check``.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import asdict, replace
from typing import Optional, Sequence

from .. import theory as th
from ..dims import dims_report, read_features
from .config import ConfigError, apply_overrides, load_config
from .sweep import compare_theory, compute_row, parse_csv, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="INI config file (desk preset when omitted)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--trials", metavar="K", type=int)
    p.add_argument("--workers", metavar="W", type=int)
    p.add_argument("--seed", metavar="S", type=int)
    p.add_argument("--svg", action="store_true", help="also write SVG charts")
    p.add_argument("--tolerance", metavar="REL", type=float)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="w2slab", description="Weak-to-strong ridgeless regression lab.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="run the configured grid")
    p.add_argument("--no-resume", action="store_true", help="ignore an existing CSV")

    p = sub.add_parser("theory", parents=[common], help="closed-form predictions for one profile")
    for flag, typ in (("--d-s", int), ("--d-w", int), ("--overlap", float), ("--n", int), ("--N", int),
                      ("--sigma2", float), ("--rho-s", float), ("--rho-w", float), ("--c", float)):
        p.add_argument(flag, type=typ)

    p = sub.add_parser("dims", parents=[common], help="dimension toolkit on feature dumps")
    p.add_argument("--strong", required=True, metavar="PATH")
    p.add_argument("--weak", required=True, metavar="PATH")
    p.add_argument("--shape-s", metavar="ROWS,COLS", help="shape of a binary strong dump")
    p.add_argument("--shape-w", metavar="ROWS,COLS", help="shape of a binary weak dump")
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--center", action="store_true")
    p.add_argument("--sketch-fraction", type=float)

    p = sub.add_parser("ridge-bound", parents=[common], help="ridge W2S bound calculator")
    for flag in ("--tr-ss", "--tr-sw", "--tr-cross", "--varrho-s", "--varrho-w", "--sigma2"):
        p.add_argument(flag, type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--alpha-w", type=float)
    p.add_argument("--alpha-w2s", type=float)

    p = sub.add_parser("decompose", parents=[common], help="risk decomposition at one grid point")
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--overlap", type=int)
    p.add_argument("--sigma2", type=float)

    p = sub.add_parser("compare-theory", parents=[common], help="MC vs closed-form variance table")
    p.add_argument("--csv", metavar="PATH", help="sweep CSV (default: OUT/sweep.csv)")
    p.add_argument("--models", default="w2s", help="comma list of weak,w2s,strong_sft,ceiling")
    p.add_argument("--min-fraction", type=float, default=0.9)
    p.add_argument("--check", action="store_true", help="exit 2 when too few rows pass")
    return parser


def _load(args):
    cfg = load_config(args.config)
    return apply_overrides(cfg, out=args.out, trials=args.trials, workers=args.workers, seed=args.seed,
                           svg=args.svg, tolerance=args.tolerance)


def _kv(pairs, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["quantity", "value"])
    for k, v in pairs:
        w.writerow([k, "NA" if v is None else (repr(v) if isinstance(v, float) else v)])


def _maybe(fn, *a):
    try:
        return fn(*a)
    except th.UndefinedPrediction:
        return None


def cmd_sweep(args, out) -> int:
    cfg = _load(args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = run_sweep(cfg, cfg.csv_path, resume=not args.no_resume)
    print(f"wrote {len(rows)} rows to {cfg.csv_path}", file=out)
    if cfg.emit_svg:
        from .plots import emit_svg

        for path in emit_svg(rows, cfg.out_dir):
            print(f"wrote {path}", file=out)
    return EXIT_OK


def cmd_theory(args, out) -> int:
    cfg = _load(args)
    b = cfg.base
    p = th.DimProfile(
        d_s=args.d_s if args.d_s is not None else b.d_s,
        d_w=args.d_w if args.d_w is not None else b.d_w,
        d_overlap=args.overlap if args.overlap is not None else cfg.overlap_grid[0],
        n=args.n if args.n is not None else cfg.n_grid[0],
        N=args.N if args.N is not None else cfg.N_grid[0],
        sigma2=args.sigma2 if args.sigma2 is not None else cfg.sigma2_grid[0],
        rho_s=args.rho_s or 0.0, rho_w=args.rho_w or 0.0,
        c=args.c if args.c is not None else cfg.theory_constant_c,
    )
    bb = th.bias_bounds(p)
    pairs = [("d_w2s", th.d_w2s(p)), ("var_w2s", _maybe(th.var_w2s, p)), ("var_weak", _maybe(th.var_weak, p)),
             ("var_strong_sft", _maybe(th.var_strong_sft, p)), ("var_ceiling", th.var_ceiling(p)),
             ("bias_w2s_ub", bb.bias_w2s_ub), ("bias_w_ub", bb.bias_w_ub), ("bias_s_ub", bb.bias_s_ub),
             ("bias_c_ub", bb.bias_c_ub), ("pgr_lower", _maybe(th.pgr_lower, p)),
             ("opr_lower", _maybe(th.opr_lower, p)), ("pgr_lower_tight", _maybe(th.pgr_lower_tight, p)),
             ("opr_lower_tight", _maybe(th.opr_lower_tight, p))]
    opt = _maybe(th.optimal_q, p)
    if opt is not None:
        pairs += [("q_pgr", opt.q_pgr), ("pgr_at_opt", opt.pgr_at_opt), ("q_opr", opt.q_opr),
                  ("opr_at_opt", opt.opr_at_opt)]
    _kv(pairs, out)
    return EXIT_OK


def _shape(text: Optional[str]):
    if text is None:
        return None
    try:
        r, c = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad shape {text!r}; expected ROWS,COLS") from exc
    return r, c


def cmd_dims(args, out) -> int:
    cfg = _load(args)
    try:
        phi_s = read_features(args.strong, _shape(args.shape_s))
        phi_w = read_features(args.weak, _shape(args.shape_w))
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    report = dims_report(phi_s, phi_w, args.tau, args.center, cfg.seed, args.sketch_fraction)
    text = report.to_text()
    out.write(text)
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "dims.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_ridge_bound(args, out) -> int:
    r = th.RidgeProfile(args.tr_ss, args.tr_sw, args.tr_cross, args.varrho_s, args.varrho_w,
                        args.n, args.N, args.sigma2)
    pairs = [("variance_constant", r.variance_constant())]
    if args.alpha_w is None and args.alpha_w2s is None:
        opt = th.optimal_ridge_alphas(r)
        r = replace(r, alpha_w=opt.alpha_w, alpha_w2s=opt.alpha_w2s)
        pairs += [("alpha_w", opt.alpha_w), ("alpha_w2s", opt.alpha_w2s), ("er_opt", opt.er_opt)]
    elif args.alpha_w is None or args.alpha_w2s is None:
        raise ConfigError("give both --alpha-w and --alpha-w2s, or neither for the optimal pair")
    else:
        r = replace(r, alpha_w=args.alpha_w, alpha_w2s=args.alpha_w2s)
        pairs += [("alpha_w", args.alpha_w), ("alpha_w2s", args.alpha_w2s)]
    b = th.ridge_bound(r)
    pairs += [("var_ub", b.var_ub), ("bias_ub", b.bias_ub), ("er_ub", b.er_ub)]
    _kv(pairs, out)
    return EXIT_OK


def cmd_decompose(args, out) -> int:
    cfg = _load(args)
    point = (args.overlap if args.overlap is not None else cfg.overlap_grid[0],
             args.sigma2 if args.sigma2 is not None else cfg.sigma2_grid[0],
             args.n if args.n is not None else cfg.n_grid[0],
             args.N if args.N is not None else cfg.N_grid[0])
    try:
        replace(cfg.base, d_overlap=point[0])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    row = compute_row(cfg, point, workers=cfg.workers)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["model", "excess_risk", "se", "variance", "bias", "theory_variance"])
    theory = {"weak": row.theory_var_w, "w2s": row.theory_var_w2s, "strong_sft": row.theory_var_s,
              "ceiling": row.theory_var_c}
    d = asdict(row)
    for m in ("weak", "w2s", "strong_sft", "ceiling"):
        w.writerow([m, repr(d[f"er_{m}"]), repr(d[f"er_{m}_se"]), repr(d[f"var_{m}"]), repr(d[f"bias_{m}"]),
                    "NA" if theory[m] is None else repr(theory[m])])
    for k in ("pgr", "opr", "rho_s", "rho_w"):
        print(f"# {k} = {d[k]!r}", file=out)
    return EXIT_OK


def cmd_compare(args, out) -> int:
    cfg = _load(args)
    path = args.csv or cfg.csv_path
    try:
        rows = parse_csv(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    bad = set(models) - {"weak", "w2s", "strong_sft", "ceiling"}
    if bad:
        raise ConfigError(f"unknown models {sorted(bad)}")
    report = compare_theory(rows, cfg.tolerance, models)
    out.write(report.to_text())
    if args.check and not report.all_passed(args.min_fraction):
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "theory": cmd_theory, "dims": cmd_dims, "ridge-bound": cmd_ridge_bound,
            "decompose": cmd_decompose, "compare-theory": cmd_compare}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, out)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
