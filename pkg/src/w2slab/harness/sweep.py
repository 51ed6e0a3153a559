"""Grid sweeps: Monte-Carlo risks next to closed-form predictions, CSV in and out.

Every grid point gets its own seed tuple derived from the run seed and the
point's parameters, so a point's numbers do not depend on which other points
are in the grid, on the worker count, or on whether the run was resumed.
Theory columns are computed from the covariance specs alone (exact ``rho``
values, never the sampled data); MC columns never look at theory columns.
"""

from __future__ import annotations

import csv
import math
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .. import theory as th
from ..features import build_synthetic
from ..pipeline import MODELS, FitPlan
from ..risk import RiskSetup, metric_pair, run_trials
from .config import SweepConfig

__all__ = ["SweepRow", "CSV_HEADER", "run_sweep", "compute_row", "emit_csv", "parse_csv",
           "ComparisonEntry", "ComparisonReport", "compare_theory", "row_key"]


@dataclass(frozen=True)
class SweepRow:
    d_overlap: int
    sigma2: float
    n: int
    N: int
    seed: int
    trials: int
    rho_s: float
    rho_w: float
    er_weak: float
    er_weak_se: float
    var_weak: float
    var_weak_se: float
    bias_weak: float
    bias_weak_se: float
    er_w2s: float
    er_w2s_se: float
    var_w2s: float
    var_w2s_se: float
    bias_w2s: float
    bias_w2s_se: float
    er_strong_sft: float
    er_strong_sft_se: float
    var_strong_sft: float
    var_strong_sft_se: float
    bias_strong_sft: float
    bias_strong_sft_se: float
    er_ceiling: float
    er_ceiling_se: float
    var_ceiling: float
    var_ceiling_se: float
    bias_ceiling: float
    bias_ceiling_se: float
    pgr: Optional[float]
    pgr_se: Optional[float]
    opr: Optional[float]
    opr_se: Optional[float]
    theory_var_w2s: Optional[float]
    theory_var_w: Optional[float]
    theory_var_s: Optional[float]
    theory_var_c: Optional[float]
    pgr_lower: Optional[float]
    opr_lower: Optional[float]
    pgr_lower_tight: Optional[float]
    opr_lower_tight: Optional[float]

    @property
    def key(self) -> Tuple:
        return row_key(self.d_overlap, self.sigma2, self.n, self.N, self.seed)


CSV_HEADER: Tuple[str, ...] = tuple(f.name for f in fields(SweepRow))
_INT_FIELDS = {"d_overlap", "n", "N", "seed", "trials"}


def row_key(d_overlap, sigma2, n, N, seed) -> Tuple:
    return (int(d_overlap), float(sigma2), int(n), int(N), int(seed))


def _float_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def point_seed(cfg: SweepConfig, overlap: int, sigma2: float, n: int, N: int) -> Tuple[int, ...]:
    return (cfg.seed, int(overlap), _float_bits(sigma2), int(n), int(N))


def _safe(fn, *args):
    try:
        val = fn(*args)
    except (th.UndefinedPrediction, ZeroDivisionError):
        return None
    return val if math.isfinite(val) else None


def _theory_columns(cfg: SweepConfig, profile: th.DimProfile) -> Dict[str, Optional[float]]:
    names = ("theory_var_w2s", "theory_var_w", "theory_var_s", "theory_var_c",
             "pgr_lower", "opr_lower", "pgr_lower_tight", "opr_lower_tight")
    if not cfg.solver.ridgeless:
        return dict.fromkeys(names, None)
    return dict(
        theory_var_w2s=_safe(th.var_w2s, profile),
        theory_var_w=_safe(th.var_weak, profile),
        theory_var_s=_safe(th.var_strong_sft, profile),
        theory_var_c=_safe(th.var_ceiling, profile),
        pgr_lower=_safe(th.pgr_lower, profile),
        opr_lower=_safe(th.opr_lower, profile),
        pgr_lower_tight=_safe(th.pgr_lower_tight, profile),
        opr_lower_tight=_safe(th.opr_lower_tight, profile),
    )


def compute_row(cfg: SweepConfig, point, workers: int = 1) -> SweepRow:
    overlap, sigma2, n, N = point
    synth = replace(cfg.base, d_overlap=overlap, sigma2=sigma2)
    task, cov_s, cov_w = build_synthetic(synth, cfg.seed)
    setup = RiskSetup(task, cov_s, cov_w, n, N, FitPlan.uniform(cfg.solver), cfg.latent)
    table = run_trials(setup, cfg.trials, point_seed(cfg, *point), workers)
    profile = th.dim_profile(task, cov_s, cov_w, n, N, cfg.theory_constant_c)

    vals = dict(d_overlap=int(overlap), sigma2=float(sigma2), n=int(n), N=int(N), seed=cfg.seed,
                trials=cfg.trials, rho_s=profile.rho_s, rho_w=profile.rho_w)
    for m in MODELS:
        est = table.estimate(m)
        vals.update({f"er_{m}": est.excess_risk, f"er_{m}_se": est.excess_risk_se,
                     f"var_{m}": est.variance, f"var_{m}_se": est.variance_se,
                     f"bias_{m}": est.bias, f"bias_{m}_se": est.bias_se})
    try:
        mp = metric_pair(table)
        vals.update(pgr=mp.pgr, pgr_se=mp.pgr_se, opr=mp.opr, opr_se=mp.opr_se)
    except ZeroDivisionError:
        vals.update(pgr=None, pgr_se=None, opr=None, opr_se=None)
    for k in ("pgr", "pgr_se", "opr", "opr_se"):
        if vals[k] is not None and not math.isfinite(vals[k]):
            vals[k] = None
    vals.update(_theory_columns(cfg, profile))
    return SweepRow(**vals)


def _format(name: str, value) -> str:
    if value is None:
        return "NA"
    if name in _INT_FIELDS:
        return str(int(value))
    return repr(float(value))


def _parse(name: str, text: str):
    if text == "NA":
        return None
    if name in _INT_FIELDS:
        return int(text)
    return float(text)


def _open_for_write(path: str, mode: str):
    try:
        return open(path, mode, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def emit_csv(rows: Iterable[SweepRow], path) -> None:
    """Write ``rows`` with the fixed :data:`CSV_HEADER`; ``NA`` marks absent values."""
    path = os.fspath(path)
    with _open_for_write(path, "w") as fh:
        w = _writer(fh)
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow([_format(k, getattr(row, k)) for k in CSV_HEADER])


def parse_csv(path) -> List[SweepRow]:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return []
            if tuple(header) != CSV_HEADER:
                raise ValueError(f"{path}: unexpected CSV header")
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != len(CSV_HEADER):
                    raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
                rows.append(SweepRow(**{k: _parse(k, v) for k, v in zip(CSV_HEADER, rec)}))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    return rows


def _compute_star(args):
    cfg, point = args
    return compute_row(cfg, point)


def run_sweep(cfg: SweepConfig, csv_path: Optional[str] = None, resume: bool = True) -> List[SweepRow]:
    """Run every grid point, streaming rows to ``csv_path`` in grid order.

    With ``resume`` an existing CSV is read first and points whose key
    (parameters plus seed, same trial count) is present are not recomputed.
    """
    grid = cfg.grid()
    done: Dict[Tuple, SweepRow] = {}
    if csv_path is not None:
        os.makedirs(os.path.dirname(os.path.abspath(csv_path)), exist_ok=True)
        if resume and os.path.exists(csv_path):
            try:
                existing = parse_csv(csv_path)
            except ValueError:
                existing = []
            done = {r.key: r for r in existing if r.trials == cfg.trials}
    keys = [row_key(ov, s2, n, N, cfg.seed) for ov, s2, n, N in grid]
    prefix = 0
    while prefix < len(keys) and keys[prefix] in done:
        prefix += 1
    existing_in_order = csv_path is not None and len(done) == prefix and prefix > 0 and _file_rows(csv_path) == prefix

    fh = None
    writer = None
    if csv_path is not None:
        fh = _open_for_write(csv_path, "a" if existing_in_order else "w")
        writer = _writer(fh)
        if not existing_in_order:
            writer.writerow(CSV_HEADER)
            fh.flush()

    rows: List[SweepRow] = []
    computed = _iter_rows(cfg, [p for p, k in zip(grid, keys) if k not in done])
    try:
        for i, key in enumerate(keys):
            row = done[key] if key in done else next(computed)
            rows.append(row)
            if writer is not None and not (existing_in_order and i < prefix):
                writer.writerow([_format(k, getattr(row, k)) for k in CSV_HEADER])
                fh.flush()
    finally:
        computed.close()
        if fh is not None:
            fh.close()
    return rows


def _file_rows(path: str) -> int:
    with open(path, encoding="utf-8", newline="") as fh:
        return max(sum(1 for _ in csv.reader(fh)) - 1, 0)


def _iter_rows(cfg: SweepConfig, points: Sequence):
    """Rows for ``points`` in order; grid points run in parallel when ``workers > 1``."""
    if cfg.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            yield from pool.map(_compute_star, [(cfg, p) for p in points])
    else:
        for p in points:
            yield compute_row(cfg, p, workers=cfg.workers)


@dataclass(frozen=True)
class ComparisonEntry:
    key: Tuple
    model: str
    mc: float
    theory: float
    rel_error: float
    passed: bool


@dataclass(frozen=True)
class ComparisonReport:
    entries: Tuple[ComparisonEntry, ...]
    excluded: int
    tolerance: float

    @property
    def fraction_passing(self) -> float:
        if not self.entries:
            return float("nan")
        return sum(e.passed for e in self.entries) / len(self.entries)

    def all_passed(self, min_fraction: float = 1.0) -> bool:
        return bool(self.entries) and self.fraction_passing >= min_fraction

    def to_text(self) -> str:
        lines = ["d_overlap,sigma2,n,N,seed,model,mc_var,theory_var,rel_error,pass"]
        for e in self.entries:
            lines.append(",".join([*(str(k) for k in e.key), e.model, repr(e.mc), repr(e.theory),
                                   repr(e.rel_error), "pass" if e.passed else "FAIL"]))
        lines.append(f"# {sum(e.passed for e in self.entries)}/{len(self.entries)} within "
                     f"{self.tolerance:g} relative error; {self.excluded} excluded")
        return "\n".join(lines) + "\n"


_VAR_COLUMNS = {"w2s": ("var_w2s", "theory_var_w2s"), "weak": ("var_weak", "theory_var_w"),
                "strong_sft": ("var_strong_sft", "theory_var_s"), "ceiling": ("var_ceiling", "theory_var_c")}


def compare_theory(rows: Iterable[SweepRow], tolerance: float = 0.1,
                   models: Sequence[str] = ("w2s",)) -> ComparisonReport:
    """Relative error ``|mc_var - theory_var| / theory_var`` per row and model.

    Rows with ``sigma2 == 0`` or an absent theory value are excluded.
    """
    entries, excluded = [], 0
    for row in rows:
        for m in models:
            mc_col, th_col = _VAR_COLUMNS[m]
            mc, pred = getattr(row, mc_col), getattr(row, th_col)
            if row.sigma2 == 0 or pred is None or pred == 0:
                excluded += 1
                continue
            rel = abs(mc - pred) / abs(pred)
            entries.append(ComparisonEntry(row.key, m, mc, pred, rel, rel <= tolerance))
    return ComparisonReport(tuple(entries), excluded, tolerance)
