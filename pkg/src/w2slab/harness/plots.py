"""Static SVG line charts of sweep rows.

One file per metric (excess risk of the W2S model, PGR, OPR), each with a
panel against ``n`` (at the largest ``N``) and a panel against ``N`` (at the
smallest ``n`` with defined theory). Each overlap value is one color; Monte
Carlo is solid with error bars, theory dashed.
"""

from __future__ import annotations

import os
from typing import Dict, List, Optional, Sequence

from .sweep import SweepRow

__all__ = ["emit_svg", "METRICS"]

# metric -> (MC column, SE column, theory column, axis label)
METRICS: Dict[str, tuple] = {
    "er": ("er_w2s", "er_w2s_se", None, "ER(f_w2s)"),
    "pgr": ("pgr", "pgr_se", "pgr_lower_tight", "PGR"),
    "opr": ("opr", "opr_se", "opr_lower_tight", "OPR"),
}


def _theory_er(row: SweepRow) -> Optional[float]:
    if row.theory_var_w2s is None:
        return None
    return row.theory_var_w2s + row.rho_s


def _series(rows: Sequence[SweepRow], axis: str, fixed: Dict[str, int], overlap: int, sigma2: float):
    sel = [r for r in rows if r.d_overlap == overlap and r.sigma2 == sigma2
           and all(getattr(r, k) == v for k, v in fixed.items())]
    return sorted(sel, key=lambda r: getattr(r, axis))


def emit_svg(rows: Sequence[SweepRow], out_dir, prefix: str = "sweep") -> List[str]:
    """Write ``{prefix}_{er,pgr,opr}.svg`` into ``out_dir``; returns the paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if not rows:
        return paths
    overlaps = sorted({r.d_overlap for r in rows})
    sigma2 = sorted({r.sigma2 for r in rows})[0]
    n_max_N = max(r.N for r in rows)
    n_min = min(r.n for r in rows if r.theory_var_w2s is not None) if any(
        r.theory_var_w2s is not None for r in rows) else min(r.n for r in rows)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]

    with plt.rc_context({"svg.hashsalt": "w2slab", "svg.fonttype": "none"}):
        for name, (mc_col, se_col, th_col, label) in METRICS.items():
            fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
            for ax, axis, fixed in ((axes[0], "n", {"N": n_max_N}), (axes[1], "N", {"n": n_min})):
                for i, ov in enumerate(overlaps):
                    ser = _series(rows, axis, fixed, ov, sigma2)
                    pts = [(getattr(r, axis), getattr(r, mc_col), getattr(r, se_col)) for r in ser
                           if getattr(r, mc_col) is not None]
                    color = colors[i % len(colors)]
                    if pts:
                        xs, ys, es = zip(*pts)
                        ax.errorbar(xs, ys, yerr=[e or 0.0 for e in es], color=color, linestyle="-",
                                    marker="o", markersize=3, capsize=2, label=f"d_sw={ov}")
                    th_pts = [(getattr(r, axis), _theory_er(r) if th_col is None else getattr(r, th_col))
                              for r in ser]
                    th_pts = [(x, y) for x, y in th_pts if y is not None]
                    if th_pts:
                        xs, ys = zip(*th_pts)
                        ax.plot(xs, ys, color=color, linestyle="--")
                ax.set_xlabel(axis)
                ax.set_ylabel(label)
                ax.set_xscale("log")
                if name == "er":
                    ax.set_yscale("log")
                fixed_txt = ", ".join(f"{k}={v}" for k, v in fixed.items())
                ax.set_title(f"{label} vs {axis} ({fixed_txt}, sigma2={sigma2:g})", fontsize=9)
                ax.legend(fontsize=7)
            fig.tight_layout()
            path = os.path.join(out_dir, f"{prefix}_{name}.svg")
            try:
                fig.savefig(path, format="svg", metadata={"Date": None})
            except OSError as exc:
                raise OSError(f"cannot write {path}: {exc}") from exc
            finally:
                plt.close(fig)
            paths.append(path)
    return paths
