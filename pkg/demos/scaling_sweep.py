"""Monte-Carlo risks of the four models next to the closed forms.

Runs a small slice of the desk preset, prints the W2S variance against its
prediction and the measured PGR/OPR against the tight lower bounds, then
writes the three SVG charts to ``runs/demo_scaling``.

    python3 demos/scaling_sweep.py
"""

from w2slab.harness import compare_theory, desk_preset, emit_svg, run_sweep


def main():
    cfg = desk_preset(n_grid=(46, 60, 100, 200), N_grid=(100, 1000), trials=30, out_dir="runs/demo_scaling")
    rows = run_sweep(cfg)

    print(f"{'ov':>3} {'n':>4} {'N':>5} {'var_w2s':>10} {'theory':>10} {'pgr':>7} {'tight':>7} {'opr':>7} {'tight':>7}")
    for r in rows:
        print(f"{r.d_overlap:3d} {r.n:4d} {r.N:5d} {r.var_w2s:10.3e} {r.theory_var_w2s:10.3e} "
              f"{r.pgr:7.3f} {r.pgr_lower_tight:7.3f} {r.opr:7.3f} {r.opr_lower_tight:7.3f}")

    report = compare_theory(rows, tolerance=0.2)
    print(f"\n{report.fraction_passing:.0%} of rows within 20% of the predicted W2S variance "
          f"(only {cfg.trials} trials per point)")
    for path in emit_svg(rows, cfg.out_dir):
        print("wrote", path)


if __name__ == "__main__":
    main()
