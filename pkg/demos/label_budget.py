"""How many labels should the weak teacher get?

The PGR lower bound only falls as labels are added, while the OPR lower
bound rises and then falls: past ``q*`` the strong model trained directly on
the labels catches up. Prints both curves around ``q*`` and compares with
the closed-form optimum.

    python3 demos/label_budget.py
"""

from w2slab import theory as th


def main():
    p = th.DimProfile(d_s=100, d_w=200, d_overlap=10, n=302, N=1000, sigma2=0.01, rho_w=1e-4)
    opt = th.optimal_q(p)
    print(f"d_w2s = {th.d_w2s(p):g}, varrho = {th.varrho(p):g}")
    print(f"q* = {opt.q_opr:.2f}, OPR bound at q* = {opt.opr_at_opt:.4f}\n")
    print(f"{'q':>6} {'n':>6} {'pgr_lower':>10} {'opr_lower':>10}")
    for q in (1, 10, 50, 200, 500, 700, 763, 764, 800, 1000, 1500, 2290):
        pq = p.with_q(q)
        print(f"{q:6d} {pq.n:6d} {th.pgr_lower(pq):10.4f} {th.opr_lower(pq):10.4f}")


if __name__ == "__main__":
    main()
