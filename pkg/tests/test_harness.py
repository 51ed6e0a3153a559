import io
import os
from dataclasses import replace

import pytest

from w2slab import theory as th
from w2slab.features import SyntheticConfig, build_synthetic, population_approx_error
from w2slab.harness import cli
from w2slab.harness.config import ConfigError, SweepConfig, apply_overrides, desk_preset, load_config
from w2slab.harness.plots import emit_svg
from w2slab.harness.sweep import CSV_HEADER, compare_theory, compute_row, emit_csv, parse_csv, run_sweep
from w2slab.dims import planted_overlap_features, write_binary_features
from w2slab.linalg import SolverConfig


def _small(**kw):
    base = dict(base=SyntheticConfig(d=200, d_star=30, d_s=6, d_w=12, d_overlap=0, sigma2=1.0),
                n_grid=(16, 30), N_grid=(50, 200), sigma2_grid=(1.0,), overlap_grid=(0, 3, 6), trials=10,
                seed=4)
    base.update(kw)
    return SweepConfig(**base)


@pytest.fixture(scope="module")
def small_rows(tmp_path_factory):
    path = tmp_path_factory.mktemp("sweep") / "sweep.csv"
    return run_sweep(_small(), str(path)), path


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestConfig:
    def test_desk_preset(self):
        cfg = desk_preset()
        assert cfg.base.d == 20000 and (cfg.base.d_s, cfg.base.d_w, cfg.base.d_star) == (20, 40, 60)
        assert cfg.overlap_grid == (2, 10, 18)

    def test_load_overrides_preset(self, tmp_path):
        path = _write(tmp_path / "c.ini", """
[synthetic]
d = 300   # ambient
d_star = 30
d_s = 6
d_w = 12

[sweep]
n_grid = 16, 30
N_grid = 50
overlap_grid = 0, 6
trials = 5

[solver]
ridge_alpha = 0.01

[theory]
c = 2

[output]
out = somewhere
svg = yes
""")
        cfg = load_config(path)
        assert cfg.base.d == 300 and cfg.n_grid == (16, 30) and cfg.overlap_grid == (0, 6)
        assert cfg.solver == SolverConfig(0.01) and cfg.theory_constant_c == 2.0
        assert cfg.emit_svg and cfg.out_dir == "somewhere"

    def test_sigma2_sets_grid(self, tmp_path):
        cfg = load_config(_write(tmp_path / "c.ini", "[synthetic]\nsigma2 = 0.5\n"))
        assert cfg.sigma2_grid == (0.5,)

    @pytest.mark.parametrize("text", [
        "[sweep]\nbogus = 1\n",
        "[mystery]\nx = 1\n",
        "[sweep]\ntrials = 1\n",
        "[sweep]\nn_grid =\n",
        "[sweep]\ntrials = many\n",
        "[output]\nsvg = maybe\n",
        "[sweep]\noverlap_grid = 30\n",
        "no section\n",
    ])
    def test_errors(self, tmp_path, text):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path / "c.ini", text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "none.ini"))

    def test_cli_overrides(self):
        cfg = apply_overrides(desk_preset(), out="x", trials=3, workers=2, seed=5, svg=True, tolerance=0.2)
        assert (cfg.out_dir, cfg.trials, cfg.workers, cfg.seed, cfg.emit_svg, cfg.tolerance) == ("x", 3, 2, 5, True, 0.2)
        with pytest.raises(ConfigError):
            apply_overrides(desk_preset(), trials=0)

    def test_grid_order(self):
        cfg = _small()
        assert cfg.grid()[:3] == [(0, 1.0, 16, 50), (0, 1.0, 16, 200), (0, 1.0, 30, 50)]
        assert len(cfg.grid()) == 12


class TestSweep:
    def test_one_row_per_point(self, small_rows):
        rows, _ = small_rows
        assert [(r.d_overlap, r.sigma2, r.n, r.N) for r in rows] == _small().grid()

    def test_theory_absent_below_threshold(self, small_rows):
        rows, _ = small_rows
        # n = 16 clears d_w + 1 = 13; n = 12 does not but still clears d_s + 1
        r = rows[0]
        assert r.theory_var_w2s is not None
        low = compute_row(_small(n_grid=(12,)), (0, 1.0, 12, 50))
        assert low.theory_var_w2s is None and low.pgr_lower is None and low.theory_var_s is not None
        assert low.var_w2s > 0

    def test_noiseless_realizable_is_zero(self):
        cfg = _small(base=SyntheticConfig(d=60, d_star=12, d_s=12, d_w=12, d_overlap=12, sigma2=0.0),
                     overlap_grid=(12,), sigma2_grid=(0.0,), n_grid=(30,), N_grid=(40,), trials=3)
        row = run_sweep(cfg)[0]
        for m in ("weak", "w2s", "strong_sft", "ceiling"):
            assert getattr(row, f"er_{m}") == pytest.approx(0.0, abs=1e-16)

    def test_theory_columns_use_exact_rho(self, small_rows):
        rows, _ = small_rows
        cfg = _small()
        task, cs, cw = build_synthetic(replace(cfg.base, d_overlap=3), cfg.seed)
        r = next(r for r in rows if r.d_overlap == 3)
        assert r.rho_s == population_approx_error(task, cs)
        assert r.rho_w == population_approx_error(task, cw)

    def test_ridge_solver_has_no_theory(self):
        row = compute_row(_small(solver=SolverConfig(0.1), trials=2), (0, 1.0, 30, 50))
        assert row.theory_var_w2s is None and row.opr_lower_tight is None

    def test_deterministic_and_worker_independent(self, small_rows, tmp_path):
        _, path = small_rows
        other = tmp_path / "again.csv"
        run_sweep(_small(workers=2), str(other))
        assert other.read_bytes() == path.read_bytes()

    def test_resume_skips_done_points(self, small_rows, tmp_path, monkeypatch):
        rows, path = small_rows
        part = tmp_path / "part.csv"
        emit_csv(rows[:5], part)
        import w2slab.harness.sweep as sw

        calls = []
        real = sw.compute_row
        monkeypatch.setattr(sw, "compute_row", lambda cfg, p, workers=1: calls.append(p) or real(cfg, p, workers))
        out = run_sweep(_small(), str(part))
        assert len(calls) == len(rows) - 5
        assert out == rows and part.read_bytes() == path.read_bytes()

    def test_resume_rewrites_foreign_file(self, small_rows, tmp_path):
        rows, path = small_rows
        part = tmp_path / "part.csv"
        emit_csv(rows[3:5], part)
        run_sweep(_small(), str(part))
        assert part.read_bytes() == path.read_bytes()


class TestCsv:
    def test_round_trip(self, small_rows, tmp_path):
        rows, path = small_rows
        assert parse_csv(path) == rows
        again = tmp_path / "again.csv"
        emit_csv(parse_csv(path), again)
        assert again.read_bytes() == path.read_bytes()

    def test_empty_is_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv([], path)
        assert path.read_text(encoding="utf-8") == ",".join(CSV_HEADER) + "\n"
        assert parse_csv(path) == []

    def test_na_for_absent_theory(self, tmp_path):
        row = compute_row(_small(trials=2), (0, 1.0, 12, 50))
        path = tmp_path / "na.csv"
        emit_csv([row], path)
        assert ",NA" in path.read_text(encoding="utf-8")
        assert parse_csv(path) == [row]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(ValueError):
            parse_csv(path)

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError, match="nope"):
            emit_csv([], tmp_path / "nope" / "x.csv")


class TestCompareTheory:
    def test_zero_noise_excluded(self, small_rows):
        rows, _ = small_rows
        quiet = [replace(r, sigma2=0.0) for r in rows[:2]]
        rep = compare_theory(quiet + rows[2:])
        assert rep.excluded == 2 and len(rep.entries) == len(rows) - 2

    def test_wrong_overlap_is_flagged(self):
        # heavily sampled rows agree with theory; a shifted overlap does not
        cfg = _small(overlap_grid=(3,), n_grid=(30,), N_grid=(50,), trials=1500)
        row = run_sweep(cfg)[0]
        good = compare_theory([row], tolerance=0.1)
        assert good.all_passed()
        wrong = th.var_w2s(th.DimProfile(6, 12, 6, 30, 50, 1.0))
        bad = compare_theory([replace(row, theory_var_w2s=wrong)], tolerance=0.1)
        assert not bad.all_passed()
        assert "FAIL" in bad.to_text()

    def test_empty_report_fails_check(self):
        assert not compare_theory([]).all_passed(0.0)


class TestPlots:
    def test_three_overlap_series(self, small_rows, tmp_path):
        rows, _ = small_rows
        paths = emit_svg(rows, tmp_path)
        assert [os.path.basename(p) for p in paths] == ["sweep_er.svg", "sweep_pgr.svg", "sweep_opr.svg"]
        text = open(paths[0], encoding="utf-8").read()
        for ov in (0, 3, 6):
            assert f"d_sw={ov}" in text

    def test_deterministic_svg(self, small_rows, tmp_path):
        rows, _ = small_rows
        a = emit_svg(rows, tmp_path / "a")
        b = emit_svg(rows, tmp_path / "b")
        for pa, pb in zip(a, b):
            assert open(pa, "rb").read() == open(pb, "rb").read()


class TestScaledSweeps:
    def test_variance_dominated_crossover(self):
        # OPR above one at small n, below one once n is large
        cfg = desk_preset(trials=20, n_grid=(60, 5000), N_grid=(1000,), overlap_grid=(2,))
        rows = run_sweep(cfg)
        assert rows[0].opr > 1 and rows[1].opr < 1

    def test_failure_regime_has_nonpositive_pgr(self):
        cfg = desk_preset(trials=20)
        task, cs, cw = build_synthetic(replace(cfg.base, d_overlap=2), cfg.seed)
        s2 = population_approx_error(task, cs) + population_approx_error(task, cw)
        rows = run_sweep(replace(cfg, sigma2_grid=(s2,), n_grid=(46, 400), N_grid=(400,), overlap_grid=(2,)))
        assert min(r.pgr for r in rows) <= 0


class TestCli:
    def _run(self, *argv):
        buf = io.StringIO()
        code = cli.main(list(argv), out=buf)
        return code, buf.getvalue()

    def test_theory(self):
        code, text = self._run("theory", "--d-s", "100", "--d-w", "200", "--overlap", "10", "--n", "302",
                               "--N", "1000", "--sigma2", "0.01", "--rho-w", "1e-4")
        assert code == 0
        vals = dict(line.split(",") for line in text.strip().splitlines()[1:])
        assert float(vals["var_w2s"]) == pytest.approx(2.8713e-3, rel=1e-4)
        assert float(vals["q_opr"]) == pytest.approx(763.48, abs=0.01)

    def test_theory_marks_undefined(self):
        code, text = self._run("theory", "--d-s", "2", "--d-w", "4", "--overlap", "0", "--n", "5", "--N", "10",
                               "--sigma2", "1")
        assert code == 0 and "var_w2s,NA" in text

    def test_ridge_bound(self):
        code, text = self._run("ridge-bound", "--tr-ss", "10", "--tr-sw", "10", "--tr-cross", "1", "--varrho-s", "1",
                               "--varrho-w", "1", "--sigma2", "1", "--n", "100", "--N", "100")
        vals = dict(line.split(",") for line in text.strip().splitlines()[1:])
        assert code == 0 and float(vals["er_opt"]) == pytest.approx(0.1107, abs=1e-4)

    def test_ridge_bound_needs_both_alphas(self):
        code, _ = self._run("ridge-bound", "--tr-ss", "1", "--tr-sw", "1", "--tr-cross", "1", "--varrho-s", "1",
                            "--varrho-w", "1", "--sigma2", "1", "--n", "10", "--N", "10", "--alpha-w", "1")
        assert code == 1

    def test_config_error_exit(self, tmp_path):
        code, _ = self._run("sweep", "--config", _write(tmp_path / "c.ini", "[sweep]\nnope = 1\n"))
        assert code == 1

    def test_bad_flag_exit(self):
        assert self._run("sweep", "--trials", "lots")[0] == 1

    def test_sweep_then_compare(self, tmp_path):
        ini = _write(tmp_path / "c.ini", """
[synthetic]
d = 200
d_star = 30
d_s = 6
d_w = 12
sigma2 = 1

[sweep]
n_grid = 30
N_grid = 50
overlap_grid = 3
trials = 4
""")
        out = str(tmp_path / "run")
        code, text = self._run("sweep", "--config", ini, "--out", out, "--svg")
        assert code == 0 and os.path.exists(os.path.join(out, "sweep.csv"))
        assert os.path.exists(os.path.join(out, "sweep_opr.svg"))
        # four trials are far too few for 10% agreement
        code, text = self._run("compare-theory", "--config", ini, "--out", out, "--check", "--tolerance", "0.01")
        assert code == 2 and "FAIL" in text
        code, _ = self._run("compare-theory", "--config", ini, "--out", out, "--check", "--tolerance", "100")
        assert code == 0
        code, _ = self._run("compare-theory", "--config", ini, "--out", out, "--models", "teacher")
        assert code == 1

    def test_decompose(self, tmp_path):
        ini = _write(tmp_path / "c.ini", "[synthetic]\nd = 200\nd_star = 30\nd_s = 6\nd_w = 12\n"
                                          "[sweep]\nn_grid = 30\nN_grid = 50\noverlap_grid = 3\ntrials = 3\n")
        code, text = self._run("decompose", "--config", ini, "--sigma2", "1")
        assert code == 0
        assert text.splitlines()[0] == "model,excess_risk,se,variance,bias,theory_variance"
        assert "# opr = " in text

    def test_dims_binary_and_text(self, tmp_path):
        ps, pw, _, _ = planted_overlap_features(3, 5, 7, 40, 200, seed=1)
        write_binary_features(tmp_path / "s.bin", ps)
        import numpy as np

        np.savetxt(tmp_path / "w.csv", pw, delimiter=",", fmt="%.17g")
        code, text = self._run("dims", "--strong", str(tmp_path / "s.bin"), "--shape-s", "200,40",
                               "--weak", str(tmp_path / "w.csv"), "--out", str(tmp_path / "o"))
        assert code == 0
        rec = text.splitlines()[1].split(",")
        assert rec[:2] == ["5", "7"] and float(rec[2]) == pytest.approx(3.0, abs=1e-8)
        assert (tmp_path / "o" / "dims.csv").read_text(encoding="utf-8") == text

    def test_dims_missing_file(self, tmp_path):
        code, _ = self._run("dims", "--strong", str(tmp_path / "a.csv"), "--weak", str(tmp_path / "b.csv"))
        assert code == 1
