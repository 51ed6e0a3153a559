import numpy as np
import pytest

from w2slab import theory as th
from w2slab.features import CovarianceSpec, SyntheticConfig, TaskSpec, build_synthetic
from w2slab.risk import (LinearityError, RiskEstimate, RiskSetup, decompose_trial, estimate_risk, metric_pair,
                         opr, pgr, run_trials, trial_decomposition)


def _setup(sigma2=1.0, overlap=5, n=26, N=200, d_star=None):
    d_star = d_star if d_star is not None else 10 + 20 - overlap
    cfg = SyntheticConfig(d=80, d_star=d_star, d_s=10, d_w=20, d_overlap=overlap, sigma2=sigma2)
    task, cs, cw = build_synthetic(cfg, 0)
    return RiskSetup(task, cs, cw, n, N)


class TestDecomposeTrial:
    def test_linear_map(self):
        a = np.arange(12.0).reshape(4, 3)
        var, bias = decompose_trial(lambda y: a @ y, np.array([1.0, 2, 3]), np.array([1.0, 1, 1]), np.zeros(4))
        f_clean = a @ np.ones(3)
        f_noise = a @ np.array([0.0, 1, 2])
        assert var == pytest.approx(np.mean(f_noise ** 2))
        assert bias == pytest.approx(np.mean(f_clean ** 2))

    def test_nonlinear_rejected(self):
        with pytest.raises(LinearityError):
            decompose_trial(lambda y: y ** 2, np.array([1.0, 2.0]), np.array([0.5, 0.5]), np.zeros(2))


class TestEstimates:
    def test_from_samples(self):
        est = RiskEstimate.from_samples([1.0, 3.0], [0.0, 2.0])
        assert est.excess_risk == 3.0 and est.variance == 2.0 and est.bias == 1.0
        assert est.variance_se == pytest.approx(1.0)

    def test_needs_two_trials(self):
        with pytest.raises(ValueError):
            RiskEstimate.from_samples([1.0], [1.0])

    def test_noiseless_has_zero_variance(self):
        est = estimate_risk(_setup(sigma2=0.0), "w2s", trials=5)
        assert est.variance == pytest.approx(0.0, abs=1e-20)

    def test_realizable_has_zero_bias(self):
        # signal lies inside both spans, so every model is unbiased
        eye = np.eye(30)
        theta = np.zeros(30)
        theta[:10] = 1 / np.sqrt(10)
        task = TaskSpec(1.0 / np.arange(1, 11), eye[:, :10], theta, 1.0)
        cs = CovarianceSpec(np.ones(12), eye[:, :12])
        cw = CovarianceSpec(np.ones(20), eye[:, :20])
        rows = trial_decomposition(RiskSetup(task, cs, cw, 26, 100), seed=0)
        for m, (var, bias) in rows.items():
            assert bias == pytest.approx(0.0, abs=1e-18), m

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            estimate_risk(_setup(), "teacher")

    def test_workers_do_not_change_results(self):
        s = _setup()
        a = run_trials(s, 6, seed=3, workers=1)
        b = run_trials(s, 6, seed=3, workers=2)
        for m in a.variance:
            np.testing.assert_array_equal(a.variance[m], b.variance[m])

    def test_trial_prefix_stable(self):
        s = _setup()
        a = run_trials(s, 4, seed=9)
        b = run_trials(s, 8, seed=9)
        np.testing.assert_array_equal(a.variance["weak"], b.variance["weak"][:4])

    def test_variance_matches_closed_form(self):
        s = _setup(overlap=5, N=200)
        table = run_trials(s, 600, seed=1)
        p = th.DimProfile(10, 20, 5, 26, 200, 1.0)
        assert table.estimate("w2s").variance == pytest.approx(th.var_w2s(p), rel=0.12)
        assert table.estimate("strong_sft").variance == pytest.approx(th.var_strong_sft(p), rel=0.08)


class TestMetrics:
    def test_pgr_opr(self):
        assert pgr(1.0, 0.4, 0.0) == pytest.approx(0.6)
        assert opr(0.5, 0.25) == pytest.approx(2.0)

    def test_undefined(self):
        with pytest.raises(ZeroDivisionError):
            pgr(1.0, 0.5, 1.0)
        with pytest.raises(ZeroDivisionError):
            opr(1.0, 0.0)

    def test_metric_pair_consistent_with_means(self):
        table = run_trials(_setup(), 50, seed=0)
        mp = metric_pair(table)
        e = table.estimates()
        assert mp.pgr == pytest.approx(pgr(e["weak"].excess_risk, e["w2s"].excess_risk, e["ceiling"].excess_risk))
        assert mp.opr == pytest.approx(opr(e["strong_sft"].excess_risk, e["w2s"].excess_risk))
        assert mp.pgr_se > 0 and mp.opr_se > 0

    def test_delta_method_se_calibrated(self):
        # spread of OPR over independent batches vs the reported SE
        s = _setup()
        vals, ses = [], []
        for b in range(12):
            mp = metric_pair(run_trials(s, 60, seed=(100, b)))
            vals.append(mp.opr)
            ses.append(mp.opr_se)
        ratio = np.std(vals, ddof=1) / np.mean(ses)
        assert 0.5 < ratio < 2.0
