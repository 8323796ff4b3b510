import numpy as np
import pytest
from scipy import stats

from netabc.experiments import (
    BASE_PARAMS,
    LoessCurve,
    aggregate_rmse,
    lag_sweep,
    loess_fit,
    mapping_sweep,
    rmse,
)
from netabc.inference import ModelConfig, PriorSpec
from netabc.rngstreams import stream

NORMS = (np.zeros(4), np.ones(4))


class TestRmse:
    def test_zero_at_truth(self):
        truth = np.array([0.3, 0.1, 0.4, 0.2])
        samples = np.tile(truth, (10, 1))
        per, total = rmse(samples, truth, NORMS)
        assert np.all(per == 0.0)
        assert total == 0.0

    def test_constant_offset(self):
        truth = np.array([0.5, 0.5, 0.5, 0.5])
        samples = np.tile(truth, (20, 1))
        samples[:, 2] += 0.125
        per, total = rmse(samples, truth, NORMS)
        assert per[2] == pytest.approx(0.125)
        assert per[[0, 1, 3]] == pytest.approx(0.0)
        assert total == pytest.approx(0.125)

    def test_two_loop_oracle(self):
        rng = stream(0)
        truth = rng.uniform(0.1, 0.9, size=4)
        samples = rng.uniform(0.0, 1.0, size=(37, 4))
        sds = rng.uniform(0.05, 0.3, size=4)
        per, total = rmse(samples, truth, (np.zeros(4), sds))
        for j in range(4):
            acc = sum(
                ((truth[j] - samples[k, j]) / sds[j]) ** 2 for k in range(37)
            )
            assert per[j] == pytest.approx(np.sqrt(acc / 37), rel=1e-12)
        acc = sum(
            sum(((truth[j] - samples[k, j]) / sds[j]) ** 2 for j in range(4))
            for k in range(37)
        )
        assert total == pytest.approx(np.sqrt(acc / 37), rel=1e-12)

    def test_total_decomposition(self):
        rng = stream(1)
        truth = rng.uniform(0.1, 0.9, size=4)
        samples = rng.uniform(0.0, 1.0, size=(25, 4))
        per, total = rmse(samples, truth, NORMS)
        assert total**2 == pytest.approx(np.sum(per**2), abs=1e-10)

    def test_empty_samples(self):
        with pytest.raises(ValueError):
            rmse(np.empty((0, 4)), np.zeros(4), NORMS)


class TestLagSweep:
    def test_desk_scale_bookkeeping(self):
        config = ModelConfig(n=60, mu=0.0, burn_in=30)
        records, agg = lag_sweep(
            [0, 5], truth_count=2, table_count=40, config=config,
            master_seed=3, accept_fraction=0.25, n_jobs=-1,
        )
        # designs: prior, one-wave, two lags; 5 params each; adjusted both ways
        assert set(records["design"]) == {"prior", "one-wave", "two-wave"}
        two = agg[(agg["design"] == "two-wave") & agg["adjusted"]]
        assert sorted(two["lag"].unique()) == [0, 5]
        assert set(agg["param"]) == {"rho", "sigma", "omega0", "omega1", "total"}
        assert (agg["n_truths"] == 2).all()
        assert (agg["rmse_mean"] >= 0).all()

    def test_reproducible(self):
        config = ModelConfig(n=60, mu=0.0, burn_in=30)
        kw = dict(truth_count=2, table_count=30, config=config,
                  master_seed=4, accept_fraction=0.4)
        r1, a1 = lag_sweep([0], **kw)
        r2, a2 = lag_sweep([0], **kw)
        assert r1.equals(r2)
        assert a1.equals(a2)


class TestMappingSweep:
    def test_single_cell(self):
        config = ModelConfig(n=50, mu=0.0, burn_in=20)
        rows, medians = mapping_sweep(
            "sigma", grid=[0.2], runs_per_value=1, config=config, master_seed=5,
        )
        assert len(rows) == 1
        assert len(medians) == 1
        for col in ("s1", "s2", "s3", "s4"):
            assert medians[col].iloc[0] == rows[col].iloc[0]

    def test_median_is_true_median(self):
        config = ModelConfig(n=50, mu=0.0, burn_in=20)
        rows, medians = mapping_sweep(
            "rho", grid=[0.3, 0.6], runs_per_value=7, config=config,
            master_seed=6, n_jobs=-1,
        )
        for value, sub in rows.groupby("value"):
            want = sub[["s1", "s2", "s3", "s4"]].median()
            got = medians[medians["value"] == value].iloc[0]
            got_vals = got[["s1", "s2", "s3", "s4"]].astype(float).values
            assert np.allclose(want.values, got_vals)

    def test_forced_matching_rho_one(self):
        config = ModelConfig(n=50, mu=0.0, burn_in=20)
        rows, medians = mapping_sweep(
            "rho", grid=[1.0], mode="fixed-others", runs_per_value=5,
            config=config, master_seed=7,
        )
        # omega values stay at BASE_PARAMS; singles still vanish since
        # everyone willing is matched each iteration at even n
        assert medians["s1"].iloc[0] < 0.1

    def test_sigma_decreases_s2(self):
        # geometric-duration oracle: mean steady duration is 1/sigma, so
        # median s2 falls as sigma rises
        config = ModelConfig(n=200, mu=0.0, burn_in=50)
        _, medians = mapping_sweep(
            "sigma", grid=np.arange(0.1, 1.01, 0.1), runs_per_value=20,
            config=config, master_seed=8, n_jobs=-1,
        )
        rho_s, pval = stats.spearmanr(medians["value"], medians["s2"])
        assert rho_s < 0
        assert pval < 0.001

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            mapping_sweep("tau", grid=[0.5])
        with pytest.raises(ValueError):
            mapping_sweep("rho", grid=[0.0])
        with pytest.raises(ValueError):
            mapping_sweep("rho", grid=[0.5], runs_per_value=0)


class TestLoess:
    def test_constant(self):
        x = np.arange(10.0)
        y = np.full(10, 3.5)
        curve = loess_fit(x, y, span=0.75)
        assert np.allclose(curve.fitted, 3.5)
        assert np.allclose(curve.half_width, 0.0)

    def test_linear_exact(self):
        x = np.linspace(0, 5, 20)
        y = 2.0 * x - 1.0
        curve = loess_fit(x, y, span=1.0)
        assert np.allclose(curve.fitted, y, atol=1e-8)

    def test_noisy_quadratic_matches_independent_oracle(self):
        rng = stream(9)
        x = np.linspace(-2, 2, 60)
        y = x**2 + rng.normal(0, 0.3, size=60)
        curve = loess_fit(x, y, span=0.75)

        # independently coded local regression: explicit weighted normal
        # equations per point
        q = int(np.ceil(0.75 * 60))
        sd = np.std(y - x**2)
        for i in range(60):
            d = np.abs(x - x[i])
            h = np.sort(d)[q - 1]
            w = np.clip(1 - (d / h) ** 3, 0, None) ** 3
            sw = np.sum(w)
            sx = np.sum(w * x)
            sxx = np.sum(w * x * x)
            sy = np.sum(w * y)
            sxy = np.sum(w * x * y)
            det = sw * sxx - sx * sx
            b0 = (sxx * sy - sx * sxy) / det
            b1 = (sw * sxy - sx * sy) / det
            oracle = b0 + b1 * x[i]
            assert abs(curve.fitted[i] - oracle) < 3 * sd

    def test_interval_contains_fit(self):
        rng = stream(10)
        x = np.linspace(0, 1, 30)
        y = np.sin(3 * x) + rng.normal(0, 0.1, size=30)
        curve = loess_fit(x, y)
        assert np.all(curve.lo95 <= curve.fitted)
        assert np.all(curve.hi95 >= curve.fitted)
        assert np.all(curve.half_width >= 0)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            loess_fit([1, 1, 1], [1, 2, 3])
        with pytest.raises(ValueError):
            loess_fit([1, 2, 3], [1, 2, 3], span=0.0)
