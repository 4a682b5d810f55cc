import json
import math

import numpy as np
import pytest

from graft import datasets
from graft.errors import DegenerateBaseline
from graft.harness import RunTrace, TrainConfig, train
from graft.metrics import (
    EfficiencyCurve,
    emissions,
    emissions_integrated,
    export_trace,
    fidelity_and_utilization,
    fit_gain_curve,
    load_trace,
    proxy_emissions,
    utilization_gain_reference,
)


def synth_points(E0, H, lam, xs):
    x_max = max(xs)
    return [(x, E0 + (H - E0) * (1.0 - math.exp(-lam * x / x_max))) for x in xs]


class TestGainCurveFit:
    def test_exact_recovery(self):
        pts = synth_points(0.2, 0.9, 3.0, np.linspace(0.0, 10.0, 25))
        c = fit_gain_curve(pts)
        assert c.E0 == pytest.approx(0.2, rel=1e-4)
        assert c.H == pytest.approx(0.9, rel=1e-4)
        assert c.lam == pytest.approx(3.0, rel=1e-4)
        assert c.r_squared >= 0.999999

    def test_noisy_recovery(self):
        rng = np.random.default_rng(0)
        pts = [(x, y + rng.normal(scale=0.005))
               for x, y in synth_points(0.3, 0.8, 2.0, np.linspace(0.0, 5.0, 40))]
        c = fit_gain_curve(pts)
        assert c.E0 == pytest.approx(0.3, abs=0.02)
        assert c.H == pytest.approx(0.8, abs=0.02)
        assert c.r_squared > 0.99

    def test_point_order_invariant(self):
        pts = synth_points(0.1, 0.7, 1.5, np.linspace(0.0, 4.0, 12))
        a = fit_gain_curve(pts)
        b = fit_gain_curve(list(reversed(pts)))
        assert a == b  # bit-identical dataclasses

    def test_flat_data_degenerates(self):
        c = fit_gain_curve([(0.0, 0.5), (1.0, 0.5), (2.0, 0.5), (3.0, 0.5)])
        assert c.E0 == c.H == 0.5
        assert c.r_squared == 0.0

    def test_validation(self):
        with pytest.raises(ValueError, match="4 points"):
            fit_gain_curve([(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)])
        with pytest.raises(ValueError, match="non-negative"):
            fit_gain_curve([(-1.0, 0.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0)])
        with pytest.raises(ValueError, match="equal"):
            fit_gain_curve([(1.0, 0.0), (1.0, 1.0), (1.0, 2.0), (1.0, 3.0)])

    def test_r_squared_consistent_with_residuals(self):
        rng = np.random.default_rng(5)
        pts = [(x, y + rng.normal(scale=0.01))
               for x, y in synth_points(0.2, 0.9, 3.0, np.linspace(0.0, 8.0, 20))]
        c = fit_gain_curve(pts)
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        ss_res = float(np.sum((ys - c(xs)) ** 2))
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        assert c.r_squared == pytest.approx(1.0 - ss_res / ss_tot, abs=1e-9)

    def test_subset_selection_fits_steeper_than_random(self):
        # Qualitative shape check on a gradual-learning task: accuracy per
        # unit of emissions budget rises faster under volume-based
        # selection than under random subsets of the same size.
        def lam_of(sampler, tmp):
            cfg = TrainConfig(total_iterations=800, selection_period=200,
                              batch_size=50, rank_set=(10,), epsilon=math.inf,
                              learning_rate=0.02, seed=5, sampler=sampler,
                              random_fraction=0.2, model="mlp", hidden=10)
            data = datasets.low_rank_classes(n=750, d=15, n_classes=3, rank=4,
                                             noise=0.3, seed=5)
            paths = export_trace(train(cfg, data), tmp)
            pts = [tuple(map(float, line.split(",")))
                   for line in open(paths["efficiency.csv"]).read().splitlines()[1:]]
            return fit_gain_curve(pts).lam

        import tempfile
        with tempfile.TemporaryDirectory() as tmp:
            assert lam_of("graft", tmp + "/g") > lam_of("random", tmp + "/r")

    def test_utilization_gain_reference(self):
        assert utilization_gain_reference(0.25) == pytest.approx(0.75)
        assert utilization_gain_reference(1.0) == 0.0
        with pytest.raises(ValueError):
            utilization_gain_reference(0.0)

    def test_curve_is_callable(self):
        c = EfficiencyCurve(E0=0.0, H=1.0, lam=1.0, x_max=1.0, r_squared=1.0)
        assert c(0.0) == pytest.approx(0.0)
        assert c(1.0) == pytest.approx(1.0 - math.exp(-1.0))


class TestEmissions:
    def test_closed_form(self):
        e = emissions(0.3, 2.0, 0.366)
        assert e.kg_co2 == 0.2196

    def test_integrated_matches_constant_power(self):
        # 300 W for 7200 s == 0.3 kW for 2 h
        a = emissions(0.3, 2.0, 0.366)
        b = emissions_integrated([(300.0, 3600.0), (300.0, 3600.0)], 0.366)
        assert abs(a.kg_co2 - b.kg_co2) <= 1e-10
        assert b.power_kw == pytest.approx(0.3)
        assert b.duration_h == pytest.approx(2.0)

    def test_integrated_varying_power(self):
        e = emissions_integrated([(100.0, 1800.0), (500.0, 1800.0)], 1.0)
        # mean power 0.3 kW over one hour
        assert e.kg_co2 == pytest.approx(0.3, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            emissions(-1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            emissions_integrated([(100.0, -5.0)], 0.5)

    def test_proxy_formula(self):
        e = proxy_emissions(3_600_000, joules_per_eval=1.0, intensity=0.5)
        # 3.6e6 J == 1 kWh
        assert e.kg_co2 == pytest.approx(0.5)
        assert e.proxy_gradient_evals == 3_600_000


class TestFidelity:
    def run(self, sampler, **kw):
        cfg = TrainConfig(total_iterations=12, selection_period=6, batch_size=20,
                          rank_set=(4,), epsilon=math.inf, sampler=sampler, **kw)
        return train(cfg, datasets.two_gaussians(n=160, d=10, seed=0))

    def test_ratio(self):
        full = self.run("full")
        sub = self.run("graft")
        phi, psi = fidelity_and_utilization(sub, full)
        assert phi == pytest.approx(sub.final_test_accuracy / full.final_test_accuracy)
        assert psi == phi

    def test_degenerate_baseline(self):
        full = self.run("full")
        bad = self.run("full")
        bad.final_test_accuracy = 0.0
        with pytest.raises(DegenerateBaseline):
            fidelity_and_utilization(full, bad)


class TestExport:
    def make_trace(self):
        cfg = TrainConfig(total_iterations=12, selection_period=6, batch_size=20,
                          rank_set=(4,), epsilon=math.inf)
        return train(cfg, datasets.two_gaussians(n=160, d=10, seed=0))

    def test_files_and_round_trip(self, tmp_path):
        trace = self.make_trace()
        paths = export_trace(trace, tmp_path / "out")
        assert set(paths) == {"trace.json", "alignment.csv", "class_hist.csv", "efficiency.csv"}
        back = load_trace(paths["trace.json"])
        assert back.to_dict() == trace.to_dict()

    def test_alignment_csv_schema(self, tmp_path):
        trace = self.make_trace()
        paths = export_trace(trace, tmp_path / "out")
        lines = open(paths["alignment.csv"]).read().splitlines()
        assert lines[0] == "iteration,batch,cosine"
        assert len(lines) == 1 + len(trace.refreshes)
        for line in lines[1:]:
            t, b, cos = line.split(",")
            assert -1.0 <= float(cos) <= 1.0

    def test_class_hist_csv(self, tmp_path):
        trace = self.make_trace()
        paths = export_trace(trace, tmp_path / "out")
        lines = open(paths["class_hist.csv"]).read().splitlines()
        assert lines[0] == "epoch,class,count"
        assert len(lines) == 1 + 2 * len(trace.epochs)

    def test_efficiency_csv_monotone_x(self, tmp_path):
        trace = self.make_trace()
        paths = export_trace(trace, tmp_path / "out")
        lines = open(paths["efficiency.csv"]).read().splitlines()
        assert lines[0] == "x,value"
        xs = [float(l.split(",")[0]) for l in lines[1:]]
        assert xs == sorted(xs)
        assert all(x > 0 for x in xs)

    def test_baseline_normalization(self, tmp_path):
        trace = self.make_trace()
        p1 = export_trace(trace, tmp_path / "a")
        p2 = export_trace(trace, tmp_path / "b", baseline_accuracy=2.0)
        v1 = [float(l.split(",")[1]) for l in open(p1["efficiency.csv"]).read().splitlines()[1:]]
        v2 = [float(l.split(",")[1]) for l in open(p2["efficiency.csv"]).read().splitlines()[1:]]
        np.testing.assert_allclose(v2, np.asarray(v1) / 2.0)

    def test_export_bytes_deterministic(self, tmp_path):
        trace = self.make_trace()
        a = export_trace(trace, tmp_path / "a")
        b = export_trace(trace, tmp_path / "b")
        for k in a:
            assert open(a[k], "rb").read() == open(b[k], "rb").read()

    def test_empty_trace_headers_only(self, tmp_path):
        paths = export_trace(RunTrace(config={}), tmp_path / "out")
        assert open(paths["alignment.csv"]).read().splitlines() == ["iteration,batch,cosine"]
        assert open(paths["class_hist.csv"]).read().splitlines() == ["epoch,class,count"]
        assert open(paths["efficiency.csv"]).read().splitlines() == ["x,value"]
        assert load_trace(paths["trace.json"]).to_dict() == RunTrace(config={}).to_dict()

    def test_alignment_rows_are_refreshes_times_batches(self, tmp_path):
        # 120 train rows / 20 per batch = 6 batches; refreshes at
        # t in {1, 6, 12}.
        cfg = TrainConfig(total_iterations=12, selection_period=6, batch_size=20,
                          rank_set=(4,), epsilon=math.inf)
        trace = train(cfg, datasets.two_gaussians(n=160, d=10, seed=0))
        paths = export_trace(trace, tmp_path / "out")
        rows = open(paths["alignment.csv"]).read().splitlines()[1:]
        assert len(rows) == 3 * 6

    def test_trace_json_sorted_keys(self, tmp_path):
        trace = self.make_trace()
        paths = export_trace(trace, tmp_path / "out")
        d = json.load(open(paths["trace.json"]))
        assert list(d) == sorted(d)
        assert "wall_time_seconds" not in d
