import math

import numpy as np
import pytest

from forumsim import ModelParams, run_simulation
from forumsim.errors import FitError, ParamError
from forumsim.sweep import SweepPlan, parse_plan, peak_of_curve, replicate_seed, run_replicate, run_sweep

PLAN = """
# sensitivity grid
n_threads = 400
seed = 3
replicates = 2
axis x_N = 0.5, 0.8, 0.91, 1.0
axis p_r = 0.85, 0.89
"""


def test_parse_plan():
    plan = parse_plan(PLAN)
    assert plan.baseline == ModelParams(n_threads=400, seed=3)
    assert plan.axes == [("x_N", [0.5, 0.8, 0.91, 1.0]), ("p_r", [0.85, 0.89])]
    assert plan.replicates == 2 and plan.mode == "grid"
    assert len(plan.cells()) == 8


def test_one_at_a_time_cells():
    plan = parse_plan(PLAN + "mode = oat\n")
    assert plan.cells() == [{}, {"x_N": 0.5}, {"x_N": 0.8}, {"x_N": 1.0}, {"p_r": 0.85}]


def test_mix_axis():
    plan = parse_plan("axis agent_mix = 0.3/0.3/0.4, 0.2/0.2/0.6\n")
    assert plan.axes[0][1] == [(0.3, 0.3, 0.4), (0.2, 0.2, 0.6)]


@pytest.mark.parametrize("text", [
    "axis seed = 1, 2\n", "axis bogus = 1\n", "axis p_c = 1.5\n", "replicates = 0\n",
    "mode = random\n", "axis x_N =\n", "p_r = high\n", "no equals sign\n",
])
def test_bad_plans(text):
    with pytest.raises(ParamError):
        parse_plan(text)


def test_replicate_seeds_shared_and_distinct():
    plan = parse_plan(PLAN)
    seeds = [plan.replicate_seed(r) for r in range(5)]
    assert len(set(seeds)) == 5
    assert seeds == [replicate_seed(3, r) for r in range(5)]
    assert replicate_seed(4, 0) != seeds[0]


def test_monotone_curve_has_no_peak():
    x = np.geomspace(1, 500, 12)
    assert peak_of_curve(x, -0.3 - 0.05 * np.log(x)) is None
    assert peak_of_curve(x, np.linspace(-0.5, -0.2, 12)) is None


def test_planted_peak():
    x = np.array([1, 2, 3, 5, 7, 11, 17, 25, 38, 57, 86, 129, 194], dtype=float)
    y = -0.34 - 0.03 * np.log(x)
    y[x == 7] += 0.08
    peak = peak_of_curve(x, y)
    assert peak.L == 7 and peak.e == pytest.approx(y[4])


def test_sparse_bins_are_ignored():
    x = np.array([1, 2, 4, 8, 16, 32, 64], dtype=float)
    y = np.array([-0.3, -0.32, -0.35, -0.37, -0.39, -0.2, -0.45])
    assert peak_of_curve(x, y).L == 32
    n = np.array([100, 80, 60, 40, 30, 3, 20])
    assert peak_of_curve(x, y, n) is None


def test_peak_needs_three_bins():
    with pytest.raises(FitError):
        peak_of_curve([1, 2], [0.1, 0.2])


def test_run_sweep_baseline_matches_simulation():
    plan = SweepPlan(ModelParams(n_threads=300, seed=2), [("x_N", [0.5, 0.91])], replicates=2)
    report = run_sweep(plan)
    assert len(report.cells) == 2
    base = report.cell(x_N=0.91)
    seeds = [plan.replicate_seed(r) for r in range(2)]
    direct = [run_simulation(plan.baseline.replace(seed=s)).total_posts for s in seeds]
    assert [r.values["total_posts"] for r in base.replicates] == direct
    assert base.mean["total_posts"] == pytest.approx(np.mean(direct))
    for cell in report.cells:
        total = cell.mean["ratio_pos"] + cell.mean["ratio_neu"] + cell.mean["ratio_neg"]
        assert total == pytest.approx(1.0)
        assert [r.seed for r in cell.replicates] == seeds


def test_run_sweep_workers_agree():
    plan = SweepPlan(ModelParams(n_threads=200, seed=1), [("p_r", [0.5, 0.89])], replicates=2)
    a, b = run_sweep(plan), run_sweep(plan, workers=2)
    for ca, cb in zip(a.cells, b.cells):
        assert ca.mean == cb.mean


def test_empty_replicate():
    res = run_replicate(ModelParams(n_threads=50, p_c=0.0))
    assert res.values["total_posts"] == 0 and math.isnan(res.values["ratio_pos"])


def test_negative_ratio_grows_with_x_N():
    means = []
    for x_N in (0.5, 0.8, 0.91, 1.0):
        plan = SweepPlan(ModelParams(n_threads=1000, seed=5, x_N=x_N), replicates=2)
        means.append(run_sweep(plan).cells[0].mean["ratio_neg"])
    assert means == sorted(means)
