"""Smoke tests for the python bindings: thin checks that the main operations
are reachable and agree with their documented identities."""

import math

import pytest

import _ctxmat as cm


def test_matrix_error_identity():
    eye = [[1.0, 0.0], [0.0, 1.0]]
    zero = [[0.0, 0.0], [0.0, 0.0]]
    assert cm.matrix_error(eye, eye) == 0.0
    assert cm.matrix_error(eye, zero) == pytest.approx(0.5)


def test_quartile_bounds_partition():
    bounds = cm.quartile_bounds(500)
    assert bounds[0] == (0, 125)
    assert bounds[3] == (375, 500)


def test_simulate_and_filter_roundtrip():
    truth = [[1.0, 0.0], [0.0, 1.0]]
    series = cm.simulate(truth, noise=0.05, length=200, seed=3)
    assert len(series) == 200
    assert series.agents() == 2

    cfg = cm.FilterConfig()
    cfg.particles = 1000
    cfg.jitter_std = 0.01
    cfg.seed = 5
    run = cm.run_filter(series, cfg)
    assert len(run.map_series) == 199
    q4 = cm.aggregate_matrices(run.map_series, "q4")
    assert cm.matrix_error(q4, truth) < 0.35


def test_grid_search_and_selection():
    series = cm.simulate([[0.0, 1.0], [1.0, 0.0]], noise=0.1, length=80, seed=9)
    cfg = cm.FilterConfig()
    cfg.particles = 200
    runs = cm.grid_search(series, cfg, [0.01, 0.05])
    assert len(runs) == 2
    outcome = cm.select(runs, series, "lowest_sigma")
    assert outcome.chosen_std == pytest.approx(0.01)


def test_crqa_self_recurrence():
    x = [math.sin(0.3 * t) + 0.01 * t for t in range(50)]
    m = cm.crqa(x, x)
    assert 0.0 < m.rr <= 1.0
    assert m.maxl == 50 - 2 * 2  # embedded length with m=3, tau=2


def test_granger_directionality():
    import random

    rng = random.Random(7)
    x = [rng.gauss(0, 1) for _ in range(500)]
    y = [0.0] * 500
    for t in range(1, 500):
        y[t] = 0.8 * x[t - 1] + 0.1 * rng.gauss(0, 1)
    r = cm.granger(x, y)
    assert r.gc_1to2 > r.gc_2to1


def test_features():
    assert cm.relative_influence([[0.0, 1.0], [1.0, 0.0]]) == 1.0
    assert cm.leader_strength([[0.0, 0.3], [0.1, 0.0]]) == pytest.approx(0.5)
    with pytest.raises(RuntimeError):
        cm.relative_influence([[0.0, 0.0], [0.0, 0.0]])


def test_metric_registries():
    assert "hjorth_mobility" in cm.standalone_metric_names()
    assert "crqa_maxl" in cm.paired_metric_names()
    x = [float(t) + (t % 3) for t in range(30)]
    assert cm.standalone_metric(x, "trend_strength") > 0.0
    assert cm.paired_metric(x, x, "mse") == 0.0
