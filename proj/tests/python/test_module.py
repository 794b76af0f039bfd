import json
import math

import numpy as np
import pytest

import vista_cluster as vc


def scalar_params(mu=0.0, a=0.0, c=1.0, p=1.0, sigma=1.0, gamma=1.0):
    m = lambda v: np.array([[v]])
    return vc.ClusterParameters(np.array([mu]), m(a), m(c), m(p), m(sigma), m(gamma))


def test_emotion_order():
    assert list(vc.EMOTIONS) == ["anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"]
    assert isinstance(vc.__version__, str)


def test_scalar_filter_example():
    s = vc.TimeSeries("p", [0.0], np.array([[2.0]]))
    f = vc.kalman_filter(s, scalar_params())
    assert f.filtered_means[0][0] == pytest.approx(1.0)
    assert f.log_likelihood == pytest.approx(-0.5 * math.log(2 * math.pi * 2.0) - 1.0)
    sm = vc.rts_smoother(s, scalar_params(), f)
    assert len(sm.lag_one_crosscovs) == 0


def test_dimension_error_is_raised():
    s = vc.TimeSeries("p", [0.0, 1.0], np.zeros((2, 2)))
    with pytest.raises(vc.DimensionError):
        vc.kalman_filter(s, scalar_params())
    assert issubclass(vc.DimensionError, vc.VistaError)


def test_fit_recovers_well_separated_clusters():
    series, labels, truth = vc.simulate_cohort("well-separated", 60, 3)
    assert len(series) == 60 and len(truth) == 2
    cfg = vc.FitConfig()
    cfg.seed = 3
    model = vc.fit(series, cfg)
    assert vc.adjusted_rand_index(model.labels, labels) >= 0.9
    trace = model.loglik_trace
    assert all(b >= a - 1e-6 * abs(a) for a, b in zip(trace, trace[1:]))

    again = vc.FittedMixture.from_json(model.to_json())
    assigned, resp, total = vc.assign(series, again)
    assert list(assigned) == list(model.labels)
    assert np.allclose(resp.sum(axis=1), 1.0)
    assert math.isfinite(total)


def test_network_helpers():
    assert np.allclose(vc.pseudoinverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    ei = vc.out_expected_influence(np.array([[0.5, 0.2], [-0.1, 0.3]]))
    assert ei == pytest.approx([-0.1, 0.2])
    assert np.all(vc.out_expected_influence(np.eye(7)) == 0.0)
    ranks = vc.centrality_ranks([np.array([0.3, 0.1, 0.5])])
    assert list(ranks[0]) == [2, 3, 1]


def test_statistics():
    r = vc.mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert r["u_x"] == 0.0 and r["u_y"] == 9.0
    assert vc.mann_whitney_exact([1, 2, 3], [4, 5, 6]) == pytest.approx(0.1)
    assert vc.bonferroni([0.00045] + [0.5] * 15)[0] == pytest.approx(0.0072)

    x = np.column_stack([np.ones(100), (np.arange(100) < 50).astype(float)])
    y = [1.0 if (i < 40 or 50 <= i < 70) else 0.0 for i in range(100)]
    res = vc.logistic_fit(x, y, ["(Intercept)", "x"])
    assert res["odds_ratios"][1] == pytest.approx(6.0, rel=1e-8)
    assert not res["separated"]


def test_run_command_simulate_and_fit(tmp_path):
    cfg = {"seed": 5, "output_dir": str(tmp_path), "simulate": {"preset": "well-separated", "n": 20}}
    log = vc.run_command("simulate", json.dumps(cfg))
    assert "simulated n=20" in log
    fit_cfg = {"seed": 5, "output_dir": str(tmp_path), "series": str(tmp_path / "series.jsonl"),
               "truth_labels": str(tmp_path / "labels_true.csv"), "fit": {"max_iters": 30}}
    log = vc.run_command("fit", json.dumps(fit_cfg))
    assert "ARI" in log
    model = json.loads((tmp_path / "model.json").read_text())
    assert model["M"] == 2 and model["d_x"] == 7
    with pytest.raises(vc.VistaError):
        vc.run_command("simulate", json.dumps({"seed": 1, "bogus": 1}))
