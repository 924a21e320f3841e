import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhtdrift.evaluation import (MatchReport, aggregate_reports, delay_summary, detection_histogram,
                                 f_measure, g_mean, kappa_plus, match_detections,
                                 precision_recall_curve, prequential_series, write_delay_table,
                                 write_metrics_csv)
from oracles import brute_force_matching

times = st.lists(st.integers(0, 60), max_size=5)


def test_exact_hits():
    r = match_detections([100, 200], [100, 200], 0)
    assert (r.tp, r.fp, r.fn, r.delays) == (2, 0, 0, [0, 0])
    assert r.precision == r.recall == 1.0


def test_extra_detection_in_range_is_false_positive():
    r = match_detections([105, 110], [100], 50)
    assert (r.tp, r.fp, r.fn) == (1, 1, 0)
    assert r.delays == [5]


def test_empty_detections():
    r = match_detections([], [10, 20], 5)
    assert (r.tp, r.fp, r.fn) == (0, 0, 2)
    assert r.precision == 0.0 and r.recall == 0.0


def test_negative_range():
    with pytest.raises(ValueError):
        match_detections([1], [1], -1)


@settings(max_examples=500, deadline=None)
@given(det=times, truth=times, rng=st.integers(0, 30))
def test_greedy_equals_brute_force(det, truth, rng):
    det, truth = sorted(det), sorted(truth)
    r = match_detections(det, truth, rng)
    assert r.tp == brute_force_matching(det, truth, rng)
    assert r.tp + r.fn == len(truth) and r.tp + r.fp == len(det)
    assert all(0 <= d <= rng for d in r.delays)


@settings(max_examples=100, deadline=None)
@given(det=times, truth=times)
def test_recall_monotone_along_grid(det, truth):
    curve = precision_recall_curve(sorted(det), sorted(truth), range(0, 40, 5))
    recalls = [rep.recall for _, rep in curve]
    assert all(b >= a for a, b in zip(recalls, recalls[1:]))
    assert all(0 <= rep.precision <= 1 for _, rep in curve)


def test_recall_steps_at_delay():
    curve = precision_recall_curve([110], [100], [0, 5, 9, 10, 20])
    assert [rep.recall for _, rep in curve] == [0, 0, 0, 1, 1]
    with pytest.raises(ValueError):
        precision_recall_curve([1], [1], [5, 0])


def test_aggregate_pools_counts():
    agg = aggregate_reports([MatchReport(1, 2, 0, [3]), MatchReport(0, 1, 1, [])])
    assert (agg.tp, agg.fp, agg.fn, agg.delays) == (1, 3, 1, [3])


def test_metric_identities():
    assert kappa_plus(0.9, 0.8) == pytest.approx(0.5)
    assert math.isnan(kappa_plus(0.9, 1.0))
    assert f_measure(1.0, 1.0) == 1.0
    assert g_mean(1.0, 1.0) == 1.0
    assert math.isnan(f_measure(0.0, 0.0))


def test_perfect_alternating_series():
    y = np.array([0, 1] * 50)
    s = prequential_series(y, y)
    assert s.oac[-1] == 1.0 and s.f_measure[-1] == 1.0 and s.g_mean[-1] == 1.0
    # the No-Change classifier is always wrong on alternating labels
    assert s.kappa_plus[-1] == pytest.approx(1.0)


def test_kappa_nan_on_constant_labels():
    y = np.ones(20, dtype=int)
    s = prequential_series(y, y)
    assert np.all(np.isnan(s.kappa_plus))


def test_windowed_and_reset():
    y = np.array([1, 1, 0, 0, 1, 0, 1, 1])
    yhat = np.array([1, 0, 0, 1, 1, 0, 0, 1])
    s = prequential_series(y, yhat, window=3)
    ok = (y == yhat).astype(float)
    want = [ok[max(0, i - 2):i + 1].mean() for i in range(8)]
    assert np.allclose(s.oac, want)
    r = prequential_series(y, yhat, reset_at=[5])
    assert r.oac[4] == pytest.approx(ok[4:5].mean())
    assert r.oac[7] == pytest.approx(ok[4:].mean())


@settings(max_examples=50, deadline=None)
@given(data=st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=80),
       window=st.one_of(st.none(), st.integers(1, 20)))
def test_series_ranges(data, window):
    y, yhat = map(np.array, zip(*data))
    s = prequential_series(y, yhat, window=window)
    for col in (s.oac, s.f_measure, s.g_mean):
        v = col[~np.isnan(col)]
        assert np.all((v >= 0) & (v <= 1 + 1e-12))
    kp = s.kappa_plus[~np.isnan(s.kappa_plus)]
    assert np.all(kp <= 1 + 1e-12)


def test_series_errors():
    with pytest.raises(ValueError):
        prequential_series([], [])
    with pytest.raises(ValueError):
        prequential_series([1, 0], [1])


def test_delay_outputs(tmp_path):
    summary = delay_summary({"hlfr": [10, 20], "ddm": []})
    assert summary["hlfr"] == 15.0 and math.isnan(summary["ddm"])
    write_delay_table(tmp_path / "d.csv", {"sea": summary})
    assert (tmp_path / "d.csv").read_text().splitlines() == ["dataset,hlfr,ddm", "sea,15.00,nan"]


def test_histogram():
    edges, counts = detection_histogram([[1, 5, 5], [10]], 10, bin_width=5)
    assert edges.tolist() == [1, 6, 11]
    assert counts.tolist() == [3, 1]


def test_metrics_csv(tmp_path):
    write_metrics_csv(tmp_path / "m.csv", {"t": np.array([1, 2]), "oac": np.array([0.5, np.nan])},
                      header_comment='{"seed": 1}')
    assert (tmp_path / "m.csv").read_text().splitlines() == ['# {"seed": 1}', "t,oac", "1,0.5", "2,nan"]
