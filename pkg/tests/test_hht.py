import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhtdrift import hht
from hhtdrift.baselines import make_detector
from hhtdrift.classifier import train_svm
from hhtdrift.hht import (Action, DriftEvent, HhtConfig, HierarchicalDetector, SingleLayerConfig,
                          read_events, read_predictions, run_single_layer, run_stream, write_events,
                          write_predictions)
from hhtdrift.lfr import LFRDetector, LfrConfig
from hhtdrift.permtest import Decision, PermutationConfig, PermutationOutcome
from hhtdrift.streams import Stream, StreamSpec, generate


def _drift_stream(seed, length=1500, drift=801):
    return generate(StreamSpec("sea", length, drift_times=[drift], seed=seed, label_noise=0.1,
                               params={"thresholds": [7.0, 13.0]}))


def _config(w=100, mode="retrain", trials=99):
    return HhtConfig(perm=PermutationConfig(window=w, trials=trials, stop_when_decided=True), mode=mode)


def test_confirms_abrupt_drift_and_retrains():
    s = _drift_stream(0)
    r = run_stream(_config(), s, 200)
    assert any(801 <= t <= 1001 for t in r.detections)
    updated = [e for e in r.events if e.action is Action.RETRAINED]
    assert updated
    for e in r.events:
        if e.verdict is not None:
            assert e.t_confirmed == e.t_pot + 100


def test_adapt_mode_marks_events():
    r = run_stream(_config(mode="adapt"), _drift_stream(1), 200)
    assert r.detections
    assert {e.action for e in r.events} <= {Action.ADAPTED, Action.DISCARDED}


@pytest.mark.parametrize("seed", range(3))
def test_updates_only_when_both_layers_reject(seed):
    r = run_stream(_config(), _drift_stream(seed + 10), 200)
    for e in r.events:
        if e.action is not Action.DISCARDED:
            assert e.verdict is Decision.TRUE_POSITIVE and e.p_value <= 0.05
        elif e.verdict is not None:
            assert e.verdict is Decision.FALSE_POSITIVE


def test_rejected_layer_two_leaves_model_alone(monkeypatch):
    def never(before, after, trainer=None, config=None):
        return PermutationOutcome(0.0, [1.0], 1.0, Decision.FALSE_POSITIVE)

    monkeypatch.setattr(hht, "permutation_test", never)
    s = _drift_stream(2)
    head, rest = s.split(200)
    model = train_svm(head.X, head.y)
    det = HierarchicalDetector(_config(), model, t0=200,
                               history=list(zip(head.X[-100:], head.y[-100:].tolist())))
    for x, y in zip(rest.X, rest.y.tolist()):
        det.step(x, y)
    assert det.events and all(e.action is Action.DISCARDED for e in det.events)
    assert det.model is model


def test_memory_never_exceeds_two_windows():
    s = _drift_stream(3)
    head, rest = s.split(200)
    det = HierarchicalDetector(_config(w=40), train_svm(head.X, head.y), t0=200)
    peak = 0
    for x, y in zip(rest.X, rest.y.tolist()):
        det.step(x, y)
        peak = max(peak, det.held_samples())
    assert peak <= 80
    assert any(e.verdict is not None for e in det.events)


def test_short_history_discards():
    s = _drift_stream(4)
    head, rest = s.split(200)
    det = HierarchicalDetector(_config(w=300), train_svm(head.X, head.y), t0=200)
    # invert the labels so Layer I fires before 300 samples are buffered
    for k, (x, y) in enumerate(zip(rest.X[:300], rest.y[:300].tolist())):
        _, ev = det.step(x, 1 - y if k >= 150 else y)
        if ev is not None:
            assert ev.action is Action.DISCARDED and ev.verdict is None
            return
    pytest.fail("Layer I never fired on an inverted stream")


@settings(max_examples=8, deadline=None)
@given(k=st.integers(0, 699))
def test_prediction_ignores_current_and_future_labels(k):
    s = _drift_stream(5, length=900, drift=500)
    base = run_stream(_config(w=30, trials=19), s, 200)
    y2 = s.y.copy()
    y2[200 + k:] = 1 - y2[200 + k:]
    alt = run_stream(_config(w=30, trials=19), Stream(s.X, y2, s.drift_times), 200)
    assert np.array_equal(base.yhat[:k + 1], alt.yhat[:k + 1])


def test_run_is_deterministic():
    s = _drift_stream(6)
    a = run_stream(_config(), s, 200, seed=3)
    b = run_stream(_config(), s, 200, seed=3)
    assert a.events == b.events and np.array_equal(a.yhat, b.yhat)


def test_single_class_prefix_rejected():
    s = Stream(np.zeros((300, 2)), np.ones(300, dtype=np.int64), [])
    with pytest.raises(ValueError, match="single class"):
        run_stream(_config(), s, 200)


def test_config_validation():
    with pytest.raises(ValueError):
        HhtConfig(mode="boost")
    with pytest.raises(ValueError):
        HhtConfig(lfr=LfrConfig(min_retrain=60), perm=PermutationConfig(window=50))


@pytest.mark.parametrize("name", ["lfr", "ddm", "eddm", "stepd"])
def test_single_layer_acts_on_every_alarm(name):
    s = _drift_stream(7)
    det = LFRDetector() if name == "lfr" else make_detector(name)
    r = run_single_layer(det, s, SingleLayerConfig(window=50), 200)
    assert r.detections
    assert all(e.verdict is None and e.action is Action.RETRAINED for e in r.events)
    assert len(r.yhat) == 1300


def test_event_and_prediction_files(tmp_path):
    s = _drift_stream(8)
    r = run_stream(_config(), s, 200)
    write_events(tmp_path / "e.csv", r.events, comment='{"seed": 0}')
    back = read_events(tmp_path / "e.csv")
    assert [(e.t_pot, e.verdict, e.t_confirmed, e.action) for e in back] == \
        [(e.t_pot, e.verdict, e.t_confirmed, e.action) for e in r.events]
    write_predictions(tmp_path / "p.csv", r)
    t, y, yhat = read_predictions(tmp_path / "p.csv")
    assert t[0] == 201 and np.array_equal(yhat, r.yhat) and np.array_equal(y, r.y)


def test_event_file_errors(tmp_path):
    (tmp_path / "e.csv").write_text("t_pot,verdict,t_confirmed,action\n5,maybe,9,retrained\n")
    with pytest.raises(ValueError, match="row 1"):
        read_events(tmp_path / "e.csv")


def test_empty_event_log_round_trip(tmp_path):
    write_events(tmp_path / "e.csv", [])
    assert read_events(tmp_path / "e.csv") == []
    assert DriftEvent(5, None, 5, Action.RETRAINED).verdict is None
