import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhtdrift.boundtable import R0, BoundTable
from hhtdrift.lfr import (RATE_KINDS, LFRDetector, LfrConfig, LfrState, SignalKind, lfr_init,
                          lfr_reset, lfr_step, rate_affected, rate_counts, trace_row)

pairs = st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=200)


def test_rate_affected_cases():
    assert rate_affected("tpr", 1, 0)
    assert not rate_affected("ppv", 1, 0)
    with pytest.raises(ValueError):
        rate_affected("acc", 1, 1)


@pytest.mark.parametrize("y, yhat", list(itertools.product([0, 1], repeat=2)))
def test_exactly_two_rates_affected(y, yhat):
    assert sum(rate_affected(k, y, yhat) for k in RATE_KINDS) == 2


def test_first_step_worked_example():
    state, sig = lfr_step(lfr_init(), 1, 1, LfrConfig(eta=0.9))
    assert state.r[0] == pytest.approx(0.55)
    assert state.r[1] == 0.5
    assert state.conf[1][1] == 2
    assert state.p_hat[0] == pytest.approx(2 / 3)
    assert sig.kind is SignalKind.NONE and sig.t_pot is None


@settings(max_examples=50, deadline=None)
@given(seq=pairs)
def test_rate_invariants(seq):
    state = lfr_init()
    cfg = LfrConfig()
    for y, yhat in seq:
        before = list(state.r)
        state, sig = lfr_step(state, y, yhat, cfg)
        if sig.kind is SignalKind.POTENTIAL_DRIFT:
            assert sig.t_pot == state.t
            state = lfr_reset(state)
            continue
        assert sig.t_pot is None
        for k, kind in enumerate(RATE_KINDS):
            if not rate_affected(kind, y, yhat):
                assert state.r[k] == before[k]
        assert all(0.0 <= r <= 1.0 for r in state.r)
        for k, kind in enumerate(RATE_KINDS):
            hits, n = rate_counts(kind, state.conf)
            assert state.p_hat[k] == pytest.approx(hits / n)


def test_reset_keeps_only_time():
    state = lfr_init()
    for y, yhat in [(1, 0), (0, 0), (1, 1), (0, 1)] * 5:
        state, _ = lfr_step(state, y, yhat, LfrConfig())
    once = lfr_reset(state)
    assert once == LfrState(t=20)
    assert lfr_reset(once) == once


def test_replay_after_reset_matches_fresh_start():
    cfg = LfrConfig()
    used, _ = lfr_step(lfr_init(), 0, 1, cfg)
    used, _ = lfr_step(used, 1, 1, cfg)
    a, sa = lfr_step(lfr_reset(used), 1, 0, cfg)
    b, sb = lfr_step(lfr_init(), 1, 0, cfg)
    assert a.r == b.r and a.conf == b.conf and a.p_hat == b.p_hat
    assert sa.kind == sb.kind
    assert a.t == 3 and b.t == 1


def _open_table(etas):
    # bounds that never fire, so only the rate recursion is exercised
    values = np.zeros((len(etas), 2, 2, 2, 2))
    values[..., 1] = 1.0
    return BoundTable(np.array([0.01, 0.99]), np.array(etas), np.array([0.0001, 0.01]),
                      np.array([1.0, 100.0]), values, 1000, 0)


def test_eta_limits():
    table = _open_table([1e-12, 1 - 1e-12])
    slow = LfrConfig(eta=1 - 1e-12)
    fast = LfrConfig(eta=1e-12)
    s = lfr_init()
    f = lfr_init()
    for y, yhat in [(1, 0), (0, 0), (1, 1)]:
        s, _ = lfr_step(s, y, yhat, slow, table)
        f, _ = lfr_step(f, y, yhat, fast, table)
    assert s.r == pytest.approx([R0] * 4, abs=1e-9)
    # tpr saw (1,1) last; ppv saw (1,1) last; tnr/npv saw (0,0)
    assert f.r == pytest.approx([1.0, 1.0, 1.0, 1.0], abs=1e-9)
    f, _ = lfr_step(f, 1, 0, fast, table)
    assert f.r[0] == pytest.approx(0.0, abs=1e-9) and f.r[3] == pytest.approx(0.0, abs=1e-9)


def test_invalid_labels():
    with pytest.raises(ValueError):
        lfr_step(lfr_init(), 2, 0, LfrConfig())
    with pytest.raises(ValueError):
        LfrConfig(warn_sig=0.0001, detect_sig=0.01)
    with pytest.raises(ValueError):
        LfrConfig(eta=(0.9, 0.9))


def test_warning_comes_first():
    rng = np.random.default_rng(3)
    det = LFRDetector()
    detections = 0
    for t in range(3000):
        y = int(rng.integers(2))
        ok = rng.random() < (0.9 if t < 1500 else 0.3)
        sig = det.update(y, y if ok else 1 - y)
        if sig.kind is SignalKind.POTENTIAL_DRIFT:
            # nested bounds: the warn state is set on this very step at the latest
            assert sig.warn_time is not None and sig.warn_time <= sig.t_pot
            detections += 1
    assert detections >= 1


def test_perfect_classifier_rarely_fires():
    fired = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        det = LFRDetector()
        for y in rng.integers(0, 2, 10_000).tolist():
            if det.update(y, y).kind is SignalKind.POTENTIAL_DRIFT:
                fired += 1
                break
    assert fired <= 1


def test_inversion_detected_quickly():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        det = LFRDetector()
        y = rng.integers(0, 2, 1200)
        ok = rng.random(1200) < 0.9
        yhat = np.where(ok, y, 1 - y)
        yhat[999:] = 1 - yhat[999:]
        found = None
        for t in range(1200):
            sig = det.update(int(y[t]), int(yhat[t]))
            if sig.kind is SignalKind.POTENTIAL_DRIFT and t + 1 >= 1000:
                found = t + 1
                break
        hits += found is not None and found - 1000 <= 200
    assert hits >= 95


def test_trace_row_shape():
    state, sig = lfr_step(lfr_init(), 1, 1, LfrConfig())
    row = trace_row(state, sig)
    assert len(row) == 10 and row[-1] == "none"
