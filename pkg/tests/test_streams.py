import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhtdrift.streams import (StreamFormatError, StreamSpec, concept_labels, generate, read_csv,
                              read_ground_truth, segment_index, write_csv, write_ground_truth)


def test_empty_sea_stream():
    s = generate(StreamSpec("sea", 0, drift_times=[]))
    assert len(s) == 0
    assert s.drift_times == []


def test_sea_labels_follow_active_threshold():
    spec = StreamSpec("sea", 10000, drift_times=[2500, 5000, 7500], seed=3)
    s = generate(spec)
    t = np.arange(1, 10001)
    thr = np.array([8, 9, 7, 9.5])[segment_index(t, [2500, 5000, 7500])]
    assert s.X.shape == (10000, 3)
    assert np.all((s.X >= 0) & (s.X <= 10))
    assert np.array_equal(s.y, (s.X[:, 0] + s.X[:, 1] <= thr).astype(int))
    assert s.drift_times == [2500, 5000, 7500]


def test_drift_time_is_first_sample_of_new_concept():
    assert segment_index(np.array([1, 99, 100, 101]), [100]).tolist() == [0, 0, 1, 1]


@pytest.mark.parametrize("gen", ["sea", "checkerboard", "hyperplane", "highdim"])
def test_labels_match_concept_rule(gen):
    spec = StreamSpec(gen, 2000, seed=11)
    s = generate(spec)
    assert np.array_equal(s.y, concept_labels(spec, s.X, np.arange(1, 2001)))


@pytest.mark.parametrize("gen", ["sea", "checkerboard", "hyperplane", "highdim"])
def test_same_spec_same_bytes(gen, tmp_path):
    spec = StreamSpec(gen, 500, seed=7, label_noise=0.05)
    write_csv(generate(spec), tmp_path / "a.csv")
    write_csv(generate(spec), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_different_seed_different_stream():
    a = generate(StreamSpec("sea", 100, seed=1))
    b = generate(StreamSpec("sea", 100, seed=2))
    assert not np.array_equal(a.X, b.X)


def test_hyperplane_imbalance_per_segment():
    rates = []
    for seed in range(10):
        s = generate(StreamSpec("hyperplane", 4000, imbalance=0.2, seed=seed))
        seg = segment_index(np.arange(1, 4001), s.drift_times)
        rates.append([s.y[seg == k].mean() for k in range(4)])
    assert np.all(np.abs(np.mean(rates, axis=0) - 0.2) <= 0.03)


def test_imbalance_per_segment_list():
    s = generate(StreamSpec("sea", 4000, imbalance=[0.1, 0.5, 0.3, 0.7], seed=0))
    seg = segment_index(np.arange(1, 4001), s.drift_times)
    got = [s.y[seg == k].mean() for k in range(4)]
    assert np.allclose(got, [0.1, 0.5, 0.3, 0.7], atol=0.05)


def test_recurrent_hyperplane_repeats_concepts():
    spec = StreamSpec("hyperplane", 4000, seed=5, params={"recurrent": True, "rotation": 0.0})
    X = np.random.default_rng(0).uniform(size=(500, 10))
    t0 = np.full(500, 1)
    t2 = np.full(500, spec.resolved_drift_times()[1])
    t1 = np.full(500, spec.resolved_drift_times()[0])
    assert np.array_equal(concept_labels(spec, X, t0), concept_labels(spec, X, t2))
    assert not np.array_equal(concept_labels(spec, X, t0), concept_labels(spec, X, t1))


def test_highdim_flips_and_returns():
    spec = StreamSpec("highdim", 4000, seed=2)
    X = (np.random.default_rng(1).random((300, 99)) < 0.05).astype(float)
    g = spec.resolved_drift_times()
    labs = [concept_labels(spec, X, np.full(300, t)) for t in (1, g[0], g[1], g[2])]
    assert np.array_equal(labs[0], 1 - labs[1])
    assert np.array_equal(labs[0], labs[2])
    assert np.array_equal(labs[1], labs[3])


def test_label_noise_rate():
    spec = StreamSpec("sea", 20000, seed=0, label_noise=0.1)
    s = generate(spec)
    flipped = s.y != concept_labels(spec, s.X, np.arange(1, 20001))
    assert abs(flipped.mean() - 0.1) < 0.01


def test_default_drifts_split_into_quarters():
    assert StreamSpec("sea", 1000).resolved_drift_times() == [251, 501, 751]


@pytest.mark.parametrize("kwargs, msg", [
    (dict(generator="nope", length=10), "unknown generator"),
    (dict(generator="sea", length=100, drift_times=[100]), ">= stream length"),
    (dict(generator="sea", length=100, drift_times=[50, 40]), "strictly increasing"),
    (dict(generator="hyperplane", length=100, params={"d": 0}), "dimension"),
    (dict(generator="sea", length=100, imbalance=1.0), "imbalance"),
])
def test_invalid_specs(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        generate(StreamSpec(**kwargs))


def test_read_two_rows(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("f1,f2,label\n0.5,1.5,1\n-2,3,0\n")
    s = read_csv(p)
    assert [smp.t for smp in s] == [1, 2]
    assert s.y.tolist() == [1, 0]
    assert s.X.tolist() == [[0.5, 1.5], [-2.0, 3.0]]


def test_bad_label_names_row(tmp_path):
    p = tmp_path / "s.csv"
    rows = "".join(f"{k},{k},0\n" for k in range(6))
    p.write_text("f1,f2,label\n" + rows + "1,1,2\n")
    with pytest.raises(StreamFormatError, match="row 7"):
        read_csv(p)


def test_inconsistent_columns(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("f1,f2,label\n1,2,0\n1,0\n")
    with pytest.raises(StreamFormatError, match="row 2"):
        read_csv(p)


def test_non_numeric_feature(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("f1,label\nabc,0\n")
    with pytest.raises(StreamFormatError, match="row 1"):
        read_csv(p)


@settings(max_examples=20, deadline=None)
@given(gen=st.sampled_from(["sea", "checkerboard", "hyperplane", "highdim"]),
       length=st.integers(0, 60), seed=st.integers(0, 2**32 - 1))
def test_csv_round_trip(tmp_path_factory, gen, length, seed):
    d = tmp_path_factory.mktemp("rt")
    s = generate(StreamSpec(gen, length, drift_times=[], seed=seed, label_noise=0.1))
    write_csv(s, d / "s.csv", comment="run header")
    back = read_csv(d / "s.csv")
    assert np.array_equal(back.X, s.X)
    assert np.array_equal(back.y, s.y)


def test_ground_truth_round_trip(tmp_path):
    write_ground_truth(tmp_path / "g.txt", [10, 20, 35], comment="x")
    assert read_ground_truth(tmp_path / "g.txt") == [10, 20, 35]


def test_csv_generator_reads_file(tmp_path):
    src = generate(StreamSpec("sea", 50, seed=1))
    write_csv(src, tmp_path / "s.csv")
    write_ground_truth(tmp_path / "g.txt", [20])
    s = generate(StreamSpec("csv", 50, drift_times=[], params={"path": str(tmp_path / "s.csv"),
                                                               "ground_truth": str(tmp_path / "g.txt")}))
    assert np.array_equal(s.X, src.X)
    assert s.drift_times == [20]
