import json
import subprocess
import sys

import pytest

from hhtdrift.cli import main
from hhtdrift.hht import write_events
from hhtdrift.streams import write_ground_truth

SMALL_STREAM = {"generator": "sea", "length": 900, "drift_times": [501], "label_noise": 0.1,
                "params": {"thresholds": [7.0, 13.0]}}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _detect_cfg(**extra):
    cfg = {"stream": SMALL_STREAM, "seed": 4, "runs": 1,
           "detectors": [{"name": "hlfr", "trials": 49, "stop_when_decided": True}, "ddm"]}
    cfg.update(extra)
    return cfg


def test_detect_is_bit_identical(tmp_path):
    cfg = _write(tmp_path, _detect_cfg())
    assert main(["detect", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["detect", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "events_hlfr_000.csv" in files and "predictions_ddm_000.csv" in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    head = (tmp_path / "a" / "events_hlfr_000.csv").read_text().splitlines()[0]
    meta = json.loads(head[2:])
    assert meta["config"]["seed"] == 4 and "run_seed" in meta


def test_seed_flag_changes_output(tmp_path):
    cfg = _write(tmp_path, _detect_cfg())
    main(["detect", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["detect", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "5"])
    a = (tmp_path / "a" / "predictions_ddm_000.csv").read_bytes()
    b = (tmp_path / "b" / "predictions_ddm_000.csv").read_bytes()
    assert a != b


def test_evaluate_empty_event_log(tmp_path):
    write_events(tmp_path / "ev.csv", [])
    write_ground_truth(tmp_path / "gt.txt", [100, 400, 700])
    cfg = _write(tmp_path, {"evaluate": {"events": str(tmp_path / "ev.csv"),
                                         "ground_truth": str(tmp_path / "gt.txt")}})
    assert main(["evaluate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = [ln for ln in (tmp_path / "o" / "detection_report.csv").read_text().splitlines()
            if not ln.startswith("#")]
    assert rows[0] == "file,tp,fp,fn,precision,recall,mean_delay"
    assert rows[1].split(",")[1:4] == ["0", "0", "3"]
    assert (tmp_path / "o" / "pr_curve.svg").is_file()


def test_detect_then_evaluate(tmp_path):
    cfg = _write(tmp_path, _detect_cfg())
    main(["detect", "--config", cfg, "--out", str(tmp_path / "d")])
    ev = _write(tmp_path, {"window": 100, "evaluate": {
        "events": str(tmp_path / "d" / "events_hlfr_000.csv"),
        "ground_truth": str(tmp_path / "d" / "ground_truth_000.txt"),
        "predictions": str(tmp_path / "d" / "predictions_hlfr_000.csv")}}, "ev.json")
    assert main(["evaluate", "--config", ev, "--out", str(tmp_path / "e")]) == 0
    lines = (tmp_path / "e" / "prequential_000.csv").read_text().splitlines()
    assert lines[1] == "t,oac,f_measure,g_mean,kappa_plus" and len(lines) == 2 + 700


def test_generate(tmp_path):
    cfg = _write(tmp_path, {"stream": SMALL_STREAM, "runs": 2})
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "g")]) == 0
    assert (tmp_path / "g" / "ground_truth_001.txt").read_text().splitlines()[-1] == "501"
    assert (tmp_path / "g" / "stream_000.csv").read_bytes() != (tmp_path / "g" / "stream_001.csv").read_bytes()


def test_boundtable_and_power(tmp_path):
    cfg = _write(tmp_path, {"boundtable": {"p_grid": [0.2, 0.5], "n_grid": [5, 50], "m_draws": 1000},
                            "power": {"grid": [0.2, 0.8], "m": 100, "k": 50, "runs": 5}})
    assert main(["boundtable", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    assert len((tmp_path / "b" / "boundtable.csv").read_text().splitlines()) == 2 + 2 * 2 * 2
    assert main(["power", "--config", cfg, "--out", str(tmp_path / "p")]) == 0
    assert len((tmp_path / "p" / "power.csv").read_text().splitlines()) == 5
    assert (tmp_path / "p" / "power.svg").read_text().startswith("<svg")


def test_compare_writes_table_and_figures(tmp_path):
    cfg = _write(tmp_path, _detect_cfg(runs=2, detectors=[
        {"name": "hlfr", "trials": 49, "stop_when_decided": True}, "lfr", "ddm", "eddm", "stepd",
        {"name": "ddm_oci", "params": {"warn_level": 1.0, "detect_level": 2.0}}]))
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "c")]) == 0
    table = (tmp_path / "c" / "delay_table.csv").read_text().splitlines()
    assert table[0] == "dataset,HLFR,LFR,DDM,EDDM,STEPD,DDM-OCI"
    assert table[1].startswith("sea,")
    for name in ("precision_curves.svg", "recall_curves.svg", "histogram_hlfr.svg", "pr_curves.csv"):
        assert (tmp_path / "c" / name).is_file()


@pytest.mark.parametrize("cfg, msg", [
    ({"detectors": ["adwin"]}, "unknown detector"),
    ({"stream": {"generator": "sea"}}, "required"),
    ({"colour": 1}, "unknown keys"),
    ({"runs": 0}, "runs"),
    ({"table": "/nonexistent/table.csv"}, "not found"),
])
def test_config_errors_exit_2(tmp_path, capsys, cfg, msg):
    rc = main(["detect", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert msg in capsys.readouterr().err


def test_missing_inputs_exit_2(tmp_path, capsys):
    assert main(["detect", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
    cfg = _write(tmp_path, {"evaluate": {"events": str(tmp_path / "missing.csv"), "ground_truth": [5]}})
    assert main(["evaluate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "file not found" in capsys.readouterr().err
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["power", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == 2


def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["explode", "--config", "x", "--out", "y"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["detect", "--out", "y"])
    assert exc.value.code == 1
    cfg = _write(tmp_path, {})
    assert main(["power", "--config", cfg, "--out", str(tmp_path), "--jobs", "0"]) == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hhtdrift", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "compare" in res.stdout
