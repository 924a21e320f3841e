"""Command-line entry point.

Subcommands: generate, boundtable, detect, evaluate, power, compare. Each
reads a JSON config (``--config``) and writes into ``--out``. Exit status is
0 on success, 1 on usage errors and 2 on data or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import plots
from .analysis import PowerConfig, estimate_power, write_power_csv
from .boundtable import DEFAULT_M_DRAWS, DEFAULT_N_GRID, DEFAULT_P_GRID, build_table, save_table
from .evaluation import (aggregate_reports, delay_summary, detection_histogram, match_detections,
                         precision_recall_curve, prequential_series, write_delay_table,
                         write_metrics_csv)
from .experiment import ConfigError, ExperimentConfig, load_config, run_detector, run_seed
from .hht import (Action, read_events, read_predictions, write_events, write_predictions)
from .streams import StreamFormatError, read_ground_truth, write_csv, write_ground_truth

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class DataError(Exception):
    pass


def _header(cfg: ExperimentConfig, **extra) -> str:
    payload = {"config": cfg.to_dict(), **extra}
    return json.dumps(payload, sort_keys=True)


def _jobs_map(fn, items, jobs: int):
    if jobs == 1:
        return [fn(i) for i in items]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=jobs)(delayed(fn)(i) for i in items)


# ----------------------------------------------------------------- commands

def cmd_generate(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    for run in range(cfg.runs):
        stream = cfg.stream_for_run(run)
        hdr = _header(cfg, run=run, stream_seed=stream.spec.seed if stream.spec else None)
        write_csv(stream, out / f"stream_{run:03d}.csv", comment=hdr)
        write_ground_truth(out / f"ground_truth_{run:03d}.txt", stream.drift_times, comment=hdr)


def cmd_boundtable(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    sec = dict(cfg.sections.get("boundtable", {}))
    allowed = {"p_grid", "eta_list", "significance_list", "n_grid", "m_draws"}
    extra = set(sec) - allowed
    if extra:
        raise ConfigError(f"boundtable: unknown keys {sorted(extra)}")
    try:
        table = build_table(sec.get("p_grid", DEFAULT_P_GRID), sec.get("eta_list", [0.9]),
                            sec.get("significance_list", [0.0001, 0.01]),
                            sec.get("n_grid", DEFAULT_N_GRID), int(sec.get("m_draws", DEFAULT_M_DRAWS)),
                            cfg.seed, jobs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"boundtable: {exc}") from None
    save_table(table, out / "boundtable.csv")


def _detect_one(cfg: ExperimentConfig, run: int):
    stream = cfg.stream_for_run(run)
    seed = run_seed(cfg.seed, run)
    table = cfg.bound_table()
    return [(spec, run_detector(spec, stream, cfg.prefix, seed, table)) for spec in cfg.detectors], stream, seed


def cmd_detect(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    if not cfg.detectors:
        raise ConfigError("detect needs a 'detector' section")
    results = _jobs_map(lambda r: _detect_one(cfg, r), range(cfg.runs), jobs)
    for run, (pairs, stream, seed) in enumerate(results):
        for spec, res in pairs:
            tag = spec.display_name.lower()
            hdr = _header(cfg, run=run, run_seed=seed, detector=spec.display_name)
            write_events(out / f"events_{tag}_{run:03d}.csv", res.events, comment=hdr)
            write_predictions(out / f"predictions_{tag}_{run:03d}.csv", res, comment=hdr)
        write_ground_truth(out / f"ground_truth_{run:03d}.txt", stream.drift_times)


def _paths(sec: dict, key: str) -> list[Path]:
    v = sec.get(key)
    if v is None:
        return []
    items = v if isinstance(v, list) else [v]
    paths = [Path(p) for p in items]
    for p in paths:
        if not p.is_file():
            raise DataError(f"{key}: file not found: {p}")
    return paths


def cmd_evaluate(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    sec = cfg.sections.get("evaluate")
    if sec is None:
        raise ConfigError("evaluate needs an 'evaluate' section with 'events' and 'ground_truth'")
    events = _paths(sec, "events")
    preds = _paths(sec, "predictions")
    gt_spec = sec.get("ground_truth")
    if not events:
        raise ConfigError("evaluate: 'events' is required")
    if isinstance(gt_spec, list) and all(isinstance(g, int) for g in gt_spec):
        truths = [gt_spec] * len(events)
    else:
        truths = [read_ground_truth(p) for p in _paths(sec, "ground_truth")]
        if len(truths) == 1:
            truths = truths * len(events)
    if len(truths) != len(events):
        raise ConfigError("evaluate: need one ground-truth file per event log (or exactly one)")
    which = sec.get("use", "confirmed")
    reports, curves = [], []
    for ev_path, gt in zip(events, truths):
        evs = read_events(ev_path)
        det = [e.t_pot for e in evs if which == "all" or e.action is not Action.DISCARDED]
        reports.append(match_detections(det, gt, cfg.delay_range))
        curves.append(precision_recall_curve(det, gt, cfg.delay_grid))
    hdr = _header(cfg)
    rows = {"file": [str(p) for p in events], "tp": [r.tp for r in reports],
            "fp": [r.fp for r in reports], "fn": [r.fn for r in reports],
            "precision": [r.precision for r in reports], "recall": [r.recall for r in reports],
            "mean_delay": [float(np.mean(r.delays)) if r.delays else math.nan for r in reports]}
    write_metrics_csv(out / "detection_report.csv", rows, hdr)
    pr = _pooled_curve(curves, cfg.delay_grid)
    write_metrics_csv(out / "pr_curve.csv", pr, hdr)
    plots.write_svg(out / "pr_curve.svg", plots.line_plot(
        {"precision": (pr["delay"], pr["precision"]), "recall": (pr["delay"], pr["recall"])},
        "Precision / recall vs. delay range", "delay range", "value", step=True))
    for k, p in enumerate(preds):
        t, y, yhat = read_predictions(p)
        ps = prequential_series(y, yhat, t, window=sec.get("window", cfg.window))
        write_metrics_csv(out / f"prequential_{k:03d}.csv", ps.as_columns(), hdr)
        plots.write_svg(out / f"prequential_{k:03d}.svg", plots.line_plot(
            {"OAC": (ps.t, ps.oac), "F-measure": (ps.t, ps.f_measure), "G-mean": (ps.t, ps.g_mean)},
            "Prequential metrics", "t", "value"))


def _pooled_curve(curves, grid) -> dict:
    pr = {"delay": list(grid), "precision": [], "recall": []}
    for k in range(len(grid)):
        agg = aggregate_reports([c[k][1] for c in curves])
        pr["precision"].append(agg.precision)
        pr["recall"].append(agg.recall)
    return pr


def cmd_power(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    sec = dict(cfg.sections.get("power", {}))
    sec.setdefault("runs", cfg.runs)
    try:
        pc = PowerConfig(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"power: {exc}") from None
    res = estimate_power(pc, cfg.bound_table(), cfg.seed, jobs)
    write_power_csv(out / "power.csv", res)
    plots.write_svg(out / "power.svg", plots.heatmap(
        res.power, res.grid, res.grid, "Layer-I power", "post-change rate q", "pre-change rate p"))


def cmd_compare(cfg: ExperimentConfig, out: Path, jobs: int) -> None:
    if not cfg.detectors:
        raise ConfigError("compare needs a 'detectors' list")
    results = _jobs_map(lambda r: _detect_one(cfg, r), range(cfg.runs), jobs)
    names = [d.display_name for d in cfg.detectors]
    delays = {n: [] for n in names}
    curves = {n: [] for n in names}
    dets = {n: [] for n in names}
    length = 0
    truth: list[int] = []
    for pairs, stream, _ in results:
        truth = stream.drift_times
        length = max(length, len(stream))
        for spec, res in pairs:
            n = spec.display_name
            rep = match_detections(res.detections, stream.drift_times, cfg.delay_range)
            delays[n].extend(rep.delays)
            curves[n].append(precision_recall_curve(res.detections, stream.drift_times, cfg.delay_grid))
            dets[n].append(res.detections)
    hdr = _header(cfg)
    dataset = cfg.stream.generator if cfg.stream else "stream"
    write_delay_table(out / "delay_table.csv", {dataset: delay_summary(delays)})
    cols: dict = {"delay": list(cfg.delay_grid)}
    series = {}
    for n in names:
        pr = _pooled_curve(curves[n], cfg.delay_grid)
        cols[f"precision_{n}"] = pr["precision"]
        cols[f"recall_{n}"] = pr["recall"]
        series[n] = pr
    write_metrics_csv(out / "pr_curves.csv", cols, hdr)
    for metric in ("precision", "recall"):
        plots.write_svg(out / f"{metric}_curves.svg", plots.line_plot(
            {n: (s["delay"], s[metric]) for n, s in series.items()},
            f"{metric.capitalize()} vs. delay range", "delay range", metric, step=True))
    for n in names:
        edges, counts = detection_histogram(dets[n], length)
        plots.write_svg(out / f"histogram_{n.lower()}.svg", plots.bar_histogram(
            edges, counts, f"{n} detections over {cfg.runs} runs", "t", "count", markers=truth))


_HELP = {
    "generate": "write synthetic streams and their drift ground truth",
    "boundtable": "build a Monte-Carlo bound table",
    "detect": "run detectors and write event and prediction logs",
    "evaluate": "score event and prediction logs against ground truth",
    "power": "estimate the Layer-I power matrix",
    "compare": "compare detectors: delay table, PR curves, histograms",
}

COMMANDS = {
    "generate": cmd_generate,
    "boundtable": cmd_boundtable,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "power": cmd_power,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hhtdrift", description="Hierarchical concept-drift detection experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=_HELP[name])
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="master seed (overrides config)")
        sp.add_argument("--runs", type=int, help="number of runs (overrides config)")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("hhtdrift: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.runs is not None:
            cfg.runs = args.runs
        cfg.check()
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out, args.jobs)
    except (ConfigError, DataError, StreamFormatError, FileNotFoundError) as exc:
        print(f"hhtdrift {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"hhtdrift {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
