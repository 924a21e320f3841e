"""JSON-configured experiments shared by the command line and the scripts."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .baselines import BaselineConfig, make_detector
from .boundtable import BoundTable, default_table, load_table
from .hht import HhtConfig, RunResult, SingleLayerConfig, run_single_layer, run_stream
from .lfr import LfrConfig
from .permtest import PermutationConfig
from .streams import Stream, StreamSpec, generate

__all__ = [
    "ConfigError",
    "DetectorSpec",
    "ExperimentConfig",
    "run_seed",
    "load_config",
    "run_detector",
]

DETECTORS = ("hlfr", "lfr", "ddm", "eddm", "stepd", "ddm_oci")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def run_seed(seed: int, run: int) -> int:
    """Seed of run ``run``; independent of how runs are scheduled."""
    return int(np.random.SeedSequence([seed, run]).generate_state(1, dtype=np.uint64)[0] >> 1)


def _only(d: dict, allowed: set, where: str) -> None:
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}; allowed: {sorted(allowed)}")


@dataclass
class DetectorSpec:
    """One detector and its update policy.

    ``name`` is ``hlfr`` or a single-layer detector (``lfr``, ``ddm``,
    ``eddm``, ``stepd``, ``ddm_oci``). ``params`` feeds the baseline
    thresholds (``warn_level``, ``detect_level``, ``window``, ``eta``).
    """

    name: str = "hlfr"
    mode: str = "retrain"
    window: int = 100
    trials: int = 1000
    significance: float = 0.05
    stop_when_decided: bool = False
    eta: float = 0.9
    warn_sig: float = 0.01
    detect_sig: float = 0.0001
    min_retrain: int = 20
    c_reg: float = 1.0
    label: str | None = None
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorSpec":
        if isinstance(d, str):
            d = {"name": d}
        _only(d, {f.name for f in dataclasses.fields(cls)}, "detector")
        spec = cls(**d)
        spec.name = spec.name.lower().replace("-", "_")
        if spec.name not in DETECTORS:
            raise ConfigError(f"unknown detector {spec.name!r}; choose from {', '.join(DETECTORS)}")
        try:
            spec.lfr_config()
            spec.single_layer_config()
            if spec.name == "hlfr":
                spec.hht_config(0)
            elif spec.name != "lfr":
                BaselineConfig(spec.name, **spec.params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"detector {spec.name}: {exc}") from None
        return spec

    @property
    def display_name(self) -> str:
        if self.label:
            return self.label
        base = self.name.upper().replace("_", "-")
        return ("A-" + base) if self.mode == "adapt" else base

    def lfr_config(self) -> LfrConfig:
        return LfrConfig(self.eta, self.warn_sig, self.detect_sig, self.min_retrain)

    def hht_config(self, seed: int) -> HhtConfig:
        perm = PermutationConfig(self.window, self.trials, self.significance, seed,
                                 self.stop_when_decided)
        return HhtConfig(self.lfr_config(), perm, self.mode, self.c_reg)

    def single_layer_config(self) -> SingleLayerConfig:
        return SingleLayerConfig(self.window, self.min_retrain, self.mode, self.c_reg)


@dataclass
class ExperimentConfig:
    stream: StreamSpec | None = None
    detectors: list[DetectorSpec] = field(default_factory=list)
    seed: int = 0
    runs: int = 1
    prefix: int = 200
    table: str | None = None
    delay_range: int = 200
    delay_grid: list[int] = field(default_factory=lambda: list(range(0, 501, 25)))
    window: int = 500
    sections: dict = field(default_factory=dict)

    _SECTIONS = ("boundtable", "power", "evaluate")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        allowed = {"stream", "detector", "detectors", "seed", "runs", "prefix", "table",
                   "delay_range", "delay_grid", "window", *cls._SECTIONS}
        _only(d, allowed, "config")
        cfg = cls()
        if "stream" in d:
            s = dict(d["stream"])
            _only(s, {f.name for f in dataclasses.fields(StreamSpec)}, "stream")
            if "generator" not in s or "length" not in s:
                raise ConfigError("stream: 'generator' and 'length' are required")
            try:
                cfg.stream = StreamSpec(**s)
                cfg.stream.validate()
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"stream: {exc}") from None
        dets = d.get("detectors", [d["detector"]] if "detector" in d else [])
        cfg.detectors = [DetectorSpec.from_dict(x) for x in dets]
        for key in ("seed", "runs", "prefix", "delay_range", "window"):
            if key in d:
                setattr(cfg, key, int(d[key]))
        if "delay_grid" in d:
            cfg.delay_grid = [int(v) for v in d["delay_grid"]]
        cfg.table = d.get("table")
        cfg.sections = {k: d[k] for k in cls._SECTIONS if k in d}
        cfg.check()
        return cfg

    def check(self) -> None:
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.table is not None and not Path(self.table).is_file():
            raise ConfigError(f"bound table file not found: {self.table}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"seed": self.seed, "runs": self.runs, "prefix": self.prefix,
                               "table": self.table, "delay_range": self.delay_range,
                               "delay_grid": self.delay_grid, "window": self.window}
        if self.stream is not None:
            out["stream"] = dataclasses.asdict(self.stream)
        if self.detectors:
            out["detectors"] = [dataclasses.asdict(d) for d in self.detectors]
        out.update(self.sections)
        return out

    def bound_table(self) -> BoundTable:
        return default_table() if self.table is None else load_table(self.table)

    def stream_for_run(self, run: int) -> Stream:
        if self.stream is None:
            raise ConfigError("config has no 'stream' section")
        spec = dataclasses.replace(self.stream, seed=run_seed(self.seed, run))
        if self.stream.generator == "csv":
            spec = self.stream
        return generate(spec)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(raw)


def run_detector(spec: DetectorSpec, stream: Stream, prefix: int, seed: int,
                 table: BoundTable | None = None) -> RunResult:
    """One prequential run of ``spec`` over ``stream``."""
    if spec.name == "hlfr":
        return run_stream(spec.hht_config(seed), stream, prefix, table, seed)
    if spec.name == "lfr":
        det = make_detector("lfr", eta=spec.eta, warn_sig=spec.warn_sig,
                            detect_sig=spec.detect_sig, min_retrain=spec.min_retrain, table=table)
    else:
        det = make_detector(spec.name, **spec.params)
    return run_single_layer(det, stream, spec.single_layer_config(), prefix, seed)
