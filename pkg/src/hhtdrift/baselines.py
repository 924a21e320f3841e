"""Reference drift detectors: DDM, EDDM, STEPD and DDM-OCI.

Each detector consumes ``(y, yhat)`` pairs and emits the same
:class:`~hhtdrift.lfr.LayerOneSignal` as the Layer-I test, so any of them can
drive :func:`hhtdrift.hht.run_single_layer`. The ``*_step`` functions are the
pure state transitions; the classes wrap them with automatic reset.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass, field

from .lfr import LayerOneSignal, LFRDetector, LfrConfig, SignalKind

__all__ = [
    "BaselineConfig",
    "DdmState",
    "ddm_step",
    "EddmState",
    "eddm_step",
    "StepdState",
    "stepd_z",
    "stepd_step",
    "DdmOciState",
    "ddm_oci_step",
    "BaselineDetector",
    "make_detector",
    "DETECTOR_NAMES",
]

DETECTOR_NAMES = ("lfr", "ddm", "eddm", "stepd", "ddm_oci")

_DEFAULT_LEVELS = {
    "ddm": (2.0, 3.0),
    "eddm": (0.95, 0.90),
    "stepd": (0.05, 0.01),
}


@dataclass
class BaselineConfig:
    """Thresholds for one baseline.

    ``warn_level`` / ``detect_level`` mean: standard-deviation multipliers for
    DDM and DDM-OCI, ratio thresholds for EDDM, p-value levels for STEPD.
    DDM-OCI has no defaults and both levels must be given.
    """

    detector: str
    warn_level: float | None = None
    detect_level: float | None = None
    window: int = 30
    eta: float = 0.9
    min_instances: int = 30

    def __post_init__(self):
        if self.detector not in _DEFAULT_LEVELS and self.detector != "ddm_oci":
            raise ValueError(f"unknown baseline detector {self.detector!r}")
        if self.detector == "ddm_oci":
            if self.warn_level is None or self.detect_level is None:
                raise ValueError("ddm_oci needs explicit warn_level and detect_level")
        else:
            w, d = _DEFAULT_LEVELS[self.detector]
            self.warn_level = w if self.warn_level is None else float(self.warn_level)
            self.detect_level = d if self.detect_level is None else float(self.detect_level)
        if self.detector in ("ddm", "ddm_oci"):
            ok = 0 < self.warn_level < self.detect_level
        else:
            # EDDM ratios and STEPD p-values are stricter when smaller
            ok = 0 < self.detect_level < self.warn_level < 1
        if not ok:
            raise ValueError(f"{self.detector}: detection level must be stricter than warning level")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")


def _signal(state, warn: bool, detect: bool, t: int) -> LayerOneSignal:
    """Shared warning bookkeeping; ``state`` needs ``warn_time``."""
    kind = SignalKind.NONE
    if warn and state.warn_time is None:
        state.warn_time = t
        kind = SignalKind.WARNING_STARTED
    elif not warn and state.warn_time is not None:
        state.warn_time = None
        kind = SignalKind.WARNING_CLEARED
    if detect:
        return LayerOneSignal(SignalKind.POTENTIAL_DRIFT, t, state.warn_time)
    return LayerOneSignal(kind, None, state.warn_time)


# ---------------------------------------------------------------- DDM

@dataclass
class DdmState:
    t: int = 0
    n: int = 0
    errors: int = 0
    ps_min: float = math.inf
    p_min: float = math.inf
    s_min: float = math.inf
    warn_time: int | None = None


def ddm_step(state: DdmState, correct: bool, cfg: BaselineConfig) -> tuple[DdmState, LayerOneSignal]:
    """Error-rate control chart; thresholds are multiples of the std at the best point."""
    state.t += 1
    state.n += 1
    state.errors += 0 if correct else 1
    p = state.errors / state.n
    s = math.sqrt(p * (1 - p) / state.n)
    if state.n < cfg.min_instances:
        return state, LayerOneSignal(SignalKind.NONE, None, state.warn_time)
    if p + s <= state.ps_min:
        state.ps_min, state.p_min, state.s_min = p + s, p, s
    warn = p + s >= state.p_min + cfg.warn_level * state.s_min
    detect = p + s >= state.p_min + cfg.detect_level * state.s_min
    # an error-free start gives s_min = 0; demand an actual rise before alarming
    if state.s_min == 0.0:
        warn = detect = p > state.p_min and (warn or detect)
    return state, _signal(state, warn, detect, state.t)


# ---------------------------------------------------------------- EDDM

@dataclass
class EddmState:
    t: int = 0
    n_errors: int = 0
    last_error: int | None = None
    mean: float = 0.0
    m2: float = 0.0
    best: float = 0.0
    warn_time: int | None = None


def eddm_step(state: EddmState, correct: bool, cfg: BaselineConfig) -> tuple[EddmState, LayerOneSignal]:
    """Tracks mean + 2 std of the gap between consecutive errors."""
    state.t += 1
    if correct:
        return state, LayerOneSignal(SignalKind.NONE, None, state.warn_time)
    if state.last_error is None:
        state.last_error = state.t
        state.n_errors = 1
        return state, LayerOneSignal(SignalKind.NONE, None, state.warn_time)
    gap = state.t - state.last_error
    state.last_error = state.t
    state.n_errors += 1
    k = state.n_errors - 1  # number of gaps seen
    delta = gap - state.mean
    state.mean += delta / k
    state.m2 += delta * (gap - state.mean)
    std = math.sqrt(state.m2 / k)
    stat = state.mean + 2.0 * std
    if stat > state.best:
        state.best = stat
    if state.n_errors < cfg.min_instances:
        return state, LayerOneSignal(SignalKind.NONE, None, state.warn_time)
    ratio = stat / state.best
    return state, _signal(state, ratio < cfg.warn_level, ratio < cfg.detect_level, state.t)


# ---------------------------------------------------------------- STEPD

@dataclass
class StepdState:
    t: int = 0
    n_total: int = 0
    correct_total: int = 0
    recent: collections.deque = field(default_factory=collections.deque)
    warn_time: int | None = None


def stepd_z(correct_old: int, n_old: int, correct_new: int, n_new: int) -> float:
    """Two-proportion z statistic with continuity correction, older minus recent.

    Swapping the two groups flips the sign.
    """
    p_old = correct_old / n_old
    p_new = correct_new / n_new
    pooled = (correct_old + correct_new) / (n_old + n_new)
    denom = math.sqrt(pooled * (1 - pooled) * (1 / n_old + 1 / n_new))
    diff = p_old - p_new
    cc = 0.5 * (1 / n_old + 1 / n_new)
    num = math.copysign(max(abs(diff) - cc, 0.0), diff)
    if denom == 0.0:
        return 0.0
    return num / denom


def stepd_step(state: StepdState, correct: bool, cfg: BaselineConfig) -> tuple[StepdState, LayerOneSignal]:
    """Compares recent-window accuracy with all older accuracy (one-sided)."""
    state.t += 1
    state.n_total += 1
    state.correct_total += int(correct)
    state.recent.append(int(correct))
    if len(state.recent) > cfg.window:
        state.recent.popleft()
    if state.n_total < 2 * cfg.window:
        return state, LayerOneSignal(SignalKind.NONE, None, state.warn_time)
    r_correct = sum(state.recent)
    n_old = state.n_total - cfg.window
    z = stepd_z(state.correct_total - r_correct, n_old, r_correct, cfg.window)
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return state, _signal(state, p < cfg.warn_level, p < cfg.detect_level, state.t)


# ---------------------------------------------------------------- DDM-OCI

@dataclass
class DdmOciState:
    t: int = 0
    n_pos: int = 0
    recall: float | None = None
    best: float = -math.inf
    warn_time: int | None = None


def ddm_oci_step(state: DdmOciState, y: int, yhat: int, cfg: BaselineConfig) -> tuple[DdmOciState, LayerOneSignal]:
    """DDM-style trigger on the decayed recall of the minority (positive) class."""
    state.t += 1
    if y != 1:
        return state, LayerOneSignal(SignalKind.NONE, None, state.warn_time)
    hit = 1.0 if yhat == 1 else 0.0
    state.n_pos += 1
    if state.recall is None:
        state.recall = hit
    else:
        state.recall = cfg.eta * state.recall + (1 - cfg.eta) * hit
    r = state.recall
    s = math.sqrt(r * (1 - r) * (1 - cfg.eta) / (1 + cfg.eta))
    if state.n_pos < cfg.min_instances:
        return state, LayerOneSignal(SignalKind.NONE, None, state.warn_time)
    if r + s > state.best:
        state.best = r + s
    warn = r + cfg.warn_level * s < state.best
    detect = r + cfg.detect_level * s < state.best
    return state, _signal(state, warn, detect, state.t)


# ---------------------------------------------------------------- adapter

_STATES = {"ddm": DdmState, "eddm": EddmState, "stepd": StepdState, "ddm_oci": DdmOciState}


class BaselineDetector:
    """Online wrapper with the Layer-I interface; resets after each detection."""

    def __init__(self, config: BaselineConfig):
        self.config = config
        self.state = _STATES[config.detector]()

    @property
    def warn_time(self) -> int | None:
        return self.state.warn_time

    def update(self, y: int, yhat: int) -> LayerOneSignal:
        cfg = self.config
        if cfg.detector == "ddm_oci":
            self.state, sig = ddm_oci_step(self.state, y, yhat, cfg)
        elif cfg.detector == "ddm":
            self.state, sig = ddm_step(self.state, y == yhat, cfg)
        elif cfg.detector == "eddm":
            self.state, sig = eddm_step(self.state, y == yhat, cfg)
        else:
            self.state, sig = stepd_step(self.state, y == yhat, cfg)
        if sig.kind is SignalKind.POTENTIAL_DRIFT:
            self.reset()
        return sig

    def reset(self) -> None:
        self.state = _STATES[self.config.detector](t=self.state.t)

    def skip(self, n: int = 1) -> None:
        self.state.t += n


def make_detector(name: str, **params):
    """Build an online detector by name (``lfr`` or one of the baselines)."""
    name = name.lower().replace("-", "_")
    if name == "lfr":
        table = params.pop("table", None)
        return LFRDetector(LfrConfig(**params), table)
    if name not in _STATES:
        raise ValueError(f"unknown detector {name!r}; choose from {', '.join(DETECTOR_NAMES)}")
    return BaselineDetector(BaselineConfig(name, **params))
