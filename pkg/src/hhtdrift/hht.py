"""Hierarchical drift detection: online Layer-I plus permutation-test Layer-II.

The detector predicts each sample before seeing its label, feeds the
(label, prediction) pair to Layer-I, and keeps only the most recent ``W``
samples. When Layer-I flags a potential drift, those ``W`` samples become the
``before`` segment, Layer-I is suspended for the next ``W`` samples (the
``after`` segment), and the permutation test decides whether to update the
classifier or discard the alarm. At most ``2W`` samples are ever held.

A single-layer runner with the same prequential loop serves plain LFR and the
baseline detectors.
"""

from __future__ import annotations

import collections
import csv
import dataclasses
import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .boundtable import BoundTable, default_table
from .classifier import AsvmProblem, SvmModel, train_adaptive_svm, train_svm
from .lfr import LayerOneSignal, LFRDetector, LfrConfig, SignalKind
from .permtest import Decision, PermutationConfig, PermutationOutcome, permutation_test
from .streams import LabeledSample, Stream

__all__ = [
    "Action",
    "DriftEvent",
    "HhtConfig",
    "HierarchicalDetector",
    "hht_step",
    "RunResult",
    "run_stream",
    "SingleLayerConfig",
    "run_single_layer",
    "EVENT_HEADER",
    "PREDICTION_HEADER",
    "write_events",
    "read_events",
    "write_predictions",
    "read_predictions",
]


class Action(str, enum.Enum):
    RETRAINED = "retrained"
    ADAPTED = "adapted"
    DISCARDED = "discarded"


@dataclass(frozen=True)
class DriftEvent:
    """One Layer-I alarm and what became of it.

    ``verdict`` is ``None`` for single-layer detectors, which act on every
    alarm. ``degenerate`` marks an update that could only produce a constant
    classifier because the training window held one class.
    """

    t_pot: int
    verdict: Decision | None
    t_confirmed: int
    action: Action
    p_value: float | None = None
    degenerate: bool = False


@dataclass
class HhtConfig:
    lfr: LfrConfig = field(default_factory=LfrConfig)
    perm: PermutationConfig = field(default_factory=PermutationConfig)
    mode: str = "retrain"
    c_reg: float = 1.0

    def __post_init__(self):
        if self.mode not in ("retrain", "adapt"):
            raise ValueError(f"mode must be 'retrain' or 'adapt', got {self.mode!r}")
        if self.c_reg <= 0:
            raise ValueError("c_reg must be positive")
        if self.lfr.min_retrain > self.buffer_capacity:
            raise ValueError("min_retrain cannot exceed the window")

    @property
    def buffer_capacity(self) -> int:
        return self.perm.window

    @property
    def min_retrain(self) -> int:
        return self.lfr.min_retrain


def _test_seed(seed: int, t_pot: int) -> int:
    return int(np.random.SeedSequence([seed, t_pot]).generate_state(1)[0])


def _update_model(model: SvmModel, X, y, mode: str, c_reg: float, seed: int) -> SvmModel:
    if mode == "adapt":
        return train_adaptive_svm(AsvmProblem(X, y, model, c_reg), seed=seed)
    return train_svm(X, y, c_reg=c_reg, seed=seed)


class HierarchicalDetector:
    """Stateful HLFR / A-HLFR loop over one stream.

    Parameters
    ----------
    config : HhtConfig
    model : SvmModel
        The initially deployed classifier.
    table : BoundTable, optional
        Layer-I bounds; the packaged default table when omitted.
    t0 : int
        Index of the last sample seen before the first call to :meth:`step`.
    history : iterable of (x, y), optional
        Samples already seen (e.g. the training prefix); the last ``W`` seed
        the ring buffer.
    """

    def __init__(self, config: HhtConfig, model: SvmModel, table: BoundTable | None = None,
                 t0: int = 0, history: Iterable | None = None):
        if model is None:
            raise ValueError("the detector needs an initial classifier")
        self.config = config
        self.model = model
        self.layer1 = LFRDetector(config.lfr, default_table() if table is None else table)
        self.layer1.state.t = t0
        self.t = t0
        w = config.buffer_capacity
        self.buffer: collections.deque = collections.deque(history or (), maxlen=w)
        self._before: tuple[np.ndarray, np.ndarray] | None = None
        self._t_pot: int | None = None
        self._collected = 0
        self.events: list[DriftEvent] = []
        self.outcomes: list[PermutationOutcome] = []

    @property
    def collecting(self) -> bool:
        return self._t_pot is not None

    def held_samples(self) -> int:
        return len(self.buffer) + (0 if self._before is None else len(self._before[1]))

    def _segment(self) -> tuple[np.ndarray, np.ndarray]:
        X = np.array([s[0] for s in self.buffer], dtype=float)
        y = np.array([s[1] for s in self.buffer], dtype=np.int64)
        return X, y

    def step(self, x, y: int) -> tuple[int, DriftEvent | None]:
        """Predict ``x``, then learn from ``y``. Returns ``(yhat, event)``."""
        self.t += 1
        x = np.asarray(x, dtype=float)
        yhat = int(float(x @ self.model.w) + self.model.b >= 0.0)
        self.buffer.append((x, int(y)))
        if self.collecting:
            self.layer1.skip()
            self._collected += 1
            if self._collected == self.config.buffer_capacity:
                return yhat, self._confirm()
            return yhat, None

        sig = self.layer1.update(int(y), yhat)
        if sig.kind is not SignalKind.POTENTIAL_DRIFT:
            return yhat, None
        if len(self.buffer) < self.config.buffer_capacity:
            # not enough history for a before segment
            ev = DriftEvent(sig.t_pot, None, self.t, Action.DISCARDED)
            self.events.append(ev)
            return yhat, ev
        self._before = self._segment()
        self._t_pot = sig.t_pot
        self._collected = 0
        return yhat, None

    def _confirm(self) -> DriftEvent:
        cfg = self.config
        t_pot = self._t_pot
        after = self._segment()
        seed = _test_seed(cfg.perm.seed, t_pot)
        perm_cfg = dataclasses.replace(cfg.perm, seed=seed)
        trainer = lambda X, y: train_svm(X, y, c_reg=cfg.c_reg)  # noqa: E731
        out = permutation_test(self._before, after, trainer, perm_cfg)
        out.t_pot = t_pot
        self.outcomes.append(out)
        degenerate = False
        if out.decision is Decision.TRUE_POSITIVE:
            self.model = _update_model(self.model, *after, cfg.mode, cfg.c_reg, seed)
            degenerate = self.model.degenerate
            action = Action.ADAPTED if cfg.mode == "adapt" else Action.RETRAINED
        else:
            action = Action.DISCARDED
        self.layer1.reset()
        self._before = None
        self._t_pot = None
        ev = DriftEvent(t_pot, out.decision, self.t, action, out.p_value, degenerate)
        self.events.append(ev)
        return ev


def hht_step(detector: HierarchicalDetector, sample: LabeledSample) -> tuple[HierarchicalDetector, int, DriftEvent | None]:
    """Functional wrapper around :meth:`HierarchicalDetector.step`."""
    yhat, ev = detector.step(sample.x, sample.y)
    return detector, yhat, ev


@dataclass
class RunResult:
    events: list[DriftEvent]
    t: np.ndarray
    y: np.ndarray
    yhat: np.ndarray

    @property
    def alarms(self) -> list[int]:
        """Every Layer-I alarm time, confirmed or not."""
        return [e.t_pot for e in self.events]

    @property
    def detections(self) -> list[int]:
        """Alarm times that led to a model update."""
        return [e.t_pot for e in self.events if e.action is not Action.DISCARDED]


def _initial_model(stream: Stream, prefix: int, c_reg: float, seed: int) -> tuple[SvmModel, Stream, Stream]:
    if prefix < 1:
        raise ValueError("the training prefix must hold at least one sample")
    head, rest = stream.split(prefix)
    if np.unique(head.y).size < 2:
        raise ValueError("the training prefix holds a single class")
    return train_svm(head.X, head.y, c_reg=c_reg, seed=seed), head, rest


def run_stream(config: HhtConfig, stream: Stream, initial_training_prefix: int = 200,
               table: BoundTable | None = None, seed: int = 0) -> RunResult:
    """Train on the prefix, then run the hierarchical detector prequentially."""
    model, head, rest = _initial_model(stream, initial_training_prefix, config.c_reg, seed)
    w = config.buffer_capacity
    history = list(zip(head.X[-w:], head.y[-w:].tolist()))
    det = HierarchicalDetector(config, model, table, t0=initial_training_prefix, history=history)
    n = len(rest)
    yhat = np.empty(n, dtype=np.int64)
    for k, (x, y) in enumerate(zip(rest.X, rest.y.tolist())):
        yhat[k], _ = det.step(x, y)
    return RunResult(det.events, np.arange(initial_training_prefix + 1, initial_training_prefix + n + 1),
                     rest.y.copy(), yhat)


class OnlineDetector(Protocol):
    warn_time: int | None

    def update(self, y: int, yhat: int) -> LayerOneSignal: ...

    def reset(self) -> None: ...

    def skip(self, n: int = 1) -> None: ...


@dataclass
class SingleLayerConfig:
    """Update policy for detectors that act on every alarm.

    On detection the model is relearned from the samples between the warning
    and the detection (at most ``window``). If those are fewer than
    ``min_retrain`` or hold one class, the detector is suspended and new
    samples are gathered until both conditions hold or ``window`` is reached.
    """

    window: int = 100
    min_retrain: int = 20
    mode: str = "retrain"
    c_reg: float = 1.0

    def __post_init__(self):
        if self.mode not in ("retrain", "adapt"):
            raise ValueError(f"mode must be 'retrain' or 'adapt', got {self.mode!r}")
        if not 1 <= self.min_retrain <= self.window:
            raise ValueError("need 1 <= min_retrain <= window")


def run_single_layer(detector: OnlineDetector, stream: Stream, config: SingleLayerConfig | None = None,
                     initial_training_prefix: int = 200, seed: int = 0) -> RunResult:
    """Prequential loop for LFR or a baseline detector without Layer-II."""
    config = config or SingleLayerConfig()
    model, _, rest = _initial_model(stream, initial_training_prefix, config.c_reg, seed)
    w = config.window
    t0 = initial_training_prefix
    recent: collections.deque = collections.deque(maxlen=w)
    events: list[DriftEvent] = []
    pending: list | None = None
    t_alarm = 0
    n = len(rest)
    yhat_log = np.empty(n, dtype=np.int64)

    def ready(samples) -> bool:
        return len(samples) >= config.min_retrain and len({s[1] for s in samples}) == 2

    def relearn(samples, t_pot, t_now):
        nonlocal model
        X = np.array([s[0] for s in samples])
        y = np.array([s[1] for s in samples], dtype=np.int64)
        model = _update_model(model, X, y, config.mode, config.c_reg, _test_seed(seed, t_pot))
        action = Action.ADAPTED if config.mode == "adapt" else Action.RETRAINED
        events.append(DriftEvent(t_pot, None, t_now, action, None, model.degenerate))
        detector.reset()

    for k, (x, y) in enumerate(zip(rest.X, rest.y.tolist())):
        t = t0 + k + 1
        yhat = int(float(x @ model.w) + model.b >= 0.0)
        yhat_log[k] = yhat
        recent.append((x, y))
        if pending is not None:
            detector.skip()
            pending.append((x, y))
            if ready(pending) or len(pending) >= w:
                relearn(pending, t_alarm, t)
                pending = None
            continue
        warn_time = detector.warn_time
        sig = detector.update(y, yhat)
        if sig.kind is not SignalKind.POTENTIAL_DRIFT:
            continue
        start = sig.warn_time if sig.warn_time is not None else (warn_time or t)
        span = min(t - start + 1, w, len(recent))
        samples = list(recent)[-span:]
        if ready(samples):
            relearn(samples, t, t)
        else:
            pending, t_alarm = samples, t
    return RunResult(events, np.arange(t0 + 1, t0 + n + 1), rest.y.copy(), yhat_log)


EVENT_HEADER = ["t_pot", "verdict", "t_confirmed", "action"]
PREDICTION_HEADER = ["t", "y", "yhat"]


def _comment_lines(comment: str | None) -> str:
    return "".join(f"# {line}\n" for line in comment.splitlines()) if comment else ""


def _read_rows(path, header: list[str]) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    if not rows or rows[0] != header:
        raise ValueError(f"{path}: expected header {','.join(header)}")
    for k, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {k} has {len(row)} fields, expected {len(header)}")
    return rows[1:]


def write_events(path, events: Sequence[DriftEvent], comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_comment_lines(comment))
        wr = csv.writer(fh)
        wr.writerow(EVENT_HEADER)
        for e in events:
            wr.writerow([e.t_pot, "" if e.verdict is None else e.verdict.value,
                         e.t_confirmed, e.action.value])


def read_events(path) -> list[DriftEvent]:
    out = []
    for k, row in enumerate(_read_rows(path, EVENT_HEADER), start=1):
        try:
            out.append(DriftEvent(int(row[0]), Decision(row[1]) if row[1] else None,
                                  int(row[2]), Action(row[3])))
        except ValueError as exc:
            raise ValueError(f"{path}: row {k}: {exc}") from None
    return out


def write_predictions(path, result: RunResult, comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_comment_lines(comment))
        wr = csv.writer(fh)
        wr.writerow(PREDICTION_HEADER)
        wr.writerows(zip(result.t.tolist(), result.y.tolist(), result.yhat.tolist()))


def read_predictions(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(t, y, yhat)`` integer arrays."""
    rows = _read_rows(path, PREDICTION_HEADER)
    try:
        data = np.array([[int(v) for v in row] for row in rows], dtype=np.int64).reshape(-1, 3)
    except ValueError:
        raise ValueError(f"{path}: non-integer entry in prediction log") from None
    if np.any((data[:, 1:] != 0) & (data[:, 1:] != 1)):
        raise ValueError(f"{path}: labels must be 0 or 1")
    return data[:, 0], data[:, 1], data[:, 2]
