"""Linear Four Rates: the online Layer-I test.

Four confusion-matrix rates (tpr, tnr, ppv, npv) are tracked as exponentially
decayed averages of the correctness indicator, each updated only on samples
that condition it. Every step compares each decayed rate against Monte-Carlo
bounds looked up at the rate's empirical value and effective sample count.

The confusion matrix is indexed ``conf[yhat][y]`` and starts at all ones.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .boundtable import R0, BoundTable, default_table

__all__ = [
    "RATE_KINDS",
    "LfrConfig",
    "LfrState",
    "SignalKind",
    "LayerOneSignal",
    "rate_affected",
    "rate_counts",
    "lfr_init",
    "lfr_step",
    "lfr_reset",
    "LFRDetector",
    "single_rate_exceedances",
    "TRACE_HEADER",
    "trace_row",
]

RATE_KINDS = ("tpr", "tnr", "ppv", "npv")

# bilinear interpolation can land a hair off an atom of the discrete statistic
_EXCEED_TOL = 1e-9


def rate_affected(kind: str, y: int, yhat: int) -> bool:
    """tpr/tnr condition on the true label, ppv/npv on the prediction."""
    if kind == "tpr":
        return y == 1
    if kind == "tnr":
        return y == 0
    if kind == "ppv":
        return yhat == 1
    if kind == "npv":
        return yhat == 0
    raise ValueError(f"unknown rate kind {kind!r}")


def rate_counts(kind: str, conf) -> tuple[int, int]:
    """``(hits, N)`` of a rate from the confusion matrix ``conf[yhat][y]``."""
    if kind == "tpr":
        return conf[1][1], conf[0][1] + conf[1][1]
    if kind == "tnr":
        return conf[0][0], conf[0][0] + conf[1][0]
    if kind == "ppv":
        return conf[1][1], conf[1][0] + conf[1][1]
    if kind == "npv":
        return conf[0][0], conf[0][0] + conf[0][1]
    raise ValueError(f"unknown rate kind {kind!r}")


@dataclass
class LfrConfig:
    eta: float | tuple[float, float, float, float] = 0.9
    warn_sig: float = 0.01
    detect_sig: float = 0.0001
    min_retrain: int = 20

    def __post_init__(self):
        etas = self.etas
        if not all(0.0 < e < 1.0 for e in etas):
            raise ValueError(f"decay factors must lie in (0, 1): {etas}")
        if not 0.0 < self.detect_sig < self.warn_sig < 1.0:
            raise ValueError("need 0 < detect_sig < warn_sig < 1")
        if self.min_retrain < 1:
            raise ValueError("min_retrain must be >= 1")

    @property
    def etas(self) -> tuple[float, ...]:
        if np.isscalar(self.eta):
            return (float(self.eta),) * 4
        etas = tuple(float(e) for e in self.eta)
        if len(etas) != 4:
            raise ValueError("eta must be a scalar or one value per rate")
        return etas


@dataclass
class LfrState:
    r: list = field(default_factory=lambda: [R0] * 4)
    p_hat: list = field(default_factory=lambda: [0.5] * 4)
    conf: list = field(default_factory=lambda: [[1, 1], [1, 1]])
    warn_time: int | None = None
    t: int = 0
    # cached (lower, upper) bounds per rate; refreshed when the rate is touched
    warn_bd: list = field(default_factory=lambda: [None] * 4)
    detect_bd: list = field(default_factory=lambda: [None] * 4)

    def n_star(self, k: int) -> int:
        return rate_counts(RATE_KINDS[k], self.conf)[1]


class SignalKind(str, enum.Enum):
    NONE = "none"
    WARNING_STARTED = "warning_started"
    WARNING_CLEARED = "warning_cleared"
    POTENTIAL_DRIFT = "potential_drift"


class LayerOneSignal(NamedTuple):
    kind: SignalKind
    t_pot: int | None = None
    warn_time: int | None = None


def lfr_init(t: int = 0) -> LfrState:
    return LfrState(t=t)


def lfr_reset(state: LfrState) -> LfrState:
    """Fresh state that keeps only the time index."""
    return LfrState(t=state.t)


def _outside(r: float, bd) -> bool:
    return r < bd[0] - _EXCEED_TOL or r > bd[1] + _EXCEED_TOL


def lfr_step(state: LfrState, y: int, yhat: int, config: LfrConfig,
             table: BoundTable | None = None) -> tuple[LfrState, LayerOneSignal]:
    """Consume one ``(y, yhat)`` pair. ``state`` is updated in place and returned.

    On ``POTENTIAL_DRIFT`` the caller is expected to reset via :func:`lfr_reset`.
    """
    if y not in (0, 1) or yhat not in (0, 1):
        raise ValueError(f"labels must be 0 or 1, got y={y!r}, yhat={yhat!r}")
    table = default_table() if table is None else table
    etas = config.etas
    state.t += 1
    state.conf[yhat][y] += 1
    correct = 1.0 if y == yhat else 0.0
    for k, kind in enumerate(RATE_KINDS):
        touched = rate_affected(kind, y, yhat)
        if touched:
            state.r[k] = etas[k] * state.r[k] + (1.0 - etas[k]) * correct
        if touched or state.warn_bd[k] is None:
            hits, n = rate_counts(kind, state.conf)
            p_hat = hits / n
            state.p_hat[k] = p_hat
            state.warn_bd[k] = table.slice(etas[k], config.warn_sig).bounds(p_hat, n)
            state.detect_bd[k] = table.slice(etas[k], config.detect_sig).bounds(p_hat, n)

    warn_hit = any(_outside(state.r[k], state.warn_bd[k]) for k in range(4))
    detect_hit = any(_outside(state.r[k], state.detect_bd[k]) for k in range(4))

    kind = SignalKind.NONE
    if warn_hit and state.warn_time is None:
        state.warn_time = state.t
        kind = SignalKind.WARNING_STARTED
    elif not warn_hit and state.warn_time is not None:
        state.warn_time = None
        kind = SignalKind.WARNING_CLEARED
    if detect_hit:
        return state, LayerOneSignal(SignalKind.POTENTIAL_DRIFT, state.t, state.warn_time)
    return state, LayerOneSignal(kind, None, state.warn_time)


class LFRDetector:
    """Stateful wrapper that resets itself after every potential drift."""

    def __init__(self, config: LfrConfig | None = None, table: BoundTable | None = None):
        self.config = config or LfrConfig()
        self.table = default_table() if table is None else table
        self.state = lfr_init()

    @property
    def warn_time(self) -> int | None:
        return self.state.warn_time

    @property
    def t(self) -> int:
        return self.state.t

    def update(self, y: int, yhat: int) -> LayerOneSignal:
        self.state, sig = lfr_step(self.state, y, yhat, self.config, self.table)
        if sig.kind is SignalKind.POTENTIAL_DRIFT:
            self.state = lfr_reset(self.state)
        return sig

    def reset(self) -> None:
        self.state = lfr_reset(self.state)

    def skip(self, n: int = 1) -> None:
        """Advance the clock without testing (Layer-I suspended)."""
        self.state.t += n


def single_rate_exceedances(indicators: np.ndarray, eta: float, sig: float,
                            table: BoundTable | None = None, reset: bool = True) -> np.ndarray:
    """Run the single-rate test on a batch of correctness streams.

    ``indicators`` has shape ``(runs, T)``. Returns a boolean array of the
    same shape marking steps where the decayed rate left its bounds. With
    ``reset`` the rate and counts restart after each exceedance, as the
    detector does after a potential drift.
    """
    table = default_table() if table is None else table
    ind = np.asarray(indicators, dtype=float)
    if ind.ndim == 1:
        ind = ind[None, :]
    runs, T = ind.shape
    sl = table.slice(eta, sig)
    r = np.full(runs, R0)
    hits = np.ones(runs)
    n = np.full(runs, 2.0)
    out = np.zeros((runs, T), dtype=bool)
    for k in range(T):
        x = ind[:, k]
        r = eta * r + (1.0 - eta) * x
        hits += x
        n += 1.0
        lo, hi = sl.bounds_many(hits / n, n)
        ex = (r < lo - _EXCEED_TOL) | (r > hi + _EXCEED_TOL)
        out[:, k] = ex
        if reset and ex.any():
            r[ex] = R0
            hits[ex] = 1.0
            n[ex] = 2.0
    return out


TRACE_HEADER = ["t"] + [f"R_{k}" for k in RATE_KINDS] + [f"Phat_{k}" for k in RATE_KINDS] + ["signal"]


def trace_row(state: LfrState, signal: LayerOneSignal) -> list:
    return [state.t, *(f"{v:.6f}" for v in state.r), *(f"{v:.6f}" for v in state.p_hat),
            signal.kind.value]
