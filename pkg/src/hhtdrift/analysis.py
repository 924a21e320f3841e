"""Error composition of cascaded / ensembled tests, Layer-I power, and the stability bound."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .boundtable import BoundTable, default_table
from .lfr import single_rate_exceedances

__all__ = [
    "ErrorRates",
    "AlphaResult",
    "BetaResult",
    "hht_alpha",
    "hht_beta",
    "ensemble_errors",
    "cascade_simulation",
    "PowerConfig",
    "PowerResult",
    "estimate_power",
    "write_power_csv",
    "StabilityBound",
    "theta_bound",
]


def _check_unit(**vals) -> None:
    for name, v in vals.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass
class ErrorRates:
    alpha1: float
    beta1: float
    alpha2: float
    beta2: float

    def __post_init__(self):
        _check_unit(alpha1=self.alpha1, beta1=self.beta1, alpha2=self.alpha2, beta2=self.beta2)


class AlphaResult(NamedTuple):
    alpha: float
    cap: float


class BetaResult(NamedTuple):
    beta: float
    lower: float
    upper: float


def hht_alpha(alpha1: float, alpha2: float) -> AlphaResult:
    """False-alarm rate of two tests in series (both must reject).

    Returns the product and the looser cap ``max(alpha1, alpha2)``.
    """
    _check_unit(alpha1=alpha1, alpha2=alpha2)
    return AlphaResult(alpha1 * alpha2, max(alpha1, alpha2))


def hht_beta(beta1: float, beta2: float) -> BetaResult:
    """Miss rate of two tests in series: a miss at either stage is a miss."""
    _check_unit(beta1=beta1, beta2=beta2)
    return BetaResult(beta1 + (1 - beta1) * beta2, beta1, beta1 + max(1 - beta1, beta2))


def ensemble_errors(alphas: Sequence[float], betas: Sequence[float]) -> tuple[float, float]:
    """Any-of voting over ``K`` independent detectors.

    Returns
    -------
    (alpha, beta) : tuple of float
        ``1 - prod(1 - alpha_k)`` and ``prod(beta_k)``.
    """
    a = np.asarray(alphas, dtype=float)
    b = np.asarray(betas, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("need at least one detector")
    if a.shape != b.shape:
        raise ValueError("alphas and betas must have equal length")
    if np.any((a < 0) | (a > 1)) or np.any((b < 0) | (b > 1)):
        raise ValueError("error rates must lie in [0, 1]")
    alpha = float(1.0 - np.prod(1.0 - a))
    beta = float(np.prod(b))
    assert alpha >= a.max() - 1e-12 and beta <= b.min() + 1e-12
    return alpha, beta


def cascade_simulation(reject_probs: Sequence[float], trials: int, rule: str,
                       seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo rejection rate of independent Bernoulli stages.

    ``rule`` is ``"all"`` (series, every stage must reject) or ``"any"``
    (ensemble vote). Returns ``(rate, standard_error)``.
    """
    probs = np.asarray(reject_probs, dtype=float)
    draws = np.random.default_rng(seed).random((trials, probs.size)) < probs
    if rule == "all":
        hit = draws.all(axis=1)
    elif rule == "any":
        hit = draws.any(axis=1)
    else:
        raise ValueError("rule must be 'all' or 'any'")
    rate = float(hit.mean())
    return rate, math.sqrt(max(rate * (1 - rate), 1.0 / trials) / trials)


@dataclass
class PowerConfig:
    """Pre-drift rate ``p`` for ``m`` steps, then ``q`` for ``k`` steps."""

    grid: Sequence[float] = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(1, 10)])
    m: int = 1000
    k: int = 200
    eta: float = 0.9
    significance: float = 0.0001
    runs: int = 100

    def __post_init__(self):
        if any(not 0 < v < 1 for v in self.grid):
            raise ValueError("grid values must lie in (0, 1)")
        if self.m < 1 or self.k < 1 or self.runs < 1:
            raise ValueError("m, k and runs must be >= 1")


@dataclass
class PowerResult:
    grid: np.ndarray
    power: np.ndarray  # power[i, j] at p = grid[i], q = grid[j]
    runs: int

    def standard_error(self) -> np.ndarray:
        return np.sqrt(self.power * (1 - self.power) / self.runs)


def _cell_seed(seed: int, i: int, j: int) -> list[int]:
    return [seed, i, j]


def estimate_power(config: PowerConfig, table: BoundTable | None = None, seed: int = 0,
                   n_jobs: int = 1) -> PowerResult:
    """Fraction of runs whose single-rate Layer-I test fires inside the post-change window.

    Each run restarts after every detection, like the online detector.
    Cells use seeds derived from ``(seed, i, j)``.
    """
    table = default_table() if table is None else table
    grid = np.asarray(config.grid, dtype=float)

    def cell(i, j):
        rng = np.random.default_rng(_cell_seed(seed, i, j))
        probs = np.concatenate([np.full(config.m, grid[i]), np.full(config.k, grid[j])])
        ind = rng.random((config.runs, probs.size)) < probs
        ex = single_rate_exceedances(ind, config.eta, config.significance, table, reset=True)
        return float(ex[:, config.m:].any(axis=1).mean())

    cells = [(i, j) for i in range(grid.size) for j in range(grid.size)]
    if n_jobs == 1:
        vals = [cell(i, j) for i, j in cells]
    else:
        from joblib import Parallel, delayed

        vals = Parallel(n_jobs=n_jobs)(delayed(cell)(i, j) for i, j in cells)
    power = np.array(vals).reshape(grid.size, grid.size)
    return PowerResult(grid, power, config.runs)


def write_power_csv(path, result: PowerResult) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["p", "q", "power"])
        for i, p in enumerate(result.grid):
            for j, q in enumerate(result.grid):
                wr.writerow([repr(float(p)), repr(float(q)), repr(float(result.power[i, j]))])


@dataclass
class StabilityBound:
    """Inputs of the false-negative bound for the permutation test.

    ``gamma_w`` defaults to ``1 / w``.
    """

    w: int
    eta: float
    gamma_w: float | None = None
    delta_cap: float = 0.0
    eps_var: float = 0.0

    def __post_init__(self):
        if self.gamma_w is None and self.w >= 1:
            self.gamma_w = 1.0 / self.w


def theta_bound(bound: StabilityBound) -> float:
    """``6 W gamma_W + sqrt(4 ln(4/eta) / W) + delta_cap + eps_var``."""
    if bound.w < 1:
        raise ValueError("w must be >= 1")
    if not 0 < bound.eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if bound.gamma_w < 0:
        raise ValueError("gamma_w must be non-negative")
    w = bound.w
    return 6 * w * bound.gamma_w + math.sqrt(4 * math.log(4 / bound.eta) / w) \
        + bound.delta_cap + bound.eps_var
