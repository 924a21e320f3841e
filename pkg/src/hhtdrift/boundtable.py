"""Monte-Carlo quantile tables for the decayed-rate statistic under a stable concept.

Under the null hypothesis the decayed rate after ``N`` updates is

    R = (1 - eta) * sum_{i=1..N} eta^(N-i) I_i + eta^N * R0,   I_i ~ Bernoulli(p)

with ``R0 = 0.5`` (the detector's reset value). A table stores the two-sided
empirical quantiles ``(sig/2, 1 - sig/2)`` of ``R`` over a grid of
``(p, eta, sig, N)`` and answers queries by bilinear interpolation in
``(p, 1 - eta**N)`` on an exact ``(eta, sig)`` slice.
"""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "BoundKey",
    "BoundPair",
    "BoundTable",
    "R0",
    "DEFAULT_P_GRID",
    "DEFAULT_N_GRID",
    "DEFAULT_M_DRAWS",
    "simulate_statistic",
    "simulate_bounds",
    "build_table",
    "lookup",
    "save_table",
    "load_table",
    "default_table",
]

R0 = 0.5
DEFAULT_M_DRAWS = 100_000
DEFAULT_P_GRID = tuple(round(k / 100, 2) for k in range(1, 100))
DEFAULT_N_GRID = tuple(int(v) for v in np.unique(np.round(np.geomspace(1, 10_000, 16))))
DEFAULT_ETAS = (0.9,)
DEFAULT_SIGS = (0.0001, 0.01)

# beyond this many updates the remaining weight eta^L is below 1e-13
_TAIL_WEIGHT = 1e-13


@dataclass(frozen=True)
class BoundKey:
    p_star: float
    eta: float
    significance: float
    n_star: float

    def __post_init__(self):
        for name in ("p_star", "eta", "significance"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.n_star < 1:
            raise ValueError(f"n_star must be >= 1, got {self.n_star}")


class BoundPair(NamedTuple):
    lower: float
    upper: float
    clamped: bool = False

    def contains(self, r: float, tol: float = 1e-9) -> bool:
        return self.lower - tol <= r <= self.upper + tol


def _key_rng(seed: int, p: float, eta: float) -> np.random.Generator:
    # keyed by value, not grid position, so duplicated grid points agree
    return np.random.default_rng([int(seed), int(round(p * 1e6)), int(round(eta * 1e9))])


def _truncation(eta: float) -> int:
    return max(1, math.ceil(math.log(_TAIL_WEIGHT) / math.log(eta)))


def simulate_statistic(p: float, eta: float, n_values: Sequence[int], m_draws: int,
                       seed: int) -> np.ndarray:
    """Draws of ``R`` after each ``N`` in ``n_values``; shape ``(len(n_values), m_draws)``.

    All ``N`` share sample paths. Paths run for at most ``L`` steps with
    ``eta^L < 1e-13``; for longer ``N`` the older terms are replaced by their
    expectation, which moves ``R`` by less than ``eta^L``.
    """
    n_values = [int(n) for n in n_values]
    if min(n_values) < 1:
        raise ValueError("N must be >= 1")
    rng = _key_rng(seed, p, eta)
    trunc = _truncation(eta)
    steps = min(max(n_values), trunc)
    want = {n: k for k, n in enumerate(n_values)}
    out = np.empty((len(n_values), m_draws))
    r = np.full(m_draws, R0)
    for i in range(1, steps + 1):
        hits = rng.random(m_draws) < p
        r = eta * r + (1.0 - eta) * hits
        if i in want:
            out[want[i]] = r
    tail = eta ** steps
    for n, k in want.items():
        if n > steps:
            older = p + eta ** (n - steps) * (R0 - p)
            out[k] = r - tail * R0 + tail * older
    return out


def _quantile_pairs(draws: np.ndarray, sigs: Sequence[float]) -> np.ndarray:
    qs = []
    for s in sigs:
        qs.extend([s / 2.0, 1.0 - s / 2.0])
    vals = np.quantile(draws, qs, axis=-1, method="inverted_cdf")
    vals = np.clip(vals, 0.0, 1.0)
    # (2*n_sig, n_n) -> (n_sig, n_n, 2)
    return vals.reshape(len(sigs), 2, -1).transpose(0, 2, 1)


def simulate_bounds(key: BoundKey, m_draws: int = DEFAULT_M_DRAWS, seed: int = 0) -> BoundPair:
    """Two-sided Monte-Carlo bounds of ``R`` for one key."""
    if m_draws < 1000:
        raise ValueError("m_draws must be at least 1000")
    n = int(round(key.n_star))
    draws = simulate_statistic(key.p_star, key.eta, [n], m_draws, seed)
    lo, hi = _quantile_pairs(draws, [key.significance])[0, 0]
    return BoundPair(float(lo), float(hi))


def _group_bounds(p, eta, sigs, ns, m_draws, seed):
    draws = simulate_statistic(p, eta, ns, m_draws, seed)
    return _quantile_pairs(draws, sigs)


@dataclass
class BoundTable:
    """Dense bound grid; ``values[e, s, i, j] = (lower, upper)`` at
    ``(eta_list[e], sig_list[s], p_grid[i], n_grid[j])``."""

    p_grid: np.ndarray
    eta_list: np.ndarray
    sig_list: np.ndarray
    n_grid: np.ndarray
    values: np.ndarray
    m_draws: int
    seed: int

    def __post_init__(self):
        self.p_grid = np.asarray(self.p_grid, dtype=float)
        self.eta_list = np.asarray(self.eta_list, dtype=float)
        self.sig_list = np.asarray(self.sig_list, dtype=float)
        self.n_grid = np.asarray(self.n_grid, dtype=float)
        self._slices: dict = {}

    def _index(self, arr: np.ndarray, v: float, name: str) -> int:
        hit = np.nonzero(np.isclose(arr, v, rtol=0, atol=1e-12))[0]
        if hit.size == 0:
            raise KeyError(f"{name}={v} not in table (available: {arr.tolist()})")
        return int(hit[0])

    def slice(self, eta: float, sig: float) -> "BoundSlice":
        key = (float(eta), float(sig))
        sl = self._slices.get(key)
        if sl is None:
            e = self._index(self.eta_list, eta, "eta")
            s = self._index(self.sig_list, sig, "significance")
            sl = BoundSlice(self.p_grid, self.n_grid, self.values[e, s], self.eta_list[e])
            self._slices[key] = sl
        return sl

    def lookup(self, p: float, eta: float, sig: float, n: float) -> BoundPair:
        return self.slice(eta, sig).bounds(p, n)

    def lookup_many(self, p, eta: float, sig: float, n) -> tuple[np.ndarray, np.ndarray]:
        return self.slice(eta, sig).bounds_many(p, n)

    def keys(self):
        for e, eta in enumerate(self.eta_list):
            for s, sig in enumerate(self.sig_list):
                for i, p in enumerate(self.p_grid):
                    for j, n in enumerate(self.n_grid):
                        yield (e, s, i, j), BoundKey(float(p), float(eta), float(sig), float(n))


class BoundSlice:
    """Interpolator over one ``(eta, sig)`` slice.

    Interpolation is bilinear in ``p`` and in ``u = 1 - eta**N``. The largest
    attainable statistic after ``N`` steps, ``1 - eta**N / 2``, is linear in
    ``u``, so bounds pinned at that edge interpolate exactly instead of being
    undercut between sparse ``N`` nodes.
    """

    def __init__(self, p_grid: np.ndarray, n_grid: np.ndarray, values: np.ndarray, eta: float):
        self.p_grid = np.asarray(p_grid, dtype=float)
        self.n_grid = np.asarray(n_grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.eta = float(eta)
        self.u_grid = 1.0 - self.eta ** self.n_grid
        self._p = self.p_grid.tolist()
        self._u = self.u_grid.tolist()
        self._n_lo, self._n_hi = self.n_grid[0], self.n_grid[-1]
        self._lo = self.values[..., 0].tolist()
        self._hi = self.values[..., 1].tolist()

    @staticmethod
    def _bracket(grid: list, v: float) -> tuple[int, float]:
        if v <= grid[0]:
            return 0, 0.0
        if v >= grid[-1]:
            return max(len(grid) - 2, 0), (1.0 if len(grid) > 1 else 0.0)
        k = bisect.bisect_right(grid, v) - 1
        return k, (v - grid[k]) / (grid[k + 1] - grid[k])

    def bounds(self, p: float, n: float) -> BoundPair:
        clamped = not (self._p[0] <= p <= self._p[-1] and self._n_lo <= n <= self._n_hi)
        n = min(max(n, self._n_lo), self._n_hi)
        i, a = self._bracket(self._p, p)
        j, b = self._bracket(self._u, 1.0 - self.eta ** n)
        i1 = min(i + 1, len(self._p) - 1)
        j1 = min(j + 1, len(self._u) - 1)
        lo, hi = self._lo, self._hi
        w00 = (1 - a) * (1 - b)
        w01 = (1 - a) * b
        w10 = a * (1 - b)
        w11 = a * b
        low = w00 * lo[i][j] + w01 * lo[i][j1] + w10 * lo[i1][j] + w11 * lo[i1][j1]
        up = w00 * hi[i][j] + w01 * hi[i][j1] + w10 * hi[i1][j] + w11 * hi[i1][j1]
        return BoundPair(min(max(low, 0.0), 1.0), min(max(up, 0.0), 1.0), clamped)

    def bounds_many(self, p, n) -> tuple[np.ndarray, np.ndarray]:
        p = np.clip(np.asarray(p, dtype=float), self.p_grid[0], self.p_grid[-1])
        n = np.clip(np.asarray(n, dtype=float), self._n_lo, self._n_hi)
        u = 1.0 - self.eta ** n
        ug = self.u_grid
        i = np.clip(np.searchsorted(self.p_grid, p, side="right") - 1, 0, max(len(self.p_grid) - 2, 0))
        j = np.clip(np.searchsorted(ug, u, side="right") - 1, 0, max(len(ug) - 2, 0))
        i1 = np.minimum(i + 1, len(self.p_grid) - 1)
        j1 = np.minimum(j + 1, len(ug) - 1)
        dp = self.p_grid[i1] - self.p_grid[i]
        du = ug[j1] - ug[j]
        a = np.clip(np.divide(p - self.p_grid[i], dp, out=np.zeros_like(p), where=dp > 0), 0.0, 1.0)
        b = np.clip(np.divide(u - ug[j], du, out=np.zeros_like(u), where=du > 0), 0.0, 1.0)
        v = self.values
        out = ((1 - a) * (1 - b))[..., None] * v[i, j] + ((1 - a) * b)[..., None] * v[i, j1] \
            + (a * (1 - b))[..., None] * v[i1, j] + (a * b)[..., None] * v[i1, j1]
        out = np.clip(out, 0.0, 1.0)
        return out[..., 0], out[..., 1]


def _check_grid(name: str, grid: Sequence[float]) -> list[float]:
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError(f"{name} grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"{name} grid must be sorted ascending")
    return grid


def build_table(p_grid: Sequence[float] = DEFAULT_P_GRID,
                eta_list: Sequence[float] = DEFAULT_ETAS,
                significance_list: Sequence[float] = DEFAULT_SIGS,
                n_grid: Sequence[int] = DEFAULT_N_GRID,
                m_draws: int = DEFAULT_M_DRAWS,
                seed: int = 0,
                n_jobs: int = 1) -> BoundTable:
    """Simulate bounds over the full grid cross-product.

    Each ``(p, eta)`` pair draws its own seeded sample paths; every
    significance level and ``N`` on that pair reads the same draws, so the
    result does not depend on ``n_jobs`` or on grid order.
    """
    p_grid = _check_grid("p", p_grid)
    eta_list = _check_grid("eta", eta_list)
    sigs = _check_grid("significance", significance_list)
    ns = [int(round(n)) for n in _check_grid("N", n_grid)]
    for p in p_grid:
        BoundKey(p, eta_list[0], sigs[0], ns[0])
    for eta in eta_list:
        BoundKey(p_grid[0], eta, sigs[0], ns[0])
    for s in sigs:
        BoundKey(p_grid[0], eta_list[0], s, ns[0])
    if m_draws < 1000:
        raise ValueError("m_draws must be at least 1000")

    jobs = [(p, eta) for eta in eta_list for p in p_grid]
    if n_jobs == 1:
        results = [_group_bounds(p, eta, sigs, ns, m_draws, seed) for p, eta in jobs]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(
            delayed(_group_bounds)(p, eta, sigs, ns, m_draws, seed) for p, eta in jobs)
    values = np.empty((len(eta_list), len(sigs), len(p_grid), len(ns), 2))
    for (p, eta), res in zip(jobs, results):
        values[eta_list.index(eta), :, p_grid.index(p)] = res
        # duplicated grid values share draws; fill every occurrence
        for i, pv in enumerate(p_grid):
            if pv == p:
                values[eta_list.index(eta), :, i] = res
    return BoundTable(np.array(p_grid), np.array(eta_list), np.array(sigs),
                      np.array(ns, dtype=float), values, m_draws, seed)


def lookup(table: BoundTable, key: BoundKey) -> BoundPair:
    """Interpolated bounds; ``clamped`` is set when ``(p, N)`` fell outside the grid."""
    return table.lookup(key.p_star, key.eta, key.significance, key.n_star)


def save_table(table: BoundTable, path) -> None:
    rows = []
    for (e, s, i, j), key in table.keys():
        lo, hi = table.values[e, s, i, j]
        rows.append((key.p_star, key.eta, key.significance, key.n_star, lo, hi))
    rows.sort(key=lambda r: r[:4])
    with open(path, "w") as fh:
        fh.write(f"# m_draws={table.m_draws} seed={table.seed}\n")
        fh.write("p,eta,sig,n,lower,upper\n")
        for p, eta, sig, n, lo, hi in rows:
            fh.write(f"{p!r},{eta!r},{sig!r},{int(n)},{float(lo)!r},{float(hi)!r}\n")


def load_table(path) -> BoundTable:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing '# m_draws=... seed=...' comment line")
    meta = dict(tok.split("=", 1) for tok in text[0][1:].split())
    if text[1].strip() != "p,eta,sig,n,lower,upper":
        raise ValueError(f"{path}: unexpected header {text[1]!r}")
    rows = []
    for k, line in enumerate(text[2:], start=3):
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}: line {k} has {len(parts)} fields, expected 6")
        rows.append([float(v) for v in parts])
    arr = np.array(rows)
    ps, etas, sigs, ns = (np.unique(arr[:, c]) for c in range(4))
    values = np.full((len(etas), len(sigs), len(ps), len(ns), 2), np.nan)
    for p, eta, sig, n, lo, hi in rows:
        values[np.searchsorted(etas, eta), np.searchsorted(sigs, sig),
               np.searchsorted(ps, p), np.searchsorted(ns, n)] = (lo, hi)
    if np.isnan(values).any():
        raise ValueError(f"{path}: table is not a complete grid")
    return BoundTable(ps, etas, sigs, ns, values, int(meta["m_draws"]), int(meta["seed"]))


DEFAULT_TABLE_FILE = "boundtable_default.csv"


@functools.lru_cache(maxsize=1)
def default_table() -> BoundTable:
    """The shipped table (eta 0.9; significance 0.01 and 0.0001)."""
    ref = resources.files("hhtdrift") / "data" / DEFAULT_TABLE_FILE
    with resources.as_file(ref) as path:
        return load_table(path)
