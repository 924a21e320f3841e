"""Synthetic drifting streams with known ground truth, plus CSV ingestion.

Time indices are 1-based. A drift time ``g`` is the index of the first sample
drawn from the new concept, so sample ``t`` belongs to segment
``#{g in drift_times : g <= t}``.

Generators
----------
sea
    Three features uniform on [0, 10]; ``y = 1`` iff ``x1 + x2 <= theta``,
    with one threshold per segment (cycled through ``thresholds``).
checkerboard
    Two features uniform on [0, 1]; XOR tiling of side ``tile`` rotated about
    the unit square's centre by a per-segment angle.
hyperplane
    ``d`` features uniform on [0, 1]; ``y = 1`` iff ``w(t) . (x - 0.5) >= 0``.
    The normal ``w`` rotates gradually inside a segment and jumps at drift
    times. Segment ``k`` reuses the base direction of segment ``k - 2`` when
    ``recurrent`` is set.
highdim
    Sparse binary features; ``y = 1`` iff any of a fixed keyword subset is
    present, with the rule inverted on odd segments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

__all__ = [
    "LabeledSample",
    "StreamSpec",
    "Stream",
    "StreamFormatError",
    "GENERATORS",
    "generate",
    "concept_labels",
    "segment_index",
    "read_csv",
    "write_csv",
    "read_ground_truth",
    "write_ground_truth",
]

GENERATORS = ("sea", "checkerboard", "hyperplane", "highdim", "csv")

_DEFAULT_DIMS = {"sea": 3, "checkerboard": 2, "hyperplane": 10, "highdim": 99}


class StreamFormatError(ValueError):
    """Malformed stream file."""


class LabeledSample(NamedTuple):
    t: int
    x: np.ndarray
    y: int


@dataclass
class StreamSpec:
    """Recipe for one stream.

    ``drift_times=None`` splits the stream into four equal segments.
    ``imbalance`` is the positive-class prior, either one value for all
    segments or one per segment; ``None`` leaves labels to the concept rule.
    """

    generator: str
    length: int
    drift_times: Sequence[int] | None = None
    imbalance: float | Sequence[float] | None = None
    seed: int = 0
    label_noise: float = 0.0
    params: dict = field(default_factory=dict)

    def resolved_drift_times(self) -> list[int]:
        if self.drift_times is None:
            return [self.length * k // 4 + 1 for k in (1, 2, 3)] if self.length >= 8 else []
        return [int(g) for g in self.drift_times]

    def n_segments(self) -> int:
        return len(self.resolved_drift_times()) + 1

    def validate(self) -> None:
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; choose from {GENERATORS}")
        if self.length < 0:
            raise ValueError("length must be non-negative")
        drifts = self.resolved_drift_times()
        if any(b <= a for a, b in zip(drifts, drifts[1:])):
            raise ValueError(f"drift times must be strictly increasing: {drifts}")
        for g in drifts:
            if g >= self.length:
                raise ValueError(f"drift time {g} >= stream length {self.length}")
            if g < 2:
                raise ValueError(f"drift time {g} leaves no sample in the first concept")
        d = self.params.get("d", _DEFAULT_DIMS.get(self.generator, 1))
        if d <= 0:
            raise ValueError(f"dimension must be positive, got {d}")
        priors = self._priors()
        if priors is not None and not all(0.0 < p < 1.0 for p in priors):
            raise ValueError(f"imbalance priors must lie in (0, 1): {priors}")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValueError("label_noise must lie in [0, 1)")

    def _priors(self) -> list[float] | None:
        if self.imbalance is None:
            return None
        if np.isscalar(self.imbalance):
            return [float(self.imbalance)] * self.n_segments()
        priors = [float(p) for p in self.imbalance]
        if len(priors) != self.n_segments():
            raise ValueError(f"need {self.n_segments()} imbalance priors, got {len(priors)}")
        return priors


@dataclass
class Stream:
    X: np.ndarray
    y: np.ndarray
    drift_times: list[int]
    spec: StreamSpec | None = None

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def dim(self) -> int:
        return int(self.X.shape[1])

    def __iter__(self) -> Iterator[LabeledSample]:
        for k in range(len(self)):
            yield LabeledSample(k + 1, self.X[k], int(self.y[k]))

    def split(self, n_prefix: int) -> tuple["Stream", "Stream"]:
        """Split into a training prefix and the remainder (indices keep their meaning)."""
        head = Stream(self.X[:n_prefix], self.y[:n_prefix],
                      [g for g in self.drift_times if g <= n_prefix], self.spec)
        tail = Stream(self.X[n_prefix:], self.y[n_prefix:],
                      [g for g in self.drift_times if g > n_prefix], self.spec)
        return head, tail


def segment_index(t: np.ndarray | int, drift_times: Sequence[int]) -> np.ndarray:
    """Segment of each 1-based index ``t``."""
    return np.searchsorted(np.asarray(drift_times, dtype=np.int64), t, side="right")


# -- concept rules ---------------------------------------------------------

def _sea_params(spec: StreamSpec) -> dict:
    thresholds = spec.params.get("thresholds", [8.0, 9.0, 7.0, 9.5])
    return {"thresholds": [float(v) for v in thresholds]}


def _checkerboard_params(spec: StreamSpec) -> dict:
    n = spec.n_segments()
    step = float(spec.params.get("angle_step", np.pi / 6))
    angles = spec.params.get("angles", [k * step for k in range(n)])
    return {"angles": [float(a) for a in angles], "tile": float(spec.params.get("tile", 0.5))}


def _hyperplane_params(spec: StreamSpec, rng: np.random.Generator) -> dict:
    d = int(spec.params.get("d", 10))
    n = spec.n_segments()
    recurrent = bool(spec.params.get("recurrent", True))
    shared = float(spec.params.get("shared", 0.0))
    n_base = 2 if recurrent else n
    common = rng.normal(size=d)
    common /= np.linalg.norm(common)
    bases, tangents = [], []
    for _ in range(n_base):
        r = rng.normal(size=d)
        r /= np.linalg.norm(r)
        u = np.sqrt(shared) * common + np.sqrt(1.0 - shared) * r
        u /= np.linalg.norm(u)
        v = rng.normal(size=d)
        v -= (v @ u) * u
        v /= np.linalg.norm(v)
        bases.append(u)
        tangents.append(v)
    idx = [k % n_base for k in range(n)]
    return {
        "d": d,
        "bases": np.array([bases[i] for i in idx]),
        "tangents": np.array([tangents[i] for i in idx]),
        "rotation": float(spec.params.get("rotation", 0.3)),
    }


def _highdim_params(spec: StreamSpec, rng: np.random.Generator) -> dict:
    d = int(spec.params.get("d", 99))
    n_keywords = int(spec.params.get("n_keywords", 10))
    keywords = np.sort(rng.choice(d, size=min(n_keywords, d), replace=False))
    return {"d": d, "density": float(spec.params.get("density", 0.05)), "keywords": keywords}


def _concept_params(spec: StreamSpec) -> dict:
    # concept parameters come from their own substream so that they do not
    # depend on how many samples are drawn
    rng = np.random.default_rng([spec.seed, 0])
    if spec.generator == "sea":
        return _sea_params(spec)
    if spec.generator == "checkerboard":
        return _checkerboard_params(spec)
    if spec.generator == "hyperplane":
        return _hyperplane_params(spec, rng)
    if spec.generator == "highdim":
        return _highdim_params(spec, rng)
    raise ValueError(f"generator {spec.generator!r} has no concept rule")


def _segment_bounds(spec: StreamSpec) -> list[tuple[int, int]]:
    edges = [1] + spec.resolved_drift_times() + [spec.length + 1]
    return list(zip(edges[:-1], edges[1:]))


def concept_labels(spec: StreamSpec, X: np.ndarray, t: np.ndarray,
                   params: dict | None = None) -> np.ndarray:
    """Noise-free label of each row of ``X`` under the concept active at ``t``."""
    params = _concept_params(spec) if params is None else params
    t = np.asarray(t, dtype=np.int64)
    seg = segment_index(t, spec.resolved_drift_times())
    if spec.generator == "sea":
        thr = np.array(params["thresholds"])[seg % len(params["thresholds"])]
        return (X[:, 0] + X[:, 1] <= thr).astype(np.int64)
    if spec.generator == "checkerboard":
        ang = np.array(params["angles"])[seg % len(params["angles"])]
        c, s = np.cos(ang), np.sin(ang)
        u = X[:, 0] - 0.5
        v = X[:, 1] - 0.5
        ur = c * u + s * v + 0.5
        vr = -s * u + c * v + 0.5
        tile = params["tile"]
        parity = (np.floor(ur / tile) + np.floor(vr / tile)).astype(np.int64) % 2
        return parity.astype(np.int64)
    if spec.generator == "hyperplane":
        bounds = _segment_bounds(spec)
        starts = np.array([a for a, _ in bounds])
        lengths = np.array([max(b - a, 1) for a, b in bounds])
        phase = params["rotation"] * (t - starts[seg]) / lengths[seg]
        w = (np.cos(phase)[:, None] * params["bases"][seg]
             + np.sin(phase)[:, None] * params["tangents"][seg])
        return (np.einsum("ij,ij->i", w, X - 0.5) >= 0.0).astype(np.int64)
    if spec.generator == "highdim":
        hit = (X[:, params["keywords"]].sum(axis=1) >= 1).astype(np.int64)
        return np.where(seg % 2 == 1, 1 - hit, hit)
    raise ValueError(f"generator {spec.generator!r} has no concept rule")


def _draw_features(spec: StreamSpec, params: dict, n: int, rng: np.random.Generator) -> np.ndarray:
    if spec.generator == "sea":
        return rng.uniform(0.0, 10.0, size=(n, 3))
    if spec.generator == "checkerboard":
        return rng.uniform(0.0, 1.0, size=(n, 2))
    if spec.generator == "hyperplane":
        return rng.uniform(0.0, 1.0, size=(n, params["d"]))
    if spec.generator == "highdim":
        return (rng.random((n, params["d"])) < params["density"]).astype(float)
    raise ValueError(f"unknown generator {spec.generator!r}")


def generate(spec: StreamSpec) -> Stream:
    """Draw the stream described by ``spec``; same spec and seed, same bytes."""
    spec.validate()
    if spec.generator == "csv":
        path = spec.params.get("path")
        if path is None:
            raise ValueError("csv generator needs params['path']")
        stream = read_csv(path)
        gt = spec.params.get("ground_truth")
        if gt is not None:
            stream.drift_times = read_ground_truth(gt)
        stream.spec = spec
        return stream

    params = _concept_params(spec)
    rng = np.random.default_rng([spec.seed, 1])
    n = spec.length
    d = params.get("d", _DEFAULT_DIMS[spec.generator])
    t = np.arange(1, n + 1)
    priors = spec._priors()
    if priors is None or n == 0:
        X = _draw_features(spec, params, n, rng).reshape(n, d)
        y = concept_labels(spec, X, t, params)
    else:
        seg = segment_index(t, spec.resolved_drift_times())
        want = (rng.random(n) < np.array(priors)[seg]).astype(np.int64)
        X = np.empty((n, d))
        y = np.empty(n, dtype=np.int64)
        todo = np.arange(n)
        for _ in range(10_000):
            if todo.size == 0:
                break
            cand = _draw_features(spec, params, todo.size, rng)
            lab = concept_labels(spec, cand, t[todo], params)
            ok = lab == want[todo]
            X[todo[ok]] = cand[ok]
            y[todo[ok]] = lab[ok]
            todo = todo[~ok]
        if todo.size:
            raise RuntimeError("could not realise the requested class priors by rejection sampling")
    if spec.label_noise > 0 and n:
        flip = rng.random(n) < spec.label_noise
        y = np.where(flip, 1 - y, y)
    return Stream(X, y.astype(np.int64), spec.resolved_drift_times(), spec)


# -- files ---------------------------------------------------------------------

def _comment_lines(comment: str | None) -> str:
    return "".join(f"# {line}\n" for line in comment.splitlines()) if comment else ""


def _uncommented(fh):
    return (line for line in fh if not line.startswith("#"))


def write_csv(stream: Stream, path, comment: str | None = None) -> None:
    """Header ``f1,...,fd,label``; values in round-trippable decimal.

    ``comment`` lines, if given, precede the header prefixed with ``#``.
    """
    with open(path, "w", newline="") as fh:
        fh.write(_comment_lines(comment))
        w = csv.writer(fh)
        w.writerow([f"f{j + 1}" for j in range(stream.dim)] + ["label"])
        for x, y in zip(stream.X, stream.y):
            w.writerow([repr(float(v)) for v in x] + [int(y)])


def read_csv(path, n_features: int | None = None) -> Stream:
    """Read a labeled stream; row ``k`` of the body becomes ``t = k``.

    Leading ``#`` comment lines are ignored.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(_uncommented(fh))
        try:
            header = next(reader)
        except StopIteration:
            raise StreamFormatError(f"{path}: empty file, expected a header row") from None
        if len(header) < 2 or header[-1].strip() != "label":
            raise StreamFormatError(f"{path}: header must name feature columns then 'label'")
        d = len(header) - 1
        if n_features is not None and n_features != d:
            raise StreamFormatError(f"{path}: expected {n_features} features, header has {d}")
        rows, labels = [], []
        for k, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != d + 1:
                raise StreamFormatError(f"{path}: row {k} has {len(row)} columns, expected {d + 1}")
            try:
                x = [float(v) for v in row[:-1]]
            except ValueError:
                raise StreamFormatError(f"{path}: row {k} has a non-numeric feature") from None
            lab = row[-1].strip()
            if lab not in ("0", "1"):
                raise StreamFormatError(f"{path}: row {k} label {lab!r} is not 0 or 1")
            rows.append(x)
            labels.append(int(lab))
    X = np.array(rows, dtype=float).reshape(len(rows), d)
    return Stream(X, np.array(labels, dtype=np.int64), [])


def write_ground_truth(path, drift_times: Sequence[int], comment: str | None = None) -> None:
    Path(path).write_text(_comment_lines(comment) + "".join(f"{int(g)}\n" for g in drift_times))


def read_ground_truth(path) -> list[int]:
    out = []
    for k, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise StreamFormatError(f"{path}: line {k} is not an integer drift index") from None
    return out
