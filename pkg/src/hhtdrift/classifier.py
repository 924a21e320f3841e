"""Linear soft-margin SVM and anchored adaptive SVM (A-SVM).

Both trainers solve the same box-constrained dual with an SMO solver
(second-order working set selection). The anchored problem

    min_w  1/2 ||w - w_a||^2 + C * sum_i xi_i
    s.t.   y_i (w . x_i + b) >= 1 - xi_i,  xi_i >= 0

is reduced to a standard SVM in ``v = w - w_a`` whose per-sample margin
targets become ``1 - y_i w_a . x_i``. With ``w_a = 0`` this is the ordinary
soft-margin SVM, so one kernel serves both.

Labels are ``{0, 1}`` at the public boundary and ``{-1, +1}`` inside.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

__all__ = [
    "SvmModel",
    "AsvmProblem",
    "train_svm",
    "train_adaptive_svm",
    "predict",
    "predict_many",
    "decision_function",
    "zero_one_loss",
    "primal_objective",
    "save_model",
    "load_model",
]

_TAU = 1e-12


@dataclass(frozen=True)
class SvmModel:
    """Linear decision rule ``1 iff w . x + b >= 0``.

    ``degenerate`` is set when training saw a single class; the model is then
    a constant predictor of that class.
    """

    w: np.ndarray
    b: float
    c_reg: float = 1.0
    degenerate: bool = False

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.b):
            raise ValueError("model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class AsvmProblem:
    X: np.ndarray
    y: np.ndarray
    anchor: SvmModel
    c_reg: float = 1.0


@numba.njit(cache=True)
def _smo(Q, p, yy, C, tol, max_iter):
    """LIBSVM-style SMO for ``min 1/2 a'Qa + p'a, 0<=a<=C, y'a=0``.

    Returns (alpha, rho, n_iter).
    """
    n = p.shape[0]
    alpha = np.zeros(n)
    G = p.copy()
    it = 0
    while it < max_iter:
        # working set selection (WSS2, Fan et al. 2005)
        gmax = -np.inf
        i = -1
        for t in range(n):
            if yy[t] > 0:
                if alpha[t] < C:
                    if -G[t] >= gmax:
                        gmax = -G[t]
                        i = t
            else:
                if alpha[t] > 0:
                    if G[t] >= gmax:
                        gmax = G[t]
                        i = t
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if yy[t] > 0:
                if alpha[t] > 0:
                    grad_diff = gmax + G[t]
                    if G[t] >= gmax2:
                        gmax2 = G[t]
                    if grad_diff > 0 and i >= 0:
                        quad = Q[i, i] + Q[t, t] - 2.0 * yy[i] * Q[i, t]
                        if quad <= 0:
                            quad = _TAU
                        val = -(grad_diff * grad_diff) / quad
                        if val <= obj_min:
                            j = t
                            obj_min = val
            else:
                if alpha[t] < C:
                    grad_diff = gmax - G[t]
                    if -G[t] >= gmax2:
                        gmax2 = -G[t]
                    if grad_diff > 0 and i >= 0:
                        quad = Q[i, i] + Q[t, t] + 2.0 * yy[i] * Q[i, t]
                        if quad <= 0:
                            quad = _TAU
                        val = -(grad_diff * grad_diff) / quad
                        if val <= obj_min:
                            j = t
                            obj_min = val
        if gmax + gmax2 < tol or i < 0 or j < 0:
            break
        it += 1

        old_ai = alpha[i]
        old_aj = alpha[j]
        if yy[i] != yy[j]:
            quad = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
            if quad <= 0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
            if quad <= 0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s
        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        for t in range(n):
            G[t] += Q[t, i] * dai + Q[t, j] * daj

    # bias from free support vectors, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(n):
        yg = yy[t] * G[t]
        if alpha[t] >= C:
            if yy[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if yy[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        rho = sum_free / n_free
    else:
        rho = 0.5 * (ub + lb)
    return alpha, rho, it


def _as_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    y = np.asarray(y).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty sample set")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be in {0, 1}")
    return X, y.astype(np.int64)


def _constant_model(label: int, dim: int, c_reg: float) -> SvmModel:
    return SvmModel(np.zeros(dim), 1.0 if label == 1 else -1.0, c_reg, degenerate=True)


def _solve(X, y01, c_reg, anchor_w, budget, seed, tol):
    n, d = X.shape
    order = np.random.default_rng(seed).permutation(n)
    Xs = X[order]
    ys = np.where(y01[order] == 1, 1.0, -1.0)
    margins = 1.0 - ys * (Xs @ anchor_w)
    Z = Xs * ys[:, None]
    Q = Z @ Z.T
    max_iter = budget if budget is not None else 100 * n + 10_000
    alpha, rho, _ = _smo(Q, -margins, ys, float(c_reg), float(tol), int(max_iter))
    v = Z.T @ alpha
    return anchor_w + v, -rho


def train_svm(X, y, c_reg: float = 1.0, optimizer_budget: int | None = None,
              seed: int = 0, tol: float = 1e-4) -> SvmModel:
    """Train a linear soft-margin SVM with an unregularized bias.

    Parameters
    ----------
    X : array of shape (n, d)
    y : array of shape (n,), labels in {0, 1}
    c_reg : float
        Slack penalty C (> 0).
    optimizer_budget : int, optional
        Maximum number of SMO iterations.
    seed : int
        Seeds the order in which samples enter the solver.
    tol : float
        KKT violation tolerance.

    Returns
    -------
    SvmModel
        A constant predictor flagged ``degenerate`` if ``y`` holds one class.
    """
    X, y = _as_xy(X, y)
    if c_reg <= 0:
        raise ValueError("c_reg must be positive")
    classes = np.unique(y)
    if classes.size == 1:
        return _constant_model(int(classes[0]), X.shape[1], c_reg)
    w, b = _solve(X, y, c_reg, np.zeros(X.shape[1]), optimizer_budget, seed, tol)
    return SvmModel(w, b, c_reg)


def train_adaptive_svm(problem: AsvmProblem, optimizer_budget: int | None = None,
                       seed: int = 0, tol: float = 1e-4) -> SvmModel:
    """Adapt ``problem.anchor`` to the primary data by anchored regularization.

    With ``c_reg == 0`` the slacks are free, so the anchor is returned as is.
    """
    X, y = _as_xy(problem.X, problem.y)
    anchor = problem.anchor
    if anchor.dim != X.shape[1]:
        raise ValueError(f"anchor dimension {anchor.dim} != data dimension {X.shape[1]}")
    if problem.c_reg < 0:
        raise ValueError("c_reg must be non-negative")
    if problem.c_reg == 0:
        return SvmModel(anchor.w.copy(), anchor.b, 0.0)
    classes = np.unique(y)
    if classes.size == 1:
        return _constant_model(int(classes[0]), X.shape[1], problem.c_reg)
    w, b = _solve(X, y, problem.c_reg, np.asarray(anchor.w, dtype=float),
                  optimizer_budget, seed, tol)
    return SvmModel(w, b, problem.c_reg)


def decision_function(model: SvmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != model.dim:
        raise ValueError(f"expected {model.dim} features, got {X.shape[-1]}")
    return X @ model.w + model.b


def predict(model: SvmModel, x) -> int:
    """Label of a single sample; ties (score exactly 0) go to class 1."""
    return int(decision_function(model, x) >= 0.0)


def predict_many(model: SvmModel, X) -> np.ndarray:
    return (decision_function(model, X) >= 0.0).astype(np.int64)


def zero_one_loss(model: SvmModel, X, y) -> float:
    y = np.asarray(y).reshape(-1)
    if y.size == 0:
        raise ValueError("zero-one loss of an empty set is undefined")
    return float(np.mean(predict_many(model, X) != y))


def primal_objective(model: SvmModel, X, y, c_reg: float | None = None,
                     anchor: np.ndarray | None = None) -> float:
    """``1/2 ||w - w_a||^2 + C * sum(hinge)`` evaluated at ``model``."""
    X, y = _as_xy(X, y)
    c = model.c_reg if c_reg is None else c_reg
    wa = np.zeros(model.dim) if anchor is None else np.asarray(anchor, dtype=float)
    ys = np.where(y == 1, 1.0, -1.0)
    hinge = np.maximum(0.0, 1.0 - ys * decision_function(model, X))
    return float(0.5 * np.sum((model.w - wa) ** 2) + c * hinge.sum())


def save_model(model: SvmModel, path) -> None:
    lines = [str(model.dim), repr(model.b)] + [repr(float(v)) for v in model.w]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path, c_reg: float = 1.0) -> SvmModel:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty model file")
    d = int(lines[0])
    if len(lines) != d + 2:
        raise ValueError(f"{path}: expected {d} weights, found {len(lines) - 2}")
    return SvmModel(np.array([float(v) for v in lines[2:]]), float(lines[1]), c_reg)
