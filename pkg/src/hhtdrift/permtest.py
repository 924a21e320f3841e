"""Layer-II permutation test.

A classifier trained on the segment before a suspected change and tested on
the segment after it should do unusually badly if the concept changed. The
test ranks that ordered-split loss among losses of random balanced splits of
the pooled samples.
"""

from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classifier import SvmModel, train_svm, zero_one_loss

__all__ = [
    "Decision",
    "PermutationConfig",
    "PermutationOutcome",
    "permutation_test",
    "exact_p_value",
    "p_value_from_losses",
    "OUTCOME_HEADER",
    "write_outcomes",
]

Trainer = Callable[[np.ndarray, np.ndarray], SvmModel]


class Decision(str, enum.Enum):
    TRUE_POSITIVE = "true_positive"
    FALSE_POSITIVE = "false_positive"


@dataclass
class PermutationConfig:
    """``window`` samples per segment, ``trials`` random splits, level ``significance``.

    With ``stop_when_decided`` the trial loop ends as soon as enough trial
    losses reach ``e_ord`` to rule out a true positive; the decision is
    unchanged but the reported p-value is then a lower bound.
    """

    window: int = 100
    trials: int = 1000
    significance: float = 0.05
    seed: int = 0
    stop_when_decided: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.significance < 1.0:
            raise ValueError("significance must lie in (0, 1)")


@dataclass
class PermutationOutcome:
    e_ord: float
    e_perm: list[float]
    p_value: float
    decision: Decision
    degenerate_fits: int = 0
    stopped_early: bool = False
    t_pot: int | None = field(default=None, compare=False)


def p_value_from_losses(e_ord: float, e_perm: Sequence[float]) -> float:
    e_perm = np.asarray(e_perm, dtype=float)
    return float((1 + np.count_nonzero(e_ord <= e_perm)) / (1 + e_perm.size))


def _as_segment(seg) -> tuple[np.ndarray, np.ndarray]:
    X, y = seg
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("segment must be (X of shape (n, d), y of shape (n,))")
    return X, y


def _split_loss(trainer: Trainer, X, y, train_idx, test_idx) -> tuple[float, bool]:
    model = trainer(X[train_idx], y[train_idx])
    return zero_one_loss(model, X[test_idx], y[test_idx]), model.degenerate


def _trial(trainer: Trainer, X, y, w: int, seed: int, i: int) -> tuple[float, bool]:
    perm = np.random.default_rng([seed, i]).permutation(2 * w)
    return _split_loss(trainer, X, y, perm[:w], perm[w:])


def permutation_test(before, after, trainer: Trainer | None = None,
                     config: PermutationConfig | None = None) -> PermutationOutcome:
    """Test whether the ordered split is unusually hard to generalise across.

    Parameters
    ----------
    before, after : tuple of (X, y)
        The ``window`` samples before and after the suspected change.
    trainer : callable, optional
        ``trainer(X, y) -> SvmModel``; defaults to the linear SVM with ``C=1``.
    config : PermutationConfig, optional

    Returns
    -------
    PermutationOutcome
        ``decision`` is ``TRUE_POSITIVE`` iff ``p_value <= significance``.

    Notes
    -----
    Trial ``i`` draws its split from ``(seed, i)`` alone, so the outcome does
    not depend on evaluation order or ``n_jobs``.
    """
    config = config or PermutationConfig()
    trainer = trainer or train_svm
    Xb, yb = _as_segment(before)
    Xa, ya = _as_segment(after)
    w = config.window
    if Xb.shape[0] != w or Xa.shape[0] != w:
        raise ValueError(f"segments must hold exactly {w} samples, "
                         f"got {Xb.shape[0]} and {Xa.shape[0]}")
    f_ord = trainer(Xb, yb)
    e_ord = zero_one_loss(f_ord, Xa, ya)
    degenerate = int(f_ord.degenerate)
    X = np.vstack([Xb, Xa])
    y = np.concatenate([yb, ya])

    # numerator (1 + k) above this rules out a true positive
    k_max = config.significance * (1 + config.trials) - 1
    e_perm: list[float] = []
    stopped = False
    if config.n_jobs != 1 and not config.stop_when_decided:
        from joblib import Parallel, delayed

        res = Parallel(n_jobs=config.n_jobs)(
            delayed(_trial)(trainer, X, y, w, config.seed, i) for i in range(config.trials))
        e_perm = [e for e, _ in res]
        degenerate += sum(d for _, d in res)
    else:
        k = 0
        for i in range(config.trials):
            e, d = _trial(trainer, X, y, w, config.seed, i)
            e_perm.append(e)
            degenerate += d
            k += e_ord <= e
            if config.stop_when_decided and k > k_max:
                stopped = i + 1 < config.trials
                break

    if stopped:
        # pretend the untried splits all lost less than e_ord: a lower bound
        p = (1 + sum(e_ord <= e for e in e_perm)) / (1 + config.trials)
    else:
        p = p_value_from_losses(e_ord, e_perm)
    decision = Decision.TRUE_POSITIVE if p <= config.significance else Decision.FALSE_POSITIVE
    return PermutationOutcome(e_ord, e_perm, p, decision, degenerate, stopped)


def exact_p_value(before, after, trainer: Trainer | None = None) -> float:
    """Fraction of all balanced splits (ordered one included) whose loss is >= ``e_ord``.

    Enumerates ``C(2W, W)`` splits, so only usable for tiny windows.
    """
    trainer = trainer or train_svm
    Xb, yb = _as_segment(before)
    Xa, ya = _as_segment(after)
    w = Xb.shape[0]
    if Xa.shape[0] != w:
        raise ValueError("segments must have equal length")
    e_ord = zero_one_loss(trainer(Xb, yb), Xa, ya)
    X = np.vstack([Xb, Xa])
    y = np.concatenate([yb, ya])
    full = np.arange(2 * w)
    hits = total = 0
    for train in itertools.combinations(range(2 * w), w):
        train = np.array(train)
        test = np.setdiff1d(full, train, assume_unique=True)
        e, _ = _split_loss(trainer, X, y, train, test)
        hits += e_ord <= e
        total += 1
    return hits / total


OUTCOME_HEADER = ["t_pot", "e_ord", "p_value", "decision"]


def write_outcomes(path, outcomes: Sequence[PermutationOutcome]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(OUTCOME_HEADER)
        for o in outcomes:
            wr.writerow(["" if o.t_pot is None else o.t_pot, repr(o.e_ord), repr(o.p_value),
                         o.decision.value])
