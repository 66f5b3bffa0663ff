"""Plain gradient descent as an empirical check of genuineness verdicts.

Starting inside a cell, descent either leaves the cell (a sample changes
side of some hidden hyperplane relative to the start) or stalls with a small
gradient while still inside.
"""
from __future__ import annotations

import csv
import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .dataset import Dataset
from .genuineness import draw_hidden_weights
from .network import DimensionError, NetworkWeights, _gradients

DEFAULT_STEP = 1e-6
DEFAULT_GRAD_TOL = 1e-3
DEFAULT_MAX_ITERS = 100_000
CHECKPOINT_EVERY = 1000


class Outcome(str, enum.Enum):
    ESCAPED = "escaped"
    TRAPPED = "trapped"
    INCONCLUSIVE = "inconclusive"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class DescentOutcome:
    status: Outcome
    iterations: int
    loss: float
    grad_norm: float
    step: int | None = None
    final: NetworkWeights | None = None
    checkpoints: list = field(default_factory=list, repr=False)

    LOG_COLUMNS = ("iteration", "loss", "grad_norm", "crossed")

    def write_log(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(self.LOG_COLUMNS)
            for it, loss, g, crossed in self.checkpoints:
                out.writerow([it, repr(loss), repr(g), int(crossed)])


def gd_verify(start: NetworkWeights, data: Dataset, stepsize: float = DEFAULT_STEP,
              grad_tol: float = DEFAULT_GRAD_TOL, max_iters: int = DEFAULT_MAX_ITERS,
              checkpoint_every: int = CHECKPOINT_EVERY) -> DescentOutcome:
    """Run descent on ``w`` and ``z`` until it leaves the start cell or stalls.

    The crossing test compares every step's preactivations with those of
    the start weights, so returning to the cell later does not count.
    """
    if start.D != data.D:
        raise DimensionError(f"weight dimension {start.D} does not match data dimension {data.D}")
    if stepsize <= 0 or grad_tol <= 0 or max_iters < 1:
        raise ValueError("stepsize and grad_tol must be positive, max_iters at least 1")
    X = data.samples
    w, z = start.w.copy(), start.z.copy()
    pre0 = X @ w.T
    if np.any(pre0 == 0):
        raise ValueError("start lies on a cell boundary")
    pre = pre0
    checkpoints = []
    loss = gnorm = float("nan")
    for it in range(max_iters + 1):
        hidden = np.maximum(pre, 0.0)
        loss = float(np.mean((hidden @ z - data.labels) ** 2))
        gw, gz = _gradients(w, z, pre, data)
        gnorm = float(np.sqrt(np.sum(gw * gw) + np.sum(gz * gz)))
        if not (np.isfinite(loss) and np.isfinite(gnorm)):
            return DescentOutcome(Outcome.NUMERICAL_FAILURE, it, loss, gnorm,
                                  final=NetworkWeights(w, z), checkpoints=checkpoints)
        if it % checkpoint_every == 0:
            checkpoints.append((it, loss, gnorm, False))
        if gnorm < grad_tol:
            checkpoints.append((it, loss, gnorm, False))
            return DescentOutcome(Outcome.TRAPPED, it, loss, gnorm,
                                  final=NetworkWeights(w, z), checkpoints=checkpoints)
        if it == max_iters:
            break
        w = w - stepsize * gw
        z = z - stepsize * gz
        pre = X @ w.T
        if np.any(pre0 * pre <= 0):
            checkpoints.append((it + 1, loss, gnorm, True))
            return DescentOutcome(Outcome.ESCAPED, it + 1, loss, gnorm, step=it + 1,
                                  final=NetworkWeights(w, z), checkpoints=checkpoints)
    return DescentOutcome(Outcome.INCONCLUSIVE, max_iters, loss, gnorm,
                          final=NetworkWeights(w, z), checkpoints=checkpoints)


def draw_start(seed: int, trial: int, K: int, d: int, bias: float) -> NetworkWeights:
    """Hidden weights shared with the genuineness scan; output weights standard normal."""
    w = draw_hidden_weights(_rng.stream(seed, trial, "w"), K, d, bias)
    z = _rng.stream(seed, trial, "z").standard_normal(K)
    return NetworkWeights(w, z)


@dataclass
class DescentRow:
    bias: float
    trials: int
    escaped_pct: float
    trapped_pct: float
    inconclusive_pct: float
    failed_pct: float
    mean_final_loss: float
    seed: int
    outcomes: list = field(default_factory=list, repr=False)

    COLUMNS = ("bias", "escaped_pct", "trapped_pct", "inconclusive_pct", "failed_pct",
               "mean_final_loss", "trials", "seed")

    def as_dict(self):
        return {c: getattr(self, c) for c in self.COLUMNS}


def descent_scan(data: Dataset, K: int, bias_list, trials: int, seed: int,
                 stepsize: float = DEFAULT_STEP, grad_tol: float = DEFAULT_GRAD_TOL,
                 max_iters: int = DEFAULT_MAX_ITERS, threads: int = 1) -> list[DescentRow]:
    if trials < 1 or K < 1:
        raise ValueError("trials and K must be at least 1")
    rows = []
    for bias in bias_list:
        def trial(t, bias=bias):
            return gd_verify(draw_start(seed, t, K, data.d, bias), data, stepsize, grad_tol, max_iters)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                outs = list(pool.map(trial, range(trials)))
        else:
            outs = [trial(t) for t in range(trials)]
        share = lambda s: 100.0 * sum(o.status is s for o in outs) / trials
        rows.append(DescentRow(
            bias=float(bias), trials=trials,
            escaped_pct=share(Outcome.ESCAPED),
            trapped_pct=share(Outcome.TRAPPED),
            inconclusive_pct=share(Outcome.INCONCLUSIVE),
            failed_pct=share(Outcome.NUMERICAL_FAILURE),
            mean_final_loss=float(np.mean([o.loss for o in outs])),
            seed=seed, outcomes=outs,
        ))
    return rows
