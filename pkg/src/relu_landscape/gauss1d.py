"""Analytic probability of genuine minima for 1D two-class Gaussian data.

Each weight k sits at position ``h_k`` with normal ``n_k`` in {+1, -1}; its
output weight is fixed to ``n_k`` so that ``R_k . x = x - h_k`` wherever the
neuron is active.  The K weights cut the line into K + 1 regions, inside each
of which every neuron is either on or off.  Setting the gradient of the
expected loss to zero gives a K x K linear system for the optimal positions,
whose coefficients are class masses and truncated means per region.

Both classes have unit variance and equal priors; means default to +1 and -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, ndtr

from . import _rng
from .critical import NumericalFailure

SQRT2 = math.sqrt(2.0)
INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
EMPTY_MASS = 1e-300


def Phi(x):
    """Standard normal CDF."""
    return ndtr(x)


def phi(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return INV_SQRT2PI * np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class ClassModel1D:
    mean_pos: float = 1.0
    mean_neg: float = -1.0


DEFAULT_MODEL = ClassModel1D()


@dataclass(frozen=True, eq=False)
class Weights1D:
    h: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1)
        n = np.asarray(self.normals, dtype=float).reshape(-1)
        if h.size < 1 or h.shape != n.shape:
            raise ValueError("need one normal per position and at least one weight")
        if not np.all(np.abs(n) == 1):
            raise ValueError("normals must be +1 or -1")
        if np.any(np.diff(h) == 0):
            raise ValueError("weight positions must be distinct")
        if np.any(np.diff(h) < 0):
            raise ValueError("weight positions must be sorted ascending")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "normals", n)

    @property
    def K(self) -> int:
        return self.h.size

    @property
    def z(self) -> np.ndarray:
        return self.normals


@dataclass(frozen=True, eq=False)
class RegionTable:
    """K + 1 intervals ``(lower[j], upper[j])`` and their (K + 1, K) indicators."""

    lower: np.ndarray
    upper: np.ndarray
    indicators: np.ndarray

    def __len__(self):
        return self.lower.size

    def locate(self, x) -> np.ndarray:
        """Region index of each point (boundaries belong to the left region)."""
        return np.searchsorted(self.upper[:-1], np.asarray(x, dtype=float), side="left")


@dataclass(frozen=True, eq=False)
class MomentTable:
    p_pos: np.ndarray
    p_neg: np.ndarray
    mean_pos: np.ndarray
    mean_neg: np.ndarray


def region_partition(weights: Weights1D) -> RegionTable:
    h = weights.h
    lower = np.concatenate([[-np.inf], h])
    upper = np.concatenate([h, [np.inf]])
    # region j spans (h_{j-1}, h_j); it is right of weight k iff k < j
    right_of = np.arange(len(lower))[:, None] > np.arange(h.size)[None, :]
    on = np.where(weights.normals > 0, right_of, ~right_of)
    return RegionTable(lower, upper, on.astype(np.int8))


def _upper_tail_moments(alpha: float, beta: float):
    """Mass and mean shift of N(0, 1) on [alpha, beta] for alpha >= 0."""
    # scale everything by exp(alpha^2 / 2) so deep tails stay representable
    ea = 0.5 * erfcx(alpha / SQRT2)
    if math.isinf(beta):
        ratio, eb = 0.0, 0.0
    else:
        ratio = math.exp(-0.5 * (beta - alpha) * (beta + alpha))
        eb = 0.5 * erfcx(beta / SQRT2) * ratio
    scaled_mass = ea - eb
    mass = scaled_mass * math.exp(-0.5 * alpha * alpha)
    if scaled_mass <= 0.0:
        return mass, math.nan
    shift = INV_SQRT2PI * (1.0 - ratio) / scaled_mass
    return mass, shift


def _std_moments(alpha: float, beta: float):
    if alpha >= 0.0:
        return _upper_tail_moments(alpha, beta)
    if beta <= 0.0:
        mass, shift = _upper_tail_moments(-beta, -alpha)
        return mass, -shift
    mass = float(ndtr(beta) - ndtr(alpha))
    return mass, float((phi(alpha) - phi(beta)) / mass)


def region_moments(a: float, b: float, model: ClassModel1D = DEFAULT_MODEL):
    """``(P+, P-, mean+, mean-)`` of the two classes on the interval [a, b].

    Means are NaN when the class mass is below 1e-300 (empty region).
    """
    if not a < b:
        raise ValueError(f"interval needs a < b, got [{a}, {b}]")
    out = []
    for mu in (model.mean_pos, model.mean_neg):
        mass, shift = _std_moments(a - mu, b - mu)
        out.append((mass, mu + shift if mass >= EMPTY_MASS else math.nan))
    (pp, mp), (pn, mn) = out
    return pp, pn, mp, mn


def moment_table(regions: RegionTable, model: ClassModel1D = DEFAULT_MODEL) -> MomentTable:
    rows = np.array([region_moments(a, b, model) for a, b in zip(regions.lower, regions.upper)])
    return MomentTable(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3])


def assemble_1d_system(regions: RegionTable, moments: MomentTable):
    """Expected-loss normal equations ``F h = f`` (equal class priors)."""
    I = regions.indicators.astype(float)
    if moments.p_pos.shape != (I.shape[0],):
        raise ValueError("moment table and region table disagree")
    mass = moments.p_pos + moments.p_neg
    first = np.nan_to_num(moments.p_pos * moments.mean_pos) + np.nan_to_num(moments.p_neg * moments.mean_neg)
    label = moments.p_pos - moments.p_neg
    F = I.T @ (mass[:, None] * I)
    active = I.sum(axis=1)
    f = I.T @ (active * first) - I.T @ label
    return F, f


def empirical_1d_system(weights: Weights1D, x, y):
    """Sample-sum version of the normal equations for one dataset."""
    regions = region_partition(weights)
    I = regions.indicators.astype(float)[regions.locate(x)]
    F = I.T @ I
    f = I.T @ (I.sum(axis=1) * np.asarray(x, dtype=float)) - I.T @ np.asarray(y, dtype=float)
    return F, f


def solve_optimal_positions(F, f, rtol: float = 1e-12):
    """Minimum-norm solution of ``F h = f`` and a mask of unconstrained weights.

    A weight is unconstrained when it activates no probability mass
    (vanishing row of F); its position then does not affect the loss.
    """
    F = np.asarray(F, dtype=float)
    f = np.asarray(f, dtype=float)
    if F.shape != (f.size, f.size):
        raise ValueError("F must be square and match f")
    scale = np.abs(F).max() if F.size else 0.0
    free = np.abs(F).max(axis=1) <= rtol * max(scale, 1e-300)
    try:
        h = np.linalg.pinv(F, rcond=rtol) @ f
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    return h, free


def two_weight_closed_form(x_w1: float, x_w2: float, model: ClassModel1D = DEFAULT_MODEL):
    """Optimal positions for the two-weight layout.

    Weight 1 at ``x_w1`` faces right and owns the region right of it; weight
    2 at ``x_w2 < x_w1`` faces left and owns the region left of it.
    """
    if not x_w2 < x_w1:
        raise ValueError("need x_w2 < x_w1")

    def optimum(a, b):
        pp, pn, mp, mn = region_moments(a, b, model)
        mass = pp + pn
        if mass < EMPTY_MASS:
            return math.nan
        return (pp * np.nan_to_num(mp) + pn * np.nan_to_num(mn) - pp + pn) / mass

    return optimum(x_w1, math.inf), optimum(-math.inf, x_w2)


def gap_probability(x_w: float, x_w_star: float, model: ClassModel1D = DEFAULT_MODEL) -> float:
    """Probability that one sample falls between a weight and its optimum."""
    lo, hi = min(x_w, x_w_star), max(x_w, x_w_star)
    if lo == hi:
        return 0.0
    total = 0.0
    for mu in (model.mean_pos, model.mean_neg):
        total += 0.5 * _std_moments(lo - mu, hi - mu)[0]
    return float(min(max(total, 0.0), 1.0))


def existence_probability(gap_probs, N: int) -> float:
    """``(1 - P_g)^N`` with ``P_g`` the largest single-gap probability."""
    p = np.asarray(gap_probs, dtype=float)
    pg = float(p.max()) if p.size else 0.0
    return (1.0 - pg) ** N


def union_bound(gap_probs) -> float:
    return float(min(1.0, np.sum(gap_probs)))


@dataclass
class PositionSolve:
    h_star: np.ndarray
    unconstrained: np.ndarray
    gaps: np.ndarray


def optimal_positions(weights: Weights1D, model: ClassModel1D = DEFAULT_MODEL) -> PositionSolve:
    """Analytic optimum of every weight and the gap probability of each.

    Unconstrained weights keep their position, so their gap is empty.
    """
    regions = region_partition(weights)
    F, f = assemble_1d_system(regions, moment_table(regions, model))
    h, free = solve_optimal_positions(F, f)
    gaps = np.array([0.0 if free[k] else gap_probability(weights.h[k], h[k], model)
                     for k in range(weights.K)])
    return PositionSolve(h, free, gaps)


def prob_landscape_scan(base: Weights1D, shifts, move=None, N: int = 100,
                        model: ClassModel1D = DEFAULT_MODEL, combine: str = "max"):
    """Shift the weights listed in ``move`` by each value in ``shifts``.

    Returns one dict per shift with the moved positions, their optima, the
    combined gap probability and ``P_t``.  Only gaps of moved weights enter.
    ``combine="max"`` uses the largest gap; ``combine="product"`` multiplies
    the per-weight probabilities ``(1 - p_k)^N``.
    """
    move = list(range(base.K)) if move is None else list(move)
    rows = []
    for s in np.asarray(shifts, dtype=float):
        h = base.h.copy()
        h[move] += s
        order = np.argsort(h, kind="stable")
        w = Weights1D(h[order], base.normals[order])
        sol = optimal_positions(w, model)
        back = np.empty_like(order)
        back[order] = np.arange(order.size)
        gaps = sol.gaps[back][move]
        if combine == "max":
            pt = existence_probability(gaps, N)
        elif combine == "product":
            pt = float(np.prod((1.0 - gaps) ** N))
        else:
            raise ValueError(f"unknown combine rule {combine!r}")
        rows.append({
            "shift": float(s),
            "positions": h[move],
            "h_star": sol.h_star[back][move],
            "p_g": float(gaps.max()),
            "p_t": float(pt),
        })
    return rows


def two_weight_sweep(x_w1_grid, x_w2: float = 0.0, N: int = 100, model: ClassModel1D = DEFAULT_MODEL):
    """Move weight 1 with weight 2 fixed; ``P_t`` counts weight 1's gap."""
    rows = []
    for x1 in np.asarray(x_w1_grid, dtype=float):
        h1, h2 = two_weight_closed_form(x1, x_w2, model)
        g = gap_probability(x1, h1, model)
        rows.append({"x_w1": float(x1), "x_w2": float(x_w2), "h1_star": h1, "h2_star": h2,
                     "p_g": g, "p_t": (1.0 - g) ** N})
    return rows


def two_weight_joint(x_w1_grid, x_w2_grid, N: int = 100, model: ClassModel1D = DEFAULT_MODEL):
    """Joint ``P_t`` over a grid where both weights move (layout x_w2 < x_w1).

    Each cell solves the two-weight system and multiplies the two per-weight
    probabilities.  Returns an array indexed ``[i1, i2]``; layouts with
    ``x_w2 >= x_w1`` are NaN.
    """
    g1 = np.asarray(x_w1_grid, dtype=float)
    g2 = np.asarray(x_w2_grid, dtype=float)
    out = np.full((g1.size, g2.size), np.nan)
    for a, x1 in enumerate(g1):
        for b, x2 in enumerate(g2):
            if not x2 < x1:
                continue
            sol = optimal_positions(Weights1D([x2, x1], [-1.0, 1.0]), model)
            out[a, b] = float(np.prod((1.0 - sol.gaps) ** N))
    return out


def sample_dataset(rng: np.random.Generator, N: int, model: ClassModel1D = DEFAULT_MODEL):
    """``N`` samples, half per class (positives first)."""
    n_pos = N // 2
    x = np.concatenate([rng.normal(model.mean_pos, 1.0, n_pos), rng.normal(model.mean_neg, 1.0, N - n_pos)])
    y = np.concatenate([np.ones(n_pos), -np.ones(N - n_pos)])
    return x, y


def empirical_genuine(weights: Weights1D, x, y, check=None) -> bool:
    """True when no sample lies strictly between a weight and its empirical optimum.

    ``check`` restricts the test to the listed weight indices.
    """
    F, f = empirical_1d_system(weights, x, y)
    h, free = solve_optimal_positions(F, f)
    x = np.asarray(x, dtype=float)
    for k in (range(weights.K) if check is None else check):
        if free[k]:
            continue
        lo, hi = sorted((weights.h[k], h[k]))
        if np.any((x > lo) & (x < hi)):
            return False
    return True


def monte_carlo_existence(weights: Weights1D, N: int, n_datasets: int, seed: int, check=None,
                          model: ClassModel1D = DEFAULT_MODEL) -> float:
    """Fraction of sampled datasets whose empirical critical point is genuine."""
    hits = 0
    for m in range(n_datasets):
        x, y = sample_dataset(_rng.stream(seed, m, "gauss1d"), N, model)
        hits += empirical_genuine(weights, x, y, check)
    return hits / n_datasets


def empirical_loss(weights: Weights1D, x, y) -> float:
    """Mean squared loss of the 1D network on one dataset."""
    x = np.asarray(x, dtype=float)
    act = weights.normals[None, :] * (x[:, None] - weights.h[None, :]) > 0
    pred = np.sum(act * (x[:, None] - weights.h[None, :]), axis=1)
    return float(np.mean((pred - np.asarray(y)) ** 2))


def monte_carlo_gap_free(x_w: float, h_star: float, N: int, n_datasets: int, seed: int,
                         model: ClassModel1D = DEFAULT_MODEL) -> float:
    """Fraction of sampled datasets with no sample between ``x_w`` and a fixed ``h_star``."""
    lo, hi = sorted((x_w, h_star))
    hits = 0
    for m in range(n_datasets):
        x, _ = sample_dataset(_rng.stream(seed, m, "gauss1d"), N, model)
        hits += not np.any((x > lo) & (x < hi))
    return hits / n_datasets
