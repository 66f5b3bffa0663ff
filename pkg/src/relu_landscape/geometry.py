"""Cell geometry in hidden-weight space.

Each sample ``x_i`` defines the hyperplane ``w . x_i = 0`` in the augmented
D-dimensional weight space; cells are the regions between them.  Since every
hyperplane passes through the origin, each cell is a cone, so the reported
"diameter" is the largest chord found along sampled directions, not a true
geometric diameter.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _rng
from .dataset import Dataset
from .network import DimensionError, NetworkWeights

WEIGHT_RANGE = (-1.0, 1.0)


class BoundaryError(ValueError):
    """The weight vector lies exactly on a sample hyperplane."""


@dataclass(frozen=True)
class RayHit:
    """Distances to the nearest hyperplane forward (s1) and backward (s2); None when open."""

    s1: float | None
    s2: float | None

    @property
    def closed(self) -> bool:
        return self.s1 is not None and self.s2 is not None


@dataclass(frozen=True)
class Diameter:
    """Largest sampled chord, or ``value=None`` for an open cell."""

    value: float | None
    n_directions: int

    @property
    def is_open(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class MeanDiameter:
    mean: float | None
    open_count: int
    n_weights: int
    N: int
    seed: int


def crossed_boundary(w_old: NetworkWeights, w_new: NetworkWeights, data: Dataset) -> bool:
    """True if any sample sits on or switches side of any hidden hyperplane."""
    if w_old.w.shape != w_new.w.shape:
        raise DimensionError(f"weight shapes differ: {w_old.w.shape} vs {w_new.w.shape}")
    if w_old.D != data.D:
        raise DimensionError(f"weight dimension {w_old.D} does not match data dimension {data.D}")
    return bool(np.any((data.samples @ w_old.w.T) * (data.samples @ w_new.w.T) <= 0))


def _pre(w, data):
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != data.D:
        raise DimensionError(f"weight dimension {w.size} does not match data dimension {data.D}")
    if data.N == 0:
        raise ValueError("no samples, so no hyperplanes")
    pre = data.samples @ w
    if np.any(pre == 0):
        raise BoundaryError("weight vector lies on a sample hyperplane")
    return pre


def _hits(pre, slopes):
    """Signed step lengths to every hyperplane; NaN for parallel rays."""
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -pre / slopes
    return np.where(slopes == 0, np.nan, s)


def ray_hit_distances(w, direction, data: Dataset) -> RayHit:
    pre = _pre(w, data)
    direction = np.asarray(direction, dtype=float).reshape(-1)
    if direction.size != data.D:
        raise DimensionError("direction has the wrong dimension")
    s = _hits(pre, data.samples @ direction)
    fwd = s[s >= 0]
    back = s[s < 0]
    return RayHit(float(fwd.min()) if fwd.size else None,
                  float(-back.max()) if back.size else None)


def sample_directions(rng: np.random.Generator, n: int, D: int) -> np.ndarray:
    """``n`` uniform unit vectors; drawing more from the same stream extends the set."""
    v = rng.standard_normal((n, D))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def chord_lengths(w, directions, data: Dataset) -> np.ndarray:
    """``s1 + s2`` per direction, ``inf`` where either side is open."""
    pre = _pre(w, data)
    s = _hits(pre[None, :], np.asarray(directions) @ data.samples.T)
    fwd = np.where(s >= 0, s, np.inf).min(axis=1)
    back = np.where(s < 0, -s, np.inf).min(axis=1)
    return fwd + back


def cell_diameter(w, data: Dataset, n_directions: int | None = None, seed: int = 0) -> Diameter:
    """Largest chord through ``w`` along ``n_directions`` random directions (default 10 D)."""
    n_directions = 10 * data.D if n_directions is None else int(n_directions)
    if n_directions < 1:
        raise ValueError("n_directions must be at least 1")
    dirs = sample_directions(_rng.stream(seed, "directions"), n_directions, data.D)
    chords = chord_lengths(w, dirs, data)
    if not np.all(np.isfinite(chords)):
        return Diameter(None, n_directions)
    return Diameter(float(chords.max()), n_directions)


def draw_uniform_weight(rng: np.random.Generator, D: int) -> np.ndarray:
    return rng.uniform(*WEIGHT_RANGE, size=D)


def mean_diameter(data: Dataset, n_weights: int, seed: int, n_directions: int | None = None,
                  threads: int = 1) -> MeanDiameter:
    """Average sampled diameter over ``n_weights`` uniform weights; open cells are skipped."""
    if n_weights < 1:
        raise ValueError("n_weights must be at least 1")
    if data.N == 0:
        raise ValueError("no samples, so no hyperplanes")

    def one(k):
        w = draw_uniform_weight(_rng.stream(seed, k, "weight"), data.D)
        return cell_diameter(w, data, n_directions, seed=hash_key(seed, k))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, range(n_weights)))
    else:
        results = [one(k) for k in range(n_weights)]
    closed = [r.value for r in results if not r.is_open]
    mean = float(np.mean(closed)) if closed else None
    return MeanDiameter(mean, n_weights - len(closed), n_weights, data.N, seed)


def hash_key(seed: int, k: int) -> int:
    """Per-weight direction seed derived from the master seed."""
    return int(np.random.SeedSequence(int(seed), spawn_key=(int(k),)).generate_state(1)[0])


def cell_count(N: int, dim: int) -> int:
    """Cells of ``N`` affine hyperplanes in general position in ``dim`` dimensions."""
    if N < 0 or dim < 1:
        raise ValueError("need N >= 0 and dim >= 1")
    return sum(math.comb(N, i) for i in range(dim + 1))


def central_cell_count(N: int, dim: int) -> int:
    """Cells of ``N`` generic hyperplanes through the origin in ``dim`` dimensions."""
    if N < 0 or dim < 1:
        raise ValueError("need N >= 0 and dim >= 1")
    if N == 0:
        return 1
    return 2 * sum(math.comb(N - 1, i) for i in range(dim))
