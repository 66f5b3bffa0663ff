"""One-hidden-layer ReLU network with squared loss.

Weights are stored as ``w`` (K, D) hidden vectors, bias coordinate last, and
``z`` (K,) output weights.  An activation pattern is an (N, K) 0/1 array with
``I[i, j] = 1`` iff ``w_j . x_i > 0``; points exactly on a hyperplane count as
inactive everywhere in this package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NetworkWeights:
    w: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        z = np.array(self.z, dtype=float)
        if w.ndim != 2 or w.shape[0] < 1:
            raise DimensionError(f"w must be (K, D) with K >= 1, got {w.shape}")
        if z.shape != (w.shape[0],):
            raise DimensionError(f"z must have shape ({w.shape[0]},), got {z.shape}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "z", z)

    @property
    def K(self) -> int:
        return self.w.shape[0]

    @property
    def D(self) -> int:
        return self.w.shape[1]

    @classmethod
    def with_unit_output(cls, w) -> "NetworkWeights":
        w = np.asarray(w, dtype=float)
        return cls(w, np.ones(w.shape[0]))


def _check(w: np.ndarray, data: Dataset):
    if w.shape[-1] != data.D:
        raise DimensionError(f"weight dimension {w.shape[-1]} does not match data dimension {data.D}")


def preactivations(weights: NetworkWeights, data: Dataset) -> np.ndarray:
    _check(weights.w, data)
    return data.samples @ weights.w.T


def activation_pattern(weights: NetworkWeights, data: Dataset) -> np.ndarray:
    return (preactivations(weights, data) > 0).astype(np.int8)


def effective_weights(weights: NetworkWeights) -> np.ndarray:
    """``R_j = z_j w_j`` as a (K, D) array; ``.ravel()`` gives the K*D vector."""
    return weights.z[:, None] * weights.w


def relu_loss(weights: NetworkWeights, data: Dataset) -> float:
    hidden = np.maximum(preactivations(weights, data), 0.0)
    return float(np.mean((hidden @ weights.z - data.labels) ** 2))


def _as_blocks(R, K: int | None, D: int) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.ndim == 1:
        if R.size % D:
            raise DimensionError(f"flattened R of length {R.size} is not a multiple of D={D}")
        R = R.reshape(-1, D)
    if R.shape[1] != D or (K is not None and R.shape[0] != K):
        raise DimensionError(f"R has shape {R.shape}, expected ({K}, {D})")
    return R


def patterned_predictions(R, pattern, data: Dataset) -> np.ndarray:
    pattern = np.asarray(pattern)
    if pattern.ndim != 2 or pattern.shape[0] != data.N:
        raise DimensionError(f"pattern shape {pattern.shape} does not match N={data.N}")
    R = _as_blocks(R, pattern.shape[1], data.D)
    return np.sum((data.samples @ R.T) * pattern, axis=1)


def patterned_loss(R, pattern, data: Dataset) -> float:
    """Loss of the quadratic model that holds inside the cell of ``pattern``."""
    resid = patterned_predictions(R, pattern, data) - data.labels
    return float(np.mean(resid ** 2))


def loss_gradients(weights: NetworkWeights, data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(dL/dw, dL/dz)`` with shapes (K, D) and (K,).

    The activation pattern is recomputed from ``weights``; at a hyperplane the
    inactive branch is used.
    """
    pre = preactivations(weights, data)
    return _gradients(weights.w, weights.z, pre, data)


def _gradients(w, z, pre, data):
    active = pre > 0
    resid = (np.maximum(pre, 0.0) @ z) - data.labels
    dR = (2.0 / data.N) * ((active * resid[:, None]).T @ data.samples)
    return z[:, None] * dR, np.sum(dR * w, axis=1)


def activated_fraction(pattern) -> float:
    pattern = np.asarray(pattern)
    return float(pattern.mean()) if pattern.size else 0.0
