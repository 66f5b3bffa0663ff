"""Least-squares critical points of the quadratic loss inside one cell.

For a fixed activation pattern the loss is ``(1/N) ||A R - y||^2`` with
``A[i, block j] = I_ij x_i``.  Its minimisers form the affine family
``R0 + (I - A+ A) c`` where ``R0 = A+ y`` is the minimum-norm solution.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dataset import Dataset
from .network import DimensionError


class NumericalFailure(RuntimeError):
    pass


class Kind(str, enum.Enum):
    UNIQUE = "unique"
    CONTINUOUS = "continuous"


@dataclass(frozen=True, eq=False)
class CriticalSystem:
    A: np.ndarray
    y: np.ndarray
    K: int
    D: int

    @property
    def N(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class CriticalSolution:
    """Minimum-norm solution plus an orthonormal basis of the row space of A.

    The projector ``I - A+ A`` equals ``I - V.T @ V`` for the row-space basis
    ``V``; it is materialised lazily because it is (K*D)^2 in size.
    """

    R0: np.ndarray
    row_basis: np.ndarray
    rank: int
    K: int
    D: int

    @property
    def n(self) -> int:
        return self.K * self.D

    @property
    def kind(self) -> Kind:
        return Kind.UNIQUE if self.rank == self.n else Kind.CONTINUOUS

    @property
    def R0_blocks(self) -> np.ndarray:
        return self.R0.reshape(self.K, self.D)

    @cached_property
    def projector(self) -> np.ndarray:
        V = self.row_basis
        return np.eye(self.n) - V.T @ V

    def projector_block(self, j: int) -> np.ndarray:
        """Rows of the projector belonging to neuron ``j``, shape (D, K*D)."""
        sl = slice(j * self.D, (j + 1) * self.D)
        rows = -(self.row_basis[:, sl].T @ self.row_basis)
        rows[:, sl] += np.eye(self.D)
        return rows

    def point(self, c) -> np.ndarray:
        """Member ``R0 + (I - A+ A) c`` of the critical family."""
        c = np.asarray(c, dtype=float)
        V = self.row_basis
        return self.R0 + c - V.T @ (V @ c)


def assemble_system(pattern, data: Dataset) -> CriticalSystem:
    pattern = np.asarray(pattern)
    if pattern.ndim != 2 or pattern.shape[0] != data.N:
        raise DimensionError(f"pattern shape {pattern.shape} does not match N={data.N}")
    K = pattern.shape[1]
    A = (pattern[:, :, None] * data.samples[:, None, :]).reshape(data.N, K * data.D)
    return CriticalSystem(A.astype(float), data.labels.copy(), K, data.D)


def _svd(M):
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return U, s, Vt


def rank_tolerance(shape, smax: float) -> float:
    return max(shape) * np.finfo(float).eps * smax


def _rank(s, shape, rtol):
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = rtol * s[0] if rtol is not None else rank_tolerance(shape, s[0])
    return int(np.sum(s > tol))


def pseudoinverse(M, rtol: float | None = None) -> tuple[np.ndarray, int]:
    """Moore-Penrose inverse via SVD and the numerical rank.

    Singular values at or below ``rtol * s_max`` are dropped; by default
    ``rtol = max(M.shape) * eps``.
    """
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise NumericalFailure("matrix has non-finite entries")
    U, s, Vt = _svd(M)
    r = _rank(s, M.shape, rtol)
    pinv = (Vt[:r].T / s[:r]) @ U[:, :r].T
    return pinv, r


def solve_critical(system: CriticalSystem, rtol: float | None = None) -> CriticalSolution:
    A = system.A
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("system matrix has non-finite entries")
    U, s, Vt = _svd(A)
    r = _rank(s, A.shape, rtol)
    R0 = Vt[:r].T @ ((U[:, :r].T @ system.y) / s[:r])
    return CriticalSolution(R0, Vt[:r].copy(), r, system.K, system.D)


def loss_at_critical(system: CriticalSystem, solution: CriticalSolution) -> float:
    if solution.R0.shape[0] != system.A.shape[1]:
        raise DimensionError("solution does not belong to this system")
    resid = system.A @ solution.R0 - system.y
    return float(resid @ resid / system.N)
