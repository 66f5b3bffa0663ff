"""Is the critical point of a cell a genuine local minimum?

A critical point is genuine when it lies inside the cell that defines it.
Isolated critical points are checked by sign tests; affine families are
reduced to a half-space intersection over the free parameter ``c`` and
decided with the margin LP in :mod:`relu_landscape.lpfeas`.

Each neuron can be tested in one of two orientations: ``s_j = +1`` asks for
``R_j . x_i > 0`` on active samples and ``<= 0`` on inactive ones (a
positive output weight), ``s_j = -1`` for the mirrored condition.
"""
from __future__ import annotations

import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .critical import CriticalSolution, Kind, assemble_system, solve_critical
from .dataset import Dataset
from .lpfeas import DEFAULT_BOX, DEFAULT_EPS, InequalitySystem, LPStatus, feasibility
from .network import (DimensionError, NetworkWeights, activated_fraction, activation_pattern,
                      patterned_predictions)

TAU_REL = 1e-9

ALL_POSITIVE = "all_positive"
ALL_NEGATIVE = "all_negative"
FROM_MIN_NORM = "from_min_norm"
EXHAUSTIVE = "exhaustive"
EXPLICIT = "explicit"
_MODES = (ALL_POSITIVE, ALL_NEGATIVE, FROM_MIN_NORM, EXHAUSTIVE, EXPLICIT)


class Status(str, enum.Enum):
    GENUINE = "genuine"
    NOT_GENUINE = "not_genuine"
    PLATEAU = "plateau"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class OrientationPolicy:
    """Which per-neuron sign vectors to try, in order.

    The default tries all-positive, all-negative and the orientation that
    best fits the minimum-norm point.  ``exhaustive`` enumerates all 2^K
    vectors and is refused above ``max_k`` neurons.
    """

    modes: tuple = (ALL_POSITIVE, ALL_NEGATIVE, FROM_MIN_NORM)
    max_k: int = 12
    signs: tuple | None = None

    def __post_init__(self):
        modes = (self.modes,) if isinstance(self.modes, str) else tuple(self.modes)
        bad = [m for m in modes if m not in _MODES]
        if bad or not modes:
            raise ValueError(f"unknown orientation modes {bad}; choose from {_MODES}")
        if EXPLICIT in modes and self.signs is None:
            raise ValueError("explicit orientation needs a sign vector")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def parse(cls, text: str, max_k: int = 12) -> "OrientationPolicy":
        """``"default"`` or a comma list of mode names."""
        if text.strip() == "default":
            return cls(max_k=max_k)
        return cls(tuple(m.strip() for m in text.split(",") if m.strip()), max_k=max_k)

    def sign_vectors(self, R, pattern, data):
        K = pattern.shape[1]
        seen = set()
        for mode in self.modes:
            if mode == ALL_POSITIVE:
                cands = [np.ones(K)]
            elif mode == ALL_NEGATIVE:
                cands = [-np.ones(K)]
            elif mode == FROM_MIN_NORM:
                cands = [best_orientation(R, pattern, data)]
            elif mode == EXPLICIT:
                s = np.asarray(self.signs, dtype=float)
                if s.shape != (K,) or not np.all(np.abs(s) == 1):
                    raise ValueError(f"explicit signs must be {K} values of +1/-1")
                cands = [s]
            else:
                if K > self.max_k:
                    raise ValueError(f"exhaustive orientation refused for K={K} > {self.max_k}")
                cands = (np.array(v, dtype=float) for v in itertools.product((1.0, -1.0), repeat=K))
            for s in cands:
                key = tuple(s)
                if key not in seen:
                    seen.add(key)
                    yield s


@dataclass
class GenuinenessVerdict:
    status: Status
    kind: Kind
    orientation: np.ndarray | None = None
    witness: np.ndarray | None = None
    p_g: float = 0.0
    violations: int = 0
    detail: str = ""

    @property
    def genuine(self) -> bool:
        return self.status in (Status.GENUINE, Status.PLATEAU)


def _blocks(R, K, D):
    R = np.asarray(R, dtype=float)
    return R.reshape(K, D) if R.ndim == 1 else R


def tolerance(R, data: Dataset) -> np.ndarray:
    """Per (sample, neuron) strictness threshold ``1e-9 max(1, |R_j| |x_i|)``."""
    return TAU_REL * np.maximum(1.0, np.outer(np.linalg.norm(data.samples, axis=1), np.linalg.norm(R, axis=1)))


def violation_matrix(R, pattern, data: Dataset, signs) -> np.ndarray:
    """Boolean (N, K): which sign conditions fail under orientation ``signs``."""
    pattern = np.asarray(pattern)
    R = _blocks(R, pattern.shape[1], data.D)
    if R.shape != (pattern.shape[1], data.D) or pattern.shape[0] != data.N:
        raise DimensionError("R, pattern and data disagree in shape")
    v = (data.samples @ R.T) * np.asarray(signs, dtype=float)
    tau = tolerance(R, data)
    on = pattern.astype(bool)
    return np.where(on, v <= tau, v > tau)


def best_orientation(R, pattern, data: Dataset) -> np.ndarray:
    """Per neuron, the sign with fewer violated conditions (ties go to +1)."""
    pos = violation_matrix(R, pattern, data, np.ones(pattern.shape[1])).sum(axis=0)
    neg = violation_matrix(R, pattern, data, -np.ones(pattern.shape[1])).sum(axis=0)
    return np.where(neg < pos, -1.0, 1.0)


def check_isolated(rstar, pattern, data: Dataset, policy: OrientationPolicy | None = None) -> GenuinenessVerdict:
    """Sign test for a unique critical point.

    ``rstar`` is a :class:`CriticalSolution` of unique kind or a plain
    (K, D) / (K*D,) array of effective weights.
    """
    policy = policy or OrientationPolicy()
    pattern = np.asarray(pattern)
    if isinstance(rstar, CriticalSolution):
        if rstar.kind is not Kind.UNIQUE:
            raise ValueError("check_isolated needs a unique critical point; use check_continuous")
        rstar = rstar.R0
    R = _blocks(rstar, pattern.shape[1], data.D)
    if not pattern.any():
        return GenuinenessVerdict(Status.PLATEAU, Kind.UNIQUE, np.ones(pattern.shape[1]))
    best = None
    for s in policy.sign_vectors(R, pattern, data):
        count = int(violation_matrix(R, pattern, data, s).sum())
        if count == 0:
            return GenuinenessVerdict(Status.GENUINE, Kind.UNIQUE, s)
        if best is None or count < best[1]:
            best = (s, count)
    return GenuinenessVerdict(Status.NOT_GENUINE, Kind.UNIQUE, best[0], violations=best[1])


def build_halfspace_system(solution: CriticalSolution, pattern, data: Dataset, signs,
                           box: float = DEFAULT_BOX) -> InequalitySystem:
    """Rows ``s_j x_i^T (R0_j + P_j c)`` over ``c`` in R^(K*D), ordered sample-major.

    Rows with ``I_ij = 1`` are strict (``> 0``), the rest non-strict (``<= 0``).
    """
    pattern = np.asarray(pattern)
    K, D = solution.K, solution.D
    if pattern.shape != (data.N, K) or data.D != D:
        raise DimensionError("solution, pattern and data disagree in shape")
    signs = np.asarray(signs, dtype=float)
    X = data.samples
    V = solution.row_basis
    coeff = np.zeros((data.N, K, K * D))
    for j in range(K):
        sl = slice(j * D, (j + 1) * D)
        coeff[:, j, sl] = X
        if V.shape[0]:
            coeff[:, j, :] -= (X @ V[:, sl].T) @ V
        coeff[:, j, :] *= signs[j]
    const = (X @ solution.R0_blocks.T) * signs
    coeff = coeff.reshape(data.N * K, K * D)
    const = const.reshape(-1)
    on = pattern.reshape(-1).astype(bool)
    return InequalitySystem(coeff[on], const[on], coeff[~on], const[~on], box)


def sign_certificate(solution: CriticalSolution, pattern, data: Dataset, signs,
                     eps: float = DEFAULT_EPS):
    """Index of a sample that rules out orientation ``signs``, else None.

    Every member of the family fits sample ``i`` with the same value
    ``yhat_i = sum_j I_ij R_j . x_i``.  When all neurons active on ``i`` share
    one sign ``s``, the strict rows for ``i`` need ``s * yhat_i > m * eps``
    (``m`` active neurons), so failing that proves the system infeasible.
    """
    pattern = np.asarray(pattern, dtype=bool)
    s = np.asarray(signs, dtype=float)
    yhat = patterned_predictions(solution.R0, pattern, data)
    m = pattern.sum(axis=1)
    pos = (pattern & (s > 0)).sum(axis=1)
    uniform = (m > 0) & ((pos == m) | (pos == 0))
    sign = np.where(pos == m, 1.0, -1.0)
    bad = np.flatnonzero(uniform & (sign * yhat <= m * eps))
    return int(bad[0]) if bad.size else None


def check_continuous(solution: CriticalSolution, pattern, data: Dataset,
                     policy: OrientationPolicy | None = None, box: float = DEFAULT_BOX,
                     eps: float = DEFAULT_EPS) -> GenuinenessVerdict:
    """Half-space intersection test for an affine family of critical points."""
    policy = policy or OrientationPolicy()
    pattern = np.asarray(pattern)
    if solution.kind is not Kind.CONTINUOUS:
        raise ValueError("check_continuous needs a continuous family; use check_isolated")
    if not pattern.any():
        return GenuinenessVerdict(Status.PLATEAU, Kind.CONTINUOUS, np.ones(solution.K),
                                  witness=np.zeros(solution.n))
    R0 = solution.R0_blocks
    inconclusive = []
    for s in policy.sign_vectors(R0, pattern, data):
        if sign_certificate(solution, pattern, data, s, eps) is not None:
            continue
        system = build_halfspace_system(solution, pattern, data, s, box)
        res = feasibility(system, eps=eps)
        if res.status is LPStatus.FEASIBLE:
            R = solution.point(res.witness).reshape(solution.K, solution.D)
            if violation_matrix(R, pattern, data, s).any():
                inconclusive.append("witness misses the cell under the strictness tolerance")
                continue
            return GenuinenessVerdict(Status.GENUINE, Kind.CONTINUOUS, s, res.witness)
        if res.status is LPStatus.INCONCLUSIVE:
            inconclusive.append(res.reason)
    if inconclusive:
        return GenuinenessVerdict(Status.INCONCLUSIVE, Kind.CONTINUOUS, detail="; ".join(inconclusive))
    s = best_orientation(R0, pattern, data)
    count = int(violation_matrix(R0, pattern, data, s).sum())
    return GenuinenessVerdict(Status.NOT_GENUINE, Kind.CONTINUOUS, s, violations=count)


def empirical_gap_probability(rstar, weights: NetworkWeights, pattern, data: Dataset) -> float:
    """Largest per-neuron fraction of samples that sit between a weight and its critical point.

    The orientation of neuron ``j`` is the sign of its output weight ``z_j``
    (zero counts as positive), so unit output weights give the positive
    orientation.
    """
    pattern = np.asarray(pattern)
    signs = np.where(np.asarray(weights.z) < 0, -1.0, 1.0)
    if signs.shape != (pattern.shape[1],):
        raise DimensionError("weights and pattern disagree in K")
    R = _blocks(rstar, pattern.shape[1], data.D)
    return float(violation_matrix(R, pattern, data, signs).mean(axis=0).max())


def analyse_cell(weights: NetworkWeights, data: Dataset, policy: OrientationPolicy | None = None,
                 box: float = DEFAULT_BOX, eps: float = DEFAULT_EPS):
    """Pattern, critical solution and verdict for the cell containing ``weights``."""
    pattern = activation_pattern(weights, data)
    solution = solve_critical(assemble_system(pattern, data))
    if solution.kind is Kind.UNIQUE:
        verdict = check_isolated(solution, pattern, data, policy)
    else:
        verdict = check_continuous(solution, pattern, data, policy, box, eps)
    verdict.p_g = empirical_gap_probability(solution.R0, weights, pattern, data)
    return pattern, solution, verdict


def draw_hidden_weights(rng: np.random.Generator, K: int, d: int, bias: float) -> np.ndarray:
    """Standard-normal directions on the raw coordinates, bias coordinate overwritten."""
    w = rng.standard_normal((K, d + 1))
    w[:, d] = bias
    return w


@dataclass
class ScanRow:
    bias: float
    trials: int
    genuine_pct: float
    continuous_pct: float
    mean_pg: float
    activated_pct: float
    inconclusive_pct: float
    seed: int
    verdicts: list = field(default_factory=list, repr=False)

    COLUMNS = ("bias", "genuine_pct", "continuous_pct", "mean_pg", "activated_pct", "inconclusive_pct", "trials", "seed")

    def as_dict(self):
        return {c: getattr(self, c) for c in self.COLUMNS}


def _pct(flags):
    return 100.0 * float(np.mean(flags))


def genuineness_scan(data: Dataset, K: int, bias_list, trials: int, seed: int,
                     policy: OrientationPolicy | None = None, box: float = DEFAULT_BOX,
                     eps: float = DEFAULT_EPS, threads: int = 1) -> list[ScanRow]:
    """Random weight matrices at each bias; aggregate genuineness statistics.

    Trial ``t`` draws its hidden-weight directions from the stream
    ``(seed, t)``, so every bias shifts the same directions.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if K < 1:
        raise ValueError("K must be at least 1")
    rows = []
    for bias in bias_list:
        def trial(t, bias=bias):
            w = draw_hidden_weights(_rng.stream(seed, t, "w"), K, data.d, bias)
            pattern, _, verdict = analyse_cell(NetworkWeights.with_unit_output(w), data, policy, box, eps)
            return verdict, activated_fraction(pattern)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(trial, range(trials)))
        else:
            results = [trial(t) for t in range(trials)]
        verdicts = [v for v, _ in results]
        rows.append(ScanRow(
            bias=float(bias),
            trials=trials,
            genuine_pct=_pct([v.genuine for v in verdicts]),
            continuous_pct=_pct([v.kind is Kind.CONTINUOUS for v in verdicts]),
            mean_pg=float(np.mean([v.p_g for v in verdicts])),
            activated_pct=_pct([a for _, a in results]),
            inconclusive_pct=_pct([v.status is Status.INCONCLUSIVE for v in verdicts]),
            seed=seed,
            verdicts=verdicts,
        ))
    return rows
