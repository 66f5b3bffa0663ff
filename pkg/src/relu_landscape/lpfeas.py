"""Feasibility of mixed strict / non-strict linear inequality systems.

A system asks for ``c`` with ``a.c + b > 0`` on strict rows and
``a.c + b <= 0`` on non-strict rows.  Strictness is handled with a margin
variable::

    max t   s.t.  a.c + b >= t      (strict rows)
                  a.c + b <= 0      (non-strict rows)
                  0 <= t <= 1,  |c_i| <= M

and the system is declared feasible when the optimal margin exceeds ``eps``.

The margin LP has few variables and many rows, so it is solved through its
dual (one equality row per variable) with a dense revised simplex.  The box
rows give the dual an immediate feasible basis.  Dantzig pricing is used
until a run of degenerate pivots, after which Bland's rule takes over for
the rest of the solve.
"""
from __future__ import annotations

import enum
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

DEFAULT_BOX = 1e6
DEFAULT_EPS = 1e-9

_REFACTOR_EVERY = 64
_DEGENERATE_RUN = 50
_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_RANK_RTOL = 1e-12
_PERTURB = 1e-7


class LPStatus(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class InequalitySystem:
    strict_A: np.ndarray
    strict_b: np.ndarray
    nonstrict_A: np.ndarray
    nonstrict_b: np.ndarray
    box: float = DEFAULT_BOX

    def __post_init__(self):
        sA = np.atleast_2d(np.asarray(self.strict_A, dtype=float))
        nA = np.atleast_2d(np.asarray(self.nonstrict_A, dtype=float))
        sb = np.asarray(self.strict_b, dtype=float).reshape(-1)
        nb = np.asarray(self.nonstrict_b, dtype=float).reshape(-1)
        if sA.shape[1] != nA.shape[1]:
            raise ValueError("strict and non-strict rows have different widths")
        if sA.shape[0] != sb.size or nA.shape[0] != nb.size:
            raise ValueError("row and constant counts differ")
        if sA.shape[1] < 1:
            raise ValueError("need at least one variable")
        if not (np.all(np.isfinite(sA)) and np.all(np.isfinite(nA))
                and np.all(np.isfinite(sb)) and np.all(np.isfinite(nb))):
            raise ValueError("system has non-finite entries")
        if not self.box > 0:
            raise ValueError("box bound must be positive")
        for name, val in (("strict_A", sA), ("strict_b", sb), ("nonstrict_A", nA), ("nonstrict_b", nb)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.strict_A.shape[1]

    @property
    def rows(self) -> int:
        return self.strict_A.shape[0] + self.nonstrict_A.shape[0]

    @classmethod
    def from_rows(cls, strict=(), nonstrict=(), n=None, box=DEFAULT_BOX):
        """Build from ``(a, b)`` pairs."""
        strict, nonstrict = list(strict), list(nonstrict)
        if n is None:
            first = (strict or nonstrict or [None])[0]
            if first is None:
                raise ValueError("n is required for an empty system")
            n = len(np.atleast_1d(first[0]))

        def stack(rows):
            if not rows:
                return np.zeros((0, n)), np.zeros(0)
            return (np.array([np.atleast_1d(a) for a, _ in rows], dtype=float),
                    np.array([b for _, b in rows], dtype=float))

        sA, sb = stack(strict)
        nA, nb = stack(nonstrict)
        return cls(sA, sb, nA, nb, box)

    def values(self, c):
        c = np.asarray(c, dtype=float)
        return self.strict_A @ c + self.strict_b, self.nonstrict_A @ c + self.nonstrict_b

    def scaled(self, strict_scale, nonstrict_scale) -> "InequalitySystem":
        s = np.asarray(strict_scale, dtype=float)
        t = np.asarray(nonstrict_scale, dtype=float)
        return InequalitySystem(self.strict_A * s[:, None], self.strict_b * s,
                                self.nonstrict_A * t[:, None], self.nonstrict_b * t, self.box)

    def dumps(self) -> str:
        """Plain-text form: a header, then one ``S``/``N`` line per row."""
        out = io.StringIO()
        out.write(f"n {self.n}\nbox {self.box!r}\n")
        for tag, A, b in (("S", self.strict_A, self.strict_b), ("N", self.nonstrict_A, self.nonstrict_b)):
            for a, bb in zip(A, b):
                out.write(" ".join([tag, *(repr(float(v)) for v in a), repr(float(bb))]) + "\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str) -> "InequalitySystem":
        n, box = None, DEFAULT_BOX
        strict, nonstrict = [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag, rest = parts[0], parts[1:]
            if tag == "n":
                n = int(rest[0])
            elif tag == "box":
                box = float(rest[0])
            elif tag in ("S", "N"):
                vals = [float(v) for v in rest]
                if n is None or len(vals) != n + 1:
                    raise ValueError(f"line {lineno}: expected {n} coefficients and a constant")
                (strict if tag == "S" else nonstrict).append((vals[:-1], vals[-1]))
            else:
                raise ValueError(f"line {lineno}: unknown row type {tag!r}")
        if n is None:
            raise ValueError("missing 'n' header")
        return cls.from_rows(strict, nonstrict, n=n, box=box)


@dataclass
class LPResult:
    status: LPStatus
    witness: np.ndarray | None = None
    margin: float | None = None
    reason: str = ""
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is LPStatus.FEASIBLE


def check_witness(system: InequalitySystem, c, eps: float = DEFAULT_EPS) -> bool:
    """Independent re-substitution of a witness into the original rows."""
    c = np.asarray(c, dtype=float)
    sv, nv = system.values(c)
    cmax = float(np.max(np.abs(c))) if c.size else 0.0
    slack = 1e-9 * (1.0 + np.abs(system.nonstrict_A).sum(axis=1) * cmax + np.abs(system.nonstrict_b))
    return bool(np.all(sv >= eps / 2) and np.all(nv <= slack))


# --- simplex -----------------------------------------------------------------

@dataclass
class _SimplexOutcome:
    status: str
    basis: list = field(default_factory=list)
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0


def _solve_revised(cost, A, b, basis, max_iter, blocked=None):
    """Phase-2 revised simplex for ``min cost.x, A x = b, x >= 0`` from a feasible basis."""
    m, ncol = A.shape
    basis = list(basis)
    colmax = np.abs(A).max(axis=0)
    bland = False
    degenerate = 0
    Binv = xB = None
    for it in range(max_iter + 1):
        if it % _REFACTOR_EVERY == 0:
            try:
                Binv = np.linalg.inv(A[:, basis])
            except np.linalg.LinAlgError:
                return _SimplexOutcome("singular", basis, iterations=it)
            if not np.all(np.isfinite(Binv)):
                return _SimplexOutcome("singular", basis, iterations=it)
            xB = Binv @ b
            xB[np.abs(xB) < 1e-12 * (1 + np.abs(b).max())] = 0.0
            if np.any(xB < -1e-7 * (1 + np.abs(b).max())):
                return _SimplexOutcome("singular", basis, iterations=it)
            np.maximum(xB, 0.0, out=xB)
        pi = cost[basis] @ Binv
        d = cost - pi @ A
        scale = _COST_TOL * (1.0 + np.abs(pi).max() * colmax)
        d[basis] = 0.0
        if blocked is not None:
            d[blocked] = 0.0
        improving = d < -scale
        if not improving.any():
            x = np.zeros(ncol)
            x[basis] = xB
            return _SimplexOutcome("optimal", basis, x, pi, float(cost @ x), it)
        if it == max_iter:
            break
        q = int(np.argmax(improving)) if bland else int(np.argmin(d / (1.0 + colmax)))
        col = Binv @ A[:, q]
        pos = col > _PIVOT_TOL
        if not pos.any():
            return _SimplexOutcome("unbounded", basis, iterations=it)
        ratios = np.full(m, np.inf)
        ratios[pos] = xB[pos] / col[pos]
        theta = ratios.min()
        ties = np.flatnonzero(ratios <= theta + 1e-12 * (1.0 + theta))
        if bland:
            r = int(min(ties, key=lambda k: basis[k]))
        else:
            r = int(ties[np.argmax(col[ties])])
        piv = col[r]
        xB = xB - theta * col
        xB[r] = theta
        np.maximum(xB, 0.0, out=xB)
        Binv[r] /= piv
        col[r] = 0.0
        Binv -= np.outer(col, Binv[r])
        basis[r] = q
        if theta <= 1e-14:
            degenerate += 1
            if degenerate >= _DEGENERATE_RUN:
                bland = True
        else:
            degenerate = 0
    return _SimplexOutcome("iteration_limit", basis, iterations=max_iter)


def simplex(cost, A, b, basis=None, max_iter=None) -> _SimplexOutcome:
    """Two-phase simplex for ``min cost.x`` subject to ``A x = b, x >= 0``.

    When a feasible ``basis`` is supplied phase one is skipped.  The returned
    ``duals`` are the simplex multipliers of the final basis.
    """
    cost = np.asarray(cost, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    m, ncol = A.shape
    if max_iter is None:
        max_iter = 50 * (m + ncol)
    if basis is not None:
        return _solve_revised(cost, A, b, basis, max_iter)

    neg = b < 0
    A = A.copy()
    A[neg] *= -1
    b[neg] *= -1
    A1 = np.hstack([A, np.eye(m)])
    art = np.arange(ncol, ncol + m)
    phase1 = _solve_revised(np.r_[np.zeros(ncol), np.ones(m)], A1, b, list(art), max_iter)
    if phase1.status != "optimal":
        return phase1
    if phase1.objective > 1e-9 * (1.0 + np.abs(b).max()):
        return _SimplexOutcome("infeasible", phase1.basis, iterations=phase1.iterations)
    basis = list(phase1.basis)
    Binv = np.linalg.inv(A1[:, basis])
    for r, var in enumerate(list(basis)):
        if var < ncol:
            continue
        row = Binv[r] @ A
        row[[v for v in basis if v < ncol]] = 0.0
        k = int(np.argmax(np.abs(row)))
        if abs(row[k]) > _PIVOT_TOL:
            basis[r] = k
            Binv = np.linalg.inv(A1[:, basis])
        # otherwise the row is redundant; its artificial stays basic at zero
    out = _solve_revised(np.r_[cost, np.zeros(m)], A1, b, basis,
                         max_iter - phase1.iterations, blocked=art)
    out.iterations += phase1.iterations
    if out.duals is not None:
        out.duals = np.where(neg, -out.duals, out.duals)
    if out.x is not None:
        out.x = out.x[:ncol]
    return out


# --- feasibility ---------------------------------------------------------------

def _row_space(G):
    gram = G.T @ G
    w, V = np.linalg.eigh(gram)
    keep = w > _RANK_RTOL * max(w[-1], 0.0)
    return V[:, keep].T


def _margin_lp(sA, sb, nA, nb, M, t_cap, max_iter):
    """Solve the margin LP through its dual; returns (status, u, t, iterations).

    ``t`` is None when the dual is unbounded, i.e. the relaxed primal is empty.
    """
    nv = sA.shape[1]
    ms, mn = sA.shape[0], nA.shape[0]
    # dual columns: [box+ (nv), box- (nv), t-cap, strict (ms), non-strict (mn), surplus]
    E = np.zeros((nv + 1, 2 * nv + 1 + ms + mn + 1))
    E[:nv, :nv] = np.eye(nv)
    E[:nv, nv:2 * nv] = -np.eye(nv)
    E[nv, 2 * nv] = 1.0
    o = 2 * nv + 1
    E[:nv, o:o + ms] = -sA.T
    E[nv, o:o + ms] = 1.0
    E[:nv, o + ms:o + ms + mn] = nA.T
    E[nv, -1] = -1.0
    cost = np.concatenate([np.full(2 * nv, M), [t_cap], sb, -nb, [0.0]])
    rhs = np.zeros(nv + 1)
    rhs[nv] = 1.0
    start = list(range(nv)) + [2 * nv]

    # a tiny fixed perturbation of the right-hand side breaks the heavy
    # degeneracy of this dual; the final basis is then re-checked against the
    # exact right-hand side (reduced costs do not depend on it)
    bump = _PERTURB * (1.0 + np.arange(nv + 1) % 7 / 7.0)
    bump[nv] = 0.0
    out = simplex(cost, E, rhs + bump, basis=start, max_iter=max(max_iter, 1))
    if out.status == "optimal":
        try:
            xB = np.linalg.solve(E[:, out.basis], rhs)
        except np.linalg.LinAlgError:
            xB = None
        if xB is None or xB.min() < -1e-9:
            out = simplex(cost, E, rhs, basis=start, max_iter=max(max_iter - out.iterations, 1))
    if out.status == "unbounded":
        return "optimal", None, None, out.iterations
    if out.status != "optimal":
        return out.status, None, None, out.iterations
    if not np.all(np.isfinite(out.duals)):
        return "non-finite multipliers", None, None, out.iterations
    return "optimal", out.duals[:nv], float(out.duals[nv]), out.iterations


def _solve_with_row_generation(sA, sb, nA, nb, M, t_cap, eps, max_iter):
    """Solve the margin LP on a growing working set of rows.

    Each restricted problem is a relaxation, so a non-positive margin there
    already settles infeasibility; once the restricted optimum satisfies
    every row it is optimal for the full system.
    """
    nv = sA.shape[1]
    ms = sA.shape[0]
    total = ms + nA.shape[0]
    batch = nv + 1
    if total <= 4 * batch:
        return _margin_lp(sA, sb, nA, nb, M, t_cap, max_iter)
    A = np.vstack([sA, nA])
    b = np.concatenate([sb, nb])
    strict = np.arange(total) < ms
    norms = np.abs(A).sum(axis=1)
    # start from the rows that are most binding at the origin
    score = np.where(strict, -b, b)
    working = np.zeros(total, dtype=bool)
    working[np.argsort(-score, kind="stable")[:2 * batch]] = True
    iters = 0
    while True:
        ws, wn = working & strict, working & ~strict
        status, u, t, k = _margin_lp(A[ws], b[ws], A[wn], b[wn], M, t_cap, max_iter - iters)
        iters += k
        if status != "optimal" or t is None or t <= eps:
            return status, u, t, iters
        val = A @ u + b
        slack = 1e-12 * (1.0 + norms * np.abs(u).max() + np.abs(b))
        viol = np.where(strict, t - val, val) - slack
        viol[working] = -np.inf
        new = np.flatnonzero(viol > 0)
        if new.size == 0:
            return status, u, t, iters
        working[new[np.argsort(-viol[new], kind="stable")[:batch]]] = True


def feasibility(system: InequalitySystem, eps: float = DEFAULT_EPS, max_iter: int | None = None,
                compress: bool = True) -> LPResult:
    """Decide whether the strict/non-strict system has a solution inside the box.

    With ``compress`` the LP is posed on the row space of the coefficient
    matrix (the rows cannot see other directions); the box then applies to
    coordinates in an orthonormal basis of that space.
    """
    n, M = system.n, float(system.box)
    sA, sb = system.strict_A, system.strict_b
    nA, nb = system.nonstrict_A, system.nonstrict_b
    if max_iter is None:
        max_iter = 50 * (system.rows + n)

    t_cap = 1.0
    zero_s = ~np.any(sA != 0, axis=1)
    if zero_s.any():
        low = float(sb[zero_s].min())
        if low <= eps:
            return LPResult(LPStatus.INFEASIBLE, reason="strict row with zero coefficients is not positive")
        t_cap = min(t_cap, low)
    zero_n = ~np.any(nA != 0, axis=1)
    if zero_n.any() and float(nb[zero_n].max()) > 0.0:
        return LPResult(LPStatus.INFEASIBLE, reason="non-strict row with zero coefficients is positive")
    sA, sb = sA[~zero_s], sb[~zero_s]
    nA, nb = nA[~zero_n], nb[~zero_n]

    if sA.shape[0] + nA.shape[0] == 0:
        return LPResult(LPStatus.FEASIBLE, np.zeros(n), t_cap, "only constant rows")

    basis_map = None
    if compress and n > 1:
        G = np.vstack([sA, nA])
        V = _row_space(G)
        if V.shape[0] < n:
            basis_map = V
            sA, nA = sA @ V.T, nA @ V.T
    status, u, t, iters = _solve_with_row_generation(sA, sb, nA, nb, M, t_cap, eps, max_iter)
    if status != "optimal":
        return LPResult(LPStatus.INCONCLUSIVE, reason=status, iterations=iters)
    if t is None:
        return LPResult(LPStatus.INFEASIBLE, reason="relaxed system infeasible", iterations=iters)
    if t <= eps:
        return LPResult(LPStatus.INFEASIBLE, margin=t, reason="optimal margin not positive", iterations=iters)
    c = basis_map.T @ u if basis_map is not None else u
    if not check_witness(system, c, eps):
        return LPResult(LPStatus.INCONCLUSIVE, c, t, "witness failed re-substitution", iters)
    return LPResult(LPStatus.FEASIBLE, c, t, iterations=iters)


# --- brute-force oracle ----------------------------------------------------------

def vertex_oracle_2d(system: InequalitySystem, grid: int = 201) -> bool:
    """Brute-force feasibility for two variables (test oracle).

    Enumerates every pairwise intersection of boundary lines (rows and box
    edges), keeps the points of the closed region, and tests the centroid of
    those vertices, which lies in the relative interior.  A dense grid over
    the box is tried as well.
    """
    if system.n != 2:
        raise ValueError("vertex_oracle_2d needs exactly two variables")
    M = float(system.box)
    sA, sb, nA, nb = system.strict_A, system.strict_b, system.nonstrict_A, system.nonstrict_b
    if sA.shape[0] + nA.shape[0] == 0:
        return True

    def strictly_ok(p):
        return np.all(sA @ p + sb > 0) and np.all(nA @ p + nb <= 0) and np.all(np.abs(p) <= M)

    lines = [(-a, -b) for a, b in zip(sA, sb)] + [(a, b) for a, b in zip(nA, nb)]
    lines += [(np.array([1.0, 0.0]), -M), (np.array([-1.0, 0.0]), -M),
              (np.array([0.0, 1.0]), -M), (np.array([0.0, -1.0]), -M)]
    # closed region: every line value <= 0
    L = np.array([a for a, _ in lines])
    c0 = np.array([b for _, b in lines])
    tol = 1e-9 * (1.0 + np.abs(L).sum(axis=1) * M + np.abs(c0))
    verts = []
    for (a1, b1), (a2, b2) in itertools.combinations(lines, 2):
        mat = np.array([a1, a2])
        if abs(np.linalg.det(mat)) < 1e-12:
            continue
        p = np.linalg.solve(mat, [-b1, -b2])
        if np.all(L @ p + c0 <= tol):
            verts.append(p)
    if verts:
        centre = np.mean(verts, axis=0)
        if strictly_ok(centre):
            return True
    axis = np.linspace(-M, M, grid)
    P = np.array(np.meshgrid(axis, axis)).reshape(2, -1)
    ok = np.all(sA @ P + sb[:, None] > 0, axis=0) & np.all(nA @ P + nb[:, None] <= 0, axis=0)
    return bool(ok.any())
