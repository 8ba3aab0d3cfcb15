"""Dense equality-form linear programming: min c.x s.t. A x = b, x >= 0.

Revised simplex with an explicitly maintained basis inverse (periodically
refactorized), Dantzig pricing with partial pricing on wide problems, and a
switch to Bland's rule after a degenerate streak as a second line of defense
against cycling. The working RHS carries a tiny deterministic perturbation
that removes primal degeneracy (the l1-gauge instances are extremely
degenerate); the reported point and objective are recomputed from the exact
RHS with the final optimal basis. Phase 1 uses artificial variables;
redundant rows discovered there are eliminated before phase 2. All pivot
choices are index-deterministic, so identical inputs produce identical
solutions. solve_lp is a pure function of its arguments and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IoError, NumericError, SolverStall, UsageError
from .linalg import as_matrix, as_vector, format_matrix, parse_matrix

__all__ = ["LPProblem", "LPSolution", "solve_lp", "dump_problem", "load_problem"]

_PIV_TOL = 1e-9  # smallest acceptable pivot magnitude in the ratio test
_DEGEN_STREAK = 30  # degenerate pivots tolerated before switching to Bland
_REFACTOR_EVERY = 100  # pivots between basis-inverse refactorizations
_PARTIAL_WIDTH = 1024  # price in blocks when the column count exceeds this
_PERTURB = 1e-11  # relative RHS perturbation scale (removes primal degeneracy)


def _perturbed(b: np.ndarray) -> np.ndarray:
    """Deterministically perturbed RHS. Gauge LPs are massively primal
    degenerate (optimal support is tiny), and a generic RHS makes every pivot
    strictly improving, so the simplex cannot stall. Reduced costs do not
    depend on b, hence the final basis stays optimal for the true RHS."""
    idx = np.arange(b.size, dtype=np.uint64)
    mix = (idx * np.uint64(2654435761)) % np.uint64(2 ** 32)
    weights = 1.0 + mix.astype(float) / 2.0 ** 32
    return b + _PERTURB * (1.0 + float(np.max(np.abs(b)))) * weights


@dataclass(frozen=True)
class LPProblem:
    """Equality-form LP data; every variable is constrained >= 0."""

    constraint_matrix: np.ndarray
    rhs: np.ndarray
    objective: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.constraint_matrix, "constraint_matrix")
        b = as_vector(self.rhs, "rhs")
        c = as_vector(self.objective, "objective")
        if a.shape != (b.size, c.size):
            raise UsageError(
                f"inconsistent LP dimensions: A is {a.shape}, rhs has {b.size}, objective has {c.size}"
            )
        object.__setattr__(self, "constraint_matrix", a)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "objective", c)


@dataclass(frozen=True)
class LPSolution:
    """Solver verdict with optimality certificates.

    For status "optimal": point is primal feasible to feas_tol and the
    duality gap against dual_point is below gap_tol. For "infeasible",
    dual_point carries a Farkas certificate (y.b > 0, A^T y <~ 0).
    """

    status: str
    point: np.ndarray | None = None
    objective_value: float | None = None
    dual_point: np.ndarray | None = None
    iterations: int = 0
    basis: np.ndarray | None = None  # optimal basis labels, reusable as a warm start


class _Stall(Exception):
    pass


class _Simplex:
    """One simplex run over working columns W with a starting basis."""

    def __init__(self, w: np.ndarray, b: np.ndarray, c: np.ndarray, basis: np.ndarray,
                 binv: np.ndarray, max_iter: int, price_tol: float):
        self.w = w
        self.b = b
        self.c = c
        self.basis = basis
        self.binv = binv
        self.max_iter = max_iter
        self.price_tol = price_tol
        self.iterations = 0
        self.pivots_since_refactor = 0
        self.degen_streak = 0
        self.bland = False
        self.block_start = 0
        self.in_basis = np.zeros(w.shape[1], dtype=bool)
        self.in_basis[basis] = True
        self.xb = self.binv @ self.b

    def refactor(self):
        bmat = self.w[:, self.basis]
        try:
            self.binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as exc:
            raise NumericError("basis matrix became singular") from exc
        self.pivots_since_refactor = 0
        self.xb = self.binv @ self.b

    def _price(self) -> int | None:
        """Entering column index, or None when optimal."""
        k = self.w.shape[1]
        y = self.binv.T @ self.c[self.basis]
        if self.bland or k <= _PARTIAL_WIDTH:
            r = self.c - self.w.T @ y
            r[self.in_basis] = 0.0
            eligible = np.flatnonzero(r < -self.price_tol)
            if eligible.size == 0:
                return None
            if self.bland:
                return int(eligible[0])
            return int(eligible[np.argmin(r[eligible])])
        # partial pricing: fixed block grid scanned round-robin starting at the
        # block that produced the previous entering column; a full cycle with
        # no candidate certifies optimality
        n_blocks = (k + _PARTIAL_WIDTH - 1) // _PARTIAL_WIDTH
        first = self.block_start // _PARTIAL_WIDTH
        for step in range(n_blocks):
            blk = (first + step) % n_blocks
            lo = blk * _PARTIAL_WIDTH
            idx = np.arange(lo, min(lo + _PARTIAL_WIDTH, k))
            r = self.c[idx] - self.w[:, idx].T @ y
            r[self.in_basis[idx]] = 0.0
            eligible = np.flatnonzero(r < -self.price_tol)
            if eligible.size:
                self.block_start = lo
                return int(idx[eligible[np.argmin(r[eligible])]])
        return None

    def run(self) -> str:
        while True:
            if self.iterations >= self.max_iter:
                raise _Stall()
            self.iterations += 1
            entering = self._price()
            if entering is None:
                return "optimal"
            d = self.binv @ self.w[:, entering]
            eligible = np.flatnonzero(d > _PIV_TOL)
            if eligible.size == 0:
                return "unbounded"
            ratios = np.maximum(self.xb[eligible], 0.0) / d[eligible]
            theta = ratios.min()
            ties = eligible[np.flatnonzero(ratios <= theta * (1 + 1e-12) + 1e-15)]
            # smallest basis label among ties: deterministic and Bland-compatible
            leave_pos = int(ties[np.argmin(self.basis[ties])])
            if theta <= 1e-12:
                self.degen_streak += 1
                if self.degen_streak > _DEGEN_STREAK:
                    self.bland = True
            else:
                self.degen_streak = 0
                self.bland = False
            piv = d[leave_pos]
            row = self.binv[leave_pos] / piv
            self.binv -= np.outer(d, row)
            self.binv[leave_pos] = row
            self.in_basis[self.basis[leave_pos]] = False
            self.in_basis[entering] = True
            self.basis[leave_pos] = entering
            self.xb -= theta * d
            self.xb[leave_pos] = theta
            self.pivots_since_refactor += 1
            if self.pivots_since_refactor >= _REFACTOR_EVERY:
                self.refactor()


def solve_lp(p: LPProblem, feas_tol: float = 1e-9, gap_tol: float = 1e-8,
             max_iter: int | None = None,
             start_basis: np.ndarray | None = None) -> LPSolution:
    """Solve an equality-form LP to proven optimality or a status certificate.

    start_basis, when given, must index an invertible, primal-feasible basis
    (e.g. the basis of a previous solve over a column subset of the same
    rows); phase 1 is then skipped. An unusable start falls back to phase 1.

    Raises SolverStall when the iteration cap (default 50*(m+v)) is exceeded
    and NumericError on non-finite data or a numerically broken basis.
    """
    a, b, c = p.constraint_matrix, p.rhs, p.objective
    m, v = a.shape
    if v == 0:
        raise UsageError("LP needs at least one variable")
    if max_iter is None:
        max_iter = 50 * (m + v)
    if m == 0:
        if np.any(c < 0):
            return LPSolution(status="unbounded")
        return LPSolution(status="optimal", point=np.zeros(v), objective_value=0.0,
                          dual_point=np.zeros(0))

    sign = np.where(b < 0, -1.0, 1.0)
    a1 = a * sign[:, None]
    b1 = b * sign
    b1p = _perturbed(b1)
    bscale = 1.0 + float(np.max(np.abs(b))) if b.size else 1.0
    price_tol = 1e-9 * (1.0 + float(np.max(np.abs(c))))

    if start_basis is not None:
        warm = _warm_basis(a1, b1p, np.asarray(start_basis, dtype=int), m, v)
        if warm is not None:
            return _phase2(a, a1, b, b1, b1p, sign, c, warm[0], warm[1], 0,
                           np.arange(m), max_iter, price_tol, feas_tol, gap_tol, bscale)

    # phase 1: minimize the sum of artificial variables
    w1 = np.hstack([a1, np.eye(m)])
    c1 = np.concatenate([np.zeros(v), np.ones(m)])
    basis = np.arange(v, v + m)
    sim = _Simplex(w1, b1p, c1, basis, np.eye(m), max_iter, 1e-9)
    try:
        status = sim.run()
    except _Stall as exc:
        raise SolverStall(f"phase-1 iteration cap {max_iter} exceeded") from exc
    if status != "optimal":  # pragma: no cover - phase-1 objective is bounded below
        raise NumericError("phase-1 simplex reported unbounded")
    sim.refactor()
    xb = np.maximum(sim.binv @ b1, 0.0)
    obj1 = float(c1[sim.basis] @ xb)
    if obj1 > feas_tol * bscale:
        y = sim.binv.T @ c1[sim.basis]
        return LPSolution(status="infeasible", dual_point=sign * y, iterations=sim.iterations)

    # pivot artificials out of the basis; rows with no eligible pivot are redundant
    redundant: list[int] = []
    for pos in range(m):
        if sim.basis[pos] < v:
            continue
        row = sim.binv[pos] @ a1
        row[sim.basis[sim.basis < v]] = 0.0
        candidates = np.flatnonzero(np.abs(row) > 1e-7)
        if candidates.size:
            entering = int(candidates[0])
            d = sim.binv @ w1[:, entering]
            piv = d[pos]
            r = sim.binv[pos] / piv
            sim.binv -= np.outer(d, r)
            sim.binv[pos] = r
            sim.basis[pos] = entering
        else:
            redundant.append(pos)
    keep = np.arange(m)
    if redundant:
        keep = np.setdiff1d(np.arange(m), redundant)
        a1, b1, b1p, sign = a1[keep], b1[keep], b1p[keep], sign[keep]
        basis = sim.basis[keep].copy()
        binv = np.linalg.inv(a1[:, basis])
    else:
        basis = sim.basis.copy()
        binv = sim.binv
    if np.any(basis >= v):  # pragma: no cover - exhausted by the loop above
        raise NumericError("artificial variable stuck in basis")

    return _phase2(a, a1, b, b1, b1p, sign, c, basis, binv, sim.iterations,
                   keep, max_iter, price_tol, feas_tol, gap_tol, bscale)


def _warm_basis(a1: np.ndarray, b1p: np.ndarray, basis: np.ndarray, m: int,
                v: int) -> tuple[np.ndarray, np.ndarray] | None:
    if basis.size != m or np.any(basis < 0) or np.any(basis >= v):
        return None
    try:
        binv = np.linalg.inv(a1[:, basis])
    except np.linalg.LinAlgError:
        return None
    if np.min(binv @ b1p) < -1e-9:
        return None
    return basis.copy(), binv


def _phase2(a, a1, b, b1, b1p, sign, c, basis, binv, start_iters,
            row_keep, max_iter, price_tol, feas_tol, gap_tol, bscale) -> LPSolution:
    m, v = a1.shape
    sim2 = _Simplex(a1, b1p, c, basis, binv, max_iter, price_tol)
    sim2.iterations = start_iters
    try:
        status = sim2.run()
    except _Stall as exc:
        raise SolverStall(f"iteration cap {max_iter} exceeded") from exc
    if status == "unbounded":
        return LPSolution(status="unbounded", iterations=sim2.iterations)

    sim2.refactor()
    xb = sim2.binv @ b1
    x = np.zeros(v)
    x[sim2.basis] = np.maximum(xb, 0.0)
    residual = float(np.max(np.abs(a @ x - b))) if m else 0.0
    if residual > 100 * feas_tol * bscale:
        raise NumericError(f"optimal basis lost feasibility (residual {residual:.3e})")
    y = sim2.binv.T @ c[sim2.basis]
    obj = float(c @ x)
    gap = abs(obj - float(b1 @ y))
    if gap > gap_tol * (1.0 + abs(obj)):  # pragma: no cover - gap is roundoff only
        raise NumericError(f"duality gap {gap:.3e} exceeds tolerance")
    # rows dropped as redundant carry zero dual weight
    dual = np.zeros(a.shape[0])
    dual[row_keep] = sign * y
    return LPSolution(status="optimal", point=x, objective_value=obj,
                      dual_point=dual, iterations=sim2.iterations,
                      basis=sim2.basis.copy())


def dump_problem(p: LPProblem, path) -> None:
    """Debugging dump: constraint matrix in the matrix text format followed by
    one-line rhs and objective records."""
    fmt = lambda v: " ".join(format(x, ".17g") for x in v)  # noqa: E731
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(format_matrix(p.constraint_matrix))
            fh.write(f"rhs {fmt(p.rhs)}\n")
            fh.write(f"objective {fmt(p.objective)}\n")
    except OSError as exc:
        raise IoError(path, f"cannot write LP dump: {exc}") from exc


def load_problem(path) -> LPProblem:
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(path, f"cannot read LP dump: {exc}") from exc
    records = {}
    matrix_lines = []
    for ln in lines:
        head = ln.split(" ", 1)[0]
        if head in ("rhs", "objective"):
            records[head] = np.array([float(t) for t in ln.split()[1:]])
        else:
            matrix_lines.append(ln)
    if set(records) != {"rhs", "objective"}:
        raise IoError(path, "LP dump must contain rhs and objective records")
    a = parse_matrix("\n".join(matrix_lines))
    return LPProblem(constraint_matrix=a, rhs=records["rhs"], objective=records["objective"])
