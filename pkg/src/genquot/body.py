"""The random body B = absconv{g_1,...,g_N} = Gamma(B_1^N) and its functionals.

A body is the n x N matrix Gamma whose columns are i.i.d. N(0, Id/n) Gaussian
vectors; the norm it induces on R^n has B as unit ball. The gauge is computed
exactly as the minimum l1 preimage norm via an equality-form LP (variables
split into positive and negative parts); the dual norm is the support
function max_j |<g_j, u>|, a plain matrix product.

For low dimensions (volume estimation, batched section sampling) the gauge is
also available through the polar description of B: the facets of the convex
hull of {+-g_j} give the vertices of the polar body, and the gauge is a single
max of inner products. Both routes agree to LP tolerance and are cross-checked
in the test suite.

Bodies are immutable after construction; every operation here is a read-only
pure function (Monte Carlo ones of their SeedSpec too) and safe to call from
any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import IoError, NotInSpan, NumericError, UsageError
from .linalg import as_matrix, as_vector, format_matrix, parse_matrix
from .linprog import LPProblem, LPSolution, solve_lp
from .sampler import HaarSubspace, SeedSpec, gaussian_matrix, generator

__all__ = [
    "RandomQuotientBody",
    "RadiiEstimate",
    "make_body",
    "body_from_matrix",
    "body_norm",
    "body_norm_with_dual",
    "body_norm_many",
    "dual_norm",
    "dual_norm_many",
    "operator_norm",
    "radii",
    "mean_width",
    "volume_ratio",
    "section_distortion",
    "format_body",
    "parse_body",
    "save_body",
    "load_body",
]

_RANK_TOL = 1e-8
_MEMBERSHIP_SLACK = 1e-8
_HULL_DIM_CAP = 6  # batch gauge falls back to per-point LPs above this
VOLUME_DIM_CAP = 8


@dataclass(frozen=True)
class RandomQuotientBody:
    """Immutable body data: Gamma, its provenance seed, cached column norms."""

    n: int
    N: int
    gamma: np.ndarray
    seed: SeedSpec
    column_norms: np.ndarray

    @cached_property
    def circumradius(self) -> float:
        return float(self.column_norms.max())

    @cached_property
    def polar_vertices(self) -> np.ndarray:
        """Rows w with B = {x : <w, x> <= 1 for all w}; exact polar V-description.

        Only sensible for small n (facet counts explode with dimension).
        """
        if self.n == 1:
            r = self.circumradius
            return np.array([[1.0 / r], [-1.0 / r]])
        from scipy.spatial import ConvexHull

        pts = np.vstack([self.gamma.T, -self.gamma.T])
        hull = ConvexHull(pts)
        normals = hull.equations[:, :-1]
        offsets = -hull.equations[:, -1]
        if np.any(offsets <= 0):  # pragma: no cover - origin is interior by symmetry
            raise NumericError("convex hull does not contain the origin")
        return normals / offsets[:, None]


@dataclass(frozen=True)
class RadiiEstimate:
    """Exact circumradius and a multi-start upper estimate of the inradius.

    inradius_estimate is the smallest support-function value found, which can
    only overestimate the true inradius; certificate_direction is the unit
    vector achieving it.
    """

    circumradius: float
    inradius_estimate: float
    certificate_direction: np.ndarray


def make_body(n: int, N: int, seed: SeedSpec) -> RandomQuotientBody:
    """Sample the body: Gamma is n x N with i.i.d. N(0, 1/n) entries."""
    if not 1 <= n <= N:
        raise UsageError(f"need 1 <= n <= N, got n={n}, N={N}")
    gamma = gaussian_matrix(n, N, 1.0 / n, seed)
    return body_from_matrix(gamma, seed)


def body_from_matrix(gamma, seed: SeedSpec = SeedSpec(0, 0)) -> RandomQuotientBody:
    """Wrap an explicit column matrix as a body (used for injected test bodies)."""
    g = as_matrix(gamma, "gamma")
    n, N = g.shape
    if N < n:
        raise UsageError(f"need at least n columns, got {n}x{N}")
    smin = float(np.linalg.svd(g, compute_uv=False)[-1])
    if smin <= _RANK_TOL:
        raise NumericError(
            f"gamma is rank deficient: smallest singular value {smin:.3e} <= {_RANK_TOL:g} "
            f"(n={n}, N={N}, seed={seed.as_tuple()})"
        )
    norms = np.linalg.norm(g, axis=0)
    return RandomQuotientBody(n=n, N=N, gamma=g, seed=seed, column_norms=norms)


def _solve_gauge_subset(body: RandomQuotientBody, x: np.ndarray, subset: np.ndarray,
                        start_basis: np.ndarray | None = None) -> LPSolution:
    cols = body.gamma[:, subset]
    a = np.hstack([cols, -cols])
    return solve_lp(LPProblem(constraint_matrix=a, rhs=x, objective=np.ones(2 * subset.size)),
                    start_basis=start_basis)


def _global_labels(subset: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # restricted column i is (+, subset[i]) for i < |S|, else (-, subset[i - |S|]);
    # globals are j for + and N + j for - (caller supplies its own N split)
    ns = subset.size
    plus = basis < ns
    out = np.empty(basis.size, dtype=np.int64)
    out[plus] = subset[basis[plus]]
    out[~plus] = -1 - subset[basis[~plus] - ns]  # negative encoding for the minus copy
    return out


def _restricted_labels(subset: np.ndarray, labels: np.ndarray) -> np.ndarray | None:
    ns = subset.size
    pos = {int(j): i for i, j in enumerate(subset)}
    out = np.empty(labels.size, dtype=np.int64)
    for i, lab in enumerate(labels):
        if lab >= 0:
            out[i] = pos[int(lab)]
        else:
            out[i] = ns + pos[int(-1 - lab)]
    return out


def _gauge_lp(body: RandomQuotientBody, x: np.ndarray) -> LPSolution:
    """min ||t||_1 s.t. Gamma t = x, via t = t+ - t-, both >= 0.

    Solved by delayed column generation: optimize over a working subset of
    columns, then admit columns whose dual constraint |<g_j, y>| <= 1 is
    violated; when none is violated the restricted optimum is certified
    optimal for the full problem (the omitted variables price out).
    """
    if 2 * body.N <= 1024:
        a = np.hstack([body.gamma, -body.gamma])
        sol = solve_lp(LPProblem(constraint_matrix=a, rhs=x, objective=np.ones(2 * body.N)))
        if sol.status == "infeasible":
            raise NotInSpan("point lies outside the column span of gamma")
        if sol.status != "optimal":  # pragma: no cover - gauge LP is bounded below by 0
            raise NumericError(f"gauge LP ended with status {sol.status}")
        return sol

    correlation = np.abs(x @ body.gamma) / body.column_norms
    order = np.argsort(-correlation, kind="stable")
    take = min(body.N, max(4 * body.n, 64))
    subset = np.sort(order[:take])
    warm_labels: np.ndarray | None = None
    for _ in range(60):
        start = _restricted_labels(subset, warm_labels) if warm_labels is not None else None
        sol = _solve_gauge_subset(body, x, subset, start_basis=start)
        if sol.status == "infeasible":
            if subset.size == body.N:
                raise NotInSpan("point lies outside the column span of gamma")
            take = min(body.N, 2 * take)
            subset = np.sort(order[:take])
            continue
        if sol.status != "optimal":  # pragma: no cover
            raise NumericError(f"gauge LP ended with status {sol.status}")
        slack = np.abs(sol.dual_point @ body.gamma) - 1.0
        slack[subset] = 0.0
        violated = np.flatnonzero(slack > 1e-9)
        if violated.size == 0:
            ns = subset.size
            point = np.zeros(2 * body.N)
            point[subset] = sol.point[:ns]
            point[body.N + subset] = sol.point[ns:]
            return LPSolution(status="optimal", point=point,
                              objective_value=sol.objective_value,
                              dual_point=sol.dual_point, iterations=sol.iterations)
        worst = violated[np.argsort(-slack[violated], kind="stable")]
        warm_labels = _global_labels(subset, sol.basis)
        subset = np.union1d(subset, worst[: max(body.n, 32)])
    raise NumericError("gauge column generation did not converge")  # pragma: no cover


def body_norm_with_dual(body: RandomQuotientBody, x) -> tuple[float, np.ndarray]:
    """Gauge of B at x together with the optimal dual vector y.

    y satisfies <x, y> = ||x||_B and max_j |<g_j, y>| <= 1 (+LP tolerance), i.e.
    it is the support-duality witness.
    """
    v = as_vector(x, "x")
    if v.size != body.n:
        raise UsageError(f"vector dimension {v.size} != body dimension {body.n}")
    if not np.any(v):
        return 0.0, np.zeros(body.n)
    sol = _gauge_lp(body, v)
    return float(sol.objective_value), sol.dual_point


def body_norm(body: RandomQuotientBody, x) -> float:
    """Exact gauge ||x||_B = min{||t||_1 : Gamma t = x} within LP tolerances."""
    return body_norm_with_dual(body, x)[0]


def body_norm_many(body: RandomQuotientBody, xs) -> np.ndarray:
    """Gauge of each row of xs; uses the polar facet oracle in low dimension."""
    pts = as_matrix(xs, "points")
    if pts.shape[1] != body.n:
        raise UsageError(f"points have dimension {pts.shape[1]}, body has {body.n}")
    if body.n <= _HULL_DIM_CAP:
        return np.maximum(pts @ body.polar_vertices.T, 0.0).max(axis=1)
    return np.array([body_norm(body, p) for p in pts])


def dual_norm(body: RandomQuotientBody, u) -> float:
    """Support function h_B(u) = max_j |<g_j, u>| (the dual norm of the gauge)."""
    v = as_vector(u, "u")
    if v.size != body.n:
        raise UsageError(f"vector dimension {v.size} != body dimension {body.n}")
    return float(np.max(np.abs(v @ body.gamma)))


def dual_norm_many(body: RandomQuotientBody, us) -> np.ndarray:
    pts = as_matrix(us, "points")
    return np.max(np.abs(pts @ body.gamma), axis=1)


def operator_norm(body: RandomQuotientBody, t) -> float:
    """||T: X_n -> X_n|| = max_j ||T g_j||_B, exact on the hull's extreme points."""
    tm = as_matrix(t, "T")
    if tm.shape != (body.n, body.n):
        raise UsageError(f"T must be {body.n}x{body.n}, got {tm.shape}")
    images = (tm @ body.gamma).T
    return float(max(body_norm(body, img) for img in images))


def max_gauge_in_span(body: RandomQuotientBody, basis: np.ndarray,
                      points: np.ndarray) -> float:
    """max gauge over points known to lie in span(basis).

    A 1-dimensional span needs a single LP: gauge is homogeneous on a line.
    """
    if basis.shape[1] == 1:
        coeffs = basis[:, 0] @ points.T
        return float(np.max(np.abs(coeffs)) * body_norm(body, basis[:, 0]))
    return float(body_norm_many(body, points).max())


# ---------------------------------------------------------------------------
# radii
# ---------------------------------------------------------------------------


def _support_on_circle(body: RandomQuotientBody, thetas: np.ndarray) -> np.ndarray:
    dirs = np.column_stack([np.cos(thetas), np.sin(thetas)])
    return np.max(np.abs(dirs @ body.gamma), axis=1)


def _inradius_exact_2d(body: RandomQuotientBody) -> tuple[float, np.ndarray]:
    # dense angular net, then golden-section polish inside the best bracket
    m = max(8192, 64 * body.N)
    thetas = np.linspace(0.0, np.pi, m, endpoint=False)  # symmetry: h(-u) = h(u)
    vals = _support_on_circle(body, thetas)
    i = int(np.argmin(vals))
    lo, hi = thetas[i] - np.pi / m, thetas[i] + np.pi / m
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc = _support_on_circle(body, np.array([c]))[0]
    fd = _support_on_circle(body, np.array([d]))[0]
    for _ in range(90):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = _support_on_circle(body, np.array([c]))[0]
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = _support_on_circle(body, np.array([d]))[0]
    theta = (a + b) / 2.0
    u = np.array([np.cos(theta), np.sin(theta)])
    return float(np.max(np.abs(u @ body.gamma))), u


def _inradius_descent(body: RandomQuotientBody, restarts: int, seed: SeedSpec,
                      steps: int = 500, decay: float = 0.97) -> tuple[float, np.ndarray]:
    rng = generator(seed)
    u = rng.normal(size=(restarts, body.n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    mean_col = float(np.mean(body.column_norms))
    step = 0.3 / max(mean_col, 1e-12)
    best_val = np.full(restarts, np.inf)
    best_dir = u.copy()
    for _ in range(steps):
        proj = u @ body.gamma
        j = np.argmax(np.abs(proj), axis=1)
        rows = np.arange(restarts)
        vals = np.abs(proj[rows, j])
        improved = vals < best_val
        best_val[improved] = vals[improved]
        best_dir[improved] = u[improved]
        grad = np.sign(proj[rows, j])[:, None] * body.gamma[:, j].T
        u = u - step * grad
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        step *= decay
    proj = u @ body.gamma
    vals = np.max(np.abs(proj), axis=1)
    improved = vals < best_val
    best_val[improved] = vals[improved]
    best_dir[improved] = u[improved]
    k = int(np.argmin(best_val))
    direction = best_dir[k]
    return float(np.max(np.abs(direction @ body.gamma))), direction


def radii(body: RandomQuotientBody, restarts: int = 64, seed: SeedSpec | None = None) -> RadiiEstimate:
    """Circumradius (exact) and inradius estimate (multi-start minimization).

    n = 1 and n = 2 are solved essentially exactly (closed form / angular net
    with golden-section polish); higher dimensions use projected subgradient
    descent on the support function over the sphere and report the best value
    found, an upper bound on the true inradius.
    """
    if body.n == 1:
        u = np.array([1.0])
        val = float(np.max(np.abs(u @ body.gamma)))
        return RadiiEstimate(body.circumradius, val, u)
    if body.n == 2:
        val, u = _inradius_exact_2d(body)
        return RadiiEstimate(body.circumradius, val, u)
    if seed is None:
        raise UsageError("radii requires a SeedSpec for n >= 3 (stochastic restarts)")
    if restarts < 1:
        raise UsageError("restarts must be >= 1")
    val, u = _inradius_descent(body, restarts, seed)
    return RadiiEstimate(body.circumradius, val, u)


# ---------------------------------------------------------------------------
# Monte Carlo functionals
# ---------------------------------------------------------------------------


def _unit_sphere(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    x = rng.normal(size=(count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def mean_width(body: RandomQuotientBody, samples: int, seed: SeedSpec) -> tuple[float, float]:
    """Sphere average of the dual norm (the mean width functional M*)."""
    if samples < 100:
        raise UsageError(f"mean_width needs >= 100 samples, got {samples}")
    rng = generator(seed)
    chunk = max(1, min(samples, (1 << 22) // max(body.N, 1)))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        take = min(chunk, samples - done)
        vals = dual_norm_many(body, _unit_sphere(rng, take, body.n))
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += take
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, float(np.sqrt(var / samples))


def _wilson_interval(hits: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    # 95% score interval; robust at the p -> 0 and p -> 1 ends
    p = hits / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def volume_ratio(body: RandomQuotientBody, samples: int, seed: SeedSpec) -> tuple[float, float, float]:
    """(vol B / vol D)^(1/n) by rejection sampling inside the circumradius ball.

    Returns the point estimate with a 95% binomial confidence interval
    propagated through the 1/n power. Membership is the exact polar-facet
    gauge test ||x||_B <= 1 + 1e-8, identical to the LP gauge to solver
    tolerance.
    """
    if body.n > VOLUME_DIM_CAP:
        raise UsageError(f"volume_ratio is capped at n <= {VOLUME_DIM_CAP}, got n={body.n}")
    if samples < 10_000:
        raise UsageError(f"volume_ratio needs >= 10^4 samples, got {samples}")
    rng = generator(seed)
    r = body.circumradius
    w = body.polar_vertices  # may exceed the batch-dim cap: explicit polar here
    hits = 0
    chunk = max(1, min(samples, (1 << 22) // max(w.shape[0], 1)))
    done = 0
    while done < samples:
        take = min(chunk, samples - done)
        x = _unit_sphere(rng, take, body.n)
        radius = r * rng.random(take) ** (1.0 / body.n)
        pts = x * radius[:, None]
        gauges = np.max(pts @ w.T, axis=1)
        hits += int(np.count_nonzero(gauges <= 1.0 + _MEMBERSHIP_SLACK))
        done += take
    p = hits / samples
    lo, hi = _wilson_interval(hits, samples)
    return (
        float(r * p ** (1.0 / body.n)),
        float(r * lo ** (1.0 / body.n)),
        float(r * hi ** (1.0 / body.n)),
    )


def section_distortion(body: RandomQuotientBody, subspace: HaarSubspace, samples: int,
                       seed: SeedSpec) -> tuple[float, float]:
    """Max and min gauge over sampled unit directions inside the subspace.

    max/min is a lower bound on the true section distortion (sampling misses
    extremes). A 1-dimensional subspace gives max = min exactly.
    """
    if subspace.ambient_dim != body.n:
        raise UsageError(
            f"subspace ambient dimension {subspace.ambient_dim} != body dimension {body.n}"
        )
    if subspace.dim == 1:
        val = body_norm(body, subspace.basis[:, 0])
        return val, val
    if samples < 2:
        raise UsageError("need at least 2 samples")
    rng = generator(seed)
    w = _unit_sphere(rng, samples, subspace.dim)
    dirs = w @ subspace.basis.T
    gauges = body_norm_many(body, dirs)
    return float(gauges.max()), float(gauges.min())


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_HEADER = "GENQUOT-BODY v1"


def format_body(body: RandomQuotientBody) -> str:
    ms, si = body.seed.as_tuple()
    return f"{_HEADER} {body.n} {body.N} {ms} {si}\n" + format_matrix(body.gamma)


def parse_body(text: str) -> RandomQuotientBody:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_HEADER):
        raise IoError("<string>", f"missing '{_HEADER}' header")
    tokens = lines[0].split()
    if len(tokens) != 6:
        raise IoError("<string>", f"malformed body header {lines[0]!r}")
    n, big_n, ms, si = (int(t) for t in tokens[2:])
    gamma = parse_matrix("\n".join(lines[1:]))
    if gamma.shape != (n, big_n):
        raise IoError("<string>", f"header says {n}x{big_n}, matrix is {gamma.shape}")
    return body_from_matrix(gamma, SeedSpec(ms, si))


def save_body(body: RandomQuotientBody, path) -> None:
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(format_body(body))
    except OSError as exc:
        raise IoError(path, f"cannot write body: {exc}") from exc


def load_body(path) -> RandomQuotientBody:
    try:
        with open(path, "r", encoding="ascii") as fh:
            return parse_body(fh.read())
    except OSError as exc:
        raise IoError(path, f"cannot read body: {exc}") from exc
