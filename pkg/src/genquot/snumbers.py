"""s-numbers and Gelfand/Kolmogorov machinery on random quotient norms.

Euclidean s-numbers are singular values (and coincide with Gelfand numbers
between Euclidean spaces). On the quotient norm the Gelfand infimum over
subspaces is intractable, so operators get a certified-style *bracket*
obtained from the Euclidean sandwich r D <= B <= R D: both ends carry honesty
flags because the inradius r is itself a multi-start estimate. The shift
search scans T - lambda*Id over a window sized by the operator norm, using
the Euclidean s-number as proxy objective, and reports the best shift with
its bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .body import RadiiEstimate, RandomQuotientBody, body_norm, dual_norm, operator_norm, radii
from .errors import UsageError
from .linalg import as_matrix, check_orthonormal, svd
from .sampler import HaarSubspace, generator

__all__ = [
    "SNumberBracket",
    "ShiftSearchResult",
    "GelfandSumResult",
    "MnWitness",
    "euclidean_s_numbers",
    "gelfand_bracket",
    "min_over_shifts",
    "gelfand_sum_bracket",
    "mn_witness_check",
    "hs_of_normalized",
]

_CERT_SAMPLES = 64
_RADII_STREAM_OFFSET = 0x5EED_0001  # derived stream for on-demand radii


@dataclass(frozen=True)
class SNumberBracket:
    """Lower/upper estimate pair for a Gelfand number, with certificate kinds.

    Kinds are one of "exact", "sandwich", "sampled". Both sandwich sides
    depend on the sampled inradius estimate, so they are flagged "sampled"
    unless the value is exactly zero. upper_certificate records the sampled
    evaluation of the restriction norm on the canonical codim-(k-1) subspace;
    it is diagnostic and never tightens the bracket.
    """

    k: int
    lower: float
    upper: float
    lower_kind: str
    upper_kind: str
    upper_certificate: float | None = None


@dataclass(frozen=True)
class ShiftSearchResult:
    """Outcome of minimizing the s-number proxy over shifts T - lambda*Id."""

    best_shift: float
    best_value: float
    bracket_at_best: SNumberBracket
    grid: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class GelfandSumResult:
    """Traceless reduction plus the best shifted s-number sum and its bracket."""

    traceless_shift: float
    best_shift: float
    sum_value: float
    lower: float
    upper: float


@dataclass(frozen=True)
class MnWitness:
    """Witness record for membership in M_n(alpha, beta).

    achieved is the smallest singular value of P_{F-perp} T restricted to F;
    the witness certifies membership exactly when achieved >= beta.
    """

    subspace_basis: np.ndarray
    alpha: int
    beta: float
    achieved: float

    @property
    def is_member(self) -> bool:
        return self.achieved >= self.beta


def euclidean_s_numbers(t) -> np.ndarray:
    """Singular values of T, non-increasing; Gelfand numbers on Euclidean spaces."""
    return svd(t).singular_values


def _body_radii(body: RandomQuotientBody, rad: RadiiEstimate | None) -> RadiiEstimate:
    if rad is not None:
        return rad
    return radii(body, seed=body.seed.child(_RADII_STREAM_OFFSET))


def _restriction_certificate(body: RandomQuotientBody, t: np.ndarray, k: int,
                             right_basis: np.ndarray, dual: bool,
                             samples: int) -> float:
    """Sampled sup of ||Tz|| / ||z|| over the orthocomplement of the top k-1
    right singular directions (a codim k-1 subspace, hence an upper-bound
    witness subspace for the k-th Gelfand number)."""
    z_basis = right_basis[:, k - 1:]
    norm: Callable[[np.ndarray], float]
    if dual:
        norm = lambda v: dual_norm(body, v)  # noqa: E731
    else:
        norm = lambda v: body_norm(body, v)  # noqa: E731
    rng = generator(body.seed.child(0xCE27))
    raw = rng.normal(size=(samples, body.n))
    proj = raw @ z_basis @ z_basis.T
    keep = np.linalg.norm(proj, axis=1) > 1e-12
    dirs = [z_basis[:, 0]] + [p / np.linalg.norm(p) for p in proj[keep]]
    best = 0.0
    for z in dirs:
        denom = norm(z)
        if denom <= 1e-14:
            continue
        best = max(best, norm(t @ z) / denom)
    return best


def gelfand_bracket(body: RandomQuotientBody, t, k: int, dual: bool = False,
                    rad: RadiiEstimate | None = None,
                    cert_samples: int = _CERT_SAMPLES) -> SNumberBracket:
    """Bracket [(r/R) s_k, (R/r) s_k] for the k-th Gelfand number of T on X_n.

    dual=True brackets the Kolmogorov number instead, via d_k(T) = c_k(T*) on
    the dual (support-function) norm; the sandwich endpoints coincide because
    the polar of r D <= B <= R D is (1/R) D <= B-polar <= (1/r) D.
    Pass a precomputed RadiiEstimate to avoid re-running the inradius search.
    """
    tm = as_matrix(t, "T")
    if tm.shape != (body.n, body.n):
        raise UsageError(f"T must be {body.n}x{body.n}, got {tm.shape}")
    if not 1 <= k <= body.n:
        raise UsageError(f"need 1 <= k <= n={body.n}, got k={k}")
    dec = svd(tm)
    sk = float(dec.singular_values[k - 1])
    if sk == 0.0:
        return SNumberBracket(k=k, lower=0.0, upper=0.0, lower_kind="exact",
                              upper_kind="exact", upper_certificate=0.0)
    est = _body_radii(body, rad)
    ratio = est.inradius_estimate / est.circumradius
    cert = None
    if cert_samples > 0:
        work = tm.T if dual else tm
        cert = _restriction_certificate(body, work, k, dec.right_basis, dual, cert_samples)
    return SNumberBracket(k=k, lower=ratio * sk, upper=sk / ratio,
                          lower_kind="sampled", upper_kind="sampled",
                          upper_certificate=cert)


def _golden_min(f: Callable[[float], float], a: float, b: float,
                iters: int = 70) -> tuple[float, float]:
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_v = (c, fc) if fc <= fd else (d, fd)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
            if fc < best_v:
                best_x, best_v = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
            if fd < best_v:
                best_x, best_v = d, fd
    return best_x, best_v


def _shift_scan(value_of: Callable[[float], float], window: float,
                grid_points: int, extra: tuple[float, ...]) -> tuple[float, float, tuple]:
    lams = list(np.linspace(-window, window, grid_points))
    for lam in extra:
        if -window <= lam <= window and lam not in lams:
            lams.append(lam)
    lams.sort()
    grid = tuple((float(lam), float(value_of(lam))) for lam in lams)
    vals = np.array([v for _, v in grid])
    i = int(np.argmin(vals))
    best_shift, best_value = grid[i]
    span = 2.0 * window / max(grid_points - 1, 1)
    lo = grid[i - 1][0] if i > 0 else max(best_shift - span, -window)
    hi = grid[i + 1][0] if i < len(grid) - 1 else min(best_shift + span, window)
    gx, gv = _golden_min(value_of, lo, hi)
    if gv < best_value:
        best_shift, best_value = float(gx), float(gv)
    return best_shift, best_value, grid


def min_over_shifts(body: RandomQuotientBody, t, k: int, grid_points: int = 201,
                    opnorm: float | None = None, rad: RadiiEstimate | None = None,
                    cert_samples: int = _CERT_SAMPLES) -> ShiftSearchResult:
    """Minimize the Euclidean proxy s_k(T - lambda*Id) over a shift window.

    The window is [-2 ||T||_X, +2 ||T||_X]; the grid always contains 0 and the
    trace mean tr(T)/n (exact minimizer for multiples of the identity), and is
    refined by golden section around the best grid point. The returned value
    is an upper bound on the infimum over all real shifts.
    """
    tm = as_matrix(t, "T")
    if tm.shape != (body.n, body.n):
        raise UsageError(f"T must be {body.n}x{body.n}, got {tm.shape}")
    if not np.any(tm):
        raise UsageError("shift search needs T != 0 for a meaningful window")
    if not 1 <= k <= body.n:
        raise UsageError(f"need 1 <= k <= n={body.n}, got k={k}")
    q = operator_norm(body, tm) if opnorm is None else float(opnorm)
    eye = np.eye(body.n)

    def value_of(lam: float) -> float:
        return float(np.linalg.svd(tm - lam * eye, compute_uv=False)[k - 1])

    trace_mean = float(np.trace(tm)) / body.n
    best_shift, best_value, grid = _shift_scan(value_of, 2.0 * q, grid_points,
                                               (0.0, trace_mean))
    bracket = gelfand_bracket(body, tm - best_shift * eye, k, rad=rad,
                              cert_samples=cert_samples)
    return ShiftSearchResult(best_shift=best_shift, best_value=best_value,
                             bracket_at_best=bracket, grid=grid)


def gelfand_sum_bracket(body: RandomQuotientBody, t, grid_points: int = 201,
                        opnorm: float | None = None,
                        rad: RadiiEstimate | None = None) -> GelfandSumResult:
    """Best shifted s-number sum: shift to the traceless representative, then
    grid-search a further shift minimizing sum_i s_i(T0 - lambda*Id).

    The returned bracket scales the best sum by (r/R, R/r), the same sandwich
    as gelfand_bracket. best_shift is the total shift (traceless part
    included); the search grid always contains the two distinguished shifts 0
    and -tr(T)/n (i.e. total shifts tr(T)/n and 0).
    """
    tm = as_matrix(t, "T")
    if tm.shape != (body.n, body.n):
        raise UsageError(f"T must be {body.n}x{body.n}, got {tm.shape}")
    lam0 = float(np.trace(tm)) / body.n
    eye = np.eye(body.n)
    t0 = tm - lam0 * eye
    if not np.any(t0):
        return GelfandSumResult(traceless_shift=lam0, best_shift=lam0, sum_value=0.0,
                                lower=0.0, upper=0.0)
    q0 = operator_norm(body, t0) if opnorm is None else float(opnorm)

    def value_of(lam: float) -> float:
        return float(np.linalg.svd(t0 - lam * eye, compute_uv=False).sum())

    rel_shift, best_sum, _ = _shift_scan(value_of, 2.0 * q0, grid_points,
                                         (0.0, -lam0))
    est = _body_radii(body, rad)
    ratio = est.inradius_estimate / est.circumradius
    return GelfandSumResult(traceless_shift=lam0, best_shift=lam0 + rel_shift,
                            sum_value=best_sum, lower=ratio * best_sum,
                            upper=best_sum / ratio)


def mn_witness_check(t, f: HaarSubspace | np.ndarray, beta: float) -> MnWitness:
    """Check the witness condition ||P_{F-perp} T x||_2 >= beta ||x||_2 on F.

    achieved is the exact minimum over unit x in F, i.e. the smallest singular
    value of (Id - B B^T) T B for an orthonormal basis B of F.
    """
    tm = as_matrix(t, "T")
    basis = f.basis if isinstance(f, HaarSubspace) else np.asarray(f, dtype=float)
    b = check_orthonormal(basis, name="witness basis")
    if b.shape[0] != tm.shape[0] or tm.shape[0] != tm.shape[1]:
        raise UsageError(f"T is {tm.shape}, basis ambient dimension {b.shape[0]}")
    m = (tm @ b) - b @ (b.T @ (tm @ b))
    achieved = float(np.linalg.svd(m, compute_uv=False)[-1])
    return MnWitness(subspace_basis=b, alpha=b.shape[1], beta=float(beta),
                     achieved=achieved)


def hs_of_normalized(body: RandomQuotientBody, t) -> tuple[float, float, bool]:
    """Hilbert-Schmidt norm of T normalized to unit operator norm on X_n.

    Returns (hs, sqrt(N), ok); the inequality hs <= sqrt(N) is a theorem for
    operators between quotients of l1^N, so ok must be True on every instance.
    """
    tm = as_matrix(t, "T")
    if not np.any(tm):
        raise UsageError("hs_of_normalized needs T != 0")
    q = operator_norm(body, tm)
    hs = float(np.linalg.norm(tm, "fro")) / q
    bound = float(np.sqrt(body.N))
    return hs, bound, hs <= bound + 1e-6
