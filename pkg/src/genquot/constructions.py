"""Constructive well-complemented subspace searches inside a random quotient.

Two constructions:

* find_l1_subspace picks a random index set A of k columns and accepts it when
  the l2-normalized column block is well conditioned (sigma_min above a
  threshold) and every outside column leaks at most k^(-1/2) of its mass into
  E = span{g_j : j in A}. The accepted witness carries measured isomorphism
  and complementation constants.

* find_l2_subspace takes a Haar-random h-dimensional section, which for
  N >> n is nearly Euclidean, and measures its distortion and the norm of the
  orthogonal projection onto it.

All constants are measurements, not certificates: the harness calibrates
thresholds for them empirically and freezes the result.

Both searches are pure functions of (body, seed): retries claim consecutive
stream indices, so concurrent invocations never share generator state.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .body import RandomQuotientBody, body_norm, body_norm_many, max_gauge_in_span, section_distortion
from .errors import ConditionFailed, IoError, UsageError
from .linalg import check_orthonormal, format_matrix, orthonormalize, parse_matrix
from .sampler import HaarSubspace, SeedSpec, generator, haar_subspace

__all__ = [
    "L1Witness",
    "L2Witness",
    "find_l1_subspace",
    "find_l2_subspace",
    "complementation_norm",
    "corollary_dispatch",
    "auto_l1_dim",
    "auto_l2_dim",
    "verify_witness",
    "save_witness",
    "load_witness",
]

DEFAULT_C_CAL = 0.25  # calibrated dimension constant, frozen in the thresholds file
DEFAULT_EL2_THRESHOLD = 0.25  # sigma_min acceptance for the normalized block
_ISO_SAMPLES = 1000
_SECTION_SAMPLES = 256
_ISO_STREAM_OFFSET = 10_000  # keeps the iso-sampling stream clear of retry streams


@dataclass(frozen=True)
class L1Witness:
    """An accepted index set A with measured l1-isomorphism data.

    sigma_min is the smallest singular value of the column block with columns
    scaled to unit Euclidean length; max_leak is max_{j not in A} ||P_E g_j||_2;
    iso_constant is the measured upper bound on the Banach-Mazur distance of
    span{g_j} to l1^k (norm of the coordinate map times the smaller of the
    directly sampled inverse-map norm and its sqrt(k)/sigma_min Euclidean
    bound, both over the same sampled directions), and compl_constant the
    quotient-norm operator norm of the orthogonal projection onto E. seed
    records the stream that produced the accepted retry, making every number
    reproducible from (body, witness).
    """

    index_set: tuple[int, ...]
    basis: np.ndarray
    sigma_min: float
    max_leak: float
    iso_constant: float
    compl_constant: float
    seed: SeedSpec
    iso_samples: int = _ISO_SAMPLES

    @property
    def k(self) -> int:
        return len(self.index_set)


@dataclass(frozen=True)
class L2Witness:
    """A Haar section with measured Euclidean-ness and complementation data."""

    subspace: HaarSubspace
    distortion: float
    max_gauge: float
    min_gauge: float
    compl_constant: float
    proj_image_radius: float
    seed: SeedSpec
    section_samples: int

    @property
    def h(self) -> int:
        return self.subspace.dim


def auto_l1_dim(n: int, big_n: int, c_cal: float = DEFAULT_C_CAL) -> int:
    """k = max(1, floor(c_cal * min(sqrt(n), n / log N)))."""
    if big_n <= 1:
        target = np.sqrt(n)
    else:
        target = min(np.sqrt(n), n / np.log(big_n))
    return max(1, int(np.floor(c_cal * target)))


def auto_l2_dim(n: int, big_n: int, c_cal: float = DEFAULT_C_CAL) -> int:
    """h = max(1, min(floor(c_cal * log N), n))."""
    return max(1, min(int(np.floor(c_cal * np.log(big_n))), n))


def _inverse_map_estimates(body: RandomQuotientBody, block: np.ndarray,
                           basis: np.ndarray, samples: int,
                           seed: SeedSpec) -> tuple[float, float]:
    """Sampled estimates over unit directions x in span(basis):

    sup ||x||_2 / ||x||_B (the proof's Euclidean comparison factor) and
    sup ||t(x)||_1 / ||x||_B with t(x) the coefficient vector of x in the
    columns of `block` (a direct measurement of the inverse basis map).
    """
    k = basis.shape[1]
    pinv = np.linalg.pinv(block)
    if k == 1:
        # both ratios are constant on a line: one evaluation suffices
        x = basis[:, 0]
        gauge = body_norm(body, x)
        return 1.0 / gauge, float(np.abs(pinv @ x).sum()) / gauge
    rng = generator(seed)
    w = rng.normal(size=(samples, k))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    dirs = w @ basis.T
    gauges = body_norm_many(body, dirs)
    coeff_l1 = np.abs(dirs @ pinv.T).sum(axis=1)
    return float(1.0 / gauges.min()), float(np.max(coeff_l1 / gauges))


def find_l1_subspace(body: RandomQuotientBody, k: int | None = None, retries: int = 16,
                     seed: SeedSpec | None = None, c_cal: float = DEFAULT_C_CAL,
                     el2_threshold: float = DEFAULT_EL2_THRESHOLD,
                     iso_samples: int = _ISO_SAMPLES) -> L1Witness:
    """Search for a k-column block spanning a well-complemented near-l1^k copy.

    Retries draw fresh uniformly random index sets on consecutive derived
    streams. Raises ConditionFailed (tagged "el2" or "fin" after the violated
    inequality) when the budget is exhausted.
    """
    if seed is None:
        raise UsageError("find_l1_subspace requires a SeedSpec")
    if k is None:
        k = auto_l1_dim(body.n, body.N, c_cal)
    if not 1 <= k <= body.N:
        raise UsageError(f"need 1 <= k <= N={body.N}, got k={k}")
    if retries < 1:
        raise UsageError("retries must be >= 1")

    leak_cap = 1.0 / np.sqrt(k)
    last: tuple[str, str, dict] | None = None
    for attempt in range(retries):
        stream = seed.child(attempt)
        rng = generator(stream)
        a = np.sort(rng.choice(body.N, size=k, replace=False))
        block = body.gamma[:, a]
        normalized = block / body.column_norms[a]
        # a wide block (k > n) cannot be injective: its k-th singular value is 0
        sigma_min = 0.0 if k > body.n else float(
            np.linalg.svd(normalized, compute_uv=False)[-1])
        if sigma_min < el2_threshold:
            last = ("el2", f"sigma_min {sigma_min:.6g} < {el2_threshold:g}",
                    {"sigma_min": sigma_min, "threshold": el2_threshold, "k": k})
            continue
        basis = orthonormalize(block).basis
        outside = np.setdiff1d(np.arange(body.N), a)
        leaks = basis @ (basis.T @ body.gamma[:, outside])
        max_leak = float(np.linalg.norm(leaks, axis=0).max()) if outside.size else 0.0
        if max_leak > leak_cap:
            last = ("fin", f"max_leak {max_leak:.6g} > k^(-1/2) = {leak_cap:.6g}",
                    {"max_leak": max_leak, "threshold": leak_cap, "k": k})
            continue

        u_norm = max(body_norm(body, body.gamma[:, j]) for j in a)
        sup_ratio, inv_direct = _inverse_map_estimates(body, block, basis, iso_samples,
                                                       stream.child(_ISO_STREAM_OFFSET))
        inv_bound = min(np.sqrt(k) / sigma_min * sup_ratio, inv_direct)
        iso = max(1.0, u_norm * inv_bound)
        compl = complementation_norm(body, basis)
        return L1Witness(index_set=tuple(int(j) for j in a), basis=basis,
                         sigma_min=sigma_min, max_leak=max_leak,
                         iso_constant=float(iso), compl_constant=compl, seed=stream,
                         iso_samples=iso_samples)
    tag, msg, measured = last if last is not None else (
        "el2", "no retry executed", {})
    raise ConditionFailed(tag, f"{msg} after {retries} retries", measured)


def find_l2_subspace(body: RandomQuotientBody, h: int | None = None,
                     seed: SeedSpec | None = None, c_cal: float = DEFAULT_C_CAL,
                     section_samples: int = _SECTION_SAMPLES,
                     relax_alpha: float | None = None) -> L2Witness:
    """Measure a Haar-random h-dimensional section as a candidate l2^h copy.

    Requires N >= n^2; passing relax_alpha permits the weaker N >= n^(1+alpha)
    regime (complementation degrades like 1/sqrt(alpha)) with a warning.
    """
    if seed is None:
        raise UsageError("find_l2_subspace requires a SeedSpec")
    n, big_n = body.n, body.N
    if big_n < n * n:
        if relax_alpha is None:
            raise UsageError(
                f"find_l2_subspace requires N >= n^2 ({big_n} < {n * n}); "
                "pass relax_alpha to accept N >= n^(1+alpha)"
            )
        if big_n < n ** (1.0 + relax_alpha) - 1e-9:
            raise UsageError(
                f"N={big_n} < n^(1+alpha) = {n ** (1.0 + relax_alpha):.6g}"
            )
        warnings.warn(
            f"relaxed regime N >= n^(1+alpha) with alpha={relax_alpha}: "
            "expect complementation ~ 1/sqrt(alpha)",
            stacklevel=2,
        )
    if h is None:
        h = auto_l2_dim(n, big_n, c_cal)
    if not 1 <= h <= n:
        raise UsageError(f"need 1 <= h <= n={n}, got h={h}")
    sub = haar_subspace(n, h, seed)
    max_g, min_g = section_distortion(body, sub, section_samples, seed.child(1))
    proj = sub.basis @ (sub.basis.T @ body.gamma)
    compl = max_gauge_in_span(body, sub.basis, proj.T)
    radius = float(np.linalg.norm(proj, axis=0).max())
    return L2Witness(subspace=sub, distortion=max_g / min_g, max_gauge=max_g,
                     min_gauge=min_g, compl_constant=compl, proj_image_radius=radius,
                     seed=seed, section_samples=section_samples)


def complementation_norm(body: RandomQuotientBody, basis) -> float:
    """Operator norm on X_n of the orthogonal projection onto span(basis).

    Extreme-point formula: the norm is attained at some vertex g_j, so it is
    max_j ||P g_j||_B.
    """
    b = check_orthonormal(basis, name="subspace basis")
    if b.shape[0] != body.n:
        raise UsageError(f"basis ambient dimension {b.shape[0]} != body dimension {body.n}")
    proj = b @ (b.T @ body.gamma)
    return max_gauge_in_span(body, b, proj.T)


def corollary_dispatch(body: RandomQuotientBody, seed: SeedSpec,
                       c_cal: float = DEFAULT_C_CAL, **kwargs):
    """Case split: l1 construction when log N < sqrt(n), l2 construction otherwise.

    Returns ("l1", L1Witness) or ("l2", L2Witness).
    """
    if np.log(body.N) < np.sqrt(body.n):
        return "l1", find_l1_subspace(body, seed=seed, c_cal=c_cal, **kwargs)
    return "l2", find_l2_subspace(body, seed=seed, c_cal=c_cal, **kwargs)


def verify_witness(body: RandomQuotientBody, witness) -> dict[str, float]:
    """Recompute every stored witness quantity from (body, witness).

    Returns a map name -> |stored - recomputed|; all entries should be <= 1e-9
    (the sampled quantities rerun on the stored stream and reproduce exactly).
    """
    if isinstance(witness, L1Witness):
        a = np.array(witness.index_set)
        block = body.gamma[:, a]
        normalized = block / body.column_norms[a]
        sigma_min = 0.0 if witness.k > body.n else float(
            np.linalg.svd(normalized, compute_uv=False)[-1])
        basis = orthonormalize(block).basis
        outside = np.setdiff1d(np.arange(body.N), a)
        leaks = basis @ (basis.T @ body.gamma[:, outside])
        max_leak = float(np.linalg.norm(leaks, axis=0).max()) if outside.size else 0.0
        u_norm = max(body_norm(body, body.gamma[:, j]) for j in a)
        sup_ratio, inv_direct = _inverse_map_estimates(body, block, basis, witness.iso_samples,
                                                       witness.seed.child(_ISO_STREAM_OFFSET))
        inv_bound = min(np.sqrt(witness.k) / sigma_min * sup_ratio, inv_direct)
        iso = max(1.0, u_norm * inv_bound)
        compl = complementation_norm(body, basis)
        return {
            "sigma_min": abs(sigma_min - witness.sigma_min),
            "max_leak": abs(max_leak - witness.max_leak),
            "iso_constant": abs(iso - witness.iso_constant),
            "compl_constant": abs(compl - witness.compl_constant),
        }
    if isinstance(witness, L2Witness):
        max_g, min_g = section_distortion(body, witness.subspace,
                                          witness.section_samples, witness.seed.child(1))
        proj = witness.subspace.basis @ (witness.subspace.basis.T @ body.gamma)
        compl = max_gauge_in_span(body, witness.subspace.basis, proj.T)
        radius = float(np.linalg.norm(proj, axis=0).max())
        return {
            "distortion": abs(max_g / min_g - witness.distortion),
            "compl_constant": abs(compl - witness.compl_constant),
            "proj_image_radius": abs(radius - witness.proj_image_radius),
        }
    raise UsageError(f"unknown witness type {type(witness).__name__}")


def save_witness(witness, path) -> None:
    if isinstance(witness, L1Witness):
        payload = {
            "kind": "l1",
            "indices": list(witness.index_set),
            "basis": format_matrix(witness.basis),
            "constants": {
                "sigma_min": witness.sigma_min,
                "max_leak": witness.max_leak,
                "iso_constant": witness.iso_constant,
                "compl_constant": witness.compl_constant,
                "iso_samples": witness.iso_samples,
            },
            "seed": {"master_seed": witness.seed.master_seed,
                     "stream_index": witness.seed.stream_index},
        }
    elif isinstance(witness, L2Witness):
        payload = {
            "kind": "l2",
            "indices": [],
            "basis": format_matrix(witness.subspace.basis),
            "constants": {
                "distortion": witness.distortion,
                "max_gauge": witness.max_gauge,
                "min_gauge": witness.min_gauge,
                "compl_constant": witness.compl_constant,
                "proj_image_radius": witness.proj_image_radius,
                "section_samples": witness.section_samples,
            },
            "seed": {"master_seed": witness.seed.master_seed,
                     "stream_index": witness.seed.stream_index},
        }
    else:
        raise UsageError(f"unknown witness type {type(witness).__name__}")
    try:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(path, f"cannot write witness: {exc}") from exc


def load_witness(path):
    try:
        with open(path, "r", encoding="ascii") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise IoError(path, f"cannot read witness: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(path, f"malformed witness JSON: {exc}") from exc
    basis = parse_matrix(payload["basis"])
    seed = SeedSpec(payload["seed"]["master_seed"], payload["seed"]["stream_index"])
    consts = payload["constants"]
    if payload["kind"] == "l1":
        return L1Witness(index_set=tuple(payload["indices"]), basis=basis,
                         sigma_min=consts["sigma_min"], max_leak=consts["max_leak"],
                         iso_constant=consts["iso_constant"],
                         compl_constant=consts["compl_constant"], seed=seed,
                         iso_samples=int(consts.get("iso_samples", _ISO_SAMPLES)))
    if payload["kind"] == "l2":
        sub = HaarSubspace(ambient_dim=basis.shape[0], dim=basis.shape[1], basis=basis)
        return L2Witness(subspace=sub, distortion=consts["distortion"],
                         max_gauge=consts["max_gauge"], min_gauge=consts["min_gauge"],
                         compl_constant=consts["compl_constant"],
                         proj_image_radius=consts["proj_image_radius"], seed=seed,
                         section_samples=int(consts["section_samples"]))
    raise IoError(path, f"unknown witness kind {payload['kind']!r}")
