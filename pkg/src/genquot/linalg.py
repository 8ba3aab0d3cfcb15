"""Dense real linear algebra primitives: SVD, orthonormalization, projection.

Everything operates on plain float64 numpy arrays (matrices are 2-d,
column-oriented where a basis is meant). The text serialization here is the
repo-wide matrix exchange format: a "rows cols" header line followed by one
line per row with entries printed to 17 significant digits, which round-trips
float64 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IoError, NumericError, UsageError

__all__ = [
    "SvdResult",
    "OrthoResult",
    "svd",
    "orthonormalize",
    "orth_project",
    "format_matrix",
    "parse_matrix",
    "write_matrix",
    "read_matrix",
    "as_matrix",
    "as_vector",
]

DEFAULT_DROP_TOL = 1e-10


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-d array, raising NumericError otherwise."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise UsageError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise NumericError(f"{name} contains non-finite entries")
    return a


def as_vector(x, name: str = "vector") -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size and not np.all(np.isfinite(a)):
        raise NumericError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD M = U diag(S) V^T with U, V holding orthonormal columns.

    singular_values is non-increasing and non-negative; reconstruction is
    guaranteed to 1e-10 * (1 + ||M||_F) by the backing LAPACK driver.
    """

    left_basis: np.ndarray
    singular_values: np.ndarray
    right_basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left_basis * self.singular_values) @ self.right_basis.T


@dataclass(frozen=True)
class OrthoResult:
    """Orthonormal column basis plus the count of dependent inputs dropped."""

    basis: np.ndarray
    dropped: int


def svd(m) -> SvdResult:
    """Full-accuracy thin SVD of a dense matrix.

    Raises NumericError on non-finite input or (exceptionally) LAPACK
    non-convergence.
    """
    a = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"SVD did not converge: {exc}") from exc
    return SvdResult(left_basis=u, singular_values=s, right_basis=vt.T)


def singular_values(m) -> np.ndarray:
    a = as_matrix(m)
    return np.linalg.svd(a, compute_uv=False)


def orthonormalize(vectors: Sequence, tol: float = DEFAULT_DROP_TOL) -> OrthoResult:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    `vectors` is a sequence of equal-length 1-d arrays (or a 2-d array whose
    *columns* are the vectors). Vectors whose residual after projection falls
    below tol * (largest input norm) are dropped and counted.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        cols = [vectors[:, j] for j in range(vectors.shape[1])]
    else:
        cols = [as_vector(v, "input vector") for v in vectors]
    if not cols:
        raise UsageError("orthonormalize requires at least one vector")
    d = cols[0].size
    for v in cols:
        if v.size != d:
            raise UsageError("all vectors must share the same dimension")

    scale = max(float(np.linalg.norm(v)) for v in cols)
    if scale == 0.0:
        return OrthoResult(basis=np.empty((d, 0)), dropped=len(cols))
    cutoff = tol * scale

    basis: list[np.ndarray] = []
    dropped = 0
    for v in cols:
        w = np.array(v, dtype=float)
        for _ in range(2):  # second pass restores orthogonality to ~1e-15
            for q in basis:
                w -= q * (q @ w)
        nrm = float(np.linalg.norm(w))
        if nrm <= cutoff:
            dropped += 1
            continue
        basis.append(w / nrm)
    q = np.column_stack(basis) if basis else np.empty((d, 0))
    return OrthoResult(basis=q, dropped=dropped)


def check_orthonormal(basis: np.ndarray, tol: float = 1e-10, name: str = "basis") -> np.ndarray:
    b = as_matrix(basis, name)
    gram = b.T @ b
    if gram.shape[0] and np.max(np.abs(gram - np.eye(gram.shape[0]))) > tol:
        raise UsageError(f"{name} columns are not orthonormal to {tol:g}")
    return b


def orth_project(basis: np.ndarray, x) -> np.ndarray:
    """Orthogonal projection B B^T x onto the span of an orthonormal basis."""
    b = check_orthonormal(basis)
    v = as_vector(x, "x")
    if v.size != b.shape[0]:
        raise UsageError(f"vector dimension {v.size} != basis ambient dimension {b.shape[0]}")
    return b @ (b.T @ v)


# ---------------------------------------------------------------------------
# Matrix text format (repo-wide exchange format)
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_matrix(m) -> str:
    a = as_matrix(m)
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    for row in a:
        lines.append(" ".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise IoError("<string>", "empty matrix text")
    try:
        rows, cols = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise IoError("<string>", f"bad matrix header {lines[0]!r}") from exc
    if len(lines) - 1 != rows:
        raise IoError("<string>", f"expected {rows} data lines, found {len(lines) - 1}")
    data = np.empty((rows, cols))
    for i, ln in enumerate(lines[1:]):
        vals = ln.split()
        if len(vals) != cols:
            raise IoError("<string>", f"row {i} has {len(vals)} entries, expected {cols}")
        data[i] = [float(v) for v in vals]
    return as_matrix(data, "parsed matrix")


def write_matrix(m, path) -> None:
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(format_matrix(m))
    except OSError as exc:
        raise IoError(path, f"cannot write matrix: {exc}") from exc


def read_matrix(path) -> np.ndarray:
    try:
        with open(path, "r", encoding="ascii") as fh:
            return parse_matrix(fh.read())
    except OSError as exc:
        raise IoError(path, f"cannot read matrix: {exc}") from exc
