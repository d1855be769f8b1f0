"""Coordinate model of a separable Hilbert space and its operator algebra.

Elements of H are stored as 1-D float arrays of coordinates against a fixed
orthonormal basis; bounded operators are dense ``(d, d)`` arrays with the row
index as output coordinate and the column index as input coordinate. Every
function here is pure and returns fresh arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL_SYM = 1e-8
TOL_REC = 1e-9


class DimensionError(ValueError):
    """Raised when vectors or operators of different dimension interact."""


class NotSymmetricError(ValueError):
    """Raised when a symmetric decomposition is requested for a non-symmetric operator."""


def as_vector(f, d: int | None = None) -> np.ndarray:
    v = np.asarray(f, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-D coordinate vector, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise DimensionError(f"expected dimension {d}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    return v


def as_operator(A, d: int | None = None) -> np.ndarray:
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square operator, got shape {M.shape}")
    if d is not None and M.shape[0] != d:
        raise DimensionError(f"expected dimension {d}, got {M.shape[0]}")
    if not np.all(np.isfinite(M)):
        raise ValueError("operator has non-finite entries")
    return M


def basis_vector(k: int, d: int) -> np.ndarray:
    e = np.zeros(d)
    e[k] = 1.0
    return e


def identity(d: int) -> np.ndarray:
    return np.eye(d)


def zero_operator(d: int) -> np.ndarray:
    return np.zeros((d, d))


def inner_product(f, g) -> float:
    f = as_vector(f)
    g = as_vector(g, f.shape[0])
    return float(f @ g)


def norm(f) -> float:
    return float(np.linalg.norm(as_vector(f)))


def tensor_product(f, g) -> np.ndarray:
    """Rank-one operator ``h -> <f, h> g``.

    As a matrix this is ``g f^T``, so ``tensor_product(x, x)`` is the usual
    outer product and ``tensor_product(X_i, X_{i+1})`` maps ``X_i`` onto the
    direction of ``X_{i+1}``.
    """
    f = as_vector(f)
    g = as_vector(g, f.shape[0])
    return np.outer(g, f)


def apply(A, f) -> np.ndarray:
    A = as_operator(A)
    return A @ as_vector(f, A.shape[0])


def compose(A, B) -> np.ndarray:
    """Operator ``A B`` (apply ``B`` first)."""
    A = as_operator(A)
    return A @ as_operator(B, A.shape[0])


def adjoint(A) -> np.ndarray:
    return as_operator(A).T.copy()


def power(A, k: int) -> np.ndarray:
    return np.linalg.matrix_power(as_operator(A), k)


def singular_values(A) -> np.ndarray:
    return np.linalg.svd(as_operator(A), compute_uv=False)


def operator_norm(A) -> float:
    """Uniform norm, the largest singular value."""
    return float(singular_values(A)[0]) if np.size(A) else 0.0


def hs_norm(A) -> float:
    """Hilbert-Schmidt norm, the root sum of squared entries."""
    return float(np.linalg.norm(as_operator(A), "fro"))


def trace_norm(A) -> float:
    """Trace (nuclear) norm, the sum of singular values."""
    return float(np.sum(singular_values(A)))


def trace_norm_by_definition(A, basis=None) -> float:
    """Trace norm as ``sum_k <sqrt(A* A) b_k, b_k>`` over an orthonormal basis.

    ``basis`` holds the basis vectors as columns and defaults to the
    coordinate basis. The square root is built from the SVD of ``A``.
    """
    A = as_operator(A)
    _, s, vt = np.linalg.svd(A)
    root = (vt.T * s) @ vt
    B = np.eye(A.shape[0]) if basis is None else as_operator(basis, A.shape[0])
    return float(sum(B[:, k] @ root @ B[:, k] for k in range(B.shape[1])))


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Per-column signs making the first largest-magnitude coordinate positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    lead = vectors[idx, np.arange(vectors.shape[1])]
    return np.where(lead < 0, -1.0, 1.0)


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs of a symmetric operator, largest eigenvalue first.

    ``vectors[:, j]`` is the eigenvector for ``values[j]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def vector(self, j: int) -> np.ndarray:
        return self.vectors[:, j]

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


@dataclass(frozen=True)
class SvdSystem:
    """Singular triples with ``A @ right[:, j] == values[j] * left[:, j]``."""

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray

    def reconstruct(self, k: int | None = None) -> np.ndarray:
        k = len(self.values) if k is None else k
        return (self.left[:, :k] * self.values[:k]) @ self.right[:, :k].T


def eigen_sym(A, tol_sym: float = TOL_SYM) -> EigenSystem:
    A = as_operator(A)
    asym = hs_norm(A - A.T) if A.size else 0.0
    if asym > tol_sym * hs_norm(A):
        raise NotSymmetricError(f"operator is not symmetric (||A - A*|| = {asym:.3e})")
    w, v = np.linalg.eigh(0.5 * (A + A.T))
    # eigh sorts ascending; reversing keeps tied pairs in routine order
    w, v = w[::-1].copy(), v[:, ::-1]
    v = v * canonical_signs(v)
    return EigenSystem(values=w, vectors=v)


def svd(A) -> SvdSystem:
    A = as_operator(A)
    u, s, vt = np.linalg.svd(A)
    v = vt.T
    signs = canonical_signs(v)
    return SvdSystem(values=s, right=v * signs, left=u * signs)
