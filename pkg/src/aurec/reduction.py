"""Symmetric eigendecomposition, PCA and 2DPCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, NumericError

# Above this size the Jacobi sweep cost dominates; LAPACK takes over.
JACOBI_MAX_DIM = 64


def _fix_signs(vecs):
    """Flip each column so its first clearly nonzero entry is positive."""
    vecs = np.array(vecs, dtype=float)
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        scale = np.max(np.abs(col))
        if scale == 0:
            continue
        first = np.flatnonzero(np.abs(col) > 1e-10 * scale)[0]
        if col[first] < 0:
            vecs[:, j] = -col
    return vecs


def sym_eig(m, method="auto"):
    """Eigenpairs of a symmetric matrix, eigenvalues descending.

    ``method`` is ``"jacobi"`` (cyclic Jacobi rotations), ``"lapack"``, or
    ``"auto"`` (Jacobi up to ``JACOBI_MAX_DIM`` rows).

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("sym_eig needs a square matrix")
    norm = np.linalg.norm(m)
    if not np.all(np.isfinite(m)):
        raise NumericError("non-finite entries in matrix")
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-9 * max(norm, 1.0):
        raise ValueError("matrix is not symmetric")
    m = 0.5 * (m + m.T)
    n = m.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        vals, vecs, _ = _kernels.jacobi_eigh(np.array(m, order="C"), 1e-12 * norm, 100)
    elif method == "lapack":
        vals, vecs = np.linalg.eigh(m)
    else:
        raise ValueError(f"unknown method {method!r}")
    # stable sort keeps equal eigenvalues in solver order
    order = np.argsort(-vals, kind="stable")
    return vals[order], _fix_signs(vecs[:, order])


@dataclass
class PcaBasis:
    mean: np.ndarray
    components: np.ndarray  # (d, k)
    eigenvalues: np.ndarray

    @property
    def dim(self):
        return self.components.shape[0]

    @property
    def k(self):
        return self.components.shape[1]


def pca_fit(samples, k):
    """PCA with the 1/n covariance; keeps the top ``k`` components."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise ValueError("samples must be an (n, d) array")
    n, d = x.shape
    if n < 2:
        raise DataError("pca_fit needs at least 2 samples")
    if not 1 <= k <= min(d, n - 1):
        raise ValueError(f"k={k} outside [1, {min(d, n - 1)}]")
    mean = x.mean(axis=0)
    xc = x - mean
    total = np.sum(xc * xc) / n
    if total <= 1e-300:
        raise DataError("zero variance: all samples identical")
    if n < d:
        # Gram route: same nonzero spectrum, n x n instead of d x d
        vals, u = sym_eig(xc @ xc.T / n)
        vals = vals[:k]
        if vals[-1] > 1e-12 * vals[0]:
            comps = xc.T @ u[:, :k] / np.sqrt(n * vals)
            return PcaBasis(mean, _fix_signs(comps), np.maximum(vals, 0.0))
    vals, vecs = sym_eig(xc.T @ xc / n)
    return PcaBasis(mean, vecs[:, :k], np.maximum(vals[:k], 0.0))


def pca_project(basis, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != basis.dim:
        raise ValueError(f"expected dimension {basis.dim}, got {x.shape[-1]}")
    return (x - basis.mean) @ basis.components


def pca_reconstruct(basis, y):
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != basis.k:
        raise ValueError(f"expected dimension {basis.k}, got {y.shape[-1]}")
    return y @ basis.components.T + basis.mean


@dataclass
class TwoDPcaBasis:
    mean_matrix: np.ndarray  # (r, c)
    components: np.ndarray  # (c, k)
    eigenvalues: np.ndarray

    @property
    def k(self):
        return self.components.shape[1]


def image_covariance(samples):
    a = np.asarray(samples, dtype=float)
    ac = a - a.mean(axis=0)
    return np.einsum("nrc,nrd->cd", ac, ac) / a.shape[0]


def twod_pca_fit(samples, k):
    """2DPCA: eigenvectors of the c x c image covariance of (n, r, c) samples."""
    try:
        a = np.asarray(samples, dtype=float)
    except ValueError:
        raise DataError("2DPCA samples differ in shape") from None
    if a.ndim != 3:
        raise DataError("2DPCA samples differ in shape")
    n, _, c = a.shape
    if n < 2:
        raise DataError("twod_pca_fit needs at least 2 samples")
    if not 1 <= k <= c:
        raise ValueError(f"k={k} outside [1, {c}]")
    vals, vecs = sym_eig(image_covariance(a))
    return TwoDPcaBasis(a.mean(axis=0), vecs[:, :k], np.maximum(vals[:k], 0.0))


def twod_pca_project(basis, a):
    """Project one (r, c) matrix or a stack (..., r, c) to (..., r, k)."""
    a = np.asarray(a, dtype=float)
    if a.shape[-2:] != basis.mean_matrix.shape:
        raise ValueError(f"expected {basis.mean_matrix.shape}, got {a.shape[-2:]}")
    return (a - basis.mean_matrix) @ basis.components


def twod_pca_reconstruct(basis, y):
    return np.asarray(y) @ basis.components.T + basis.mean_matrix
