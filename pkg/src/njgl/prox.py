"""Closed-form proximal and resolvent operators used inside the ADMM updates.

All functions here are pure and operate on plain numpy arrays.  Column
proximal operators are available for q in {1, 2, inf}; the
log-det resolvent (:func:`expand`) is computed through a dense symmetric
eigendecomposition.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "EigenDecomposition",
    "sym_eig",
    "expand",
    "prox_l1",
    "prox_group_l2",
    "prox_group_linf",
    "prox_columns",
    "prox_sparse_group",
    "project_l1_ball",
]

#: Absolute asymmetry tolerance (relative to the max entry) for inputs
#: that are required to be symmetric.
ASYM_TOL = 1e-8


class EigenDecomposition(NamedTuple):
    """Orthogonal eigenvectors and eigenvalues of a symmetric matrix."""

    vectors: np.ndarray
    values: np.ndarray


def _require_symmetric(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    if a.size and float(np.max(np.abs(a - a.T))) > ASYM_TOL * scale:
        raise ValueError(f"{what} must be symmetric")
    return 0.5 * (a + a.T)


def sym_eig(a: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, ascending eigenvalues."""
    a = _require_symmetric(a, "input")
    values, vectors = np.linalg.eigh(a)
    return EigenDecomposition(vectors=vectors, values=values)


def expand(a: np.ndarray, rho: float, n: float) -> np.ndarray:
    """Resolvent of the scaled log-det barrier at a symmetric matrix.

    Returns the positive-definite minimizer of
    ``-n log det(theta) + rho ||theta - a||_F^2``, computed per
    eigenvalue as ``(d + sqrt(d^2 + 2 n / rho)) / 2``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if n <= 0:
        raise ValueError("n must be positive")
    vectors, values = sym_eig(a)
    new = 0.5 * (values + np.sqrt(values**2 + 2.0 * n / rho))
    out = (vectors * new) @ vectors.T
    return 0.5 * (out + out.T)


def prox_l1(a: np.ndarray, lam: float) -> np.ndarray:
    """Elementwise soft threshold ``sign(a) max(|a| - lam, 0)``."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    a = np.asarray(a, dtype=float)
    return np.sign(a) * np.maximum(np.abs(a) - lam, 0.0)


def prox_group_l2(a: np.ndarray, lam: float) -> np.ndarray:
    """Columnwise group shrinkage ``max(0, 1 - lam / ||a_j||_2) a_j``.

    Columns with zero norm map to zero.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    a = np.asarray(a, dtype=float)
    norms = np.sqrt(np.sum(a * a, axis=0))
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(0.0, 1.0 - lam / norms[nz])
    return a * scale


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Exact Euclidean projection of a vector onto the L1 ball.

    Sort-based algorithm, O(p log p); exact up to floating point, which
    keeps downstream fixed-point identities tight.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    v = np.asarray(v, dtype=float)
    if radius == 0:
        return np.zeros_like(v)
    mag = np.abs(v)
    if float(mag.sum()) <= radius:
        return v.copy()
    u = np.sort(mag)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = int(j[u > (css - radius) / j][-1])
    tau = (css[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(mag - tau, 0.0)


def prox_group_linf(a: np.ndarray, lam: float) -> np.ndarray:
    """Columnwise prox of the max norm via Moreau decomposition.

    Each column maps to ``a_j - P(a_j)`` where P is Euclidean projection
    onto the L1 ball of radius ``lam``.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    for j in range(a.shape[1]):
        out[:, j] = a[:, j] - project_l1_ball(a[:, j], lam)
    return out


def prox_columns(a: np.ndarray, lam: float, q: float) -> np.ndarray:
    """Proximal operator of ``lam * sum_j ||X_j||_q`` for q in {1, 2, inf}."""
    if q == 1:
        return prox_l1(a, lam)
    if q == 2:
        return prox_group_l2(a, lam)
    if math.isinf(q):
        return prox_group_linf(a, lam)
    raise ValueError(f"q must be 1, 2 or inf, got {q}")


def prox_sparse_group(matrices, lam1: float, lam2: float) -> list[np.ndarray]:
    """Joint elementwise-L1 plus across-class group-L2 proximal operator.

    Given K aligned matrices, soft-thresholds every entry by ``lam1``,
    then shrinks each off-diagonal K-vector of matched entries by the
    group factor ``max(0, 1 - lam2 / ||.||_2)``.  Diagonal entries
    receive only the soft threshold.
    """
    if lam1 < 0 or lam2 < 0:
        raise ValueError("lam1 and lam2 must be nonnegative")
    mats = [np.asarray(m, dtype=float) for m in matrices]
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValueError("all matrices must share the same shape")
    stack = np.stack([prox_l1(m, lam1) for m in mats], axis=0)
    norms = np.sqrt(np.sum(stack * stack, axis=0))
    scale = np.ones_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(0.0, 1.0 - lam2 / norms[nz])
    scale[~nz] = 0.0
    if shape[0] == shape[1]:
        np.fill_diagonal(scale, 1.0)
    stack *= scale[None, :, :]
    return [stack[k] for k in range(stack.shape[0])]
