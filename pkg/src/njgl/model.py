"""Shared domain types and objective evaluation for joint GGM estimation.

The estimators in this package fit K precision matrices from per-class
empirical covariances.  This module holds the value types passed between
solvers (:class:`EmpiricalModel`, :class:`PenaltyConfig`,
:class:`PrecisionSet`, :class:`BlockPartition`) and the penalized
negative-log-likelihood objectives they optimize.

All types are immutable after construction and safe to share across
threads; the evaluation functions are pure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CouplingError",
    "EmpiricalModel",
    "PenaltyConfig",
    "PrecisionSet",
    "BlockPartition",
    "neg_log_likelihood",
    "pnjgl_objective",
    "cnjgl_objective",
    "fgl_objective",
    "ggl_objective",
    "gl_objective",
    "elementwise_l1",
    "column_norms",
    "sum_column_norms",
]

#: Asymmetry above this triggers a warning when covariances are symmetrized.
SYMMETRY_WARN_TOL = 1e-8

#: Relative tolerance on ``theta - (V + V.T)`` couplings in the objectives.
COUPLING_TOL = 1e-6


class CouplingError(ValueError):
    """A V decomposition violates its coupling constraint.

    Attributes
    ----------
    residual : float
        The offending relative residual.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return the symmetric part ``(a + a.T) / 2``."""
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class EmpiricalModel:
    """Per-class empirical covariance matrices with sample counts.

    Parameters
    ----------
    covariances : sequence of (p, p) arrays
        One empirical covariance matrix per class.  Inputs are
        symmetrized as ``(S + S.T) / 2`` on ingestion; a correction larger
        than 1e-8 raises a warning.
    sample_sizes : sequence of float
        Number of observations behind each covariance; all must be >= 1.
    """

    covariances: tuple[np.ndarray, ...]
    sample_sizes: tuple[float, ...]

    def __init__(self, covariances, sample_sizes):
        covs = []
        for k, s in enumerate(covariances):
            s = np.asarray(s, dtype=float)
            if s.ndim != 2 or s.shape[0] != s.shape[1]:
                raise ValueError(
                    f"covariance for class {k} must be square, got shape {s.shape}"
                )
            gap = float(np.max(np.abs(s - s.T))) if s.size else 0.0
            if gap / 2.0 > SYMMETRY_WARN_TOL:
                warnings.warn(
                    f"covariance for class {k} symmetrized; correction {gap / 2.0:.3e} "
                    f"exceeds {SYMMETRY_WARN_TOL:.0e}",
                    stacklevel=2,
                )
            covs.append(_frozen(symmetrize(s)))
        ns = tuple(float(n) for n in sample_sizes)
        if len(ns) != len(covs):
            raise ValueError("covariances and sample_sizes must have equal length")
        if not covs:
            raise ValueError("at least one class is required")
        if any(n < 1 for n in ns):
            raise ValueError("all sample sizes must be >= 1")
        p = covs[0].shape[0]
        if any(c.shape[0] != p for c in covs):
            raise ValueError("all covariances must share the same dimension")
        object.__setattr__(self, "covariances", tuple(covs))
        object.__setattr__(self, "sample_sizes", ns)

    @property
    def p(self) -> int:
        """Feature count."""
        return self.covariances[0].shape[0]

    @property
    def num_classes(self) -> int:
        return len(self.covariances)

    def submodel(self, indices) -> "EmpiricalModel":
        """Restrict every class to the principal submatrix on ``indices``."""
        idx = np.asarray(indices, dtype=int)
        return EmpiricalModel(
            [s[np.ix_(idx, idx)] for s in self.covariances], self.sample_sizes
        )


def _dual_exponent(q: float) -> float:
    if q == 1:
        return math.inf
    if q == 2:
        return 2.0
    if math.isinf(q):
        return 1.0
    raise ValueError(f"q must be 1, 2 or inf, got {q}")


@dataclass(frozen=True)
class PenaltyConfig:
    """Tuning parameters: element penalty, node penalty, and column exponent.

    ``q`` selects the norm applied to the columns of the V decomposition
    (1, 2, or ``math.inf``); ``s`` is the conjugate exponent with
    ``1/s + 1/q = 1``, used by dual-feasibility certificates.
    """

    lambda1: float
    lambda2: float
    q: float = 2.0

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("penalty parameters must be nonnegative")
        object.__setattr__(self, "q", float(self.q))
        _dual_exponent(self.q)  # validates q

    @property
    def s(self) -> float:
        """Dual exponent of ``q``."""
        return _dual_exponent(self.q)


@dataclass(frozen=True)
class PrecisionSet:
    """K estimated precision matrices plus solver by-products.

    Parameters
    ----------
    thetas : tuple of (p, p) arrays
        Symmetric positive-definite estimates, one per class.
    decomposition : tuple of (p, p) arrays, optional
        The column decomposition produced by a node-penalized solve: a
        single matrix V with ``theta1 - theta2 ~= V + V.T`` for the
        perturbed-node problem, or per-class matrices with
        ``theta_k - diag(theta_k) ~= V_k + V_k.T`` for the co-hub problem.
        Not necessarily symmetric.
    duals : tuple of (p, p) arrays, optional
        Dual certificate matrices for the node penalty at termination,
        normalized so that feasibility means unit-bounded dual column
        norms of the symmetrized stack.
    """

    thetas: tuple[np.ndarray, ...]
    decomposition: tuple[np.ndarray, ...] | None = None
    duals: tuple[np.ndarray, ...] | None = None

    def __init__(self, thetas, decomposition=None, duals=None):
        ths = tuple(_frozen(t) for t in thetas)
        if not ths:
            raise ValueError("at least one precision matrix is required")
        p = ths[0].shape[0]
        for k, t in enumerate(ths):
            if t.shape != (p, p):
                raise ValueError(f"precision matrix {k} has shape {t.shape}, want ({p}, {p})")
            if float(np.max(np.abs(t - t.T))) > 1e-8:
                raise ValueError(f"precision matrix {k} is not symmetric within 1e-8")
        object.__setattr__(self, "thetas", ths)
        object.__setattr__(
            self,
            "decomposition",
            None if decomposition is None else tuple(_frozen(v) for v in decomposition),
        )
        object.__setattr__(
            self, "duals", None if duals is None else tuple(_frozen(d) for d in duals)
        )

    @property
    def p(self) -> int:
        return self.thetas[0].shape[0]

    @property
    def num_classes(self) -> int:
        return len(self.thetas)

    def min_eigenvalues(self) -> list[float]:
        return [float(np.linalg.eigvalsh(t)[0]) for t in self.thetas]

    def validate(self) -> "PrecisionSet":
        """Check positive definiteness of every estimate; raise if violated."""
        for k, ev in enumerate(self.min_eigenvalues()):
            if ev <= 0:
                raise ValueError(
                    f"precision matrix {k} is not positive definite (min eigenvalue {ev:.3e})"
                )
        return self


@dataclass(frozen=True)
class BlockPartition:
    """A partition of feature indices {0..p-1} into disjoint blocks.

    The induced support is the union of the blocks' index squares; any
    matrix supported there is block-diagonal up to a symmetric
    permutation.
    """

    blocks: tuple[tuple[int, ...], ...]
    p: int = field(default=0)

    def __init__(self, blocks, p=None):
        canon = tuple(
            tuple(sorted(int(i) for i in b)) for b in sorted(blocks, key=lambda b: min(b))
        )
        if any(len(b) == 0 for b in canon):
            raise ValueError("blocks must be nonempty")
        flat = [i for b in canon for i in b]
        n = len(flat)
        if p is None:
            p = n
        if sorted(flat) != list(range(p)):
            raise ValueError("blocks must be disjoint and cover all indices")
        object.__setattr__(self, "blocks", canon)
        object.__setattr__(self, "p", int(p))

    @classmethod
    def from_labels(cls, labels) -> "BlockPartition":
        labels = np.asarray(labels)
        blocks = [np.flatnonzero(labels == lab).tolist() for lab in np.unique(labels)]
        return cls(blocks, p=labels.size)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def block_sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    def support_mask(self) -> np.ndarray:
        """Boolean (p, p) mask of the permitted-nonzero region."""
        mask = np.zeros((self.p, self.p), dtype=bool)
        for b in self.blocks:
            idx = np.asarray(b, dtype=int)
            mask[np.ix_(idx, idx)] = True
        return mask

    def complement_mask(self) -> np.ndarray:
        return ~self.support_mask()


def _theta_list(thetas) -> list[np.ndarray]:
    if isinstance(thetas, PrecisionSet):
        return list(thetas.thetas)
    if isinstance(thetas, np.ndarray) and thetas.ndim == 2:
        return [thetas]
    return [np.asarray(t, dtype=float) for t in thetas]


def _chol_logdet(theta: np.ndarray, k: int) -> float:
    try:
        chol = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        raise ValueError(
            f"precision matrix for class {k} is not positive definite"
        ) from None
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def neg_log_likelihood(model: EmpiricalModel, thetas) -> float:
    """Negative Gaussian log-likelihood of K precision estimates.

    Returns ``sum_k n_k * (-log det theta_k + trace(S_k theta_k))``.
    Raises a :class:`ValueError` naming the offending class if some
    ``theta_k`` is not positive definite.
    """
    ths = _theta_list(thetas)
    if len(ths) != model.num_classes:
        raise ValueError(
            f"model has {model.num_classes} classes but {len(ths)} precisions given"
        )
    total = 0.0
    for k, (s, n, theta) in enumerate(zip(model.covariances, model.sample_sizes, ths)):
        if theta.shape != s.shape:
            raise ValueError(f"dimension mismatch in class {k}")
        total += n * (-_chol_logdet(theta, k) + float(np.sum(s * theta)))
    return total


def elementwise_l1(a: np.ndarray) -> float:
    """Sum of absolute values of all entries, diagonal included."""
    return float(np.sum(np.abs(a)))


def column_norms(a: np.ndarray, q: float) -> np.ndarray:
    """Per-column q-norms of a matrix, for q in {1, 2, inf}."""
    if q == 1:
        return np.sum(np.abs(a), axis=0)
    if q == 2:
        return np.sqrt(np.sum(a * a, axis=0))
    if math.isinf(q):
        return np.max(np.abs(a), axis=0) if a.shape[0] else np.zeros(a.shape[1])
    raise ValueError(f"q must be 1, 2 or inf, got {q}")


def sum_column_norms(a: np.ndarray, q: float) -> float:
    return float(np.sum(column_norms(a, q)))


def _check_coupling(residual: float, what: str, enabled: bool) -> None:
    if enabled and residual > COUPLING_TOL:
        raise CouplingError(
            f"{what} coupling residual {residual:.3e} exceeds {COUPLING_TOL:.0e}",
            residual,
        )


def pnjgl_objective(
    model: EmpiricalModel,
    theta1: np.ndarray,
    theta2: np.ndarray,
    v: np.ndarray,
    config: PenaltyConfig,
    *,
    check_coupling: bool = True,
) -> float:
    """Perturbed-node objective at an explicit difference decomposition.

    Evaluates ``-L + lambda1 (||theta1||_1 + ||theta2||_1)
    + lambda2 sum_j ||V_j||_q`` where V must satisfy
    ``theta1 - theta2 = V + V.T`` within the coupling tolerance
    (relative to ``max(1, ||theta1 - theta2||_F)``).
    """
    delta = theta1 - theta2
    residual = float(
        np.linalg.norm(delta - (v + v.T)) / max(1.0, np.linalg.norm(delta))
    )
    _check_coupling(residual, "perturbed-node", check_coupling)
    value = neg_log_likelihood(model, [theta1, theta2])
    value += config.lambda1 * (elementwise_l1(theta1) + elementwise_l1(theta2))
    value += config.lambda2 * sum_column_norms(v, config.q)
    return value


def cnjgl_objective(
    model: EmpiricalModel,
    thetas,
    vs,
    config: PenaltyConfig,
    *,
    check_coupling: bool = True,
) -> float:
    """Co-hub objective at explicit per-class decompositions.

    Evaluates ``-L + lambda1 sum_k ||theta_k||_1 + lambda2 sum_j
    ||stacked j-th columns of V_1..V_K||_q`` where each V_k must satisfy
    ``theta_k - diag(theta_k) = V_k + V_k.T`` within tolerance.
    """
    ths = _theta_list(thetas)
    vs = [np.asarray(v, dtype=float) for v in vs]
    if len(vs) != len(ths):
        raise ValueError("one V matrix per class is required")
    for k, (theta, v) in enumerate(zip(ths, vs)):
        off = theta - np.diag(np.diag(theta))
        residual = float(
            np.linalg.norm(off - (v + v.T)) / max(1.0, np.linalg.norm(off))
        )
        _check_coupling(residual, f"co-hub class {k}", check_coupling)
    value = neg_log_likelihood(model, ths)
    value += config.lambda1 * sum(elementwise_l1(t) for t in ths)
    value += config.lambda2 * sum_column_norms(np.vstack(vs), config.q)
    return value


def fgl_objective(model: EmpiricalModel, thetas, lambda1: float, lambda2: float) -> float:
    """Fused objective: elementwise-L1 on pairwise differences.

    The fusion term is ``(lambda2 / 2) * sum_{k<k'} ||theta_k - theta_k'||_1``
    over all entries, which makes the fused problem the q=1 instance of
    the perturbed-node problem at the same ``lambda2``.
    """
    ths = _theta_list(thetas)
    value = neg_log_likelihood(model, ths)
    value += lambda1 * sum(elementwise_l1(t) for t in ths)
    fused = 0.0
    for a in range(len(ths)):
        for b in range(a + 1, len(ths)):
            fused += elementwise_l1(ths[a] - ths[b])
    return value + 0.5 * lambda2 * fused


def ggl_objective(model: EmpiricalModel, thetas, lambda1: float, lambda2: float) -> float:
    """Group objective: across-class L2 on each off-diagonal entry."""
    ths = _theta_list(thetas)
    value = neg_log_likelihood(model, ths)
    value += lambda1 * sum(elementwise_l1(t) for t in ths)
    sq = np.zeros_like(ths[0])
    for t in ths:
        sq += t * t
    group = np.sqrt(sq)
    np.fill_diagonal(group, 0.0)
    return value + lambda2 * float(np.sum(group))


def gl_objective(
    s: np.ndarray,
    n: float,
    theta: np.ndarray,
    lambda1: float,
    *,
    lambda1_offdiag: float | None = None,
) -> float:
    """Single-class graphical-lasso objective.

    ``lambda1_offdiag`` allows a different penalty on off-diagonal
    entries; by default all entries are penalized by ``lambda1``.
    """
    model = EmpiricalModel([s], [n])
    value = neg_log_likelihood(model, [theta])
    lam_off = lambda1 if lambda1_offdiag is None else lambda1_offdiag
    diag_l1 = float(np.sum(np.abs(np.diag(theta))))
    return value + lambda1 * diag_l1 + lam_off * (elementwise_l1(theta) - diag_l1)
