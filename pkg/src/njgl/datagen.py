"""Seeded synthetic benchmarks: paired networks with planted special nodes.

Each generator builds a base symmetric weight matrix (Erdos-Renyi,
preferential-attachment, or community-masked), duplicates it, perturbs a
few nodes in one copy, plants identical dense co-hub nodes in both,
shifts to positive definiteness, and samples Gaussian data.

All randomness flows through one PCG64-backed ``numpy.random.Generator``
seeded explicitly, so a seed pins the entire dataset bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EmpiricalModel

__all__ = ["SyntheticTruth", "SyntheticDataset", "gen_erdos", "gen_scalefree", "gen_community"]

#: Support of nonzero edge weights: magnitudes in [0.3, 0.6], either sign.
WEIGHT_LOW, WEIGHT_HIGH = 0.3, 0.6

#: Off-diagonal entries of the Erdos-Renyi base are zero with this probability.
ZERO_PROB = 0.98


@dataclass(frozen=True)
class SyntheticTruth:
    """True precision matrices and the planted special-node indices."""

    theta1: np.ndarray
    theta2: np.ndarray
    perturbed_idx: tuple[int, ...]
    cohub_idx: tuple[int, ...]
    seed: int


@dataclass(frozen=True)
class SyntheticDataset:
    """Truth plus sampled observations and their covariances."""

    truth: SyntheticTruth
    x1: np.ndarray
    x2: np.ndarray
    s1: np.ndarray
    s2: np.ndarray

    @property
    def model(self) -> EmpiricalModel:
        return EmpiricalModel([self.s1, self.s2], [self.x1.shape[0], self.x2.shape[0]])


def _weights(rng: np.random.Generator, size) -> np.ndarray:
    mag = rng.uniform(WEIGHT_LOW, WEIGHT_HIGH, size)
    sign = rng.integers(0, 2, size) * 2 - 1
    return sign * mag


def _erdos_base(rng: np.random.Generator, p: int) -> np.ndarray:
    a = np.zeros((p, p))
    iu = np.triu_indices(p, k=1)
    present = rng.random(iu[0].size) >= ZERO_PROB
    vals = np.where(present, _weights(rng, iu[0].size), 0.0)
    a[iu] = vals
    return a + a.T


def _preferential_attachment_edges(rng: np.random.Generator, p: int, m: int = 2):
    """Edge list of a preferential-attachment graph, m links per new node."""
    if p <= m:
        raise ValueError(f"need p > {m} nodes for attachment parameter m={m}")
    edges = []
    repeated: list[int] = []
    targets = list(range(m))
    for source in range(m, p):
        for t in targets:
            edges.append((source, t))
        repeated.extend(targets)
        repeated.extend([source] * m)
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(int(repeated[rng.integers(len(repeated))]))
        targets = sorted(chosen)
    return edges


def _scalefree_base(rng: np.random.Generator, p: int) -> np.ndarray:
    a = np.zeros((p, p))
    for i, j in _preferential_attachment_edges(rng, p, m=2):
        w = _weights(rng, ())
        a[i, j] = a[j, i] = w
    return a


def _edit_nodes(rng, a1, a2, n_perturbed, n_cohub):
    """Redraw off-diagonal rows/columns for perturbed and co-hub nodes."""
    p = a1.shape[0]
    special = rng.choice(p, size=n_perturbed + n_cohub, replace=False)
    perturbed = tuple(sorted(int(i) for i in special[:n_perturbed]))
    cohub = tuple(sorted(int(i) for i in special[n_perturbed:]))
    for node in perturbed:
        target = a1 if rng.integers(0, 2) == 0 else a2
        vals = _weights(rng, p - 1)
        row = np.delete(np.arange(p), node)
        target[node, row] = vals
        target[row, node] = vals
    for node in cohub:
        vals = _weights(rng, p - 1)
        row = np.delete(np.arange(p), node)
        for target in (a1, a2):
            target[node, row] = vals
            target[row, node] = vals
    return perturbed, cohub


def _spd_shift(a1: np.ndarray, a2: np.ndarray):
    c = min(float(np.linalg.eigvalsh(a1)[0]), float(np.linalg.eigvalsh(a2)[0]))
    shift = 0.1 + abs(c)
    eye = np.eye(a1.shape[0])
    return a1 + shift * eye, a2 + shift * eye


def _sample_class(rng: np.random.Generator, theta: np.ndarray, n: int):
    sigma = np.linalg.inv(theta)
    chol = np.linalg.cholesky(sigma)
    x = rng.standard_normal((n, theta.shape[0])) @ chol.T
    centered = x - x.mean(axis=0)
    return x, centered.T @ centered / n


def _finish(rng, a1, a2, n, seed, n_perturbed, n_cohub, mask=None):
    perturbed, cohub = _edit_nodes(rng, a1, a2, n_perturbed, n_cohub)
    if mask is not None:
        a1[mask] = 0.0
        a2[mask] = 0.0
    theta1, theta2 = _spd_shift(a1, a2)
    x1, s1 = _sample_class(rng, theta1, n)
    x2, s2 = _sample_class(rng, theta2, n)
    truth = SyntheticTruth(theta1, theta2, perturbed, cohub, seed)
    return SyntheticDataset(truth, x1, x2, s1, s2)


def _validate(p: int, n: int, n_perturbed: int, n_cohub: int) -> None:
    if n_perturbed < 0 or n_cohub < 0:
        raise ValueError("special-node counts must be nonnegative")
    if p < max(2, 2 * (n_perturbed + n_cohub)):
        raise ValueError(
            f"p={p} leaves no room for {n_perturbed + n_cohub} special nodes"
        )
    if n < 2:
        raise ValueError("need at least two observations per class")


def gen_erdos(
    p: int, n: int, seed: int, *, n_perturbed: int = 2, n_cohub: int = 2
) -> SyntheticDataset:
    """Erdos-Renyi pipeline: sparse base, node edits, SPD shift, sampling."""
    _validate(p, n, n_perturbed, n_cohub)
    rng = np.random.default_rng(seed)
    a1 = _erdos_base(rng, p)
    a2 = a1.copy()
    return _finish(rng, a1, a2, n, seed, n_perturbed, n_cohub)


def gen_scalefree(
    p: int, n: int, seed: int, *, n_perturbed: int = 2, n_cohub: int = 2
) -> SyntheticDataset:
    """Preferential-attachment base (two links per node), then as gen_erdos."""
    _validate(p, n, n_perturbed, n_cohub)
    rng = np.random.default_rng(seed)
    a1 = _scalefree_base(rng, p)
    a2 = a1.copy()
    return _finish(rng, a1, a2, n, seed, n_perturbed, n_cohub)


def gen_community(
    p: int = 100, n: int = 50, seed: int = 0, *, n_perturbed: int = 2, n_cohub: int = 2
) -> SyntheticDataset:
    """Two overlapping communities: the cross-community region is zeroed.

    For p=100 the masked region is rows 0:40 against columns 60:100 (and
    its mirror), leaving nonzeros confined to the top-left and
    bottom-right 60x60 principal submatrices with a 20-node overlap;
    other p scale the 0.4p/0.6p boundaries.  The mask is applied after
    the node edits, so it overrides them inside the masked region.
    """
    _validate(p, n, n_perturbed, n_cohub)
    lo, hi = round(0.4 * p), round(0.6 * p)
    rng = np.random.default_rng(seed)
    a1 = _erdos_base(rng, p)
    a2 = a1.copy()
    mask = np.zeros((p, p), dtype=bool)
    mask[:lo, hi:] = True
    mask |= mask.T
    return _finish(rng, a1, a2, n, seed, n_perturbed, n_cohub, mask=mask)
