"""Block-diagonal screening: certify, decompose, solve per block, reassemble.

A thresholded graph on the empirical covariances certifies when every
penalized estimate is block-diagonal up to a permutation, in which case
the full problem splits into independent sub-problems on the connected
components.  The sufficient condition is shared by all five methods;
the necessary conditions are method-specific and reported for
diagnostics only.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .admm import AdmmDiagnostics, AdmmOptions
from .baselines import solve_fgl, solve_ggl, solve_gl_model
from .cnjgl import solve_cnjgl
from .model import BlockPartition, EmpiricalModel, PenaltyConfig, PrecisionSet
from .pnjgl import solve_pnjgl

__all__ = [
    "ScreenGraph",
    "ScreenReport",
    "build_screen_graph",
    "connected_components",
    "check_sufficient",
    "check_necessary_pnjgl",
    "check_necessary_cnjgl",
    "solve_decomposed",
    "DecompositionDiagnostics",
    "METHODS",
]

METHODS = ("pnjgl", "cnjgl", "fgl", "ggl", "gl")


@dataclass(frozen=True)
class ScreenGraph:
    """Boolean adjacency: true diagonal plus every above-threshold entry."""

    adjacency: np.ndarray

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]


def build_screen_graph(model: EmpiricalModel, lambda1: float) -> ScreenGraph:
    """Edge (i, j) present iff ``n_k |S_ij^k| > lambda1`` for any class.

    The comparison is exact and strict; ties fall outside the graph,
    consistent with the non-strict sufficient condition below.
    """
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    p = model.p
    adj = np.eye(p, dtype=bool)
    for s, n in zip(model.covariances, model.sample_sizes):
        adj |= n * np.abs(s) > lambda1
    adj |= adj.T
    out = np.ascontiguousarray(adj)
    out.flags.writeable = False
    return ScreenGraph(out)


def connected_components(graph: ScreenGraph) -> BlockPartition:
    """Partition into maximal connected components, canonically ordered.

    Blocks come out sorted by smallest member, members ascending.
    """
    _, labels = _cc(csr_matrix(graph.adjacency), directed=False)
    return BlockPartition.from_labels(labels)


def _complement_pairs(partition: BlockPartition):
    mask = partition.complement_mask()
    return mask, int(mask.sum())


def check_sufficient(model: EmpiricalModel, lambda1: float, partition: BlockPartition) -> bool:
    """Shared sufficient condition for a block-diagonal solution.

    True iff ``n_k |S_ij^k| <= lambda1`` for every cross-block pair and
    every class.  The same condition certifies all five methods.
    """
    mask, count = _complement_pairs(partition)
    if count == 0:
        return True
    return all(
        float(np.max(n * np.abs(s)[mask])) <= lambda1
        for s, n in zip(model.covariances, model.sample_sizes)
    )


@dataclass(frozen=True)
class ScreenReport:
    """Outcome of the block-diagonality conditions for one partition.

    ``necessary_sum`` applies to the perturbed-node problem only and
    ``necessary_aggregate`` to q > 1 only; inapplicable flags are None.
    ``sufficient_exact_q1`` records the stronger exact test available
    for the fused case (q=1, two classes), where the necessary
    conditions are also sufficient.
    """

    partition: BlockPartition
    sufficient_holds: bool
    necessary_basic: bool
    necessary_sum: bool | None = None
    necessary_aggregate: bool | None = None
    necessary_aggregate_asymptotic: bool | None = None
    sufficient_exact_q1: bool | None = None

    def consistent(self) -> bool:
        """Sufficient must imply every applicable necessary flag."""
        if not self.sufficient_holds:
            return True
        flags = [self.necessary_basic, self.necessary_sum, self.necessary_aggregate]
        return all(f is not False for f in flags)

    def to_dict(self) -> dict:
        return {
            "blocks": [list(b) for b in self.partition.blocks],
            "block_sizes": self.partition.block_sizes(),
            "sufficient_holds": self.sufficient_holds,
            "necessary_basic": self.necessary_basic,
            "necessary_sum": self.necessary_sum,
            "necessary_aggregate": self.necessary_aggregate,
            "necessary_aggregate_asymptotic": self.necessary_aggregate_asymptotic,
            "sufficient_exact_q1": self.sufficient_exact_q1,
        }


def _necessary_basic(model, config, mask) -> bool:
    bound = config.lambda1 + config.lambda2 / 2.0
    return all(
        float(np.max(n * np.abs(s)[mask])) <= bound
        for s, n in zip(model.covariances, model.sample_sizes)
    )


def _necessary_aggregate(model, config, mask, count) -> tuple[bool, bool]:
    # Aggregate bound: mean cross-block magnitude per class against
    # lambda1 + (lambda2/2) (p / |Tc|)^(1/s); the asymptotic variant
    # drops the second term and is reported informationally only.
    p = model.p
    s_exp = config.s
    factor = 1.0 if math.isinf(s_exp) else (p / count) ** (1.0 / s_exp)
    bound = config.lambda1 + 0.5 * config.lambda2 * factor
    exact, asymptotic = True, True
    for s, n in zip(model.covariances, model.sample_sizes):
        mean_abs = n * float(np.sum(np.abs(s)[mask])) / count
        exact &= mean_abs <= bound
        asymptotic &= mean_abs <= config.lambda1
    return exact, asymptotic


def check_necessary_pnjgl(
    model: EmpiricalModel, config: PenaltyConfig, partition: BlockPartition
) -> ScreenReport:
    """Necessary conditions for the two-class perturbed-node problem.

    Checks, over all cross-block pairs: the per-class bound
    ``n_k |S_ij^k| <= lambda1 + lambda2/2``, the sum bound
    ``|n_1 S_ij^1 + n_2 S_ij^2| <= 2 lambda1``, and for q > 1 the
    aggregate bound on the mean cross-block magnitude.
    """
    if model.num_classes != 2:
        raise ValueError("perturbed-node conditions require exactly two classes")
    mask, count = _complement_pairs(partition)
    sufficient = check_sufficient(model, config.lambda1, partition)
    if count == 0:
        return ScreenReport(
            partition, sufficient, True, True,
            None if config.q == 1 else True,
            None if config.q == 1 else True,
            True if (config.q == 1) else None,
        )
    basic = _necessary_basic(model, config, mask)
    s1, s2 = model.covariances
    n1, n2 = model.sample_sizes
    summed = bool(
        float(np.max(np.abs(n1 * s1 + n2 * s2)[mask])) <= 2.0 * config.lambda1
    )
    aggregate = aggregate_asym = None
    if config.q > 1:
        aggregate, aggregate_asym = _necessary_aggregate(model, config, mask, count)
    exact_q1 = (basic and summed) if config.q == 1 else None
    return ScreenReport(
        partition, sufficient, basic, summed, aggregate, aggregate_asym, exact_q1
    )


def check_necessary_cnjgl(
    model: EmpiricalModel, config: PenaltyConfig, partition: BlockPartition
) -> ScreenReport:
    """Necessary conditions for the co-hub problem (no sum bound exists)."""
    mask, count = _complement_pairs(partition)
    sufficient = check_sufficient(model, config.lambda1, partition)
    if count == 0:
        return ScreenReport(
            partition, sufficient, True, None,
            None if config.q == 1 else True,
            None if config.q == 1 else True,
        )
    basic = _necessary_basic(model, config, mask)
    aggregate = aggregate_asym = None
    if config.q > 1:
        aggregate, aggregate_asym = _necessary_aggregate(model, config, mask, count)
    return ScreenReport(partition, sufficient, basic, None, aggregate, aggregate_asym)


@dataclass
class DecompositionDiagnostics:
    """Bookkeeping for a screened, per-block solve."""

    partition: BlockPartition
    block_sizes: list[int]
    block_wall_times: list[float]
    block_diagnostics: list
    wall_time: float
    converged: bool
    convergence_failure: bool
    cost_model: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "blocks": [list(b) for b in self.partition.blocks],
            "block_sizes": self.block_sizes,
            "block_wall_times": self.block_wall_times,
            "wall_time": self.wall_time,
            "converged": self.converged,
            "convergence_failure": self.convergence_failure,
            "cost_model": self.cost_model,
        }


def _solve_method(method: str, model: EmpiricalModel, config: PenaltyConfig, options):
    if method == "pnjgl":
        return solve_pnjgl(model, config, options)
    if method == "cnjgl":
        return solve_cnjgl(model, config, options)
    if method == "fgl":
        return solve_fgl(model, config.lambda1, config.lambda2, options)
    if method == "ggl":
        return solve_ggl(model, config.lambda1, config.lambda2, options)
    if method == "gl":
        est, diags = solve_gl_model(model, config.lambda1, options)
        return est, _merge_gl_diags(diags)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _merge_gl_diags(diags: list[AdmmDiagnostics]) -> AdmmDiagnostics:
    worst = max(diags, key=lambda d: max(d.residuals.values()))
    merged = AdmmDiagnostics(
        converged=all(d.converged for d in diags),
        convergence_failure=any(d.convergence_failure for d in diags),
        outer_iterations=max(d.outer_iterations for d in diags),
        total_sweeps=sum(d.total_sweeps for d in diags),
        final_rho=worst.final_rho,
        eps=worst.eps,
        residuals=dict(worst.residuals),
        objective=sum(d.objective for d in diags),
        wall_time=sum(d.wall_time for d in diags),
        message="; ".join(sorted({d.message for d in diags})),
    )
    return merged


def _has_decomposition(method: str) -> bool:
    return method in ("pnjgl", "cnjgl", "fgl")


def _num_decomposition(method: str, num_classes: int) -> int:
    return 1 if method in ("pnjgl", "fgl") else num_classes


def solve_decomposed(
    method: str,
    model: EmpiricalModel,
    config: PenaltyConfig,
    options: AdmmOptions | None = None,
) -> tuple[PrecisionSet, DecompositionDiagnostics]:
    """Screen, split into connected components, solve, and reassemble.

    The screening graph at ``config.lambda1`` certifies (sufficient
    condition) that the assembled block-diagonal solution is the global
    one; entries outside the blocks are exact zeros.  Blocks run
    concurrently when the NJGL_THREADS environment variable allows it.
    """
    start = time.perf_counter()
    options = options or AdmmOptions()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if method in ("pnjgl", "fgl") and model.num_classes != 2:
        raise ValueError(f"method {method!r} requires exactly two classes")
    if method == "ggl" and model.num_classes < 2:
        raise ValueError("method 'ggl' requires at least two classes")
    partition = connected_components(build_screen_graph(model, config.lambda1))
    p, num_classes = model.p, model.num_classes

    def solve_block(block):
        t0 = time.perf_counter()
        sub = model.submodel(block) if len(block) < p else model
        est, diag = _solve_method(method, sub, config, options)
        return est, diag, time.perf_counter() - t0

    workers = max(1, int(os.environ.get("NJGL_THREADS", "1")))
    if workers > 1 and partition.num_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_block, partition.blocks))
    else:
        results = [solve_block(block) for block in partition.blocks]

    thetas = [np.zeros((p, p)) for _ in range(num_classes)]
    vs = (
        [np.zeros((p, p)) for _ in range(_num_decomposition(method, num_classes))]
        if _has_decomposition(method)
        else None
    )
    block_diags, block_times = [], []
    for block, (est, diag, elapsed) in zip(partition.blocks, results):
        idx = np.asarray(block, dtype=int)
        grid = np.ix_(idx, idx)
        for k in range(num_classes):
            thetas[k][grid] = est.thetas[k]
        if vs is not None and est.decomposition is not None:
            for k in range(len(vs)):
                vs[k][grid] = est.decomposition[k]
        block_diags.append(diag)
        block_times.append(elapsed)

    sizes = partition.block_sizes()
    diagnostics = DecompositionDiagnostics(
        partition=partition,
        block_sizes=sizes,
        block_wall_times=block_times,
        block_diagnostics=block_diags,
        wall_time=time.perf_counter() - start,
        converged=all(d.converged for d in block_diags),
        convergence_failure=any(d.convergence_failure for d in block_diags),
        cost_model={
            "whole_per_sweep_flops": float(p**3),
            "decomposed_per_sweep_flops": float(sum(b**3 for b in sizes)),
        },
    )
    estimate = PrecisionSet(
        thetas=tuple(thetas), decomposition=None if vs is None else tuple(vs)
    )
    return estimate, diagnostics
