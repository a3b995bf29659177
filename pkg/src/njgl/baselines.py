"""Comparator methods: graphical lasso, fused, and group variants.

All three share the penalty schedule and stopping rule of the node-based
solvers, so comparative experiments vary only the penalty structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admm import AdmmDiagnostics, AdmmOptions, run_admm
from .model import (
    EmpiricalModel,
    PenaltyConfig,
    PrecisionSet,
    gl_objective,
    ggl_objective,
    symmetrize,
)
from .pnjgl import PnjglState, solve_pnjgl
from .prox import expand, prox_l1, prox_sparse_group

__all__ = ["solve_gl", "solve_gl_model", "solve_fgl", "solve_ggl"]


@dataclass(frozen=True)
class _GlState:
    theta: np.ndarray
    z: np.ndarray
    q: np.ndarray


def _gl_sweep(state: _GlState, s, n, lam_diag, lam_off, rho) -> _GlState:
    theta = expand(state.z - (state.q + n * s) / rho, rho / 2.0, n)
    target = theta + state.q / rho
    if lam_off == lam_diag:
        z = prox_l1(target, lam_diag / rho)
    else:
        z = prox_l1(target, lam_off / rho)
        diag = prox_l1(np.diag(target), lam_diag / rho)
        np.fill_diagonal(z, diag)
    q = state.q + rho * (theta - z)
    return _GlState(theta, z, q)


def solve_gl(
    s: np.ndarray,
    n: float,
    lambda1: float,
    options: AdmmOptions | None = None,
    *,
    lambda1_offdiag: float | None = None,
) -> tuple[np.ndarray, AdmmDiagnostics]:
    """Single-class graphical lasso via the shared ADMM skeleton.

    Only the theta/Z/Q blocks are active.  ``lambda1_offdiag`` optionally
    applies a different penalty to off-diagonal entries.
    """
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    options = options or AdmmOptions()
    model = EmpiricalModel([s], [n])  # validates and symmetrizes
    s = model.covariances[0]
    p = s.shape[0]
    lam_off = lambda1 if lambda1_offdiag is None else lambda1_offdiag
    state = _GlState(theta=np.eye(p), z=np.eye(p), q=np.zeros((p, p)))

    def residuals(st: _GlState) -> dict[str, float]:
        scale = max(1.0, float(np.linalg.norm(st.theta)))
        return {"sparsity_copy": float(np.linalg.norm(st.theta - st.z)) / scale}

    diagnostics = run_admm(
        state,
        sweep=lambda st, rho: _gl_sweep(st, s, n, lambda1, lam_off, rho),
        thetas_of=lambda st: [st.theta],
        residuals_of=residuals,
        options=options,
    )
    final: _GlState = diagnostics.state
    theta = symmetrize(final.z)
    try:
        diagnostics.objective = gl_objective(
            s, n, theta, lambda1, lambda1_offdiag=lambda1_offdiag
        )
    except ValueError:
        diagnostics.objective = gl_objective(
            s, n, final.theta, lambda1, lambda1_offdiag=lambda1_offdiag
        )
    return theta, diagnostics


def solve_gl_model(
    model: EmpiricalModel,
    lambda1: float,
    options: AdmmOptions | None = None,
) -> tuple[PrecisionSet, list[AdmmDiagnostics]]:
    """Independent graphical-lasso solves, one per class."""
    thetas = []
    diags = []
    for s, n in zip(model.covariances, model.sample_sizes):
        theta, diag = solve_gl(s, n, lambda1, options)
        thetas.append(theta)
        diags.append(diag)
    return PrecisionSet(thetas=tuple(thetas)), diags


def solve_fgl(
    model: EmpiricalModel,
    lambda1: float,
    lambda2: float,
    options: AdmmOptions | None = None,
    init: PnjglState | None = None,
) -> tuple[PrecisionSet, AdmmDiagnostics]:
    """Fused graphical lasso for two classes.

    Definitional alias: the fused penalty is the q=1 instance of the
    perturbed-node problem, so this delegates to that solver unchanged.
    """
    return solve_pnjgl(model, PenaltyConfig(lambda1, lambda2, q=1), options, init)


@dataclass(frozen=True)
class _GglState:
    thetas: tuple[np.ndarray, ...]
    zs: tuple[np.ndarray, ...]
    qs: tuple[np.ndarray, ...]


def _ggl_sweep(state: _GglState, model, lambda1, lambda2, rho) -> _GglState:
    thetas = tuple(
        expand(z - (qd + n * s) / rho, rho / 2.0, n)
        for z, qd, n, s in zip(
            state.zs, state.qs, model.sample_sizes, model.covariances
        )
    )
    zs = tuple(
        prox_sparse_group(
            [t + qd / rho for t, qd in zip(thetas, state.qs)],
            lambda1 / rho,
            lambda2 / rho,
        )
    )
    qs = tuple(qd + rho * (t - z) for qd, t, z in zip(state.qs, thetas, zs))
    return _GglState(thetas, zs, qs)


def solve_ggl(
    model: EmpiricalModel,
    lambda1: float,
    lambda2: float,
    options: AdmmOptions | None = None,
) -> tuple[PrecisionSet, AdmmDiagnostics]:
    """Group graphical lasso: across-class L2 on each off-diagonal entry.

    The sparse copies are updated jointly by the composed soft-threshold
    and group-shrink operator; diagonals see only the L1 penalty.
    """
    if model.num_classes < 2:
        raise ValueError("the group solver requires at least two classes")
    if lambda1 < 0 or lambda2 < 0:
        raise ValueError("penalties must be nonnegative")
    options = options or AdmmOptions()
    p = model.p
    state = _GglState(
        thetas=tuple(np.eye(p) for _ in range(model.num_classes)),
        zs=tuple(np.eye(p) for _ in range(model.num_classes)),
        qs=tuple(np.zeros((p, p)) for _ in range(model.num_classes)),
    )

    def residuals(st: _GglState) -> dict[str, float]:
        scale = max(1.0, max(float(np.linalg.norm(t)) for t in st.thetas))
        return {
            "sparsity_copy": max(
                float(np.linalg.norm(t - z)) for t, z in zip(st.thetas, st.zs)
            )
            / scale
        }

    diagnostics = run_admm(
        state,
        sweep=lambda st, rho: _ggl_sweep(st, model, lambda1, lambda2, rho),
        thetas_of=lambda st: list(st.thetas),
        residuals_of=residuals,
        options=options,
    )
    final: _GglState = diagnostics.state
    thetas = tuple(symmetrize(z) for z in final.zs)
    try:
        diagnostics.objective = ggl_objective(model, list(thetas), lambda1, lambda2)
    except ValueError:
        diagnostics.objective = ggl_objective(model, list(final.thetas), lambda1, lambda2)
    return PrecisionSet(thetas=thetas), diagnostics
