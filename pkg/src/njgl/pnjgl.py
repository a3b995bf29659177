"""ADMM solver for the perturbed-node joint graphical lasso (two classes).

The problem couples two precision matrices through a column-norm penalty
on a decomposition V of their difference:

    minimize  -L(theta1, theta2) + lambda1 (||Z1||_1 + ||Z2||_1)
              + lambda2 sum_j ||V_j||_q
    s.t.      theta1 - theta2 = V + W,  V = W.T,
              theta1 = Z1,  theta2 = Z2.

Every primal update below minimizes the augmented Lagrangian over its
own block in closed form; dual variables follow by ascent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admm import AdmmDiagnostics, AdmmOptions, run_admm
from .model import (
    EmpiricalModel,
    PenaltyConfig,
    PrecisionSet,
    elementwise_l1,
    neg_log_likelihood,
    sum_column_norms,
    symmetrize,
)
from .prox import expand, prox_columns, prox_l1

__all__ = ["PnjglState", "initial_state", "step_pnjgl", "solve_pnjgl", "augmented_lagrangian"]


@dataclass(frozen=True)
class PnjglState:
    """All primal and dual iterates of the two-class solver.

    ``theta1``/``theta2`` stay positive definite throughout (the log-det
    resolvent guarantees it); ``z1``/``z2`` carry the exactly sparse
    copies; ``v``/``w`` split the difference; ``f``, ``g``, ``q1``,
    ``q2`` are the dual variables of the four coupling constraints.
    """

    theta1: np.ndarray
    theta2: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    v: np.ndarray
    w: np.ndarray
    f: np.ndarray
    g: np.ndarray
    q1: np.ndarray
    q2: np.ndarray


def initial_state(p: int) -> PnjglState:
    """Identity primal variables, zero dual variables."""
    eye = np.eye(p)
    zero = np.zeros((p, p))
    return PnjglState(
        theta1=eye.copy(),
        theta2=eye.copy(),
        z1=eye.copy(),
        z2=eye.copy(),
        v=eye.copy(),
        w=eye.copy(),
        f=zero.copy(),
        g=zero.copy(),
        q1=zero.copy(),
        q2=zero.copy(),
    )


def step_pnjgl(
    state: PnjglState, model: EmpiricalModel, config: PenaltyConfig, rho: float
) -> PnjglState:
    """One full sweep: six primal updates then four dual-ascent updates."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    s1, s2 = model.covariances
    n1, n2 = model.sample_sizes
    lam1, lam2, q = config.lambda1, config.lambda2, config.q

    theta1 = expand(
        0.5 * (state.theta2 + state.v + state.w + state.z1)
        - (state.q1 + n1 * s1 + state.f) / (2.0 * rho),
        rho,
        n1,
    )
    theta2 = expand(
        0.5 * (theta1 - (state.v + state.w) + state.z2)
        - (state.q2 + n2 * s2 - state.f) / (2.0 * rho),
        rho,
        n2,
    )
    z1 = prox_l1(theta1 + state.q1 / rho, lam1 / rho)
    z2 = prox_l1(theta2 + state.q2 / rho, lam1 / rho)
    v = prox_columns(
        0.5 * (state.w.T - state.w + (theta1 - theta2))
        + (state.f - state.g) / (2.0 * rho),
        lam2 / (2.0 * rho),
        q,
    )
    w = 0.5 * (v.T - v + (theta1 - theta2)) + (state.f + state.g.T) / (2.0 * rho)
    f = state.f + rho * (theta1 - theta2 - (v + w))
    g = state.g + rho * (v - w.T)
    q1 = state.q1 + rho * (theta1 - z1)
    q2 = state.q2 + rho * (theta2 - z2)
    return PnjglState(theta1, theta2, z1, z2, v, w, f, g, q1, q2)


def _residuals(state: PnjglState) -> dict[str, float]:
    scale = max(1.0, float(np.linalg.norm(state.theta1)))
    return {
        "difference_split": float(
            np.linalg.norm(state.theta1 - state.theta2 - (state.v + state.w))
        )
        / scale,
        "split_mirror": float(np.linalg.norm(state.v - state.w.T)) / scale,
        "sparsity_copy": max(
            float(np.linalg.norm(state.theta1 - state.z1)),
            float(np.linalg.norm(state.theta2 - state.z2)),
        )
        / scale,
    }


def augmented_lagrangian(
    state: PnjglState, model: EmpiricalModel, config: PenaltyConfig, rho: float
) -> float:
    """Value of the augmented Lagrangian at the given iterates."""
    s = state
    value = neg_log_likelihood(model, [s.theta1, s.theta2])
    value += config.lambda1 * (elementwise_l1(s.z1) + elementwise_l1(s.z2))
    value += config.lambda2 * sum_column_norms(s.v, config.q)
    r_split = s.theta1 - s.theta2 - (s.v + s.w)
    r_mirror = s.v - s.w.T
    r_z1 = s.theta1 - s.z1
    r_z2 = s.theta2 - s.z2
    value += float(np.sum(s.f * r_split) + np.sum(s.g * r_mirror))
    value += float(np.sum(s.q1 * r_z1) + np.sum(s.q2 * r_z2))
    value += 0.5 * rho * float(
        np.linalg.norm(r_split) ** 2
        + np.linalg.norm(r_mirror) ** 2
        + np.linalg.norm(r_z1) ** 2
        + np.linalg.norm(r_z2) ** 2
    )
    return value


def solve_pnjgl(
    model: EmpiricalModel,
    config: PenaltyConfig,
    options: AdmmOptions | None = None,
    init: PnjglState | None = None,
) -> tuple[PrecisionSet, AdmmDiagnostics]:
    """Solve the two-class perturbed-node problem.

    Returns the symmetrized sparse copies ``(Z_i + Z_i.T) / 2`` as the
    estimates (they carry exact zeros from soft thresholding), the final
    V iterate as the difference decomposition, and full diagnostics.
    On failure to converge within the budget, the best iterate is still
    returned with ``diagnostics.convergence_failure`` set.
    """
    if model.num_classes != 2:
        raise ValueError("the perturbed-node solver requires exactly two classes")
    options = options or AdmmOptions()
    state = init if init is not None else initial_state(model.p)

    diagnostics = run_admm(
        state,
        sweep=lambda s, rho: step_pnjgl(s, model, config, rho),
        thetas_of=lambda s: [s.theta1, s.theta2],
        residuals_of=_residuals,
        options=options,
    )
    final: PnjglState = diagnostics.state
    theta1 = symmetrize(final.z1)
    theta2 = symmetrize(final.z2)
    try:
        diagnostics.objective = pnjgl_objective_unchecked(model, theta1, theta2, final.v, config)
    except ValueError:
        # Non-PD symmetrized copy on a failed run: report at the PD iterates.
        diagnostics.objective = pnjgl_objective_unchecked(
            model, final.theta1, final.theta2, final.v, config
        )
    duals = None
    if config.lambda2 > 0:
        duals = (final.f / config.lambda2,)
    estimate = PrecisionSet(
        thetas=(theta1, theta2), decomposition=(final.v,), duals=duals
    )
    return estimate, diagnostics


def pnjgl_objective_unchecked(model, theta1, theta2, v, config) -> float:
    """Objective at the iterates without the coupling-residual guard.

    Used for diagnostics, where the V iterate satisfies its constraint
    only up to the solver tolerance.
    """
    value = neg_log_likelihood(model, [theta1, theta2])
    value += config.lambda1 * (elementwise_l1(theta1) + elementwise_l1(theta2))
    value += config.lambda2 * sum_column_norms(v, config.q)
    return value
