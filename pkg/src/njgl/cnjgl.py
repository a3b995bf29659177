"""ADMM solver for the co-hub node joint graphical lasso (general K).

Each precision matrix is decomposed, off its diagonal, into a column
matrix plus its transpose; the stacked columns across classes share one
group penalty, so a column is kept or killed jointly in all K classes:

    minimize  -L(theta_1..theta_K) + lambda1 sum_k ||Z_k||_1
              + lambda2 sum_j ||[Vt_1 - diag(Vt_1); ...; Vt_K - diag(Vt_K)]_j||_q
    s.t.      theta_k = Vt_k + W_k,  Vt_k = W_k.T,  theta_k = Z_k.

The stacked column update is the only coupling across classes; all other
updates run class by class.
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

__all__ = ["CnjglState", "initial_state", "step_cnjgl", "solve_cnjgl", "augmented_lagrangian"]


@dataclass(frozen=True)
class CnjglState:
    """Per-class iterates: thetas, sparse copies, splits, and duals."""

    thetas: tuple[np.ndarray, ...]
    zs: tuple[np.ndarray, ...]
    vtildes: tuple[np.ndarray, ...]
    ws: tuple[np.ndarray, ...]
    fs: tuple[np.ndarray, ...]
    gs: tuple[np.ndarray, ...]
    qs: tuple[np.ndarray, ...]

    @property
    def num_classes(self) -> int:
        return len(self.thetas)


def initial_state(p: int, num_classes: int) -> CnjglState:
    """Identity primal variables, zero dual variables."""
    eyes = lambda: tuple(np.eye(p) for _ in range(num_classes))  # noqa: E731
    zeros = lambda: tuple(np.zeros((p, p)) for _ in range(num_classes))  # noqa: E731
    return CnjglState(
        thetas=eyes(), zs=eyes(), vtildes=eyes(), ws=eyes(),
        fs=zeros(), gs=zeros(), qs=zeros(),
    )


def _remove_diag(a: np.ndarray) -> np.ndarray:
    return a - np.diag(np.diag(a))


def step_cnjgl(
    state: CnjglState, model: EmpiricalModel, config: PenaltyConfig, rho: float
) -> CnjglState:
    """One full sweep in the update order theta, Z, stacked Vt, W, duals."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    p = model.p
    lam1, lam2, q = config.lambda1, config.lambda2, config.q

    thetas = tuple(
        expand(
            0.5 * (vt + w + z) - (qd + n * s + f) / (2.0 * rho),
            rho,
            n,
        )
        for vt, w, z, qd, n, s, f in zip(
            state.vtildes, state.ws, state.zs, state.qs,
            model.sample_sizes, model.covariances, state.fs,
        )
    )
    zs = tuple(
        prox_l1(theta + qd / rho, lam1 / rho) for theta, qd in zip(thetas, state.qs)
    )
    cs = [
        0.5 * (w.T - w + theta) + (f - g) / (2.0 * rho)
        for w, theta, f, g in zip(state.ws, thetas, state.fs, state.gs)
    ]
    stacked = prox_columns(
        np.vstack([_remove_diag(c) for c in cs]), lam2 / (2.0 * rho), q
    )
    vtildes = tuple(
        stacked[k * p : (k + 1) * p] + np.diag(np.diag(cs[k]))
        for k in range(len(cs))
    )
    ws = tuple(
        0.5 * (vt.T - vt + theta) + (f + g.T) / (2.0 * rho)
        for vt, theta, f, g in zip(vtildes, thetas, state.fs, state.gs)
    )
    fs = tuple(
        f + rho * (theta - (vt + w))
        for f, theta, vt, w in zip(state.fs, thetas, vtildes, ws)
    )
    gs = tuple(g + rho * (vt - w.T) for g, vt, w in zip(state.gs, vtildes, ws))
    qs = tuple(qd + rho * (theta - z) for qd, theta, z in zip(state.qs, thetas, zs))
    return CnjglState(thetas, zs, vtildes, ws, fs, gs, qs)


def _residuals(state: CnjglState) -> dict[str, float]:
    scale = max(1.0, max(float(np.linalg.norm(t)) for t in state.thetas))
    return {
        "theta_split": max(
            float(np.linalg.norm(t - (vt + w)))
            for t, vt, w in zip(state.thetas, state.vtildes, state.ws)
        )
        / scale,
        "split_mirror": max(
            float(np.linalg.norm(vt - w.T)) for vt, w in zip(state.vtildes, state.ws)
        )
        / scale,
        "sparsity_copy": max(
            float(np.linalg.norm(t - z)) for t, z in zip(state.thetas, state.zs)
        )
        / scale,
    }


def augmented_lagrangian(
    state: CnjglState, model: EmpiricalModel, config: PenaltyConfig, rho: float
) -> float:
    """Value of the augmented Lagrangian at the given iterates."""
    value = neg_log_likelihood(model, list(state.thetas))
    value += config.lambda1 * sum(elementwise_l1(z) for z in state.zs)
    value += config.lambda2 * sum_column_norms(
        np.vstack([_remove_diag(vt) for vt in state.vtildes]), config.q
    )
    for theta, z, vt, w, f, g, qd in zip(
        state.thetas, state.zs, state.vtildes, state.ws, state.fs, state.gs, state.qs
    ):
        r_split = theta - (vt + w)
        r_mirror = vt - w.T
        r_z = theta - z
        value += float(np.sum(f * r_split) + np.sum(g * r_mirror) + np.sum(qd * r_z))
        value += 0.5 * rho * float(
            np.linalg.norm(r_split) ** 2
            + np.linalg.norm(r_mirror) ** 2
            + np.linalg.norm(r_z) ** 2
        )
    return value


def solve_cnjgl(
    model: EmpiricalModel,
    config: PenaltyConfig,
    options: AdmmOptions | None = None,
    init: CnjglState | None = None,
) -> tuple[PrecisionSet, AdmmDiagnostics]:
    """Solve the co-hub problem for K >= 1 classes.

    Returns symmetrized sparse copies as estimates, the diagonal-removed
    column matrices ``V_k = Vt_k - diag(Vt_k)`` as the decomposition,
    and diagnostics mirroring the perturbed-node solver.
    """
    options = options or AdmmOptions()
    state = init if init is not None else initial_state(model.p, model.num_classes)
    if state.num_classes != model.num_classes:
        raise ValueError("initial state class count does not match the model")

    diagnostics = run_admm(
        state,
        sweep=lambda s, rho: step_cnjgl(s, model, config, rho),
        thetas_of=lambda s: list(s.thetas),
        residuals_of=_residuals,
        options=options,
    )
    final: CnjglState = diagnostics.state
    thetas = tuple(symmetrize(z) for z in final.zs)
    vs = tuple(_remove_diag(vt) for vt in final.vtildes)
    try:
        diagnostics.objective = cnjgl_objective_unchecked(model, thetas, vs, config)
    except ValueError:
        diagnostics.objective = cnjgl_objective_unchecked(model, final.thetas, vs, config)
    duals = None
    if config.lambda2 > 0:
        duals = tuple(f / config.lambda2 for f in final.fs)
    estimate = PrecisionSet(thetas=thetas, decomposition=vs, duals=duals)
    return estimate, diagnostics


def cnjgl_objective_unchecked(model, thetas, vs, config) -> float:
    """Objective at the iterates without the coupling-residual guard."""
    value = neg_log_likelihood(model, list(thetas))
    value += config.lambda1 * sum(elementwise_l1(t) for t in thetas)
    value += config.lambda2 * sum_column_norms(np.vstack(vs), config.q)
    return value
