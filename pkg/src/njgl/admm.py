"""Shared ADMM machinery: options, diagnostics, and the outer loop.

All solvers in this package follow the same scheme: a geometric penalty
schedule ``rho_t = min(rho0 * mu^t, rho_max)`` across outer iterations,
an inner loop of full update sweeps at fixed rho that ends when the
relative change of every precision iterate drops below ``eps`` (with a
geometric tail extrapolation so the tolerance tracks delivered
accuracy), and an overall stop once a whole outer round leaves the
iterate in place and every coupling residual is below ``eps`` as well.
Exhausting the budget with residuals above ``100 * eps`` is reported as
a convergence failure, never as a silent success.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

__all__ = ["AdmmOptions", "AdmmDiagnostics", "run_admm"]

#: Residuals above this multiple of eps at budget exhaustion mean failure.
FAILURE_FACTOR = 1e2


@dataclass(frozen=True)
class AdmmOptions:
    """Penalty schedule and stopping parameters shared by all solvers."""

    rho0: float = 0.5
    mu: float = 5.0
    t_max: int = 1000
    eps: float = 1e-4
    inner_cap: int = 10_000
    rho_max: float = 1e8

    def __post_init__(self):
        if self.rho0 <= 0:
            raise ValueError("rho0 must be positive")
        if self.mu <= 1:
            raise ValueError("mu must be greater than 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.t_max < 1 or self.inner_cap < 1:
            raise ValueError("iteration budgets must be at least 1")
        if self.rho_max < self.rho0:
            raise ValueError("rho_max must be at least rho0")

    def rho_at(self, t: int) -> float:
        """Penalty value used during outer iteration ``t`` (1-based)."""
        return min(self.rho0 * self.mu**t, self.rho_max)


@dataclass
class AdmmDiagnostics:
    """Outcome of a solve: convergence state, residuals, and by-products."""

    converged: bool
    convergence_failure: bool
    outer_iterations: int
    total_sweeps: int
    final_rho: float
    eps: float
    residuals: dict[str, float]
    objective: float = float("nan")
    wall_time: float = 0.0
    message: str = ""
    state: Any = None
    extras: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """JSON-friendly summary (drops the raw state)."""
        return {
            "converged": self.converged,
            "convergence_failure": self.convergence_failure,
            "outer_iterations": self.outer_iterations,
            "total_sweeps": self.total_sweeps,
            "final_rho": self.final_rho,
            "eps": self.eps,
            "residuals": dict(self.residuals),
            "objective": self.objective,
            "wall_time": self.wall_time,
            "message": self.message,
            **{k: v for k, v in self.extras.items() if _jsonable(v)},
        }


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, bool, list, dict, type(None)))


def _tail_done(rel_change: float, abs_change: float, ratios: list[float], eps: float) -> bool:
    # Linearly convergent sweeps hide a 1/(1 - rate) factor between the
    # per-sweep change and the distance to the fixed point; extrapolate
    # the geometric tail so eps tracks delivered accuracy, both relative
    # (the stopping metric) and entrywise (what downstream comparisons
    # at matched eps consume).
    if rel_change <= 1e-3 * eps:
        return True
    if not ratios:
        return True
    rate = min(max(max(ratios), 0.0), 0.9999)
    tail = rate / (1.0 - rate)
    return rel_change * tail <= eps and abs_change * tail <= 0.1 * eps


def max_abs_change(current, previous) -> float:
    return max(
        float(np.max(np.abs(cur - prev))) for cur, prev in zip(current, previous)
    )


def relative_change(current, previous) -> float:
    """max_i ||theta_i_new - theta_i_old||_F / ||theta_i_old||_F."""
    worst = 0.0
    for cur, prev in zip(current, previous):
        denom = float(np.linalg.norm(prev))
        if denom == 0.0:
            denom = 1.0
        worst = max(worst, float(np.linalg.norm(cur - prev)) / denom)
    return worst


def run_admm(
    state,
    sweep: Callable[[Any, float], Any],
    thetas_of: Callable[[Any], list[np.ndarray]],
    residuals_of: Callable[[Any], dict[str, float]],
    options: AdmmOptions,
) -> AdmmDiagnostics:
    """Drive the outer rho schedule around a solver-specific sweep.

    ``residuals_of`` must return residuals normalized to the iterate
    scale; the overall stop requires all of them at or below
    ``options.eps`` after an inner loop has converged.
    """
    start = time.perf_counter()
    total_sweeps = 0
    converged = False
    residuals: dict[str, float] = residuals_of(state)
    rho = options.rho0
    outer = 0
    round_end: list[np.ndarray] | None = None
    for outer in range(1, options.t_max + 1):
        rho = options.rho_at(outer)
        inner_converged = False
        prev_change = None
        ratios: list[float] = []
        for _ in range(options.inner_cap):
            previous = [t.copy() for t in thetas_of(state)]
            state = sweep(state, rho)
            total_sweeps += 1
            current_thetas = thetas_of(state)
            change = relative_change(current_thetas, previous)
            if prev_change is not None and prev_change > 0:
                ratios.append(change / prev_change)
                if len(ratios) > 3:
                    del ratios[0]
            prev_change = change
            if change <= options.eps and _tail_done(
                change, max_abs_change(current_thetas, previous), ratios, options.eps
            ):
                inner_converged = True
                break
        residuals = residuals_of(state)
        current = [t.copy() for t in thetas_of(state)]
        # The penalty bump between rounds moves the inner fixed point, so
        # the solve ends only once a whole round leaves the iterate in
        # place and every coupling holds at tolerance.
        if (
            inner_converged
            and round_end is not None
            and relative_change(current, round_end) <= options.eps
            and max(residuals.values()) <= options.eps
        ):
            converged = True
            break
        round_end = current
    worst = max(residuals.values())
    failure = not converged and worst > FAILURE_FACTOR * options.eps
    if converged:
        message = "converged"
    elif failure:
        message = (
            f"iteration budget exhausted with max residual {worst:.3e} "
            f"above {FAILURE_FACTOR * options.eps:.3e}; best iterate returned"
        )
    else:
        message = (
            f"iteration budget exhausted; residuals within {FAILURE_FACTOR:.0e} * eps"
        )
    return AdmmDiagnostics(
        converged=converged,
        convergence_failure=failure,
        outer_iterations=outer,
        total_sweeps=total_sweeps,
        final_rho=rho,
        eps=options.eps,
        residuals=residuals,
        wall_time=time.perf_counter() - start,
        message=message,
        state=state,
    )
