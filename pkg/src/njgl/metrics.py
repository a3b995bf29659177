"""Recovery metrics and cross-validated log-likelihood.

Edge metrics count thresholded entries of the strict upper triangle;
node metrics threshold the L2 norms of matrix columns (diagonal entry
removed) at ``mean + multiplier * std`` of the score vector.  Co-hub
counting requires the score to exceed its class threshold in every
class.  Cross-validation fits on training-fold covariances and scores
held-out folds with the unweighted Gaussian log-likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .admm import AdmmOptions
from .baselines import solve_fgl, solve_ggl, solve_gl_model
from .cnjgl import solve_cnjgl
from .model import EmpiricalModel, PenaltyConfig, PrecisionSet
from .pnjgl import solve_pnjgl

__all__ = [
    "MetricConfig",
    "MetricReport",
    "NodeScoreResult",
    "edge_metrics",
    "positive_edge_count",
    "column_scores",
    "score_threshold",
    "perturbed_node_scores",
    "cohub_node_scores",
    "frobenius_error",
    "evaluate",
    "CvRow",
    "cross_validate",
]


@dataclass(frozen=True)
class MetricConfig:
    """Edge threshold and the node-score threshold multiplier."""

    edge_threshold: float = 1e-6
    score_multiplier: float = 5.5

    def __post_init__(self):
        if self.edge_threshold <= 0:
            raise ValueError("edge_threshold must be positive")
        if self.score_multiplier <= 0:
            raise ValueError("score_multiplier must be positive")


def _theta_list(thetas) -> list[np.ndarray]:
    if isinstance(thetas, PrecisionSet):
        return list(thetas.thetas)
    if isinstance(thetas, np.ndarray) and thetas.ndim == 2:
        return [thetas]
    return [np.asarray(t, dtype=float) for t in thetas]


def edge_metrics(truth, estimates, config: MetricConfig = MetricConfig()) -> tuple[int, int]:
    """(positives, true positives) over the strict upper triangle, all classes."""
    true_list, est_list = _theta_list(truth), _theta_list(estimates)
    if len(true_list) != len(est_list):
        raise ValueError("truth and estimates must have matching class counts")
    t0 = config.edge_threshold
    positives = true_positives = 0
    for t_true, t_est in zip(true_list, est_list):
        if t_true.shape != t_est.shape:
            raise ValueError("truth and estimate shapes differ")
        iu = np.triu_indices(t_true.shape[0], k=1)
        est_on = np.abs(t_est[iu]) > t0
        positives += int(est_on.sum())
        true_positives += int((est_on & (np.abs(t_true[iu]) > t0)).sum())
    return positives, true_positives


def positive_edge_count(thetas, config: MetricConfig = MetricConfig()) -> int:
    """Thresholded strict-upper-triangle entry count over all classes."""
    count = 0
    for t in _theta_list(thetas):
        iu = np.triu_indices(t.shape[0], k=1)
        count += int((np.abs(t[iu]) > config.edge_threshold).sum())
    return count


def column_scores(a: np.ndarray) -> np.ndarray:
    """L2 norm of each column with its diagonal entry removed."""
    a = np.asarray(a, dtype=float)
    sq = np.sum(a * a, axis=0) - np.diag(a) ** 2
    return np.sqrt(np.maximum(sq, 0.0))


def score_threshold(scores: np.ndarray, multiplier: float = 5.5) -> float:
    """Outlier threshold ``mean + multiplier * std`` of a score vector."""
    scores = np.asarray(scores, dtype=float)
    ddof = 1 if scores.size > 1 else 0
    return float(scores.mean() + multiplier * scores.std(ddof=ddof))


@dataclass(frozen=True)
class NodeScoreResult:
    """Score vectors, thresholds, and the resulting column counts."""

    scores: tuple[np.ndarray, ...]
    thresholds: tuple[float, ...]
    positives: int
    true_positives: int

    def flags(self) -> np.ndarray:
        """Boolean vector: score above threshold in every class."""
        out = np.ones(self.scores[0].size, dtype=bool)
        for sc, th in zip(self.scores, self.thresholds):
            out &= sc > th
        return out


def _count(flags: np.ndarray, truth_idx) -> tuple[int, int]:
    positives = int(flags.sum())
    if truth_idx is None:
        return positives, 0
    idx = np.asarray(list(truth_idx), dtype=int)
    return positives, int(flags[idx].sum()) if idx.size else 0


def _node_result(matrices, truth_idx, config) -> NodeScoreResult:
    scores = tuple(column_scores(m) for m in matrices)
    thresholds = tuple(score_threshold(sc, config.score_multiplier) for sc in scores)
    flags = np.ones(scores[0].size, dtype=bool)
    for sc, th in zip(scores, thresholds):
        flags &= sc > th
    positives, true_positives = _count(flags, truth_idx)
    return NodeScoreResult(scores, thresholds, positives, true_positives)


def perturbed_node_scores(
    method: str,
    *,
    v: np.ndarray | None = None,
    theta1: np.ndarray | None = None,
    theta2: np.ndarray | None = None,
    perturbed_idx=None,
    config: MetricConfig = MetricConfig(),
) -> NodeScoreResult:
    """Perturbed-column detection scores.

    ``method='pnjgl'`` scores columns of the difference decomposition V;
    ``method='fgl'`` or ``'gl'`` scores columns of theta1 - theta2.
    """
    if method == "pnjgl":
        if v is None:
            raise ValueError("the pnjgl scoring path requires the solver's V matrix")
        return _node_result([v], perturbed_idx, config)
    if method in ("fgl", "gl", "fgl_or_gl"):
        if theta1 is None or theta2 is None:
            raise ValueError("difference scoring requires both estimates")
        return _node_result([theta1 - theta2], perturbed_idx, config)
    raise ValueError(f"unknown perturbed-node scoring method {method!r}")


def cohub_node_scores(
    method: str,
    *,
    vs=None,
    thetas=None,
    cohub_idx=None,
    config: MetricConfig = MetricConfig(),
) -> NodeScoreResult:
    """Co-hub detection scores; a column counts only if it passes in all classes.

    ``method='cnjgl'`` scores columns of each class decomposition V_k;
    ``method='ggl'`` or ``'gl'`` scores columns of each estimate.
    """
    if method == "cnjgl":
        if vs is None:
            raise ValueError("the cnjgl scoring path requires the solver's V matrices")
        return _node_result(list(vs), cohub_idx, config)
    if method in ("ggl", "gl", "ggl_or_gl"):
        if thetas is None:
            raise ValueError("estimate scoring requires the fitted precisions")
        return _node_result(_theta_list(thetas), cohub_idx, config)
    raise ValueError(f"unknown co-hub scoring method {method!r}")


def frobenius_error(truth, estimates) -> float:
    """Sum over classes of the strict-upper-triangle Frobenius distances."""
    true_list, est_list = _theta_list(truth), _theta_list(estimates)
    if len(true_list) != len(est_list):
        raise ValueError("truth and estimates must have matching class counts")
    total = 0.0
    for t_true, t_est in zip(true_list, est_list):
        iu = np.triu_indices(t_true.shape[0], k=1)
        diff = t_true[iu] - t_est[iu]
        total += float(np.sqrt(np.sum(diff * diff)))
    return total


@dataclass(frozen=True)
class MetricReport:
    """All applicable recovery metrics for one fitted estimate."""

    method: str
    positive_edges: int
    true_positive_edges: int
    frobenius_error: float
    ppc: int | None = None
    tppc: int | None = None
    pcc: int | None = None
    tpcc: int | None = None
    column_scores: dict[str, NodeScoreResult] = field(default_factory=dict)

    def to_row(self) -> dict:
        return {
            "method": self.method,
            "positive_edges": self.positive_edges,
            "true_positive_edges": self.true_positive_edges,
            "ppc": self.ppc,
            "tppc": self.tppc,
            "pcc": self.pcc,
            "tpcc": self.tpcc,
            "frobenius_error": self.frobenius_error,
        }


def evaluate(
    truth,
    estimate: PrecisionSet,
    method: str,
    *,
    perturbed_idx=None,
    cohub_idx=None,
    config: MetricConfig = MetricConfig(),
) -> MetricReport:
    """Assemble every metric the method supports against a known truth.

    ``truth`` may be a :class:`~njgl.datagen.SyntheticTruth`, in which
    case its planted node indices are used unless overridden.
    """
    if hasattr(truth, "theta1") and hasattr(truth, "theta2"):
        if perturbed_idx is None:
            perturbed_idx = truth.perturbed_idx
        if cohub_idx is None:
            cohub_idx = truth.cohub_idx
        truth = [truth.theta1, truth.theta2]
    true_list = _theta_list(truth)
    positives, true_positives = edge_metrics(true_list, estimate, config)
    error = frobenius_error(true_list, estimate)
    report = {}
    ppc = tppc = pcc = tpcc = None
    if method in ("pnjgl", "fgl", "gl") and estimate.num_classes == 2:
        if method == "pnjgl":
            res = perturbed_node_scores(
                "pnjgl", v=estimate.decomposition[0],
                perturbed_idx=perturbed_idx, config=config,
            )
        else:
            res = perturbed_node_scores(
                method, theta1=estimate.thetas[0], theta2=estimate.thetas[1],
                perturbed_idx=perturbed_idx, config=config,
            )
        ppc, tppc = res.positives, res.true_positives
        report["perturbed"] = res
    if method in ("cnjgl", "ggl", "gl"):
        if method == "cnjgl":
            res = cohub_node_scores(
                "cnjgl", vs=estimate.decomposition, cohub_idx=cohub_idx, config=config
            )
        else:
            res = cohub_node_scores(
                method, thetas=estimate, cohub_idx=cohub_idx, config=config
            )
        pcc, tpcc = res.positives, res.true_positives
        report["cohub"] = res
    return MetricReport(
        method=method,
        positive_edges=positives,
        true_positive_edges=true_positives,
        frobenius_error=error,
        ppc=ppc,
        tppc=tppc,
        pcc=pcc,
        tpcc=tpcc,
        column_scores=report,
    )


@dataclass(frozen=True)
class CvRow:
    """One grid point of a cross-validation sweep."""

    lambda1: float
    lambda2: float
    mean_loglik: float
    std_loglik: float
    mean_positive_edges: float


def _holdout_loglik(thetas, test_covs) -> float:
    total = 0.0
    for theta, s in zip(thetas, test_covs):
        chol = np.linalg.cholesky(theta)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        total += logdet - float(np.sum(s * theta))
    return total


def _fit(method, model, lambda1, lambda2, q, options):
    if method == "pnjgl":
        est, _ = solve_pnjgl(model, PenaltyConfig(lambda1, lambda2, q), options)
    elif method == "cnjgl":
        est, _ = solve_cnjgl(model, PenaltyConfig(lambda1, lambda2, q), options)
    elif method == "fgl":
        est, _ = solve_fgl(model, lambda1, lambda2, options)
    elif method == "ggl":
        est, _ = solve_ggl(model, lambda1, lambda2, options)
    elif method == "gl":
        est, _ = solve_gl_model(model, lambda1, options)
    else:
        raise ValueError(f"unknown method {method!r}")
    return est


def _fold_indices(rng, n: int, folds: int) -> list[np.ndarray]:
    return [np.sort(part) for part in np.array_split(rng.permutation(n), folds)]


def cross_validate(
    raw_data,
    method: str,
    grid,
    folds: int = 5,
    seed: int = 0,
    *,
    q: float = 2.0,
    options: AdmmOptions | None = None,
    config: MetricConfig = MetricConfig(),
) -> list[CvRow]:
    """K-fold cross-validated log-likelihood over a penalty grid.

    Parameters
    ----------
    raw_data : sequence of (n_k, p) observation matrices, one per class.
    grid : iterable of (lambda1, lambda2) pairs.
    folds : fold count; every class must have at least this many rows.
    seed : drives the per-class fold assignment (stratified, deterministic).

    Returns one row per grid point with the fold-mean held-out
    log-likelihood (unweighted across classes) and the fold-mean
    positive-edge count of the fitted estimates.
    """
    data = [np.asarray(x, dtype=float) for x in raw_data]
    if not data:
        raise ValueError("at least one class of observations is required")
    if any(x.ndim != 2 for x in data):
        raise ValueError("raw data must be two-dimensional per class")
    p = data[0].shape[1]
    if any(x.shape[1] != p for x in data):
        raise ValueError("all classes must share the feature dimension")
    if folds < 2:
        raise ValueError("folds must be at least 2")
    if any(x.shape[0] < folds for x in data):
        raise ValueError("every class needs at least `folds` observations")
    rng = np.random.default_rng(seed)
    assignments = [_fold_indices(rng, x.shape[0], folds) for x in data]

    rows = []
    for lambda1, lambda2 in grid:
        logliks, edges = [], []
        for fold in range(folds):
            train_covs, test_covs, train_ns = [], [], []
            for x, parts in zip(data, assignments):
                test_rows = parts[fold]
                train_rows = np.sort(
                    np.concatenate([parts[f] for f in range(folds) if f != fold])
                )
                train = x[train_rows]
                mean = train.mean(axis=0)
                train_c = train - mean
                test_c = x[test_rows] - mean  # centered with training means
                train_covs.append(train_c.T @ train_c / train_rows.size)
                test_covs.append(test_c.T @ test_c / test_rows.size)
                train_ns.append(train_rows.size)
            model = EmpiricalModel(train_covs, train_ns)
            est = _fit(method, model, float(lambda1), float(lambda2), q, options)
            logliks.append(_holdout_loglik(est.thetas, test_covs))
            edges.append(positive_edge_count(est.thetas, config))
        logliks = np.asarray(logliks)
        rows.append(
            CvRow(
                lambda1=float(lambda1),
                lambda2=float(lambda2),
                mean_loglik=float(logliks.mean()),
                std_loglik=float(logliks.std(ddof=1)) if folds > 1 else 0.0,
                mean_positive_edges=float(np.mean(edges)),
            )
        )
    return rows
