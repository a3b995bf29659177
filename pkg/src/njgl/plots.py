"""Figure rendering for the report commands.

The metrics path draws the node-score profiles that drive the column
counts; the cross-validation path draws held-out log-likelihood against
model size.  Figures are written next to the delimited output with a
fixed style so identical inputs reproduce identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["node_score_figure", "cv_curve_figure"]

_DPI = 150


def node_score_figure(results: dict, path, *, perturbed_idx=(), cohub_idx=()) -> None:
    """Column-score profiles with their thresholds.

    ``results`` maps a panel label to a NodeScoreResult; one subplot is
    drawn per score vector, with planted special nodes highlighted.
    """
    panels = [
        (f"{label} (class {k + 1})" if len(res.scores) > 1 else label, sc, res.thresholds[k])
        for label, res in results.items()
        for k, sc in enumerate(res.scores)
    ]
    if not panels:
        return
    fig, axes = plt.subplots(
        len(panels), 1, figsize=(7.0, 2.2 * len(panels)), squeeze=False, sharex=True
    )
    for ax, (label, scores, threshold) in zip(axes[:, 0], panels):
        idx = range(len(scores))
        ax.vlines(idx, 0.0, scores, color="0.55", linewidth=1.0)
        ax.plot(idx, scores, "o", color="0.35", markersize=3)
        for i in perturbed_idx:
            ax.plot(i, scores[i], "s", color="tab:red", markersize=5)
        for i in cohub_idx:
            ax.plot(i, scores[i], "o", color="tab:blue", markersize=5)
        ax.axhline(threshold, color="tab:orange", linestyle="--", linewidth=1.0)
        ax.set_ylabel("column score")
        ax.set_title(label, fontsize=9)
    axes[-1, 0].set_xlabel("column index")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def cv_curve_figure(rows, path) -> None:
    """Held-out log-likelihood against positive edges, one line per lambda2."""
    groups: dict[float, list] = {}
    for row in rows:
        groups.setdefault(row.lambda2, []).append(row)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for lam2 in sorted(groups):
        pts = sorted(groups[lam2], key=lambda r: r.mean_positive_edges)
        ax.plot(
            [r.mean_positive_edges for r in pts],
            [r.mean_loglik for r in pts],
            marker="o",
            markersize=3,
            label=f"lambda2={lam2:g}",
        )
    ax.set_xlabel("positive edges")
    ax.set_ylabel("held-out log-likelihood")
    if len(groups) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
