"""Report figures rendered to files next to the CSV artifacts.

Uses the non-interactive Agg backend so runs work headless.  Every
function writes one PNG and returns the path.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def roc_figure(curves, path, labels=None, title="ROC"):
    """Overlay one or more ROC curves against the chance diagonal."""
    if not isinstance(curves, (list, tuple)):
        curves = [curves]
    fig, ax = plt.subplots(figsize=(5, 5))
    many = len(curves) > 6
    for idx, curve in enumerate(curves):
        lab = labels[idx] if labels else f"AUC {curve.auc:.3f}"
        ax.plot(curve.points[:, 0], curve.points[:, 1],
                alpha=0.5 if many else 0.9,
                lw=1.0 if many else 1.6,
                label=None if many else lab)
    if many:
        mean_auc = float(np.mean([c.auc for c in curves]))
        ax.plot([], [], lw=1.6, label=f"{len(curves)} trials, mean AUC {mean_auc:.3f}")
    ax.plot([0, 1], [0, 1], "k--", lw=0.8, label="chance")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def grid_figure(rows, best_lam, path):
    """Mean AUC against the penalty weight, log x-axis, best point marked."""
    lams = [r.lam for r in rows]
    aucs = [r.mean_auc for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(lams, aucs, "o-", lw=1.4)
    ax.axvline(best_lam, color="tab:red", ls=":", lw=1.2,
               label=f"selected {best_lam:.4g}")
    ax.axhline(0.5, color="gray", ls="--", lw=0.8, label="chance")
    ax.set_xlabel("penalty weight")
    ax.set_ylabel("mean AUC")
    ax.set_title("penalty sweep")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def convergence_figure(trace, path):
    """Objective value and relative gradient norm per accepted iteration."""
    values = trace.values()
    gnorms = trace.grad_norms()
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].plot(values, lw=1.2)
    axes[0].set_xlabel("iteration")
    axes[0].set_ylabel("objective")
    axes[0].set_title("descent")
    rel = np.asarray(gnorms) / max(trace.initial_grad_norm, 1e-300)
    axes[1].semilogy(rel, lw=1.2)
    axes[1].set_xlabel("iteration")
    axes[1].set_ylabel("relative gradient norm")
    axes[1].set_title(f"terminated: {trace.termination}")
    fig.tight_layout()
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
