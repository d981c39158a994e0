"""Matplotlib figures for experiment reports (written to files, never shown)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}

COLORS = {"raw": "#7f7f7f", "calibrated": "#1f77b4", "baseline": "#ff7f0e"}

# keep PNG bytes stable across runs
_META = {"Software": None}


def roc_figure(curves, path, title="Test ROC, first repetition"):
    """One panel with an ROC curve per ranking; ``curves`` maps name -> RocCurve."""
    from rocrecal.roc import auc

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 4.0))
        ax.plot([0, 1], [0, 1], ls=":", lw=0.8, color="0.6")
        for name, curve in curves.items():
            ax.plot(
                curve.fpr,
                curve.tpr,
                lw=1.3,
                color=COLORS.get(name),
                label=f"{name} (AUC {auc(curve):.3f})",
            )
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.01)
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.set_title(title)
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        fig.savefig(path, metadata=_META)
        plt.close(fig)


def auc_figure(report, path):
    """Per-repetition AUC of each ranking, plus the calibrated-minus-raw gap."""
    reps = np.array([r.rep for r in report.rows])
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, figsize=(5.5, 4.5), sharex=True)
        for name in ("raw", "calibrated", "baseline"):
            top.plot(reps, report.column(f"auc_{name}"), marker="o", ms=2.5, lw=0.8,
                     color=COLORS[name], label=name)
        top.set_ylabel("Test AUC")
        top.legend(frameon=False, ncol=3)
        delta = report.delta
        bottom.bar(reps, delta, color=np.where(delta > 0, COLORS["calibrated"], "#d62728"), width=0.8)
        bottom.axhline(0.0, color="0.3", lw=0.8)
        bottom.set_ylabel("calibrated - raw")
        bottom.set_xlabel("Repetition")
        fig.tight_layout()
        fig.savefig(path, metadata=_META)
        plt.close(fig)
