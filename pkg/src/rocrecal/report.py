"""Write an :class:`ExperimentReport` to disk.

Given ``--out results/report.csv`` the following files are produced:

``report.csv``
    one row per repetition: ``rep,seed,auc_raw,auc_calibrated,auc_baseline``
``report.summary.csv``
    ``metric,mean,se`` per AUC column and for the calibrated-minus-raw gap,
    plus ``win_rate`` and ``reps`` rows
``report.roc_{raw,calibrated,baseline}.csv``
    test ROC points ``threshold,fpr,tpr`` of the first repetition
``report.strata.csv``
    pca-strata mode only: per repetition and stratum, train/test counts,
    weighted training positive rate and test share
``report.roc.png``, ``report.auc.png``
    figures, unless disabled
"""

from __future__ import annotations

from pathlib import Path

from rocrecal.experiment import ExperimentReport
from rocrecal.io import write_roc, write_rows


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}.{suffix}")


def write_report(report: ExperimentReport, out, figures: bool = True) -> list[Path]:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = [out]
    write_rows(
        out,
        ["rep", "seed", "auc_raw", "auc_calibrated", "auc_baseline"],
        [(r.rep, r.seed, r.auc_raw, r.auc_calibrated, r.auc_baseline) for r in report.rows],
    )

    summary = _sibling(out, "summary.csv")
    rows = [(s.metric, s.mean, s.se) for s in report.summary()]
    rows.append(("win_rate", report.win_rate, ""))
    rows.append(("reps", report.reps, ""))
    write_rows(summary, ["metric", "mean", "se"], rows)
    written.append(summary)

    first = report.rows[0]
    for name, curve in first.curves.items():
        path = _sibling(out, f"roc_{name}.csv")
        write_roc(path, curve)
        written.append(path)

    if any(r.strata_rows for r in report.rows):
        path = _sibling(out, "strata.csv")
        write_rows(
            path,
            ["rep", "stratum", "n_train", "n_test", "train_pos_rate", "test_share"],
            [(r.rep, *row) for r in report.rows for row in r.strata_rows],
        )
        written.append(path)

    if figures:
        from rocrecal.plotting import auc_figure, roc_figure

        if first.curves:
            path = _sibling(out, "roc.png")
            roc_figure(first.curves, path)
            written.append(path)
        path = _sibling(out, "auc.png")
        auc_figure(report, path)
        written.append(path)
    return written
