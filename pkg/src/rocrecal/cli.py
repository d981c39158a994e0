"""Command-line interface.

Exit codes: 0 success, 2 input or schema error, 3 numerical degeneracy.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click
import numpy as np

from rocrecal.calibrator import CalibratorConfig, apply_calibrator, fit_calibrator
from rocrecal.errors import RocrecalError
from rocrecal.smoothing import DEFAULT_FLOOR, DEFAULT_MIN_NEIGHBORS, DEFAULT_SPAN


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except RocrecalError as err:
            click.echo(f"error: {err}", err=True)
            ctx.exit(err.exit_code)
        except OSError as err:
            click.echo(f"error: {err}", err=True)
            ctx.exit(2)


@click.group(cls=_Group)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Calibrate the cross-strata ranking of classifier scores."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr)


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def roc(in_path, out_path):
    """Empirical ROC curve of a labeled calibration-schema file."""
    from rocrecal.io import read_dataset, write_roc
    from rocrecal.roc import auc, compute_roc

    table = read_dataset(in_path, "calibration")
    curve = compute_roc(table.records)
    write_roc(out_path, curve)
    click.echo(f"AUC {auc(curve):.6f}")


@main.group(cls=_Group)
def calib():
    """Fit or apply a strata calibrator."""


@calib.command("fit")
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False))
@click.option("--span", default=DEFAULT_SPAN, show_default=True, type=float)
@click.option("--min-neighbors", default=DEFAULT_MIN_NEIGHBORS, show_default=True, type=int)
@click.option("--monotone", default=True, show_default=True, type=click.BOOL)
@click.option("--floor", default=DEFAULT_FLOOR, show_default=True, type=float)
@click.option("--laplace", default=False, show_default=True, type=click.BOOL)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def calib_fit(in_path, span, min_neighbors, monotone, floor, laplace, out_path):
    """Fit per-stratum ROC slopes and odds and save them."""
    from rocrecal.io import read_dataset, save_calibrator

    table = read_dataset(in_path, "calibration")
    cfg = CalibratorConfig(span, min_neighbors, monotone, floor, laplace)
    cal = fit_calibrator(table.records, cfg)
    save_calibrator(cal, out_path)
    for g in cal.stratum_ids:
        comp = cal.strata[g]
        click.echo(f"stratum {g}: n_pos={comp.n_pos} n_neg={comp.n_neg} odds={comp.odds:.6g}")


@calib.command("apply")
@click.option("--cal", "cal_path", required=True, type=click.Path(dir_okay=False))
@click.option("--in", "in_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def calib_apply(cal_path, in_path, out_path):
    """Rank scored records with a saved calibrator."""
    from rocrecal.io import load_calibrator, read_scored, write_ranked

    cal = load_calibrator(cal_path)
    table = read_scored(in_path)
    write_ranked(out_path, table.ids, apply_calibrator(cal, table.records))


@main.command()
@click.option("--features", "feature_paths", required=True, multiple=True,
              type=click.Path(dir_okay=False), help="Repeat to pool several files.")
@click.option("--mode", type=click.Choice(["sign", "quantile"]), default="sign", show_default=True)
@click.option("--j", "n_strata", type=int, default=2, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def strata(feature_paths, mode, n_strata, out_path):
    """Strata from the first principal component of pooled features."""
    from rocrecal.errors import DuplicateId, SchemaMismatch
    from rocrecal.io import read_dataset, write_rows
    from rocrecal.strata import fit_pca1, make_strata, project

    tables = [read_dataset(p, "features") for p in feature_paths]
    if len({t.features.shape[1] for t in tables}) != 1:
        raise SchemaMismatch("feature files disagree on the number of features")
    ids = [i for t in tables for i in t.ids]
    if len(set(ids)) != len(ids):
        raise DuplicateId("ids repeat across feature files")
    x = np.vstack([t.features for t in tables])
    axis = fit_pca1(x)
    pc1 = project(axis, x)
    assignment = make_strata(pc1, n_strata, mode)
    write_rows(out_path, ["id", "pc1", "stratum"],
               [(i, float(s), int(g)) for i, s, g in zip(ids, pc1, assignment.strata)])
    click.echo(f"pc1 eigenvalue {axis.eigenvalue:.6g}; direction {np.round(axis.direction, 4).tolist()}")

    labeled = [(t.labels is not None) for t in tables]
    if any(labeled):
        y = np.concatenate([t.labels if t.labels is not None else np.full(len(t.ids), -1) for t in tables])
        rows = []
        for g in range(1, assignment.n_strata + 1):
            m = (assignment.strata == g) & (y >= 0)
            rate = float(y[m].mean()) if m.any() else float("nan")
            rows.append((g, int(np.sum(assignment.strata == g)), int(m.sum()), rate))
            click.echo(f"stratum {g}: n={rows[-1][1]} labeled={rows[-1][2]} positive_rate={rate:.4f}")
        out = Path(out_path)
        write_rows(out.with_name(f"{out.stem}.summary.csv"),
                   ["stratum", "n", "n_labeled", "positive_rate"], rows)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out-train", required=True, type=click.Path(dir_okay=False))
@click.option("--out-test", required=True, type=click.Path(dir_okay=False))
def synth(config_path, out_train, out_test):
    """Draw a biased training set and an unbiased test set."""
    from rocrecal.config import load_config, spec_from_values
    from rocrecal.io import write_features
    from rocrecal.synth import generate

    train, test = generate(spec_from_values(load_config(config_path)))
    write_features(out_train, [f"tr{i}" for i in range(len(train))], train.features, train.labels)
    write_features(out_test, [f"te{i}" for i in range(len(test))], test.features, test.labels)
    click.echo(f"train {len(train)} rows, test {len(test)} rows")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--workers", type=int, default=None, help="Override the config's worker count.")
@click.option("--figures/--no-figures", default=True, show_default=True)
def experiment(config_path, out_path, workers, figures):
    """Repeat the synthetic raw-vs-calibrated comparison and write a report."""
    from rocrecal.config import experiment_from_values, load_config
    from rocrecal.experiment import run_experiment
    from rocrecal.report import write_report

    cfg = experiment_from_values(load_config(config_path))
    report = run_experiment(cfg, workers=workers)
    write_report(report, out_path, figures=figures)
    for s in report.summary():
        click.echo(f"{s.metric:<22} {s.mean:.4f} (se {s.se:.4f})")
    click.echo(f"{'win_rate':<22} {report.win_rate:.2f}")


if __name__ == "__main__":
    main()
