"""CSV datasets, ranked output, ROC point files and the calibrator text format.

Schemas (header must match exactly):

* ``calibration``: ``id,score,label,stratum`` with optional trailing ``weight``
* ``test``: ``id,score,stratum``
* ``features``: ``id,f1,...,fd`` with optional trailing ``label``

Row numbers in :class:`ParseError` count data rows from 1 (the header is
not counted). Floats are written with ``repr`` so values round-trip exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from rocrecal.calibrator import (
    CalibratedScore,
    CalibratorConfig,
    StrataCalibrator,
    StratumCalibration,
    ranking_order,
)
from rocrecal.errors import DuplicateId, ParseError, SchemaMismatch
from rocrecal.roc import RocCurve, ScoredRecord
from rocrecal.smoothing import SlopeFunction

CAL_HEADER = "rocrecal-cal v1"

CALIBRATION_COLUMNS = ["id", "score", "label", "stratum"]
TEST_COLUMNS = ["id", "score", "stratum"]
SCHEMAS = ("calibration", "test", "features")


@dataclass(frozen=True)
class RecordTable:
    ids: list[str]
    records: list[ScoredRecord]

    @property
    def scores(self) -> NDArray[np.float64]:
        return np.array([r.score for r in self.records], dtype=np.float64)

    @property
    def labels(self) -> NDArray:
        return np.array([r.label for r in self.records])

    @property
    def strata(self) -> NDArray[np.int64]:
        return np.array([r.stratum for r in self.records], dtype=np.int64)

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.array([r.weight for r in self.records], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class FeatureTable:
    ids: list[str]
    features: NDArray[np.float64]
    labels: Optional[NDArray[np.int64]] = None


def _float(text: str, row: int, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(row, f"{name} {text!r} is not a number") from None
    if not math.isfinite(value):
        raise ParseError(row, f"{name} must be finite, got {text!r}")
    return value


def _label(text: str, row: int) -> int:
    if text not in ("0", "1"):
        raise ParseError(row, f"label must be 0 or 1, got {text!r}")
    return int(text)


def _stratum(text: str, row: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ParseError(row, f"stratum {text!r} is not an integer") from None
    if value < 0:
        raise ParseError(row, f"stratum must be nonnegative, got {value}")
    return value


def _rows(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        yield [h.strip() for h in header]
        for i, row in enumerate(reader, start=1):
            if not row:
                continue
            yield i, row


def _check_unique(ids: list[str], row: int, seen: set) -> None:
    key = ids[-1]
    if key in seen:
        raise DuplicateId(f"row {row}: duplicate id {key!r}")
    seen.add(key)


def read_dataset(path, schema: str):
    """Read a CSV file under ``schema``; see the module docstring."""
    path = Path(path)
    if schema not in SCHEMAS:
        raise SchemaMismatch(f"unknown schema {schema!r}")
    rows = _rows(path)
    header = next(rows)
    if schema == "features":
        return _read_features(path, header, rows)

    if schema == "calibration":
        allowed = (CALIBRATION_COLUMNS, CALIBRATION_COLUMNS + ["weight"])
    else:
        allowed = (TEST_COLUMNS,)
    if header not in allowed:
        raise SchemaMismatch(
            f"{path}: header {','.join(header)!r} does not match {schema} schema "
            + " or ".join(repr(",".join(a)) for a in allowed)
        )
    ids: list[str] = []
    records: list[ScoredRecord] = []
    seen: set = set()
    for i, row in rows:
        if len(row) != len(header):
            raise ParseError(i, f"expected {len(header)} fields, got {len(row)}")
        field = dict(zip(header, row))
        ids.append(field["id"])
        _check_unique(ids, i, seen)
        score = _float(field["score"], i, "score")
        stratum = _stratum(field["stratum"], i)
        label = _label(field["label"], i) if "label" in field else None
        weight = _float(field["weight"], i, "weight") if "weight" in field else 1.0
        if weight <= 0:
            raise ParseError(i, f"weight must be positive, got {weight}")
        records.append(ScoredRecord(score, label, stratum, weight))
    return RecordTable(ids, records)


def _read_features(path: Path, header: list[str], rows) -> FeatureTable:
    has_label = header[-1:] == ["label"]
    names = header[1:-1] if has_label else header[1:]
    expected = [f"f{k}" for k in range(1, len(names) + 1)]
    if header[:1] != ["id"] or not names or names != expected:
        raise SchemaMismatch(f"{path}: features header must be id,f1..fd[,label]")
    ids: list[str] = []
    feats: list[list[float]] = []
    labels: list[int] = []
    seen: set = set()
    for i, row in rows:
        if len(row) != len(header):
            raise ParseError(i, f"expected {len(header)} fields, got {len(row)}")
        ids.append(row[0])
        _check_unique(ids, i, seen)
        feats.append([_float(v, i, name) for v, name in zip(row[1:], names)])
        if has_label:
            labels.append(_label(row[-1], i))
    x = np.array(feats, dtype=np.float64).reshape(len(ids), len(names))
    return FeatureTable(ids, x, np.array(labels, dtype=np.int64) if has_label else None)


def read_scored(path) -> RecordTable:
    """Read a test-schema file, or a calibration-schema file with labels ignored."""
    rows = _rows(Path(path))
    header = next(rows)
    rows.close()
    schema = "test" if header == TEST_COLUMNS else "calibration"
    return read_dataset(path, schema)


def write_records(path, ids: Sequence[str], records: Sequence[ScoredRecord], schema: str = "calibration"):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        if schema == "test":
            out.writerow(TEST_COLUMNS)
            for i, r in zip(ids, records):
                out.writerow([i, repr(float(r.score)), r.stratum])
            return
        with_weight = any(r.weight != 1.0 for r in records)
        out.writerow(CALIBRATION_COLUMNS + (["weight"] if with_weight else []))
        for i, r in zip(ids, records):
            row = [i, repr(float(r.score)), r.label, r.stratum]
            out.writerow(row + ([repr(float(r.weight))] if with_weight else []))


def write_features(path, ids: Sequence[str], features: NDArray, labels: Optional[NDArray] = None):
    d = features.shape[1]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id"] + [f"f{k}" for k in range(1, d + 1)] + (["label"] if labels is not None else []))
        for k, (i, x) in enumerate(zip(ids, features)):
            row = [i] + [repr(float(v)) for v in x]
            if labels is not None:
                row.append(int(labels[k]))
            out.writerow(row)


def write_ranked(path, ids: Sequence[str], calibrated: Sequence[CalibratedScore]) -> None:
    """Ranked CSV ``id,stratum,raw_score,fpr,rank_value,rank_position``."""
    calibrated = sorted(calibrated, key=lambda c: c.index)
    order = ranking_order([c.rank_value for c in calibrated], [c.stratum for c in calibrated])
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", "stratum", "raw_score", "fpr", "rank_value", "rank_position"])
        for pos, k in enumerate(order, start=1):
            c = calibrated[k]
            out.writerow(
                [ids[c.index], c.stratum, repr(float(c.raw_score)), repr(float(c.fpr)), repr(float(c.rank_value)), pos]
            )


def write_roc(path, curve: RocCurve) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["threshold", "fpr", "tpr"])
        for t, f, p in zip(curve.thresholds.tolist(), curve.fpr.tolist(), curve.tpr.tolist()):
            out.writerow([repr(t), repr(f), repr(p)])


# -- calibrator document ----------------------------------------------------------


def _bool(text: str) -> bool:
    if text not in ("true", "false"):
        raise SchemaMismatch(f"expected true/false, got {text!r}")
    return text == "true"


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def dumps_calibrator(cal: StrataCalibrator) -> str:
    c = cal.config
    lines = [
        CAL_HEADER,
        f"span {c.span!r}",
        f"min_neighbors {c.min_neighbors}",
        f"monotone {_fmt_bool(c.monotone)}",
        f"floor {c.floor!r}",
        f"laplace {_fmt_bool(c.laplace)}",
        f"strata {len(cal.strata)}",
    ]
    for g in cal.stratum_ids:
        comp = cal.strata[g]
        lines += [
            f"stratum {g}",
            f"odds {float(comp.odds)!r}",
            f"n_pos {comp.n_pos}",
            f"n_neg {comp.n_neg}",
            f"pos_weight {comp.roc.pos_weight!r}",
            f"neg_weight {comp.roc.neg_weight!r}",
            f"roc {len(comp.roc)}",
        ]
        for t, f, p in zip(comp.roc.thresholds.tolist(), comp.roc.fpr.tolist(), comp.roc.tpr.tolist()):
            lines.append(f"{t!r} {f!r} {p!r}")
        sf = comp.slope
        lines.append(f"slope {len(sf.knot_fpr)} {sf.floor!r} {_fmt_bool(sf.monotone)}")
        for f, s in zip(sf.knot_fpr.tolist(), sf.knot_slope.tolist()):
            lines.append(f"{f!r} {s!r}")
        lines.append("end")
    return "\n".join(lines) + "\n"


class _Lines:
    def __init__(self, text: str):
        self._lines = text.splitlines()
        self._pos = 0

    def next(self) -> list[str]:
        while self._pos < len(self._lines):
            line = self._lines[self._pos].strip()
            self._pos += 1
            if line:
                return line.split()
        raise SchemaMismatch("calibrator document ends early")

    def key(self, name: str, n: int = 1) -> list[str]:
        parts = self.next()
        if parts[0] != name or len(parts) != n + 1:
            raise SchemaMismatch(f"line {self._pos}: expected '{name}' with {n} value(s)")
        return parts[1:]


def loads_calibrator(text: str) -> StrataCalibrator:
    lines = text.splitlines()
    first = lines[0].strip() if lines else ""
    if first != CAL_HEADER:
        raise SchemaMismatch(f"unsupported calibrator document header {first!r}; expected {CAL_HEADER!r}")
    src = _Lines("\n".join(lines[1:]))
    try:
        cfg = CalibratorConfig(
            span=float(src.key("span")[0]),
            min_neighbors=int(src.key("min_neighbors")[0]),
            monotone=_bool(src.key("monotone")[0]),
            floor=float(src.key("floor")[0]),
            laplace=_bool(src.key("laplace")[0]),
        )
        strata = {}
        for _ in range(int(src.key("strata")[0])):
            g = int(src.key("stratum")[0])
            odds = float(src.key("odds")[0])
            n_pos = int(src.key("n_pos")[0])
            n_neg = int(src.key("n_neg")[0])
            pos_w = float(src.key("pos_weight")[0])
            neg_w = float(src.key("neg_weight")[0])
            m = int(src.key("roc")[0])
            roc_rows = np.array([[float(v) for v in src.next()] for _ in range(m)])
            if roc_rows.shape != (m, 3):
                raise SchemaMismatch(f"stratum {g}: roc rows must have 3 columns")
            k, floor, mono = src.key("slope", 3)
            k = int(k)
            slope_rows = np.array([[float(v) for v in src.next()] for _ in range(k)])
            if slope_rows.shape != (k, 2):
                raise SchemaMismatch(f"stratum {g}: slope rows must have 2 columns")
            src.key("end", 0)
            roc = RocCurve(roc_rows[:, 0].copy(), roc_rows[:, 1].copy(), roc_rows[:, 2].copy(), pos_w, neg_w)
            slope = SlopeFunction(slope_rows[:, 0].copy(), slope_rows[:, 1].copy(), float(floor), _bool(mono))
            strata[g] = StratumCalibration(roc, slope, odds, n_pos, n_neg)
    except (ValueError, IndexError) as err:
        if isinstance(err, SchemaMismatch):
            raise
        raise SchemaMismatch(f"malformed calibrator document: {err}") from err
    return StrataCalibrator(strata, cfg)


def save_calibrator(cal: StrataCalibrator, path) -> None:
    Path(path).write_text(dumps_calibrator(cal))


def load_calibrator(path) -> StrataCalibrator:
    return loads_calibrator(Path(path).read_text())


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
