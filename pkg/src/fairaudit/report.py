"""Serialization of reports, sweep results and ROC slice series.

JSON is the canonical format: keys are sorted, not-applicable values are
null, and identical inputs always produce identical bytes.  CSV is a
flattened projection in which not-applicable becomes an empty cell.
"""

from __future__ import annotations

import csv
import io
import json

from .metrics import FairnessReport, GroupedConfusion
from .roc import AbrocaSlice

METRIC_FIELDS = (
    "accuracy",
    "balanced_accuracy",
    "statistical_parity",
    "equal_opportunity",
    "equalized_odds",
    "predictive_parity",
    "predictive_equality",
    "treatment_equality",
    "abroca",
)

CONFUSION_FIELDS = ("tp_prot", "fp_prot", "fn_prot", "tn_prot",
                    "tp_non", "fp_non", "fn_non", "tn_non")


def confusion_to_dict(c: GroupedConfusion) -> dict:
    return {name: getattr(c, name) for name in CONFUSION_FIELDS}


def report_to_dict(report: FairnessReport) -> dict:
    data = {name: getattr(report, name) for name in METRIC_FIELDS}
    data["confusion"] = confusion_to_dict(report.confusion)
    data["counts"] = {
        "protected": report.confusion.n_protected,
        "non_protected": report.confusion.n_non_protected,
        "total": report.confusion.total,
    }
    data["fairness_gate"] = {"epsilon": report.epsilon, "passed": report.gate_passed}
    return data


def to_canonical_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"


def report_to_json(report: FairnessReport) -> str:
    return to_canonical_json(report_to_dict(report))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def report_to_csv(report: FairnessReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = list(METRIC_FIELDS) + list(CONFUSION_FIELDS) + [
        "n_protected", "n_non_protected", "epsilon", "gate_passed"]
    row = [_cell(getattr(report, name)) for name in METRIC_FIELDS]
    row += [str(getattr(report.confusion, name)) for name in CONFUSION_FIELDS]
    row += [str(report.confusion.n_protected), str(report.confusion.n_non_protected),
            _cell(report.epsilon), _cell(report.gate_passed)]
    writer.writerow(header)
    writer.writerow(row)
    return buffer.getvalue()


def slice_to_dict(sl: AbrocaSlice) -> dict:
    return {
        "abroca": sl.area,
        "series": {
            "fpr": [float(v) for v in sl.grid],
            "tpr_protected": [float(v) for v in sl.tpr_prot],
            "tpr_non_protected": [float(v) for v in sl.tpr_non],
        },
    }


def slice_to_json(sl: AbrocaSlice) -> str:
    return to_canonical_json(slice_to_dict(sl))


def slice_to_csv(sl: AbrocaSlice) -> str:
    buffer = io.StringIO()
    buffer.write(f"# abroca={sl.area!r}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["fpr", "tpr_protected", "tpr_non_protected"])
    for x, yp, yn in zip(sl.grid, sl.tpr_prot, sl.tpr_non):
        writer.writerow([repr(float(x)), repr(float(yp)), repr(float(yn))])
    return buffer.getvalue()


SWEEP_FIELDS = ("threshold", "n_positive", "n_negative") + METRIC_FIELDS


def sweep_to_dict(result) -> dict:
    rows = []
    for row in result.rows:
        entry = {"threshold": row.threshold,
                 "n_positive": row.n_positive,
                 "n_negative": row.n_negative}
        for name in METRIC_FIELDS:
            entry[name] = None if row.report is None else getattr(row.report, name)
        rows.append(entry)
    return {"rows": rows}


def sweep_to_json(result) -> str:
    return to_canonical_json(sweep_to_dict(result))


def sweep_to_csv(result) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_FIELDS)
    for entry in sweep_to_dict(result)["rows"]:
        writer.writerow([_cell(entry[name]) for name in SWEEP_FIELDS])
    return buffer.getvalue()
