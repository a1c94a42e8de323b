"""Dataset and result persistence.

CSV ingestion follows RFC 4180 with a mandatory header row, UTF-8 text and
'.' decimal separators; NaN/Inf cells are rejected with the offending row
and column.  Result documents are JSON with a mandatory ``schema_version``
field (currently 1), snake_case field names and floats written in shortest
round-trip form, so every value survives save/load bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .em import FitResult
from .exceptions import MissingColumn, ParseError, SchemaVersionMismatch
from .model import Dataset, InverseParams, inverse_to_forward
from .selection import SelectionResult
from .simulate import DecayPoint, DecayResult, TrialReport

__all__ = [
    "SCHEMA_VERSION",
    "DatasetSpec",
    "load_csv",
    "save_dataset_csv",
    "save_report",
    "load_report",
    "write_histogram_csv",
    "write_boxplot_csv",
    "write_decay_csv",
]

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# CSV datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetSpec:
    """Which CSV columns feed the covariate and response matrices.

    ``swap_roles=True`` exchanges the two column sets, so a response
    variable can be used as the covariate without editing the file.
    """

    path: str | Path
    x_columns: tuple[str, ...]
    y_columns: tuple[str, ...]
    swap_roles: bool = False

    def __post_init__(self):
        object.__setattr__(self, "x_columns", tuple(self.x_columns))
        object.__setattr__(self, "y_columns", tuple(self.y_columns))
        if set(self.x_columns) & set(self.y_columns):
            raise ValueError("x_columns and y_columns must be disjoint")
        if not self.x_columns or not self.y_columns:
            raise ValueError("x_columns and y_columns must both be non-empty")


def _parse_cell(raw: str, row: int, column: str) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ParseError(
            f"row {row}, column {column!r}: cannot parse {raw!r} as a number",
            row=row, column=column,
        ) from exc
    if not math.isfinite(value):
        raise ParseError(
            f"row {row}, column {column!r}: non-finite value {raw!r}",
            row=row, column=column,
        )
    return value


def load_csv(spec: DatasetSpec) -> Dataset:
    """Load a header-CSV file into a Dataset; row order is preserved."""
    path = Path(spec.path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("file has no header row", row=1)
        missing = [c for c in (*spec.x_columns, *spec.y_columns) if c not in header]
        if missing:
            raise MissingColumn(f"columns {missing} not found in header {header}")
        index = {name: header.index(name) for name in header}
        x_rows, y_rows = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            x_rows.append([_parse_cell(row[index[c]], row_no, c) for c in spec.x_columns])
            y_rows.append([_parse_cell(row[index[c]], row_no, c) for c in spec.y_columns])
    x, y = np.asarray(x_rows), np.asarray(y_rows)
    if spec.swap_roles:
        x, y = y, x
    return Dataset(x=x, y=y)


def save_dataset_csv(data: Dataset, path: str | Path,
                     x_names: tuple[str, ...] | None = None,
                     y_names: tuple[str, ...] | None = None) -> None:
    """Write a dataset with header ``x1..xD, y1..yL`` (or the given names)."""
    x_names = x_names or tuple(f"x{j + 1}" for j in range(data.D))
    y_names = y_names or tuple(f"y{j + 1}" for j in range(data.L))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*x_names, *y_names])
        for i in range(data.n):
            writer.writerow([repr(float(v)) for v in (*data.x[i], *data.y[i])])


# ---------------------------------------------------------------------------
# JSON result documents
# ---------------------------------------------------------------------------


def _arr(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def _params_doc(p) -> dict:
    return {
        "pi": _arr(p.pi), "c": _arr(p.c), "Gamma": _arr(p.Gamma),
        "A": _arr(p.A), "b": _arr(p.b), "Sigma": _arr(p.Sigma),
        "cov_structure": p.cov_structure,
    }


def _params_from_doc(doc: dict, cls):
    return cls(pi=doc["pi"], c=doc["c"], Gamma=doc["Gamma"], A=doc["A"],
               b=doc["b"], Sigma=doc["Sigma"], cov_structure=doc["cov_structure"])


def _fit_result_doc(fit: FitResult, include_forward: bool) -> dict:
    doc = {
        "kind": "fit_result",
        "params": _params_doc(fit.params),
        "loglik": fit.loglik,
        "loglik_trace": list(fit.loglik_trace),
        "n_iter": fit.n_iter,
        "restart_index": fit.restart_index,
        "converged": fit.converged,
    }
    if include_forward:
        doc["forward_params"] = _params_doc(inverse_to_forward(fit.params))
    return doc


def _fit_result_from_doc(doc: dict) -> FitResult:
    return FitResult(
        params=_params_from_doc(doc["params"], InverseParams),
        loglik=doc["loglik"],
        loglik_trace=tuple(doc["loglik_trace"]),
        n_iter=doc["n_iter"],
        restart_index=doc["restart_index"],
        converged=doc["converged"],
    )


def _selection_doc(sel: SelectionResult) -> dict:
    return {
        "kind": "selection_result",
        "chosen_K": sel.chosen_K,
        "kappa_hat": sel.kappa_hat,
        "method": sel.method,
        "path": [[k, int(K)] for k, K in sel.path] if sel.path is not None else None,
        "fit_window": list(sel.fit_window) if sel.fit_window is not None else None,
    }


def _selection_from_doc(doc: dict) -> SelectionResult:
    path = doc.get("path")
    window = doc.get("fit_window")
    return SelectionResult(
        chosen_K=doc["chosen_K"],
        kappa_hat=doc["kappa_hat"],
        method=doc["method"],
        path=tuple((float(k), int(K)) for k, K in path) if path is not None else None,
        fit_window=tuple(window) if window is not None else None,
    )


def _none_to_zero(k):
    return 0 if k is None else int(k)


def _trial_report_doc(rep: TrialReport) -> dict:
    # Arrays are keyed by K (ascending) then ordered by trial index.  Wall
    # clock runtimes are deliberately not persisted: documents produced with
    # the same seed must be byte-identical across runs and thread counts.
    return {
        "kind": "trial_report",
        "scenario": rep.scenario,
        "n": rep.n,
        "K_max": rep.K_max,
        "n_trials": rep.n_trials,
        "methods": list(rep.methods),
        "seed": rep.seed,
        "chosen_K": {m: [_none_to_zero(k) for k in v] for m, v in rep.chosen_K.items()},
        "kappa_hat": {m: list(v) for m, v in rep.kappa_hat.items()},
        "tkl": {str(K): list(v) for K, v in sorted(rep.tkl.items())},
        "tkl_selected": {m: list(v) for m, v in rep.tkl_selected.items()},
        "errors": [list(e) for e in rep.errors],
    }


def _trial_report_from_doc(doc: dict) -> TrialReport:
    return TrialReport(
        scenario=doc["scenario"],
        n=doc["n"],
        K_max=doc["K_max"],
        n_trials=doc["n_trials"],
        methods=tuple(doc["methods"]),
        seed=doc["seed"],
        chosen_K={m: tuple(None if k == 0 else k for k in v)
                  for m, v in doc["chosen_K"].items()},
        kappa_hat={m: tuple(v) for m, v in doc["kappa_hat"].items()},
        tkl={int(K): tuple(v) for K, v in doc["tkl"].items()},
        tkl_selected={m: tuple(v) for m, v in doc["tkl_selected"].items()},
        runtimes=(),
        errors=tuple(tuple(e) for e in doc["errors"]),
    )


def _decay_doc(res: DecayResult) -> dict:
    return {
        "kind": "decay_result",
        "scenario": res.scenario,
        "method": res.method,
        "n_trials": res.n_trials,
        "seed": res.seed,
        "slope": res.slope,
        "intercept": res.intercept,
        "slope_std_err": res.slope_std_err,
        "points": [{"n": p.n, "mean_tkl": p.mean_tkl, "std_err": p.std_err}
                   for p in res.points],
    }


def _decay_from_doc(doc: dict) -> DecayResult:
    return DecayResult(
        scenario=doc["scenario"], method=doc["method"], n_trials=doc["n_trials"],
        seed=doc["seed"], slope=doc["slope"], intercept=doc["intercept"],
        slope_std_err=doc["slope_std_err"],
        points=tuple(DecayPoint(p["n"], p["mean_tkl"], p["std_err"])
                     for p in doc["points"]),
    )


_ENCODERS = {
    FitResult: _fit_result_doc,
    SelectionResult: _selection_doc,
    TrialReport: _trial_report_doc,
    DecayResult: _decay_doc,
}
_DECODERS = {
    "fit_result": _fit_result_from_doc,
    "selection_result": _selection_from_doc,
    "trial_report": _trial_report_from_doc,
    "decay_result": _decay_from_doc,
}


def to_document(obj, include_forward: bool = False) -> dict:
    """Encode a result object as a plain JSON-ready dict."""
    for cls, encoder in _ENCODERS.items():
        if isinstance(obj, cls):
            doc = (encoder(obj, include_forward) if cls is FitResult else encoder(obj))
            return {"schema_version": SCHEMA_VERSION, **doc}
    raise TypeError(f"cannot serialize objects of type {type(obj).__name__}")


def save_report(obj, path: str | Path, include_forward: bool = False) -> None:
    """Write a result object as a schema-versioned JSON document."""
    doc = to_document(obj, include_forward=include_forward)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, allow_nan=True)
        fh.write("\n")


def from_document(doc: dict):
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"expected schema_version {SCHEMA_VERSION}, got {version!r}"
        )
    kind = doc.get("kind")
    if kind not in _DECODERS:
        raise SchemaVersionMismatch(f"unknown document kind {kind!r}")
    return _DECODERS[kind](doc)


def load_report(path: str | Path):
    """Load a JSON result document back into its dataclass."""
    with open(path, encoding="utf-8") as fh:
        return from_document(json.load(fh))


# ---------------------------------------------------------------------------
# Plot-ready CSV emitters
# ---------------------------------------------------------------------------


def write_histogram_csv(report: TrialReport, path: str | Path) -> None:
    """``method,K,count`` rows of the selected-K histogram (K=0: failures)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "K", "count"])
        for method in report.methods:
            for K, count in sorted(report.histogram(method).items()):
                writer.writerow([method, K, count])


def write_boxplot_csv(report: TrialReport, path: str | Path) -> None:
    """``K,trial,tkl`` rows of the per-(K, trial) divergence estimates."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["K", "trial", "tkl"])
        for K in sorted(report.tkl):
            for trial, value in enumerate(report.tkl[K]):
                if math.isfinite(value):
                    writer.writerow([K, trial, repr(float(value))])


def write_decay_csv(result: DecayResult, path: str | Path) -> None:
    """``n,mean_tkl,stderr`` rows of the error-decay study."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "mean_tkl", "stderr"])
        for p in result.points:
            writer.writerow([p.n, repr(float(p.mean_tkl)), repr(float(p.std_err))])
