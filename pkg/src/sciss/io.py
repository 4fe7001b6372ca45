"""Dataset files, report serialization, and summary output.

Datasets are comma-separated with a mandatory header naming columns
``y1..yq``, ``x1..xp``, and optionally ``w1..wd``.  Labeled rows fill every
``y`` column; unlabeled rows leave all of them empty.  The intercept column
of ``w`` is implicit and prepended on parse.

Reports serialize to a JSON tree with a ``schema_version`` field; floats use
Python's shortest round-trip representation so ``read(write(report))``
reproduces the report exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyLabeledError, ParseError, SchemaError
from .ising import IsingParams
from .report import EstimateReport

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    """Labeled and unlabeled samples sharing one feature schema."""

    YL: np.ndarray   # (n, q) binary
    XL: np.ndarray   # (n, p)
    WL: np.ndarray   # (n, d + 1) with leading intercept column
    XU: np.ndarray   # (N, p)
    WU: np.ndarray   # (N, d + 1)

    @property
    def q(self):
        return self.YL.shape[1]

    @property
    def p(self):
        return self.XL.shape[1]

    @property
    def d(self):
        return self.WL.shape[1] - 1


def _indexed_columns(header, prefix):
    """Column positions for prefix1..prefixK; enforces contiguous numbering."""
    found = {}
    for pos, name in enumerate(header):
        name = name.strip()
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            idx = int(name[len(prefix):])
            if idx in found:
                raise SchemaError(f"duplicate column {name!r}")
            found[idx] = pos
    if not found:
        return []
    expected = set(range(1, len(found) + 1))
    if set(found) != expected:
        raise SchemaError(f"{prefix} columns must be numbered 1..{len(found)} contiguously")
    return [found[i] for i in sorted(found)]


def parse_dataset(path) -> Dataset:
    """Read a dataset file, splitting rows by outcome completeness."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file") from None
        y_cols = _indexed_columns(header, "y")
        x_cols = _indexed_columns(header, "x")
        w_cols = _indexed_columns(header, "w")
        if not y_cols:
            raise SchemaError("no outcome columns y1..yq found in header")

        labeled_y, labeled_x, labeled_w = [], [], []
        unlabeled_x, unlabeled_w = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            y_raw = [row[c].strip() for c in y_cols]
            filled = [v != "" for v in y_raw]
            if any(filled) and not all(filled):
                raise ParseError("partial outcome row", line=lineno)
            try:
                x = [float(row[c]) for c in x_cols]
                w = [float(row[c]) for c in w_cols]
            except ValueError:
                raise ParseError("non-numeric feature value", line=lineno) from None
            if all(filled):
                if any(v not in ("0", "1") for v in y_raw):
                    raise ParseError("outcome values must be 0 or 1", line=lineno)
                labeled_y.append([float(v) for v in y_raw])
                labeled_x.append(x)
                labeled_w.append(w)
            else:
                unlabeled_x.append(x)
                unlabeled_w.append(w)

    if not labeled_y:
        raise EmptyLabeledError("dataset has no fully labeled rows")
    n, N = len(labeled_y), len(unlabeled_x)
    q, p, d = len(y_cols), len(x_cols), len(w_cols)
    return Dataset(
        YL=np.asarray(labeled_y, dtype=float).reshape(n, q),
        XL=np.asarray(labeled_x, dtype=float).reshape(n, p),
        WL=np.hstack([np.ones((n, 1)), np.asarray(labeled_w, dtype=float).reshape(n, d)]),
        XU=np.asarray(unlabeled_x, dtype=float).reshape(N, p),
        WU=np.hstack([np.ones((N, 1)), np.asarray(unlabeled_w, dtype=float).reshape(N, d)]),
    )


def write_dataset(path, dataset: Dataset):
    """Write a dataset in the format :func:`parse_dataset` reads."""
    q, p, d = dataset.q, dataset.p, dataset.d
    header = [f"y{i + 1}" for i in range(q)] + [f"x{i + 1}" for i in range(p)] \
        + [f"w{i + 1}" for i in range(d)]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i in range(dataset.YL.shape[0]):
            row = [repr(int(v)) for v in dataset.YL[i]]
            row += [repr(float(v)) for v in dataset.XL[i]]
            row += [repr(float(v)) for v in dataset.WL[i, 1:]]
            writer.writerow(row)
        for i in range(dataset.XU.shape[0]):
            row = [""] * q
            row += [repr(float(v)) for v in dataset.XU[i]]
            row += [repr(float(v)) for v in dataset.WU[i, 1:]]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

def report_to_dict(report: EstimateReport) -> dict:
    ci_pairs = report.ci_pairs
    ci_nodes = report.ci_nodes
    return {
        "schema_version": SCHEMA_VERSION,
        "method": report.method,
        "n_labeled": report.n_labeled,
        "n_unlabeled": report.n_unlabeled,
        "theta": {
            "node_coefs": report.theta.node_coefs.tolist(),
            "pair_coefs": report.theta.pair_coefs.tolist(),
        },
        "se": {
            "pairs": report.se_pairs.tolist(),
            "nodes": report.se_nodes.tolist(),
        },
        "ci": {
            "pairs_low": ci_pairs[0].tolist(),
            "pairs_high": ci_pairs[1].tolist(),
            "nodes_low": ci_nodes[0].tolist(),
            "nodes_high": ci_nodes[1].tolist(),
        },
        "diagnostics": report.diagnostics,
    }


def report_from_dict(payload: dict) -> EstimateReport:
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported report schema_version {version!r}")
    theta = IsingParams(np.asarray(payload["theta"]["node_coefs"], dtype=float),
                        np.asarray(payload["theta"]["pair_coefs"], dtype=float))
    return EstimateReport(
        method=payload["method"],
        theta=theta,
        se_pairs=np.asarray(payload["se"]["pairs"], dtype=float),
        se_nodes=np.asarray(payload["se"]["nodes"], dtype=float),
        n_labeled=int(payload["n_labeled"]),
        n_unlabeled=int(payload["n_unlabeled"]),
        diagnostics=payload.get("diagnostics", {}),
    )


def write_report(path, report: EstimateReport):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report_to_dict(report), handle, indent=2, allow_nan=True)
        handle.write("\n")


def read_report(path) -> EstimateReport:
    with open(path, encoding="utf-8") as handle:
        return report_from_dict(json.load(handle))


def report_text(report: EstimateReport) -> str:
    """Human-readable table: estimates with standard errors and intervals."""
    theta = report.theta
    q, d = theta.q, theta.d
    ci_p = report.ci_pairs
    ci_n = report.ci_nodes
    lines = [f"method: {report.method}   n={report.n_labeled}   N={report.n_unlabeled}",
             f"{'parameter':<12}{'estimate':>10}{'se':>9}{'ci_low':>9}{'ci_high':>9}"]
    for j in range(q):
        for t in range(d + 1):
            name = f"theta_{j + 1}{j + 1}" + (f"[w{t}]" if d else "")
            lines.append(f"{name:<12}{theta.node_coefs[j, t]:>10.4f}{report.se_nodes[j, t]:>9.4f}"
                         f"{ci_n[0][j, t]:>9.4f}{ci_n[1][j, t]:>9.4f}")
        for k in range(j + 1, q):
            name = f"theta_{j + 1}{k + 1}"
            lines.append(f"{name:<12}{theta.pair_coefs[j, k]:>10.4f}{report.se_pairs[j, k]:>9.4f}"
                         f"{ci_p[0][j, k]:>9.4f}{ci_p[1][j, k]:>9.4f}")
    return "\n".join(lines)


def summary_to_dict(summary) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": summary.seed,
        "replications": summary.replications,
        "failed": summary.failed,
        "labels": list(summary.labels),
        "methods": list(summary.methods),
        "truth": summary.truth.tolist(),
        "bias": {m: summary.bias[m].tolist() for m in summary.methods},
        "se": {m: summary.se[m].tolist() for m in summary.methods},
        "re": {m: summary.re[m].tolist() for m in summary.methods},
        "cp": {m: summary.cp[m].tolist() for m in summary.methods},
        "analytic_se": {m: summary.analytic_se[m].tolist() for m in summary.methods},
    }


def write_summary(path, summary):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary_to_dict(summary), handle, indent=2, allow_nan=True)
        handle.write("\n")
