"""Datasets and the CSV/JSON file formats used by the command line.

Numeric CSV output uses 10 significant digits; every file is UTF-8 with LF
line endings and is written atomically (temporary file, then rename).
"""
import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .marginals import ColumnSchema, MarginalKind, check_schema

INTEGRAL_TOL = 1e-9


class DataError(ValueError):
    """Malformed input data or schema."""


@dataclass(eq=False)
class Dataset:
    """Column names, an ``(n, d)`` float array (NaN = missing) and the schema."""

    names: list
    values: np.ndarray
    schema: list

    def __post_init__(self):
        self.names = list(self.names)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise DataError("values must be 2-d with one column per name")
        self.schema = check_schema(self.schema)
        if [c.name for c in self.schema] != self.names:
            raise DataError("schema names must match the column names in order")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    @property
    def missing(self):
        return np.isnan(self.values)

    def missing_counts(self):
        return dict(zip(self.names, self.missing.sum(axis=0).tolist()))

    def column(self, name):
        return self.values[:, self.names.index(name)]


def fmt(x):
    """10-significant-digit rendering; NaN becomes an empty field."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def atomic_write(path, text):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


# --- schema -------------------------------------------------------------------

def schema_to_json(schema):
    return json.dumps([{"name": c.name, "kind": c.kind.value} for c in schema], indent=2) + "\n"


def load_schema(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON schema: {exc}") from None
    if not isinstance(raw, list):
        raise DataError(f"{path}: schema must be a JSON array")
    cols = []
    for k, item in enumerate(raw):
        if not isinstance(item, dict) or "name" not in item or "kind" not in item:
            raise DataError(f"{path}: schema entry {k} needs 'name' and 'kind'")
        try:
            cols.append(ColumnSchema(str(item["name"]), item["kind"]))
        except ValueError as exc:
            raise DataError(f"{path}: schema entry {k}: {exc}") from None
    try:
        return check_schema(cols)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


# --- data CSV -------------------------------------------------------------------

def load_csv(path, schema_path=None, schema=None):
    """Read a numeric CSV with a header row; empty fields are missing.

    Discrete columns must hold integral values (within 1e-9, then rounded).
    """
    if schema is None:
        if schema_path is None:
            raise DataError("a schema is required")
        schema = load_schema(schema_path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    names = [c.name for c in schema]
    if header != names:
        extra = [nm for nm in names if nm not in header] or [h for h in header if h not in names]
        detail = f" (mismatch at {extra[0]!r})" if extra else " (order differs)"
        raise DataError(f"{path}: header {header} does not match schema names {names}{detail}")
    d = len(header)
    body = [r for r in rows[1:] if r != []]
    values = np.full((len(body), d), np.nan)
    for i, row in enumerate(body):
        lineno = i + 2
        if len(row) != d:
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {d}")
        for j, field in enumerate(row):
            field = field.strip()
            if field == "":
                continue
            try:
                v = float(field)
            except ValueError:
                raise DataError(
                    f"{path}: row {lineno}, column {header[j]!r}: non-numeric value {field!r}"
                ) from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {lineno}, column {header[j]!r}: non-finite value")
            values[i, j] = v
    for j, col in enumerate(schema):
        if col.kind is MarginalKind.DISCRETE:
            x = values[:, j]
            ok = np.isnan(x) | (np.abs(x - np.round(x)) <= INTEGRAL_TOL)
            if not ok.all():
                row = int(np.flatnonzero(~ok)[0]) + 2
                raise DataError(
                    f"{path}: discrete column {col.name!r} has non-integral value at row {row}"
                )
            values[:, j] = np.round(x)
    return Dataset(names, values, schema)


def dataset_csv(data):
    return csv_text(data.names, data.values.tolist())


# --- correlation matrix CSV ----------------------------------------------------

def matrix_csv(names, values):
    return csv_text(names, np.asarray(values, dtype=float).tolist())


def load_matrix_csv(path):
    """Read a matrix CSV (header of names, then d rows); empty field = NaN."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r != []]
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    names = [h.strip() for h in rows[0]]
    d = len(names)
    if len(rows) != d + 1:
        raise DataError(f"{path}: expected {d} matrix rows, found {len(rows) - 1}")
    out = np.empty((d, d))
    for i, row in enumerate(rows[1:]):
        if len(row) != d:
            raise DataError(f"{path}: matrix row {i + 1} has {len(row)} fields, expected {d}")
        for j, field in enumerate(row):
            try:
                out[i, j] = float(field) if field.strip() else math.nan
            except ValueError:
                raise DataError(f"{path}: matrix row {i + 1}: non-numeric {field!r}") from None
    return names, out
