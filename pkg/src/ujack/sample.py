"""Observations, samples, and CSV ingestion.

A sample holds ``n`` observations ``D_i = (X_i, V_i)`` where ``X_i`` is the
covariate used for localization and ``V_i`` is the payload seen by the base
kernel. For regression-type tests the payload is ``(x_1, ..., x_m, y)`` with
the response last.
"""

import csv
from dataclasses import dataclass

import numpy as np

from ujack import rng
from ujack.errors import (
    EmptyFile,
    InputError,
    InvalidParameter,
    MissingColumn,
    NonFiniteValue,
    ParseError,
)


@dataclass(frozen=True)
class Observation:
    x: tuple
    v: tuple

    def __post_init__(self):
        x = tuple(float(t) for t in np.atleast_1d(self.x))
        v = tuple(float(t) for t in np.atleast_1d(self.v))
        if not x or not v:
            raise InvalidParameter("covariate and payload must be non-empty")
        if not all(np.isfinite(x)) or not all(np.isfinite(v)):
            raise InvalidParameter("observation coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)


class Sample:
    """Immutable collection of observations stored as two float arrays.

    Parameters
    ----------
    X : array_like, shape (n, m)
        Covariates. A 1-d array is read as ``m = 1``.
    V : array_like, shape (n, p)
        Payloads. A 1-d array is read as ``p = 1``.
    """

    def __init__(self, X, V):
        X = np.array(X, dtype=float)
        V = np.array(V, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if V.ndim == 1:
            V = V[:, None]
        if X.ndim != 2 or V.ndim != 2 or X.shape[0] != V.shape[0]:
            raise InvalidParameter("X and V must be 2-d with the same number of rows")
        if X.shape[1] < 1 or V.shape[1] < 1:
            raise InvalidParameter("m and p must be at least 1")
        if X.shape[0] < 2:
            raise InvalidParameter(f"a sample needs at least 2 observations, got {X.shape[0]}")
        if not (np.isfinite(X).all() and np.isfinite(V).all()):
            raise InvalidParameter("sample contains non-finite values")
        X.setflags(write=False)
        V.setflags(write=False)
        self.X = X
        self.V = V

    @classmethod
    def from_observations(cls, observations):
        observations = list(observations)
        return cls([o.x for o in observations], [o.v for o in observations])

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.X.shape[1]

    @property
    def p(self):
        return self.V.shape[1]

    @property
    def observations(self):
        return [Observation(tuple(x), tuple(v)) for x, v in zip(self.X, self.V)]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.V, other.V)

    def __repr__(self):
        return f"Sample(n={self.n}, m={self.m}, p={self.p})"

    def take(self, index):
        """Sub-sample (or reorder) by an integer index array."""
        index = np.asarray(index, dtype=np.intp)
        return Sample(self.X[index], self.V[index])


def load_csv(path, covariate_columns, payload_columns):
    """Read a comma-separated file with one header row.

    Columns are selected by header name; the same column may appear in
    both lists. Rows keep their file order.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyFile(f"{path}: file is empty") from None
        wanted = list(covariate_columns) + list(payload_columns)
        position = {}
        for name in wanted:
            if name not in header:
                raise MissingColumn(name)
            position[name] = header.index(name)
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = {}
            for name in wanted:
                col = position[name]
                text = row[col].strip() if col < len(row) else ""
                try:
                    value = float(text)
                except ValueError:
                    raise ParseError(lineno, name, text) from None
                if not np.isfinite(value):
                    raise NonFiniteValue(lineno, name)
                values[name] = value
            rows.append(values)
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    if len(rows) < 2:
        raise InputError(f"{path}: a sample needs at least 2 rows")
    X = [[r[c] for c in covariate_columns] for r in rows]
    V = [[r[c] for c in payload_columns] for r in rows]
    return Sample(X, V)


def write_csv(sample, path, covariate_names=None, payload_names=None):
    """Write covariates then payloads with shortest round-trip float text."""
    covariate_names = covariate_names or [f"x{j + 1}" for j in range(sample.m)]
    payload_names = payload_names or [f"v{j + 1}" for j in range(sample.p)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(covariate_names) + list(payload_names))
        for x, v in zip(sample.X, sample.V):
            writer.writerow([repr(float(t)) for t in x] + [repr(float(t)) for t in v])


def parse_error_kind(spec):
    """Parse ``"gaussian"``, ``"gaussian:0.1"``, ``"rademacher:0.1"`` etc."""
    if isinstance(spec, tuple):
        kind, scale = spec
    else:
        kind, _, scale = str(spec).partition(":")
        scale = scale or 0.1
    kind = kind.strip().lower()
    if kind not in ("gaussian", "rademacher"):
        raise InvalidParameter(f"unknown error kind {kind!r}; expected gaussian or rademacher")
    try:
        scale = float(scale)
    except ValueError:
        raise InvalidParameter(f"bad error scale {scale!r}") from None
    if not scale > 0 or not np.isfinite(scale):
        raise InvalidParameter("error scale must be positive")
    return kind, scale


def synthesize_null_regression(n, error_kind, seed):
    """Draw ``X ~ U[0, 1]`` and ``Y = eps`` (zero regression function).

    ``error_kind`` is ``("gaussian", sd)`` or ``("rademacher", scale)``
    (strings like ``"gaussian:0.1"`` are accepted). The payload is
    ``(x, y)``.
    """
    if int(n) != n or n < 2:
        raise InvalidParameter(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    kind, scale = parse_error_kind(error_kind)
    gen = rng.generator(seed, "null-regression")
    x = gen.random(n)
    if kind == "gaussian":
        eps = scale * gen.standard_normal(n)
    else:
        eps = scale * np.where(gen.random(n) < 0.5, -1.0, 1.0)
    return Sample(x[:, None], np.column_stack([x, eps]))


def synthesize_regression(n, f, error_kind, seed):
    """Like :func:`synthesize_null_regression` with ``Y = f(X) + eps``."""
    base = synthesize_null_regression(n, error_kind, seed)
    x = base.X[:, 0]
    y = f(x) + base.V[:, 1]
    return Sample(base.X, np.column_stack([x, y]))
