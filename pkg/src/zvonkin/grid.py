"""Uniform-grid functions and a few summation helpers shared across modules."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class GridFunction:
    """Real function tabulated at ``0, step, ..., x_max``."""

    x_max: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        if not (self.x_max > 0 and self.step > 0):
            raise DomainError("x_max and step must be positive")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DomainError("values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid function values must be finite")
        expected = round(self.x_max / self.step) + 1
        if len(values) != expected:
            raise DomainError(
                f"expected {expected} values for x_max={self.x_max}, step={self.step}, got {len(values)}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, f, x_max, step):
        n = round(x_max / step)
        x = step * np.arange(n + 1)
        return cls(x_max, step, np.asarray(f(x), dtype=float) * np.ones_like(x))

    @property
    def nodes(self) -> np.ndarray:
        return self.step * np.arange(len(self.values))

    def __len__(self):
        return len(self.values)

    def __call__(self, x):
        """Piecewise-linear interpolation; ``x`` must lie in ``[0, x_max]``."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > self.nodes[-1] * (1 + 1e-12)):
            raise DomainError("evaluation point outside [0, x_max]")
        return np.interp(x, self.nodes, self.values)

    def to_csv(self, path):
        write_csv(path, ["x", "value"], zip(self.nodes, self.values))

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["x", "value"]:
                raise DomainError(f"{path}: expected header 'x,value', got {header!r}")
            rows = [(float(a), float(b)) for a, b in reader]
        if len(rows) < 2:
            raise DomainError(f"{path}: need at least two rows")
        x = np.array([r[0] for r in rows])
        step = x[1] - x[0]
        if x[0] != 0 or not np.allclose(np.diff(x), step, rtol=1e-9, atol=1e-12):
            raise DomainError(f"{path}: x column must be a uniform grid starting at 0")
        return cls(float(x[-1]), float(step), np.array([r[1] for r in rows]))


def exact_cumsum(terms) -> np.ndarray:
    """Correctly rounded prefix sums (leading 0 included).

    Running Shewchuk partials; each prefix is rounded once by ``math.fsum``.
    Exactly representable prefix sums come out exact, which keeps the
    identity scale function bit-exact.
    """
    out = np.empty(len(terms) + 1)
    out[0] = 0.0
    partials: list[float] = []
    for k, x in enumerate(np.asarray(terms, dtype=float).tolist()):
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]
        out[k + 1] = math.fsum(partials)
    return out


def format_number(x) -> str:
    """Shortest round-trip decimal; locale independent."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return repr(float(x) + 0.0)  # + 0.0 folds -0.0 into 0.0


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_number(v) for v in row) + "\n")
    return path
