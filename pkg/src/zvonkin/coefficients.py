"""SDE data: diagonal diffusion, drift split into an irregular part ``b0``
acting coordinatewise and a regular part ``b1`` acting on the whole state.

Evaluators are user callables and must work elementwise on numpy arrays:
a :class:`ScalarField1D` maps an array of reals to an array of the same
shape, a :class:`VectorField` maps ``(..., d)`` to ``(..., d)``.  Declared
bounds and moduli are trusted but spot-checked by :func:`validate_problem`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .moduli import Modulus, modulus_violations

DEFAULT_GRID_RADIUS = 10.0
DEFAULT_GRID_STEP = 0.01
# cap on tensor-grid size for the b1 check; beyond it the step is coarsened
MAX_GRID_POINTS = 5_000_000
_REL_SLACK = 1e-12


@dataclass(frozen=True)
class ScalarField1D:
    evaluator: Callable
    bound: float
    breakpoints: tuple = ()

    def __post_init__(self):
        if not self.bound >= 0:
            raise DomainError("bound must be nonnegative")
        bps = tuple(float(b) for b in self.breakpoints)
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.evaluator(x), dtype=float) * np.ones_like(x)


@dataclass(frozen=True)
class DiagonalDiffusion:
    sigmas: Sequence[ScalarField1D]
    sigma_min: float
    sigma_max: float
    modulus: Modulus

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(self.sigmas))
        if not self.sigma_min > 0:
            raise DomainError("sigma_min must be positive")
        if not self.sigma_max >= self.sigma_min:
            raise DomainError("sigma_max must be >= sigma_min")


@dataclass(frozen=True)
class VectorField:
    evaluator: Callable
    bound: float
    modulus: Modulus

    def __post_init__(self):
        if not self.bound >= 0:
            raise DomainError("bound must be nonnegative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.evaluator(x), dtype=float) * np.ones_like(x)


@dataclass(frozen=True)
class SDEProblem:
    dim: int
    diffusion: DiagonalDiffusion
    b0: Sequence[ScalarField1D]
    b1: VectorField
    x0: np.ndarray
    name: str = ""

    def __post_init__(self):
        if not (isinstance(self.dim, (int, np.integer)) and self.dim >= 1):
            raise DomainError("dim must be a positive integer")
        object.__setattr__(self, "b0", tuple(self.b0))
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        for label, n in (("diffusion.sigmas", len(self.diffusion.sigmas)), ("b0", len(self.b0)), ("x0", len(x0))):
            if n != self.dim:
                raise DomainError(f"{label} has length {n}, expected dim={self.dim}")
        if not np.all(np.isfinite(x0)):
            raise DomainError("x0 must be finite")

    @property
    def drift_bound(self) -> float:
        """Bound on the Euclidean norm of the total drift."""
        return float(np.sqrt(sum(f.bound**2 for f in self.b0))) + self.b1.bound

    def sigma(self, i, x):
        return self.diffusion.sigmas[i](x)

    def drift(self, x):
        return evaluate_drift(self, x)

    def diffusion_diag(self, x):
        """Diagonal of sigma at states ``x`` of shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        return np.stack([self.diffusion.sigmas[i](x[..., i]) for i in range(self.dim)], axis=-1)


def zero_vector_field(dim) -> VectorField:
    from .moduli import Zero

    return VectorField(lambda x: np.zeros_like(x), 0.0, Zero())


@dataclass(frozen=True)
class Violation:
    kind: str
    coordinate: int | None
    points: np.ndarray
    detail: str

    def __str__(self):
        where = "" if self.coordinate is None else f" (coordinate {self.coordinate})"
        n = len(self.points)
        first = "" if n == 0 else f"; first at {self.points[0].tolist()!r}"
        return f"{self.kind}{where}: {self.detail} [{n} point(s){first}]"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self):
        return {v.kind for v in self.violations}

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def _finite_or_raise(values, label, coordinate, points):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        pt = points[tuple(idx[: points.ndim - 1])] if points.ndim > 1 else points[idx[0]]
        raise ValidationError(
            f"{label} is not finite at coordinate {coordinate}, point {np.asarray(pt).tolist()!r}",
            coordinate=coordinate,
            point=np.asarray(pt),
        )


def _axis_grid(radius, step):
    n = int(round(radius / step))
    g = step * np.arange(-n, n + 1)
    return g


def validate_problem(p: SDEProblem, grid_radius=DEFAULT_GRID_RADIUS, grid_step=DEFAULT_GRID_STEP) -> ValidationReport:
    """Spot-check the standing assumptions on a uniform grid.

    Returns every violated invariant with its offending points.  Raises
    :class:`ValidationError` if an evaluator is not finite somewhere.
    """
    if not (grid_radius > 0 and grid_step > 0):
        raise DomainError("grid_radius and grid_step must be positive")
    report = ValidationReport()
    xs = _axis_grid(grid_radius, grid_step)
    dd = p.diffusion

    def add(kind, coord, mask, detail, pts=xs):
        if np.any(mask):
            report.violations.append(Violation(kind, coord, pts[mask], detail))

    for i in range(p.dim):
        s = dd.sigmas[i](xs)
        _finite_or_raise(s, "sigma", i, xs)
        add("non-degeneracy", i, s < dd.sigma_min * (1 - _REL_SLACK), f"sigma below sigma_min={dd.sigma_min!r}")
        add("sigma-upper", i, s > dd.sigma_max * (1 + _REL_SLACK), f"sigma above sigma_max={dd.sigma_max!r}")
        add("sigma-bound", i, np.abs(s) > dd.sigmas[i].bound * (1 + _REL_SLACK) + _REL_SLACK,
            f"|sigma| exceeds declared bound {dd.sigmas[i].bound!r}")
        b = p.b0[i](xs)
        _finite_or_raise(b, "b0", i, xs)
        add("b0-bound", i, np.abs(b) > p.b0[i].bound * (1 + _REL_SLACK) + _REL_SLACK,
            f"|b0| exceeds declared bound {p.b0[i].bound!r}")

    # b1 on a tensor grid, evaluated one slab of the first axis at a time
    step = grid_step
    while len(_axis_grid(grid_radius, step)) ** p.dim > MAX_GRID_POINTS:
        step *= 2
    axis = _axis_grid(grid_radius, step)
    bad_pts = []
    limit = p.b1.bound * (1 + _REL_SLACK) + _REL_SLACK
    if p.dim == 1:
        slabs = [axis[:, None]]
    else:
        rest = np.stack(np.meshgrid(*([axis] * (p.dim - 1)), indexing="ij"), axis=-1).reshape(-1, p.dim - 1)
        slabs = (np.column_stack([np.full(len(rest), a), rest]) for a in axis)
    for pts in slabs:
        vals = p.b1(pts)
        if not np.all(np.isfinite(vals)):
            k = int(np.argwhere(~np.isfinite(vals))[0][0])
            coord = int(np.argwhere(~np.isfinite(vals[k]))[0][0])
            raise ValidationError(f"b1 is not finite at coordinate {coord}, point {pts[k].tolist()!r}",
                                  coordinate=coord, point=pts[k])
        norms = np.linalg.norm(vals, axis=-1)
        if np.any(norms > limit):
            bad_pts.append(pts[norms > limit])
    if bad_pts:
        report.violations.append(Violation("b1-bound", None, np.concatenate(bad_pts),
                                           f"|b1| exceeds declared bound {p.b1.bound!r}"))

    for kind, m in (("b1-modulus", p.b1.modulus), ("sigma-modulus", dd.modulus)):
        for problem in modulus_violations(m):
            report.violations.append(Violation(kind, None, np.empty((0,)), problem))
    return report


def evaluate_drift(p: SDEProblem, x):
    """``b0^i(x^i) + b1^i(x)`` for states of shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.dim:
        raise DomainError(f"state has {x.shape[-1]} coordinates, expected {p.dim}")
    if not np.all(np.isfinite(x)):
        raise DomainError("state must be finite")
    out = p.b1(x)
    for i in range(p.dim):
        out[..., i] = p.b0[i](x[..., i]) + out[..., i]
    bad = ~np.isfinite(out)
    if np.any(bad):
        coord = int(np.argwhere(bad)[0][-1])
        raise ValidationError(f"drift is not finite in coordinate {coord}", coordinate=coord)
    return out
