"""Per-coordinate scale functions that remove the irregular drift ``b0``.

For coordinate ``i`` the scale function solves
``sigma^2/2 u'' + b0 u' = 0`` with ``u(0) = 0`` and ``u'(0) = 1``:

    u'(x) = exp(-2 I(x)),   I(x) = int_0^x b0(z) / sigma(z)^2 dz,
    u(x)  = int_0^x u'(y) dy.

``I`` is tabulated by the composite midpoint rule (``b0`` is only
measurable, so it is never sampled at a node) on a grid that contains every
declared breakpoint.  Between nodes ``I`` is linear and ``u'`` is
exp-of-linear, and ``u`` is the exact antiderivative of that interpolant, so
``u' > 0`` holds exactly and ``u``, ``u'`` and the inverse stay mutually
consistent to rounding.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .coefficients import SDEProblem
from .errors import DomainError, NonDegeneracyError, OutOfDomainError, ResourceError, ValidationError
from .grid import exact_cumsum
from .moduli import ComposedModulus

DEFAULT_R_MAX = 10.0
DEFAULT_GRID_STEP = 1e-3
DEFAULT_INVERSION_TOL = 1e-10
MAX_NEWTON_ITERATIONS = 20
R_MAX_CAP = 1000.0
MAX_NODES = 20_000_000


def tilde_b0(p: SDEProblem, i: int, x):
    """``b0^i(x) / sigma_ii(x)^2``."""
    x = np.asarray(x, dtype=float)
    s = p.sigma(i, x)
    if np.any(s < p.diffusion.sigma_min / 2):
        bad = np.atleast_1d(x)[np.atleast_1d(s < p.diffusion.sigma_min / 2)][0]
        raise NonDegeneracyError(f"sigma_{i}({bad!r}) fell below sigma_min/2")
    out = p.b0[i](x) / (s * s)
    return float(out) if out.ndim == 0 else out


def _phi(a):
    # -expm1(-a)/a with the removable singularity at 0
    a = np.asarray(a, dtype=float)
    small = np.abs(a) < 1e-300
    safe = np.where(small, 1.0, a)
    return np.where(small, 1.0, -np.expm1(-safe) / safe)


@dataclass(frozen=True)
class ScaleFunction:
    coordinate: int
    nodes: np.ndarray
    inner: np.ndarray  # I at the nodes
    slopes: np.ndarray  # midpoint value of b0/sigma^2 per cell
    u_values: np.ndarray
    domain_radius: float

    @property
    def range(self) -> tuple[float, float]:
        return float(self.u_values[0]), float(self.u_values[-1])

    def _cells(self, x):
        k = np.searchsorted(self.nodes, x, side="right") - 1
        return np.clip(k, 0, len(self.nodes) - 2)

    def _check_domain(self, x):
        excess = np.max(np.abs(x)) - self.domain_radius if np.size(x) else 0.0
        if excess > 0:
            raise OutOfDomainError(
                f"x outside [-{self.domain_radius!r}, {self.domain_radius!r}] by {excess!r}", excess
            )


def _build_nodes(radius, step, breakpoints):
    m = int(np.floor(radius / step + 1e-9))
    nodes = step * np.arange(-m, m + 1, dtype=float)
    extra = [-radius, radius]
    for b in breakpoints:
        if -radius < b < radius:
            extra += [b, b - step / 2, b + step / 2]
    nodes = np.unique(np.concatenate([nodes, np.clip(extra, -radius, radius)]))
    # merge nodes closer than a small fraction of the step, never dropping 0
    keep = np.concatenate([[True], np.diff(nodes) > 1e-6 * step])
    nodes = nodes[keep]
    if not np.any(nodes == 0.0):
        nodes = np.sort(np.append(nodes, 0.0))
    return nodes


def build_scale_function(p: SDEProblem, i: int, R_max=DEFAULT_R_MAX, grid_step=DEFAULT_GRID_STEP) -> ScaleFunction:
    if not (R_max > 0 and grid_step > 0):
        raise DomainError("R_max and grid_step must be positive")
    if R_max > R_MAX_CAP:
        raise ResourceError(f"R_max={R_max!r} exceeds the hard cap {R_MAX_CAP!r}")
    if 2 * R_max / grid_step > MAX_NODES:
        raise ResourceError(f"grid with R_max={R_max!r}, step={grid_step!r} exceeds {MAX_NODES} nodes")
    if not 0 <= i < p.dim:
        raise DomainError(f"coordinate {i} out of range for dim={p.dim}")

    nodes = _build_nodes(float(R_max), float(grid_step), p.b0[i].breakpoints)
    widths = np.diff(nodes)
    slopes = np.asarray(tilde_b0(p, i, nodes[:-1] + widths / 2), dtype=float)
    if not np.all(np.isfinite(slopes)):
        raise ValidationError(f"b0/sigma^2 not finite on coordinate {i}", coordinate=i)
    j0 = int(np.flatnonzero(nodes == 0.0)[0])

    def from_zero(increments):
        # prefix sums outward from the node at 0, so both sides start exactly at 0
        right = exact_cumsum(increments[j0:])
        left = -exact_cumsum(increments[:j0][::-1])[::-1]
        return np.concatenate([left[:-1], right])

    inner = from_zero(slopes * widths)
    du = np.exp(-2.0 * inner[:-1]) * widths * _phi(2.0 * slopes * widths)
    u_values = from_zero(du)
    if not (np.all(np.isfinite(u_values)) and np.all(np.isfinite(inner))):
        raise ResourceError(f"scale function overflows on [-{R_max!r}, {R_max!r}]; reduce R_max")
    if not np.all(np.diff(u_values) > 0):
        raise ResourceError("scale function lost strict monotonicity to rounding; reduce R_max")
    for a in (nodes, inner, slopes, u_values):
        a.setflags(write=False)
    return ScaleFunction(i, nodes, inner, slopes, u_values, float(R_max))


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def eval_u(s: ScaleFunction, x):
    xa = np.asarray(x, dtype=float)
    s._check_domain(xa)
    k = s._cells(xa)
    t = xa - s.nodes[k]
    sl = s.slopes[k]
    out = s.u_values[k] + np.exp(-2.0 * s.inner[k]) * t * _phi(2.0 * sl * t)
    return _scalar_or_array(x, out)


def _u_prime_cells(s, k, t):
    # factored so the large node exponent is not rounded together with s*t
    return np.exp(-2.0 * s.inner[k]) * np.exp(-2.0 * s.slopes[k] * t)


def eval_u_prime(s: ScaleFunction, x):
    xa = np.asarray(x, dtype=float)
    s._check_domain(xa)
    k = s._cells(xa)
    return _scalar_or_array(x, _u_prime_cells(s, k, xa - s.nodes[k]))


def eval_u_second(s: ScaleFunction, p: SDEProblem, x):
    xa = np.asarray(x, dtype=float)
    up = np.asarray(eval_u_prime(s, xa))
    return _scalar_or_array(x, -2.0 * np.asarray(tilde_b0(p, s.coordinate, xa)) * up)


def _invert(s: ScaleFunction, y, tol=DEFAULT_INVERSION_TOL):
    """Cell index and in-cell offset of ``v(y)``, plus the clamp mask.

    Bisection on the monotone table (``searchsorted``) brackets the cell,
    then safeguarded Newton refines the offset inside it.  Keeping the
    offset separate from the node avoids rounding ``x`` before ``u'`` is
    evaluated, which matters where ``u'`` is large.
    """
    ya = np.asarray(y, dtype=float).reshape(-1)
    lo, hi = s.range
    n_cells = len(s.nodes) - 1
    below, above = ya < lo, ya > hi
    clamped = below | above
    k = np.where(below, 0, n_cells - 1)
    t = np.where(below, 0.0, s.nodes[-1] - s.nodes[-2])
    inside = ~clamped
    if np.any(inside):
        yi = ya[inside]
        ki = np.clip(np.searchsorted(s.u_values, yi, side="right") - 1, 0, n_cells - 1)
        uk = s.u_values[ki]
        w = s.nodes[ki + 1] - s.nodes[ki]
        target = yi - uk
        scale = np.exp(-2.0 * s.inner[ki])
        sl2 = 2.0 * s.slopes[ki]
        ti = np.clip(target / (s.u_values[ki + 1] - uk) * w, 0.0, w)
        t_lo, t_hi = np.zeros_like(ti), w.copy()
        xk_abs = np.abs(s.nodes[ki])
        active = np.ones(len(ti), dtype=bool)
        for _ in range(MAX_NEWTON_ITERATIONS):
            if not np.any(active):
                break
            a = np.flatnonzero(active)
            ta = ti[a]
            r = scale[a] * ta * _phi(sl2[a] * ta) - target[a]
            t_lo[a] = np.where(r < 0, ta, t_lo[a])
            t_hi[a] = np.where(r > 0, ta, t_hi[a])
            t_new = ta - r / (scale[a] * np.exp(-sl2[a] * ta))
            outside = (t_new < t_lo[a]) | (t_new > t_hi[a])
            t_new = np.where(outside, 0.5 * (t_lo[a] + t_hi[a]), t_new)
            t_new = np.where(r == 0, ta, t_new)
            done = (np.abs(r) <= tol) | (np.abs(t_new - ta) <= 4 * np.finfo(float).eps * (xk_abs[a] + w[a]))
            ti[a] = t_new
            active[a[done]] = False
        k[inside] = ki
        t[inside] = ti
    return k, t, clamped


def eval_v(s: ScaleFunction, y, tol=DEFAULT_INVERSION_TOL):
    """Inverse of ``u``: returns ``(x, clamped)``.

    Values of ``y`` outside the tabulated range map to the nearest endpoint
    ``+-domain_radius`` with ``clamped`` set.
    """
    k, t, clamped = _invert(s, y, tol)
    x = s.nodes[k] + t
    if np.ndim(y) == 0:
        return float(x[0]), bool(clamped[0])
    return x.reshape(np.shape(y)), clamped.reshape(np.shape(y))


def _v_and_u_prime(s: ScaleFunction, y):
    k, t, clamped = _invert(s, y)
    shape = np.shape(y)
    return (s.nodes[k] + t).reshape(shape), _u_prime_cells(s, k, t).reshape(shape), clamped


class ClampCounter:
    """Thread-safe count of clamped inverse evaluations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._n = 0

    def add(self, n):
        n = int(n)
        if n:
            with self._lock:
                self._n += n

    @property
    def value(self):
        return self._n

    def reset(self):
        with self._lock:
            self._n = 0


@dataclass(frozen=True)
class TransformedSDE:
    """Coefficients of the SDE solved by ``xi = u(X)``.

    ``hat_b^i(y) = b1^i(v(y)) u_i'(v^i(y^i))`` and
    ``hat_sigma_ii(y^i) = sigma_ii(v^i(y^i)) u_i'(v^i(y^i))``; ``b0`` is gone.
    """

    problem: SDEProblem
    scales: tuple
    clamp_events: ClampCounter = field(default_factory=ClampCounter, compare=False)

    @property
    def dim(self):
        return self.problem.dim

    def _v_up(self, i, y):
        x, up, c = _v_and_u_prime(self.scales[i], y)
        self.clamp_events.add(np.count_nonzero(c))
        return x, up

    def v(self, y):
        y = np.asarray(y, dtype=float)
        return np.stack([self._v_up(i, y[..., i])[0] for i in range(self.dim)], axis=-1)

    def u(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([eval_u(self.scales[i], x[..., i]) for i in range(self.dim)], axis=-1)

    def hat_b(self, y):
        y = np.asarray(y, dtype=float)
        parts = [self._v_up(i, y[..., i]) for i in range(self.dim)]
        xv = np.stack([p[0] for p in parts], axis=-1)
        up = np.stack([p[1] for p in parts], axis=-1)
        return self.problem.b1(xv) * up

    def hat_sigma_i(self, i, yi):
        xv, up = self._v_up(i, yi)
        return _scalar_or_array(yi, self.problem.sigma(i, xv) * up)

    @property
    def hat_sigma(self):
        return [(lambda yi, i=i: self.hat_sigma_i(i, yi)) for i in range(self.dim)]

    def diffusion_diag(self, y):
        y = np.asarray(y, dtype=float)
        return np.stack([np.asarray(self.hat_sigma_i(i, y[..., i])) for i in range(self.dim)], axis=-1)

    drift = hat_b


def build_transformed_sde(p: SDEProblem, scales) -> TransformedSDE:
    scales = tuple(scales)
    if len(scales) != p.dim:
        raise DomainError(f"need {p.dim} scale functions, got {len(scales)}")
    for i, s in enumerate(scales):
        if s.coordinate != i:
            raise DomainError(f"scale function {i} was built for coordinate {s.coordinate}")
    return TransformedSDE(p, scales)


def build_transform(p: SDEProblem, R_max=DEFAULT_R_MAX, grid_step=DEFAULT_GRID_STEP) -> TransformedSDE:
    """Scale functions for every coordinate plus the transformed coefficients."""
    return build_transformed_sde(p, [build_scale_function(p, i, R_max, grid_step) for i in range(p.dim)])


@dataclass(frozen=True)
class TransformConstants:
    sup_u_prime: float
    lip_v: float
    lip_u_prime_v: float

    @property
    def c_r(self):
        # rho(L z) <= max(1, L) rho(z) for concave rho with rho(0) = 0
        return self.sup_u_prime * max(1.0, self.lip_v)


def measured_constants(t: TransformedSDE, R, samples=4001) -> TransformConstants:
    """Grid maxima of ``u'(v)``, slope of ``v`` and slope of ``u' o v`` over ``|y| <= R``."""
    sup_g = lip_v = lip_g = 0.0
    for s in t.scales:
        lo, hi = s.range
        y = np.linspace(max(-R, lo), min(R, hi), samples)
        x, _ = eval_v(s, y)
        g = eval_u_prime(s, x)
        dy = np.diff(y)
        sup_g = max(sup_g, float(np.max(g)))
        lip_v = max(lip_v, float(np.max(np.abs(np.diff(x)) / dy)))
        lip_g = max(lip_g, float(np.max(np.abs(np.diff(g)) / dy)))
    return TransformConstants(sup_g, lip_v, lip_g)


def transformed_moduli(t: TransformedSDE, R, samples=4001):
    """Composed moduli bounding ``hat_b`` and ``hat_sigma`` on the ball of radius R.

    Returns ``(rho_hat_b, rho_hat_sigma)``.  The linear coefficient of the
    diffusion modulus uses the sup of sigma.
    """
    k = measured_constants(t, R, samples)
    p = t.problem
    hat_b = ComposedModulus(p.b1.modulus, k.c_r, p.b1.bound * k.lip_u_prime_v)
    hat_sigma = ComposedModulus(p.diffusion.modulus, k.c_r, p.diffusion.sigma_max * k.lip_u_prime_v)
    return hat_b, hat_sigma
