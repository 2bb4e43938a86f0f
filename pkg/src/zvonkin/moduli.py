"""Moduli of continuity and Osgood-type divergence tests.

Classification is analytic for the closed catalog (Lipschitz, Hoelder,
log-Lipschitz, zero).  Arbitrary callables only get
:func:`numeric_osgood_probe`, which is a heuristic and says so.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grid import GridFunction

FAMILIES = ("lipschitz", "hoelder", "loglipschitz", "zero")


@dataclass(frozen=True)
class Modulus:
    family: str
    C: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown modulus family {self.family!r}")
        if self.family == "zero":
            object.__setattr__(self, "C", 0.0)
        elif not self.C > 0:
            raise DomainError("modulus constant C must be positive")
        if self.family == "hoelder":
            if self.alpha is None or not 0 < self.alpha < 1:
                raise DomainError("Hoelder exponent must lie in (0, 1)")
        elif self.alpha is not None:
            raise DomainError(f"{self.family} modulus takes no exponent")

    def __call__(self, z):
        return eval_modulus(self, z)

    def describe(self) -> str:
        if self.family == "zero":
            return "zero"
        if self.family == "hoelder":
            return f"hoelder(C={self.C!r};alpha={self.alpha!r})"
        return f"{self.family}(C={self.C!r})"


def Lipschitz(C=1.0) -> Modulus:
    return Modulus("lipschitz", C)


def Hoelder(C=1.0, alpha=0.5) -> Modulus:
    return Modulus("hoelder", C, alpha)


def LogLipschitz(C=1.0) -> Modulus:
    return Modulus("loglipschitz", C)


def Zero() -> Modulus:
    return Modulus("zero")


@dataclass(frozen=True)
class ComposedModulus:
    """``c_r * base(z) + c_lin * z``, the shape of the moduli after the transform."""

    base: Modulus
    c_r: float
    c_lin: float

    def __post_init__(self):
        if self.c_r < 0 or self.c_lin < 0:
            raise DomainError("composition constants must be nonnegative")

    def __call__(self, z):
        return eval_modulus(self, z)


@dataclass(frozen=True)
class OsgoodVerdict:
    order1_diverges: bool
    order2_diverges: bool
    method: str = "analytic"


@dataclass(frozen=True)
class ProbeReport:
    order: int
    epsilons: np.ndarray
    integrals: np.ndarray
    divergence_consistent: bool
    growth_floor: float
    label: str = field(default="heuristic")

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.integrals)


def _loglip(z):
    # C*z*ln(e/z) on (0, 1]; flat at its maximum C beyond 1 (keeps it concave).
    zc = np.minimum(z, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        core = np.where(zc > 0, zc * (1.0 - np.log(np.where(zc > 0, zc, 1.0))), 0.0)
    return core


def eval_modulus(m, z):
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0) or np.any(np.isnan(z_arr)):
        raise DomainError("moduli are defined for z >= 0 only")
    if isinstance(m, ComposedModulus):
        out = m.c_r * eval_modulus(m.base, z_arr) + m.c_lin * z_arr
    elif m.family == "lipschitz":
        out = m.C * z_arr
    elif m.family == "hoelder":
        out = m.C * z_arr**m.alpha
    elif m.family == "loglipschitz":
        out = m.C * _loglip(z_arr)
    else:
        out = np.zeros_like(z_arr)
    return float(out) if np.ndim(out) == 0 else out


def modulus_violations(m, z_max=10.0, samples=2001, tol=1e-12) -> list[str]:
    """Sampled check of rho(0)=0, monotonicity and midpoint concavity.

    Accepts catalog moduli or a plain vectorized callable.
    """
    problems = []
    if isinstance(m, (Modulus, ComposedModulus)):
        rho_of = lambda z: np.asarray(eval_modulus(m, z))  # noqa: E731
    else:
        rho_of = lambda z: np.asarray(m(z), dtype=float)  # noqa: E731
    z = np.linspace(0.0, z_max, samples)
    rho = rho_of(z)
    if rho[0] != 0:
        problems.append(f"rho(0) = {rho[0]!r}, expected 0")
    if np.any(np.diff(rho) < -tol * np.maximum(1.0, np.abs(rho[1:]))):
        problems.append("not nondecreasing")
    a, b = np.meshgrid(z[::40], z[::40], indexing="ij")
    mask = a < b
    a, b = a[mask], b[mask]
    mid = rho_of((a + b) / 2)
    chord = (rho_of(a) + rho_of(b)) / 2
    bad = mid < chord - tol * np.maximum(1.0, np.abs(chord))
    if np.any(bad):
        k = int(np.argmax(bad))
        problems.append(f"not concave on [{a[k]!r}, {b[k]!r}]")
    return problems


def classify_osgood(m: Modulus) -> OsgoodVerdict:
    """Divergence of the integrals of rho^-1 and rho^-2 near zero."""
    if m.family in ("lipschitz", "zero"):
        # zero: the bound is vacuous, both flagged divergent by convention
        return OsgoodVerdict(True, True)
    if m.family == "hoelder":
        # int z^-a and int z^-2a near 0
        return OsgoodVerdict(m.alpha >= 1.0, 2 * m.alpha >= 1.0)
    # z ln(e/z): antiderivative of the reciprocal is -ln ln(e/z); and
    # z ln(e/z) <= sqrt(z) near 0 so the squared reciprocal beats 1/z
    return OsgoodVerdict(True, True)


def classify_composed(cm: ComposedModulus) -> OsgoodVerdict:
    """Verdict for ``c_r*rho + c_lin*z``.

    Near zero either the linear term dominates (and the integral diverges
    like that of 1/z) or ``c_r*rho`` dominates and the base verdict carries
    over.  Adding the linear term never destroys divergence.
    """
    if cm.c_r == 0 or cm.base.family == "zero":
        # pure linear, or identically zero (vacuous)
        return OsgoodVerdict(True, True)
    base = classify_osgood(cm.base)
    if cm.base.family == "lipschitz":
        return OsgoodVerdict(True, True)
    return OsgoodVerdict(base.order1_diverges, base.order2_diverges)


def _midpoint_adaptive(g, a, b, rtol, n0=32, n_max=2**22):
    n = n0
    prev = None
    while True:
        h = (b - a) / n
        mids = a + h * (np.arange(n) + 0.5)
        est = h * float(np.sum(g(mids)))
        if prev is not None and abs(est - prev) <= rtol * abs(est):
            return est
        if n >= n_max:
            return est
        prev = est
        n *= 2


def numeric_osgood_probe(f, order, epsilons, growth_floor=0.015, rtol=1e-10) -> ProbeReport:
    """Heuristic witness for divergence of the integral of f^-order near 0.

    Computes I(eps_k) over [eps_k, 1] by adaptive midpoint quadrature on the
    dyadic-style segments between consecutive epsilons.  The verdict is
    "divergence-consistent" when I is strictly increasing and the last
    increment is at least ``growth_floor`` times the last value, a
    scale-free criterion.  Finitely many samples cannot decide divergence.
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    eps = np.asarray(epsilons, dtype=float)
    if len(eps) < 4:
        raise DomainError("need at least four epsilons")
    if not (np.all(eps > 0) and np.all(eps < 1) and np.all(np.diff(eps) < 0)):
        raise DomainError("epsilons must be strictly decreasing in (0, 1)")

    def integrand(z):
        vals = np.asarray(f(z), dtype=float) * np.ones_like(z)
        if not np.all(vals > 0):
            bad = z[~(vals > 0)][0]
            raise DomainError(f"probe function must be positive; f({bad!r}) = {vals[~(vals > 0)][0]!r}")
        return vals ** (-order)

    edges = np.concatenate([[1.0], eps])
    pieces = [_midpoint_adaptive(integrand, lo, hi, rtol) for hi, lo in zip(edges[:-1], edges[1:])]
    integrals = np.cumsum(pieces)
    inc = np.diff(integrals)
    verdict = bool(np.all(inc > 0) and inc[-1] >= growth_floor * integrals[-1])
    return ProbeReport(order, eps, integrals, verdict, growth_floor)


def empirical_modulus(g, region_radius, sample_pairs, seed, dim=1, n_bins=64) -> GridFunction:
    """Seeded estimate of the modulus of continuity of ``g`` on a ball.

    ``g`` maps an ``(n, dim)`` array to ``(n,)`` or ``(n, m)``.  Pair gaps
    are drawn uniformly in ``(0, 2*region_radius]``; the per-bin maximum of
    ``|g(x) - g(x')|`` is turned into a nondecreasing envelope tabulated at
    the bin edges.
    """
    if sample_pairs < 1:
        raise DomainError("sample_pairs must be >= 1")
    if not region_radius > 0:
        raise DomainError("region_radius must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    max_gap = 2.0 * region_radius
    step = max_gap / n_bins
    best = np.zeros(n_bins + 1)
    accepted = 0
    while accepted < sample_pairs:
        batch = max(64, 2 * (sample_pairs - accepted))
        d = rng.standard_normal((batch, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = region_radius * rng.random(batch) ** (1.0 / dim)
        x = d * r[:, None]
        u = rng.standard_normal((batch, dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        gap = max_gap * (1.0 - rng.random(batch))
        xp = x + u * gap[:, None]
        keep = np.linalg.norm(xp, axis=1) <= region_radius
        x, xp, gap = x[keep], xp[keep], gap[keep]
        take = min(len(gap), sample_pairs - accepted)
        x, xp, gap = x[:take], xp[:take], gap[:take]
        accepted += take
        if take == 0:
            continue
        gx = np.asarray(g(x), dtype=float).reshape(take, -1)
        gxp = np.asarray(g(xp), dtype=float).reshape(take, -1)
        diff = np.linalg.norm(gx - gxp, axis=1)
        true_gap = np.linalg.norm(x - xp, axis=1)
        idx = np.clip(np.ceil(true_gap / step).astype(int), 1, n_bins)
        np.maximum.at(best, idx, diff)
    return GridFunction(max_gap, step, np.maximum.accumulate(best))
