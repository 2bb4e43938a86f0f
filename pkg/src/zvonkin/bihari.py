"""Zero case of the Bihari-LaSalle inequality as checks on grid functions.

If ``0 <= v(x) <= int_0^x phi(v(s)) ds`` with ``phi`` nondecreasing,
``phi(0) = 0`` and ``int_0 ds/phi(s)`` divergent, then ``v == 0``.
:func:`sqrt_counterexample` shows the divergence hypothesis cannot be
dropped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, PreconditionError
from .grid import GridFunction
from .moduli import Hoelder, Modulus, classify_osgood, eval_modulus


@dataclass(frozen=True)
class PhiFunction:
    """A :class:`Modulus`, or a callable declared nonnegative, nondecreasing and zero at 0.

    Bare callables cannot be classified analytically; ``attested_osgood``
    records the caller's claim that ``int_0 ds/phi`` diverges.
    """

    func: Callable | None = None
    modulus: Modulus | None = None
    attested_osgood: bool = False

    def __post_init__(self):
        if (self.func is None) == (self.modulus is None):
            raise DomainError("give exactly one of func or modulus")
        z = np.linspace(0.0, 10.0, 1001)
        vals = np.asarray(self(z))
        if vals[0] != 0:
            raise DomainError("phi(0) must be 0")
        if np.any(vals < 0) or np.any(np.diff(vals) < 0):
            raise DomainError("phi must be nonnegative and nondecreasing")

    @classmethod
    def of(cls, modulus: Modulus):
        return cls(modulus=modulus)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.modulus is not None:
            return eval_modulus(self.modulus, np.maximum(s, 0.0))
        return np.asarray(self.func(s), dtype=float) * np.ones_like(s)

    def osgood(self) -> bool:
        if self.modulus is not None:
            return classify_osgood(self.modulus).order1_diverges
        return self.attested_osgood


def integral_operator_F(v: GridFunction, phi: PhiFunction) -> GridFunction:
    """Cumulative trapezoid of ``phi(v)``, with ``F(0) = 0``."""
    g = np.asarray(phi(np.maximum(v.values, 0.0)), dtype=float)
    F = np.concatenate([[0.0], np.cumsum(v.step * (g[:-1] + g[1:]) / 2)])
    return GridFunction(v.x_max, v.step, F)


def check_hypothesis(v: GridFunction, phi: PhiFunction, slack=0.0) -> bool:
    """``-slack <= v <= F + slack`` at every node."""
    if slack < 0:
        raise DomainError("slack must be nonnegative")
    F = integral_operator_F(v, phi).values
    return bool(np.all(v.values >= -slack) and np.all(v.values <= F + slack))


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    max_value: float
    argmax_x: float
    tolerance: float
    message: str


def assert_zero_conclusion(v: GridFunction, phi: PhiFunction, slack=0.0, tolerance=None) -> CheckReport:
    """Check ``max v <= tolerance`` given the lemma's hypotheses.

    Unmet hypotheses raise :class:`PreconditionError` rather than failing
    the check.  The default tolerance is ``max(10*step, 10*slack)``.
    """
    if not check_hypothesis(v, phi, slack):
        F = integral_operator_F(v, phi).values
        k = int(np.argmax(v.values - F))
        raise PreconditionError(f"integral inequality fails at x={v.nodes[k]!r}: v={v.values[k]!r} > F={F[k]!r}")
    if not phi.osgood():
        what = phi.modulus.describe() if phi.modulus is not None else "phi"
        raise PreconditionError(f"int_0 ds/phi(s) converges for {what}; the lemma does not apply")
    tol = max(10 * v.step, 10 * slack) if tolerance is None else tolerance
    k = int(np.argmax(v.values))
    vmax = float(v.values[k])
    if vmax <= tol:
        return CheckReport(True, vmax, float(v.nodes[k]), tol, "v vanishes within tolerance")
    return CheckReport(
        False, vmax, float(v.nodes[k]), tol,
        f"v({v.nodes[k]!r}) = {vmax!r} exceeds {tol!r}: either the slack is miscalibrated "
        "for this grid or the hypotheses are violated beyond the slack",
    )


def sqrt_counterexample(x_max, step):
    """``v(x) = x^2/4`` solves ``v' = sqrt(v)`` from 0, a nonzero solution when
    ``phi = sqrt`` fails the divergence hypothesis."""
    if not (x_max > 0 and step > 0):
        raise DomainError("x_max and step must be positive")
    v = GridFunction.from_callable(lambda x: x * x / 4, x_max, step)
    return v, PhiFunction.of(Hoelder(1.0, 0.5))
