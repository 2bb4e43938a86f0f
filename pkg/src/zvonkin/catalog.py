"""Built-in coefficient sets.

The catalog is code: callables do not serialize portably, so configs refer
to entries by name.  Register new entries with :func:`register`.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .coefficients import DiagonalDiffusion, ScalarField1D, SDEProblem, VectorField, zero_vector_field
from .errors import DomainError
from .moduli import Hoelder, Lipschitz, Zero

_CATALOG: dict[str, tuple[Callable, str]] = {}


def register(name, description):
    def deco(fn):
        _CATALOG[name] = (fn, description)
        return fn

    return deco


def _unit_sigma(dim):
    one = ScalarField1D(lambda x: np.ones_like(x), 1.0)
    return DiagonalDiffusion([one] * dim, 1.0, 1.0, Zero())


def _x0(x0, dim):
    return np.zeros(dim) if x0 is None else x0


@register("identity", "b0 = 0, sigma = 1, b1 = 0")
def identity(dim=1, x0=None, **_):
    zero = ScalarField1D(lambda x: np.zeros_like(x), 0.0)
    return SDEProblem(dim, _unit_sigma(dim), [zero] * dim, zero_vector_field(dim), _x0(x0, dim), "identity")


@register("constant-drift", "b0 = c (parameter c, default 1), sigma = 1, b1 = 0")
def constant_drift(dim=1, x0=None, c=1.0, **_):
    c = float(c)
    b0 = ScalarField1D(lambda x: np.full_like(x, c), abs(c))
    return SDEProblem(dim, _unit_sigma(dim), [b0] * dim, zero_vector_field(dim), _x0(x0, dim), f"constant-drift {c!r}")


@register("sign-drift", "b0 = sign(x) (sign(0) = 0), sigma = 1, b1 = 0")
def sign_drift(dim=1, x0=None, **_):
    b0 = ScalarField1D(np.sign, 1.0, breakpoints=(0.0,))
    return SDEProblem(dim, _unit_sigma(dim), [b0] * dim, zero_vector_field(dim), _x0(x0, dim), "sign-drift")


def _holder_sigma(x):
    return 1.0 + np.minimum(np.sqrt(np.abs(x)), 1.0) / 2


@register("holder-half-sigma", "sigma = 1 + min(|x|^(1/2), 1)/2, b0 = 0, b1 = 0")
def holder_half_sigma(dim=1, x0=None, **_):
    sig = ScalarField1D(_holder_sigma, 1.5)
    diff = DiagonalDiffusion([sig] * dim, 1.0, 1.5, Hoelder(0.5, 0.5))
    zero = ScalarField1D(lambda x: np.zeros_like(x), 0.0)
    return SDEProblem(dim, diff, [zero] * dim, zero_vector_field(dim), _x0(x0, dim), "holder-half-sigma")


def _mixed_b1(x):
    out = np.empty_like(x)
    out[..., 0] = 0.5 * np.sin(x[..., 1])
    out[..., 1] = 0.5 * np.cos(x[..., 0])
    return out


@register("mixed", "d = 2: b0 = sign per coordinate, sigma = 1, b1(x) = (sin x2, cos x1)/2")
def mixed(dim=2, x0=None, **_):
    if dim != 2:
        raise DomainError("the 'mixed' entry is two-dimensional")
    b0 = ScalarField1D(np.sign, 1.0, breakpoints=(0.0,))
    b1 = VectorField(_mixed_b1, math.sqrt(2) / 2, Lipschitz(0.5))
    return SDEProblem(2, _unit_sigma(2), [b0, b0], b1, _x0(x0, 2), "mixed")


def names():
    return sorted(_CATALOG)


def describe(name):
    return _CATALOG[name][1]


def default_dim(name):
    return 2 if name == "mixed" else 1


def build_problem(name, **params) -> SDEProblem:
    try:
        fn, _ = _CATALOG[name]
    except KeyError:
        raise DomainError(f"unknown catalog entry {name!r}; known: {', '.join(names())}") from None
    return fn(**params)
