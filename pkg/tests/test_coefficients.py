import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zvonkin.catalog import build_problem, names
from zvonkin.coefficients import (DiagonalDiffusion, ScalarField1D, SDEProblem, VectorField, evaluate_drift,
                                  validate_problem, zero_vector_field)
from zvonkin.errors import DomainError, ValidationError
from zvonkin.moduli import Lipschitz, Zero

ONE = ScalarField1D(lambda x: np.ones_like(x), 1.0)
ZERO = ScalarField1D(lambda x: np.zeros_like(x), 0.0)
SIGN = ScalarField1D(np.sign, 1.0, (0.0,))


def unit_diffusion(d):
    return DiagonalDiffusion([ONE] * d, 1.0, 1.0, Zero())


def const_field(vec):
    vec = np.asarray(vec, dtype=float)
    return VectorField(lambda x: np.broadcast_to(vec, x.shape).copy(), float(np.linalg.norm(vec)), Zero())


def test_identity_problem_validates():
    p = SDEProblem(1, unit_diffusion(1), [ZERO], zero_vector_field(1), [0.0])
    assert validate_problem(p).ok


def test_degenerate_diffusion_flagged_at_zero():
    clipped = ScalarField1D(lambda x: np.maximum(x, 0.0), 10.0)
    p = SDEProblem(1, DiagonalDiffusion([clipped], 0.1, 10.0, Lipschitz(1)), [ZERO], zero_vector_field(1), [0.0])
    report = validate_problem(p)
    assert "non-degeneracy" in report.kinds()
    (v,) = [v for v in report.violations if v.kind == "non-degeneracy"]
    assert v.coordinate == 0
    assert np.any(v.points == 0.0)


def test_two_dim_sign_drift_with_constant_b1_validates():
    p = SDEProblem(2, unit_diffusion(2), [SIGN, SIGN], const_field([1.0, 1.0]), [0.0, 0.0])
    assert p.b1.bound == pytest.approx(math.sqrt(2))
    assert validate_problem(p).ok


def test_understated_bound_is_reported():
    p = SDEProblem(1, unit_diffusion(1), [ScalarField1D(lambda x: 2 * np.sin(x), 1.0)], zero_vector_field(1), [0.0])
    assert "b0-bound" in validate_problem(p).kinds()


def test_non_finite_evaluator_is_hard_failure():
    bad = ScalarField1D(lambda x: np.where(x > 3, np.nan, 0.0), 0.0)
    p = SDEProblem(1, unit_diffusion(1), [bad], zero_vector_field(1), [0.0])
    with pytest.raises(ValidationError) as exc:
        validate_problem(p)
    assert exc.value.coordinate == 0
    assert exc.value.point > 3


def test_mismatched_lengths_rejected():
    with pytest.raises(DomainError):
        SDEProblem(2, unit_diffusion(2), [ZERO], zero_vector_field(2), [0.0, 0.0])


def test_breakpoints_must_increase():
    with pytest.raises(DomainError):
        ScalarField1D(np.sign, 1.0, (1.0, 0.0))


@pytest.mark.parametrize("name", names())
def test_catalog_entries_validate(name):
    assert validate_problem(build_problem(name)).ok


def test_drift_examples():
    p = SDEProblem(1, unit_diffusion(1), [ZERO], zero_vector_field(1), [0.0])
    assert np.array_equal(evaluate_drift(p, [3.7]), [0.0])

    p = SDEProblem(1, unit_diffusion(1), [SIGN], const_field([0.5]), [0.0])
    assert evaluate_drift(p, [-2.0])[0] == -0.5

    swap = VectorField(lambda x: x[..., ::-1].copy(), 10.0, Lipschitz(1))
    p = SDEProblem(2, unit_diffusion(2), [ONE, ONE], swap, [0.0, 0.0])
    assert evaluate_drift(p, [3.0, 4.0]).tolist() == [5.0, 4.0]


def test_drift_rejects_non_finite_result():
    p = SDEProblem(1, unit_diffusion(1), [ScalarField1D(lambda x: np.where(x > 0, np.inf, 0.0), 1.0)], zero_vector_field(1), [0.0])
    with pytest.raises(ValidationError):
        evaluate_drift(p, [1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=2, max_size=2), st.floats(-20, 20))
def test_drift_componentwise_when_b1_vanishes(x, other):
    p = build_problem("sign-drift", dim=2)
    a = evaluate_drift(p, x)
    b = evaluate_drift(p, [x[0], other])
    assert a[0] == b[0]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2))
def test_drift_bound(x):
    p = build_problem("mixed")
    assert np.linalg.norm(evaluate_drift(p, x)) <= p.drift_bound + 1e-12
