import itertools
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zvonkin.errors import DomainError
from zvonkin.moduli import (ComposedModulus, Hoelder, Lipschitz, LogLipschitz, Zero, classify_composed,
                            classify_osgood, empirical_modulus, eval_modulus, modulus_violations,
                            numeric_osgood_probe)

FAMILY = [Lipschitz(1), Lipschitz(3), Hoelder(1, 0.3), Hoelder(1, 0.5), Hoelder(1, 0.7), LogLipschitz(1)]


def test_eval_examples():
    assert eval_modulus(Lipschitz(2), 0.5) == 1.0
    assert eval_modulus(Hoelder(1, 0.5), 0.25) == 0.5
    assert eval_modulus(LogLipschitz(1), 1.0) == 1.0
    assert eval_modulus(Zero(), 3.0) == 0.0
    assert eval_modulus(ComposedModulus(Hoelder(1, 0.5), 2, 3), 0.25) == 2 * 0.5 + 3 * 0.25


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        eval_modulus(Lipschitz(1), -1e-9)


def test_bad_parameters_rejected():
    with pytest.raises(DomainError):
        Hoelder(1, 1.0)
    with pytest.raises(DomainError):
        Lipschitz(0)
    with pytest.raises(DomainError):
        ComposedModulus(Lipschitz(1), -1, 0)


def test_loglipschitz_is_flat_beyond_one():
    m = LogLipschitz(2)
    assert eval_modulus(m, 5.0) == eval_modulus(m, 1.0) == 2.0


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["lipschitz", "hoelder", "loglipschitz"]), st.floats(0.01, 100), st.floats(0.01, 0.99))
def test_family_members_are_concave_moduli(family, C, alpha):
    from zvonkin.moduli import Modulus

    m = Modulus(family, C, alpha if family == "hoelder" else None)
    assert modulus_violations(m) == []


def test_violations_detected():
    assert any("concave" in msg for msg in modulus_violations(lambda z: z**2))
    assert any("nondecreasing" in msg for msg in modulus_violations(lambda z: np.sin(z)))
    assert any("rho(0)" in msg for msg in modulus_violations(lambda z: z + 1))


# hand-calculus oracle: int_0 z^-p dz diverges iff p >= 1
def _power_oracle(alpha, order):
    return order * alpha >= 1


@pytest.mark.parametrize("alpha", [0.3, 0.4, 0.5, 0.7])
def test_hoelder_classification(alpha):
    v = classify_osgood(Hoelder(1, alpha))
    assert (v.order1_diverges, v.order2_diverges) == (_power_oracle(alpha, 1), _power_oracle(alpha, 2))


def test_classification_examples():
    assert classify_osgood(Lipschitz(3)) == classify_osgood(Lipschitz(1))
    v = classify_osgood(Lipschitz(3))
    assert (v.order1_diverges, v.order2_diverges, v.method) == (True, True, "analytic")
    v = classify_osgood(LogLipschitz(1))
    assert (v.order1_diverges, v.order2_diverges) == (True, True)
    v = classify_osgood(Zero())
    assert (v.order1_diverges, v.order2_diverges) == (True, True)


def test_composed_examples():
    v = classify_composed(ComposedModulus(Lipschitz(1), 5, 7))
    assert (v.order1_diverges, v.order2_diverges) == (True, True)
    v = classify_composed(ComposedModulus(Hoelder(1, 0.5), 2, 3))
    assert (v.order1_diverges, v.order2_diverges) == (False, True)
    v = classify_composed(ComposedModulus(Zero(), 0, 1))
    assert (v.order1_diverges, v.order2_diverges) == (True, True)


def test_composition_never_destroys_divergence():
    for m, c_r, c_lin in itertools.product(FAMILY + [Zero()], [0, 1, 10], [0, 1, 10]):
        base = classify_osgood(m)
        comp = classify_composed(ComposedModulus(m, c_r, c_lin))
        assert comp.order1_diverges or not base.order1_diverges
        assert comp.order2_diverges or not base.order2_diverges


def test_probe_examples():
    eps = 2.0 ** -np.arange(2, 11)
    r = numeric_osgood_probe(lambda z: z, 1, eps)
    np.testing.assert_allclose(r.integrals, np.log(1 / eps), rtol=1e-9)
    assert r.divergence_consistent
    assert r.label == "heuristic"

    eps = 2.0 ** -np.arange(2, 17)
    r = numeric_osgood_probe(np.sqrt, 1, eps)
    np.testing.assert_allclose(r.integrals, 2 * (1 - np.sqrt(eps)), rtol=1e-9)
    assert not r.divergence_consistent

    r = numeric_osgood_probe(np.sqrt, 2, eps)
    np.testing.assert_allclose(r.integrals, np.log(1 / eps), rtol=1e-9)
    assert r.divergence_consistent


def test_probe_preconditions():
    with pytest.raises(DomainError):
        numeric_osgood_probe(np.sqrt, 1, [0.5, 0.25, 0.125])
    with pytest.raises(DomainError):
        numeric_osgood_probe(np.sqrt, 1, [0.5, 0.125, 0.25, 0.0625])
    with pytest.raises(DomainError):
        numeric_osgood_probe(lambda z: z - 0.1, 1, 2.0 ** -np.arange(1, 6))


def test_probe_agrees_on_family():
    eps = 2.0 ** -np.arange(2, 17)
    for m in FAMILY:
        v = classify_osgood(m)
        for order in (1, 2):
            expected = v.order1_diverges if order == 1 else v.order2_diverges
            assert numeric_osgood_probe(m, order, eps).divergence_consistent == expected, (m, order)


@pytest.mark.slow
def test_probe_agrees_on_composed_family():
    # near-linear terms delay the asymptotic regime, so probe deeper with a lower floor
    eps = 2.0 ** -np.arange(2, 31)
    for m, c_r, c_lin in itertools.product(FAMILY, [0, 1, 10], [0, 1, 10]):
        if c_r == c_lin == 0:
            continue
        cm = ComposedModulus(m, c_r, c_lin)
        v = classify_composed(cm)
        for order in (1, 2):
            expected = v.order1_diverges if order == 1 else v.order2_diverges
            got = numeric_osgood_probe(cm, order, eps, growth_floor=0.008, rtol=1e-8).divergence_consistent
            assert got == expected, (m, c_r, c_lin, order)


def test_empirical_modulus_identity():
    env = empirical_modulus(lambda x: x, 1.0, 20000, seed=3)
    z = env.nodes
    assert np.all(np.diff(env.values) >= 0)
    assert np.all(env.values <= z + 1e-12)
    # within one bin width except where long gaps are too rare to sample
    mask = z <= 1.5
    assert np.all(env.values[mask] >= z[mask] - 2 * env.step)


def test_empirical_modulus_constant_and_seeded():
    env = empirical_modulus(lambda x: np.full(len(x), 4.0), 2.0, 500, seed=1)
    assert np.all(env.values == 0)
    a = empirical_modulus(np.sin, 1.0, 300, seed=9)
    b = empirical_modulus(np.sin, 1.0, 300, seed=9)
    assert np.array_equal(a.values, b.values)


def test_empirical_modulus_sqrt_is_hoelder_half():
    env = empirical_modulus(lambda x: np.sqrt(np.abs(x)), 1.0, 20000, seed=5)
    bound = eval_modulus(Hoelder(1, 0.5), env.nodes)
    assert np.all(env.values <= bound + 1e-12)


def test_empirical_modulus_rejects_bad_args():
    with pytest.raises(DomainError):
        empirical_modulus(np.sin, 1.0, 0, seed=0)
