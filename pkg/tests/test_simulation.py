import dataclasses

import numpy as np
import pytest

from zvonkin.catalog import build_problem
from zvonkin.coefficients import VectorField
from zvonkin.errors import DomainError, IntegrationError
from zvonkin.moduli import Zero
from zvonkin.simulation import (BrownianPath, coarsen_brownian, coupled_pair_run, euler_maruyama,
                                perturbed_pair_run, sample_brownian, sample_brownian_batch, solve_problem,
                                transform_consistency_run)


def test_sample_is_deterministic():
    a = sample_brownian(1, 1.0, 0.5, 42)
    b = sample_brownian(1, 1.0, 0.5, 42)
    assert a.increments.shape == (2, 1)
    assert a.increments.tobytes() == b.increments.tobytes()
    assert sample_brownian(1, 1.0, 0.5, 43).increments.tobytes() != a.increments.tobytes()


def test_batch_matches_individual_streams():
    batch = sample_brownian_batch(2, 1.0, 0.25, 7, 5)
    for r in range(5):
        assert np.array_equal(batch.increments[:, r], sample_brownian(2, 1.0, 0.25, 7 + r).increments)


def test_sample_domain_errors():
    for args in [(1, 0.0, 0.1, 0), (1, 1.0, -0.1, 0), (1, 1.0, 0.3, 0), (1, 1.0, 0.1, -1)]:
        with pytest.raises(DomainError):
            sample_brownian(*args)


@pytest.mark.slow
def test_terminal_value_clt():
    n = 100_000
    w = sample_brownian_batch(1, 1.0, 0.5, 0, n)
    total = w.increments.sum(axis=0)[:, 0]
    assert abs(total.mean()) <= 4 * np.sqrt(1.0 / n)
    assert abs(total.var() - 1.0) <= 4 * np.sqrt(2.0 / n)


def test_coarsen_sums_consecutive():
    inc = np.array([[1.0], [2.0], [4.0], [8.0]])
    p = BrownianPath(1, 1.0, 0.25, inc, 0)
    assert coarsen_brownian(p, 2).increments[:, 0].tolist() == [3.0, 12.0]
    assert coarsen_brownian(p, 4).increments[:, 0].tolist() == [15.0]
    assert coarsen_brownian(p, 2).base_step == 0.5
    with pytest.raises(DomainError):
        coarsen_brownian(p, 3)


def test_coarsening_is_exact_in_any_order():
    w = sample_brownian(3, 2.0, 2.0**-10, 5)
    direct = coarsen_brownian(w, 16)
    twice = coarsen_brownian(coarsen_brownian(w, 4), 4)
    assert np.array_equal(direct.increments, twice.increments)
    assert np.array_equal(coarsen_brownian(w, w.n_steps).increments[0], np.cumsum(w.increments, axis=0)[-1])


def test_coarse_variance():
    w = sample_brownian_batch(1, 1.0, 2.0**-6, 100, 2000)
    c = coarsen_brownian(w, 8)
    v = c.increments.var()
    se = np.sqrt(2 / c.increments.size) * 8 * 2.0**-6
    assert abs(v - 8 * 2.0**-6) <= 4 * se


def test_em_deterministic_ode():
    w = sample_brownian(1, 1.0, 2.0**-4, 0)
    sol = euler_maruyama(lambda x: np.full_like(x, 0.75), [lambda x: np.zeros_like(x)], [0.0], w)
    assert sol.states[-1, 0] == 0.75
    assert sol.times[0] == 0 and sol.times[-1] == 1.0


def test_em_pure_brownian_is_sum_of_increments():
    w = sample_brownian(2, 1.0, 2.0**-8, 3)
    sol = euler_maruyama(lambda x: np.zeros_like(x), [lambda x: np.ones_like(x)] * 2, [0.0, 0.0], w)
    assert np.array_equal(sol.states[1:], np.cumsum(w.increments, axis=0))


def test_em_reports_blowup_step():
    w = sample_brownian(1, 1.0, 0.25, 0)
    with pytest.raises(IntegrationError) as exc:
        euler_maruyama(lambda x: np.where(x > 0.5, np.inf, 1.0), [lambda x: np.zeros_like(x)], [0.0], w)
    assert exc.value.step == 4


def test_em_diagonal_noise():
    # coordinate 0 must not see coordinate 1's state through the diffusion
    p = build_problem("sign-drift", dim=2)
    w = sample_brownian(2, 1.0, 2.0**-6, 1)
    a = solve_problem(p, w, x0=[0.3, -1.0])
    b = solve_problem(p, w, x0=[0.3, 2.5])
    assert np.array_equal(a.states[:, 0], b.states[:, 0])


def test_em_strong_error_decreases_ou():
    drift = lambda x: -x  # noqa: E731
    diff = [lambda x: np.ones_like(x)]
    errors = []
    for h in (2.0**-4, 2.0**-6, 2.0**-8):
        w = sample_brownian_batch(1, 1.0, h / 16, 0, 100)
        ref = euler_maruyama(drift, diff, [1.0], w)
        coarse = euler_maruyama(drift, diff, [1.0], coarsen_brownian(w, 16))
        errors.append(np.median(np.abs(coarse.states[-1] - ref.states[-1])))
    assert errors[0] > errors[1] > errors[2]


def test_coupled_zero_gap_cases():
    p = build_problem("sign-drift")
    g = coupled_pair_run(p, 1.0, 2.0**-5, 2.0**-5, 10, 0)
    assert np.all(g.per_replication == 0)
    g = coupled_pair_run(build_problem("identity"), 1.0, 2.0**-3, 2.0**-9, 20, 0)
    assert np.all(g.per_replication == 0) and g.sup_gap == 0


def test_gap_statistics_invariants():
    g = coupled_pair_run(build_problem("mixed"), 1.0, 2.0**-4, 2.0**-6, 30, 4)
    assert g.replications == len(g.per_replication) == 30
    assert g.sup_gap >= g.terminal_gap >= 0
    assert np.all(g.per_replication >= g.terminal_per_replication)


def test_coupled_gap_shrinks_sign_drift():
    p = build_problem("sign-drift")
    med = [coupled_pair_run(p, 1.0, h, 2.0**-12, 100, 0).median_sup_gap for h in (2.0**-4, 2.0**-6, 2.0**-8)]
    assert med[0] > med[1] > med[2]


def test_perturbed_pair():
    g = perturbed_pair_run(build_problem("identity"), 1.0, 2.0**-6, 1e-3, 10, 0)
    # additive noise, zero drift: the gap is the initial shift throughout
    np.testing.assert_allclose(g.per_replication, 1e-3, rtol=1e-9)
    assert g.label == "x0-perturbed"


def test_runs_are_bit_reproducible():
    p = build_problem("mixed")
    a = coupled_pair_run(p, 1.0, 2.0**-4, 2.0**-6, 20, 9)
    b = coupled_pair_run(p, 1.0, 2.0**-4, 2.0**-6, 20, 9)
    assert a.per_replication.tobytes() == b.per_replication.tobytes()


def test_consistency_identity_exactly_zero_with_any_b1(transforms):
    base = build_problem("identity")
    b1 = VectorField(lambda x: 0.5 * np.sin(3 * x), 0.5, Zero())
    p = dataclasses.replace(base, b1=b1)
    from zvonkin.scale import build_transform

    t = build_transform(p)
    w = sample_brownian_batch(1, 1.0, 2.0**-8, 0, 50)
    r = transform_consistency_run(p, t, w, 2.0**-6)
    assert np.all(r.discrepancy == 0)
    assert r.clamp_count == 0 and not r.excess_clamping


def test_consistency_trend_constant_drift(transforms):
    p, t = transforms("constant-drift", c=1.0)
    w = sample_brownian_batch(1, 1.0, 2.0**-10, 0, 100)
    med = [transform_consistency_run(p, t, w, h).median_discrepancy for h in (2.0**-6, 2.0**-8, 2.0**-10)]
    assert med[0] > med[1] > med[2]


def test_consistency_step_must_be_multiple():
    p = build_problem("identity")
    from zvonkin.scale import build_transform

    t = build_transform(p, R_max=5.0, grid_step=0.01)
    w = sample_brownian(1, 1.0, 2.0**-4, 0)
    with pytest.raises(DomainError):
        transform_consistency_run(p, t, w, 2.0**-6)


def test_excess_clamping_flagged():
    p = build_problem("constant-drift", c=1.0, x0=[0.9])
    from zvonkin.scale import build_transform

    # a tiny tabulation radius forces the transformed path out of range
    t = build_transform(p, R_max=1.0, grid_step=1e-3)
    w = sample_brownian_batch(1, 0.25, 2.0**-6, 0, 20)
    with pytest.raises(Exception):
        # the original path leaves [-1, 1] as well, so u(X) cannot be evaluated
        transform_consistency_run(p, t, w, 2.0**-6)
    t2 = build_transform(p, R_max=1.0, grid_step=1e-3)
    from zvonkin.simulation import solve_transformed

    sol = solve_transformed(t2, w, t2.u(p.x0))
    assert sol.clamp_count > 0
