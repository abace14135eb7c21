import math

import numpy as np
import pytest

import drpacbayes as dp
from drpacbayes.bound import ObjectiveValue, evaluate_objective


class QuadraticObjective:
    """|mu - target|^2 + log_sigma^2, for exercising the optimizer alone."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)
        self.dim = self.target.size + 1

    def value(self, x):
        mu, ls = x[:-1], x[-1]
        return float((mu - self.target) @ (mu - self.target) + ls * ls)

    def value_and_grad(self, x):
        mu, ls = x[:-1], x[-1]
        grad = np.concatenate([2.0 * (mu - self.target), [2.0 * ls]])
        return ObjectiveValue(value=self.value(x), breakdown=None,
                              gradient=grad)


def test_quadratic_converges():
    target = np.array([1.0, -2.0, 0.5, 3.0])
    objective = QuadraticObjective(target)
    init = dp.GaussianPosterior(mu=np.zeros(4), log_sigma=1.0)
    config = dp.OptimizerConfig(max_iterations=50, gradient_tolerance=1e-9)
    posterior, trace = dp.fit_posterior(objective, init, config)
    assert len(trace.records) <= 50
    assert np.max(np.abs(posterior.mu - target)) <= 1e-8
    assert abs(posterior.log_sigma) <= 1e-8
    assert trace.termination_reason == "gradient_tolerance"


def test_objective_sequence_nonincreasing():
    objective = QuadraticObjective(np.array([2.0, 2.0]))
    init = dp.GaussianPosterior(mu=np.array([-3.0, 5.0]), log_sigma=0.7)
    _, trace = dp.fit_posterior(objective, init, dp.OptimizerConfig())
    values = [trace.initial_objective] + [r.objective for r in trace.records]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_nonfinite_init_is_reported():
    class BadObjective:
        def value(self, x):
            return math.inf

        def value_and_grad(self, x):
            return ObjectiveValue(value=math.inf, breakdown=None,
                                  gradient=np.zeros(x.size))

    init = dp.GaussianPosterior(mu=np.zeros(2), log_sigma=0.0)
    with pytest.raises(ValueError, match="not finite"):
        dp.fit_posterior(BadObjective(), init, dp.OptimizerConfig())


@pytest.fixture(scope="module")
def bench_objective(wmap, basis, gaussian_model):
    prior = dp.GaussianPrior(1.0)
    sample = dp.sample_training(gaussian_model, 32, seed=3)
    plan = dp.MonteCarloPlan(m=8, dim=basis.dim, seed=4)
    handle = dp.make_objective(wmap, prior, sample, gaussian_model,
                               rho=0.08, delta=0.05, plan=plan)
    return handle, prior, sample, plan


def test_fit_improves_over_baseline(basis, bench_objective):
    handle, *_ = bench_objective
    init = dp.initialize_posterior(basis, "zeros", 0.1)
    config = dp.OptimizerConfig(max_iterations=60)
    posterior, trace = dp.fit_posterior(handle, init, config)
    assert trace.final_objective < trace.initial_objective
    assert trace.termination_reason in ("gradient_tolerance", "max_iterations",
                                        "line_search_failure")
    assert len(trace.records) <= 60


def test_fit_is_deterministic(basis, bench_objective):
    handle, *_ = bench_objective
    init = dp.initialize_posterior(basis, "zeros", 0.1)
    config = dp.OptimizerConfig(max_iterations=25)
    p1, t1 = dp.fit_posterior(handle, init, config)
    p2, t2 = dp.fit_posterior(handle, init, config)
    np.testing.assert_array_equal(p1.mu, p2.mu)
    assert p1.log_sigma == p2.log_sigma
    assert [r.objective for r in t1.records] == [r.objective for r in t2.records]
    assert [r.step for r in t1.records] == [r.step for r in t2.records]


def test_reported_posterior_is_best_accepted(basis, bench_objective):
    handle, *_ = bench_objective
    init = dp.initialize_posterior(basis, "zeros", 0.1)
    posterior, trace = dp.fit_posterior(handle, init,
                                        dp.OptimizerConfig(max_iterations=40))
    best = min(r.objective for r in trace.records)
    assert handle.value(posterior.as_vector()) == best


def test_final_breakdown_reproducible(wmap, basis, gaussian_model,
                                      bench_objective):
    """Recomputing the certificate at the returned posterior with the same
    frozen noise matches the trace's final row exactly."""
    handle, prior, sample, plan = bench_objective
    init = dp.initialize_posterior(basis, "zeros", 0.1)
    posterior, trace = dp.fit_posterior(handle, init,
                                        dp.OptimizerConfig(max_iterations=40))
    fresh = evaluate_objective(wmap, posterior, prior, sample, gaussian_model,
                               0.08, 0.05, plan, with_grad=False)
    final = trace.records[trace.best_iteration - 1]
    assert fresh.value == final.objective
    assert fresh.breakdown.gibbs_empirical_risk == final.gibbs_risk
    assert fresh.breakdown.complexity == final.complexity


def test_initialize_posterior_zeros(basis):
    posterior = dp.initialize_posterior(basis, "zeros", 0.1)
    assert np.all(posterior.mu == 0.0)
    assert posterior.sigma == pytest.approx(0.1, rel=1e-15)


def test_initialize_posterior_baseline_recovery(basis, wmap):
    posterior = dp.initialize_posterior(basis, "zeros", 0.1)
    np.testing.assert_array_equal(wmap(posterior.mu), wmap.m0)


def test_initialize_posterior_lqr_is_feasible_and_helps(plant, basis, wmap):
    posterior = dp.initialize_posterior(basis, "lqr", 0.1)
    phi_x, phi_u = dp.realize(basis, posterior.mu)
    con = dp.build_constraints(plant)
    residual = con.fx @ phi_x + con.fu @ phi_u - np.eye(plant.n_w)
    assert np.max(np.abs(residual)) <= 1e-10
    assert dp.lipschitz_certificate(wmap, posterior.mu) < \
        dp.lipschitz_certificate(wmap, np.zeros(basis.dim))


def test_initialize_posterior_mean_length_check(basis):
    with pytest.raises(ValueError, match="length"):
        dp.initialize_posterior(basis, "zeros", 0.1, mean=np.zeros(basis.dim + 3))


def test_trace_csv_roundtrip(tmp_path, basis, bench_objective):
    handle, *_ = bench_objective
    init = dp.initialize_posterior(basis, "zeros", 0.1)
    _, trace = dp.fit_posterior(handle, init,
                                dp.OptimizerConfig(max_iterations=10))
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iteration,objective,grad_norm,gibbs_risk,w1_penalty,complexity,step"
    assert len(lines) == len(trace.records) + 1
