"""Acceptance suite: one test per release criterion, stated tolerances only.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. The two experiment sweeps are shared session fixtures; the full
module is sized to finish well inside the slowest criterion's budget.
"""

import json
import math
import time

import numpy as np
import pytest

import drpacbayes as dp
from drpacbayes.bound import evaluate_objective
from drpacbayes.pipeline import run_sweep

from conftest import bench_config_dict
from test_sls import nullity_oracle

WORKERS = 2


def report(line):
    print(f"\nACCEPTANCE {line}")


# -- shared experiment sweeps -------------------------------------------------

def read_sweep(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


@pytest.fixture(scope="session")
def validity_sweep(tmp_path_factory):
    """20-seed bound-validity experiment at n in {16, 64, 256}."""
    raw = bench_config_dict(n_list=[16, 64, 256], rho_list=[0.0, 0.08],
                            sweep={"n_seeds": 20},
                            test={"n_test": 10000, "m_posterior": 24})
    config = dp.parse_config(raw)
    out = tmp_path_factory.mktemp("validity")
    started = time.perf_counter()
    info = run_sweep(config, base_seed=2024, out_dir=out, workers=WORKERS)
    elapsed = time.perf_counter() - started
    return read_sweep(info["sweep"]), elapsed


@pytest.fixture(scope="session")
def scaling_sweep(tmp_path_factory):
    """10-seed sweep across n in {16, 32, 64, 128, 256}."""
    raw = bench_config_dict(n_list=[16, 32, 64, 128, 256],
                            rho_list=[0.0, 0.08], sweep={"n_seeds": 10},
                            test={"n_test": 4000, "m_posterior": 24})
    config = dp.parse_config(raw)
    out = tmp_path_factory.mktemp("scaling")
    info = run_sweep(config, base_seed=777, out_dir=out, workers=WORKERS)
    return read_sweep(info["sweep"])


# -- criteria ------------------------------------------------------------------

def test_criterion_01_achievability_suite(plant, constraints, basis):
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    eye = np.eye(plant.n_w)
    worst = 0.0
    for _ in range(100):
        theta = rng.standard_normal(basis.dim)
        phi_x, phi_u = dp.realize(basis, theta)
        residual = constraints.fx @ phi_x + constraints.fu @ phi_u - eye
        worst = max(worst, float(np.max(np.abs(residual))))
        assert np.all(phi_u[~basis.causal_mask] == 0.0)
    elapsed = time.perf_counter() - started
    assert worst <= 1e-10
    assert elapsed < 5.0
    report(f"criterion 1 PASS: achievability residual {worst:.2e} over 100 "
           f"random coordinates, causal mask exact, {elapsed:.2f}s")


def test_criterion_02_rollout_equivalence(plant, basis, weights, wmap):
    rng = np.random.default_rng(202)
    worst_state = 0.0
    worst_cost = 0.0
    for _ in range(100):
        theta = rng.standard_normal(basis.dim)
        w = 0.05 * rng.standard_normal(plant.n_w)
        phi_x, phi_u = dp.realize(basis, theta)
        inputs = (phi_u @ w).reshape(plant.T, plant.n_u)
        traj = dp.rollout(plant, inputs, w)
        worst_state = max(worst_state, float(np.max(np.abs(traj.x - phi_x @ w))))
        cost = dp.trajectory_cost(weights, traj)
        lifted = float(np.linalg.norm(wmap(theta) @ w))
        worst_cost = max(worst_cost,
                         abs(cost - lifted) / max(1.0, abs(lifted)))
    assert worst_state <= 1e-10
    assert worst_cost <= 1e-10
    report(f"criterion 2 PASS: rollout deviation {worst_state:.2e}, "
           f"cost deviation {worst_cost:.2e} over 100 random pairs")


def test_criterion_03_dimension_check(plant, constraints, basis):
    assert basis.dim == 110
    assert basis.n_w == 22
    oracle = nullity_oracle(plant, constraints)
    assert oracle == 110
    report(f"criterion 3 PASS: d = {basis.dim}, disturbance dimension = "
           f"{basis.n_w}, rank oracle = {oracle}")


def test_criterion_04_certificate_validity(wmap, basis, gaussian_model):
    rng = np.random.default_rng(404)
    # Lipschitz inequality on 1000 random triples, zero violations
    violations = 0
    for _ in range(1000):
        theta = rng.standard_normal(basis.dim)
        lip = dp.lipschitz_certificate(wmap, theta)
        m = wmap(theta)
        w1 = 0.1 * rng.standard_normal(22)
        w2 = 0.1 * rng.standard_normal(22)
        lhs = abs(float(np.linalg.norm(m @ w1)) - float(np.linalg.norm(m @ w2)))
        rhs = lip * float(np.linalg.norm(w1 - w2))
        violations += lhs > rhs * (1 + 1e-12) + 1e-15
    assert violations == 0

    # empirical tail of the centered loss against the claimed proxy
    theta = 0.3 * rng.standard_normal(basis.dim)
    sigma = dp.subgaussian_proxy(wmap, theta, gaussian_model)
    draws = dp.draw_disturbances(gaussian_model, 100_000,
                                 np.random.default_rng(405))
    losses = np.linalg.norm(wmap(theta) @ draws.T, axis=0)
    centered = losses - losses.mean()
    tail_report = []
    for t in (1.0, 2.0, 3.0):
        bound = min(1.0, 2.0 * math.exp(-t * t / 2.0))
        fraction = float(np.mean(np.abs(centered) > t * sigma))
        slack = 3.0 * math.sqrt(bound * (1.0 - bound) / losses.size)
        assert fraction <= bound + slack
        tail_report.append(f"t={t:g}: {fraction:.4f} <= {bound:.4f}")

    # shared-template identity between the two proxies
    worst = 0.0
    for radius in (0.1, 1.0, 4.0):
        theta = rng.standard_normal(basis.dim)
        gaussian = dp.DisturbanceModel.gaussian(
            np.zeros(22), (radius / 2.0) ** 2 * np.eye(22))
        bounded = dp.DisturbanceModel.bounded(radius=radius, dim=22)
        a = dp.subgaussian_proxy(wmap, theta, gaussian)
        b = dp.subgaussian_proxy(wmap, theta, bounded)
        worst = max(worst, abs(a - b))
        assert abs(a - b) <= 1e-12 * max(1.0, b)
    report("criterion 4 PASS: 0/1000 Lipschitz violations; tail "
           + "; ".join(tail_report) + f"; template identity gap {worst:.2e}")


def test_criterion_05_gradient_suite(wmap, basis, gaussian_model):
    started = time.perf_counter()
    prior = dp.GaussianPrior(1.0)
    sample = dp.sample_training(gaussian_model, 32, seed=50)
    plan = dp.MonteCarloPlan(m=8, dim=basis.dim, seed=51)
    handle = dp.make_objective(wmap, prior, sample, gaussian_model,
                               rho=0.08, delta=0.05, plan=plan)
    rng = np.random.default_rng(505)
    h = 1e-6
    worst = 0.0
    for _ in range(10):
        # certificate gradients at a random coordinate
        theta = 0.3 * rng.standard_normal(basis.dim)
        for which, model in (("lipschitz", None), ("sigma", gaussian_model)):
            grad, degenerate = dp.certificate_gradient(wmap, theta, which, model)
            assert not degenerate
            probe = rng.standard_normal(basis.dim)
            probe /= np.linalg.norm(probe)

            def cert(t):
                if which == "lipschitz":
                    return dp.lipschitz_certificate(wmap, t)
                return dp.subgaussian_proxy(wmap, t, model)

            fd = (cert(theta + h * probe) - cert(theta - h * probe)) / (2 * h)
            err = abs(fd - float(grad @ probe)) / max(1.0, abs(fd))
            worst = max(worst, err)
            assert err <= 1e-4

        # full objective gradient at a random posterior
        x = np.concatenate([0.1 * rng.standard_normal(basis.dim),
                            [math.log(0.1) + 0.3 * rng.normal()]])
        result = handle.value_and_grad(x)
        probe = rng.standard_normal(x.size)
        probe /= np.linalg.norm(probe)
        fd = (handle.value(x + h * probe) - handle.value(x - h * probe)) / (2 * h)
        err = abs(fd - float(result.gradient @ probe)) / max(1.0, abs(fd))
        worst = max(worst, err)
        assert err <= 1e-4
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report(f"criterion 5 PASS: worst relative gradient error {worst:.2e} "
           f"at 10 points, {elapsed:.1f}s")


def test_criterion_06_transport_mechanism(wmap, basis, gaussian_model):
    rho = 0.08
    rng = np.random.default_rng(606)
    posterior = dp.GaussianPosterior(mu=np.zeros(basis.dim),
                                     log_sigma=math.log(0.3))
    n_eval = 2000
    draws = dp.draw_disturbances(gaussian_model, n_eval,
                                 np.random.default_rng(607))
    checks = 0
    for _ in range(50):
        theta = posterior.mu + posterior.sigma * rng.standard_normal(basis.dim)
        m = wmap(theta)
        lip = dp.lipschitz_certificate(wmap, theta)
        nominal_losses = np.linalg.norm(m @ draws.T, axis=0)
        nominal = float(nominal_losses.mean())
        se_nominal = float(nominal_losses.std(ddof=1)) / math.sqrt(n_eval)
        for _ in range(10):
            direction = rng.standard_normal(22)
            direction /= np.linalg.norm(direction)
            rho_shift = rho * rng.random()
            shifted_losses = np.linalg.norm(
                m @ (draws + rho_shift * direction).T, axis=0)
            shifted = float(shifted_losses.mean())
            se = math.hypot(se_nominal,
                            float(shifted_losses.std(ddof=1)) / math.sqrt(n_eval))
            assert shifted <= nominal + rho * lip + 3.0 * se
            checks += 1
    assert checks == 500
    report("criterion 6 PASS: shifted risk within nominal + rho * L(theta) "
           "+ 3 SE on 50 posterior samples x 10 directions")


def test_criterion_07_bound_validity_experiment(validity_sweep):
    rows, elapsed = validity_sweep
    assert elapsed < 900.0
    summary = []
    for n in (16, 64, 256):
        robust = [r for r in rows
                  if int(r["n"]) == n and float(r["rho"]) == 0.08]
        vanilla = [r for r in rows
                   if int(r["n"]) == n and float(r["rho"]) == 0.0]
        assert len(robust) == 20 and len(vanilla) == 20
        robust_holds = sum(float(r["total_bound"]) >= float(r["test_risk_shifted"])
                           for r in robust)
        vanilla_violated = sum(
            float(r["total_bound"]) < float(r["test_risk_shifted"])
            for r in vanilla)
        assert robust_holds >= 19, f"n={n}: robust bound held {robust_holds}/20"
        assert vanilla_violated > 10, \
            f"n={n}: vanilla bound violated only {vanilla_violated}/20"
        summary.append(f"n={n}: robust {robust_holds}/20, "
                       f"vanilla violated {vanilla_violated}/20")
    report(f"criterion 7 PASS ({elapsed:.0f}s): " + "; ".join(summary))


def test_criterion_08_complexity_scaling(scaling_sweep):
    # formula identity with a fixed numerator
    target = 50.0
    a = dp.complexity_term(2.0, target - math.log(101 / 0.05), 101, 0.05)
    b = dp.complexity_term(2.0, target - math.log(401 / 0.05), 401, 0.05)
    assert a / b == 2.0

    n_grid = [16, 32, 64, 128, 256]
    groups = {}
    for row in scaling_sweep:
        assert math.isfinite(float(row["total_bound"]))
        key = (row["rho"], row["seed"])
        groups.setdefault(key, {})[int(row["n"])] = float(row["complexity"])
    decreasing = 0
    for key, series in groups.items():
        values = [series[n] for n in n_grid]
        decreasing += all(x > y for x, y in zip(values, values[1:]))
    fraction = decreasing / len(groups)
    assert fraction >= 0.9, f"complexity decreased in {fraction:.0%} of seeds"
    report(f"criterion 8 PASS: fixed-numerator ratio exactly 2; complexity "
           f"strictly decreasing for {decreasing}/{len(groups)} seed series")


def test_total_bound_trend_with_more_data(scaling_sweep):
    """Companion qualitative check: the seed-averaged optimized bound keeps
    falling as the training set grows."""
    for rho in ("0.0", "0.08"):
        means = []
        for n in (16, 32, 64, 128):
            totals = [float(r["total_bound"]) for r in scaling_sweep
                      if int(r["n"]) == n and r["rho"] == rho]
            means.append(np.mean(totals))
        assert all(a > b for a, b in zip(means, means[1:])), (rho, means)


def test_criterion_09_sweep_determinism(tmp_path):
    raw = bench_config_dict(n_list=[8, 16], rho_list=[0.0, 0.05],
                            mc_samples=6, optimizer={"max_iterations": 15},
                            test={"n_test": 400, "m_posterior": 6},
                            sweep={"n_seeds": 2})
    config = dp.parse_config(raw)
    run_sweep(config, base_seed=5, out_dir=tmp_path / "a", workers=WORKERS)
    run_sweep(config, base_seed=5, out_dir=tmp_path / "b", workers=WORKERS)
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    b = (tmp_path / "b" / "sweep.csv").read_bytes()
    assert a == b
    manifest_a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    manifest_b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert manifest_a["runs"][0]["rep_seeds"] == manifest_b["runs"][0]["rep_seeds"]
    report("criterion 9 PASS: repeated sweep runs are byte-identical")


def test_criterion_10_pointer_to_frontend():
    """Plot fidelity is asserted by the rendering package's own suite."""
    report("criterion 10: covered by frontend/test (vitest); run "
           "`npm test` inside frontend/")
