import numpy as np
import pytest

import drpacbayes as dp

# Benchmark plant: double integrator with sampling coupling 0.1, horizon 10.
BENCH_A = [[1.0, 0.1], [0.0, 1.0]]
BENCH_B = [[0.0], [1.0]]
BENCH_T = 10
BENCH_Q = [[1.0, 0.0], [0.0, 0.1]]
BENCH_R = [[0.01]]
BENCH_STD = 0.02


@pytest.fixture(scope="session")
def plant():
    return dp.LtiPlant(A=BENCH_A, B=BENCH_B, T=BENCH_T)


@pytest.fixture(scope="session")
def constraints(plant):
    return dp.build_constraints(plant)


@pytest.fixture(scope="session")
def basis(plant, constraints):
    return dp.causal_basis(plant, constraints)


@pytest.fixture(scope="session")
def weights():
    return dp.CostWeights(q_step=BENCH_Q, r_step=BENCH_R, T=BENCH_T)


@pytest.fixture(scope="session")
def wmap(basis, weights):
    return dp.build_weighted_basis(basis, weights)


@pytest.fixture(scope="session")
def gaussian_model(plant):
    return dp.DisturbanceModel.gaussian(mean=np.zeros(plant.n_w),
                                        cov=BENCH_STD ** 2 * np.eye(plant.n_w))


def bench_config_dict(**overrides):
    """Benchmark experiment configuration as a raw dict."""
    raw = {
        "plant": {"A": BENCH_A, "B": BENCH_B, "T": BENCH_T},
        "weights": {"Q": BENCH_Q, "R": BENCH_R},
        "disturbance": {"kind": "gaussian", "mean": 0.0, "std": BENCH_STD},
        "prior_sigma": 1.0,
        "delta": 0.05,
        "rho_list": [0.0, 0.08],
        "n_list": [16, 32, 64, 128, 256],
        "mc_samples": 24,
        "init_sigma": 0.1,
        "optimizer": {"max_iterations": 150},
        "shift": {"radius": 0.08, "direction": "adversarial"},
        "test": {"n_test": 4000, "m_posterior": 24},
        "sweep": {"n_seeds": 10},
    }
    raw.update(overrides)
    return raw
