"""Distributionally robust PAC-Bayes certificates for finite-horizon
linear controllers.

The package builds the affine family of achievable causal closed loops for
a discrete-time LTI plant, computes operator-norm concentration and
robustness certificates for the weighted closed-loop map, optimizes a
Gaussian posterior over controllers against the resulting
transport-robust generalization bound, and validates the certificate
under disturbance-distribution shift.
"""

__version__ = "0.1.0"

from .bound import (CertificateBreakdown, GaussianPosterior, GaussianPrior,
                    MonteCarloPlan, TrainingSample, complexity_term,
                    empirical_risk, empirical_risk_gradient, kl_gaussians,
                    make_objective, robust_objective)
from .certificates import (CertificateValues, DisturbanceModel,
                           WeightedMapBasis, build_weighted_basis,
                           certificate_gradient, certificate_values,
                           lipschitz_certificate, operator_norm,
                           subgaussian_proxy)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .disturbances import (ShiftSpec, TestReport, draw_disturbances,
                           sample_training, shifted_model, test_risk)
from .lti import CostWeights, LtiPlant, Trajectory, rollout, trajectory_cost
from .optimizer import (OptimizationTrace, OptimizerConfig, fit_posterior,
                        initialize_posterior)
from .sls import (LiftedConstraints, SlsBasis, build_constraints, causal_basis,
                  causal_input_mask, open_loop_baseline, realize)

__all__ = [
    "CertificateBreakdown", "CertificateValues", "ConfigError", "CostWeights",
    "DisturbanceModel", "ExperimentConfig", "GaussianPosterior",
    "GaussianPrior", "LiftedConstraints", "LtiPlant", "MonteCarloPlan",
    "OptimizationTrace", "OptimizerConfig", "ShiftSpec", "SlsBasis",
    "TestReport", "Trajectory", "TrainingSample", "WeightedMapBasis",
    "build_constraints", "build_weighted_basis", "causal_basis",
    "causal_input_mask", "certificate_gradient", "certificate_values",
    "complexity_term", "draw_disturbances", "empirical_risk",
    "empirical_risk_gradient", "fit_posterior", "initialize_posterior",
    "kl_gaussians", "lipschitz_certificate", "load_config", "make_objective",
    "open_loop_baseline", "operator_norm", "parse_config", "realize",
    "robust_objective", "rollout", "sample_training", "shifted_model",
    "subgaussian_proxy", "test_risk", "trajectory_cost",
]
