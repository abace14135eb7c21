"""Experiment configuration file: schema, validation, and hashing.

The configuration is one JSON document with matrices as nested row-major
arrays. The hash is taken over the canonical serialization (sorted keys,
compact separators), so key order in the file does not matter.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .certificates import DisturbanceModel
from .bound import GaussianPrior
from .disturbances import ShiftSpec
from .lti import CostWeights, LtiPlant
from .optimizer import OptimizerConfig


class ConfigError(ValueError):
    """Raised for a malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    plant: LtiPlant
    weights: CostWeights
    model: DisturbanceModel
    prior: GaussianPrior
    delta: float
    rho_list: tuple[float, ...]
    n_list: tuple[int, ...]
    mc_samples: int
    init_sigma: float
    optimizer: OptimizerConfig
    shift: ShiftSpec
    n_test: int
    m_posterior: int
    n_seeds: int
    seed: int
    output_dir: str
    workers: int
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def config_hash(self) -> str:
        return hash_config(self.raw)


def hash_config(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _require(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(f"missing config key {key!r}")
    return raw[key]


def _build_model(section: dict, n_w: int) -> DisturbanceModel:
    kind = _require(section, "kind")
    if kind == "gaussian":
        mean = section.get("mean", 0.0)
        if np.isscalar(mean):
            mean = np.full(n_w, float(mean))
        else:
            mean = np.asarray(mean, dtype=float).reshape(-1)
            if mean.size != n_w:
                raise ConfigError(
                    f"disturbance.mean must have {n_w} entries, got {mean.size}")
        if "std" in section and "cov" in section:
            raise ConfigError("disturbance takes either 'std' or 'cov', not both")
        if "std" in section:
            std = float(section["std"])
            if std < 0:
                raise ConfigError(f"disturbance.std must be nonnegative, got {std}")
            cov = std ** 2 * np.eye(n_w)
        elif "cov" in section:
            cov = np.asarray(section["cov"], dtype=float)
            if cov.shape != (n_w, n_w):
                raise ConfigError(
                    f"disturbance.cov must be {n_w} x {n_w}, got {cov.shape}")
        else:
            raise ConfigError("gaussian disturbance needs 'std' or 'cov'")
        return DisturbanceModel.gaussian(mean=mean, cov=cov)
    if kind == "bounded":
        return DisturbanceModel.bounded(radius=float(_require(section, "radius")),
                                        dim=n_w)
    raise ConfigError(f"disturbance.kind must be 'gaussian' or 'bounded', got {kind!r}")


def parse_config(raw: dict) -> ExperimentConfig:
    try:
        plant_raw = _require(raw, "plant")
        plant = LtiPlant(A=np.asarray(_require(plant_raw, "A"), dtype=float),
                         B=np.asarray(_require(plant_raw, "B"), dtype=float),
                         T=int(_require(plant_raw, "T")))
        weights_raw = _require(raw, "weights")
        weights = CostWeights(q_step=np.asarray(_require(weights_raw, "Q"), dtype=float),
                              r_step=np.asarray(_require(weights_raw, "R"), dtype=float),
                              T=plant.T)
        if weights.q_step.shape[0] != plant.n_x:
            raise ConfigError(
                f"weights.Q must be {plant.n_x} x {plant.n_x}, "
                f"got {weights.q_step.shape}")
        if weights.r_step.shape[0] != plant.n_u:
            raise ConfigError(
                f"weights.R must be {plant.n_u} x {plant.n_u}, "
                f"got {weights.r_step.shape}")
        model = _build_model(_require(raw, "disturbance"), plant.n_w)

        delta = float(_require(raw, "delta"))
        if not 0.0 < delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {delta}")
        rho_list = tuple(float(r) for r in _require(raw, "rho_list"))
        if any(r < 0 for r in rho_list):
            raise ConfigError("rho values must be nonnegative")
        n_list = tuple(int(n) for n in _require(raw, "n_list"))
        if any(n < 2 for n in n_list):
            raise ConfigError("training sizes must be >= 2")

        optimizer_raw = raw.get("optimizer", {})
        optimizer = OptimizerConfig(**optimizer_raw)

        shift_raw = raw.get("shift", {"radius": 0.0})
        shift = ShiftSpec(radius=float(shift_raw.get("radius", 0.0)),
                          direction=shift_raw.get("direction", "adversarial"))

        test_raw = raw.get("test", {})
        sweep_raw = raw.get("sweep", {})
        config = ExperimentConfig(
            plant=plant,
            weights=weights,
            model=model,
            prior=GaussianPrior(sigma_prior=float(raw.get("prior_sigma", 1.0))),
            delta=delta,
            rho_list=rho_list,
            n_list=n_list,
            mc_samples=int(raw.get("mc_samples", 24)),
            init_sigma=float(raw.get("init_sigma", 0.1)),
            optimizer=optimizer,
            shift=shift,
            n_test=int(test_raw.get("n_test", 10000)),
            m_posterior=int(test_raw.get("m_posterior", 24)),
            n_seeds=int(sweep_raw.get("n_seeds", 10)),
            seed=int(raw.get("seed", 0)),
            output_dir=str(raw.get("output_dir", "out")),
            workers=int(raw.get("workers", 0)),
            raw=raw,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if config.mc_samples < 1:
        raise ConfigError("mc_samples must be >= 1")
    if config.init_sigma <= 0:
        raise ConfigError("init_sigma must be positive")
    if config.n_test < 1 or config.m_posterior < 1:
        raise ConfigError("test.n_test and test.m_posterior must be >= 1")
    if config.n_seeds < 1:
        raise ConfigError("sweep.n_seeds must be >= 1")
    return config


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return parse_config(raw)
