"""Experiment orchestration: synthesis cache, single cells, and sweeps.

A cell is one (training size, robustness radius, seed) triple: draw data,
freeze the Monte Carlo noise, fit the posterior, certify it, and estimate
nominal and shifted test risks. Cells are pure functions of the
configuration and an integer seed, so sweeps are reproducible byte for
byte regardless of worker count or execution order.
"""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bound import (CertificateBreakdown, GaussianPosterior, MonteCarloPlan,
                    TrainingSample, evaluate_objective, make_objective)
from .certificates import WeightedMapBasis, build_weighted_basis
from .config import ExperimentConfig, parse_config
from .disturbances import sample_training, shifted_model, test_risk
from .lti import LtiPlant
from .optimizer import OptimizationTrace, fit_posterior, initialize_posterior
from .sls import SlsBasis, build_constraints, causal_basis, realize

SWEEP_COLUMNS = ["n", "rho", "gibbs_risk", "w1_penalty", "complexity",
                 "total_bound", "test_risk_nominal", "test_risk_shifted",
                 "seed", "config_hash"]


@dataclass(frozen=True)
class Synthesis:
    basis: SlsBasis
    wmap: WeightedMapBasis
    achievability_residual: float


@dataclass
class CellResult:
    n: int
    rho: float
    seed: int
    breakdown: CertificateBreakdown
    test_nominal: float
    test_nominal_se: float
    test_shifted: float
    test_shifted_se: float
    posterior: GaussianPosterior
    trace: OptimizationTrace
    sample: TrainingSample

    def sweep_row(self, config_hash: str) -> list:
        b = self.breakdown
        return [self.n, fmt(self.rho), fmt(b.gibbs_empirical_risk),
                fmt(b.wasserstein_penalty), fmt(b.complexity),
                fmt(b.total_bound), fmt(self.test_nominal),
                fmt(self.test_shifted), self.seed, config_hash]


def fmt(value: float) -> str:
    """Shortest exact decimal representation, locale independent."""
    return repr(float(value))


_SYNTHESIS_CACHE: dict[str, Synthesis] = {}


def build_synthesis(config: ExperimentConfig) -> Synthesis:
    """Build (or fetch cached) closed-loop basis and weighted map family."""
    key = config.config_hash
    cached = _SYNTHESIS_CACHE.get(key)
    if cached is not None:
        return cached
    constraints = build_constraints(config.plant)
    basis = causal_basis(config.plant, constraints)
    wmap = build_weighted_basis(basis, config.weights)
    residual = _achievability_residual(config.plant, basis)
    synthesis = Synthesis(basis=basis, wmap=wmap, achievability_residual=residual)
    _SYNTHESIS_CACHE[key] = synthesis
    return synthesis


def _achievability_residual(plant: LtiPlant, basis: SlsBasis) -> float:
    """Worst-case constraint residual over a few seeded coordinates."""
    constraints = build_constraints(plant)
    rng = np.random.default_rng(0)
    worst = 0.0
    for scale in (0.0, 1.0, 1.0, 1.0):
        theta = scale * rng.standard_normal(basis.dim)
        phi_x, phi_u = realize(basis, theta)
        residual = constraints.fx @ phi_x + constraints.fu @ phi_u - np.eye(basis.n_w)
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst


def rep_seed(base_seed: int, rep: int) -> int:
    """Stable per-replication seed; shared across every (n, rho) cell of the
    replication so methods and sample sizes are compared on matched draws."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(rep,))
    return int(ss.generate_state(1)[0])


def run_cell(config: ExperimentConfig, n: int, rho: float, seed: int) -> CellResult:
    """Fit, certify, and evaluate one experiment cell."""
    synthesis = build_synthesis(config)
    basis, wmap = synthesis.basis, synthesis.wmap

    root = np.random.SeedSequence(seed)
    data_ss, mc_ss, test_ss = root.spawn(3)

    sample = sample_training(config.model, n, data_ss)
    plan = MonteCarloPlan(m=config.mc_samples, dim=basis.dim, seed=mc_ss)
    objective = make_objective(wmap, config.prior, sample, config.model,
                               rho, config.delta, plan)
    init = initialize_posterior(basis, "zeros", config.init_sigma)
    posterior, trace = fit_posterior(objective, init, config.optimizer)
    final = evaluate_objective(wmap, posterior, config.prior, sample,
                               config.model, rho, config.delta, plan,
                               with_grad=False)

    deployed = shifted_model(config.model, config.shift, wmap, posterior.mu)
    test_seed = test_ss.generate_state(1)[0]
    nominal = test_risk(wmap, posterior, config.model, config.n_test,
                        config.m_posterior, int(test_seed))
    shifted = test_risk(wmap, posterior, deployed, config.n_test,
                        config.m_posterior, int(test_seed), shift=config.shift)
    return CellResult(
        n=n, rho=rho, seed=seed,
        breakdown=final.breakdown,
        test_nominal=nominal.mean_test_risk, test_nominal_se=nominal.std_error,
        test_shifted=shifted.mean_test_risk, test_shifted_se=shifted.std_error,
        posterior=posterior, trace=trace, sample=sample,
    )


# -- worker-side config cache -------------------------------------------------

_WORKER_CONFIGS: dict[str, ExperimentConfig] = {}


def _run_cell_task(raw_json: str, n: int, rho: float, seed: int) -> list:
    config = _WORKER_CONFIGS.get(raw_json)
    if config is None:
        config = parse_config(json.loads(raw_json))
        _WORKER_CONFIGS[raw_json] = config
    result = run_cell(config, n, rho, seed)
    return result.sweep_row(config.config_hash)


def run_sweep(config: ExperimentConfig, base_seed: int, out_dir,
              workers: int | None = None) -> dict:
    """Run every (n, rho, seed) cell and write sweep.csv plus a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [rep_seed(base_seed, rep) for rep in range(config.n_seeds)]
    tasks = [(n, rho, seed)
             for n in config.n_list
             for rho in config.rho_list
             for seed in seeds]

    raw_json = json.dumps(config.raw, sort_keys=True)
    started = time.time()
    if workers is None:
        workers = config.workers
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                _run_cell_task,
                [raw_json] * len(tasks),
                [t[0] for t in tasks],
                [t[1] for t in tasks],
                [t[2] for t in tasks],
            ))
    else:
        rows = [_run_cell_task(raw_json, *task) for task in tasks]
    elapsed = time.time() - started

    rows.sort(key=lambda r: (int(r[0]), float(r[1]), int(r[8])))
    sweep_path = out / "sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        writer.writerows(rows)

    manifest_path = append_manifest(out, config, {
        "command": "sweep",
        "base_seed": base_seed,
        "rep_seeds": seeds,
        "outputs": [sweep_path.name],
        "wall_clock_seconds": elapsed,
    })
    return {"sweep": sweep_path, "manifest": manifest_path, "rows": len(rows)}


def append_manifest(out_dir, config: ExperimentConfig, entry: dict) -> Path:
    """Record a command invocation and its output files in manifest.json."""
    path = Path(out_dir) / "manifest.json"
    if path.exists():
        with open(path) as fh:
            manifest = json.load(fh)
        if manifest.get("config_hash") != config.config_hash:
            manifest = {"config_hash": config.config_hash, "runs": []}
    else:
        manifest = {"config_hash": config.config_hash, "runs": []}
    manifest["tool_version"] = __version__
    manifest.setdefault("runs", []).append(entry)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# -- single-run artifact files ------------------------------------------------

def rho_tag(rho: float) -> str:
    return f"{rho:g}"


def write_posterior_csv(path, posterior: GaussianPosterior) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["parameter", "value"])
        for i, v in enumerate(posterior.mu):
            writer.writerow([f"mu_{i}", fmt(v)])
        writer.writerow(["log_sigma", fmt(posterior.log_sigma)])


def read_posterior_csv(path, expected_dim: int) -> GaussianPosterior:
    mu = {}
    log_sigma = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["parameter", "value"]:
            raise ValueError(f"{path}: not a posterior file (bad header {header})")
        for name, value in reader:
            if name == "log_sigma":
                log_sigma = float(value)
            elif name.startswith("mu_"):
                mu[int(name[3:])] = float(value)
            else:
                raise ValueError(f"{path}: unexpected parameter {name!r}")
    if log_sigma is None:
        raise ValueError(f"{path}: missing log_sigma row")
    if sorted(mu) != list(range(expected_dim)):
        raise ValueError(
            f"{path}: posterior has {len(mu)} mean entries, expected "
            f"{expected_dim} for this configuration")
    mean = np.array([mu[i] for i in range(expected_dim)])
    return GaussianPosterior(mu=mean, log_sigma=log_sigma)


def write_sample_csv(path, sample: TrainingSample) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"w_{i}" for i in range(sample.disturbances.shape[1])])
        for row in sample.disturbances:
            writer.writerow([fmt(v) for v in row])


def read_sample_csv(path) -> TrainingSample:
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    return TrainingSample(disturbances=np.atleast_2d(data))


def write_breakdown_csv(path, breakdown: CertificateBreakdown, seed: int,
                        config_hash: str, method: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "rho", "delta", "method", "gibbs_risk",
                         "w1_penalty", "complexity", "total_bound", "seed",
                         "config_hash"])
        writer.writerow([breakdown.n, fmt(breakdown.rho), fmt(breakdown.delta),
                         method, fmt(breakdown.gibbs_empirical_risk),
                         fmt(breakdown.wasserstein_penalty),
                         fmt(breakdown.complexity), fmt(breakdown.total_bound),
                         seed, config_hash])
