"""Command-line front end: synthesize | optimize | sweep | certify | evaluate.

Every command loads one JSON experiment configuration; the documented flags
override the corresponding config keys. Outputs are plain CSV files (RFC
4180, '.' decimal) plus a manifest listing them, and every run is a
deterministic function of (config, seed).
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .bound import MonteCarloPlan, evaluate_objective
from .config import ConfigError, load_config
from .disturbances import ShiftSpec, sample_training, shifted_model, test_risk
from .pipeline import (append_manifest, build_synthesis, fmt,
                       read_posterior_csv, read_sample_csv, rho_tag, run_cell,
                       run_sweep, write_breakdown_csv, write_posterior_csv,
                       write_sample_csv)


def method_label(rho: float) -> str:
    return "vanilla" if rho == 0.0 else "robust"


def cmd_synthesize(args) -> int:
    config = load_config(args.config)
    synthesis = build_synthesis(config)
    basis = synthesis.basis
    rows = synthesis.wmap.m0.shape[0]
    print(f"free parameters d = {basis.dim}")
    print(f"disturbance dimension = {basis.n_w}")
    print(f"state response: {basis.n_w} x {basis.n_w}, "
          f"input response: {basis.T * basis.n_u} x {basis.n_w}, "
          f"weighted map: {rows} x {basis.n_w}")
    print(f"achievability residual (max over seeded coordinates) = "
          f"{synthesis.achievability_residual:.3e}")
    return 0


def cmd_optimize(args) -> int:
    config = load_config(args.config)
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else config.seed

    started = time.time()
    result = run_cell(config, args.n, args.rho, seed)
    elapsed = time.time() - started

    tag = f"{args.n}_{rho_tag(args.rho)}"
    posterior_path = out / f"posterior_{tag}.csv"
    trace_path = out / f"trace_{tag}.csv"
    breakdown_path = out / f"breakdown_{tag}.csv"
    sample_path = out / f"sample_{tag}.csv"
    write_posterior_csv(posterior_path, result.posterior)
    result.trace.write_csv(trace_path)
    write_breakdown_csv(breakdown_path, result.breakdown, seed,
                        config.config_hash, method_label(args.rho))
    write_sample_csv(sample_path, result.sample)
    append_manifest(out, config, {
        "command": "optimize",
        "method": method_label(args.rho),
        "n": args.n,
        "rho": args.rho,
        "seed": seed,
        "outputs": [posterior_path.name, trace_path.name,
                    breakdown_path.name, sample_path.name],
        "wall_clock_seconds": elapsed,
    })

    b = result.breakdown
    print(f"method = {method_label(args.rho)} (rho = {args.rho:g}), "
          f"n = {args.n}, seed = {seed}")
    print(f"iterations = {len(result.trace.records)}, "
          f"termination = {result.trace.termination_reason}")
    print(f"gibbs_risk = {fmt(b.gibbs_empirical_risk)}, "
          f"w1_penalty = {fmt(b.wasserstein_penalty)}, "
          f"complexity = {fmt(b.complexity)}, "
          f"total_bound = {fmt(b.total_bound)}")
    print(f"test risk: nominal = {fmt(result.test_nominal)}, "
          f"shifted = {fmt(result.test_shifted)}")
    print(f"wrote {posterior_path}, {trace_path}, {breakdown_path}, {sample_path}")
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    out = Path(args.out or config.output_dir)
    info = run_sweep(config, args.seed, out, workers=args.workers)
    print(f"wrote {info['rows']} rows to {info['sweep']}")
    print(f"manifest: {info['manifest']}")
    return 0


def _plan_for(config, basis_dim: int, seed: int):
    root = np.random.SeedSequence(seed)
    data_ss, mc_ss, _ = root.spawn(3)
    return data_ss, MonteCarloPlan(m=config.mc_samples, dim=basis_dim, seed=mc_ss)


def cmd_certify(args) -> int:
    config = load_config(args.config)
    synthesis = build_synthesis(config)
    posterior = read_posterior_csv(args.posterior, synthesis.basis.dim)
    seed = args.seed if args.seed is not None else config.seed
    data_ss, plan = _plan_for(config, synthesis.basis.dim, seed)
    if args.sample:
        sample = read_sample_csv(args.sample)
    else:
        sample = sample_training(config.model, args.n, data_ss)
    if sample.disturbances.shape[1] != synthesis.basis.n_w:
        raise ConfigError(
            f"sample has trajectories of length {sample.disturbances.shape[1]}, "
            f"expected {synthesis.basis.n_w}")

    result = evaluate_objective(synthesis.wmap, posterior, config.prior, sample,
                                config.model, args.rho, config.delta, plan,
                                with_grad=False)
    b = result.breakdown
    print(f"gibbs_risk = {fmt(b.gibbs_empirical_risk)}")
    print(f"w1_penalty = {fmt(b.wasserstein_penalty)}")
    print(f"complexity = {fmt(b.complexity)}")
    print(f"total_bound = {fmt(b.total_bound)}")
    print(f"With probability at least {1.0 - config.delta:g} over the draw of "
          f"the {sample.n} training trajectories, the expected closed-loop "
          f"cost of a controller drawn from this posterior is at most "
          f"{b.total_bound:.6g} under every deployment distribution within "
          f"transport distance {args.rho:g} of the training distribution.")
    return 0


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    synthesis = build_synthesis(config)
    posterior = read_posterior_csv(args.posterior, synthesis.basis.dim)
    seed = args.seed if args.seed is not None else config.seed
    root = np.random.SeedSequence(seed)
    _, _, test_ss = root.spawn(3)
    test_seed = int(test_ss.generate_state(1)[0])

    radius = args.shift_radius if args.shift_radius is not None else config.shift.radius
    spec = ShiftSpec(radius=radius, direction=config.shift.direction)
    deployed = shifted_model(config.model, spec, synthesis.wmap, posterior.mu)
    nominal = test_risk(synthesis.wmap, posterior, config.model, config.n_test,
                        config.m_posterior, test_seed)
    shifted = test_risk(synthesis.wmap, posterior, deployed, config.n_test,
                        config.m_posterior, test_seed, shift=spec)

    rows = [
        (args.n, args.rho, 0.0, method_label(args.rho),
         nominal.mean_test_risk, nominal.std_error),
        (args.n, args.rho, radius, method_label(args.rho),
         shifted.mean_test_risk, shifted.std_error),
    ]
    print("n,rho,rho_shift,method,mean_test_risk,std_error,n_test")
    for n, rho, rho_shift, method, mean, se in rows:
        print(f"{n},{fmt(rho)},{fmt(rho_shift)},{method},{fmt(mean)},"
              f"{fmt(se)},{config.n_test}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"evaluation_{args.n}_{rho_tag(args.rho)}.csv"
        with open(path, "w", newline="") as fh:
            fh.write("n,rho,rho_shift,method,mean_test_risk,std_error,n_test\n")
            for n, rho, rho_shift, method, mean, se in rows:
                fh.write(f"{n},{fmt(rho)},{fmt(rho_shift)},{method},{fmt(mean)},"
                         f"{fmt(se)},{config.n_test}\n")
        append_manifest(out, config, {
            "command": "evaluate", "n": args.n, "rho": args.rho, "seed": seed,
            "outputs": [path.name],
        })
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drpacbayes",
        description="Robust certificate synthesis and validation for "
                    "finite-horizon linear controllers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="build the closed-loop basis and "
                                          "report its dimensions")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("optimize", help="fit the posterior for one (n, rho) cell")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="run the full (n, rho, seed) grid")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("certify", help="recompute the certificate of a stored "
                                       "posterior")
    p.add_argument("--config", required=True)
    p.add_argument("--posterior", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sample", default=None,
                   help="stored training-sample CSV; omit to draw a fresh "
                        "sample from the seed")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("evaluate", help="estimate nominal and shifted test "
                                        "risk of a stored posterior")
    p.add_argument("--config", required=True)
    p.add_argument("--posterior", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--shift-radius", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
