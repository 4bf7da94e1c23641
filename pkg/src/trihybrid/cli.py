"""Command-line entry point: ``trihybrid <subcommand>``."""

import argparse
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from .baselines import solve_manifold
from .exceptions import InvalidConfigError
from .geometry import build_dma_geometry, channel_from_paths, propagation_gains, steering_vector
from .harness import (
    NU_GRID,
    TRADEOFF_GRID,
    ScenarioConfig,
    draw_realization,
    emit,
    run_scenario,
    sweep_nu,
    sweep_tradeoff,
)
from .model import IsacProblem
from .optimizer import solve


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _load_config(args):
    config = ScenarioConfig.from_json(args.config) if args.config else ScenarioConfig()
    overrides = {}
    for key in ("n_realizations", "base_seed", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "architectures", None):
        overrides["architectures"] = tuple(args.architectures.split(","))
    if getattr(args, "timing", False):
        overrides["record_timing"] = True
    if getattr(args, "no_pool", False):
        overrides["pool_weights"] = False
    return replace(config, **overrides) if overrides else config


def _write(text, path):
    if path is None:
        sys.stdout.write(text)


def cmd_run(args):
    config = _load_config(args)
    if args.delta_c:
        config = replace(config, delta_c=_floats(args.delta_c))
    _write(emit(run_scenario(config), args.format, args.out), args.out)
    return 0


def cmd_sweep_tradeoff(args):
    config = _load_config(args)
    grid = _floats(args.grid) if args.grid else TRADEOFF_GRID
    _write(emit(sweep_tradeoff(config, grid), args.format, args.out), args.out)
    return 0


def cmd_sweep_nu(args):
    config = _load_config(args)
    delta = _floats(args.delta_c) if args.delta_c else (0.075,)
    config = replace(config, delta_c=delta)
    _write(emit(sweep_nu(config, _ints(args.values)), args.format, args.out), args.out)
    return 0


def cmd_convergence(args):
    config = _load_config(args)
    real = draw_realization(config, args.realization)
    geo = build_dma_geometry(config.n_waveguides, config.elements_per_waveguide, config.carrier_frequency_hz)
    q = propagation_gains(geo, config.attenuation_per_meter, config.wavenumber_per_meter)
    h = channel_from_paths(geo, real.paths, config.noise_power_mw).normalized_channel
    g = steering_vector(geo, real.target)
    problem = IsacProblem.from_delta_c(h, g, args.delta_c, config.power_budget_mw)
    options = replace(config.solver, seed=real.seed)
    sol = (solve if args.method == "mm" else solve_manifold)(problem, geo, q, options)
    text = sol.trace.to_csv(args.trace_out)
    if args.trace_out is None:
        sys.stdout.write(text)
    summary = {
        "seed": real.seed,
        "delta_c": args.delta_c,
        "method": args.method,
        "iterations": sol.n_iter,
        "converged": sol.converged,
        "monotone": sol.trace.is_monotone(),
        "final_ratio": sol.ratio,
    }
    sys.stderr.write(json.dumps(summary) + "\n")
    return 0


def cmd_verify(args):
    from .oracle import GridSearchSpec, exhaustive_phase_search, invariant_suite
    from .optimizer import SolverOptions

    report = invariant_suite(args.instances, seed=args.seed)
    lines = report.lines()
    ok = report.ok
    # Tiny-instance optimality against the exhaustive phase grid.
    rng = np.random.default_rng(args.seed)
    geo = build_dma_geometry(2, 2, 28e9)
    q = propagation_gains(geo, 0.6, 827.67)
    hits = 0
    for _ in range(args.grid_instances):
        h = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(2)
        g = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        problem = IsacProblem.from_delta_c(h, g, 0.5, 10.0)
        ref = exhaustive_phase_search(problem, geo, q, GridSearchSpec(phase_levels=args.levels))[2]
        hits += solve(problem, geo, q, SolverOptions()).ratio >= 0.9 * ref
    grid_ok = hits >= 0.95 * args.grid_instances
    lines.append(f"{'PASS' if grid_ok else 'FAIL'} grid_optimality: {hits}/{args.grid_instances} within 0.9 of the grid optimum")
    print("\n".join(lines))
    return 0 if ok and grid_ok else 1


def _add_common(p, with_format=True):
    p.add_argument("--config", help="JSON file with ScenarioConfig fields")
    p.add_argument("--out", help="output path (default: stdout)")
    if with_format:
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int)
    p.add_argument("--n-realizations", dest="n_realizations", type=int)
    p.add_argument("--base-seed", dest="base_seed", type=int)
    p.add_argument("--architectures", help="comma-separated subset, e.g. tri_hybrid,hbf_sn,dt_man")
    p.add_argument("--timing", action="store_true", help="record wall-clock milliseconds (output no longer reproducible)")
    p.add_argument("--no-pool", dest="no_pool", action="store_true", help="report each weight's own solve only")


def build_parser():
    parser = argparse.ArgumentParser(prog="trihybrid", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Monte-Carlo rows for every architecture and weight")
    _add_common(p)
    p.add_argument("--delta-c", help="comma-separated weights, overrides the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-tradeoff", help="means over a grid of communications weights")
    _add_common(p)
    p.add_argument("--grid", help="comma-separated weights (default: 0,0.075,0.25,0.5,0.75,1)")
    p.set_defaults(func=cmd_sweep_tradeoff)

    p = sub.add_parser("sweep-nu", help="means over elements per waveguide")
    _add_common(p)
    p.add_argument("--values", default=",".join(map(str, NU_GRID)))
    p.add_argument("--delta-c", help="weight(s), default 0.075")
    p.set_defaults(func=cmd_sweep_nu)

    p = sub.add_parser("convergence", help="per-iteration trace of one solve")
    _add_common(p, with_format=False)
    p.add_argument("--delta-c", type=float, default=0.075)
    p.add_argument("--realization", type=int, default=0)
    p.add_argument("--method", choices=("mm", "manifold"), default="mm")
    p.add_argument("--trace-out", dest="trace_out")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("verify", help="run the oracle checks")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--grid-instances", dest="grid_instances", type=int, default=5)
    p.add_argument("--levels", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidConfigError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
