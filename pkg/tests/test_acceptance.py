"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line. Run directly with
``python3 tests/test_acceptance.py`` to get the lines without pytest.
"""

import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from trihybrid.baselines import solve_fd, solve_manifold
from trihybrid.geometry import build_dma_geometry, channel_from_paths, propagation_gains, steering_vector
from trihybrid.harness import NU_GRID, TRADEOFF_GRID, ScenarioConfig, draw_realization, sweep_nu, sweep_tradeoff
from trihybrid.model import IsacProblem, transmit_power
from trihybrid.optimizer import (
    SolverOptions,
    convexification_weight,
    quadratic_kernel,
    solve,
    surrogate_gradient,
    surrogate_value,
)
from trihybrid.oracle import GridSearchSpec, exhaustive_phase_search, finite_difference_gradient, invariant_suite

N_REALIZATIONS = 100
DEFAULT = ScenarioConfig(n_realizations=N_REALIZATIONS)


def report(capsys, number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok


def dma_instance(config, index, delta_c, n_w=None, n_u=None):
    n_w = n_w or config.n_waveguides
    n_u = n_u or config.elements_per_waveguide
    real = draw_realization(config, index)
    geo = build_dma_geometry(n_w, n_u, config.carrier_frequency_hz)
    q = propagation_gains(geo, config.attenuation_per_meter, config.wavenumber_per_meter)
    h = channel_from_paths(geo, real.paths, config.noise_power_mw).normalized_channel
    g = steering_vector(geo, real.target)
    return IsacProblem.from_delta_c(h, g, delta_c, config.power_budget_mw), geo, q, real.seed


@pytest.fixture(scope="module")
def tradeoff():
    aggs = sweep_tradeoff(DEFAULT, TRADEOFF_GRID)
    return {(a.arch, a.delta_c): a for a in aggs}


def test_monotone_convergence(capsys):
    t_start = time.perf_counter()
    worst_iters, worst_time, failures = 0, 0.0, []
    for dc in (0.075, 0.5, 1.0):
        for r in range(N_REALIZATIONS):
            problem, geo, q, seed = dma_instance(DEFAULT, r, dc)
            t0 = time.perf_counter()
            sol = solve(problem, geo, q, replace(DEFAULT.solver, seed=seed))
            elapsed = time.perf_counter() - t0
            worst_iters, worst_time = max(worst_iters, sol.n_iter), max(worst_time, elapsed)
            if not (sol.trace.is_monotone(1e-9) and sol.converged and sol.n_iter <= 200 and elapsed < 1.0):
                failures.append((dc, seed, sol.n_iter, sol.converged))
    total = time.perf_counter() - t_start
    ok = not failures and total < 120
    report(
        capsys,
        1,
        ok,
        f"300 runs, failures={len(failures)}, max iterations={worst_iters}, "
        f"max run {worst_time:.3f} s, total {total:.1f} s",
    )
    assert ok, failures[:5]


def test_small_instance_optimality(capsys):
    t0 = time.perf_counter()
    cfg = replace(DEFAULT, n_waveguides=2, elements_per_waveguide=2)
    ratios = []
    for r in range(50):
        problem, geo, q, seed = dma_instance(cfg, r, 0.5)
        _, _, best = exhaustive_phase_search(problem, geo, q, GridSearchSpec(phase_levels=32))
        ratios.append(solve(problem, geo, q, replace(cfg.solver, seed=seed)).ratio / best)
    share = float(np.mean(np.asarray(ratios) >= 0.9))
    elapsed = time.perf_counter() - t0
    ok = share >= 0.95 and elapsed < 300
    report(capsys, 2, ok, f"{share:.0%} of 50 seeds >= 0.9 x grid optimum (min {min(ratios):.4f}), {elapsed:.1f} s")
    assert ok


def test_closed_form_anchors(capsys):
    checks = {}
    # Matched filter.
    worst = 0.0
    for r in range(20):
        problem, *_ = dma_instance(DEFAULT, r, 1.0)
        p = IsacProblem(problem.comm_channel, problem.sensing_steering, 1.0, 0.0, problem.power_budget)
        target = p.power_budget * np.vdot(p.comm_channel, p.comm_channel).real
        worst = max(worst, abs(solve_fd(p).metrics(p).snr - target) / target)
    checks["matched filter"] = worst <= 1e-10
    # Power boundary and Dinkelbach residual on solver outputs.
    worst_p, worst_res = 0.0, 0.0
    for r in range(20):
        problem, geo, q, seed = dma_instance(DEFAULT, r, 0.075)
        sol = solve(problem, geo, q, replace(DEFAULT.solver, seed=seed))
        tx = transmit_power(sol.weights, sol.analog, sol.digital)
        worst_p = max(worst_p, abs(tx - problem.power_budget) / problem.power_budget)
        v = sol.weights * np.repeat(sol.analog, geo.elements_per_waveguide)
        num = problem.weight_comm * abs(np.vdot(problem.comm_channel, v)) ** 2 + problem.weight_sense * abs(
            np.vdot(problem.sensing_steering, v)
        ) ** 2
        den = np.vdot(sol.weights, sol.weights).real
        z = sol.trace.z[-1]
        worst_res = max(worst_res, abs(num - z * den) / (z * den))
    checks["power boundary"] = worst_p <= 1e-9
    checks["dinkelbach residual"] = worst_res <= 1e-6
    # Gradient against central differences, N_r = 8.
    worst_g = 0.0
    rng = np.random.default_rng(0)
    for r in range(20):
        problem, geo, q, _ = dma_instance(DEFAULT, r, 0.5, n_w=2, n_u=4)
        f = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        psi = np.exp(1j * rng.uniform(0, 2 * np.pi, 8))
        K = quadratic_kernel(problem, f, geo)
        z = float(rng.uniform(0.1, 10))
        c = convexification_weight(q, z, "tight")
        num = finite_difference_gradient(lambda x: surrogate_value(x, K, q, z, c), psi)
        ana = surrogate_gradient(psi, K, q, z, c)
        worst_g = max(worst_g, np.linalg.norm(ana - num) / max(np.linalg.norm(num), 1e-9))
    checks["gradient"] = worst_g <= 1e-6
    ok = all(checks.values())
    report(
        capsys,
        3,
        ok,
        f"matched filter {worst:.1e}, power {worst_p:.1e}, residual {worst_res:.1e}, gradient {worst_g:.1e}",
    )
    assert ok, checks


def test_tradeoff_shape(tradeoff, capsys):
    bad = []
    for arch in DEFAULT.architectures:
        rates = [tradeoff[(arch, d)].rate_mean for d in TRADEOFF_GRID]
        sens = [tradeoff[(arch, d)].sensing_mean for d in TRADEOFF_GRID]
        if np.any(np.diff(rates) < 0):
            bad.append(f"{arch} rate")
        if np.any(np.diff(sens) > 0):
            bad.append(f"{arch} sensing")
    ok = not bad
    report(capsys, 4, ok, "rate non-decreasing and sensing non-increasing in delta_c" + (f"; violations: {bad}" if bad else ""))
    assert ok


def test_architecture_orderings(tradeoff, capsys):
    def m(arch, dc, key):
        return getattr(tradeoff[(arch, dc)], key)

    rate = {a: m(a, 1.0, "rate_mean") for a in DEFAULT.architectures}
    sens = {a: m(a, 0.0, "sensing_mean") for a in DEFAULT.architectures}
    parts = {
        "rate FD-SN >= HBF-SN": rate["fd_sn"] >= rate["hbf_sn"],
        "rate tri > FD-SA": rate["tri_hybrid"] > rate["fd_sa"],
        "rate tri > HBF-SA": rate["tri_hybrid"] > rate["hbf_sa"],
        "sensing FD-SA > tri": sens["fd_sa"] > sens["tri_hybrid"],
        "sensing HBF-SA > tri": sens["hbf_sa"] > sens["tri_hybrid"],
    }
    ok = all(parts.values())
    detail = ", ".join(f"{k}: {'ok' if v else 'no'}" for k, v in parts.items())
    detail += (
        f" | delta_c=1 rate tri {rate['tri_hybrid']:.3f} fd_sn {rate['fd_sn']:.3f} hbf_sn {rate['hbf_sn']:.3f} "
        f"fd_sa {rate['fd_sa']:.3f} hbf_sa {rate['hbf_sa']:.3f}; delta_c=0 sensing tri {sens['tri_hybrid']:.1f} "
        f"fd_sa {sens['fd_sa']:.1f} hbf_sa {sens['hbf_sa']:.1f} mW"
    )
    report(capsys, 5, ok, detail)
    # Supplementary observation only; it does not stand in for the criterion.
    s075 = {a: m(a, 0.075, "sensing_mean") for a in ("tri_hybrid", "fd_sa", "hbf_sa")}
    line = (
        f"info: delta_c=0.075 sensing tri {s075['tri_hybrid']:.1f}, fd_sa {s075['fd_sa']:.1f}, "
        f"hbf_sa {s075['hbf_sa']:.1f} mW"
    )
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print(line)
    assert ok, parts


def test_energy_efficiency_ordering(tradeoff, capsys):
    ee = {a: tradeoff[(a, 0.075)].ee_mean for a in ("tri_hybrid", "hbf_sn", "fd_sn")}
    ok = ee["tri_hybrid"] > ee["hbf_sn"] > ee["fd_sn"]
    report(
        capsys,
        6,
        ok,
        f"EE at delta_c=0.075: tri {ee['tri_hybrid']:.3f} > hbf_sn {ee['hbf_sn']:.3f} > fd_sn {ee['fd_sn']:.3f} bit/s/Hz/W",
    )
    assert ok


def test_manifold_parity_and_speed(capsys):
    close, t_mm, t_man = 0, [], []
    for r in range(N_REALIZATIONS):
        problem, geo, q, seed = dma_instance(DEFAULT, r, 0.075)
        options = replace(DEFAULT.solver, seed=seed)
        t0 = time.perf_counter()
        mm = solve(problem, geo, q, options)
        t1 = time.perf_counter()
        man = solve_manifold(problem, geo, q, options)
        t2 = time.perf_counter()
        t_mm.append(t1 - t0)
        t_man.append(t2 - t1)
        close += abs(man.ratio - mm.ratio) <= 0.02 * mm.ratio
    share = close / N_REALIZATIONS
    med_mm, med_man = float(np.median(t_mm)), float(np.median(t_man))
    ok = share >= 0.9 and med_mm < med_man
    report(
        capsys,
        7,
        ok,
        f"{share:.0%} within 2%, median time closed-form {1e3 * med_mm:.1f} ms vs manifold {1e3 * med_man:.1f} ms",
    )
    assert ok


def test_elements_per_waveguide_trends(capsys):
    aggs = [a for a in sweep_nu(replace(DEFAULT, delta_c=(0.075,)), NU_GRID) if a.arch == "tri_hybrid"]
    aggs.sort(key=lambda a: a.n_u)
    ee = np.array([a.ee_mean for a in aggs])
    rate = np.array([a.rate_mean for a in aggs])
    sens = np.array([a.sensing_mean for a in aggs])
    parts = {
        "EE increasing": bool(np.all(np.diff(ee) > 0)),
        "rate increasing": bool(np.all(np.diff(rate) > 0)),
        "sensing non-increasing": bool(np.all(np.diff(sens) <= 0)),
    }
    ok = all(parts.values())
    fmt = lambda xs, p: "/".join(f"{x:.{p}f}" for x in xs)  # noqa: E731
    report(
        capsys,
        8,
        ok,
        ", ".join(f"{k}: {'ok' if v else 'no'}" for k, v in parts.items())
        + f" | N_u {'/'.join(str(a.n_u) for a in aggs)}: EE {fmt(ee, 2)}, rate {fmt(rate, 3)}, sensing {fmt(sens, 2)}",
    )
    assert ok, parts


def test_invariant_suite(capsys):
    t0 = time.perf_counter()
    result = invariant_suite(1000, seed=0, max_elements=32)
    elapsed = time.perf_counter() - t0
    ok = result.ok and elapsed < 60
    report(capsys, 9, ok, "; ".join(result.lines()) + f"; {elapsed:.1f} s")
    assert ok


if __name__ == "__main__":
    aggs = {(a.arch, a.delta_c): a for a in sweep_tradeoff(DEFAULT, TRADEOFF_GRID)}
    checks = [
        lambda: test_monotone_convergence(None),
        lambda: test_small_instance_optimality(None),
        lambda: test_closed_form_anchors(None),
        lambda: test_tradeoff_shape(aggs, None),
        lambda: test_architecture_orderings(aggs, None),
        lambda: test_energy_efficiency_ordering(aggs, None),
        lambda: test_manifold_parity_and_speed(None),
        lambda: test_elements_per_waveguide_trends(None),
        lambda: test_invariant_suite(None),
    ]
    failed = 0
    for check in checks:
        try:
            check()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
