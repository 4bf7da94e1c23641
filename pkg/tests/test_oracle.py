import numpy as np
import pytest

from conftest import dma_instance, random_channel, random_phases
from trihybrid.exceptions import EnumerationTooLargeError
from trihybrid.geometry import build_dma_geometry, propagation_gains
from trihybrid.model import IsacProblem
from trihybrid.optimizer import SolverOptions, quadratic_kernel, solve
from trihybrid.oracle import (
    GridSearchSpec,
    dense_blockdiag,
    dense_model_check,
    dense_ratio,
    exhaustive_phase_search,
    finite_difference_gradient,
    hessian_min_eigenvalue,
    invariant_suite,
)

# Exhaustive optima of the instance built in ``_grid_instance`` (delta_c = 0.5).
FROZEN_GRID_OPTIMA = {
    4: 2.6259333953302724,
    8: 2.973912234194286,
    16: 3.0795142384376972,
    32: 3.092975076581139,
}


def _grid_instance():
    geo = build_dma_geometry(2, 2, 28e9)
    q = propagation_gains(geo, 0.6, 827.67)
    rng = np.random.default_rng(2024)
    h = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(2)
    g = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    return IsacProblem.from_delta_c(h, g, 0.5, 10.0), geo, q


class TestFiniteDifferences:
    def test_squared_norm(self, rng):
        psi = random_channel(rng, 5)
        grad = finite_difference_gradient(lambda p: float(np.vdot(p, p).real), psi)
        np.testing.assert_allclose(grad, 2 * psi, atol=1e-8)

    def test_constant(self, rng):
        np.testing.assert_allclose(finite_difference_gradient(lambda p: 3.0, random_channel(rng, 4)), 0.0)


class TestGridSearch:
    def test_single_element_ratio_is_channel_power(self):
        geo = build_dma_geometry(1, 1, 28e9)
        q = propagation_gains(geo, 0.6, 827.67)
        h = np.array([0.6 + 0.8j]) * 1.5
        p = IsacProblem(h, np.ones(1), 1.0, 0.0, 1.0)
        _, _, ratio = exhaustive_phase_search(p, geo, q, GridSearchSpec(phase_levels=8))
        assert ratio == pytest.approx(abs(h[0]) ** 2, rel=1e-12)

    def test_single_level(self):
        problem, geo, q, _ = dma_instance(2, 2, seed=1)
        psi, f, ratio = exhaustive_phase_search(problem, geo, q, GridSearchSpec(phase_levels=1))
        np.testing.assert_array_equal(psi, np.ones(4))
        np.testing.assert_array_equal(f, np.ones(2))
        assert ratio == pytest.approx(dense_ratio(problem, q * (1j + psi) / 2, f, geo), rel=1e-12)

    def test_frozen_optima_and_refinement(self):
        problem, geo, q = _grid_instance()
        previous = -np.inf
        for K, expected in FROZEN_GRID_OPTIMA.items():
            psi, f, ratio = exhaustive_phase_search(problem, geo, q, GridSearchSpec(phase_levels=K))
            assert ratio == pytest.approx(expected, rel=1e-12)
            assert ratio == pytest.approx(dense_ratio(problem, q * (1j + psi) / 2, f, geo), rel=1e-12)
            assert ratio >= previous
            previous = ratio

    def test_beats_random_grid_points(self):
        problem, geo, q = _grid_instance()
        rng = np.random.default_rng(0)
        grid = np.exp(2j * np.pi * np.arange(8) / 8)
        _, _, best = exhaustive_phase_search(problem, geo, q, GridSearchSpec(phase_levels=8))
        for _ in range(200):
            psi, f = grid[rng.integers(0, 8, 4)], grid[rng.integers(0, 8, 2)]
            assert dense_ratio(problem, q * (1j + psi) / 2, f, geo) <= best + 1e-12

    def test_solver_reaches_most_of_grid_optimum(self):
        problem, geo, q = _grid_instance()
        assert solve(problem, geo, q).ratio >= 0.9 * FROZEN_GRID_OPTIMA[32]

    def test_refuses_large_enumeration(self):
        problem, geo, q, _ = dma_instance(2, 4)
        with pytest.raises(EnumerationTooLargeError, match="evaluations"):
            exhaustive_phase_search(problem, geo, q, GridSearchSpec(phase_levels=32))


class TestDenseChecks:
    def test_zero_weights(self, rng):
        geo = build_dma_geometry(2, 2, 28e9)
        res = dense_model_check(np.zeros(4), random_phases(rng, 2), random_channel(rng, 4), random_phases(rng, 4), geo)
        assert max(res.values()) == 0.0

    def test_random_instance(self, rng):
        geo = build_dma_geometry(4, 4, 28e9)
        res = dense_model_check(
            random_channel(rng, 16), random_phases(rng, 4), random_channel(rng, 16), random_phases(rng, 16), geo
        )
        assert max(res.values()) < 1e-12

    def test_corrupted_mapping_detected(self, rng):
        geo = build_dma_geometry(2, 2, 28e9)

        def every_column(x, geometry):
            return np.tile(np.asarray(x)[:, None], (1, geometry.n_waveguides))

        args = (random_channel(rng, 4), random_phases(rng, 2), random_channel(rng, 4), random_phases(rng, 4), geo)
        assert max(dense_model_check(*args).values()) < 1e-12
        assert dense_model_check(*args, lifting=every_column)["trace"] > 1e-3


class TestHessian:
    def test_doubled_form_positive_definite(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            problem, geo, q, rng2 = dma_instance(2, 8, seed=int(rng.integers(2**31)))
            A = quadratic_kernel(problem, random_phases(rng2, 2), geo).to_dense()
            z = float(rng.uniform(1e-3, 50.0))
            assert hessian_min_eigenvalue(A, q, z, doubled=True) > 0

    def test_tight_weight_is_minimal(self):
        problem, geo, q, rng = dma_instance(1, 4, seed=4)
        A = np.zeros((4, 4), complex)
        z = 2.0
        c = z * np.max(np.abs(q)) ** 2 / 4
        assert hessian_min_eigenvalue(A, q, z, weight=c) == pytest.approx(0.0, abs=1e-14)
        assert hessian_min_eigenvalue(A, q, z, weight=0.99 * c) < 0


def test_invariant_suite_small():
    report = invariant_suite(50, seed=1)
    assert report.ok
    assert all(line.startswith("PASS") for line in report.lines())


def test_solver_options_reach_oracle_path():
    # Random init also stays feasible when checked through the dense path.
    problem, geo, q, _ = dma_instance(2, 2, seed=8)
    sol = solve(problem, geo, q, SolverOptions(init="random"))
    assert sol.ratio == pytest.approx(dense_ratio(problem, sol.weights, sol.analog, geo), rel=1e-12)
