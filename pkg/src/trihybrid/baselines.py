"""Reference architectures: fully digital, phase-shifter hybrid, and DT-Man.

DT-Man keeps the Dinkelbach outer loop of :func:`trihybrid.optimizer.solve`
but maximizes each phase subproblem with Riemannian conjugate gradient on
the product of unit circles instead of a single closed-form step.
"""

import enum
import time
from dataclasses import dataclass

import numpy as np

from ._validation import as_complex_vector, check_unit_modulus, unit_phase
from .exceptions import DegenerateBeamformerError, InvalidConfigError
from .geometry import planar_geometry
from .model import DmaState, dominant_direction, metrics_from_beam
from .optimizer import (
    IterationTrace,
    Solution,
    SolverOptions,
    _analog_direction,
    _check_problem,
    _kernel,
    _ratio,
    optimal_digital_weight,
    random_phases,
    starting_point,
)


class ArchitectureKind(str, enum.Enum):
    TRI_HYBRID = "tri_hybrid"
    FD_SN = "fd_sn"
    FD_SA = "fd_sa"
    HBF_SN = "hbf_sn"
    HBF_SA = "hbf_sa"

    @property
    def is_digital(self):
        return self in (ArchitectureKind.FD_SN, ArchitectureKind.FD_SA)

    @property
    def is_hybrid(self):
        return self in (ArchitectureKind.HBF_SN, ArchitectureKind.HBF_SA)


@dataclass(frozen=True)
class ArchitectureDescriptor:
    kind: ArchitectureKind
    n_antennas: int
    element_spacing: float
    n_rf: int
    n_ps: int
    n_elem_dma: int

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "n_antennas": self.n_antennas,
            "element_spacing": self.element_spacing,
            "n_rf": self.n_rf,
            "n_ps": self.n_ps,
            "n_elem_dma": self.n_elem_dma,
        }


def same_aperture_columns(elements_per_waveguide):
    """round(2 N_u / 5) with a floor of one; 4 N_u is even so no .5 ties occur."""
    return max(1, (4 * elements_per_waveguide + 5) // 10)


def build_architecture(kind, base_geometry):
    """Geometry and hardware counts of ``kind`` relative to the DMA ``base_geometry``."""
    kind = ArchitectureKind(kind)
    lam = base_geometry.wavelength
    n_w, n_u = base_geometry.n_waveguides, base_geometry.elements_per_waveguide
    if kind is ArchitectureKind.TRI_HYBRID:
        geo = base_geometry
        counts = (1, n_w, geo.n_elements)
    else:
        cols = n_u if kind in (ArchitectureKind.FD_SN, ArchitectureKind.HBF_SN) else same_aperture_columns(n_u)
        geo = planar_geometry(n_w, cols, lam / 2, lam / 2, lam)
        n = geo.n_elements
        counts = (n, 0, 0) if kind.is_digital else (1, n, 0)
    desc = ArchitectureDescriptor(
        kind=kind,
        n_antennas=geo.n_elements,
        element_spacing=geo.element_spacing,
        n_rf=counts[0],
        n_ps=counts[1],
        n_elem_dma=counts[2],
    )
    return geo, desc


@dataclass
class BeamSolution:
    """Solution of a baseline: digital weight ``w`` times analog/digital vector ``f``."""

    digital: complex
    analog: np.ndarray
    trace: IterationTrace = None
    converged: bool = True

    @property
    def beam(self):
        return self.analog * self.digital

    @property
    def weights(self):
        return np.empty(0, dtype=complex)

    @property
    def n_iter(self):
        return 0 if self.trace is None else len(self.trace)

    def metrics(self, problem, descriptor=None, power_model=None):
        return metrics_from_beam(problem, self.beam, descriptor, power_model)


def solve_fd(problem):
    """Fully digital optimum x = sqrt(P_t) u_max; objective P_t lambda_max."""
    u, _ = dominant_direction(problem)
    return BeamSolution(digital=complex(np.sqrt(problem.power_budget)), analog=u)


def fd_objective(problem):
    return problem.power_budget * dominant_direction(problem)[1]


def solve_hbf(problem, descriptor=None, options=None, init=None):
    """Single-RF-chain phase-shifter array: f <- exp(i angle(R f)), w = sqrt(P_t / N)."""
    if descriptor is not None and not ArchitectureKind(descriptor.kind).is_hybrid:
        raise InvalidConfigError(f"solve_hbf needs an HBF descriptor, got {descriptor.kind}")
    options = options or SolverOptions()
    n = problem.n_elements
    h, g = problem.comm_channel, problem.sensing_steering
    dc, ds = problem.weight_comm, problem.weight_sense
    if init is not None:
        f = check_unit_modulus(as_complex_vector(init, "f", n), "f")
    elif options.init == "projected":
        f = unit_phase(dominant_direction(problem)[0], np.ones(n, dtype=complex))
    else:
        f = random_phases(np.random.default_rng(options.seed), n)

    def objective(f):
        return (dc * abs(np.vdot(h, f)) ** 2 + ds * abs(np.vdot(g, f)) ** 2) / n

    t0 = time.perf_counter()
    trace = IterationTrace(initial_ratio=objective(f))
    value, converged = trace.initial_ratio, False
    for _ in range(options.max_iterations):
        r = dc * h * np.vdot(h, f) + ds * g * np.vdot(g, f)
        f = unit_phase(r, f)
        new = objective(f)
        trace.append(value, new, problem.power_budget * new, 1e3 * (time.perf_counter() - t0))
        change, previous, value = abs(new - value), value, new
        if change < options.rel_tolerance * abs(previous) or change == 0:
            converged = True
            break
    w = complex(np.sqrt(problem.power_budget / n))
    return BeamSolution(digital=w, analog=f, trace=trace, converged=converged)


@dataclass(frozen=True)
class ManifoldOptions:
    """Riemannian conjugate-gradient settings for the DT-Man inner solves."""

    max_inner_iterations: int = 100
    grad_tolerance: float = 1e-8
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 60


def _tangent(x, v):
    """Project ``v`` onto the tangent space of the product of circles at ``x``."""
    return v - np.real(v * np.conj(x)) * x


def _inner(a, b):
    return float(np.real(np.vdot(a, b)))


def rcg_maximize(fun, egrad, x0, options=None):
    """Maximize ``fun`` over unit-modulus vectors.

    ``egrad`` returns the Euclidean ascent direction 2 dF/dconj(x). Uses
    Polak-Ribiere+ directions with restarts, Armijo backtracking and
    elementwise normalization as the retraction. Returns (x, value, iterations).
    """
    opts = options or ManifoldOptions()
    x = x0.copy()
    F = fun(x)
    rg = _tangent(x, egrad(x))
    d = rg
    it = 0
    for it in range(1, opts.max_inner_iterations + 1):
        gnorm2 = _inner(rg, rg)
        if np.sqrt(gnorm2) <= opts.grad_tolerance * max(1.0, abs(F)):
            break
        slope = _inner(rg, d)
        if slope <= 0:
            d, slope = rg, gnorm2
        step = _armijo(fun, x, F, d, slope, opts)
        if step is None and d is not rg:
            d, slope = rg, gnorm2
            step = _armijo(fun, x, F, d, slope, opts)
        if step is None:
            break
        x_new = _retract(x + step * d, x)
        F_new = fun(x_new)
        rg_new = _tangent(x_new, egrad(x_new))
        beta = max(0.0, _inner(rg_new, rg_new - _tangent(x_new, rg)) / gnorm2)
        d = rg_new + beta * _tangent(x_new, d)
        improvement = F_new - F
        x, F, rg = x_new, F_new, rg_new
        if improvement <= 1e-13 * max(1.0, abs(F)):
            break
    return x, F, it


def _retract(y, x):
    return unit_phase(y, x)


def _armijo(fun, x, F, d, slope, opts):
    t = opts.initial_step
    for _ in range(opts.max_backtracks):
        if fun(_retract(x + t * d, x)) >= F + opts.armijo_c * t * slope:
            return t
        t *= opts.backtrack
    return None


def solve_manifold(problem, geometry, q, options=None, manifold_options=None, init=None):
    """DT-Man: Dinkelbach outer loop, Riemannian CG for the psi and f subproblems."""
    options = options or SolverOptions()
    q = _check_problem(problem, geometry, q)
    n_u = geometry.elements_per_waveguide
    psi, f = starting_point(problem, geometry, q, options, init)
    h, g = problem.comm_channel, problem.sensing_steering
    dc, ds = problem.weight_comm, problem.weight_sense

    t0 = time.perf_counter()
    num, den = _ratio(problem, q * (1j + psi) / 2, np.repeat(f, n_u))
    if den <= 0:
        raise DegenerateBeamformerError("initial DMA weights are all zero")
    ratio = num / den
    trace = IterationTrace(initial_ratio=float(ratio))
    converged = False
    for _ in range(options.max_iterations):
        z = max(ratio, options.z_floor)
        kernel = _kernel(problem, np.repeat(f, n_u))

        def psi_obj(p):
            m = q * (1j + p) / 2
            return kernel.quad(m) - z * float(np.real(np.vdot(m, m)))

        def psi_grad(p):
            m = q * (1j + p) / 2
            return (kernel.matvec(m) - z * m) * np.conj(q)

        psi, _, _ = rcg_maximize(psi_obj, psi_grad, psi, manifold_options)
        m = q * (1j + psi) / 2
        mh = (np.conj(m) * h).reshape(-1, n_u).sum(axis=1)
        mg = (np.conj(m) * g).reshape(-1, n_u).sum(axis=1)

        def f_obj(x):
            return dc * abs(np.vdot(mh, x)) ** 2 + ds * abs(np.vdot(mg, x)) ** 2

        def f_grad(x):
            return 2 * _analog_direction(problem, m, x, n_u)

        f, _, _ = rcg_maximize(f_obj, f_grad, f, manifold_options)
        num, den = _ratio(problem, m, np.repeat(f, n_u))
        new_ratio = num / den
        trace.append(z, new_ratio, problem.power_budget * new_ratio, 1e3 * (time.perf_counter() - t0))
        change, previous, ratio = abs(new_ratio - ratio), ratio, new_ratio
        if change < options.rel_tolerance * abs(previous) or change == 0:
            converged = True
            break

    dma = DmaState(gains=q, phases=psi)
    w = optimal_digital_weight(dma.weights, f, problem.power_budget)
    return Solution(digital=w, analog=f, dma=dma, trace=trace, converged=converged)
