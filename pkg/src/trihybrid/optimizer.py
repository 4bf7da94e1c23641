"""Closed-form alternating optimizer for the tri-hybrid ISAC beamformer.

The weighted objective is turned into a single-ratio fractional program by
scaling the digital weight to the power boundary,

    max_{f, psi}  (dc |h^H M f|^2 + ds |g^H M f|^2) / sum_j |m_j|^2,

which is handled with a Dinkelbach parameter ``z``. For fixed ``z`` the DMA
phases and the analog phases are refreshed alternately by majorization
steps: linearize a convex function at the current point and take the
elementwise phase of the gradient.
"""

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_complex_vector, check_positive, check_unit_modulus, unit_phase
from .exceptions import DegenerateBeamformerError, DimensionError, InvalidConfigError
from .model import DmaState, dominant_direction, metrics_from_beam

GRADIENT_FORMS = ("wirtinger", "doubled")
SURROGATES = ("tight", "full", "half")
INITS = ("projected", "random")


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 500
    rel_tolerance: float = 1e-6
    seed: int = 0
    inner_sweeps: int = 10
    # "full": psi weight z; "tight": smallest convexifying weight z max|q|^2 / 4;
    # "half": c = z / 2, i.e. the doubled gradient form below.
    surrogate: str = "tight"
    # "projected": fully digital optimum mapped onto the constraints; "random": phases from seed.
    init: str = "projected"
    z_floor: float = 1e-15

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidConfigError("max_iterations must be >= 1")
        if not self.rel_tolerance > 0:
            raise InvalidConfigError("rel_tolerance must be positive")
        if self.inner_sweeps < 1:
            raise InvalidConfigError("inner_sweeps must be >= 1")
        if self.surrogate not in SURROGATES:
            raise InvalidConfigError(f"surrogate must be one of {SURROGATES}")
        if self.init not in INITS:
            raise InvalidConfigError(f"init must be one of {INITS}")


@dataclass
class IterationTrace:
    """Per-iteration record; index 0 of ``ratio`` is the initial point."""

    initial_ratio: float = float("nan")
    z: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    p1_objective: list = field(default_factory=list)
    elapsed_ms: list = field(default_factory=list)

    def append(self, z, ratio, p1, elapsed_ms):
        self.z.append(float(z))
        self.ratio.append(float(ratio))
        self.p1_objective.append(float(p1))
        self.elapsed_ms.append(float(elapsed_ms))

    def __len__(self):
        return len(self.ratio)

    def is_monotone(self, slack=1e-9):
        r = np.concatenate([[self.initial_ratio], self.ratio])
        return bool(np.all(np.diff(r) >= -slack))

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "z", "ratio_objective", "p1_objective", "elapsed_ms"])
        for k in range(len(self)):
            writer.writerow(
                [k + 1]
                + [f"{v:.12g}" for v in (self.z[k], self.ratio[k], self.p1_objective[k], self.elapsed_ms[k])]
            )
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


@dataclass
class Solution:
    digital: complex
    analog: np.ndarray
    dma: DmaState
    trace: IterationTrace
    converged: bool

    @property
    def weights(self):
        return self.dma.weights

    @property
    def beam(self):
        """Effective transmit vector M f w."""
        n_u = len(self.weights) // len(self.analog)
        return self.weights * np.repeat(self.analog, n_u) * self.digital

    @property
    def n_iter(self):
        return len(self.trace)

    @property
    def ratio(self):
        return self.trace.ratio[-1] if len(self.trace) else self.trace.initial_ratio

    def metrics(self, problem, descriptor=None, power_model=None):
        return metrics_from_beam(problem, self.beam, descriptor, power_model)


def optimal_digital_weight(m, f, p_t):
    """Digital weight on the power boundary: |w|^2 = P_t / ||M f||^2, zero phase."""
    m = as_complex_vector(m, "m")
    energy = float(np.sum(np.abs(m) ** 2))
    if energy <= 0:
        raise DegenerateBeamformerError("all DMA weights are zero")
    return complex(np.sqrt(check_positive(p_t, "p_t") / energy))


def _gains(problem, v):
    return np.vdot(problem.comm_channel, v), np.vdot(problem.sensing_steering, v)


def _ratio(problem, m, f_rep):
    """(numerator, denominator) of the fractional objective."""
    v = m * f_rep
    ah, ag = _gains(problem, v)
    num = problem.weight_comm * abs(ah) ** 2 + problem.weight_sense * abs(ag) ** 2
    return num, float(np.real(np.vdot(m, m)))


def dinkelbach_ratio(problem, m, f, geometry=None):
    """z = (dc |h^H M f|^2 + ds |g^H M f|^2) / sum_j |m_j|^2."""
    m = as_complex_vector(m, "m", problem.n_elements)
    f = as_complex_vector(f, "f")
    n_u = geometry.elements_per_waveguide if geometry is not None else len(m) // max(len(f), 1)
    if n_u * len(f) != len(m):
        raise DimensionError("m and f lengths are inconsistent")
    num, den = _ratio(problem, m, np.repeat(f, n_u))
    if den <= 0:
        raise DegenerateBeamformerError("sum |m_j|^2 is zero")
    return float(num / den)


def lift_blockdiag(x, geometry):
    """Columns of blkdiag(x(1:N_u), ..., x(...:N_r)), stored as an (N_w, N_u) array.

    Row ``i`` is the nonzero part of column ``i``; with X the lifted matrix,
    x^H M f = m^T conj(X) f.
    """
    x = as_complex_vector(x, "x", geometry.n_elements)
    return x.reshape(geometry.n_waveguides, geometry.elements_per_waveguide).copy()


@dataclass(frozen=True)
class QuadraticKernel:
    """A = dc a_h a_h^H + ds a_g a_g^H with a_h = H conj(f), a_g = G conj(f).

    Only the rank-one factors are stored, so a matvec costs O(N_r).
    """

    a_h: np.ndarray
    a_g: np.ndarray
    delta_c: float
    delta_s: float

    def matvec(self, m):
        return self.delta_c * self.a_h * np.vdot(self.a_h, m) + self.delta_s * self.a_g * np.vdot(
            self.a_g, m
        )

    def quad(self, m):
        """m^H A m (real, nonnegative)."""
        return float(
            self.delta_c * abs(np.vdot(self.a_h, m)) ** 2 + self.delta_s * abs(np.vdot(self.a_g, m)) ** 2
        )

    def to_dense(self):
        return self.delta_c * np.outer(self.a_h, self.a_h.conj()) + self.delta_s * np.outer(
            self.a_g, self.a_g.conj()
        )


def _kernel(problem, f_rep):
    fc = np.conj(f_rep)
    return QuadraticKernel(
        problem.comm_channel * fc, problem.sensing_steering * fc, problem.weight_comm, problem.weight_sense
    )


def quadratic_kernel(problem, f, geometry):
    f = check_unit_modulus(as_complex_vector(f, "f", geometry.n_waveguides), "f")
    return _kernel(problem, np.repeat(f, geometry.elements_per_waveguide))


def convexification_weight(q, z, surrogate="full"):
    """Weight c of the c * psi^H psi term that makes the DMA subproblem convex.

    The Hessian of m^H (A - zI) m in psi is Q^H (A - zI) Q / 4, so any
    c >= z max|q|^2 / 4 is enough ("tight"); "full" uses c = z.
    """
    if surrogate == "tight":
        return z * float(np.max(np.abs(q)) ** 2) / 4
    if surrogate == "full":
        return z
    if surrogate == "half":
        return z / 2
    raise InvalidConfigError(f"surrogate must be one of {SURROGATES}")


def surrogate_value(psi, kernel, q, z, weight=None):
    """f(psi) = m^H A m - z m^H m + c psi^H psi with m = q (i + psi) / 2.

    ``c`` defaults to ``z``. ``psi`` is not renormalized, so the function can
    be probed off the unit circle (finite differences).
    """
    c = z if weight is None else weight
    m = q * (1j + psi) / 2
    return kernel.quad(m) - z * float(np.real(np.vdot(m, m))) + c * float(np.real(np.vdot(psi, psi)))


def _gradient(psi, kernel, q, z, c):
    m = q * (1j + psi) / 2
    return (kernel.matvec(m) - z * m) * np.conj(q) + 2 * c * psi


def surrogate_gradient(psi, kernel, q, z, weight=None, form="wirtinger"):
    """Ascent direction 2 df/dconj(psi) = (A m - z m) * conj(q) + 2 c psi.

    ``form="doubled"`` returns 2 (A m - z m) * conj(q) + 2 z psi instead, which
    is twice the gradient of the surrogate with c = z / 2.
    """
    if form not in GRADIENT_FORMS:
        raise InvalidConfigError(f"form must be one of {GRADIENT_FORMS}")
    psi = as_complex_vector(psi, "psi")
    q = as_complex_vector(q, "q", len(psi))
    z = float(z)
    if form == "doubled":
        return 2 * _gradient(psi, kernel, q, z, z / 2)
    return _gradient(psi, kernel, q, z, z if weight is None else float(weight))


def update_psi(psi, kernel, q, z, weight=None, form="wirtinger"):
    """psi' = exp(i angle(grad)); zero gradient entries keep their phase."""
    psi = check_unit_modulus(as_complex_vector(psi, "psi"), "psi")
    grad = surrogate_gradient(psi, kernel, q, z, weight, form)
    return unit_phase(grad, psi)


def _analog_direction(problem, m, f, n_u):
    v = m * np.repeat(f, n_u)
    ah, ag = _gains(problem, v)
    mh = (np.conj(m) * problem.comm_channel).reshape(-1, n_u).sum(axis=1)
    mg = (np.conj(m) * problem.sensing_steering).reshape(-1, n_u).sum(axis=1)
    return problem.weight_comm * mh * ah + problem.weight_sense * mg * ag


def update_analog(f, m, problem, geometry):
    """f' = exp(i angle(M^H R M f)) with R = dc h h^H + ds g g^H."""
    f = check_unit_modulus(as_complex_vector(f, "f", geometry.n_waveguides), "f")
    m = as_complex_vector(m, "m", geometry.n_elements)
    r = _analog_direction(problem, m, f, geometry.elements_per_waveguide)
    return unit_phase(r, f)


def random_phases(rng, n):
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=n))


def initial_point(geometry, seed):
    """Uniform random psi (drawn first) and f from ``seed``."""
    rng = np.random.default_rng(seed)
    return random_phases(rng, geometry.n_elements), random_phases(rng, geometry.n_waveguides)


def projected_initial_point(problem, geometry, q):
    """Map the fully digital optimum u onto the tri-hybrid constraints.

    Per waveguide, f_i rotates the block of u / q so that its mean phase sits
    at pi/2, the centre of the phase range a Lorentzian weight can reach.
    Each element then takes the closest Lorentzian point to its (rescaled)
    target weight: psi = (2 beta - i) / |2 beta - i|.
    """
    u, _ = dominant_direction(problem)
    target = geometry.blocks(u / q)
    f = np.exp(1j * (np.angle(target.sum(axis=1)) - np.pi / 2))
    beta = (target * np.conj(f)[:, None]).ravel()
    beta = beta / np.max(np.abs(beta))
    psi = unit_phase(2 * beta - 1j, np.full(beta.shape, 1j))
    return psi, f


def starting_point(problem, geometry, q, options, init=None):
    if init is not None:
        psi = check_unit_modulus(as_complex_vector(init[0], "psi", geometry.n_elements), "psi")
        f = check_unit_modulus(as_complex_vector(init[1], "f", geometry.n_waveguides), "f")
        return psi, f
    if options.init == "projected":
        return projected_initial_point(problem, geometry, q)
    return initial_point(geometry, options.seed)


def _check_problem(problem, geometry, q):
    if problem.n_elements != geometry.n_elements:
        raise DimensionError(
            f"problem has {problem.n_elements} elements, geometry has {geometry.n_elements}"
        )
    return as_complex_vector(q, "q", geometry.n_elements)


def solve(problem, geometry, q, options=None, init=None):
    """Run the Dinkelbach / closed-form phase iteration and scale w to P_t.

    Each outer iteration refreshes z, then performs ``options.inner_sweeps``
    passes of (psi update, f update); every pass keeps the ratio from
    decreasing. Iteration stops when the ratio changes
    by less than ``rel_tolerance`` relative to the previous ratio, or after
    ``max_iterations``.
    """
    options = options or SolverOptions()
    q = _check_problem(problem, geometry, q)
    n_u = geometry.elements_per_waveguide
    psi, f = starting_point(problem, geometry, q, options, init)

    t0 = time.perf_counter()
    trace = IterationTrace()
    m = q * (1j + psi) / 2
    num, den = _ratio(problem, m, np.repeat(f, n_u))
    if den <= 0:
        raise DegenerateBeamformerError("initial DMA weights are all zero")
    ratio = num / den
    trace.initial_ratio = float(ratio)
    best = (ratio, psi, f)
    converged = False

    for _ in range(options.max_iterations):
        z = max(ratio, options.z_floor)
        c = convexification_weight(q, z, options.surrogate)
        for _ in range(options.inner_sweeps):
            f_rep = np.repeat(f, n_u)
            psi = unit_phase(_gradient(psi, _kernel(problem, f_rep), q, z, c), psi)
            m = q * (1j + psi) / 2
            f = unit_phase(_analog_direction(problem, m, f, n_u), f)
        num, den = _ratio(problem, m, np.repeat(f, n_u))
        if den <= 0:
            break
        new_ratio = num / den
        trace.append(z, new_ratio, problem.power_budget * new_ratio, 1e3 * (time.perf_counter() - t0))
        if new_ratio >= best[0]:
            best = (new_ratio, psi, f)
        change, previous = abs(new_ratio - ratio), ratio
        ratio = new_ratio
        if change < options.rel_tolerance * abs(previous) or change == 0:
            converged = True
            break

    _, psi, f = best
    dma = DmaState(gains=q, phases=psi)
    w = optimal_digital_weight(dma.weights, f, problem.power_budget)
    return Solution(digital=w, analog=f, dma=dma, trace=trace, converged=converged)
