"""scikit-learn style front end over the functional solvers.

``fit`` takes a (2, N) complex array whose rows are the noise-normalized
communications channel and the sensing steering vector. ``transform`` maps
rows of channel vectors to the complex gain x^H v of the fitted beam, and
``score`` returns the weighted objective on a (channel, steering) pair.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_complex_matrix
from .baselines import ArchitectureDescriptor, ArchitectureKind, build_architecture, solve_fd, solve_hbf, solve_manifold
from .exceptions import DimensionError, InvalidConfigError
from .geometry import build_dma_geometry, propagation_gains
from .model import IsacProblem, PowerModel
from .optimizer import SolverOptions, solve

SOLVERS = ("mm", "manifold")


def _split_pair(X, n_features=None):
    X = as_complex_matrix(X, "X", n_features)
    if X.shape[0] != 2:
        raise DimensionError(f"X must have exactly two rows (channel, steering), got {X.shape[0]}")
    return X[0], X[1]


class _BeamformerBase(BaseEstimator):
    def _problem(self, h, g):
        ds = 1.0 - self.delta_c if self.delta_s is None else self.delta_s
        return IsacProblem(h, g, self.delta_c, ds, self.power_budget_mw)

    def transform(self, X):
        """Complex gain conj(x) . beam for every row x of ``X``."""
        check_is_fitted(self, "beam_")
        X = as_complex_matrix(X, "X", self.beam_.shape[0])
        return X.conj() @ self.beam_

    def score(self, X, y=None):
        """delta_c |h^H v|^2 + delta_s |g^H v|^2 for the fitted beam v."""
        check_is_fitted(self, "beam_")
        h, g = _split_pair(X, self.beam_.shape[0])
        p = self._problem(h, g)
        return float(p.weight_comm * abs(np.vdot(h, self.beam_)) ** 2 + p.weight_sense * abs(np.vdot(g, self.beam_)) ** 2)

    def metrics(self, X, power_model=None):
        check_is_fitted(self, "beam_")
        h, g = _split_pair(X, self.beam_.shape[0])
        return self.solution_.metrics(self._problem(h, g), self.descriptor_, power_model or PowerModel())


class TriHybridBeamformer(_BeamformerBase):
    """Digital, analog and DMA weights for a single-stream ISAC transmitter.

    Parameters
    ----------
    n_waveguides, elements_per_waveguide : int
        DMA layout; the fitted channel must have their product as length.
    carrier_frequency_hz : float
    attenuation_per_meter, wavenumber_per_meter : float
        Waveguide propagation constants of the element gains.
    delta_c : float
        Communications weight. ``delta_s`` defaults to ``1 - delta_c``.
    power_budget_mw : float
    solver : {"mm", "manifold"}
        Closed-form phase updates or Riemannian conjugate gradient.
    max_iterations, tol, inner_sweeps, surrogate, init, random_state
        Forwarded to :class:`trihybrid.optimizer.SolverOptions`.
    """

    def __init__(
        self,
        n_waveguides=8,
        elements_per_waveguide=16,
        carrier_frequency_hz=28e9,
        attenuation_per_meter=0.6,
        wavenumber_per_meter=827.67,
        delta_c=0.075,
        delta_s=None,
        power_budget_mw=10.0,
        solver="mm",
        max_iterations=500,
        tol=1e-6,
        inner_sweeps=10,
        surrogate="tight",
        init="projected",
        random_state=0,
    ):
        self.n_waveguides = n_waveguides
        self.elements_per_waveguide = elements_per_waveguide
        self.carrier_frequency_hz = carrier_frequency_hz
        self.attenuation_per_meter = attenuation_per_meter
        self.wavenumber_per_meter = wavenumber_per_meter
        self.delta_c = delta_c
        self.delta_s = delta_s
        self.power_budget_mw = power_budget_mw
        self.solver = solver
        self.max_iterations = max_iterations
        self.tol = tol
        self.inner_sweeps = inner_sweeps
        self.surrogate = surrogate
        self.init = init
        self.random_state = random_state

    def _options(self):
        return SolverOptions(
            max_iterations=self.max_iterations,
            rel_tolerance=self.tol,
            seed=0 if self.random_state is None else int(self.random_state),
            inner_sweeps=self.inner_sweeps,
            surrogate=self.surrogate,
            init=self.init,
        )

    def fit(self, X, y=None):
        if self.solver not in SOLVERS:
            raise InvalidConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        geometry = build_dma_geometry(self.n_waveguides, self.elements_per_waveguide, self.carrier_frequency_hz)
        h, g = _split_pair(X, geometry.n_elements)
        gains = propagation_gains(geometry, self.attenuation_per_meter, self.wavenumber_per_meter)
        problem = self._problem(h, g)
        run = solve if self.solver == "mm" else solve_manifold
        sol = run(problem, geometry, gains, self._options())
        self.geometry_ = geometry
        self.descriptor_ = build_architecture(ArchitectureKind.TRI_HYBRID, geometry)[1]
        self.solution_ = sol
        self.psi_ = sol.dma.phases
        self.f_ = sol.analog
        self.w_ = sol.digital
        self.beam_ = sol.beam
        self.trace_ = sol.trace
        self.n_iter_ = sol.n_iter
        self.converged_ = sol.converged
        self.ratio_ = sol.ratio
        return self


class HybridBeamformer(_BeamformerBase):
    """Single RF chain driving one phase shifter per antenna."""

    def __init__(self, delta_c=0.075, delta_s=None, power_budget_mw=10.0, max_iterations=500, tol=1e-6, init="projected", random_state=0):
        self.delta_c = delta_c
        self.delta_s = delta_s
        self.power_budget_mw = power_budget_mw
        self.max_iterations = max_iterations
        self.tol = tol
        self.init = init
        self.random_state = random_state

    def fit(self, X, y=None):
        h, g = _split_pair(X)
        options = SolverOptions(
            max_iterations=self.max_iterations,
            rel_tolerance=self.tol,
            seed=0 if self.random_state is None else int(self.random_state),
            init=self.init,
        )
        sol = solve_hbf(self._problem(h, g), options=options)
        n = len(h)
        self.descriptor_ = _flat_descriptor(ArchitectureKind.HBF_SN, n)
        self.solution_ = sol
        self.f_ = sol.analog
        self.w_ = sol.digital
        self.beam_ = sol.beam
        self.n_iter_ = sol.n_iter
        self.converged_ = sol.converged
        return self


class FullyDigitalBeamformer(_BeamformerBase):
    """One RF chain per antenna; the optimum is the dominant eigenvector."""

    def __init__(self, delta_c=0.075, delta_s=None, power_budget_mw=10.0):
        self.delta_c = delta_c
        self.delta_s = delta_s
        self.power_budget_mw = power_budget_mw

    def fit(self, X, y=None):
        h, g = _split_pair(X)
        sol = solve_fd(self._problem(h, g))
        self.descriptor_ = _flat_descriptor(ArchitectureKind.FD_SN, len(h))
        self.solution_ = sol
        self.beam_ = sol.beam
        return self


def _flat_descriptor(kind, n):
    counts = (n, 0, 0) if kind.is_digital else (1, n, 0)
    return ArchitectureDescriptor(kind, n, float("nan"), *counts)
