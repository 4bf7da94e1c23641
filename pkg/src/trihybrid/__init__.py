"""Tri-hybrid (digital, analog, dynamic metasurface) ISAC beamforming."""

from .baselines import (
    ArchitectureDescriptor,
    ArchitectureKind,
    ManifoldOptions,
    build_architecture,
    solve_fd,
    solve_hbf,
    solve_manifold,
)
from .estimators import FullyDigitalBeamformer, HybridBeamformer, TriHybridBeamformer
from .exceptions import (
    DegenerateBeamformerError,
    DimensionError,
    EnumerationTooLargeError,
    InvalidConfigError,
)
from .geometry import (
    ArrayGeometry,
    ChannelRealization,
    SvChannelParams,
    TargetDirection,
    build_dma_geometry,
    propagation_gains,
    sample_sv_channel,
    steering_vector,
)
from .harness import ScenarioConfig, emit, run_scenario, sweep_nu, sweep_tradeoff
from .model import IsacProblem, Metrics, PowerModel, energy_efficiency, lorentzian_map
from .optimizer import Solution, SolverOptions, solve

__version__ = "0.1.0"

__all__ = [
    "ArchitectureDescriptor",
    "ArchitectureKind",
    "ArrayGeometry",
    "ChannelRealization",
    "DegenerateBeamformerError",
    "DimensionError",
    "EnumerationTooLargeError",
    "FullyDigitalBeamformer",
    "HybridBeamformer",
    "InvalidConfigError",
    "IsacProblem",
    "ManifoldOptions",
    "Metrics",
    "PowerModel",
    "ScenarioConfig",
    "Solution",
    "SolverOptions",
    "SvChannelParams",
    "TargetDirection",
    "TriHybridBeamformer",
    "build_architecture",
    "build_dma_geometry",
    "emit",
    "energy_efficiency",
    "lorentzian_map",
    "propagation_gains",
    "run_scenario",
    "sample_sv_channel",
    "solve",
    "solve_fd",
    "solve_hbf",
    "solve_manifold",
    "steering_vector",
    "sweep_nu",
    "sweep_tradeoff",
]
