"""Tri-hybrid beamformer state and performance metrics.

The DMA matrix M = blkdiag(m_1, ..., m_Nw) is never formed. Everything is
computed from the element weights ``m`` and the waveguide partition, which
keeps each evaluation O(N_r).
"""

from dataclasses import dataclass

import numpy as np

from ._validation import (
    as_complex_vector,
    check_nonnegative,
    check_positive,
    check_unit_modulus,
)
from .exceptions import DegenerateBeamformerError, DimensionError, InvalidConfigError


@dataclass(frozen=True)
class IsacProblem:
    """One instance: weighted communications SNR plus sensing power under a power budget."""

    comm_channel: np.ndarray
    sensing_steering: np.ndarray
    weight_comm: float
    weight_sense: float
    power_budget: float

    def __post_init__(self):
        h = as_complex_vector(self.comm_channel, "comm_channel")
        g = as_complex_vector(self.sensing_steering, "sensing_steering", len(h))
        object.__setattr__(self, "comm_channel", h)
        object.__setattr__(self, "sensing_steering", g)
        dc = check_nonnegative(self.weight_comm, "weight_comm")
        ds = check_nonnegative(self.weight_sense, "weight_sense")
        if dc + ds <= 0:
            raise InvalidConfigError("weight_comm + weight_sense must be positive")
        object.__setattr__(self, "weight_comm", dc)
        object.__setattr__(self, "weight_sense", ds)
        object.__setattr__(self, "power_budget", check_positive(self.power_budget, "power_budget"))

    @property
    def n_elements(self):
        return self.comm_channel.shape[0]

    @classmethod
    def from_delta_c(cls, h, g, delta_c, power_budget):
        """Convenience constructor with delta_s = 1 - delta_c."""
        return cls(h, g, delta_c, 1.0 - delta_c, power_budget)


def dominant_direction(problem):
    """Unit dominant eigenvector of dc h h^H + ds g g^H via the 2x2 problem on span{h, g}.

    With B = [h g] and D = diag(dc, ds), the nonzero spectrum of B D B^H is that
    of S = D^(1/2) B^H B D^(1/2); u = B D^(1/2) y / ||.|| for S y = lambda y.
    """
    h, g = problem.comm_channel, problem.sensing_steering
    sc, ss = np.sqrt(problem.weight_comm), np.sqrt(problem.weight_sense)
    a = sc * sc * np.vdot(h, h).real
    d = ss * ss * np.vdot(g, g).real
    b = sc * ss * np.vdot(h, g)
    lam = (a + d) / 2 + np.sqrt(((a - d) / 2) ** 2 + abs(b) ** 2)
    if lam <= 0:
        raise DegenerateBeamformerError("weighted channels are all zero")
    y1 = np.array([b, lam - a])
    y2 = np.array([lam - d, np.conj(b)])
    y = y1 if np.linalg.norm(y1) >= np.linalg.norm(y2) else y2
    if np.linalg.norm(y) == 0:
        # b == 0 and a == d: any combination is dominant.
        y = np.array([1.0, 0.0]) if a > 0 else np.array([0.0, 1.0])
    u = sc * y[0] * h + ss * y[1] * g
    return u / np.linalg.norm(u), float(lam)


def lorentzian_map(psi, q):
    """m_j = q_j (i + psi_j) / 2, after snapping psi to exact unit modulus."""
    psi = as_complex_vector(psi, "psi")
    q = as_complex_vector(q, "q", len(psi))
    psi = check_unit_modulus(psi, "psi")
    return q * (1j + psi) / 2


@dataclass
class DmaState:
    """Fixed waveguide gains and tunable Lorentzian phases of the metasurface."""

    gains: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        self.gains = as_complex_vector(self.gains, "gains")
        self.phases = check_unit_modulus(
            as_complex_vector(self.phases, "phases", len(self.gains)), "phases"
        )

    @property
    def weights(self):
        return self.gains * (1j + self.phases) / 2


def _block_size(m, f, geometry=None):
    if geometry is not None:
        if len(m) != geometry.n_elements or len(f) != geometry.n_waveguides:
            raise DimensionError(
                f"m/f lengths ({len(m)}, {len(f)}) do not match geometry "
                f"({geometry.n_elements}, {geometry.n_waveguides})"
            )
        return geometry.elements_per_waveguide
    if len(f) == 0 or len(m) % len(f):
        raise DimensionError(f"len(m)={len(m)} is not a multiple of len(f)={len(f)}")
    return len(m) // len(f)


def compose_effective(m, f, geometry=None):
    """Return v = M f, i.e. v_{i*N_u + j} = m_{i*N_u + j} f_i."""
    m = as_complex_vector(m, "m")
    f = as_complex_vector(f, "f")
    n_u = _block_size(m, f, geometry)
    return m * np.repeat(f, n_u)


def _check_analog(f):
    return check_unit_modulus(as_complex_vector(f, "f"), "f")


def snr(problem, m, f, w):
    """|h^H M f w|^2 with h the noise-normalized channel."""
    v = compose_effective(m, _check_analog(f))
    return float(abs(np.vdot(problem.comm_channel, v) * w) ** 2)


def sensing_power(problem, m, f, w):
    """|g^H M f w|^2, the transmit power toward the target direction."""
    v = compose_effective(m, _check_analog(f))
    return float(abs(np.vdot(problem.sensing_steering, v) * w) ** 2)


def transmit_power(m, f, w):
    """||M f w||^2, which equals |w|^2 sum_j |m_j|^2 for unit-modulus f."""
    _check_analog(f)
    m = as_complex_vector(m, "m")
    return float(abs(w) ** 2 * np.sum(np.abs(m) ** 2))


def isac_objective(problem, m, f, w):
    return problem.weight_comm * snr(problem, m, f, w) + problem.weight_sense * sensing_power(
        problem, m, f, w
    )


def achievable_rate(snr_value):
    """log2(1 + SNR) in bits/s/Hz."""
    if snr_value < 0:
        raise ValueError(f"snr must be nonnegative, got {snr_value}")
    return float(np.log2(1.0 + snr_value))


@dataclass(frozen=True)
class PowerModel:
    """Hardware power-consumption constants (mW).

    These are configuration defaults chosen for this package; they are not
    calibrated against any measured hardware.
    """

    amplifier_efficiency: float = 0.35
    p_rf_mw: float = 250.0
    p_ps_mw: float = 30.0
    p_elem_mw: float = 1.0
    p_bb_mw: float = 200.0

    def __post_init__(self):
        eta = self.amplifier_efficiency
        if not (0 < eta <= 1):
            raise InvalidConfigError(f"amplifier_efficiency must be in (0, 1], got {eta}")
        for name in ("p_rf_mw", "p_ps_mw", "p_elem_mw", "p_bb_mw"):
            check_nonnegative(getattr(self, name), name)

    def scaled(self, factor):
        return PowerModel(
            amplifier_efficiency=self.amplifier_efficiency / factor,
            p_rf_mw=self.p_rf_mw * factor,
            p_ps_mw=self.p_ps_mw * factor,
            p_elem_mw=self.p_elem_mw * factor,
            p_bb_mw=self.p_bb_mw * factor,
        )

    def total_power_mw(self, descriptor, tx_power_mw):
        return (
            tx_power_mw / self.amplifier_efficiency
            + descriptor.n_rf * self.p_rf_mw
            + descriptor.n_ps * self.p_ps_mw
            + descriptor.n_elem_dma * self.p_elem_mw
            + self.p_bb_mw
        )


def energy_efficiency(rate, power_model, architecture_descriptor, tx_power_mw):
    """Rate divided by total consumed power, in bits/s/Hz per watt."""
    total = power_model.total_power_mw(architecture_descriptor, tx_power_mw)
    if total <= 0:
        raise InvalidConfigError("total consumed power is zero")
    return float(rate) / (total / 1000.0)


@dataclass(frozen=True)
class Metrics:
    snr: float
    rate: float
    sensing_power_mw: float
    tx_power_mw: float
    ee: float

    def to_dict(self):
        return {
            "snr": self.snr,
            "rate": self.rate,
            "sensing_power_mw": self.sensing_power_mw,
            "tx_power_mw": self.tx_power_mw,
            "ee": self.ee,
        }


def metrics_from_beam(problem, beam, descriptor=None, power_model=None):
    """Metrics of an effective transmit vector (M f w, f w, or a digital precoder)."""
    beam = as_complex_vector(beam, "beam", problem.n_elements)
    s = float(abs(np.vdot(problem.comm_channel, beam)) ** 2)
    p = float(abs(np.vdot(problem.sensing_steering, beam)) ** 2)
    tx = float(np.vdot(beam, beam).real)
    rate = achievable_rate(s)
    ee = float("nan")
    if descriptor is not None:
        ee = energy_efficiency(rate, power_model or PowerModel(), descriptor, tx)
    return Metrics(snr=s, rate=rate, sensing_power_mw=p, tx_power_mw=tx, ee=ee)


def _pairs(x):
    return [[float(v.real), float(v.imag)] for v in np.asarray(x, dtype=complex)]


def _unpairs(x):
    return np.array([complex(a, b) for a, b in x], dtype=complex)


def solution_to_dict(w, f, psi, metrics, architecture=None):
    """JSON-ready record; complex vectors are stored as [re, im] pairs."""
    out = {
        "w_re": float(np.real(w)),
        "w_im": float(np.imag(w)),
        "f": _pairs(f),
        "psi": _pairs(psi),
        "metrics": metrics.to_dict(),
    }
    if architecture is not None:
        out["architecture"] = architecture.to_dict()
    return out


def solution_from_dict(data):
    """Inverse of :func:`solution_to_dict`; returns (w, f, psi, Metrics)."""
    return (
        complex(data["w_re"], data["w_im"]),
        _unpairs(data["f"]),
        _unpairs(data["psi"]),
        Metrics(**data["metrics"]),
    )
