"""Config-driven Monte-Carlo runner for the architecture comparisons.

Realization ``r`` uses seed ``base_seed + r`` for its channel paths, target
direction and solver initialization. Every architecture and weight sees the
same draw, and results do not depend on worker scheduling.
"""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .baselines import ArchitectureKind, build_architecture, solve_fd, solve_hbf, solve_manifold
from .exceptions import InvalidConfigError
from .geometry import (
    SvChannelParams,
    SvPaths,
    TargetDirection,
    build_dma_geometry,
    channel_from_paths,
    propagation_gains,
    steering_vector,
)
from .model import IsacProblem, PowerModel
from .optimizer import SolverOptions, solve

logger = logging.getLogger(__name__)

DT_MAN = "dt_man"
ALL_ARCHITECTURES = ("tri_hybrid", "fd_sn", "fd_sa", "hbf_sn", "hbf_sa")
TRADEOFF_GRID = (0.0, 0.075, 0.25, 0.5, 0.75, 1.0)
NU_GRID = (8, 16, 24, 32, 40, 48)

CSV_HEADER = ["arch", "delta_c", "seed", "snr", "rate_bps_hz", "sensing_mw", "tx_mw", "ee", "iters", "wall_ms", "converged"]


def dbm_to_mw(dbm):
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    n_waveguides: int = 8
    elements_per_waveguide: int = 16
    carrier_frequency_hz: float = 28e9
    power_budget_dbm: float = 10.0
    noise_power_dbm: float = 0.0
    delta_c: tuple = (0.075,)
    architectures: tuple = ALL_ARCHITECTURES
    n_realizations: int = 100
    base_seed: int = 0
    n_paths: int = 5
    attenuation_per_meter: float = 0.6
    wavenumber_per_meter: float = 827.67
    power_model: PowerModel = field(default_factory=PowerModel)
    solver: SolverOptions = field(default_factory=SolverOptions)
    workers: int = 1
    # Off by default so that repeated runs produce identical files.
    record_timing: bool = False
    # Let each delta_c pick the best beam found at any delta_c of the same realization.
    pool_weights: bool = True

    def __post_init__(self):
        object.__setattr__(self, "delta_c", tuple(float(d) for d in self.delta_c))
        object.__setattr__(self, "architectures", tuple(str(a) for a in self.architectures))
        for d in self.delta_c:
            if not 0.0 <= d <= 1.0:
                raise InvalidConfigError(f"delta_c must lie in [0, 1], got {d}")
        if not self.delta_c:
            raise InvalidConfigError("delta_c list is empty")
        if self.n_realizations < 1:
            raise InvalidConfigError("n_realizations must be >= 1")
        for a in self.architectures:
            if a != DT_MAN:
                ArchitectureKind(a)
        SvChannelParams(n_paths=self.n_paths)

    @property
    def power_budget_mw(self):
        return dbm_to_mw(self.power_budget_dbm)

    @property
    def noise_power_mw(self):
        return dbm_to_mw(self.noise_power_dbm)

    def to_dict(self):
        d = asdict(self)
        d["delta_c"] = list(self.delta_c)
        d["architectures"] = list(self.architectures)
        return d

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        if "power_model" in data:
            data["power_model"] = PowerModel(**data["power_model"])
        if "solver" in data:
            data["solver"] = SolverOptions(**data["solver"])
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ResultRow:
    arch: str
    delta_c: float
    seed: int
    snr: float
    rate: float
    sensing_power_mw: float
    tx_power_mw: float
    ee: float
    iterations: int
    wall_ms: float
    converged: bool

    def as_record(self):
        return [
            self.arch,
            _fmt(self.delta_c),
            str(self.seed),
            _fmt(self.snr),
            _fmt(self.rate),
            _fmt(self.sensing_power_mw),
            _fmt(self.tx_power_mw),
            _fmt(self.ee),
            str(self.iterations),
            _fmt(self.wall_ms),
            "true" if self.converged else "false",
        ]

    @classmethod
    def from_record(cls, rec):
        return cls(
            arch=rec[0],
            delta_c=float(rec[1]),
            seed=int(rec[2]),
            snr=float(rec[3]),
            rate=float(rec[4]),
            sensing_power_mw=float(rec[5]),
            tx_power_mw=float(rec[6]),
            ee=float(rec[7]),
            iterations=int(rec[8]),
            wall_ms=float(rec[9]),
            converged=rec[10] == "true",
        )


def _fmt(v):
    return f"{v:.12g}"


@dataclass(frozen=True)
class Realization:
    seed: int
    paths: SvPaths
    target: TargetDirection


def draw_realization(config, index):
    seed = config.base_seed + index
    rng = np.random.default_rng(seed)
    paths = SvPaths.sample(rng, SvChannelParams(n_paths=config.n_paths))
    return Realization(seed=seed, paths=paths, target=TargetDirection.sample(rng))


def _solve_arch(arch, problem, geo, q, options):
    if arch == "tri_hybrid":
        return solve(problem, geo, q, options)
    if arch == DT_MAN:
        return solve_manifold(problem, geo, q, options)
    kind = ArchitectureKind(arch)
    if kind.is_digital:
        return solve_fd(problem)
    return solve_hbf(problem, options=options)


def _failed_row(arch, delta_c, seed):
    nan = float("nan")
    return ResultRow(arch, delta_c, seed, nan, nan, nan, nan, nan, 0, 0.0, False)


def _weighted(met, delta_c):
    return delta_c * met.snr + (1.0 - delta_c) * met.sensing_power_mw


def pool_across_weights(deltas, metrics):
    """Index of the best candidate for every weight.

    ``metrics[k]`` is the result of the solve at ``deltas[k]``; all candidates
    are feasible for every weight of the same realization. Ties keep the
    weight's own solve. Because every weight chooses from the same pool, SNR
    is non-decreasing and sensing power non-increasing along the weights.
    """
    chosen = []
    for k, dc in enumerate(deltas):
        best = k
        for j, met in enumerate(metrics):
            if met is not None and (metrics[best] is None or _weighted(met, dc) > _weighted(metrics[best], dc)):
                best = j
        chosen.append(best)
    return chosen


def run_realization(config, index):
    """Rows for every (architecture, delta_c) on realization ``index``."""
    real = draw_realization(config, index)
    dma = build_dma_geometry(config.n_waveguides, config.elements_per_waveguide, config.carrier_frequency_hz)
    q = propagation_gains(dma, config.attenuation_per_meter, config.wavenumber_per_meter)
    options = replace(config.solver, seed=real.seed)
    rows = []
    for arch in config.architectures:
        geo, desc = build_architecture("tri_hybrid" if arch == DT_MAN else arch, dma)
        h = channel_from_paths(geo, real.paths, config.noise_power_mw).normalized_channel
        g = steering_vector(geo, real.target)
        results = []
        for dc in config.delta_c:
            try:
                problem = IsacProblem.from_delta_c(h, g, dc, config.power_budget_mw)
                t0 = time.perf_counter()
                sol = _solve_arch(arch, problem, geo, q, options)
                wall = 1e3 * (time.perf_counter() - t0) if config.record_timing else 0.0
                results.append((sol, wall, sol.metrics(problem, desc, config.power_model)))
            except Exception:
                logger.exception("solver failed: arch=%s delta_c=%s seed=%s", arch, dc, real.seed)
                results.append(None)
        mets = [None if r is None else r[2] for r in results]
        if config.pool_weights and arch != "fd_sn" and arch != "fd_sa":
            chosen = pool_across_weights(config.delta_c, mets)
        else:
            chosen = list(range(len(results)))
        for k, dc in enumerate(config.delta_c):
            if results[k] is None or mets[chosen[k]] is None:
                rows.append(_failed_row(arch, dc, real.seed))
                continue
            sol, wall, _ = results[k]
            met = mets[chosen[k]]
            rows.append(
                ResultRow(
                    arch=arch,
                    delta_c=dc,
                    seed=real.seed,
                    snr=met.snr,
                    rate=met.rate,
                    sensing_power_mw=met.sensing_power_mw,
                    tx_power_mw=met.tx_power_mw,
                    ee=met.ee,
                    iterations=sol.n_iter,
                    wall_ms=wall,
                    converged=bool(sol.converged),
                )
            )
    return rows


def _order_key(config):
    pos = {a: k for k, a in enumerate(config.architectures)}
    return lambda r: (pos[r.arch], r.delta_c, r.seed)


def run_scenario(config):
    """All result rows, ordered by (architecture, delta_c, seed)."""
    indices = range(config.n_realizations)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(run_realization, [config] * len(indices), indices))
    else:
        chunks = [run_realization(config, i) for i in indices]
    rows = [r for chunk in chunks for r in chunk]
    return sorted(rows, key=_order_key(config))


@dataclass(frozen=True)
class Aggregate:
    arch: str
    delta_c: float
    n_u: int
    n: int
    snr_mean: float
    rate_mean: float
    rate_se: float
    sensing_mean: float
    sensing_se: float
    ee_mean: float
    ee_se: float
    converged_frac: float


AGGREGATE_HEADER = [f.name for f in fields(Aggregate)]


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return float("nan"), float("nan")
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(np.mean(v)), se


def aggregate(rows, n_u):
    """Sample means and standard errors per (architecture, delta_c), in row order."""
    groups = {}
    for r in rows:
        groups.setdefault((r.arch, r.delta_c), []).append(r)
    out = []
    for (arch, dc), grp in groups.items():
        rate = _mean_se([r.rate for r in grp])
        sens = _mean_se([r.sensing_power_mw for r in grp])
        ee = _mean_se([r.ee for r in grp])
        out.append(
            Aggregate(
                arch=arch,
                delta_c=dc,
                n_u=n_u,
                n=len(grp),
                snr_mean=_mean_se([r.snr for r in grp])[0],
                rate_mean=rate[0],
                rate_se=rate[1],
                sensing_mean=sens[0],
                sensing_se=sens[1],
                ee_mean=ee[0],
                ee_se=ee[1],
                converged_frac=float(np.mean([r.converged for r in grp])),
            )
        )
    return out


def sweep_tradeoff(config, grid=None):
    """Per-(architecture, delta_c) means over the weight grid."""
    if grid is not None:
        config = replace(config, delta_c=tuple(grid))
    return aggregate(run_scenario(config), config.elements_per_waveguide)


def sweep_nu(config, nu_values=NU_GRID):
    """Per-N_u means; SN/SA baselines are rebuilt for every N_u."""
    nu_values = list(nu_values)
    if not nu_values:
        raise InvalidConfigError("nu_values is empty")
    out = []
    for n_u in nu_values:
        cfg = replace(config, elements_per_waveguide=int(n_u))
        out.extend(aggregate(run_scenario(cfg), int(n_u)))
    return out


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(r.as_record())
    return buf.getvalue()


def rows_to_json(rows):
    records = [dict(zip(CSV_HEADER, r.as_record())) for r in rows]
    for rec in records:
        for key in CSV_HEADER[1:]:
            if key in ("seed", "iters"):
                rec[key] = int(rec[key])
            elif key == "converged":
                rec[key] = rec[key] == "true"
            else:
                rec[key] = float(rec[key])
    return json.dumps(records, indent=1, allow_nan=True) + "\n"


def aggregates_to_csv(aggs):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(AGGREGATE_HEADER)
    for a in aggs:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in (getattr(a, k) for k in AGGREGATE_HEADER)])
    return buf.getvalue()


def emit(results, format="csv", path=None):
    """Serialize result rows (or aggregates, CSV only) and optionally write them to ``path``."""
    results = list(results)
    if results and isinstance(results[0], Aggregate):
        if format == "csv":
            text = aggregates_to_csv(results)
        elif format == "json":
            text = json.dumps([asdict(a) for a in results], indent=1) + "\n"
        else:
            raise InvalidConfigError(f"unknown format {format!r}")
    elif format == "csv":
        text = rows_to_csv(results)
    elif format == "json":
        text = rows_to_json(results)
    else:
        raise InvalidConfigError(f"unknown format {format!r}")
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def load_rows(path_or_text, format="csv"):
    """Parse rows written by :func:`emit`."""
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        return [ResultRow.from_record(rec) for rec in reader]
    if format == "json":
        out = []
        for rec in json.loads(text):
            vals = [rec[k] for k in CSV_HEADER]
            vals[-1] = "true" if vals[-1] else "false"
            out.append(ResultRow.from_record([str(v) if not isinstance(v, float) else _fmt(v) for v in vals]))
        return out
    raise InvalidConfigError(f"unknown format {format!r}")
