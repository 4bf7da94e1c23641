"""Independent brute-force and dense-matrix checks.

Nothing here reuses the fast paths of :mod:`trihybrid.optimizer`; the dense
routines build M, H, G explicitly and the grid search enumerates phases.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import as_complex_vector, check_positive_int
from .exceptions import EnumerationTooLargeError

MAX_ENUMERATION = 10**9


@dataclass(frozen=True)
class GridSearchSpec:
    phase_levels: int = 32
    max_total_variables: int = 8

    def __post_init__(self):
        check_positive_int(self.phase_levels, "phase_levels")
        check_positive_int(self.max_total_variables, "max_total_variables")


def finite_difference_gradient(objective_fn, psi, step=1e-5):
    """Central-difference estimate of d/dRe + i d/dIm, i.e. 2 df/dconj(psi)."""
    psi = as_complex_vector(psi, "psi")
    grad = np.zeros_like(psi)
    for j in range(psi.size):
        e = np.zeros_like(psi)
        e[j] = step
        d_re = (objective_fn(psi + e) - objective_fn(psi - e)) / (2 * step)
        d_im = (objective_fn(psi + 1j * e) - objective_fn(psi - 1j * e)) / (2 * step)
        grad[j] = d_re + 1j * d_im
    return grad


def dense_blockdiag(x, geometry):
    """The N_r x N_w matrix blkdiag(x_1, ..., x_Nw), built entry by entry."""
    n_w, n_u = geometry.n_waveguides, geometry.elements_per_waveguide
    X = np.zeros((n_w * n_u, n_w), dtype=complex)
    for i in range(n_w):
        for j in range(n_u):
            X[i * n_u + j, i] = x[i * n_u + j]
    return X


def dense_model_check(m, f, h, g, geometry, delta_c=1.0, delta_s=1.0, lifting=dense_blockdiag):
    """Residuals of the block-diagonal identities, from explicit dense matrices.

    Returns a dict with the discrepancies
      ``lifting``: |h^H M f - m^T conj(H) f|,
      ``trace``:   |‖M f‖^2 - tr(M M^H)|,
      ``kernel``:  |m^H A m - (dc |h^H M f|^2 + ds |g^H M f|^2)|.
    """
    m, f, h, g = (np.asarray(a, dtype=complex) for a in (m, f, h, g))
    M = lifting(m, geometry)
    H = lifting(h, geometry)
    G = lifting(g, geometry)
    Mf = M @ f
    hMf = h.conj() @ Mf
    gMf = g.conj() @ Mf
    a_h = H @ f.conj()
    a_g = G @ f.conj()
    A = delta_c * np.outer(a_h, a_h.conj()) + delta_s * np.outer(a_g, a_g.conj())
    weighted = delta_c * abs(hMf) ** 2 + delta_s * abs(gMf) ** 2
    return {
        "lifting": float(abs(hMf - m @ (H.conj() @ f))),
        "trace": float(abs(np.vdot(Mf, Mf).real - np.trace(M @ M.conj().T).real)),
        "kernel": float(abs((m.conj() @ A @ m).real - weighted)),
    }


def dense_ratio(problem, m, f, geometry):
    M = dense_blockdiag(m, geometry)
    v = M @ f
    num = problem.weight_comm * abs(problem.comm_channel.conj() @ v) ** 2 + problem.weight_sense * abs(
        problem.sensing_steering.conj() @ v
    ) ** 2
    return float(num / np.trace(M @ M.conj().T).real)


def hessian_min_eigenvalue(A, q, z, weight=None, doubled=False):
    """Smallest eigenvalue of the complex Hessian of the DMA surrogate.

    ``doubled=True`` evaluates Q^H A Q - z Q^H Q + z I; otherwise the Hessian
    of m^H (A - zI) m + c psi^H psi, i.e. Q^H (A - zI) Q / 4 + c I.
    """
    Q = np.diag(np.asarray(q, dtype=complex))
    eye = np.eye(len(q))
    if doubled:
        K = Q.conj().T @ A @ Q - z * Q.conj().T @ Q + z * eye
    else:
        c = z if weight is None else weight
        K = Q.conj().T @ (A - z * eye) @ Q / 4 + c * eye
    return float(np.linalg.eigvalsh((K + K.conj().T) / 2)[0])


def _block_tables(problem, q, geometry, grid):
    """Per-waveguide (h-gain, g-gain, energy) for every psi combination in the block."""
    n_w, n_u = geometry.n_waveguides, geometry.elements_per_waveguide
    K = grid.size
    combos = np.stack(np.meshgrid(*([np.arange(K)] * n_u), indexing="ij"), -1).reshape(-1, n_u)
    psi = grid[combos]
    tables = []
    for i in range(n_w):
        sl = slice(i * n_u, (i + 1) * n_u)
        m = q[sl] * (1j + psi) / 2
        tables.append(
            (
                m @ problem.comm_channel[sl].conj(),
                m @ problem.sensing_steering[sl].conj(),
                np.sum(np.abs(m) ** 2, axis=1),
            )
        )
    return combos, tables


def exhaustive_phase_search(problem, geometry, q, grid_spec=None):
    """Best fractional objective over psi_j, f_i in {exp(i 2 pi k / K)}.

    The ratio is invariant to a common phase on f and the grid is closed
    under that rotation, so f_1 = 1 is fixed. Returns (psi, f, ratio).
    """
    grid_spec = grid_spec or GridSearchSpec()
    K = grid_spec.phase_levels
    n_w, n_u = geometry.n_waveguides, geometry.elements_per_waveguide
    n_vars = geometry.n_elements + n_w
    size = float(K) ** (n_vars - 1)
    if n_vars > grid_spec.max_total_variables or size >= MAX_ENUMERATION:
        raise EnumerationTooLargeError(
            f"{n_vars} phase variables at K={K} need {size:.3g} evaluations "
            f"(cap: {grid_spec.max_total_variables} variables, {MAX_ENUMERATION:.0e} points)"
        )
    q = as_complex_vector(q, "q", geometry.n_elements)
    grid = np.exp(2j * np.pi * np.arange(K) / K)
    combos, tables = _block_tables(problem, q, geometry, grid)
    n_c = combos.shape[0]

    # Prefix over waveguides 0..n_w-2; index layout (psi_0, (psi_1, f_1), ...).
    bh, bg, en = tables[0]
    for i in range(1, n_w - 1):
        th, tg, te = tables[i]
        bh = (bh[:, None, None] + th[None, :, None] * grid[None, None, :]).ravel()
        bg = (bg[:, None, None] + tg[None, :, None] * grid[None, None, :]).ravel()
        en = np.broadcast_to((en[:, None] + te[None, :])[:, :, None], (en.size, n_c, K)).ravel()

    best = (-np.inf, None)
    dc, ds = problem.weight_comm, problem.weight_sense
    if n_w == 1:
        ratio = _safe_ratio(dc * np.abs(bh) ** 2 + ds * np.abs(bg) ** 2, en)
        k = int(np.argmax(ratio))
        best = (ratio[k], (k,))
    else:
        th, tg, te = tables[-1]
        chunk = max(1, 2**22 // n_c)
        for kf in range(K):
            for start in range(0, bh.size, chunk):
                sl = slice(start, start + chunk)
                h_tot = bh[sl, None] + th[None, :] * grid[kf]
                g_tot = bg[sl, None] + tg[None, :] * grid[kf]
                ratio = _safe_ratio(dc * np.abs(h_tot) ** 2 + ds * np.abs(g_tot) ** 2, en[sl, None] + te[None, :])
                flat = int(np.argmax(ratio))
                if ratio.flat[flat] > best[0]:
                    r, c = divmod(flat, n_c)
                    best = (float(ratio.flat[flat]), (start + r, c, kf))

    psi_idx, f_idx = _decode(best[1], n_w, n_c, K)
    psi = np.concatenate([grid[combos[c]] for c in psi_idx])
    f = grid[np.array(f_idx)]
    return psi, f, float(best[0])


def _safe_ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), -np.inf)


def _decode(key, n_w, n_c, K):
    """Undo the prefix flattening: returns (psi combo per waveguide, f index per waveguide)."""
    if n_w == 1:
        return [key[0]], [0]
    prefix, last_combo, last_f = key
    psi_idx, f_idx = [], []
    for _ in range(n_w - 2):
        prefix, kf = divmod(prefix, K)
        prefix, c = divmod(prefix, n_c)
        psi_idx.append(c)
        f_idx.append(kf)
    psi_idx.append(prefix)
    f_idx.append(0)
    psi_idx.reverse()
    f_idx.reverse()
    return psi_idx + [last_combo], f_idx + [last_f]


INVARIANTS = ("unit_modulus", "lorentzian_circle", "trace_identity", "dense_model_identity", "hessian_pd")


@dataclass
class InvariantReport:
    """Pass counts and worst-case value per invariant over randomized instances."""

    n_instances: int
    passed: dict
    worst: dict

    @property
    def ok(self):
        return all(self.passed[k] == self.n_instances for k in INVARIANTS)

    def lines(self):
        return [
            f"{'PASS' if self.passed[k] == self.n_instances else 'FAIL'} {k}: "
            f"{self.passed[k]}/{self.n_instances} (worst {self.worst[k]:.3g})"
            for k in INVARIANTS
        ]


def invariant_suite(n_instances=1000, seed=0, max_elements=32, solver_iterations=5):
    """Check the structural invariants on random instances with N_r <= ``max_elements``.

    Each instance draws a layout, channels, weights and a solver run; the
    solver's phases feed the unit-modulus, Lorentzian and identity checks,
    and the Hessian check uses the achieved ratio as z.
    """
    # Local imports keep the oracle free of the optimizer at module load.
    from .geometry import build_dma_geometry, propagation_gains
    from .model import IsacProblem
    from .optimizer import SolverOptions, convexification_weight, quadratic_kernel, solve

    rng = np.random.default_rng(seed)
    passed = dict.fromkeys(INVARIANTS, 0)
    worst = dict.fromkeys(INVARIANTS, 0.0)
    worst["hessian_pd"] = np.inf
    for _ in range(n_instances):
        n_w = int(rng.integers(1, 5))
        n_u = int(rng.integers(1, max_elements // n_w + 1))
        geo = build_dma_geometry(n_w, n_u, float(rng.uniform(10e9, 60e9)))
        q = propagation_gains(geo, float(rng.uniform(0.1, 2.0)), float(rng.uniform(100.0, 1500.0)))
        n = geo.n_elements
        h = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        g = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        problem = IsacProblem.from_delta_c(h, g, float(rng.uniform(0.0, 1.0)), float(rng.uniform(1.0, 100.0)))
        opts = SolverOptions(max_iterations=solver_iterations, seed=int(rng.integers(2**31)), init="random")
        sol = solve(problem, geo, q, opts)
        psi, f, m = sol.dma.phases, sol.analog, sol.weights

        dev = max(np.max(np.abs(np.abs(psi) - 1)), np.max(np.abs(np.abs(f) - 1)))
        _tally(passed, worst, "unit_modulus", dev, dev <= 1e-12)

        dev = float(np.max(np.abs(np.abs(m / q - 0.5j) - 0.5)))
        _tally(passed, worst, "lorentzian_circle", dev, dev <= 1e-12)

        M = dense_blockdiag(m, geo)
        energy = float(np.sum(np.abs(m) ** 2))
        dev = abs(np.linalg.norm(M @ f) ** 2 - energy) / max(energy, 1e-300)
        _tally(passed, worst, "trace_identity", dev, dev <= 1e-12)

        res = dense_model_check(m, f, h, g, geo, problem.weight_comm, problem.weight_sense)
        scale = max(1.0, float(np.sum(np.abs(h) ** 2 + np.abs(g) ** 2)) * energy)
        dev = max(res.values()) / scale
        _tally(passed, worst, "dense_model_identity", dev, dev <= 1e-12)

        z = max(sol.ratio, 1e-12)
        A = quadratic_kernel(problem, f, geo).to_dense()
        lam_doubled = hessian_min_eigenvalue(A, q, z, doubled=True)
        lam_tight = hessian_min_eigenvalue(A, q, z, weight=convexification_weight(q, z, "tight"))
        ok = lam_doubled > 0 and lam_tight >= -1e-12 * z
        worst["hessian_pd"] = min(worst["hessian_pd"], lam_doubled)
        passed["hessian_pd"] += bool(ok)
    return InvariantReport(n_instances=n_instances, passed=passed, worst=worst)


def _tally(passed, worst, key, value, ok):
    worst[key] = max(worst[key], float(value))
    passed[key] += bool(ok)
