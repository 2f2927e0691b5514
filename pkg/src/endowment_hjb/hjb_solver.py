"""Monotone finite-difference solver for the reduced HJB equation.

Time is stepped backwards from the terminal utility with an implicit (backward
Euler) scheme.  Each step is solved by Howard policy iteration: freeze the
control at every node, solve the resulting tridiagonal M-matrix system, then
re-maximise the Hamiltonian node by node.

Spatial discretisation, per interior node:

* ``a u_zz``: three-point second difference (non-uniform grids allowed);
* ``b u_z``: three-point central difference where it keeps both neighbour
  weights non-negative, first-order upwinding on the sign of ``b`` otherwise;
* ``-c u``: on the diagonal.

No data is imposed at ``z_min``: the drift there points into the domain, so
the equation itself is discretised with a forward (one-sided) drift and zero
curvature.  At ``z_max`` the value is pinned to the upper analytic envelope.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import asymptotics
from .model import ConfigError, ModelParams, UtilityParams, coeff_a, coeff_b, coeff_c, integrated_c

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Policy iteration failure or a singular step system.

    Carries the failing time index (when known) and the residual history of
    the offending step.
    """

    def __init__(self, message: str, time_index: int | None = None,
                 residuals: list[float] | None = None):
        self.time_index = time_index
        self.residuals = list(residuals or [])
        if time_index is not None:
            message = f"time index {time_index}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class GridConfig:
    nt: int = 400
    nz: int = 400
    z_min: float = 0.05
    z_max: float = 50.0
    log_grid: bool = False

    def __post_init__(self):
        if self.nt < 1:
            raise ConfigError("need at least one time step", "grid.nt")
        if self.nz < 2:
            raise ConfigError("need at least three z nodes", "grid.nz")
        if not (0.0 <= self.z_min < self.z_max):
            raise ConfigError("need 0 <= z_min < z_max", "grid.z_min")
        if self.log_grid and self.z_min <= 0.0:
            raise ConfigError("logarithmic spacing needs z_min > 0", "grid.z_min")


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme knobs.

    ``drift`` is ``"central"`` (central where monotone, upwind elsewhere) or
    ``"upwind"`` (always upwind).  ``ybar`` is the endowment level of the
    parametrised reduction; 1 is the model, 0 removes the endowment inflow.
    """

    tol_policy: float = 1e-8
    tol_value: float = 1e-10
    max_policy_iters: int = 50
    drift: str = "central"
    ybar: float = 1.0
    curvature_eps: float = 1e-12
    check_monotone: bool = False

    def __post_init__(self):
        if self.drift not in ("central", "upwind"):
            raise ConfigError("drift must be 'central' or 'upwind'", "scheme.drift")
        if self.max_policy_iters < 1:
            raise ConfigError("max_policy_iters must be positive", "scheme.max_policy_iters")
        if self.ybar < 0:
            raise ConfigError("ybar must be non-negative", "scheme.ybar")


@dataclass(frozen=True)
class Grid:
    t_nodes: np.ndarray
    z_nodes: np.ndarray
    log_spacing: bool = False

    def __post_init__(self):
        t, z = np.asarray(self.t_nodes, float), np.asarray(self.z_nodes, float)
        if t.size < 2 or z.size < 3:
            raise ConfigError("grid needs at least 2 time nodes and 3 z nodes")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(z) <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        if z[0] < 0:
            raise ConfigError("z nodes must be non-negative")
        if self.log_spacing and z[0] <= 0:
            raise ConfigError("logarithmic spacing needs z_min > 0")
        t.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "t_nodes", t)
        object.__setattr__(self, "z_nodes", z)

    @classmethod
    def build(cls, params: ModelParams, cfg: GridConfig) -> "Grid":
        """Uniform time steps augmented with schedule breakpoints."""
        t = np.linspace(0.0, params.T, cfg.nt + 1)
        bps = params.breakpoints()
        if bps:
            t = np.union1d(t, bps)
        if cfg.log_grid:
            z = np.geomspace(cfg.z_min, cfg.z_max, cfg.nz + 1)
        else:
            z = np.linspace(cfg.z_min, cfg.z_max, cfg.nz + 1)
        z[0], z[-1] = cfg.z_min, cfg.z_max
        return cls(t, z, cfg.log_grid)

    @property
    def z_min(self) -> float:
        return float(self.z_nodes[0])

    @property
    def z_max(self) -> float:
        return float(self.z_nodes[-1])

    @property
    def T(self) -> float:
        return float(self.t_nodes[-1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.t_nodes.size, self.z_nodes.size


@dataclass
class StepDiagnostics:
    time_index: int
    iterations: int
    residuals: list[float]
    policy_changes: list[float]
    upwind_nodes: int = 0


@dataclass
class SolutionSurface:
    """Solved reduced value ``u`` and maximising control ``pi`` on a grid.

    Row ``i`` of ``u_values`` / ``pi_values`` belongs to ``grid.t_nodes[i]``.
    """

    grid: Grid
    u_values: np.ndarray
    pi_values: np.ndarray
    params: ModelParams
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    diagnostics: list[StepDiagnostics] = field(default_factory=list)

    def __post_init__(self):
        for arr in (self.u_values, self.pi_values):
            arr.flags.writeable = False

    @property
    def ybar(self) -> float:
        return self.scheme.ybar

    def u_at(self, t: float, z) -> np.ndarray:
        """Bilinear interpolation of ``u`` (no extrapolation)."""
        return _bilinear(self.grid, self.u_values, t, z)

    def pi_at(self, t: float, z) -> np.ndarray:
        return _bilinear(self.grid, self.pi_values, t, z)


def _time_weights(grid: Grid, t: float) -> tuple[int, float]:
    tn = grid.t_nodes
    if not (tn[0] - 1e-12 <= t <= tn[-1] + 1e-12):
        raise ValueError(f"t={t} outside [{tn[0]}, {tn[-1]}]")
    i = int(np.clip(np.searchsorted(tn, t, side="right") - 1, 0, tn.size - 2))
    w = (t - tn[i]) / (tn[i + 1] - tn[i])
    return i, float(np.clip(w, 0.0, 1.0))


def row_at(grid: Grid, values: np.ndarray, t: float) -> np.ndarray:
    """Linear interpolation in time of a whole z-row."""
    i, w = _time_weights(grid, t)
    if w == 0.0:
        return np.asarray(values[i])
    if w == 1.0:
        return np.asarray(values[i + 1])
    return (1.0 - w) * values[i] + w * values[i + 1]


def _bilinear(grid: Grid, values: np.ndarray, t: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(z < grid.z_min) or np.any(z > grid.z_max):
        raise ValueError("z outside the grid hull")
    out = np.interp(z, grid.z_nodes, row_at(grid, values, t))
    return out if out.ndim else float(out)


def terminal_slice(grid: Grid, utility: UtilityParams) -> np.ndarray:
    """``z**gamma / gamma`` on the z-nodes."""
    if utility.gamma < 0 and grid.z_min <= 0.0:
        raise ConfigError("z_min = 0 is not allowed for gamma < 0 (utility unbounded below)",
                          "grid.z_min")
    return utility(grid.z_nodes)


def hamiltonian_objective(pi, t, z, u_z, u_zz, params: ModelParams):
    """The pi-dependent part of the reduced Hamiltonian (plus the ``r z u_z`` term)."""
    m = params.market
    sc = params.endowment.sigma_c(t)
    rho = params.endowment.rho
    g = params.gamma
    return ((pi * m.sigma * m.theta + m.r) * z * u_z
            + 0.5 * (pi * m.sigma) ** 2 * z**2 * u_zz
            + rho * sc * m.sigma * pi * (g - 1) * z * u_z
            - rho * m.sigma * sc * pi * z**2 * u_zz)


def hamiltonian_argmax(t, z, u_z, u_zz, params: ModelParams, eps: float = 1e-12):
    """Maximise the reduced Hamiltonian over the constraint interval.

    Where the curvature is negative the objective is a concave parabola in
    ``pi`` and the clipped stationary point is exact.  Where ``u_zz >= -eps``
    (or ``z = 0``) the two interval endpoints are compared, ties going to
    ``pi_lo``.  Vectorised over ``z``, ``u_z`` and ``u_zz``.

    Returns ``(pi_star, hamiltonian_value)``.
    """
    z, u_z, u_zz = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (z, u_z, u_zz)))
    m = params.market
    sc = params.endowment.sigma_c(t)
    rho = params.endowment.rho
    g = params.gamma
    lo, hi = params.constraint.pi_lo, params.constraint.pi_hi

    curved = (u_zz < -eps) & (z > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(curved, u_z / (z * np.where(curved, u_zz, -1.0)), 0.0)
    interior = rho * sc / m.sigma - (m.theta - rho * sc * (1 - g)) / m.sigma * ratio
    pi = np.clip(interior, lo, hi)
    if not np.all(curved):
        f_lo = hamiltonian_objective(lo, t, z, u_z, u_zz, params)
        f_hi = hamiltonian_objective(hi, t, z, u_z, u_zz, params)
        pi = np.where(curved, pi, np.where(f_hi > f_lo, hi, lo))
    value = hamiltonian_objective(pi, t, z, u_z, u_zz, params)
    if pi.ndim == 0:
        return float(pi), float(value)
    return pi, value


def discrete_derivatives(z: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Three-point first and second derivatives on a non-uniform grid.

    Interior nodes use the central formulas; the end nodes reuse the
    neighbouring curvature and a one-sided slope.
    """
    hm = z[1:-1] - z[:-2]
    hp = z[2:] - z[1:-1]
    um, u0, up = u[:-2], u[1:-1], u[2:]
    u_z = np.empty_like(u)
    u_zz = np.empty_like(u)
    u_z[1:-1] = (-hp / (hm * (hm + hp)) * um + (hp - hm) / (hm * hp) * u0
                 + hm / (hp * (hm + hp)) * up)
    u_zz[1:-1] = 2.0 * ((up - u0) / hp - (u0 - um) / hm) / (hm + hp)
    u_z[0] = (u[1] - u[0]) / (z[1] - z[0])
    u_z[-1] = (u[-1] - u[-2]) / (z[-1] - z[-2])
    u_zz[0] = u_zz[1]
    u_zz[-1] = u_zz[-2]
    return u_z, u_zz


def _curvature_eps(u_zz: np.ndarray, base: float) -> float:
    return base * max(1.0, float(np.max(np.abs(u_zz))) if u_zz.size else 1.0)


@dataclass
class _Operator:
    """Tridiagonal operator ``L`` for frozen controls: ``(L u)_j = lo u_{j-1} + di u_j + up u_{j+1}``."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    upwind_nodes: int


def assemble_operator(t: float, z: np.ndarray, pi: np.ndarray, params: ModelParams,
                      scheme: SchemeConfig, with_c: bool = True) -> _Operator:
    """Discretise ``a u_zz + b u_z - c u`` at every node for the controls ``pi``.

    Row ``j`` couples node ``j`` with ``j - 1`` and ``j + 1``; row 0 has no
    lower neighbour and the last row is not used by the step (Dirichlet).
    """
    n = z.size
    a = coeff_a(t, z, pi, params)
    b = coeff_b(t, z, pi, params, scheme.ybar)
    lower = np.zeros(n)
    diag = np.zeros(n)
    upper = np.zeros(n)

    hm = z[1:-1] - z[:-2]
    hp = z[2:] - z[1:-1]
    ai, bi = a[1:-1], b[1:-1]
    d_lo = 2.0 * ai / (hm * (hm + hp))
    d_up = 2.0 * ai / (hp * (hm + hp))

    c_lo = d_lo - bi * hp / (hm * (hm + hp))
    c_up = d_up + bi * hm / (hp * (hm + hp))
    central = (c_lo >= 0) & (c_up >= 0)
    if scheme.drift == "upwind":
        central[:] = False
    u_lo = d_lo + np.where(bi < 0, -bi / hm, 0.0)
    u_up = d_up + np.where(bi > 0, bi / hp, 0.0)

    lower[1:-1] = np.where(central, c_lo, u_lo)
    upper[1:-1] = np.where(central, c_up, u_up)
    # row sums of L vanish apart from -c: derivatives of a constant are zero
    diag[1:-1] = -(lower[1:-1] + upper[1:-1])

    # z_min row: forward drift when it points inward, zero-curvature ghost node
    h0 = z[1] - z[0]
    if b[0] > 0:
        upper[0] = b[0] / h0
        diag[0] = -upper[0]

    if with_c:
        diag -= coeff_c(t, params)
    return _Operator(lower, diag, upper, int(np.count_nonzero(~central)))


def _quadratic_roots(qa, qb, qc):
    """Real roots of ``qa x**2 + qb x + qc`` (NaN where absent), elementwise."""
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = qb * qb - 4.0 * qa * qc
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        lin = np.where(qb != 0, -qc / qb, np.nan)
        r1 = np.where(qa != 0, (-qb + sq) / (2.0 * qa), lin)
        r2 = np.where(qa != 0, (-qb - sq) / (2.0 * qa), lin)
    return r1, r2


def discrete_hamiltonian(t: float, z: np.ndarray, u: np.ndarray, pi: np.ndarray,
                         params: ModelParams, scheme: SchemeConfig) -> np.ndarray:
    """Row-wise value of the discretised ``a u_zz + b u_z`` for controls ``pi``.

    Uses exactly the stencil :func:`assemble_operator` would pick, so that
    maximising it per node is a true Howard improvement step.  The last row
    is Dirichlet and reported as zero.
    """
    op = assemble_operator(t, z, pi, params, scheme, with_c=False)
    out = np.zeros_like(u)
    out[:-1] = op.diag[:-1] * u[:-1] + op.upper[:-1] * u[1:]
    out[1:-1] += op.lower[1:-1] * u[:-2]
    return out


def improve_policy(t: float, z: np.ndarray, u: np.ndarray, pi_current: np.ndarray,
                   params: ModelParams, scheme: SchemeConfig) -> np.ndarray:
    """Per-node maximisation of the discrete Hamiltonian over a candidate set.

    The discrete Hamiltonian is piecewise quadratic in ``pi`` (the stencil
    switches between central and upwind drift), so its maximiser is among:
    the interval endpoints, the stationary points of each quadratic piece
    (closed form via :func:`hamiltonian_argmax` with the matching slope), the
    sign change of ``b`` and the edges of the central-differencing region.
    The current control is kept unless a candidate is strictly better.
    """
    lo, hi = params.constraint.pi_lo, params.constraint.pi_hi
    u_c, u_zz = discrete_derivatives(z, u)
    eps = _curvature_eps(u_zz, scheme.curvature_eps)
    n = z.size
    u_fwd = np.empty(n)
    u_bwd = np.empty(n)
    u_fwd[:-1] = np.diff(u) / np.diff(z)
    u_fwd[-1] = u_fwd[-2]
    u_bwd[1:] = u_fwd[:-1]
    u_bwd[0] = u_fwd[0]

    cands = [np.asarray(pi_current, float), np.full(n, lo), np.full(n, hi)]
    for slope in (u_c, u_fwd, u_bwd):
        cands.append(hamiltonian_argmax(t, z, slope, u_zz, params, eps)[0])

    # b(pi) = b0 + b1 pi and a(pi) = a0 + a1 pi + a2 pi**2, per node
    b0 = coeff_b(t, z, 0.0, params, scheme.ybar)
    b1 = coeff_b(t, z, 1.0, params, scheme.ybar) - b0
    a0 = coeff_a(t, z, 0.0, params)
    a_p = coeff_a(t, z, 1.0, params)
    a_m = coeff_a(t, z, -1.0, params)
    a2 = 0.5 * (a_p + a_m) - a0
    a1 = 0.5 * (a_p - a_m)
    with np.errstate(divide="ignore", invalid="ignore"):
        cands.append(np.where(b1 != 0, -b0 / b1, np.nan))
    hm = np.empty(n)
    hp = np.empty(n)
    hm[1:] = np.diff(z)
    hm[0] = hm[1]
    hp[:-1] = np.diff(z)
    hp[-1] = hp[-2]
    # central weights vanish where 2a - hp b = 0 or 2a + hm b = 0
    cands.extend(_quadratic_roots(2 * a2, 2 * a1 - hp * b1, 2 * a0 - hp * b0))
    cands.extend(_quadratic_roots(2 * a2, 2 * a1 + hm * b1, 2 * a0 + hm * b0))

    best_pi = cands[0].copy()
    best_h = discrete_hamiltonian(t, z, u, best_pi, params, scheme)
    tol = 1e-13 * max(1.0, float(np.max(np.abs(best_h))))
    for cand in cands[1:]:
        cand = np.clip(np.where(np.isnan(cand), lo, cand), lo, hi)
        h = discrete_hamiltonian(t, z, u, cand, params, scheme)
        better = h > best_h + tol
        best_pi = np.where(better, cand, best_pi)
        best_h = np.where(better, h, best_h)
    # The z_min row carries no diffusion, so the discrete Hamiltonian does not
    # identify its control; it stays frozen for the whole step (set by the
    # caller).  The Dirichlet node reports its neighbour's control.
    best_pi[0] = pi_current[0]
    best_pi[-1] = best_pi[-2]
    return best_pi


def _check_m_matrix(M_lower, M_diag, M_upper):
    if np.any(M_lower > 0) or np.any(M_upper > 0):
        raise SolverError("step matrix has positive off-diagonal entries")
    if np.any(M_diag <= 0):
        raise SolverError("step matrix has non-positive diagonal entries")


def step_backward(slice_next: np.ndarray, t_next: float, t_curr: float, grid: Grid,
                  params: ModelParams, scheme_cfg: SchemeConfig | None = None,
                  pi_init: np.ndarray | None = None, boundary_value: float | None = None,
                  with_c: bool = True, time_index: int | None = None):
    """One implicit step from ``t_next`` back to ``t_curr`` by policy iteration.

    Returns ``(slice_curr, pi_slice, diagnostics)``.  ``boundary_value`` is the
    Dirichlet value at ``z_max`` for ``t_curr``; it defaults to the upper
    analytic envelope.
    """
    scheme = scheme_cfg or SchemeConfig()
    z = grid.z_nodes
    n = z.size
    slice_next = np.asarray(slice_next, dtype=float)
    if slice_next.shape != (n,):
        raise ValueError("slice_next must have one value per z node")
    if t_curr > t_next:
        raise ValueError("t_curr must not exceed t_next")

    def argmax(u):
        u_z, u_zz = discrete_derivatives(z, u)
        eps = _curvature_eps(u_zz, scheme.curvature_eps)
        return hamiltonian_argmax(t_curr, z, u_z, u_zz, params, eps)[0]

    dt = t_next - t_curr
    if dt == 0.0:
        return slice_next.copy(), argmax(slice_next), StepDiagnostics(time_index or 0, 0, [], [])

    if boundary_value is None:
        lower_b, upper_b = asymptotics.sandwich_bounds(t_curr, grid.z_max, params, scheme.ybar)
        boundary_value = upper_b

    pi = argmax(slice_next) if pi_init is None else np.asarray(pi_init, dtype=float).copy()
    # z_min control lags one step behind its neighbour, see improve_policy
    pi[0] = pi[1]
    u = slice_next
    residuals: list[float] = []
    changes: list[float] = []
    scale = max(1.0, float(np.max(np.abs(slice_next))))
    op = None
    for it in range(1, scheme.max_policy_iters + 1):
        op = assemble_operator(t_curr, z, pi, params, scheme, with_c)
        m_lo = -dt * op.lower[:-1]
        m_di = 1.0 - dt * op.diag[:-1]
        m_up = -dt * op.upper[:-1]
        if scheme.check_monotone:
            _check_m_matrix(m_lo, m_di, m_up)
        rhs = slice_next[:-1].copy()
        rhs[-1] -= m_up[-1] * boundary_value
        ab = np.zeros((3, n - 1))
        ab[0, 1:] = m_up[:-1]
        ab[1] = m_di
        ab[2, :-1] = m_lo[1:]
        try:
            inner = solve_banded((1, 1), ab, rhs, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"singular step system: {exc}", time_index, residuals) from exc
        u_new = np.empty(n)
        u_new[:-1] = inner
        u_new[-1] = boundary_value
        pi_new = improve_policy(t_curr, z, u_new, pi, params, scheme)
        res = float(np.max(np.abs(u_new - u))) if it > 1 else math.inf
        dpi = float(np.max(np.abs(pi_new - pi)))
        if it > 1:
            residuals.append(res)
        changes.append(dpi)
        u, pi = u_new, pi_new
        if dpi < scheme.tol_policy or res < scheme.tol_value * scale:
            break
    else:
        raise SolverError(
            f"policy iteration did not converge in {scheme.max_policy_iters} iterations",
            time_index, residuals)
    diag = StepDiagnostics(time_index or 0, it, residuals, changes, op.upwind_nodes)
    return u, pi, diag


def _sweep(params: ModelParams, grid: Grid, scheme: SchemeConfig, terminal: np.ndarray,
           boundary: Callable[[float], float], with_c: bool) -> SolutionSurface:
    m = grid.t_nodes.size
    n = grid.z_nodes.size
    u_all = np.empty((m, n))
    pi_all = np.empty((m, n))
    u_all[-1] = terminal
    # terminal control from the exact utility derivatives; their ratio is
    # scale-free, so z = 0 can be replaced by any positive value
    g = params.gamma
    z_pos = np.where(grid.z_nodes > 0, grid.z_nodes, 1.0)
    pi_all[-1] = hamiltonian_argmax(grid.T, z_pos, z_pos ** (g - 1), (g - 1) * z_pos ** (g - 2),
                                    params)[0]
    diagnostics = []
    for i in range(m - 2, -1, -1):
        u_all[i], pi_all[i], d = step_backward(
            u_all[i + 1], grid.t_nodes[i + 1], grid.t_nodes[i], grid, params, scheme,
            pi_init=pi_all[i + 1], boundary_value=boundary(grid.t_nodes[i]),
            with_c=with_c, time_index=i)
        diagnostics.append(d)
    diagnostics.reverse()
    logger.debug("solved %d steps, max policy iterations %d", m - 1,
                 max(d.iterations for d in diagnostics))
    return SolutionSurface(grid, u_all, pi_all, params, scheme, diagnostics)


def solve(params: ModelParams, grid_cfg: GridConfig | Grid | None = None,
          scheme_cfg: SchemeConfig | None = None, terminal_scale: float = 1.0) -> SolutionSurface:
    """Backward sweep from ``u(T, z) = z**gamma / gamma`` to ``t = 0``.

    ``terminal_scale`` multiplies the terminal condition and the boundary
    data; it exists for homogeneity and comparison checks.
    """
    grid = grid_cfg if isinstance(grid_cfg, Grid) else Grid.build(params, grid_cfg or GridConfig())
    scheme = scheme_cfg or SchemeConfig()
    if grid.T != params.T:
        raise ConfigError("grid horizon does not match the model horizon")
    terminal = terminal_scale * terminal_slice(grid, params.utility)

    def boundary(t):
        return terminal_scale * asymptotics.sandwich_bounds(t, grid.z_max, params, scheme.ybar)[1]

    return _sweep(params, grid, scheme, terminal, boundary, with_c=True)


def solve_transformed(params: ModelParams, grid: Grid, scheme_cfg: SchemeConfig | None = None):
    """Solve the equation for ``w = exp(-int_0^t c) u``, which has no zeroth-order term.

    Returns ``(w_surface, factors)`` where ``factors[i] = exp(-int_0^{t_i} c)``.
    """
    scheme = scheme_cfg or SchemeConfig()
    factors = np.array([math.exp(-integrated_c(0.0, t, params)) for t in grid.t_nodes])
    terminal = factors[-1] * terminal_slice(grid, params.utility)
    index = {float(t): i for i, t in enumerate(grid.t_nodes)}

    def boundary(t):
        env = asymptotics.sandwich_bounds(t, grid.z_max, params, scheme.ybar)[1]
        return factors[index[float(t)]] * env

    return _sweep(params, grid, scheme, terminal, boundary, with_c=False), factors


def solve_transformed_check(params: ModelParams, surface: SolutionSurface) -> float:
    """Max nodal gap between the direct solve and the back-transformed ``w`` solve."""
    w_surface, factors = solve_transformed(params, surface.grid, surface.scheme)
    u_back = w_surface.u_values / factors[:, None]
    return float(np.max(np.abs(u_back - surface.u_values)))
