"""Feedback policy and value reconstruction on the original (wealth, endowment) state."""

from __future__ import annotations

import numpy as np

from .hjb_solver import SolutionSurface, discrete_derivatives, row_at
from .model import ModelParams, merton_ratio


class DomainError(ValueError):
    """State outside the domain where the solved surface is defined."""


class PolicyFunction:
    """Evaluable control ``h(t, x, y)`` built from a solved surface.

    The control depends on the state only through ``z = x / y``.  It is
    interpolated linearly in ``t`` and ``z``; beyond ``z_max`` it returns the
    (clamped) Merton ratio and below ``z_min`` the first grid column.

    Parameters
    ----------
    surface : SolutionSurface
        Output of :func:`endowment_hjb.hjb_solver.solve`.
    """

    def __init__(self, surface: SolutionSurface):
        self.surface = surface
        self.params = surface.params
        self._far_field = merton_ratio(surface.params).value
        self._cache_t = None
        self._cache_row = None

    def slice_at(self, t: float) -> np.ndarray:
        if t != self._cache_t:
            self._cache_row = row_at(self.surface.grid, self.surface.pi_values, t)
            self._cache_t = t
        return self._cache_row

    def at_ratio(self, t: float, z):
        """Control as a function of the wealth-to-endowment ratio."""
        z = np.asarray(z, dtype=float)
        out = np.interp(z, self.surface.grid.z_nodes, self.slice_at(t),
                        right=self._far_field)
        lo, hi = self.params.constraint.pi_lo, self.params.constraint.pi_hi
        out = np.clip(out, lo, hi)
        return out if out.ndim else float(out)

    def __call__(self, t: float, x, y):
        return self.at_ratio(t, np.asarray(x, dtype=float) / np.asarray(y, dtype=float))


def evaluate_policy(pf: PolicyFunction, t: float, x, y):
    """Control at time ``t`` for wealth ``x`` and endowment rate ``y`` (both > 0)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("wealth and endowment must be strictly positive")
    if not 0.0 <= t <= pf.params.T:
        raise DomainError(f"t={t} outside [0, {pf.params.T}]")
    return pf(t, x, y)


def reconstruct_value(surface: SolutionSurface, t: float, x, y):
    """``v(t, x, y) = y**gamma * u(t, x / y)``; no extrapolation outside the grid."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("wealth and endowment must be strictly positive")
    z = x / y
    g = surface.grid
    if np.any(z < g.z_min) or np.any(z > g.z_max):
        raise DomainError(f"x/y outside the solved range [{g.z_min}, {g.z_max}]")
    try:
        u = surface.u_at(t, z)
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    out = np.power(y, surface.params.gamma) * u
    return out if np.ndim(out) else float(out)


def asymptotic_policy_limit(params: ModelParams) -> float:
    """Large-wealth limit of the optimal control: the (clamped) Merton ratio."""
    return merton_ratio(params).value


def curvature_limit(params: ModelParams) -> float:
    """Limit of ``u_zz / (exp(K (T - t)) z**(gamma - 2))`` as ``z -> inf``, i.e. ``gamma - 1``."""
    return params.gamma - 1.0


def slope_curvature_ratio(surface: SolutionSurface, t: float, z: float) -> float:
    """Discrete ``u_z / (z u_zz)`` at ``(t, z)``; tends to ``1 / (gamma - 1)`` for large z."""
    grid = surface.grid
    row = row_at(grid, surface.u_values, t)
    u_z, u_zz = discrete_derivatives(grid.z_nodes, row)
    uz = np.interp(z, grid.z_nodes, u_z)
    uzz = np.interp(z, grid.z_nodes, u_zz)
    return float(uz / (z * uzz))
