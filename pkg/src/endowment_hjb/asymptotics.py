"""Growth constant, endowment envelope and the analytic sandwich bounds.

For large wealth-to-income ratios the reduced value function behaves like the
classical Merton value ``exp(K (T - t)) z**gamma / gamma``.  An upper envelope
is obtained by adding the capitalised future endowment ``phi(t)`` to wealth,
where ``phi`` solves the linear ODE

    phi'(t) = kappa(t) phi(t) - 1,   phi(T) = 0,
    kappa(t) = r - mu_C(t) + theta rho sigma_C(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams


def growth_constant(params: ModelParams) -> float:
    """``K = theta**2 / 2 * gamma / (1 - gamma) + r * gamma``."""
    g = params.gamma
    th = params.market.theta
    return 0.5 * th**2 * g / (1.0 - g) + params.market.r * g


def kappa(t, params: ModelParams):
    m = params.market
    e = params.endowment
    return m.r - e.mu_c(t) + m.theta * e.rho * e.sigma_c(t)


def _segments(t: float, params: ModelParams) -> list[tuple[float, float]]:
    """Constant-kappa segments covering ``[t, T]``, ordered from T backwards."""
    edges = sorted({t, params.T, *[b for b in params.breakpoints() if t < b < params.T]})
    return list(zip(edges[:-1], edges[1:]))[::-1]


def _check_time(t: float, params: ModelParams):
    if not (0.0 <= t <= params.T):
        raise ValueError(f"t={t} outside [0, {params.T}]")


def phi(t: float, params: ModelParams) -> float:
    """Closed-form ``phi(t)``, solved segment by segment backwards from T."""
    _check_time(t, params)
    val = 0.0
    for lo, hi in _segments(t, params):
        k = kappa(lo, params)
        tau = lo - hi
        if k == 0.0:
            val = val - tau
        else:
            # expm1 keeps (1 - e^{k tau}) / k accurate for tiny k
            val = val * math.exp(k * tau) - math.expm1(k * tau) / k
    return val


def phi_rk4(t: float, params: ModelParams, max_step: float = 1e-2) -> float:
    """Classical RK4 integration of the envelope ODE from T back to ``t``.

    Steps are aligned to schedule breakpoints so every step sees a constant
    coefficient.
    """
    _check_time(t, params)
    y = 0.0
    for lo, hi in _segments(t, params):
        n = max(1, int(math.ceil((hi - lo) / max_step)))
        h = -(hi - lo) / n
        # sampled mid-segment so right-continuity at ``lo`` never leaks in
        k = float(kappa(0.5 * (lo + hi), params))
        for _ in range(n):
            k1 = k * y - 1.0
            k2 = k * (y + 0.5 * h * k1) - 1.0
            k3 = k * (y + 0.5 * h * k2) - 1.0
            k4 = k * (y + h * k3) - 1.0
            y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def sandwich_bounds(t: float, z, params: ModelParams, ybar: float = 1.0):
    """Lower and upper analytic bounds on ``u(t, z)`` (``y = 1`` reduction).

    ``ybar`` scales the endowment; ``ybar = 0`` collapses both bounds onto
    the Merton value.
    """
    g = params.gamma
    scale = math.exp(growth_constant(params) * (params.T - t))
    z = np.asarray(z, dtype=float)
    lower = scale * np.power(z, g) / g
    upper = scale * np.power(z + ybar * phi(t, params), g) / g
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def merton_value(t, z, params: ModelParams):
    """Value of the problem without endowment: ``exp(K (T - t)) z**gamma / gamma``."""
    g = params.gamma
    return np.exp(growth_constant(params) * (params.T - np.asarray(t))) * np.power(z, g) / g


@dataclass
class AsymptoticReport:
    """Ratio ``u / merton_value`` at the probe column, one entry per time row."""

    t: np.ndarray
    z_probe: float
    ratio: np.ndarray
    lower_ratio: np.ndarray
    upper_ratio: np.ndarray
    tolerance: float
    band_ok: np.ndarray = field(init=False)
    bracket_ok: np.ndarray = field(init=False)

    def __post_init__(self):
        dev = np.abs(self.ratio - 1.0)
        self.band_ok = dev <= self.tolerance
        lo = np.minimum(self.lower_ratio, self.upper_ratio)
        hi = np.maximum(self.lower_ratio, self.upper_ratio)
        slack = 1e-3 * np.abs(self.ratio)
        self.bracket_ok = (self.ratio >= lo - slack) & (self.ratio <= hi + slack)

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.ratio - 1.0)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.bracket_ok))


def check_asymptotic_equivalence(surface, params: ModelParams | None = None,
                                 z_probe: float | None = None,
                                 tolerance: float = 0.1) -> AsymptoticReport:
    """Compare each time row of ``surface`` with the Merton asymptote at ``z_probe``.

    ``z_probe`` defaults to half the truncation point and is snapped to the
    nearest grid node, so no interpolation error enters.  The soft band
    ``|ratio - 1| <= tolerance`` is reported per row; the pass/fail verdict
    uses the rigorous bracket implied by :func:`sandwich_bounds`.
    """
    params = params or surface.params
    grid = surface.grid
    target = 0.5 * grid.z_max if z_probe is None else float(z_probe)
    j = int(np.argmin(np.abs(grid.z_nodes - target)))
    zp = float(grid.z_nodes[j])
    ybar = surface.ybar
    ratios, lo_r, hi_r = [], [], []
    for i, t in enumerate(grid.t_nodes):
        u = float(surface.u_values[i, j])
        base = float(merton_value(t, zp, params))
        lower, upper = sandwich_bounds(t, zp, params, ybar)
        ratios.append(u / base)
        lo_r.append(lower / base)
        hi_r.append(upper / base)
    return AsymptoticReport(grid.t_nodes.copy(), zp, np.array(ratios), np.array(lo_r),
                            np.array(hi_r), tolerance)
