"""Model parameters and the closed-form coefficients of the reduced HJB equation.

The reduced equation for ``u(t, z) = v(t, z, 1)`` reads

    -u_t = sup_pi [ a(t, z, pi) u_zz + b(t, z, pi) u_z ] - c(t) u,
    u(T, z) = z**gamma / gamma,

with ``a``, ``b`` and ``c`` given by :func:`coeff_a`, :func:`coeff_b` and
:func:`coeff_c`.  Every other module reads its coefficients from here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class ConfigError(ValueError):
    """Invalid model or grid configuration.

    ``path`` names the offending config key (dotted), when known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant, right-continuous function of time.

    ``breakpoints`` is a sequence of ``(t_k, value_k)`` with strictly
    increasing ``t_k`` and ``t_0 = 0``; the value on ``[t_k, t_{k+1})`` is
    ``value_k`` and the last value extends to infinity.
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bps = tuple((float(t), float(v)) for t, v in self.breakpoints)
        if not bps:
            raise ConfigError("schedule needs at least one breakpoint")
        if bps[0][0] != 0.0:
            raise ConfigError("first schedule breakpoint must be at t = 0")
        times = [t for t, _ in bps]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise ConfigError("schedule breakpoint times must be strictly increasing")
        if not all(math.isfinite(t) and math.isfinite(v) for t, v in bps):
            raise ConfigError("schedule entries must be finite")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls(((0.0, value),))

    @classmethod
    def coerce(cls, obj) -> "Schedule":
        """Accept a Schedule, a scalar, or a list of ``[t, v]`` pairs."""
        if isinstance(obj, Schedule):
            return obj
        if np.isscalar(obj):
            return cls.constant(float(obj))
        return cls(tuple((p[0], p[1]) for p in obj))

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.breakpoints])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.breakpoints])

    @property
    def is_constant(self) -> bool:
        return len(self.breakpoints) == 1

    def __call__(self, t):
        idx = np.searchsorted(self.times, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.breakpoints) - 1)
        out = self.values[idx]
        return float(out) if np.ndim(out) == 0 else out

    def integral(self, t0: float, t1: float) -> float:
        """Exact integral of the schedule over ``[t0, t1]`` (``t0 <= t1``)."""
        if t1 < t0:
            return -self.integral(t1, t0)
        times = self.times
        edges = np.concatenate([[t0], times[(times > t0) & (times < t1)], [t1]])
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += self(lo) * (hi - lo)
        return float(total)

    def breaks_in(self, t0: float, t1: float) -> list[float]:
        """Breakpoint times strictly inside ``(t0, t1)``."""
        return [t for t, _ in self.breakpoints if t0 < t < t1]


@dataclass(frozen=True)
class MarketParams:
    mu: float
    r: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError("sigma must be strictly positive", "market.sigma")

    @property
    def theta(self) -> float:
        """Market price of risk ``(mu - r) / sigma``."""
        return (self.mu - self.r) / self.sigma


@dataclass(frozen=True)
class EndowmentParams:
    mu_c: Schedule
    sigma_c: Schedule
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "mu_c", Schedule.coerce(self.mu_c))
        object.__setattr__(self, "sigma_c", Schedule.coerce(self.sigma_c))
        if not -1.0 < self.rho < 1.0:
            raise ConfigError("rho must lie strictly inside (-1, 1)", "endowment.rho")
        if np.any(self.sigma_c.values < 0):
            raise ConfigError("sigma_c must be non-negative", "endowment.sigma_c")


@dataclass(frozen=True)
class UtilityParams:
    gamma: float

    def __post_init__(self):
        if not (self.gamma < 1.0 and self.gamma != 0.0):
            raise ConfigError("gamma must satisfy gamma < 1 and gamma != 0", "utility.gamma")

    def __call__(self, x):
        """Power utility ``x**gamma / gamma``."""
        return np.power(x, self.gamma) / self.gamma


@dataclass(frozen=True)
class ConstraintSet:
    pi_lo: float = -5.0
    pi_hi: float = 5.0

    def __post_init__(self):
        if not (math.isfinite(self.pi_lo) and math.isfinite(self.pi_hi)):
            raise ConfigError("constraint bounds must be finite", "constraint")
        if self.pi_lo > self.pi_hi:
            raise ConfigError("pi_lo must not exceed pi_hi", "constraint")

    def clip(self, pi):
        return np.clip(pi, self.pi_lo, self.pi_hi)

    def contains(self, pi) -> bool:
        return bool(np.all((pi >= self.pi_lo) & (pi <= self.pi_hi)))


@dataclass(frozen=True)
class ModelParams:
    market: MarketParams
    endowment: EndowmentParams
    utility: UtilityParams
    constraint: ConstraintSet = field(default_factory=ConstraintSet)
    horizon_t: float = 20.0

    def __post_init__(self):
        if not self.horizon_t > 0:
            raise ConfigError("horizon must be strictly positive", "horizon_t")

    @property
    def gamma(self) -> float:
        return self.utility.gamma

    @property
    def T(self) -> float:
        return self.horizon_t

    def breakpoints(self) -> list[float]:
        """Schedule breakpoint times strictly inside ``(0, T)``."""
        pts = set(self.endowment.mu_c.breaks_in(0.0, self.T))
        pts |= set(self.endowment.sigma_c.breaks_in(0.0, self.T))
        return sorted(pts)

    def replace(self, **changes) -> "ModelParams":
        """Copy with flat overrides, e.g. ``replace(rho=0.5, sigma_c=0.0)``."""
        market = {k: getattr(self.market, k) for k in ("mu", "r", "sigma")}
        endow = {k: getattr(self.endowment, k) for k in ("mu_c", "sigma_c", "rho")}
        cons = {k: getattr(self.constraint, k) for k in ("pi_lo", "pi_hi")}
        gamma, horizon = self.gamma, self.horizon_t
        for key, val in changes.items():
            if key in market:
                market[key] = val
            elif key in endow:
                endow[key] = val
            elif key in cons:
                cons[key] = val
            elif key == "gamma":
                gamma = val
            elif key in ("horizon_t", "T"):
                horizon = val
            else:
                raise TypeError(f"unknown parameter {key!r}")
        return ModelParams(
            MarketParams(**market),
            EndowmentParams(**endow),
            UtilityParams(gamma),
            ConstraintSet(**cons),
            horizon,
        )

    def to_dict(self) -> dict:
        return {
            "market": {"mu": self.market.mu, "r": self.market.r, "sigma": self.market.sigma},
            "endowment": {
                "rho": self.endowment.rho,
                "mu_c": [list(p) for p in self.endowment.mu_c.breakpoints],
                "sigma_c": [list(p) for p in self.endowment.sigma_c.breakpoints],
            },
            "utility": {"gamma": self.gamma},
            "constraint": {"pi_lo": self.constraint.pi_lo, "pi_hi": self.constraint.pi_hi},
            "horizon_t": self.horizon_t,
        }

    @classmethod
    def from_dict(cls, cfg: Mapping) -> "ModelParams":
        """Build from the nested config tree; raises ConfigError naming the key."""

        def get(path: str, default=None, required=True):
            node = cfg
            for part in path.split("."):
                if not isinstance(node, Mapping) or part not in node:
                    if required:
                        raise ConfigError("missing required key", path)
                    return default
                node = node[part]
            return node

        def num(path: str, default=None, required=True) -> float:
            val = get(path, default, required)
            try:
                return float(val)
            except (TypeError, ValueError):
                raise ConfigError(f"expected a number, got {val!r}", path) from None

        def sched(path: str) -> Schedule:
            val = get(path)
            try:
                return Schedule.coerce(val)
            except ConfigError as exc:
                raise ConfigError(str(exc), path) from None
            except (TypeError, IndexError, ValueError):
                raise ConfigError("expected a number or a list of [t, value] pairs", path) from None

        market = MarketParams(num("market.mu"), num("market.r"), num("market.sigma"))
        endowment = EndowmentParams(sched("endowment.mu_c"), sched("endowment.sigma_c"),
                                    num("endowment.rho"))
        utility = UtilityParams(num("utility.gamma"))
        constraint = ConstraintSet(num("constraint.pi_lo", -5.0, False),
                                   num("constraint.pi_hi", 5.0, False))
        return cls(market, endowment, utility, constraint, num("horizon_t"))


def pension_params(**overrides) -> ModelParams:
    """The 20-year pension-fund example (sigma=0.2, mu=0.04, rho=-0.5, gamma=-1, ...)."""
    base = ModelParams(
        MarketParams(mu=0.04, r=0.0, sigma=0.2),
        EndowmentParams(mu_c=Schedule.constant(0.02), sigma_c=Schedule.constant(0.13), rho=-0.5),
        UtilityParams(gamma=-1.0),
        ConstraintSet(-5.0, 5.0),
        20.0,
    )
    return base.replace(**overrides) if overrides else base


def theta(market: MarketParams) -> float:
    return market.theta


def coeff_a(t, z, pi, params: ModelParams):
    """Diffusion coefficient of ``u_zz``; non-negative for ``|rho| < 1``."""
    s = params.market.sigma
    sc = params.endowment.sigma_c(t)
    rho = params.endowment.rho
    z2 = np.square(z)
    return 0.5 * sc**2 * z2 + 0.5 * (pi * s) ** 2 * z2 - rho * s * sc * pi * z2


def coeff_b(t, z, pi, params: ModelParams, ybar: float = 1.0):
    """Drift coefficient of ``u_z``.

    ``ybar`` is the endowment level of the parametrized reduction
    (``ybar = 1`` is the standard reduced equation, ``ybar = 0`` switches
    the endowment inflow off).
    """
    m = params.market
    mc = params.endowment.mu_c(t)
    sc = params.endowment.sigma_c(t)
    rho = params.endowment.rho
    g = params.gamma
    return (ybar - mc * z + sc**2 * (1 - g) * z + (pi * m.sigma * m.theta + m.r) * z
            + rho * sc * m.sigma * pi * (g - 1) * z)


def coeff_c(t, params: ModelParams):
    """Zeroth-order coefficient; the equation carries ``-c(t) u``."""
    g = params.gamma
    mc = params.endowment.mu_c(t)
    sc = params.endowment.sigma_c(t)
    return -g * (mc - 0.5 * sc**2 * (1 - g))


def integrated_c(t0: float, t1: float, params: ModelParams) -> float:
    """Exact ``int_{t0}^{t1} c(s) ds`` for piecewise-constant schedules."""
    times = sorted({t0, t1, *[t for t in params.breakpoints() if t0 < t < t1]})
    return float(sum(coeff_c(lo, params) * (hi - lo) for lo, hi in zip(times[:-1], times[1:])))


def fichera_limit(t, pi, params: ModelParams):
    """``lim_{z -> 0} b - a_z``.

    Both ``a_z`` (linear in z) and the z-terms of ``b`` vanish at the origin,
    so the limit is the intercept of ``b``, computed here rather than
    hard-coded.
    """
    z = 0.0
    # a(t, z, pi) = alpha * z**2, hence a_z = 2 alpha z
    a_z = 2.0 * coeff_a(t, 1.0, pi, params) * z
    return coeff_b(t, z, pi, params) - a_z


@dataclass(frozen=True)
class MertonRatio:
    value: float
    unconstrained: float
    clamped: bool

    def __float__(self):
        return self.value


def merton_ratio(params: ModelParams) -> MertonRatio:
    """``theta / (sigma (1 - gamma))`` projected onto the constraint interval."""
    m = params.market
    raw = m.theta / (m.sigma * (1.0 - params.gamma))
    val = float(params.constraint.clip(raw))
    return MertonRatio(val, raw, val != raw)


def load_config(path) -> dict:
    """Read a YAML (or JSON) config tree."""
    import yaml

    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, Mapping):
        raise ConfigError("config root must be a mapping")
    return dict(data)
