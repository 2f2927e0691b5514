"""Monte Carlo simulation of the controlled wealth / endowment system.

The endowment rate is stepped exactly in log space; wealth uses Euler-Maruyama
with a positivity floor.  Paths are simulated in fixed-size blocks, each with
its own generator derived from ``(seed, block_index)``, so results do not
depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .model import ModelParams
from .policy import PolicyFunction

Policy = Union[PolicyFunction, float, Callable]


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 200_000
    n_steps: int = 512
    seed: int = 20240101
    block_size: int = 8192
    floor_rel: float = 1e-12

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be positive")
        if self.block_size < 1:
            raise ValueError("block_size must be positive")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    floored_fraction: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["paths"] = d.pop("n_paths")
        return d


@dataclass
class PathResult:
    """Per-path terminal utilities plus bookkeeping (used for paired comparisons)."""

    utilities: np.ndarray
    floored_steps: int
    total_steps: int
    min_endowment: float

    def estimate(self, seed: int) -> McEstimate:
        u = self.utilities
        n = u.size
        se = float(np.std(u, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return McEstimate(float(np.mean(u)), se, n, seed, self.floored_steps / self.total_steps)


def _control(policy: Policy, t: float, a: np.ndarray, c: np.ndarray) -> np.ndarray | float:
    if isinstance(policy, PolicyFunction):
        return policy.at_ratio(t, a / c)
    if callable(policy):
        return policy(t, a, c)
    return float(policy)


def _simulate_block(policy: Policy, t0: float, x0: float, y0: float, params: ModelParams,
                    cfg: SimConfig, block: int, n: int):
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(block,))
    rng = np.random.Generator(np.random.PCG64(ss))
    m = params.market
    e = params.endowment
    rho_bar = math.sqrt(1.0 - e.rho**2)
    dt = (params.T - t0) / cfg.n_steps
    sqdt = math.sqrt(dt)
    floor = cfg.floor_rel * x0
    a = np.full(n, float(x0))
    c = np.full(n, float(y0))
    floored = 0
    min_c = float(y0)
    for k in range(cfg.n_steps):
        t = t0 + k * dt
        dw = rng.standard_normal((2, n)) * sqdt
        dw1 = dw[0]
        dwc = e.rho * dw1 + rho_bar * dw[1]
        pi = _control(policy, t, a, c)
        a_new = a + (a * (pi * m.sigma * m.theta + m.r) + c) * dt + a * pi * m.sigma * dw1
        low = a_new < floor
        if low.any():
            floored += int(np.count_nonzero(low))
            a_new[low] = floor
        # exact lognormal step; piecewise-constant schedules are integrated over the step
        t1 = t + dt
        var = _sq_integral(e.sigma_c, t, t1)
        drift = e.mu_c.integral(t, t1) - 0.5 * var
        vol = math.sqrt(var / dt)
        c = c * np.exp(drift + vol * dwc)
        a = a_new
        min_c = min(min_c, float(c.min()))
    return params.utility(a), floored, min_c


def _sq_integral(schedule, t0: float, t1: float) -> float:
    times = sorted({t0, t1, *schedule.breaks_in(t0, t1)})
    return float(sum(schedule(lo) ** 2 * (hi - lo) for lo, hi in zip(times[:-1], times[1:])))


def simulate_paths(policy: Policy, t0: float, x0: float, y0: float, params: ModelParams,
                   cfg: SimConfig, threads: int = 1) -> PathResult:
    """Simulate ``cfg.n_paths`` paths and return the per-path terminal utilities."""
    if not (0.0 <= t0 < params.T):
        raise ValueError(f"t0={t0} must lie in [0, T)")
    if not (x0 > 0 and y0 > 0):
        raise ValueError("initial wealth and endowment must be strictly positive")
    sizes = [min(cfg.block_size, cfg.n_paths - s) for s in range(0, cfg.n_paths, cfg.block_size)]

    def run(b):
        return _simulate_block(policy, t0, x0, y0, params, cfg, b, sizes[b])

    if threads > 1 and len(sizes) > 1:
        # PolicyFunction caches one time row, so each worker gets its own copy
        if isinstance(policy, PolicyFunction):
            def run(b, _surface=policy.surface):  # noqa: F811
                return _simulate_block(PolicyFunction(_surface), t0, x0, y0, params, cfg, b,
                                       sizes[b])
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(len(sizes))))
    else:
        results = [run(b) for b in range(len(sizes))]
    utilities = np.concatenate([r[0] for r in results])
    floored = sum(r[1] for r in results)
    return PathResult(utilities, floored, cfg.n_paths * cfg.n_steps, min(r[2] for r in results))


def simulate_value(policy: Policy, t0: float, x0: float, y0: float, params: ModelParams,
                   cfg: SimConfig | None = None, threads: int = 1) -> McEstimate:
    """Estimate ``E[U(A_T)]`` from ``(t0, x0, y0)`` under ``policy``.

    ``policy`` is a :class:`PolicyFunction`, a constant proportion, or any
    callable ``(t, wealth, endowment) -> proportion``.
    """
    cfg = cfg or SimConfig()
    return simulate_paths(policy, t0, x0, y0, params, cfg, threads).estimate(cfg.seed)


def homogeneity_check(policy: Policy, k: float, base_state: Sequence[float],
                      params: ModelParams, cfg: SimConfig | None = None) -> tuple[float, float]:
    """Ratio of estimates at ``(k x0, k y0)`` and ``(x0, y0)`` under common random numbers.

    Returns ``(observed_ratio, k**gamma)``.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    cfg = cfg or SimConfig()
    t0, x0, y0 = base_state
    base = simulate_value(policy, t0, x0, y0, params, cfg)
    scaled = simulate_value(policy, t0, k * x0, k * y0, params, cfg)
    return scaled.mean / base.mean, k ** params.gamma


@dataclass(frozen=True)
class DominanceRow:
    challenger: float
    challenger_mean: float
    difference: float
    paired_std_error: float
    beaten: bool


@dataclass(frozen=True)
class DominanceReport:
    candidate: McEstimate
    rows: tuple[DominanceRow, ...]
    n_se: float

    @property
    def passed(self) -> bool:
        return not any(r.beaten for r in self.rows)


def policy_dominance_check(candidate: Policy, challengers: Sequence, state: Sequence[float],
                           params: ModelParams, cfg: SimConfig | None = None,
                           n_se: float = 3.0, threads: int = 1) -> DominanceReport:
    """Paired comparison of ``candidate`` against each challenger with common random numbers.

    A challenger "beats" the candidate when its mean exceeds the candidate's by
    more than ``n_se`` paired standard errors.
    """
    cfg = cfg or SimConfig()
    lo, hi = params.constraint.pi_lo, params.constraint.pi_hi
    t0, x0, y0 = state
    base = simulate_paths(candidate, t0, x0, y0, params, cfg, threads)
    rows = []
    for ch in challengers:
        if not callable(ch) and not (lo <= float(ch) <= hi):
            raise ValueError(f"challenger {ch} outside the constraint set")
        other = simulate_paths(ch, t0, x0, y0, params, cfg, threads)
        diff = base.utilities - other.utilities
        n = diff.size
        se = float(np.std(diff, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        d = float(np.mean(diff))
        rows.append(DominanceRow(float(ch) if not callable(ch) else float("nan"),
                                 float(np.mean(other.utilities)), d, se, -d > n_se * se))
    return DominanceReport(base.estimate(cfg.seed), tuple(rows), n_se)
