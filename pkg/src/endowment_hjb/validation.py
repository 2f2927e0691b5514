"""End-to-end consistency checks shared by the ``validate`` command and the acceptance suite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import growth_constant, merton_value, sandwich_bounds
from .hjb_solver import GridConfig, SchemeConfig, SolutionSurface, solve, solve_transformed_check
from .model import ModelParams
from .montecarlo import SimConfig, homogeneity_check, policy_dominance_check, simulate_value
from .policy import PolicyFunction, reconstruct_value


@dataclass
class CheckResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "metrics": self.metrics}


def sandwich_check(surface: SolutionSurface, z_cap: float | None = None,
                   rel_tol: float = 1e-3) -> CheckResult:
    """Every node with ``z <= z_cap`` lies inside the analytic bounds up to ``rel_tol |u|``."""
    g = surface.grid
    cap = 0.5 * g.z_max if z_cap is None else z_cap
    mask = g.z_nodes <= cap
    z = g.z_nodes[mask]
    worst_lo = worst_hi = -math.inf
    n_bad = 0
    for i, t in enumerate(g.t_nodes):
        lo, hi = sandwich_bounds(t, z, surface.params, surface.ybar)
        u = surface.u_values[i, mask]
        tol = rel_tol * np.abs(u)
        below = lo - tol - u
        above = u - hi - tol
        n_bad += int(np.count_nonzero(below > 0) + np.count_nonzero(above > 0))
        worst_lo = max(worst_lo, float(below.max()))
        worst_hi = max(worst_hi, float(above.max()))
    return CheckResult("sandwich", n_bad == 0, {
        "z_cap": cap, "violations": n_bad,
        "max_lower_excess": worst_lo, "max_upper_excess": worst_hi,
    })


def transform_check(surface: SolutionSurface, rel_tol: float = 5e-3) -> CheckResult:
    gap = solve_transformed_check(surface.params, surface)
    scale = float(np.max(np.abs(surface.u_values)))
    return CheckResult("transform_oracle", gap <= rel_tol * scale,
                       {"max_gap": gap, "max_abs_u": scale, "rel_tol": rel_tol})


def merton_fixture_check(params: ModelParams, grid_cfg: GridConfig | None = None,
                         scheme_cfg: SchemeConfig | None = None, tol: float = 1e-3,
                         t_probe=(0.0, 10.0), z_probe=(0.5, 1.0, 5.0, 10.0, 25.0)) -> CheckResult:
    """Solve with the endowment switched off and compare to the Merton closed form."""
    fixture = params.replace(sigma_c=0.0, mu_c=0.0)
    grid_cfg = grid_cfg or GridConfig(log_grid=True)
    base = scheme_cfg or SchemeConfig()
    scheme = SchemeConfig(**{**base.__dict__, "ybar": 0.0})
    surf = solve(fixture, grid_cfg, scheme)
    pf = PolicyFunction(surf)
    target = float(pf._far_field)
    worst_v = worst_p = 0.0
    for t in t_probe:
        for z in z_probe:
            u = float(surf.u_at(t, z))
            ref = float(merton_value(t, z, fixture))
            worst_v = max(worst_v, abs(u / ref - 1.0))
            worst_p = max(worst_p, abs(pf.at_ratio(t, z) - target))
    return CheckResult("merton_fixture", worst_v <= tol and worst_p <= tol, {
        "max_rel_value_error": worst_v, "max_policy_error": worst_p,
        "merton_ratio": target, "K": growth_constant(fixture),
    })


def mc_cross_check(surface: SolutionSurface, cfg: SimConfig, state=(0.0, 1.0, 1.0),
                   n_se: float = 3.0, euler_rel: float = 1e-3, threads: int = 1) -> CheckResult:
    t0, x0, y0 = state
    pde = reconstruct_value(surface, t0, x0, y0)
    est = simulate_value(PolicyFunction(surface), t0, x0, y0, surface.params, cfg, threads)
    allowance = n_se * est.std_error + euler_rel * abs(pde)
    return CheckResult("mc_cross_validation", abs(est.mean - pde) <= allowance, {
        "pde_value": pde, "mc_mean": est.mean, "mc_std_error": est.std_error,
        "gap": est.mean - pde, "allowance": allowance,
        "floored_fraction": est.floored_fraction, "paths": est.n_paths, "seed": est.seed,
    })


def dominance_check(surface: SolutionSurface, cfg: SimConfig, state=(0.0, 1.0, 1.0),
                    challengers=(0.0, 0.25, 0.5, 0.75, 1.0), threads: int = 1) -> CheckResult:
    rep = policy_dominance_check(PolicyFunction(surface), challengers, state, surface.params,
                                 cfg, threads=threads)
    return CheckResult("dominance", rep.passed, {
        "candidate_mean": rep.candidate.mean,
        "rows": [{"challenger": r.challenger, "difference": r.difference,
                  "paired_std_error": r.paired_std_error, "beaten": r.beaten} for r in rep.rows],
    })


def homogeneity_suite(surface: SolutionSurface, cfg: SimConfig, ks=(0.5, 2.0, 10.0),
                      state=(0.0, 1.0, 1.0), rel_tol: float = 1e-10) -> CheckResult:
    pf = PolicyFunction(surface)
    rows = []
    ok = True
    for k in ks:
        ratio, expected = homogeneity_check(pf, k, state, surface.params, cfg)
        err = abs(ratio / expected - 1.0)
        ok &= err <= rel_tol
        rows.append({"k": k, "ratio": ratio, "expected": expected, "rel_error": err})
    return CheckResult("homogeneity", ok, {"rows": rows, "rel_tol": rel_tol})
