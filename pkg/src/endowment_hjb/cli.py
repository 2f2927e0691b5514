"""Command-line entry point ``endowment-hjb``.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 validation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import growth_constant, phi, sandwich_bounds
from .hjb_solver import GridConfig, SchemeConfig, SolverError, solve
from .model import ConfigError, ModelParams, load_config, merton_ratio
from .montecarlo import SimConfig, simulate_value
from .policy import DomainError, PolicyFunction, evaluate_policy
from .serialization import (dump_json, export_surface_csv, load_surface, save_surface, sha256,
                            write_csv)
from . import validation

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 0, 2, 3, 4

logger = logging.getLogger("endowment_hjb")

DEFAULT_RHOS = (-0.5, 0.0, 0.5, 0.95)


class Run:
    """Resolved settings for one invocation (config file plus flag overrides)."""

    def __init__(self, args):
        self.args = args
        self.raw = load_config(args.config) if args.config else None
        self.out_dir = Path(args.out_dir)
        self.outputs: list[Path] = []

    @property
    def params(self) -> ModelParams:
        if self.raw is None:
            raise ConfigError("this command needs --config")
        return ModelParams.from_dict(self.raw)

    def _section(self, name):
        sec = (self.raw or {}).get(name) or {}
        if not isinstance(sec, dict):
            raise ConfigError("expected a mapping", name)
        return sec

    def grid(self) -> GridConfig:
        g = dict(self._section("grid"))
        a = self.args
        for key, flag in (("nt", a.grid_nt), ("nz", a.grid_nz), ("z_min", a.z_min),
                          ("z_max", a.z_max)):
            if flag is not None:
                g[key] = flag
        if a.log_grid:
            g["log_grid"] = True
        unknown = set(g) - {"nt", "nz", "z_min", "z_max", "log_grid"}
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", "grid")
        try:
            return GridConfig(**{k: (int(v) if k in ("nt", "nz") else v) for k, v in g.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), "grid") from None

    def scheme(self) -> SchemeConfig:
        s = dict(self._section("scheme"))
        if self.args.tol_policy is not None:
            s["tol_policy"] = self.args.tol_policy
        if self.args.max_policy_iters is not None:
            s["max_policy_iters"] = self.args.max_policy_iters
        try:
            return SchemeConfig(**s)
        except TypeError as exc:
            raise ConfigError(str(exc), "scheme") from None

    def sim(self, paths=None, steps=None) -> SimConfig:
        s = dict(self._section("sim"))
        if self.args.seed is not None:
            s["seed"] = self.args.seed
        if paths is not None:
            s["n_paths"] = paths
        if steps is not None:
            s["n_steps"] = steps
        try:
            return SimConfig(**s)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "sim") from None

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        p = self.out_dir / name
        self.outputs.append(p)
        return p

    def write_manifest(self, command: str, extra: dict | None = None):
        manifest = {
            "tool": "endowment-hjb",
            "version": __version__,
            "command": command,
            "created_unix": time.time(),
            "config": self.raw,
            "outputs": {p.name: sha256(p) for p in self.outputs if p.exists()},
        }
        for name, fn in (("grid", self.grid), ("scheme", self.scheme), ("sim", self.sim)):
            try:
                manifest[name] = asdict(fn())
            except ConfigError:
                pass
        if extra:
            manifest.update(extra)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        dump_json(manifest, self.out_dir / "manifest.json")


def _parse_state(text: str) -> tuple[float, float, float]:
    try:
        t, x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected t,x,y") from None
    return t, x, y


def _parse_floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers") from None


# ---------------------------------------------------------------- commands

def cmd_solve(run: Run) -> int:
    surface = solve(run.params, run.grid(), run.scheme())
    save_surface(surface, run.path("surface.npz"))
    export_surface_csv(surface, run.path("surface.csv"))
    iters = [d.iterations for d in surface.diagnostics]
    run.write_manifest("solve", {"max_policy_iterations": max(iters) if iters else 0})
    print(f"u(0, 1) = {surface.u_at(0.0, 1.0):.10g}; wrote {run.out_dir}")
    return EXIT_OK


def cmd_policy(run: Run) -> int:
    a = run.args
    surface = load_surface(a.surface)
    pf = PolicyFunction(surface)
    if a.policy_cmd == "eval":
        t, x, y = a.at
        print(fmt_float(evaluate_policy(pf, t, x, y)))
        return EXIT_OK
    out = Path(a.csv) if a.csv else run.path("policy.csv")
    g = surface.grid
    rows = ((t, z, surface.pi_values[i, j]) for i, t in enumerate(g.t_nodes)
            for j, z in enumerate(g.z_nodes))
    write_csv(out, ("t", "z", "pi"), rows)
    return EXIT_OK


def cmd_asymptotics(run: Run) -> int:
    surface = load_surface(run.args.surface)
    params = surface.params
    g = surface.grid
    rows = []
    for i, t in enumerate(g.t_nodes):
        lo, hi = sandwich_bounds(t, g.z_nodes, params, surface.ybar)
        base = np.exp(growth_constant(params) * (params.T - t)) * np.power(g.z_nodes, params.gamma) / params.gamma
        u = surface.u_values[i]
        rows.extend(zip(np.full(g.z_nodes.size, t), g.z_nodes, u, lo, hi, u / base))
    out = Path(run.args.csv) if run.args.csv else run.path("asymptotics.csv")
    write_csv(out, ("t", "z", "u", "lower", "upper", "ratio"), rows)
    return EXIT_OK


def cmd_mc(run: Run) -> int:
    a = run.args
    surface = load_surface(a.surface)
    t, x, y = a.at
    cfg = run.sim(a.paths, a.steps)
    est = simulate_value(PolicyFunction(surface), t, x, y, surface.params, cfg, a.threads)
    print(dump_json(est.to_dict()))
    return EXIT_OK


def rho_sweep(run: Run, rhos, out_name="rho_sweep.csv"):
    """Solve once per rho; returns ``{rho: pi(0, 1) or None}`` and writes the long CSV."""
    base = run.params
    grid, scheme = run.grid(), run.scheme()
    out = run.path(out_name)
    summary = {}
    rows = []
    for rho in rhos:
        try:
            surf = solve(base.replace(rho=rho), grid, scheme)
        except (SolverError, ConfigError) as exc:
            logger.error("rho=%s failed: %s", rho, exc)
            summary[rho] = None
            continue
        g = surf.grid
        rows.extend((rho, t, z, surf.pi_values[i, j]) for i, t in enumerate(g.t_nodes)
                    for j, z in enumerate(g.z_nodes))
        summary[rho] = float(surf.pi_at(0.0, 1.0))
    write_csv(out, ("rho", "t", "z", "pi"), rows)
    return summary


def cmd_rho_sweep(run: Run) -> int:
    rhos = run.args.rhos if run.args.rhos is not None else list(DEFAULT_RHOS)
    summary = rho_sweep(run, rhos)
    run.write_manifest("rho-sweep", {"pi_at_0_1": {repr(float(k)): v for k, v in summary.items()}})
    for rho, pi in summary.items():
        print(f"rho={rho:+.3f}  pi(0,1)={'failed' if pi is None else f'{pi:.6f}'}")
    return EXIT_SOLVER if any(v is None for v in summary.values()) else EXIT_OK


def cmd_validate(run: Run) -> int:
    a = run.args
    params = run.params
    grid, scheme = run.grid(), run.scheme()
    surface = solve(params, grid, scheme)
    checks = [validation.sandwich_check(surface), validation.transform_check(surface)]
    checks.append(validation.merton_fixture_check(
        params, GridConfig(grid.nt, grid.nz, max(grid.z_min, 1e-3), grid.z_max, True), scheme))
    if not a.skip_mc:
        cfg = run.sim(a.paths, a.steps)
        checks.append(validation.mc_cross_check(surface, cfg, threads=a.threads))
        checks.append(validation.dominance_check(surface, cfg, threads=a.threads))
        small = SimConfig(min(cfg.n_paths, 4096), min(cfg.n_steps, 64), cfg.seed)
        checks.append(validation.homogeneity_suite(surface, small))
    report = {"passed": all(c.passed for c in checks), "checks": [c.to_dict() for c in checks]}
    dump_json(report, run.path("validate.json"))
    run.write_manifest("validate")
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}")
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def cmd_repro(run: Run) -> int:
    params = run.params
    surface = solve(params, run.grid(), run.scheme())
    save_surface(surface, run.path("surface.npz"))
    export_surface_csv(surface, run.path("surface.csv"))
    # pi against z for a few dates, the shape of the policy-vs-ratio plots
    g = surface.grid
    times = [0.0, 5.0, 10.0, 15.0, 19.0, 19.9]
    times = [t for t in times if t <= params.T]
    write_csv(run.path("fig_policy_vs_z.csv"), ("t", "z", "pi"),
              ((t, z, p) for t in times for z, p in zip(g.z_nodes, surface.pi_at(t, g.z_nodes))))
    summary = rho_sweep(run, run.args.rhos if run.args.rhos is not None else DEFAULT_RHOS,
                        "fig_rho_sweep.csv")
    run.write_manifest("repro-paper", {
        "merton_ratio": merton_ratio(params).value,
        "K": growth_constant(params),
        "phi_0": phi(0.0, params),
        "pi_at_0_1": {repr(float(k)): v for k, v in summary.items()},
    })
    print(f"wrote {run.out_dir}")
    return EXIT_OK


def fmt_float(x) -> str:
    return "%.17g" % float(x)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="endowment-hjb", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="YAML model/grid/scheme/sim config")
    p.add_argument("--out-dir", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, help="Monte Carlo seed override")
    p.add_argument("--threads", type=int, default=1, help="Monte Carlo worker threads")
    p.add_argument("--grid-nt", type=int)
    p.add_argument("--grid-nz", type=int)
    p.add_argument("--z-min", type=float)
    p.add_argument("--z-max", type=float)
    p.add_argument("--log-grid", action="store_true")
    p.add_argument("--tol-policy", type=float)
    p.add_argument("--max-policy-iters", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", help="solve the HJB equation and write the surface")

    pol = sub.add_parser("policy", help="evaluate or export the policy")
    psub = pol.add_subparsers(dest="policy_cmd", required=True)
    ev = psub.add_parser("eval")
    ev.add_argument("--surface", required=True)
    ev.add_argument("--at", type=_parse_state, required=True, metavar="t,x,y")
    ex = psub.add_parser("export")
    ex.add_argument("--surface", required=True)
    ex.add_argument("--csv")

    asy = sub.add_parser("asymptotics", help="asymptotic diagnostics")
    asub = asy.add_subparsers(dest="asy_cmd", required=True)
    rep = asub.add_parser("report")
    rep.add_argument("--surface", required=True)
    rep.add_argument("--csv")

    mc = sub.add_parser("mc", help="Monte Carlo estimates")
    msub = mc.add_subparsers(dest="mc_cmd", required=True)
    mv = msub.add_parser("value")
    mv.add_argument("--surface", required=True)
    mv.add_argument("--at", type=_parse_state, required=True, metavar="t,x,y")
    mv.add_argument("--paths", type=int)
    mv.add_argument("--steps", type=int)

    rs = sub.add_parser("rho-sweep", help="solve for a list of correlations")
    rs.add_argument("--rhos", type=_parse_floats, help="comma-separated, e.g. -0.5,0,0.5,0.95")

    va = sub.add_parser("validate", help="run the end-to-end consistency checks")
    va.add_argument("--paths", type=int)
    va.add_argument("--steps", type=int)
    va.add_argument("--skip-mc", action="store_true")

    rp = sub.add_parser("repro-paper", help="pension example plus policy and correlation figures")
    rp.add_argument("--rhos", type=_parse_floats)
    return p


COMMANDS = {
    "solve": cmd_solve, "policy": cmd_policy, "asymptotics": cmd_asymptotics, "mc": cmd_mc,
    "rho-sweep": cmd_rho_sweep, "validate": cmd_validate, "repro-paper": cmd_repro,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run = Run(args)
        return COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        if exc.time_index is not None:
            print(f"  time index {exc.time_index}, residuals {exc.residuals[-5:]}",
                  file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
