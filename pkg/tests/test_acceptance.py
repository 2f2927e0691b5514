"""Acceptance criteria for the pension example, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the lines are echoed live and
repeated in the terminal summary.
"""

import json
import time

import numpy as np
import pytest
import yaml

from endowment_hjb.asymptotics import growth_constant, merton_value, phi, phi_rk4
from endowment_hjb.cli import main
from endowment_hjb.hjb_solver import GridConfig, SchemeConfig, solve, solve_transformed_check
from endowment_hjb.model import pension_params
from endowment_hjb.montecarlo import SimConfig, policy_dominance_check, simulate_value
from endowment_hjb.policy import PolicyFunction, reconstruct_value
from endowment_hjb.validation import homogeneity_suite, merton_fixture_check, sandwich_check

RESULTS = []
MC = SimConfig(n_paths=200_000, n_steps=512, seed=20240101)


@pytest.fixture
def report(capsys):
    def emit(tag, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
        RESULTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def test_c01_merton_convergence(pension_surface, report):
    pf = PolicyFunction(pension_surface)
    late = pf.at_ratio(19.9, 25.0)
    early = pf.at_ratio(0.0, 25.0)
    z = pension_surface.grid.z_nodes
    zs = z[z >= 5.0]
    gap = np.abs(pf.at_ratio(0.0, zs) - 0.5)
    ripple = float(np.max(np.diff(gap)))
    ok_late = abs(late - 0.5) <= 0.02
    ok_early = abs(early - 0.5) <= 0.05
    ok_mono = ripple <= 1e-3
    report("C1 Merton convergence", ok_late and ok_early and ok_mono,
           f"pi(19.9,25)={late:.4f} [{'ok' if ok_late else 'off'}, tol 0.02]; "
           f"pi(0,25)={early:.4f} [{'ok' if ok_early else 'off'}, tol 0.05]; "
           f"max increase of |pi(0,z)-0.5| for z>=5: {ripple:.2e} [{'ok' if ok_mono else 'off'}]")


def test_c02_rho_sweep_ordering(report):
    rhos = (-0.5, 0.0, 0.5, 0.95)
    base = pension_params(pi_lo=-50.0, pi_hi=50.0)
    vals = {}
    for n in (200, 400):
        cfg = GridConfig(nt=n, nz=n, log_grid=True)
        vals[n] = [float(solve(base.replace(rho=r), cfg).pi_at(0.0, 1.0)) for r in rhos]
    fine, coarse = np.array(vals[400]), np.array(vals[200])
    noise = float(np.max(np.abs(fine - coarse)))
    margin = 5 * noise
    gaps = -np.diff(fine)
    ok = (bool(np.all(gaps > margin)) and fine[1] - 0.5 > margin and 0.5 - fine[3] > margin)
    report("C2 rho-sweep ordering", ok,
           "pi(0,1) for rho=" + ", ".join(f"{r:+.2f}->{v:.4f}" for r, v in zip(rhos, fine))
           + f"; min gap {gaps.min():.3f} vs 5x refinement noise {margin:.2e} (A=[-50,50])")


def test_c03_sandwich(pension_surface, report):
    p = pension_surface.params
    res = sandwich_check(pension_surface, z_cap=25.0, rel_tol=1e-3)
    K = growth_constant(p)
    phi0, phi0_rk = phi(0.0, p), phi_rk4(0.0, p)
    ok = (res.passed and K == pytest.approx(-0.01, abs=1e-15)
          and abs(phi0 - phi0_rk) <= 1e-9 and abs(phi0 - 28.33) < 5e-3)
    report("C3 sandwich bounds", ok,
           f"{res.metrics['violations']} violations for z<=25; K={K:.6g}; "
           f"phi(0)={phi0:.6f}, |closed-RK4|={abs(phi0 - phi0_rk):.1e}")


def test_c04_pde_mc_cross_validation(params, report):
    start = time.perf_counter()
    surf = solve(params, GridConfig(nt=800, nz=800))
    pde = reconstruct_value(surf, 0.0, 1.0, 1.0)
    est = simulate_value(PolicyFunction(surf), 0.0, 1.0, 1.0, params, MC)
    elapsed = time.perf_counter() - start
    allowance = 3 * est.std_error + 1e-3 * abs(pde)
    gap = abs(est.mean - pde)
    ok = gap <= allowance and elapsed <= 120 and est.floored_fraction < 1e-3
    report("C4 PDE vs Monte Carlo", ok,
           f"v_pde={pde:.6f}, v_mc={est.mean:.6f}+-{est.std_error:.1e}, |gap|={gap:.2e} "
           f"<= {allowance:.2e}; floored {est.floored_fraction:.1e}; {elapsed:.0f}s")


def test_c05_dominance(pension_surface, report):
    rep = policy_dominance_check(PolicyFunction(pension_surface), (0.0, 0.25, 0.5, 0.75, 1.0),
                                 (0.0, 1.0, 1.0), pension_surface.params, MC)
    worst = max(rep.rows, key=lambda r: -r.difference / r.paired_std_error)
    report("C5 dominance", rep.passed,
           "candidate minus challenger in paired SE: "
           + ", ".join(f"{r.challenger:g}:{r.difference / r.paired_std_error:+.1f}"
                       for r in rep.rows)
           + f" (worst {worst.challenger:g})")


def test_c06_homogeneity(pension_surface, report):
    res = homogeneity_suite(pension_surface, SimConfig(n_paths=20_000, n_steps=128, seed=7),
                            ks=(0.5, 2.0, 10.0), rel_tol=1e-10)
    worst = max(r["rel_error"] for r in res.metrics["rows"])
    report("C6 homogeneity", res.passed, f"max |ratio/k^gamma - 1| = {worst:.1e} (tol 1e-10)")


def test_c07_transform_oracle(pension_surface, report):
    p = pension_surface.params
    gap = solve_transformed_check(p, pension_surface)
    scale = float(np.max(np.abs(pension_surface.u_values)))
    flat = pension_params(mu_c=0.0, sigma_c=0.0)
    flat_gap = solve_transformed_check(flat, solve(flat, GridConfig(nt=100, nz=100)))
    ok = gap <= 5e-3 * scale and flat_gap == 0.0
    report("C7 transform oracle", ok,
           f"max gap {gap:.2e} <= {5e-3 * scale:.2e}; c=0 gap {flat_gap:g}")


def test_c08_grid_convergence(params, report):
    probes = (0.5, 1.0, 5.0)
    vals = []
    for n in (100, 200, 400):
        s = solve(params, GridConfig(nt=n, nz=n))
        vals.append(np.array([float(s.u_at(0.0, z)) for z in probes]))
    d1 = np.abs(vals[1] - vals[0])
    d2 = np.abs(vals[2] - vals[1])
    factors = d1 / d2
    report("C8 grid convergence", bool(np.all(factors >= 1.5)),
           "contraction at z=" + ", ".join(f"{z:g}:{f:.2f}" for z, f in zip(probes, factors))
           + " (need >= 1.5)")


def test_c09_merton_fixture(params, report):
    res = merton_fixture_check(params, GridConfig(nt=400, nz=400, log_grid=True), tol=1e-3)
    m = res.metrics
    report("C9 Merton fixture", res.passed,
           f"max rel value error {m['max_rel_value_error']:.1e}, "
           f"max policy error {m['max_policy_error']:.1e} (tol 1e-3, log grid)")


def test_c10_determinism(tmp_path, report):
    from pathlib import Path
    cfg = yaml.safe_load((Path(__file__).parent.parent / "configs" / "pension.yaml").read_text())
    cfg["grid"].update(nt=60, nz=80)
    cfg["sim"].update(n_paths=20_000, n_steps=64)
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(cfg))
    digests = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        main(["--config", str(path), "--out-dir", str(out), "--seed", "42", "validate"])
        manifest = json.loads((out / "manifest.json").read_text())
        digests.append(manifest["outputs"])
    ok = digests[0] == digests[1] and len(digests[0]) > 0
    report("C10 determinism", ok,
           "validate outputs " + ", ".join(f"{k}={v[:12]}" for k, v in sorted(digests[0].items()))
           + (" identical" if ok else " differ"))
