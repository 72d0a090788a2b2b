"""Acceptance criteria 1-12, one test each; every test records a PASS/FAIL line.

The lines are printed in the pytest terminal summary, and by
``python3 tests/test_acceptance.py``.
"""

import json
import math
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import harness  # noqa: E402
from charnets import fractal, singular  # noqa: E402
from charnets.oracles import cps_corner_fixed_point, stretch_factors_from_a  # noqa: E402
from charnets.systems import NormalSystem  # noqa: E402

RESULTS: dict = {}
CLI_FIXTURES = Path(__file__).parent / "fixtures" / "cli"
CPS21 = NormalSystem.cps(2.0, 1.0)


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[n]


def test_c01_blowup_identities_converge():
    r = harness.spiral_residuals(n=100)
    ratios = r[:-1] / r[1:]
    record(1, bool(np.all(ratios >= 1.8)),
           f"residual ratios per halving {np.round(ratios.ravel(), 3).tolist()} (need >= 1.8)")


def test_c02_goursat_second_order():
    from test_goursat import spiral_errors
    errs = spiral_errors((25, 49, 97, 193))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    record(2, bool(np.all(np.abs(orders - 2.0) <= 0.3)),
           f"errors {[f'{e:.3e}' for e in errs]}, orders {np.round(orders, 3).tolist()} (need 2.0 +- 0.3)")


def test_c03_constant_solution_exact():
    from test_goursat import _rectangle
    worst = 0.0
    for method in ("cell", "metric"):
        g, C1, C2 = _rectangle(method)
        worst = max(worst, float(np.max(np.abs(g.zeta - (C1.z[:, None] + C2.z[None, :] - C1.z[0])))))
    record(3, worst <= 1e-12, f"max node error {worst:.2e} (need <= 1e-12)")


def _quad_ok(reps, K):
    from charnets import net_analysis as na
    return all(na.ratio_within(r, K, 0.05) for r in reps)


def test_c04_quasi_hp_ratios():
    from charnets.systems import quasi_hp_constant
    sp = harness.spiral_quads(200)
    K_sp = quasi_hp_constant(harness.SPIRAL.system)
    hp_dev = max(abs(r["ratio"] - 1) for r in sp if r["status"] == "ratio")
    tab, K_tab = harness.tabulated_quads(200)
    ok = (len(sp) == 200 and len(tab) == 200 and _quad_ok(sp, K_sp) and _quad_ok(tab, K_tab)
          and hp_dev <= 1e-3 and K_tab <= 2)
    record(4, ok, f"spiral 200 quads max |ratio-1| {hp_dev:.1e}; tabulated (K={K_tab:.3f}) "
                  f"200 quads within [1/K-0.05, K+0.05]: {_quad_ok(tab, K_tab)}")


def test_c05_characteristic_length_bound():
    from test_goursat import blowup_instances
    inst = blowup_instances(20)
    worst_fold = max(f / b for f, _, b in inst)
    worst_reach = max(r / b for _, r, b in inst)
    ok = worst_fold <= 1.1 and worst_reach <= 1.1
    record(5, ok, f"20 instances: latest fold at {worst_fold:.3f} K/kappa, longest fold-free "
                  f"extension {worst_reach:.3f} K/kappa (need <= 1.1)")


def test_c06_diameter_bound():
    from charnets import net_analysis as na
    samples = harness.diameter_samples(50)
    viol = sum(na.arc_diameter(C) > 5 * lam * 1.01 for C, lam in samples)
    worst = max(na.arc_diameter(C) / (5 * lam) for C, lam in samples)
    record(6, viol == 0 and len(samples) == 50, f"50 arcs, worst diam/(5 lambda(E)) = {worst:.3f}, violations {viol}")


def test_c07_gm_formulas():
    exact = stretch_factors_from_a(1.5) == (2.0, 0.5)
    rng = np.random.default_rng(7)
    worst = max(abs(m1 * m2 - 1) for m1, m2 in (stretch_factors_from_a(a) for a in rng.uniform(-10, 10, 100)))
    record(7, exact and worst <= 1e-12, f"a=3/2 -> (2, 0.5) exact: {exact}; max |m1 m2 - 1| = {worst:.1e}")


def test_c08_angle_shift_ledger():
    led = singular.angle_shift_ledger(CPS21, 0.02, n=10)
    single = max(led[k]["max_error"] for k in ("f1", "f2", "g1", "g2"))
    comp = max(led[k]["max_error"] for k in ("f1g2", "f2g1"))
    samples = min(v["samples"] for v in led.values())
    record(8, single <= 1e-6 and comp <= 2e-6 and samples >= 10,
           f"four shifts max error {single:.1e} (<= 1e-6), composed -pi error {comp:.1e} (<= 2e-6), "
           f"{samples} samples each")


def test_c09_corner_fixed_point():
    rng = np.random.default_rng(9)
    worst = 0.0
    transfers = {i: singular.composed_transfer(CPS21, 0.02, i) for i in (1, 2)}
    for r1 in rng.uniform(-4, 4, 10):
        rho0 = singular.level_point(CPS21, float(r1), -0.25 * math.pi)
        for i in (1, 2):
            r = singular.solve_corner_fixed_point(CPS21, rho0, i, transfers[i])
            o = cps_corner_fixed_point(2.0, 1.0, 0.02, rho0, i)
            worst = max(worst, float(np.max(np.abs(r.as_array() - o.as_array()))))
    record(9, worst <= 1e-8, f"10 random rho0, both children: max deviation {worst:.1e} (need <= 1e-8)")


def test_c10_cantor_machinery():
    dims = {}
    for g in (1 / 3, 0.25, 0.4):
        est = fractal.box_dimension(fractal.generate_middle_gamma_cantor(g, 12), seed=0)
        dims[g] = (est.slope, fractal.cantor_tau(g))
    box_ok = all(abs(a - b) <= 0.05 for a, b in dims.values())
    fal = {}
    for g in (1 / 3, 0.25, 0.4):
        levels = [fractal.generate_middle_gamma_cantor(g, n).tolist() for n in range(11)]
        tree = singular.NestedIntervalTree.from_intervals(levels, gamma=g)
        fal[g] = singular.falconer_lower_bound_check(tree, singular.random_covers(tree, 20, seed=10))
    fal_ok = all(v >= 0.5 for v in fal.values())
    record(10, box_ok and fal_ok,
           "box dim " + ", ".join(f"g={g:.3g}: {a:.4f} vs {b:.4f}" for g, (a, b) in dims.items())
           + "; Falconer min " + ", ".join(f"{float(v):.4f}" for v in fal.values()))


def test_c11_singular_set_certificate(depth3, depth3_fine):
    t, tf = depth3.tree, depth3_fine.tree
    structure = t.check()["all"] and len(t.levels[3]) == 8
    drift = abs(tf.gamma / t.gamma - 1)
    est = fractal.box_dimension([str(m) for m in t.midpoints(3)])
    bound = fractal.cantor_tau(t.gamma) - 0.1
    ok = structure and drift <= 0.05 and 0 < t.delta2 <= tf.delta2 and est.slope >= bound
    record(11, ok, f"8 nested disjoint: {structure}; gamma {t.gamma:.4e} -> {tf.gamma:.4e} ({100 * drift:.2f}%); "
                   f"delta2 {t.delta2:.4f} -> {tf.delta2:.4f}; box dim {est.slope:.4f} >= {bound:.4f}")


FIXTURE_COMMANDS = {
    "goursat_constant": "solve-goursat", "goursat_spiral": "solve-goursat", "goursat_blowup": "solve-goursat",
    "audit_spiral": "audit", "audit_constant": "audit", "audit_grid": "audit", "audit_corrupted": "audit",
    "construct_depth1": "construct-singular", "construct_depth3": "construct-singular",
    "construct_bad_epsilon": "construct-singular", "dim_middle_thirds": "dim", "dim_one_interval": "dim",
    "oracle_eval": "oracle-eval", "trace_spiral": "trace-net",
}


def _run_fixture(name, out):
    cmd = [sys.executable, "-m", "charnets.cli", FIXTURE_COMMANDS[name], "--config",
           str(CLI_FIXTURES / f"{name}.json"), "--out", str(out), "--seed", "11"]
    code = subprocess.run(cmd, capture_output=True, text=True).returncode
    files = sorted(out.rglob("*.json")) if out.exists() else []
    return code, {str(p.relative_to(out)): p.read_bytes() for p in files}


def test_c12_cli_determinism(tmp_path):
    jobs = [(name, tmp_path / f"{name}_{k}") for name in FIXTURE_COMMANDS for k in (0, 1)]
    with ThreadPoolExecutor(max_workers=4) as ex:
        results = list(ex.map(lambda a: _run_fixture(*a), jobs))
    by_name = {}
    for (name, _), res in zip(jobs, results):
        by_name.setdefault(name, []).append(res)
    differ = [n for n, (a, b) in by_name.items() if a != b]
    record(12, not differ and len(by_name) == len(FIXTURE_COMMANDS),
           f"{len(by_name)} fixtures run twice, byte-identical JSON; differing: {differ or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
