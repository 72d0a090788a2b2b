import math

import numpy as np
import pytest

import harness
from charnets import net_analysis as na
from charnets.errors import FieldGap, InsufficientScales, StencilOutOfDomain
from charnets.oracles import ConstantOracle, SpiralOracle
from charnets.systems import NormalSystem


def spiral_field():
    return na.OracleField(harness.SPIRAL, harness.ANNULUS)


def test_regions():
    assert na.Annulus(1, 2).contains(1.5j)
    assert not na.Annulus(1, 2, 0j, -0.5, 0.5).contains(-1.5)
    assert (na.Box(0, 1, 0, 1) & na.HalfPlane(0.5)).contains(0.5 + 0.7j)
    assert na.wrap(3 * math.pi) == pytest.approx(math.pi) or na.wrap(3 * math.pi) == pytest.approx(-math.pi)


def test_trace_follows_spiral_characteristic():
    fld = spiral_field()
    z0 = 1.0 + 0j
    C = na.trace(fld, z0, 1, 1, 0.01, length=0.5)
    exact = harness.SPIRAL.characteristic(z0, 1, 0.5, 2)
    assert abs(C.end - exact.end) < 1e-8
    assert C.length == pytest.approx(0.5)


def test_traces_orthogonal_at_crossing():
    fld = spiral_field()
    net = na.trace_net(fld, [1.2 + 0.3j], 0.01, length=0.3)
    (k1, C1), (k2, C2) = net
    i1 = np.argmin(np.abs(C1.z - (1.2 + 0.3j)))
    i2 = np.argmin(np.abs(C2.z - (1.2 + 0.3j)))
    gap = abs(na.wrap(C1.phi[i1] - C2.phi[i2]))
    assert abs(gap - math.pi / 2) < 0.02


def test_blowup_residual_second_order():
    r = harness.spiral_residuals(n=10)
    assert np.all(r[:-1] / r[1:] >= 1.8)


def test_blowup_residual_stencil_guard():
    fld = spiral_field()
    with pytest.raises(StencilOutOfDomain):
        na.blowup_residual(fld, 0.51 + 0j, 0.05)


def test_quads_on_spiral_are_hp():
    reps = harness.spiral_quads(20)
    assert len(reps) == 20
    assert all(r["status"] == "ratio" and abs(r["ratio"] - 1) < 1e-3 and r["same_sign"] for r in reps)


def test_constant_field_quads_both_zero():
    s = NormalSystem.cps(2.0, 1.0)
    fld = na.OracleField(ConstantOracle.for_system(s, 0.2, 0.1), na.Box(-1, 1, -1, 1))
    q = na.extract_quad(fld, 0j, 1, 0.2, 0.2)
    rep = na.quasi_hp_ratio(q)
    assert rep["status"] == "BothZero" and na.ratio_within(rep, 2.0)
    assert q.area() == pytest.approx(0.04, rel=1e-6)


def test_grid_field_matches_grid_nodes():
    fld, g, s = harness.tabulated_net()
    for i, j in [(10, 20), (100, 50), (150, 150)]:
        R1, R2, th = fld.evaluate(g.zeta[i, j])
        assert R1 == pytest.approx(g.R1_of_t2[j], abs=1e-9)
        assert R2 == pytest.approx(g.R2_of_t1[i], abs=1e-9)
    with pytest.raises(FieldGap):
        fld.evaluate(100 + 100j)


def test_patchwork_priority():
    s = NormalSystem.cps(2.0, 1.0)
    a = na.OracleField(ConstantOracle.for_system(s, 0.0, 0.0), na.Box(0, 1, 0, 1))
    b = na.OracleField(ConstantOracle.for_system(s, 1.0, 0.0), na.Box(0, 2, 0, 1))
    pw = na.PatchworkField([a, b])
    assert pw.evaluate(0.5 + 0.5j)[0] == 0.0
    assert pw.evaluate(1.5 + 0.5j)[0] == 1.0
    with pytest.raises(FieldGap):
        pw.evaluate(3 + 0.5j)


def test_bound_audit_on_spiral_passes():
    fld = spiral_field()
    net = na.trace_net(fld, [1.0 + 0j, 1.3 + 0.4j], 0.01, harness.ANNULUS)
    rep = na.bound_audit(fld, net, 4.0, domain=harness.ANNULUS,
                         arcs_for_diameter=harness.diameter_samples(5))
    assert rep.passed
    assert rep.checks["curvature_bound"]["samples"] > 0
    assert rep.to_json()["pass"] is True


def test_diameter_bound_samples():
    assert all(na.arc_diameter(C) <= 5 * lam * 1.01 for C, lam in harness.diameter_samples(10))


def test_boundary_labels():
    o = SpiralOracle(2.0, 0.5, psi_ref=math.pi / 2)
    fld = na.OracleField(o, na.Annulus(0.5, 3.0, 0j, 0.0, math.pi))
    lab = na.classify_boundary_point(fld, 1.5 + 0j, [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125])
    assert lab["label"] == "Regular"
    s = NormalSystem.cps(2.0, 1.0)
    const = na.OracleField(ConstantOracle.for_system(s, 0.1, 0.2), na.HalfPlane(0.0))
    lab = na.classify_boundary_point(const, 0.3, [1, 0.5, 0.25])
    assert lab["label"] == "Regular" and max(lab["oscillation"]) == 0.0
    with pytest.raises(InsufficientScales):
        na.classify_boundary_point(const, 0.3, [1, 0.5])
