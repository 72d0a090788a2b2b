import math

import numpy as np
import pytest

from charnets.errors import OriginSingular
from charnets.oracles import (CPS_LEGS, ConstantOracle, SpiralOracle, cps_corner_fixed_point, cps_transfer,
                              gm_stretch_factors, stretch_factors_from_a)
from charnets.systems import InvariantPair, NormalSystem


def test_gm_formulas_exact():
    assert stretch_factors_from_a(1.5) == (2.0, 0.5)
    m1, m2 = gm_stretch_factors(-0.7, 2.0)
    assert m1 * m2 == pytest.approx(1.0, abs=1e-12)
    assert m1 - m2 == pytest.approx(-0.35)


def test_spiral_invariants_and_inverse():
    o = SpiralOracle.from_alpha(0.4)
    z = 0.7 + 1.1j
    R = o.invariants(z)
    assert o.position(R.R1, R.R2) == pytest.approx(z)
    assert o.system.theta(R.R1, R.R2) == pytest.approx(o.theta(z))
    with pytest.raises(OriginSingular):
        o.evaluate(0j)


def test_spiral_characteristic_keeps_invariant():
    o = SpiralOracle(2.0, 0.5)
    C = o.characteristic(1 + 0j, 1, 0.5, 201)
    R1 = np.array([o.invariants(z).R1 for z in C.z])
    assert np.ptp(R1) < 1e-12
    tang = np.exp(1j * C.phi)
    th = o.theta(C.z)
    assert np.max(np.abs(np.angle(tang * np.exp(-1j * th)))) < 1e-12


def test_constant_oracle():
    s = NormalSystem.cps(2.0, 1.0)
    c = ConstantOracle.for_system(s, 0.3, -0.3)
    assert c.evaluate(5j) == (0.3, -0.3, pytest.approx(0.3))
    assert c.first_derivatives(1j) == (0.0, 0.0)


def test_cps_leg_turnings_and_fixed_point():
    eps = 0.02
    expected = {"f1": -(1.25 * math.pi + eps), "f2": 0.25 * math.pi - eps,
                "g1": 0.75 * math.pi + eps, "g2": 0.25 * math.pi + eps}
    for name, legs in CPS_LEGS.items():
        assert sum(d for _, d in legs(eps)) == pytest.approx(expected[name], abs=1e-15)
    s = NormalSystem.cps(2.0, 1.0)
    rho = InvariantPair(0.0, 0.75 * math.pi)
    for name, shift in (("f1", -(1.25 * math.pi + eps)), ("g2", 0.25 * math.pi + eps)):
        out = cps_transfer(2.0, 1.0, eps, name, rho)
        assert s.theta_at(out) - s.theta_at(rho) == pytest.approx(shift, abs=1e-12)
    r = cps_corner_fixed_point(2.0, 1.0, eps, rho, 2)
    back = cps_transfer(2.0, 1.0, eps, "f1", cps_transfer(2.0, 1.0, eps, "g2", r))
    assert back.as_array() == pytest.approx(rho.as_array(), abs=1e-12)
