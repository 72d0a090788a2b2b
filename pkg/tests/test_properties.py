import json
import math

import numpy as np
from hypothesis import given, settings, strategies as st

from charnets import cli, fractal, goursat, singular
from charnets.curves import Curve, check_curve
from charnets.oracles import SpiralOracle, stretch_factors_from_a
from charnets.systems import InvariantPair, NormalSystem, admissible_corner_values

finite = st.floats(-5, 5, allow_nan=False)
factor = st.floats(0.3, 3.0)
FAST = settings(max_examples=40, deadline=None)


@st.composite
def cps_systems(draw):
    m1 = draw(factor)
    m2 = draw(factor.filter(lambda v: abs(v - m1) > 0.05))
    return NormalSystem.cps(m1, m2)


@FAST
@given(cps_systems(), finite, finite, st.floats(0.01, 1.0))
def test_theta_monotone_with_bounded_slopes(s, r1, r2, h):
    d1 = (s.theta(r1 + h, r2) - s.theta(r1, r2)) / h
    d2 = (s.theta(r1, r2 + h) - s.theta(r1, r2)) / h
    for d in (d1, d2):
        assert s.A - 1e-9 <= abs(d) <= s.B + 1e-9


@FAST
@given(cps_systems(), finite, st.floats(-math.pi, math.pi))
def test_admissible_roots_hit_target(s, r1, target):
    for r2 in admissible_corner_values(s, r1, target, (-20, 20)):
        d = s.theta(r1, r2) - target
        assert abs(d - 2 * math.pi * round(d / (2 * math.pi))) < 1e-9


@FAST
@given(st.floats(-20, 20))
def test_gm_product_is_one(a):
    m1, m2 = stretch_factors_from_a(a)
    assert abs(m1 * m2 - 1) <= 1e-12
    assert abs((m1 - m2) - a) <= 1e-9 * max(1, abs(a))


@FAST
@given(st.floats(0.05, 1.5), st.floats(0.3, 3), st.floats(-math.pi, math.pi))
def test_spiral_inverse_round_trip(alpha, r, psi):
    o = SpiralOracle.from_alpha(alpha)
    z = r * complex(math.cos(psi), math.sin(psi))
    R = o.invariants(z)
    assert abs(o.position(R.R1, R.R2) - z) < 1e-9 * max(1, r)


@FAST
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 2), st.floats(-2, 2))
def test_curve_transform_invariants(h, k, L, rot):
    C = Curve.arc(0.5j, h, k, L, L / 200)
    assert check_curve(C)["reintegrates"]
    back = C.reversed().reversed()
    assert np.allclose(back.z, C.z) and np.allclose(back.phi, C.phi + 2 * math.pi)
    T = C.similar(1.7, 1 - 1j, rot)
    assert check_curve(T)["reintegrates"]
    assert abs(T.length - 1.7 * C.length) < 1e-12 * T.length


@settings(max_examples=25, deadline=None)
@given(cps_systems(), finite, st.floats(0.1, 1.5), st.floats(0.1, 1.5), st.sampled_from([1, -1]),
       st.sampled_from([1, -1]))
def test_constant_solution_exact(s, r1, L1, L2, s1, s2):
    r2 = admissible_corner_values(s, r1, 0.3, (-40, 40))[0]
    rho = InvariantPair(r1, r2)
    th = s.theta_at(rho)
    C1 = Curve.segment(0j, th + (0 if s1 == 1 else math.pi), L1, L1 / 10)
    C2 = Curve.segment(0j, th + s2 * math.pi / 2, L2, L2 / 10)
    g = goursat.solve(s, C1, C2, rho)
    exact = C1.z[:, None] + C2.z[None, :]
    assert g.fold_count == 0
    assert np.max(np.abs(g.zeta - exact)) <= 1e-12 * max(1, L1 + L2)


@FAST
@given(cps_systems(), finite, finite,
       st.lists(st.tuples(st.sampled_from([1, 2]), st.floats(-3, 3)), min_size=1, max_size=4),
       st.lists(st.tuples(st.sampled_from([1, 2]), st.floats(-3, 3)), min_size=1, max_size=4))
def test_leg_chains_compose_and_turn(s, r1, r2, legs_a, legs_b):
    rho = InvariantPair(r1, r2)
    two_step = singular.propagate(s, singular.propagate(s, rho, legs_a), legs_b)
    one_step = singular.propagate(s, rho, legs_a + legs_b)
    assert np.allclose(two_step.as_array(), one_step.as_array(), atol=1e-9)
    turn = sum(d for _, d in legs_a)
    assert abs(s.theta_at(singular.propagate(s, rho, legs_a)) - s.theta_at(rho) - turn) < 1e-9
    # R_k is frozen along every k-leg
    for fam, d in legs_a:
        out = singular.propagate(s, rho, [(fam, d)])
        assert out.as_array()[fam - 1] == rho.as_array()[fam - 1]


@FAST
@given(st.floats(0.05, 0.5), st.integers(0, 8))
def test_cantor_generator_structure(gamma, depth):
    iv = fractal.generate_middle_gamma_cantor(gamma, depth)
    assert iv.shape == (2 ** depth, 2)
    assert np.allclose(iv[:, 1] - iv[:, 0], gamma ** depth)
    assert np.all(iv[1:, 0] >= iv[:-1, 1] - 1e-15)
    assert iv[0, 0] == 0 and abs(iv[-1, 1] - 1) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 0.45), st.integers(2, 6), st.integers(0, 2 ** 31))
def test_falconer_bound_on_exact_trees(gamma, depth, seed):
    levels = [fractal.generate_middle_gamma_cantor(gamma, n).tolist() for n in range(depth + 1)]
    for known in (gamma, None):
        tree = singular.NestedIntervalTree.from_intervals(levels, gamma=known)
        covers = singular.random_covers(tree, 5, seed) + [tree.normalized()]
        assert singular.falconer_lower_bound_check(tree, covers) >= 0.5 - 1e-12


@FAST
@given(st.recursive(st.floats(allow_nan=True, allow_infinity=True) | st.integers() | st.text(max_size=5),
                    lambda c: st.lists(c, max_size=4) | st.dictionaries(st.text(max_size=4), c, max_size=4),
                    max_leaves=20))
def test_json_output_is_stable(obj):
    once = cli.dumps(obj)
    assert cli.dumps(json.loads(once)) == once
