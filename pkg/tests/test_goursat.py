import math

import numpy as np
import pytest

from charnets import goursat
from charnets.curves import Curve
from charnets.errors import Fold, NotAdmissible
from charnets.oracles import SpiralOracle
from charnets.systems import InvariantPair, NormalSystem, admissible_corner_values, quasi_hp_constant


def _rectangle(method):
    s = NormalSystem.cps(2.0, 1.0)
    rho = InvariantPair(1.0, 0.5)
    th = s.theta_at(rho)
    C1 = Curve.segment(0.2j, th, 1.0, 0.05)
    C2 = Curve.segment(0.2j, th + math.pi / 2, 0.7, 0.05)
    return goursat.solve(s, C1, C2, rho, goursat.GoursatOptions(method=method)), C1, C2


@pytest.mark.parametrize("method", ["cell", "metric"])
def test_constant_solution_is_translated_rectangle(method):
    g, C1, C2 = _rectangle(method)
    exact = C1.z[:, None] + C2.z[None, :] - C1.z[0]
    assert g.fold_count == 0
    assert np.max(np.abs(g.zeta - exact)) <= 1e-12
    assert goursat.grid_min_jacobian(g) > 0


def spiral_errors(levels=(25, 49, 97, 193), method="cell"):
    o = SpiralOracle(2.0, 0.5)
    z0 = 1 + 0j
    rho = o.invariants(z0)
    errs = []
    for n in levels:
        C1 = o.characteristic(z0, 1, 0.5, n)
        C2 = o.characteristic(z0, 2, 0.3, n, direction=-1)
        g = goursat.solve(o.system, C1, C2, rho, goursat.GoursatOptions(method=method))
        exact = o.position(g.R1_of_t2[None, :] + 0 * g.R2_of_t1[:, None], g.R2_of_t1[:, None] + 0 * g.R1_of_t2[None, :])
        errs.append(float(np.max(np.abs(g.zeta[g.valid] - exact[g.valid]))))
    return errs


def test_spiral_second_order():
    errs = spiral_errors((25, 49, 97))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(orders - 2.0) < 0.3)


def test_corner_must_be_admissible():
    s = NormalSystem.cps(2.0, 1.0)
    C1 = Curve.segment(0j, 0.0, 1.0, 0.1)
    C2 = Curve.segment(0j, math.pi / 2, 1.0, 0.1)
    with pytest.raises(NotAdmissible):
        goursat.solve(s, C1, C2, InvariantPair(0.3, 0.0))
    with pytest.raises(NotAdmissible):
        goursat.solve(s, C1, Curve.segment(1j, math.pi / 2, 1.0, 0.1), InvariantPair(0.0, 0.0))


def test_tangent_sign_orientation():
    s = NormalSystem.cps(2.0, 1.0)
    rho = InvariantPair(0.0, 0.0)
    assert goursat.tangent_sign(s, Curve.segment(0j, math.pi, 1.0), rho, 1) == -1
    assert goursat.tangent_sign(s, Curve.segment(0j, math.pi / 2, 1.0), rho, 2) == 1


def test_arc_profile_slope():
    # along a 1-arc of curvature kappa, R2 changes at rate kappa / (dtheta/dR2)
    s = NormalSystem.cps(2.0, 1.0)
    rho = InvariantPair(0.0, 0.0)
    C = Curve.arc(0j, 0.0, 0.5, 1.0, 0.01)
    R2 = goursat.edge_invariant_profile(s, C, rho, 1)
    assert np.polyfit(C.s, R2, 1)[0] == pytest.approx(-1.5)


def _blowup(rng):
    m1, m2 = rng.uniform(0.5, 3.0, 2)
    s = NormalSystem.cps(m1, m2)
    K = quasi_hp_constant(s)
    kap = rng.uniform(0.5, 4.0) * rng.choice([-1, 1])
    bound = K / abs(kap)
    h = rng.uniform(-math.pi, math.pi)
    R1 = rng.uniform(-1, 1)
    rho = InvariantPair(R1, admissible_corner_values(s, R1, h, (-50, 50))[0])
    ds = bound / 200
    C1 = Curve.arc(0j, h, kap, min(0.5 / abs(kap), bound), ds)
    C2 = Curve.segment(0j, h + math.copysign(math.pi / 2, kap), 2 * bound, ds)
    return goursat.solve(s, C1, C2, rho), bound


def blowup_instances(n=20, seed=5):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        g, bound = _blowup(rng)
        folded = g.folded_nodes()
        fold_at = float(g.t2[folded[:, 1]].min()) if len(folded) else math.inf
        reach = max(g.t2[j] for j in range(g.shape[1]) if g.valid[1:, j].any())
        out.append((fold_at, float(reach), bound))
    return out


def test_curvature_blowup_folds_within_bound():
    for fold_at, reach, bound in blowup_instances(5):
        assert fold_at <= 1.1 * bound
        assert reach <= 1.1 * bound


def test_parallel_extension():
    C = Curve.arc(0j, 0.0, 1.0, 1.0, 0.01)
    P = goursat.parallel_extension(C, 0.25)
    assert P.length == pytest.approx(0.75 * C.length)
    with pytest.raises(Fold):
        goursat.parallel_extension(C, 1.5)


def test_grid_json_round_trip():
    g, _, _ = _rectangle("cell")
    s = NormalSystem.cps(2.0, 1.0)
    h = goursat.CharGrid.from_json(g.to_json(), s)
    assert np.array_equal(h.zeta, g.zeta) and h.signs == g.signs
    line = g.line(1, 3)
    assert line.length == pytest.approx(1.0)
