"""Shared sweeps used by the unit and acceptance tests."""

import math

import numpy as np

from charnets import goursat, net_analysis as na
from charnets.curves import Curve
from charnets.errors import CharnetsError
from charnets.oracles import SpiralOracle
from charnets.systems import InvariantPair, NormalSystem, quasi_hp_constant

SPIRAL = SpiralOracle(2.0, 0.5)
ANNULUS = na.Annulus(0.5, 2.0, 0j, -2.5, 2.5)


def annulus_points(rng, n, r_in=0.7, r_out=1.8, psi=2.2):
    r = rng.uniform(r_in, r_out, n)
    a = rng.uniform(-psi, psi, n)
    return r * np.exp(1j * a)


def spiral_residuals(n=100, hs=(1e-2, 5e-3, 2.5e-3), seed=0):
    """Largest |blow-up residual| over ``n`` annulus points for each step ``h``."""
    fld = na.OracleField(SPIRAL, ANNULUS)
    pts = annulus_points(np.random.default_rng(seed), n)
    out = []
    for h in hs:
        res = np.array([na.blowup_residual(fld, z, h) for z in pts])
        out.append(np.abs(res).max(axis=0))
    return np.array(out)


def random_tabulated(seed=1, n=21):
    rng = np.random.default_rng(seed)
    r = np.linspace(-3, 3, n)
    a, b = rng.uniform(0.6, 0.8, 2)
    R1, R2 = np.meshgrid(r, r, indexing="ij")
    vals = a * R1 - b * R2 + 0.05 * np.sin(R1 + 2 * R2)
    return NormalSystem.tabulated((-3, 3, n), (-3, 3, n), vals.ravel())


def tabulated_net(seed=1):
    s = random_tabulated(seed)
    rho = InvariantPair(0.1, -0.2)
    th = s.theta_at(rho)
    C1 = Curve.arc(0j, th, 0.3, 1.0, 0.005)
    C2 = Curve.arc(0j, th + math.pi / 2, -0.3, 1.0, 0.005)
    g = goursat.solve(s, C1, C2, rho)
    return na.GridField(g, s), g, s


def quad_ratios(fld, pick, n, size, seed=0):
    """Quasi-HP reports of ``n`` quads; ``pick(rng)`` gives a corner point."""
    rng = np.random.default_rng(seed)
    reps = []
    tries = 0
    while len(reps) < n and tries < 20 * n:
        tries += 1
        z0 = pick(rng)
        try:
            q = na.extract_quad(fld, z0, int(rng.integers(1, 3)), size, size)
        except CharnetsError:
            continue
        reps.append(na.quasi_hp_ratio(q))
    return reps


def spiral_quads(n=200, seed=0):
    fld = na.OracleField(SPIRAL, ANNULUS)
    return quad_ratios(fld, lambda rng: annulus_points(rng, 1)[0], n, 0.1, seed)


def tabulated_quads(n=200, seed=0):
    fld, g, s = tabulated_net()

    def pick(rng):
        i, j = rng.integers(20, 180, 2)
        return complex(g.zeta[i, j])

    return quad_ratios(fld, pick, n, 0.05, seed), quasi_hp_constant(s)


def diameter_samples(n=50, seed=0):
    """``(C, lambda(E))`` for characteristic arcs of the spiral net closed by straight chords."""
    fld = na.OracleField(SPIRAL, ANNULUS)
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        z0 = annulus_points(rng, 1)[0]
        k = int(rng.integers(1, 3))
        L = rng.uniform(0.1, 1.0)
        try:
            C = na.trace(fld, z0, k, int(rng.choice([-1, 1])), 0.01, length=L)
        except CharnetsError:
            continue
        lam = na.chord_return_path(C, ANNULUS)
        if lam is not None and lam > 0:
            out.append((C, lam))
    return out
