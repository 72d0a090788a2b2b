"""Solutions whose boundary singular set is a Cantor set of positive dimension.

The construction works in the upper half-plane.  A *universal arc* ``U1``
is a long concave 1-characteristic that sits above every almost-semicircle
``C`` started at ``p = -1 - eps*i``: the characteristic problem with ``C`` as
2-arc and the grown arc ``V1`` as 1-arc is fold-free, and ``U1`` is a far
parallel of ``V1`` along straight 2-characteristics.  ``U2`` is its mirror
image.  The value of the solution at the foot ``m_k`` of ``U_k`` is a
function ``f_k`` of the corner value at ``C``; it is obtained from the
turning of the arcs alone, since ``R_k`` is constant along k-characteristics
and ``theta`` follows the tangent.

Gluing ``U1 - m1`` and ``U2 - m2`` at the origin and solving the quadrilateral
above them, then pushing its outer side far out along straight
characteristics, gives an almost-semicircle ``X_k`` that is, after scaling,
a valid ``C`` for the next generation.  ``g_k`` is the value at the left end
of ``X_k``.  Composing ``f_j(g_i(.))`` shifts ``theta`` by ``-pi``, and the
corner value of every child copy is the fixed point that reproduces the
parent's corner.  Positions of deep copies fall below double precision, so
the nested intervals are kept in mpmath and every copy carries an affine map
to the top frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import brentq

from . import goursat
from .curves import (Curve, _smooth_step, adjoin_F, almost_semicircle, in_S_eps,
                     straight_end_lengths)
from .errors import (Fold, FoldDuringGrowth, NotACover, NotAdmissible, OutOfSampledRange,
                     PropertyUnmet, SeamMismatch, WindowTooSmall)
from .systems import InvariantPair, NormalSystem

HALF_PI = 0.5 * math.pi
TREE_DPS = 50


# ------------------------------------------------------------------ helpers
def representative_curve(eps: float, ds: float = 0.01) -> Curve:
    """The almost-semicircle of the family, moved so it starts at ``-1 - eps*i``."""
    C = almost_semicircle(eps)
    C = Curve(C.s, C.z + (complex(-1.0, -eps) - C.z[0]), C.phi)
    return C.resample(ds)


def propagate(system: NormalSystem, rho: InvariantPair, legs) -> InvariantPair:
    """Follow a chain of characteristic legs.

    ``legs`` is a sequence of ``(family, dtheta)``: along a k-characteristic
    ``R_k`` is frozen while ``theta`` changes by ``dtheta``.
    """
    R = [rho.R1, rho.R2]
    for fam, dth in legs:
        target = system.theta(R[0], R[1]) + dth
        free = 2 if fam == 1 else 1
        R[free - 1] = system.solve_component(R[fam - 1], fam, float(target), R[free - 1])
    return InvariantPair(float(R[0]), float(R[1]))


def level_point(system: NormalSystem, R1: float, theta_level: float, guess: float = 0.0) -> InvariantPair:
    """Point of the level curve ``theta = theta_level`` with first coordinate ``R1``."""
    return InvariantPair(float(R1), system.solve_component(R1, 1, theta_level, guess))


def _wrap_pi(a: float) -> float:
    """Distance of ``a`` to the nearest multiple of pi."""
    return abs(a - math.pi * round(a / math.pi))


def _parallel_point(C: Curve, r: float, s):
    return C.point_at(s) + r * 1j * np.exp(1j * C.angle_at(s))


def _crossings(C: Curve, r: float, upward: bool):
    """Arc lengths where the parallel at distance ``r`` crosses the real axis."""
    y = (C.z + r * 1j * np.exp(1j * C.phi)).imag
    if upward:
        ks = np.flatnonzero((y[:-1] < 0) & (y[1:] >= 0))
    else:
        ks = np.flatnonzero((y[:-1] >= 0) & (y[1:] < 0))
    out = []
    for k in ks:
        a, b = C.s[k], C.s[k + 1]
        out.append(brentq(lambda q: _parallel_point(C, r, q).imag, a, b,
                          xtol=1e-15 * max(1.0, b), rtol=1e-15, maxiter=200))
    return out


def _minimal_offset(predicate, r_start: float, max_doublings: int = 80, rel: float = 1e-3) -> float:
    """Smallest ``r`` (to relative ``rel``) for which ``predicate`` holds, by doubling then bisection."""
    r = r_start
    for _ in range(max_doublings):
        if predicate(r):
            break
        r *= 2.0
    else:
        raise PropertyUnmet("offset", math.inf, "no offset satisfies the angle test")
    lo, hi = r / 2.0, r
    if predicate(lo):
        return lo
    while hi - lo > rel * hi:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _finish_end(Z: Curve, heading: float, depth: float, delta: float) -> Curve:
    """Bend the end of ``Z`` to ``heading`` with F, then run straight down to ``Im = depth``."""
    W = adjoin_F(Z, Z.length - delta, delta, 0.0, heading, ds=delta / 100)
    drop = W.end.imag - depth
    slope = -math.sin(W.phi[-1])
    if drop <= 0 or slope <= 0:
        raise PropertyUnmet("ii", abs(drop), "end already below the target height")
    L = drop / slope
    seg = Curve.segment(W.end, float(W.phi[-1]), L, ds=min(L, delta) / 20)
    return W.extend(seg)


def _finish_start(Z: Curve, heading: float, depth: float, delta: float) -> Curve:
    # two reversals add 2*pi to the angle track
    return _finish_end(Z.reversed(), heading + math.pi, depth, delta).reversed().relift(-1)


def _relift_to(C: Curve, value: float) -> Curve:
    k = round((value - C.phi[0]) / (2 * math.pi))
    return C.relift(k) if k else C


# ------------------------------------------------------------------ universal arcs
@dataclass(eq=False)
class UniversalArc:
    """Universal 1-arc (side 1) or 2-arc (side 2) with its sampled transfer map.

    ``curve`` runs from ``e_point`` to ``m_point`` for side 1 and from
    ``m_point`` to ``e_point`` for side 2; ``m_point`` lies on the real axis.
    ``legs`` are the characteristic legs from the corner of ``C`` to ``m``.
    """

    curve: Curve
    side: int
    e_point: complex
    m_point: complex
    epsilon: float
    transfer_samples: dict
    system: NormalSystem
    theta_level: float
    legs: list
    B0: float
    crossing: float
    offset: float
    delta0: float
    growth: dict = field(default_factory=dict)
    C: Curve | None = None
    V: Curve | None = None
    _lift_cache: dict = field(default_factory=dict, repr=False)

    @property
    def shift(self) -> float:
        return float(sum(d for _, d in self.legs))

    @property
    def expected_shift(self) -> float:
        e = self.epsilon
        return -(1.25 * math.pi + e) if self.side == 1 else 0.25 * math.pi - e

    def samples_for_lift(self, k: int) -> dict:
        if k == 0:
            return self.transfer_samples
        if k not in self._lift_cache:
            params = self.transfer_samples["param"]
            self._lift_cache[k] = _sample_transfer(self.system, self.theta_level + k * math.pi,
                                                   self.legs, params)
        return self._lift_cache[k]


def _sample_transfer(system, theta_level, legs, params) -> dict:
    rho = []
    out = []
    guess = 0.0
    for s in params:
        r = level_point(system, float(s), theta_level, guess)
        guess = r.R2
        rho.append(r.as_array())
        out.append(propagate(system, r, legs).as_array())
    return {"param": np.asarray(params, dtype=float), "rho": np.array(rho), "f": np.array(out),
            "theta_level": theta_level}


def _grow_V(C: Curve, eps: float, delta0: float, du: float, straight: float, ramp: float,
            eta: float = 0.05) -> Curve:
    """1-arc from the start of ``C`` turning clockwise to heading -pi/4.

    The curvature is ``delta0 / (lambda(C) + (pi + 2 eps) t)``, the growth
    rate of the parallel 2-arcs, so ``kappa * length`` of every parallel
    2-arc stays below ``delta0 < 1`` and the characteristic map cannot fold.
    """
    L = C.length
    Dl = math.pi + 2 * eps
    h0 = float(C.phi[0]) + HALF_PI
    goal = -0.25 * math.pi + eta
    u_end = (h0 - goal) * Dl / delta0 + 1.0
    u = np.arange(0.0, u_end + du, du)
    t = L / Dl * np.expm1(u)
    t = np.union1d(t, np.linspace(0.0, straight + ramp, 60))
    kap = -delta0 / (L + Dl * t) * _smooth_step((t - straight) / ramp)
    phi = h0 + np.concatenate([[0.0], np.cumsum(0.5 * (kap[1:] + kap[:-1]) * np.diff(t))])
    k = int(np.searchsorted(-phi, -goal))
    V = Curve.from_angle(t[:k + 1], phi[:k + 1], C.z[0])
    # finish the turn with F on a window comparable to the parallel 2-arc length
    d = 0.3 * (L + Dl * V.length)
    Vx = V.extend(Curve.segment(0j, float(V.phi[-1]), 1.5 * d, ds=d / 60))
    return adjoin_F(Vx, V.length + 0.1 * d, d, 0.0, -0.25 * math.pi, ds=d / 100)


def _growth_solves(system: NormalSystem, C: Curve, V: Curve, rho: InvariantPair,
                   delta0: float, C_family: int = 2) -> dict:
    """Solve the characteristic problem on ``(C, V)`` piece by piece along ``V``.

    Each piece of ``V`` turns by at most ``delta0 / 2``; the outer line of one
    piece is the initial curve of the next.  Raises :class:`Fold`.
    """
    tot = abs(V.phi[0] - V.phi[-1])
    n = max(1, int(math.ceil(tot / (0.5 * delta0))))
    ph = V.phi if V.phi[-1] < V.phi[0] else -V.phi
    bounds = [0.0] + [float(np.interp(-(ph[0] - k * abs(ph[0] - ph[-1]) / n), -ph, V.s))
                      for k in range(1, n)] + [float(V.s[-1])]
    W, corner = C, rho
    grids = []
    min_jac = math.inf
    for a, b in zip(bounds[:-1], bounds[1:]):
        Vk = V.sub(a, b)
        if C_family == 2:
            g = goursat.solve(system, Vk, W, corner)
        else:
            g = goursat.solve(system, W, Vk, corner)
        if g.fold_count:
            raise Fold(f"growth piece [{a:.4g}, {b:.4g}] folds at {g.fold_count} nodes")
        jac = g.cell_jacobians()
        min_jac = min(min_jac, float(np.nanmin(jac / np.nanmax(np.abs(jac)))))
        grids.append(g)
        if C_family == 2:
            W = g.line(2, len(Vk) - 1)
            corner = g.Rbar(len(Vk) - 1, 0)
        else:
            W = g.line(1, len(Vk) - 1)
            corner = g.Rbar(0, len(Vk) - 1)
    return {"grids": grids, "end_value": corner, "pieces": n, "min_relative_jacobian": min_jac}


def check_universal_arc(U: Curve, side: int, eps: float, tol: float = 1e-6) -> dict:
    """Violations of properties (i)-(vi) of a universal arc (0 means satisfied)."""
    if side == 2:
        U = U.mirrored().reversed()
    viol = {}
    viol["i"] = max(0.0, float(np.max(np.diff(U.phi))))
    viol["ii"] = max(abs(U.z[0].imag + eps), abs(U.z[-1].imag))
    run0, run1 = straight_end_lengths(U)
    viol["iii"] = 0.0 if (run0 > 0 and run1 > 0) else 1.0
    viol["iv"] = _wrap_2pi(U.phi[0] - (HALF_PI + eps))
    kap = np.abs(np.diff(U.phi)) / np.diff(U.s)
    viol["v"] = max(_wrap_2pi(U.phi[-1] + 0.25 * math.pi), 0.0 if kap[-1] < 1e-12 else 1.0)
    viol["vi"] = max(0.0, 2.0 - float(np.min(np.abs(U.z))))
    limits = {"i": 1e-9, "ii": tol, "iii": 0.0, "iv": tol, "v": tol, "vi": 0.0}
    return {"violations": viol, "passed": {k: viol[k] <= limits[k] for k in viol},
            "all": all(viol[k] <= limits[k] for k in viol)}


def _wrap_2pi(a: float) -> float:
    d = a % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def _build_U1(system, eps, delta0, resolution, r_factor):
    du = 0.01 / resolution
    C = representative_curve(eps, ds=0.01 / resolution)
    th_level = eps  # i*exp(i*theta) is tangent to C at its left end
    rho_ref = level_point(system, 0.0, th_level)
    while True:
        V = _grow_V(C, eps, delta0, du, straight=eps, ramp=0.25)
        try:
            growth = _growth_solves(system, C, V, rho_ref, delta0)
            break
        except Fold:
            delta0 *= 0.5
            if delta0 < 1e-3:
                raise FoldDuringGrowth("curvature budget underflow while growing the universal arc")

    kap = np.abs(np.diff(V.phi)) / np.diff(V.s)
    s_ray = float(V.s[np.flatnonzero(kap > 1e-12)[-1] + 1])

    def ok(r):
        up = _crossings(V, r, upward=True)
        if not up or abs(V.angle_at(up[0]) - HALF_PI) >= eps / 4:
            return False
        # the parallel must stay above the axis until its terminal ray begins
        down = [q for q in _crossings(V, r, upward=False) if q > up[0]]
        return _parallel_point(V, r, s_ray).imag > 0 and all(q > s_ray for q in down)

    r = r_factor * _minimal_offset(ok, 1.0)
    s_cross = _crossings(V, r, upward=True)[0]
    # trim point: just below the axis, before the crossing
    s_lo = float(V.s[max(0, int(np.searchsorted(V.s, s_cross)) - 50)])
    while _parallel_point(V, r, s_lo).imag > -eps / 4:
        s_lo *= 0.5
    s_trim = brentq(lambda q: _parallel_point(V, r, q).imag + eps / 4, s_lo, s_cross,
                    xtol=1e-15 * s_cross, rtol=1e-15)
    if abs(V.angle_at(s_trim) - HALF_PI) >= eps / 2:
        raise PropertyUnmet("iv", abs(V.angle_at(s_trim) - HALF_PI), "trim point heading")
    down = [q for q in _crossings(V, r, upward=False) if q > s_ray]
    if down:
        P = goursat.parallel_extension(V.sub(s_trim, down[0]), r)
    else:
        P = goursat.parallel_extension(V.sub(s_trim, V.s[-1]), r)
        L = P.end.imag / math.sin(0.25 * math.pi)
        P = P.extend(Curve.segment(P.end, float(P.phi[-1]), L, ds=L / 40))
    # land the foot exactly on the axis
    z = P.z.copy()
    z[-1] = z[-1].real
    P = Curve(P.s, z, P.phi)
    U1 = _finish_start(P, HALF_PI + eps, -eps, eps / 8)
    U1 = _relift_to(U1, HALF_PI + eps)
    crossing = float(_parallel_point(V, r, s_cross).real)
    legs = [(1, float(V.phi[-1] - V.phi[0]))]
    return U1, C, V, growth, legs, th_level, delta0, r, crossing


def build_universal_arc(system: NormalSystem, epsilon: float = 0.02, side: int = 1,
                        n_samples: int = 10, window: tuple = (-64.0, 64.0),
                        delta0: float = 0.75, resolution: float = 1.0,
                        r_factor: float = 1.25) -> UniversalArc:
    """Construct ``U_side`` and sample its transfer map along the admissible level curve.

    ``resolution`` scales every sampling density; ``r_factor`` is the
    safety factor applied to the smallest admissible parallel offset.
    """
    if not 0 < epsilon <= 0.05:
        raise ValueError("epsilon must lie in (0, 0.05]")
    if side not in (1, 2):
        raise ValueError("side must be 1 or 2")
    if not math.isfinite(system.B / system.A):
        raise ValueError("system must have a finite quasi-HP constant")
    eps = epsilon
    U1, C, V, growth, legs, th_level, delta0, r, crossing = _build_U1(system, eps, delta0, resolution,
                                                                      r_factor)
    rep = check_universal_arc(U1, 1, eps)
    if not rep["all"]:
        bad = [k for k, v in rep["passed"].items() if not v][0]
        raise PropertyUnmet(bad, rep["violations"][bad])
    ref_end = growth["end_value"]
    if side == 1:
        curve, e_pt, m_pt = U1, U1.start, U1.end
    else:
        curve = U1.mirrored().reversed()
        e_pt, m_pt = curve.end, curve.start
        crossing = -crossing
        # C is now the 1-arc; its corner value sits at the left end
        th_level = HALF_PI + eps
        legs = [(1, float(C.phi[-1] - C.phi[0])), (2, -legs[0][1])]
        C, V = C.mirrored().reversed(), V.mirrored()
    params = np.linspace(window[0], window[1], n_samples)
    samples = _sample_transfer(system, th_level, legs, params)
    if side == 1:
        # the chain must reproduce the corner value the growth solves carried to the foot
        chain = propagate(system, level_point(system, 0.0, th_level), legs)
        gap = float(np.max(np.abs(chain.as_array() - ref_end.as_array())))
        if gap > 1e-8:
            raise PropertyUnmet("vii", gap, "transfer chain disagrees with the characteristic solve")
    arc = UniversalArc(curve=curve, side=side, e_point=complex(e_pt), m_point=complex(m_pt),
                       epsilon=eps, transfer_samples=samples, system=system, theta_level=th_level,
                       legs=legs, B0=0.0, crossing=crossing, offset=r, delta0=delta0,
                       growth={k: v for k, v in growth.items() if k != "grids"}, C=C, V=V)
    arc.growth["grids"] = growth["grids"]
    arc.B0 = float(np.max(np.linalg.norm(samples["f"] - samples["rho"], axis=1)))
    gaps = np.abs(system.theta(samples["f"][:, 0], samples["f"][:, 1])
                  - system.theta(samples["rho"][:, 0], samples["rho"][:, 1]) - arc.expected_shift)
    if np.max(gaps) > 1e-6:
        raise PropertyUnmet("vii", float(np.max(gaps)), "angle shift of the transfer map")
    return arc


def transfer_f(arc: UniversalArc, rho: InvariantPair) -> InvariantPair:
    """Value at the foot ``m`` of the arc for corner value ``rho`` at the left end of ``C``.

    Interpolated along the level curve through ``rho`` (by its ``R1``
    coordinate); the other component is then fixed by the exact angle shift.
    """
    th = arc.system.theta_at(rho)
    k = round((th - arc.theta_level) / math.pi)
    if abs(th - arc.theta_level - k * math.pi) > 1e-8:
        raise NotAdmissible("rho is not an admissible corner value for this arc")
    smp = arc.samples_for_lift(k)
    p = smp["param"]
    if not p[0] - 1e-12 <= rho.R1 <= p[-1] + 1e-12:
        raise OutOfSampledRange(f"R1 = {rho.R1:.6g} outside the sampled window [{p[0]:.6g}, {p[-1]:.6g}]")
    target = th + arc.shift
    fixed_first = arc.legs[-1][0] == 1
    if fixed_first:
        R1 = float(np.interp(rho.R1, p, smp["f"][:, 0]))
        return InvariantPair(R1, arc.system.solve_component(R1, 1, target,
                                                            float(np.interp(rho.R1, p, smp["f"][:, 1]))))
    R2 = float(np.interp(rho.R1, p, smp["f"][:, 1]))
    return InvariantPair(arc.system.solve_component(R2, 2, target,
                                                    float(np.interp(rho.R1, p, smp["f"][:, 0]))), R2)


# ------------------------------------------------------------------ child curves
@dataclass(eq=False)
class ChildCurve:
    """Normalised almost-semicircle ``X_k`` and its placement under the parent.

    ``curve`` is in the normalised frame (a member of the almost-semicircle
    family); ``scale`` and ``shift`` map the child's own top frame (where its
    ``U1 - m1`` and ``U2 - m2`` meet at 0) into the parent's top frame.
    ``legs`` carry the corner value at 0 to the left end of ``X_k``.
    """

    side: int
    curve: Curve
    scale: float
    shift: float
    legs: list
    offset: float
    crossings: tuple
    grid: goursat.CharGrid | None = None
    outer: Curve | None = None
    membership: dict = field(default_factory=dict)

    @property
    def shift_theta(self) -> float:
        return float(sum(d for _, d in self.legs))

    @property
    def expected_shift(self) -> float:
        return (0.25 if self.side == 2 else 0.75) * math.pi + self.curve_eps

    curve_eps: float = 0.0


def top_frame_arcs(arc1: UniversalArc, arc2: UniversalArc) -> tuple[Curve, Curve]:
    """``U1 - m1`` reversed and ``U2 - m2``, both starting at the origin."""
    U1 = arc1.curve
    U1p = Curve(U1.s, U1.z - arc1.m_point, U1.phi).reversed()
    U2 = arc2.curve
    U2p = Curve(U2.s, U2.z - arc2.m_point, U2.phi)
    return U1p, U2p


def _with_circle(U: Curve, eps: float, kappa0: float, turn: float, n: int) -> Curve:
    """Append a circle of curvature ``kappa0`` through total turning ``turn`` to ``U``'s straight end."""
    run = straight_end_lengths(U)[1]
    d = min(run, eps / 10) / 2
    # target heading chosen so the blended heading is monotone (no reverse turn before the circle)
    W = adjoin_F(U, U.length - d, d, kappa0, float(U.phi[-1]) + 0.5 * kappa0 * d, ds=d / 50)
    L = turn / abs(kappa0)
    arc = Curve.arc(W.end, float(W.phi[-1]), kappa0, L, ds=L / n)
    return W.extend(arc)


def _thin(C: Curve, rel: float) -> Curve:
    """Drop samples closer than ``rel * length`` to the previously kept one (ends kept)."""
    gap = rel * C.length
    keep = [0]
    for k in range(1, len(C.s) - 1):
        if C.s[k] - C.s[keep[-1]] >= gap:
            keep.append(k)
    if C.s[-1] - C.s[keep[-1]] < gap and len(keep) > 1:
        keep.pop()
    keep.append(len(C.s) - 1)
    idx = np.asarray(keep)
    return Curve(C.s[idx], C.z[idx], C.phi[idx])


def _almost_semicircle_from(T: Curve, eps: float, r_factor: float):
    """Far parallel of a clockwise arc ``T``, normalised into the almost-semicircle family.

    Returns ``(X, xi, c, r0, (q1, q2))`` with ``X = xi * (S' - c)``.
    """
    def crossing_pair(r):
        up = _crossings(T, r, upward=True)
        down = _crossings(T, r, upward=False)
        if not up or not down or down[-1] <= up[0]:
            return None
        return up[0], down[-1]

    def ok(r):
        pair = crossing_pair(r)
        if pair is None:
            return False
        a, b = pair
        if abs(T.angle_at(a) - HALF_PI) >= eps / 2 or abs(T.angle_at(b) + HALF_PI) >= eps / 2:
            return False
        q1, q2 = _parallel_point(T, r, a).real, _parallel_point(T, r, b).real
        xi, c = 2.0 / (q2 - q1), 0.5 * (q1 + q2)
        s = np.linspace(a, b, 400)
        w = xi * (_parallel_point(T, r, s) - c)
        return float(np.max(np.abs(np.abs(w) - 1.0))) < eps

    size = float(np.max(np.abs(T.z - T.z[0])))
    r0 = r_factor * _minimal_offset(ok, size)
    a, b = crossing_pair(r0)
    q1, q2 = _parallel_point(T, r0, a).real, _parallel_point(T, r0, b).real
    xi, c = 2.0 / (q2 - q1), 0.5 * (q1 + q2)
    S = goursat.parallel_extension(T, r0).similar(xi, -xi * c)
    # trim both ends just below the axis, then bend to the family's end conditions
    s_up, s_dn = _crossings(S, 0.0, upward=True)[0], _crossings(S, 0.0, upward=False)[-1]
    s0 = brentq(lambda q: S.point_at(q).imag + eps / 4, 0.0, s_up, xtol=1e-15, rtol=1e-15)
    s1 = brentq(lambda q: S.point_at(q).imag + eps / 4, s_dn, S.s[-1], xtol=1e-15, rtol=1e-15)
    # the finishing bends must keep the turning clockwise
    h0, h1 = math.remainder(S.angle_at(s0), 2 * math.pi), math.remainder(S.angle_at(s1), 2 * math.pi)
    if not (h0 < HALF_PI + eps and h1 > -(HALF_PI + eps)):
        raise PropertyUnmet("iii", max(h0 - HALF_PI - eps, -HALF_PI - eps - h1), "trim headings")
    X = S.sub(s0, s1)
    X = _finish_start(X, HALF_PI + eps, -eps, eps / 8)
    X = _finish_end(X, -(HALF_PI + eps), -eps, eps / 8)
    return X, xi, c, r0, (q1, q2)


def build_child_curve(system: NormalSystem, arc1: UniversalArc, arc2: UniversalArc, side: int,
                      rho: InvariantPair, r_factor: float = 1.25, resolution: float = 1.0) -> ChildCurve:
    """Run the child pipeline for corner value ``rho`` at the junction of the two arcs.

    Side 2 extends ``U2 - m2`` by a small clockwise circle below the axis and
    follows the outer 2-side of the quadrilateral; side 1 is the mirror
    image.  The outer side is stopped at height ``-eps/2``, bent downward
    with F, pushed out along straight characteristics until the crossing
    angles are within ``eps/2`` of a right angle, trimmed, bent into the
    family and scaled.
    """
    eps = arc1.epsilon
    U1p, U2p = top_frame_arcs(arc1, arc2)
    n_circle = int(200 * resolution)
    if side == 2:
        C2 = _with_circle(U2p, eps, -10.0 / eps, 2 * math.pi, n_circle)
        g = goursat.solve(system, U1p, C2, rho, goursat.GoursatOptions(method="metric"))
        T = g.line(2, g.shape[0] - 1)
        turn_U = float(U1p.phi[-1] - U1p.phi[0])
        legs_first = (1, turn_U)
    else:
        C1 = _with_circle(U1p, eps, 10.0 / eps, 2 * math.pi, n_circle)
        g = goursat.solve(system, C1, U2p, rho, goursat.GoursatOptions(method="metric"))
        T = g.line(1, g.shape[1] - 1)
        turn_U = float(U2p.phi[-1] - U2p.phi[0])
        legs_first = (2, turn_U)
    if g.fold_count:
        raise Fold(f"quadrilateral solve folds at {g.fold_count} nodes")
    if side == 1:
        T = T.mirrored()
    # the outer side leaves e' heading pi + eps; pin that branch so absolute heading tests apply
    T = _relift_to(T, math.pi + eps)
    # smooth re-integration keeps the headings (hence the bookkeeping) and makes positions exact
    T = _thin(Curve.from_angle(T.s, T.phi, T.z[0]), 1e-9)
    # T starts below the axis at e'; take the first descent to -eps/2 after it has risen above
    rise = np.flatnonzero(T.y > 0)
    if rise.size == 0:
        raise PropertyUnmet("ii", float(np.max(T.y)), "outer side never rises above the axis")
    top = int(rise[0])
    below = np.flatnonzero(T.y[top:] < -eps / 2)
    if below.size == 0:
        raise PropertyUnmet("ii", float(T.y[-1]), "outer side never reaches height -eps/2")
    k = top + int(below[0])
    s_p = brentq(lambda q: T.point_at(q).imag + eps / 2, T.s[k - 1], T.s[k], xtol=1e-15 * T.s[k],
                 rtol=1e-15)
    dT = 0.25 * (T.s[k] - T.s[k - 1])
    head = T.sub(0.0, s_p)
    tau = min(float(head.phi[-1]), -(HALF_PI + 2 * eps) + 2 * math.pi * round(head.phi[-1] / (2 * math.pi)))
    ext = head.extend(Curve.segment(0j, float(head.phi[-1]), 2 * dT, ds=dT / 10))
    T2 = adjoin_F(ext, s_p - dT, dT, 0.0, tau, ds=dT / 50)
    X, xi, c, r0, q = _almost_semicircle_from(T2, eps, r_factor)
    if side == 2:
        turn_T = float(X.phi[0] - T.phi[0])
        legs = [legs_first, (2, turn_T)]
        X = _relift_to(X, HALF_PI + eps)
        shift = -xi * c + (arc1.C.start - X.start).real - arc1.m_point.real
    else:
        # mirror back: traversal heading at the left end is pi - (end heading of the mirrored curve)
        turn_T = float(T.phi[0] - X.phi[-1])
        legs = [legs_first, (1, turn_T)]
        X = _relift_to(X.mirrored().reversed(), HALF_PI + eps)
        c = -c
        q = (-q[1], -q[0])
        shift = -xi * c + (arc2.C.start - X.start).real - arc2.m_point.real
    member = in_S_eps(X, eps)
    if not member["all"]:
        bad = [k for k in ("i", "ii", "iii", "iv", "v") if not member[k]][0]
        raise PropertyUnmet(bad, member["violations"][bad], "child curve is not an almost-semicircle")
    child = ChildCurve(side=side, curve=X, scale=xi, shift=float(shift), legs=legs, offset=r0,
                       crossings=q, grid=g, outer=T2, membership=member)
    child.curve_eps = eps
    return child


_CHILD_CACHE: dict = {}


def _arc_key(system: NormalSystem, epsilon: float, resolution: float) -> tuple:
    return (repr(sorted(system.to_json().items())), float(epsilon), float(resolution))


def universal_arcs(system: NormalSystem, epsilon: float = 0.02, resolution: float = 1.0):
    """Both universal arcs, cached per system, epsilon and resolution."""
    key = ("arcs",) + _arc_key(system, epsilon, resolution)
    if key not in _CHILD_CACHE:
        _CHILD_CACHE[key] = (build_universal_arc(system, epsilon, 1, resolution=resolution),
                             build_universal_arc(system, epsilon, 2, resolution=resolution))
    return _CHILD_CACHE[key]


def child_curve(system: NormalSystem, epsilon: float, side: int, rho: InvariantPair,
                resolution: float = 1.0) -> ChildCurve:
    """Cached :func:`build_child_curve`.  For linear inclination the geometry
    does not depend on ``rho`` and one construction serves every corner value."""
    base = _arc_key(system, epsilon, resolution)
    if system.is_linear:
        key = ("child", side) + base
    else:
        key = ("child", side, rho.R1, rho.R2) + base
    if key not in _CHILD_CACHE:
        a1, a2 = universal_arcs(system, epsilon, resolution)
        _CHILD_CACHE[key] = build_child_curve(system, a1, a2, side, rho, resolution=resolution)
    return _CHILD_CACHE[key]


def child_transfer_g(system: NormalSystem, epsilon: float, rho: InvariantPair, side: int,
                     resolution: float = 1.0) -> InvariantPair:
    """Value of the solution at the left end of ``X_side`` for corner value ``rho`` at 0."""
    th = system.theta_at(rho)
    if _wrap_pi(th + 0.25 * math.pi) > 1e-8:
        raise NotAdmissible("rho does not match the corner headings of the glued arcs")
    ch = child_curve(system, epsilon, side, rho, resolution)
    return propagate(system, rho, ch.legs)


# ------------------------------------------------------------------ corner fixed point
def composed_transfer(system: NormalSystem, epsilon: float, i: int, resolution: float = 1.0):
    """``rho -> f_j(g_i(rho))`` with ``j = 3 - i``: child corner value to parent corner value."""
    arcs = universal_arcs(system, epsilon, resolution)
    arc_j = arcs[2 - i]  # g_2 feeds f_1, g_1 feeds f_2

    def transfer(rho: InvariantPair) -> InvariantPair:
        return transfer_f(arc_j, child_transfer_g(system, epsilon, rho, i, resolution))

    return transfer


def angle_shift_ledger(system: NormalSystem, epsilon: float = 0.02, n: int = 10,
                       resolution: float = 1.0) -> dict:
    """Measured turning ``theta(out) - theta(in)`` of f_1, f_2, g_1, g_2 and both compositions.

    Each entry holds the expected value, the worst deviation over ``n``
    samples on the admissible level and the number of samples.  The
    compositions are compared with ``-pi`` modulo ``2 pi``.
    """
    a1, a2 = universal_arcs(system, epsilon, resolution)
    e = epsilon
    out = {}
    for name, arc in (("f1", a1), ("f2", a2)):
        smp = arc.transfer_samples
        idx = np.unique(np.linspace(0, len(smp["param"]) - 1, n).round().astype(int))
        d = (system.theta(smp["f"][idx, 0], smp["f"][idx, 1])
             - system.theta(smp["rho"][idx, 0], smp["rho"][idx, 1]))
        out[name] = {"expected": arc.expected_shift,
                     "max_error": float(np.max(np.abs(d - arc.expected_shift))), "samples": int(idx.size)}
    rhos = [level_point(system, float(s), -0.25 * math.pi) for s in np.linspace(-3.0, 3.0, n)]
    expected_g = {2: 0.25 * math.pi + e, 1: 0.75 * math.pi + e}
    for i in (1, 2):
        d = [system.theta_at(child_transfer_g(system, e, r, i, resolution)) - system.theta_at(r) for r in rhos]
        out[f"g{i}"] = {"expected": expected_g[i],
                        "max_error": float(np.max(np.abs(np.asarray(d) - expected_g[i]))), "samples": n}
    for i in (2, 1):
        tr = composed_transfer(system, e, i, resolution)
        d = [_wrap_2pi(system.theta_at(tr(r)) - system.theta_at(r) + math.pi) for r in rhos]
        out[f"f{3 - i}g{i}"] = {"expected": -math.pi, "max_error": float(np.max(np.abs(d))), "samples": n}
    return out


def solve_corner_fixed_point(system: NormalSystem, rho0: InvariantPair, i: int, transfer,
                             window: tuple = (-16.0, 16.0), tol: float = 1e-8) -> InvariantPair:
    """Corner value ``rho`` with ``transfer(rho) = rho0``.

    ``f_1 g_2`` turns by ``-pi`` and ``f_2 g_1`` by ``+pi``, so the root lies on
    the level ``theta(rho0) + pi`` for ``i = 2`` and ``theta(rho0) - pi`` for
    ``i = 1``.  The level curve is parametrised by ``R1`` measured from
    ``rho0.R1``; the composed map moves ``R1`` monotonically along it, so the
    root is bracketed on ``window`` and bisected.
    """
    level = system.theta_at(rho0) + (math.pi if i == 2 else -math.pi)
    guess = [rho0.R2]

    def point(s):
        p = level_point(system, rho0.R1 + s, level, guess[0])
        guess[0] = p.R2
        return p

    def residual(s):
        return transfer(point(s)).R1 - rho0.R1

    lo, hi = float(window[0]), float(window[1])
    try:
        f_lo, f_hi = residual(lo), residual(hi)
    except OutOfSampledRange as exc:
        raise WindowTooSmall(f"window {window} leaves the sampled transfer range: {exc}") from exc
    if f_lo * f_hi > 0:
        raise WindowTooSmall(f"no sign change of the corner residual on {window}")
    s = brentq(residual, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    rho = point(s)
    gap = float(np.max(np.abs(transfer(rho).as_array() - rho0.as_array())))
    if gap >= tol:
        raise PropertyUnmet("vii", gap, "corner fixed point residual")
    return rho


# ------------------------------------------------------------------ nested intervals
def _mp(x) -> mpmath.mpf:
    return mpmath.mpf(x) if not isinstance(x, str) else mpmath.mpf(x)


@dataclass(eq=False)
class TreeNode:
    """One placed copy ``z = scale * w + shift`` of the top-frame configuration."""

    level: int
    index: int
    scale: mpmath.mpf
    shift: mpmath.mpf
    corner: InvariantPair
    parent: "TreeNode | None" = None
    children: list = field(default_factory=list)
    side: int = 0  # child curve that carries this copy's corner value (0 for the root)

    def interval(self, local: tuple) -> tuple:
        return (self.scale * local[0] + self.shift, self.scale * local[1] + self.shift)


@dataclass(eq=False)
class NestedIntervalTree:
    """Intervals ``I_l^(n)`` of all placed copies, kept in extended precision.

    Deep copies are far below float64 resolution of the level-0 frame, so
    endpoints are mpmath numbers at ``TREE_DPS`` digits and serialise as
    decimal strings.
    """

    levels: list
    gamma: float
    tau: float
    delta2: float
    delta1: float = 0.2
    r1: float = 0.0
    nodes: list = field(default_factory=list)
    oscillation: dict = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def length0(self) -> mpmath.mpf:
        a, b = self.levels[0][0]
        return b - a

    def normalized(self, level: int | None = None) -> list:
        """Intervals of one level (default: deepest) mapped so level 0 is ``[0, 1]``."""
        lv = self.levels[self.depth if level is None else level]
        a0, L0 = self.levels[0][0][0], self.length0
        with mpmath.workdps(TREE_DPS):
            return [((a - a0) / L0, (b - a0) / L0) for a, b in lv]

    def midpoints(self, level: int | None = None) -> list:
        with mpmath.workdps(TREE_DPS):
            return [(a + b) / 2 for a, b in self.normalized(level)]

    def gaps(self, level: int) -> list:
        lv = self.levels[level]
        return [lv[k + 1][0] - lv[k][1] for k in range(len(lv) - 1)]

    def check(self, tol: float = 1e-12) -> dict:
        """Structure report: two disjoint children inside every parent, separation, tau identity."""
        L0 = self.length0
        ok_children = True
        ok_sep = True
        for n in range(self.depth):
            parents, kids = self.levels[n], self.levels[n + 1]
            if len(kids) != 2 * len(parents):
                ok_children = False
                continue
            for k, (a, b) in enumerate(parents):
                (c0, d0), (c1, d1) = kids[2 * k], kids[2 * k + 1]
                if not (a <= c0 < d0 < c1 < d1 <= b):
                    ok_children = False
                if c1 - d0 < mpmath.mpf(self.gamma) ** (n + 1) * L0 * (1 - tol):
                    ok_sep = False
        identity = abs(self.gamma ** self.tau - 0.5)
        return {"children": ok_children, "separation": ok_sep, "tau_identity": identity,
                "all": ok_children and ok_sep and identity <= tol}

    def to_json(self, digits: int = 40) -> dict:
        return {
            "levels": [[{"a": mpmath.nstr(a, digits), "b": mpmath.nstr(b, digits)} for a, b in lv]
                       for lv in self.levels],
            "gamma": self.gamma,
            "tau": self.tau,
            "delta2": self.delta2,
            "delta1": self.delta1,
            "r1": self.r1,
        }

    @classmethod
    def from_json(cls, d: dict) -> "NestedIntervalTree":
        with mpmath.workdps(TREE_DPS):
            levels = [[(mpmath.mpf(iv["a"]), mpmath.mpf(iv["b"])) for iv in lv] for lv in d["levels"]]
        return cls(levels, float(d["gamma"]), float(d["tau"]), float(d["delta2"]),
                   float(d.get("delta1", 0.2)), float(d.get("r1", 0.0)))

    @classmethod
    def from_intervals(cls, levels: list, delta2: float = math.nan,
                       gamma: float | None = None) -> "NestedIntervalTree":
        """Tree from explicit nested interval levels (used for reference Cantor trees).

        ``gamma`` defaults to the measured separation ratio; pass the known
        ratio of an exact self-similar tree to use its own exponent.
        """
        with mpmath.workdps(TREE_DPS):
            lv = [[(mpmath.mpf(a), mpmath.mpf(b)) for a, b in level] for level in levels]
        gamma = measure_gamma(lv) if gamma is None else float(gamma)
        return cls(lv, gamma, math.log(2.0) / math.log(1.0 / gamma), delta2)


def measure_gamma(levels: list) -> float:
    """Separation ratio ``gamma`` of nested interval levels.

    The minimum over built levels of ``(min gap / L0)**(1/n)`` together with
    ``(leaf length / L0)**(1/(N+1))`` for the deepest level ``N``: the second
    term keeps the cover-sum inequality valid for the truncated tree.
    """
    with mpmath.workdps(TREE_DPS):
        a0, b0 = levels[0][0]
        L0 = b0 - a0
        cands = []
        for n in range(1, len(levels)):
            lv = levels[n]
            g = min(lv[k + 1][0] - lv[k][1] for k in range(len(lv) - 1))
            cands.append((g / L0) ** (mpmath.mpf(1) / n))
        N = len(levels) - 1
        leaf = min(b - a for a, b in levels[N])
        cands.append((leaf / L0) ** (mpmath.mpf(1) / (N + 1)))
        return float(min(cands))


def arc_sector_oscillation(U1p: Curve, U2p: Curve, radius: float, delta1: float) -> float:
    """Range of theta over samples of ``U1p`` and ``U2p`` in ``N(radius, 0)`` with
    ``delta1 < arg z < pi - delta1``.  Both arcs start at the corner 0 with
    the same theta, so theta along each is the corner value plus its turning."""
    vals = []
    for C in (U1p, U2p):
        z = C.z
        ang = np.angle(z)
        sel = (np.abs(z) <= radius) & (z.imag > 0) & (ang > delta1) & (ang < math.pi - delta1)
        vals.append(C.phi[sel] - C.phi[0])
    v = np.concatenate(vals)
    if v.size == 0:
        return 0.0
    return float(np.max(v) - np.min(v))


# ------------------------------------------------------------------ full construction
@dataclass(eq=False)
class SingularSolution:
    """Result of :func:`build_singular_solution`."""

    tree: NestedIntervalTree
    arcs: tuple
    children: dict
    root_corner: InvariantPair
    seams: list
    system: NormalSystem
    epsilon: float
    resolution: float
    _patches: object = None

    @property
    def patches(self):
        if self._patches is None:
            self._patches = _build_patchwork(self)
        return self._patches

    def manifest(self) -> dict:
        return {"seams": [{k: v for k, v in s.items()} for s in self.seams],
                "patches": ["top_quadrilateral", "growth_1", "growth_2"]}


def _decimate(g: goursat.CharGrid, limit: int = 400) -> goursat.CharGrid:
    n1, n2 = g.shape
    i = np.unique(np.linspace(0, n1 - 1, min(n1, limit)).round().astype(int))
    j = np.unique(np.linspace(0, n2 - 1, min(n2, limit)).round().astype(int))
    return goursat.CharGrid(g.t1[i], g.t2[j], g.zeta[np.ix_(i, j)], g.R1_of_t2[j], g.R2_of_t1[i],
                            g.thetabar[np.ix_(i, j)], g.status[np.ix_(i, j)], g.signs, g.fold_tol,
                            {"system": g.meta.get("system")})


def _translated(g: goursat.CharGrid, shift: complex) -> goursat.CharGrid:
    return goursat.CharGrid(g.t1, g.t2, g.zeta + shift, g.R1_of_t2, g.R2_of_t1, g.thetabar, g.status,
                            g.signs, g.fold_tol, dict(g.meta))


def _build_patchwork(sol: SingularSolution):
    """Level-0 patches in the top frame: the top quadrilateral and the growth
    regions under both arcs, each solved with the corner value it carries."""
    from .net_analysis import GridField, PatchworkField

    a1, a2 = sol.arcs
    U1p, U2p = top_frame_arcs(a1, a2)
    g = goursat.solve(sol.system, U1p, U2p, sol.root_corner, goursat.GoursatOptions(method="metric"))
    fields = [GridField(_decimate(g), sol.system)]
    root = sol.tree.nodes[0]
    for arc, kid in ((a1, root.children[0]), (a2, root.children[1])):
        rho_c = child_transfer_g(sol.system, sol.epsilon, kid.corner, kid.side, sol.resolution)
        if arc.side == 1:
            grown = _growth_solves(sol.system, arc.C, arc.V, rho_c, arc.delta0, C_family=2)
        else:
            # the mirrored growth starts at the right end of C, reached along C as a 1-arc
            at_end = propagate(sol.system, rho_c, [(1, float(arc.C.phi[-1] - arc.C.phi[0]))])
            grown = _growth_solves(sol.system, arc.C.reversed(), arc.V, at_end, arc.delta0, C_family=1)
        for grid in grown["grids"]:
            fields.append(GridField(_translated(_decimate(grid), -arc.m_point), sol.system))
    return PatchworkField(fields, system=sol.system)


def _seam_report(system, arcs, rho_parent, rho_children, child_curves) -> list:
    """Jumps of R across the seams shared by a copy and its two children.

    Along each ``U'_k`` the top quadrilateral carries the parent corner value
    while the region under it carries ``f_k`` of the child's left-end value;
    along each child curve the child carries ``g_i`` and the parent region
    carries the same value transported along its own copy of ``C``.
    """
    a1, a2 = arcs
    U1p, U2p = top_frame_arcs(a1, a2)
    out = []
    for k, (arc, U, i) in enumerate(((a1, U1p, 2), (a2, U2p, 1)), start=1):
        rho_c = rho_children[i]
        at_m = transfer_f(arc, child_transfer_g(system, arc.epsilon, rho_c, i))
        fam = k
        s = goursat.tangent_sign(system, U, rho_parent, fam)
        top = goursat.edge_invariant_profile(system, U, rho_parent, fam, s)
        below = goursat.edge_invariant_profile(system, U, at_m, fam, s)
        jump_U = float(np.max(np.abs(top - below)))
        # child curve against the parent's copy of C: same start value, same total turning
        ch = child_curves[i]
        left = propagate(system, rho_c, ch.legs)
        fam_c = 2 if i == 2 else 1
        end_child = propagate(system, left, [(fam_c, float(ch.curve.phi[-1] - ch.curve.phi[0]))])
        end_parent = propagate(system, left, [(fam_c, float(arc.C.phi[-1] - arc.C.phi[0]))])
        jump_C = float(np.max(np.abs(end_child.as_array() - end_parent.as_array())))
        out.append({"arc": k, "child_side": i, "jump_U": jump_U, "jump_C": jump_C})
    return out


def build_singular_solution(system: NormalSystem, epsilon: float = 0.02, depth: int = 3,
                            rho0: InvariantPair | None = None, resolution: float = 1.0,
                            delta1: float = 0.2, scales: tuple = (0.5, 1.0, 2.0),
                            seam_tol: float = 1e-6) -> SingularSolution:
    """Place ``2**n`` scaled copies of the glued configuration down to ``depth``.

    Each copy is the map ``z = scale * w + shift`` of the top frame (where
    ``U1 - m1`` and ``U2 - m2`` meet at 0).  The copy under ``U'_1`` carries
    the side-2 child curve and the copy under ``U'_2`` the side-1 child; the
    corner value of each child solves the fixed-point problem for its
    parent's corner value.
    """
    if not 1 <= depth <= 5:
        raise ValueError("depth must lie in 1..5")
    arcs = universal_arcs(system, epsilon, resolution)
    a1, a2 = arcs
    U1p, U2p = top_frame_arcs(a1, a2)
    if rho0 is None:
        rho0 = level_point(system, 0.0, -0.25 * math.pi)
    if _wrap_pi(system.theta_at(rho0) + 0.25 * math.pi) > 1e-8:
        raise NotAdmissible("corner value must satisfy theta = -pi/4 (mod pi)")
    transfers = {i: composed_transfer(system, epsilon, i, resolution) for i in (1, 2)}
    x_left = a1.crossing - a1.m_point.real
    x_right = a2.crossing - a2.m_point.real
    local = (x_left, x_right)

    with mpmath.workdps(TREE_DPS):
        root = TreeNode(0, 0, mpmath.mpf(1), mpmath.mpf(0), rho0)
        levels_nodes = [[root]]
        seams = []
        children_geom = {}
        for n in range(depth):
            nxt = []
            for node in levels_nodes[n]:
                kids = {}
                for i in (2, 1):  # left copy (under U'_1) first
                    rho_c = solve_corner_fixed_point(system, node.corner, i, transfers[i])
                    ch = child_curve(system, epsilon, i, rho_c, resolution)
                    children_geom.setdefault((i, None if system.is_linear else (n, node.index)), ch)
                    kid = TreeNode(n + 1, len(nxt), node.scale * mpmath.mpf(ch.scale),
                                   node.scale * mpmath.mpf(ch.shift) + node.shift, rho_c, node, side=i)
                    node.children.append(kid)
                    nxt.append(kid)
                    kids[i] = (rho_c, ch)
                rep = _seam_report(system, arcs, node.corner, {i: kids[i][0] for i in kids},
                                   {i: kids[i][1] for i in kids})
                for r in rep:
                    r.update(level=n, node=node.index)
                    if max(r["jump_U"], r["jump_C"]) > seam_tol:
                        raise SeamMismatch(f"R jumps by {max(r['jump_U'], r['jump_C']):.3g} across a seam "
                                           f"at level {n}")
                seams.extend(rep)
            levels_nodes.append(nxt)
        levels = [[nd.interval(local) for nd in lv] for lv in levels_nodes]

    gamma = measure_gamma(levels)
    tau = math.log(2.0) / math.log(1.0 / gamma)
    L_local = x_right - x_left
    osc = {}
    for n, lv in enumerate(levels_nodes):
        for nd in lv:
            # every copy is the top-frame picture at its own scale; measure in the local frame
            for c in scales:
                osc[(n, nd.index, c)] = arc_sector_oscillation(U1p, U2p, c * L_local, delta1)
    delta2 = min(osc.values())
    r1 = float(max(ch.scale for ch in children_geom.values()))
    tree = NestedIntervalTree(levels, gamma, tau, delta2, delta1, r1, [nd for lv in levels_nodes for nd in lv], osc)
    return SingularSolution(tree, arcs, children_geom, rho0, seams, system, epsilon, resolution)


# ------------------------------------------------------------------ cover sums
def _merge(intervals: list) -> list:
    out = []
    for a, b in sorted(intervals, key=lambda iv: iv[0]):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def falconer_lower_bound_check(tree: NestedIntervalTree, covers: list, tol: float = 0.0) -> float:
    """Smallest ``sum diam**tau`` over ``covers`` with level 0 normalised to ``[0, 1]``.

    Each cover is a list of ``(a, b)`` intervals in normalised coordinates
    and must cover every deepest-level interval.
    """
    leaves = tree.normalized()
    best = None
    with mpmath.workdps(TREE_DPS):
        tau = mpmath.mpf(tree.tau)
        for cover in covers:
            iv = [(mpmath.mpf(a), mpmath.mpf(b)) for a, b in cover]
            merged = _merge(iv)
            for a, b in leaves:
                if not any(ma <= a and b <= mb for ma, mb in merged):
                    raise NotACover(f"leaf [{mpmath.nstr(a, 8)}, {mpmath.nstr(b, 8)}] is not covered")
            total = mpmath.fsum((b - a) ** tau for a, b in iv)
            best = total if best is None else min(best, total)
    if best is None:
        raise ValueError("no covers given")
    value = float(best)
    if value < 0.5 - tol:
        raise PropertyUnmet("cover-sum", 0.5 - value, "cover sum below 1/2")
    return value


def random_covers(tree: NestedIntervalTree, n: int, seed: int = 0) -> list:
    """Covers built by grouping runs of consecutive leaves and taking each run's hull."""
    rng = np.random.default_rng(seed)
    leaves = tree.normalized()
    out = []
    for _ in range(n):
        cover = []
        k = 0
        while k < len(leaves):
            run = int(rng.integers(1, max(2, len(leaves) // 2) + 1))
            run = min(run, len(leaves) - k)
            cover.append((leaves[k][0], leaves[k + run - 1][1]))
            k += run
        out.append(cover)
    return out
