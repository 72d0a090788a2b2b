"""Tracing characteristics through solution fields and checking net geometry.

A field maps a planar point to ``(R1, R2, theta)``.  Three backings exist:
an analytic oracle, a solved :class:`~charnets.goursat.CharGrid` (looked
up by a spatial hash and inverse bilinear interpolation) and a patchwork of
fields queried in priority order.

Angle differences are always wrapped to ``(-pi, pi]`` before use, so the
branch a field happens to report for ``theta`` never matters.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .curves import Curve
from .errors import (
    ClosureFailure,
    FieldGap,
    InsufficientScales,
    LeftDomain,
    MaxLength,
    OriginSingular,
    OutOfTable,
    StencilOutOfDomain,
)
from .goursat import VALID, CharGrid
from .systems import NormalSystem


def wrap(a):
    """Wrap angles to ``(-pi, pi]``."""
    out = np.angle(np.exp(1j * np.asarray(a, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def direction(theta: float, k: int) -> complex:
    return complex(np.exp(1j * theta) * (1 if k == 1 else 1j))


# ------------------------------------------------------------------ regions
class Region:
    """Open planar region; subclasses implement :meth:`contains`."""

    diameter: float = math.inf

    def contains(self, z: complex) -> bool:
        raise NotImplementedError

    def __and__(self, other: "Region") -> "Region":
        return Intersection(self, other)


class Plane(Region):
    def contains(self, z: complex) -> bool:
        return True


@dataclass
class HalfPlane(Region):
    """``{Im z > level}``."""

    level: float = 0.0

    def contains(self, z: complex) -> bool:
        return z.imag > self.level


@dataclass
class Box(Region):
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        self.diameter = math.hypot(self.xmax - self.xmin, self.ymax - self.ymin)

    def contains(self, z: complex) -> bool:
        return self.xmin < z.real < self.xmax and self.ymin < z.imag < self.ymax


@dataclass
class Annulus(Region):
    """``{r_in < |z - center| < r_out}``, optionally restricted to an angular sector."""

    r_in: float
    r_out: float
    center: complex = 0j
    psi_min: float | None = None
    psi_max: float | None = None

    def __post_init__(self):
        self.diameter = 2 * self.r_out

    def contains(self, z: complex) -> bool:
        w = z - self.center
        r = abs(w)
        if not self.r_in < r < self.r_out:
            return False
        if self.psi_min is None:
            return True
        mid = 0.5 * (self.psi_min + self.psi_max)
        psi = mid + wrap(math.atan2(w.imag, w.real) - mid)
        return self.psi_min < psi < self.psi_max


@dataclass
class Intersection(Region):
    a: Region
    b: Region

    def __post_init__(self):
        self.diameter = min(self.a.diameter, self.b.diameter)

    def contains(self, z: complex) -> bool:
        return self.a.contains(z) and self.b.contains(z)


# ------------------------------------------------------------------- fields
class SolutionField:
    """Evaluator ``z -> (R1, R2, theta)``; raises :class:`FieldGap` where undefined."""

    system: NormalSystem | None = None
    domain: Region = Plane()

    def evaluate(self, z: complex) -> tuple[float, float, float]:
        raise NotImplementedError

    def theta(self, z: complex) -> float:
        return self.evaluate(z)[2]

    def covers(self, z: complex) -> bool:
        try:
            self.evaluate(z)
        except FieldGap:
            return False
        return True


class OracleField(SolutionField):
    """Field backed by a closed-form oracle (spiral or constant)."""

    def __init__(self, oracle, domain: Region | None = None, system: NormalSystem | None = None):
        self.oracle = oracle
        self.domain = domain if domain is not None else Plane()
        if system is None:
            try:
                system = oracle.system
            except (AttributeError, ValueError):
                system = None
        self.system = system

    def evaluate(self, z: complex):
        z = complex(z)
        try:
            R1, R2, th = self.oracle.evaluate(z)
        except OriginSingular as exc:
            raise FieldGap(str(exc)) from exc
        return float(R1), float(R2), float(th)


class GridField(SolutionField):
    """Field backed by a characteristic grid.

    Points are located with a uniform spatial hash over the bounding boxes of
    Valid cells and inverse bilinear iteration inside the candidate cell.
    ``R`` is interpolated linearly in ``t1``/``t2`` and ``theta`` bilinearly
    from the node values of ``thetabar``.
    """

    def __init__(self, grid: CharGrid, system: NormalSystem | None = None, domain: Region | None = None):
        self.grid = grid
        self.system = system
        self.domain = domain if domain is not None else _GridCoverage(self)
        z = grid.zeta
        ok = grid.valid
        cell_ok = ok[:-1, :-1] & ok[1:, :-1] & ok[1:, 1:] & ok[:-1, 1:]
        jac = grid.cell_jacobians()
        cell_ok &= np.nan_to_num(jac, nan=-1.0) > 0
        self._p00, self._p10 = z[:-1, :-1], z[1:, :-1]
        self._p11, self._p01 = z[1:, 1:], z[:-1, 1:]
        corners = np.stack([self._p00, self._p10, self._p11, self._p01])
        xs, ys = corners.real, corners.imag
        xmin, xmax = np.nanmin(xs, axis=0), np.nanmax(xs, axis=0)
        ymin, ymax = np.nanmin(ys, axis=0), np.nanmax(ys, axis=0)
        idx = np.argwhere(cell_ok)
        if idx.size == 0:
            raise FieldGap("grid has no valid cell")
        # multi-level spatial hash: a cell goes to the level whose bucket
        # size is at least its extent, so grids spanning many scales stay cheap
        extent = np.maximum(xmax - xmin, ymax - ymin)
        size = extent[cell_ok]
        self._h = float(np.median(size[size > 0])) if np.any(size > 0) else 1.0
        h0 = self._h
        self._buckets: dict = defaultdict(list)
        levels = set()
        for i, j in idx:
            lev = max(0, int(math.ceil(math.log2(max(extent[i, j], 1e-300) / h0))))
            hl = h0 * 2.0 ** lev
            levels.add(lev)
            for bx in range(math.floor(xmin[i, j] / hl), math.floor(xmax[i, j] / hl) + 1):
                for by in range(math.floor(ymin[i, j] / hl), math.floor(ymax[i, j] / hl) + 1):
                    self._buckets[(lev, bx, by)].append((int(i), int(j)))
        self._levels = sorted(levels)
        self._last = None
        all_pts = z[ok]
        self.diameter = float(np.max(np.abs(all_pts - all_pts.mean())) * 2)
        self._theta_nodes = grid.thetabar

    def _in_cell(self, z: complex, i: int, j: int):
        p00, p10, p11, p01 = self._p00[i, j], self._p10[i, j], self._p11[i, j], self._p01[i, j]
        u, v = 0.5, 0.5
        scale = abs(p11 - p00) + abs(p10 - p01)
        for _ in range(20):
            F = (1 - u) * (1 - v) * p00 + u * (1 - v) * p10 + u * v * p11 + (1 - u) * v * p01 - z
            Fu = (1 - v) * (p10 - p00) + v * (p11 - p01)
            Fv = (1 - u) * (p01 - p00) + u * (p11 - p10)
            det = (Fu.real * Fv.imag - Fu.imag * Fv.real)
            if det == 0:
                return None
            du = (F.real * Fv.imag - F.imag * Fv.real) / det
            dv = (Fu.real * F.imag - Fu.imag * F.real) / det
            u -= du
            v -= dv
            if abs(du) + abs(dv) < 1e-13 and abs(F) < 1e-12 * max(scale, 1e-300) + 1e-15:
                break
        tol = 1e-9
        if -tol <= u <= 1 + tol and -tol <= v <= 1 + tol:
            return min(max(u, 0.0), 1.0), min(max(v, 0.0), 1.0)
        return None

    def locate(self, z: complex):
        """``(i, j, u, v)`` of the cell containing ``z``; raises FieldGap."""
        z = complex(z)
        if self._last is not None:
            hit = self._in_cell(z, *self._last)
            if hit is not None:
                return (*self._last, *hit)
        for lev in self._levels:
            hl = self._h * 2.0 ** lev
            key = (lev, math.floor(z.real / hl), math.floor(z.imag / hl))
            for i, j in self._buckets.get(key, ()):
                hit = self._in_cell(z, i, j)
                if hit is not None:
                    self._last = (i, j)
                    return i, j, hit[0], hit[1]
        raise FieldGap(f"point {z} is not covered by the grid")

    def evaluate(self, z: complex):
        i, j, u, v = self.locate(z)
        g = self.grid
        R2 = g.R2_of_t1[i] + u * (g.R2_of_t1[i + 1] - g.R2_of_t1[i])
        R1 = g.R1_of_t2[j] + v * (g.R1_of_t2[j + 1] - g.R1_of_t2[j])
        T = self._theta_nodes
        th = ((1 - u) * (1 - v) * T[i, j] + u * (1 - v) * T[i + 1, j]
              + u * v * T[i + 1, j + 1] + (1 - u) * v * T[i, j + 1])
        return float(R1), float(R2), float(th)


class _GridCoverage(Region):
    def __init__(self, gf: GridField):
        self.gf = gf

    @property
    def diameter(self):
        return self.gf.diameter

    def contains(self, z: complex) -> bool:
        return self.gf.covers(z)


class PatchworkField(SolutionField):
    """First field in priority order that covers the query point."""

    def __init__(self, fields: list, domain: Region | None = None, system: NormalSystem | None = None):
        self.fields = list(fields)
        self.system = system
        self.domain = domain if domain is not None else _PatchCoverage(self)

    def evaluate(self, z: complex):
        for f in self.fields:
            if f.domain.contains(complex(z)):
                try:
                    return f.evaluate(z)
                except FieldGap:
                    continue
        raise FieldGap(f"no patch covers {z}")


class _PatchCoverage(Region):
    def __init__(self, pf: PatchworkField):
        self.pf = pf
        self.diameter = max((getattr(f.domain, "diameter", math.inf) for f in pf.fields), default=math.inf)

    def contains(self, z: complex) -> bool:
        return self.pf.covers(z)


def field_consistency(fld: SolutionField, points) -> float:
    """Largest wrapped gap between the field's theta and theta(system, R) on ``points``."""
    worst = 0.0
    for z in points:
        R1, R2, th = fld.evaluate(z)
        worst = max(worst, abs(wrap(th - float(fld.system.theta(R1, R2)))))
    return worst


# ------------------------------------------------------------------ tracing
def _rk4(fld: SolutionField, z: complex, h: float, k: int, sgn: int) -> complex:
    def f(w):
        return sgn * direction(fld.theta(w), k)

    k1 = f(z)
    k2 = f(z + 0.5 * h * k1)
    k3 = f(z + 0.5 * h * k2)
    k4 = f(z + h * k3)
    return z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def trace(fld: SolutionField, z0: complex, k: int, direction_sign: int = 1, step: float = 1e-2,
          domain: Region | None = None, length: float | None = None,
          max_length: float | None = None) -> Curve:
    """Integrate ``z' = +-exp(i*theta)`` (k=1) or ``+-i*exp(i*theta)`` (k=2) with RK4.

    Stops after ``length`` if given; otherwise at the domain boundary, where
    the last step is bisected until the endpoint is within 1e-9 of it.
    Without ``length`` the trace is capped at ``max_length`` (default ten
    domain diameters) and raises :class:`MaxLength` when the cap is hit.
    """
    dom = domain if domain is not None else fld.domain
    z0 = complex(z0)
    if not dom.contains(z0):
        raise LeftDomain(f"start point {z0} is outside the domain")
    if max_length is None:
        diam = getattr(dom, "diameter", math.inf)
        max_length = 10 * diam if math.isfinite(diam) else 1e3
    cap = length if length is not None else max_length
    zs, ss = [z0], [0.0]
    z, s = z0, 0.0

    def attempt(zc, h):
        try:
            zn = _rk4(fld, zc, h, k, direction_sign)
        except FieldGap:
            return None
        if not dom.contains(zn):
            return None
        try:
            fld.theta(zn)
        except FieldGap:
            return None
        return zn

    hit_boundary = False
    while s < cap - 1e-15:
        h = min(step, cap - s)
        zn = attempt(z, h)
        if zn is None:
            # stage points may straddle the boundary; shrink until a step succeeds
            lo, hi = 0.0, h
            z_lo = z
            while (hi - lo) > 1e-10:
                mid = 0.5 * (lo + hi)
                zm = attempt(z, mid)
                if zm is None:
                    hi = mid
                else:
                    lo, z_lo = mid, zm
            if lo == 0.0:
                if not _near_boundary(dom, z, 1e-9):
                    raise FieldGap(f"field undefined at interior point near {z}")
            else:
                zs.append(z_lo)
                ss.append(s + lo)
            hit_boundary = True
            break
        z, s = zn, s + h
        zs.append(z)
        ss.append(s)
    if not hit_boundary and length is None:
        raise MaxLength(f"trace reached the cap {cap:.3g} without meeting the boundary")
    zs = np.array(zs)
    ss = np.array(ss)
    if ss.size < 2:
        raise LeftDomain("trace starts on the boundary")
    keep = np.concatenate([[True], np.diff(ss) > 0])
    zs, ss = zs[keep], ss[keep]
    base = 0.0 if k == 1 else math.pi / 2
    base += 0.0 if direction_sign == 1 else math.pi
    heads = np.unwrap(np.array([fld.theta(w) for w in zs]) + base)
    return Curve(ss, zs, heads)


def _near_boundary(dom: Region, z: complex, tol: float) -> bool:
    for ang in np.linspace(0, 2 * math.pi, 16, endpoint=False):
        if not dom.contains(z + 10 * tol * np.exp(1j * ang)):
            return True
    return False


def trace_net(fld: SolutionField, seeds, step: float = 1e-2, domain: Region | None = None,
              length: float | None = None) -> list[tuple[int, Curve]]:
    """Both characteristics (both directions, joined) through every seed point."""
    net = []
    for z0 in seeds:
        for k in (1, 2):
            fwd = trace(fld, z0, k, 1, step, domain, length)
            bwd = trace(fld, z0, k, -1, step, domain, length)
            net.append((k, _join(bwd, fwd)))
    return net


def _join(back: Curve, fwd: Curve) -> Curve:
    rb = back.reversed()
    s = np.concatenate([rb.s, rb.s[-1] + fwd.s[1:]])
    z = np.concatenate([rb.z, fwd.z[1:]])
    phi = np.concatenate([rb.phi, fwd.phi[1:] + 2 * math.pi * round((rb.phi[-1] - fwd.phi[0]) / (2 * math.pi))])
    return Curve(s, z, phi)


# --------------------------------------------------------------- quadrilaterals
@dataclass
class CharQuad:
    a: complex
    b: complex
    c: complex
    d: complex
    ab: Curve
    cd: Curve
    ac: Curve
    bd: Curve
    i_index: int
    orientation: int
    dtheta_ac: float
    dtheta_bd: float
    dtheta_ab: float = 0.0
    dtheta_cd: float = 0.0

    def boundary(self) -> np.ndarray:
        return np.concatenate([self.ab.z, self.bd.z[1:], self.cd.z[::-1][1:], self.ac.z[::-1][1:]])

    def area(self) -> float:
        p = self.boundary()
        return 0.5 * abs(float(np.sum((np.conj(p) * np.roll(p, -1)).imag)))


def _polyline_hit(P: np.ndarray, Q: np.ndarray):
    """First crossing of polylines P and Q: ``(index_P, frac_P, index_Q, frac_Q, point)``."""
    a0, a1 = P[:-1], P[1:]
    best = None
    for j in range(Q.size - 1):
        b0, b1 = Q[j], Q[j + 1]
        r = a1 - a0
        sv = b1 - b0
        den = (np.conj(r) * sv).imag
        qp = b0 - a0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (np.conj(qp) * sv).imag / den
            u = (np.conj(qp) * r).imag / den
        ok = (den != 0) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
        if np.any(ok):
            i = int(np.flatnonzero(ok)[0])
            pt = a0[i] + t[i] * r[i]
            cand = (i, float(t[i]), j, float(u[i]), pt)
            if best is None or i + t[i] < best[0] + best[1]:
                best = cand
            break
    return best


def _truncate(C: Curve, i: int, frac: float, z_end: complex, th_end: float) -> Curve:
    s_end = C.s[i] + frac * (C.s[i + 1] - C.s[i])
    keep = C.s < s_end - 1e-14
    s = np.concatenate([C.s[keep], [s_end]])
    z = np.concatenate([C.z[keep], [z_end]])
    last = C.phi[keep][-1]
    phi = np.concatenate([C.phi[keep], [last + wrap(th_end - last)]])
    return Curve(s, z, phi)


def extract_quad(fld: SolutionField, z0: complex, i_index: int, l: float, eps: float,
                 step: float | None = None, domain: Region | None = None,
                 i_sign: int = 1, j_sign: int = 1) -> CharQuad:
    """Characteristic quadrilateral with an i-arc of length ``l`` and j-arcs of length ``eps``.

    ``ab`` is traced from ``a = z0`` and ``ac`` from ``a``; the j-arc from
    ``b`` and the i-arc from ``c`` are traced past their nominal lengths and
    intersected to find ``d``.
    """
    j_index = 3 - i_index
    step = step if step is not None else min(l, eps) / 20
    dom = domain if domain is not None else fld.domain

    def tr(z, k, sg, L):
        try:
            return trace(fld, z, k, sg, step, dom, length=L)
        except (FieldGap, MaxLength) as exc:
            raise LeftDomain(str(exc)) from exc

    ab = tr(z0, i_index, i_sign, l)
    ac = tr(z0, j_index, j_sign, eps)
    if ab.length < l * (1 - 1e-9) or ac.length < eps * (1 - 1e-9):
        raise LeftDomain("quad side left the domain")
    a, b, c = ab.start, ab.end, ac.end
    bd_long = tr(b, j_index, j_sign, 2 * eps)
    cd_long = tr(c, i_index, i_sign, 2 * l)
    hit = _polyline_hit(bd_long.z, cd_long.z)
    if hit is None:
        raise ClosureFailure("the fourth side does not meet the j-arc from b")
    ib, fb, ic, fc, d = hit
    gap = abs(bd_long.point_at(bd_long.s[ib] + fb * (bd_long.s[ib + 1] - bd_long.s[ib])) - d)
    if gap > 0.05 * eps:
        raise ClosureFailure(f"closure gap {gap:.3g}")
    th_d = fld.theta(d)
    jbase = (0.0 if j_index == 1 else math.pi / 2) + (0.0 if j_sign == 1 else math.pi)
    ibase = (0.0 if i_index == 1 else math.pi / 2) + (0.0 if i_sign == 1 else math.pi)
    bd = _truncate(bd_long, ib, fb, d, th_d + jbase)
    cd = _truncate(cd_long, ic, fc, d, th_d + ibase)
    orient = 1 if ((np.conj(b - a) * (c - a)).imag > 0) else -1
    return CharQuad(a, b, c, d, ab, cd, ac, bd, i_index, orient,
                    float(ac.turning), float(bd.turning), float(ab.turning), float(cd.turning))


def quasi_hp_ratio(q: CharQuad, zero_tol: float = 1e-10) -> dict:
    num, den = abs(q.dtheta_bd), abs(q.dtheta_ac)
    if num < zero_tol and den < zero_tol:
        return {"num": num, "den": den, "ratio": None, "status": "BothZero", "same_sign": True}
    if num < zero_tol or den < zero_tol:
        return {"num": num, "den": den, "ratio": None, "status": "OneZero", "same_sign": False}
    same = (q.dtheta_bd > 0) == (q.dtheta_ac > 0)
    return {"num": num, "den": den, "ratio": num / den, "status": "ratio", "same_sign": bool(same)}


def ratio_within(rep: dict, K: float, tol: float = 0.05) -> bool:
    if rep["status"] == "BothZero":
        return True
    if rep["status"] == "OneZero":
        return False
    return rep["same_sign"] and (1 / K - tol <= rep["ratio"] <= K + tol)


# ----------------------------------------------------------- derivatives
def _dk_theta(fld: SolutionField, z: complex, k: int, h: float) -> float:
    th = fld.theta(z)
    d = direction(th, k)
    return wrap(fld.theta(z + h * d) - fld.theta(z - h * d)) / (2 * h)


def blowup_residual(fld: SolutionField, z: complex, h: float, domain: Region | None = None) -> tuple[float, float]:
    """``(D2 D1 theta - (D1 theta)^2, D1 D2 theta + (D2 theta)^2)`` by centred differences.

    Every directional derivative re-evaluates the characteristic direction at
    its own base point.
    """
    dom = domain if domain is not None else fld.domain
    z = complex(z)
    try:
        th = fld.theta(z)
        d1, d2 = direction(th, 1), direction(th, 2)
        pts = [z + sg * h * d for d in (d1, d2) for sg in (1, -1)]
        for p in pts:
            t = fld.theta(p)
            for d in (direction(t, 1), direction(t, 2)):
                for sg in (1, -1):
                    if not dom.contains(p + sg * h * d):
                        raise StencilOutOfDomain(f"stencil at {z} with h={h} leaves the domain")
        D1 = _dk_theta(fld, z, 1, h)
        D2 = _dk_theta(fld, z, 2, h)
        D2D1 = (_dk_theta(fld, z + h * d2, 1, h) - _dk_theta(fld, z - h * d2, 1, h)) / (2 * h)
        D1D2 = (_dk_theta(fld, z + h * d1, 2, h) - _dk_theta(fld, z - h * d1, 2, h)) / (2 * h)
    except FieldGap as exc:
        raise StencilOutOfDomain(str(exc)) from exc
    return D2D1 - D1 * D1, D1D2 + D2 * D2


# ---------------------------------------------------------------- audits
@dataclass
class AuditReport:
    checks: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.checks.values() if v.get("assert", True))

    def to_json(self) -> dict:
        return {"pass": self.passed, "checks": self.checks, "witnesses": self.witnesses,
                "constants": self.constants}


def concave_half_length(fld: SolutionField, z: complex, i_index: int, kappa: float, i_sign: int,
                        step: float, domain: Region | None = None) -> float:
    """Length of the j-characteristic from ``z`` to the boundary on the concave side."""
    j_index = 3 - i_index
    th = fld.theta(z)
    tangent = i_sign * direction(th, i_index)
    left = 1j * tangent
    jdir = direction(th, j_index)
    sg = 1 if (np.conj(jdir) * left).real * np.sign(kappa) > 0 else -1
    C = trace(fld, z, j_index, sg, step, domain)
    return C.length


def bound_audit(fld: SolutionField, net: list, K: float, tol: float = 0.05,
                samples_per_arc: int = 5, step: float | None = None,
                domain: Region | None = None, arcs_for_diameter: list | None = None,
                quads: list | None = None) -> AuditReport:
    """Curvature/length bounds along traced arcs, diameter bound and area measurements.

    ``net`` is a list of ``(k, Curve)``.  Checks (a) ``kappa*lambda(J) <= K``
    with the measured curvature, (b) the same with ``D+theta`` from the
    field, (c) ``diam(C) <= 5*lambda(E)`` for the arcs in
    ``arcs_for_diameter`` (pairs of curve and return-path length) and (d)
    reports area ratios of ``quads`` without asserting.
    """
    dom = domain if domain is not None else fld.domain
    rep = AuditReport()
    worst_a = (0.0, None)
    worst_b = (0.0, None)
    n_a = n_b = 0
    for k, C in net:
        if C.length <= 0:
            continue
        st = step if step is not None else C.length / 200
        for s in np.linspace(0.15, 0.85, samples_per_arc) * C.length:
            i = int(np.searchsorted(C.s, s))
            i = min(max(i, 1), C.s.size - 2)
            kap = (C.phi[i + 1] - C.phi[i - 1]) / (C.s[i + 1] - C.s[i - 1])
            z = complex(C.z[i])
            if abs(kap) < 1e-12:
                continue
            tang = np.exp(1j * C.phi[i])
            i_sign = 1 if (np.conj(direction(fld.theta(z), k)) * tang).real > 0 else -1
            try:
                lam = concave_half_length(fld, z, k, kap, i_sign, st, dom)
            except (MaxLength, FieldGap, LeftDomain):
                continue
            val = abs(kap) * lam / K
            n_a += 1
            if val > worst_a[0]:
                worst_a = (val, {"z": [z.real, z.imag], "kappa": abs(kap), "lambda_J": lam})
            h = min(st, 1e-3 * max(lam, 1e-6))
            try:
                dplus = abs(_dk_theta(fld, z, k, h))
            except FieldGap:
                continue
            val_b = lam / (K / dplus) if dplus > 0 else 0.0
            n_b += 1
            if val_b > worst_b[0]:
                worst_b = (val_b, {"z": [z.real, z.imag], "Dtheta": dplus, "lambda_J": lam, "bound": K / dplus})
    rep.checks["curvature_bound"] = {"pass": worst_a[0] <= 1 + tol, "worst_ratio": worst_a[0],
                                     "samples": n_a, "vacuous": n_a == 0}
    rep.checks["length_bound"] = {"pass": worst_b[0] <= 1 + tol, "worst_ratio": worst_b[0],
                                  "samples": n_b, "vacuous": n_b == 0}
    rep.witnesses["curvature_bound"] = worst_a[1]
    rep.witnesses["length_bound"] = worst_b[1]

    worst_c = (0.0, None)
    n_c = 0
    for C, lamE in arcs_for_diameter or []:
        diam = arc_diameter(C)
        if lamE <= 0:
            continue
        n_c += 1
        val = diam / (5 * lamE)
        if val > worst_c[0]:
            worst_c = (val, {"diam": diam, "lambda_E": lamE})
    rep.checks["diameter_bound"] = {"pass": worst_c[0] <= 1 + tol, "worst_ratio": worst_c[0],
                                    "samples": n_c, "vacuous": n_c == 0}
    rep.witnesses["diameter_bound"] = worst_c[1]

    etas, eta_primes = [], []
    for q in quads or []:
        area = q.area()
        li, lj = q.ab.length, q.ac.length
        etas.append(area / (li * lj))
        if abs(q.dtheta_ab) > 1e-10:
            eta_primes.append(area / (lj * lj * abs(q.dtheta_ab)))
    rep.constants["eta"] = min(etas) if etas else None
    rep.constants["eta_prime"] = min(eta_primes) if eta_primes else None
    rep.checks["area_measurements"] = {"pass": True, "assert": False, "samples": len(etas)}
    return rep


def arc_diameter(C: Curve) -> float:
    z = C.z
    if z.size > 400:
        z = z[np.linspace(0, z.size - 1, 400).astype(int)]
    return float(np.max(np.abs(z[:, None] - z[None, :])))


def chord_return_path(C: Curve, domain: Region, n: int = 64) -> float | None:
    """Length of the straight chord closing ``C`` if it lies in ``domain``."""
    pts = C.start + (C.end - C.start) * np.linspace(0, 1, n)
    if all(domain.contains(complex(p)) for p in pts[1:-1]):
        return abs(C.end - C.start)
    return None


# ---------------------------------------------------------- boundary labels
def sector_oscillation(fld: SolutionField, p: complex, r: float, delta1: float = 0.2,
                       n_r: int = 12, n_a: int = 12, depth: float = 1e-2) -> float:
    """Oscillation of theta over ``{delta1 < arg(z - p) < pi - delta1, r*depth <= |z - p| <= r}``."""
    rs = r * np.geomspace(depth, 1.0, n_r)
    angs = np.linspace(delta1, math.pi - delta1, n_a)
    ref = None
    vals = []
    for rad in rs:
        for a in angs:
            z = p + rad * np.exp(1j * a)
            try:
                th = fld.theta(z)
            except FieldGap:
                continue
            if ref is None:
                ref = th
            vals.append(wrap(th - ref))
    if not vals:
        raise FieldGap("sector not covered by the field")
    return float(max(vals) - min(vals))


def classify_boundary_point(fld: SolutionField, p: complex, scales, delta1: float = 0.2,
                            tol: float = 1e-2, step: float | None = None) -> dict:
    """Heuristic regular/singular label for a boundary point of the upper half-plane."""
    scales = sorted((float(r) for r in scales), reverse=True)
    if len(scales) < 3:
        raise InsufficientScales("at least three scales are needed")
    osc = [sector_oscillation(fld, p, r, delta1) for r in scales]
    decreasing = all(osc[i + 1] <= osc[i] * 1.05 + 1e-12 for i in range(len(osc) - 1))
    if osc[-1] < tol and decreasing:
        return {"label": "Regular", "oscillation": osc, "scales": scales}
    r = scales[-1]
    st = step if step is not None else r / 50
    label = "Type1"
    for k in (1, 2):
        for sg in (1, -1):
            z0 = p + 0.5 * r * 1j
            try:
                C = trace(fld, z0, k, sg, st, length=4 * r)
            except (FieldGap, LeftDomain, MaxLength):
                continue
            dist = np.abs(C.z - p)
            if dist.min() < 1e-3 * r:
                return {"label": f"ISingularity({k})", "oscillation": osc, "scales": scales}
            tail = C.phi[int(0.8 * C.phi.size):]
            if tail.size > 1 and np.ptp(tail) < tol:
                label = "Type0"
    return {"label": label, "oscillation": osc, "scales": scales}
