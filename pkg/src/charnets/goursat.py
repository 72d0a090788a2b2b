"""Characteristic initial value problem on two orthogonal initial curves.

The solution is represented in characteristic coordinates ``(t1, t2)``:
``t1`` is arc length along the 1-initial curve and ``t2`` along the
2-initial curve.  Because ``R1`` is transported along 1-characteristics it
depends on ``t2`` only, and ``R2`` on ``t1`` only, so both are stored once
per row/column and the inclination ``thetabar`` is known at every node
before any geometry is computed.  Node positions are then obtained cell by
cell from a 2x2 linear solve with angle-averaged directions.

Orientation: the 1-initial curve has tangent ``s1*exp(i*theta)`` and the
2-initial curve ``s2*i*exp(i*theta)``, with ``s1, s2`` in ``{+1, -1}``
read off from the corner headings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import Curve
from .errors import BranchJump, DegenerateCell, Fold, NotAdmissible
from .systems import InvariantPair, NormalSystem

VALID, FOLDED, UNREACHED = 0, 1, 2
TWO_PI = 2 * math.pi


def _gap(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _cross(x, y):
    return (np.conj(x) * y).imag


def tangent_sign(system: NormalSystem, C: Curve, corner_rho: InvariantPair, family: int,
                 tol: float = 1e-8) -> int:
    """+1 if ``C`` runs along the characteristic orientation at the corner, -1 if against."""
    th = system.theta_at(corner_rho) + (0.0 if family == 1 else math.pi / 2)
    head = float(C.phi[0])
    if _gap(head, th) <= tol:
        return 1
    if _gap(head, th + math.pi) <= tol:
        return -1
    raise NotAdmissible(
        f"corner inclination does not match the {family}-curve heading "
        f"(gap {min(_gap(head, th), _gap(head, th + math.pi)):.3g} rad)")


def edge_target_theta(system: NormalSystem, C: Curve, corner_rho: InvariantPair, family: int,
                      sign: int) -> np.ndarray:
    """Inclination required along ``C``, lifted to start exactly at theta(corner)."""
    if family == 1:
        shift = 0.0 if sign == 1 else math.pi
    else:
        shift = sign * math.pi / 2
    raw = C.phi - shift
    th0 = system.theta_at(corner_rho)
    raw = raw + TWO_PI * round((th0 - raw[0]) / TWO_PI)
    raw = raw - raw[0] + th0
    return raw


def edge_invariant_profile(system: NormalSystem, C: Curve, corner_rho: InvariantPair,
                           fixed_index: int, sign: int | None = None,
                           tol: float = 1e-8) -> np.ndarray:
    """Samples of the invariant that varies along initial curve ``C``.

    ``fixed_index`` is the family of ``C`` (and the index of the invariant
    held at its corner value).  Along a 1-curve ``R1 = rho1`` and the
    returned array is ``R2(s)``; along a 2-curve it is ``R1(s)``.
    """
    if fixed_index not in (1, 2):
        raise ValueError("fixed_index must be 1 or 2")
    if sign is None:
        sign = tangent_sign(system, C, corner_rho, fixed_index, tol)
    target = edge_target_theta(system, C, corner_rho, fixed_index, sign)
    fixed = corner_rho.R1 if fixed_index == 1 else corner_rho.R2
    start = corner_rho.R2 if fixed_index == 1 else corner_rho.R1
    jump = math.pi / (2 * system.A)
    if system.is_linear:
        c1, c2, c0 = system.coefficients()
        if fixed_index == 1:
            out = (target - c0 - c1 * fixed) / c2
        else:
            out = (target - c0 - c2 * fixed) / c1
        out[0] = start
    else:
        out = np.empty(target.size)
        out[0] = start
        for k in range(1, target.size):
            out[k] = system.solve_component(fixed, fixed_index, float(target[k]), out[k - 1],
                                            max_shift=jump)
    steps = np.abs(np.diff(out))
    if steps.size and steps.max() > jump:
        k = int(np.argmax(steps))
        raise BranchJump(f"invariant jumps by {steps[k]:.3g} > {jump:.3g} between samples {k} and {k + 1}")
    return out


@dataclass
class GoursatOptions:
    fold_tol: float | None = None
    corner_tol: float = 1e-8
    ortho_tol: float = 1e-6
    # "cell": positions from a 2x2 solve per cell; "metric": march the edge lengths
    method: str = "cell"


@dataclass(eq=False)
class CharGrid:
    """Solution of the characteristic initial value problem on a ``(t1, t2)`` grid."""

    t1: np.ndarray
    t2: np.ndarray
    zeta: np.ndarray
    R1_of_t2: np.ndarray
    R2_of_t1: np.ndarray
    thetabar: np.ndarray
    status: np.ndarray
    signs: tuple[int, int] = (1, 1)
    fold_tol: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.zeta.shape

    @property
    def orientation(self) -> int:
        return self.signs[0] * self.signs[1]

    def Rbar(self, i: int, j: int) -> InvariantPair:
        return InvariantPair(float(self.R1_of_t2[j]), float(self.R2_of_t1[i]))

    @property
    def valid(self) -> np.ndarray:
        return self.status == VALID

    @property
    def fold_count(self) -> int:
        return int(np.count_nonzero(self.status == FOLDED))

    def folded_nodes(self) -> np.ndarray:
        return np.argwhere(self.status == FOLDED)

    def cell_jacobians(self) -> np.ndarray:
        """Oriented area of every cell (nan where a corner is not Valid)."""
        z = self.zeta
        a, b, c, d = z[:-1, :-1], z[1:, :-1], z[1:, 1:], z[:-1, 1:]
        area = 0.5 * (_cross(a, b) + _cross(b, c) + _cross(c, d) + _cross(d, a))
        ok = self.valid[:-1, :-1] & self.valid[1:, :-1] & self.valid[1:, 1:] & self.valid[:-1, 1:]
        return np.where(ok, self.orientation * area, np.nan)

    def line(self, family: int, index: int) -> Curve:
        """Grid line as a curve: family 1 runs along t1 at ``t2[index]``, family 2 along t2."""
        if family == 1:
            ok = self.valid[:, index]
            z = self.zeta[ok, index]
            th = self.thetabar[ok, index] + (0.0 if self.signs[0] == 1 else math.pi)
        else:
            ok = self.valid[index, :]
            z = self.zeta[index, ok]
            th = self.thetabar[index, ok] + self.signs[1] * math.pi / 2
        stop = np.flatnonzero(~ok)
        n = stop[0] if stop.size else len(z)
        z, th = z[:n], th[:n]
        if "edge1" in self.meta:
            edges = self.meta["edge1"][1:n, index] if family == 1 else self.meta["edge2"][index, 1:n]
        else:
            edges = np.abs(np.diff(z))
        s = np.concatenate([[0.0], np.cumsum(edges)])
        return Curve(s, z, th)

    def to_json(self) -> dict:
        return {
            "t1": self.t1.tolist(),
            "t2": self.t2.tolist(),
            "x": self.zeta.real.tolist(),
            "y": self.zeta.imag.tolist(),
            "R1_of_t2": self.R1_of_t2.tolist(),
            "R2_of_t1": self.R2_of_t1.tolist(),
            "status": self.status.astype(int).tolist(),
        }

    @classmethod
    def from_json(cls, d: dict, system: NormalSystem) -> "CharGrid":
        t1 = np.asarray(d["t1"], dtype=float)
        t2 = np.asarray(d["t2"], dtype=float)
        zeta = np.asarray(d["x"], dtype=float) + 1j * np.asarray(d["y"], dtype=float)
        R1 = np.asarray(d["R1_of_t2"], dtype=float)
        R2 = np.asarray(d["R2_of_t1"], dtype=float)
        th = np.asarray(system.theta(R1[None, :], R2[:, None]), dtype=float)
        z10 = zeta[1, 0] - zeta[0, 0]
        z20 = zeta[0, 1] - zeta[0, 0]
        s1 = 1 if np.real(z10 * np.exp(-1j * th[0, 0])) > 0 else -1
        s2 = 1 if np.real(z20 * np.exp(-1j * (th[0, 0] + math.pi / 2))) > 0 else -1
        return cls(t1, t2, zeta, R1, R2, th, np.asarray(d["status"], dtype=np.int8), (s1, s2))


def solve(system: NormalSystem, C1: Curve, C2: Curve, corner_rho: InvariantPair,
          opts: GoursatOptions | None = None) -> CharGrid:
    """Fill the characteristic grid spanned by ``C1`` (1-curve) and ``C2`` (2-curve)."""
    opts = opts or GoursatOptions()
    if abs(C1.z[0] - C2.z[0]) > 1e-9 * max(1.0, abs(C1.z[0])):
        raise NotAdmissible("initial curves must share their first point")
    s1 = tangent_sign(system, C1, corner_rho, 1, opts.corner_tol)
    s2 = tangent_sign(system, C2, corner_rho, 2, opts.ortho_tol)
    R2 = edge_invariant_profile(system, C1, corner_rho, 1, s1)
    R1 = edge_invariant_profile(system, C2, corner_rho, 2, s2)
    th = np.asarray(system.theta(R1[None, :], R2[:, None]), dtype=float)
    n1, n2 = th.shape

    z = np.full((n1, n2), np.nan + 0j)
    z[:, 0] = C1.z
    z[0, :] = C2.z
    z[0, 0] = C1.z[0]
    status = np.full((n1, n2), UNREACHED, dtype=np.int8)
    status[:, 0] = VALID
    status[0, :] = VALID

    if opts.method == "metric":
        return _march_metric(system, C1, C2, R1, R2, th, (s1, s2))
    # area floor per cell, relative to the cell's own parameter spacing unless given absolutely
    ds1, ds2 = np.diff(C1.s), np.diff(C2.s)
    fold_tol = 1e-12 if opts.fold_tol is None else float(opts.fold_tol)
    orient = s1 * s2

    for d in range(2, n1 + n2 - 1):
        i = np.arange(max(1, d - n2 + 1), min(d - 1, n1 - 1) + 1)
        if i.size == 0:
            continue
        j = d - i
        P, Q, D = z[i - 1, j], z[i, j - 1], z[i - 1, j - 1]
        ready = (status[i - 1, j] == VALID) & (status[i, j - 1] == VALID) & (status[i - 1, j - 1] == VALID)
        thX = th[i, j]
        u = s1 * np.exp(0.5j * (th[i - 1, j] + thX))
        v = s2 * 1j * np.exp(0.5j * (th[i, j - 1] + thX))
        det = _cross(u, v)
        if np.any(ready & (np.abs(det) < 1e-14)):
            raise DegenerateCell("characteristic directions are parallel in a cell")
        delta = Q - P
        with np.errstate(divide="ignore", invalid="ignore"):
            a = _cross(delta, v) / det
            b = _cross(delta, u) / det
        X = P + a * u
        area = 0.5 * (_cross(D, Q) + _cross(Q, X) + _cross(X, P) + _cross(P, D)) * orient
        floor = fold_tol * ds1[i - 1] * ds2[j - 1] if opts.fold_tol is None else fold_tol
        bad = (a <= 0) | (b <= 0) | (area <= floor) | ~np.isfinite(X)
        new = np.where(ready, np.where(bad, FOLDED, VALID), UNREACHED).astype(np.int8)
        z[i, j] = np.where(new == VALID, X, np.nan + 0j)
        status[i, j] = new

    return CharGrid(C1.s.copy(), C2.s.copy(), z, R1, R2, th, status, (s1, s2), fold_tol,
                    {"system": system.to_json()})


def _march_metric(system, C1, C2, R1, R2, th, signs) -> CharGrid:
    """March edge lengths instead of positions.

    With ``zeta_t1 = a*s1*exp(i*theta)`` and ``zeta_t2 = b*s2*i*exp(i*theta)``
    compatibility gives ``a_t2 = -s1*s2*b*theta_t1`` and
    ``b_t1 = s1*s2*a*theta_t2``.  Each cell solves the trapezoidal form of
    this pair for its two far edges, which stays accurate on very
    anisotropic grids where differencing positions loses all digits.
    Positions are the mean of the two predictions along the new edges.
    """
    s1, s2 = signs
    sig = s1 * s2
    n1, n2 = th.shape
    e1 = np.zeros((n1, n2))
    e2 = np.zeros((n1, n2))
    e1[1:, 0] = np.diff(C1.s)
    e2[0, 1:] = np.diff(C2.s)
    z = np.full((n1, n2), np.nan + 0j)
    z[:, 0] = C1.z
    z[0, :] = C2.z
    z[0, 0] = C1.z[0]
    status = np.full((n1, n2), UNREACHED, dtype=np.int8)
    status[:, 0] = VALID
    status[0, :] = VALID
    for d in range(2, n1 + n2 - 1):
        i = np.arange(max(1, d - n2 + 1), min(d - 1, n1 - 1) + 1)
        if i.size == 0:
            continue
        j = d - i
        ready = (status[i - 1, j] == VALID) & (status[i, j - 1] == VALID) & (status[i - 1, j - 1] == VALID)
        t00, t10, t01, t11 = th[i - 1, j - 1], th[i, j - 1], th[i - 1, j], th[i, j]
        p = 0.25 * sig * ((t10 - t00) + (t11 - t01))
        q = 0.25 * sig * ((t01 - t00) + (t11 - t10))
        A0, B0 = e1[i, j - 1], e2[i - 1, j]
        B1 = (B0 * (1.0 - p * q) + 2.0 * q * A0) / (1.0 + p * q)
        A1 = A0 - p * (B0 + B1)
        X1 = z[i - 1, j] + A1 * s1 * np.exp(0.5j * (t01 + t11))
        X2 = z[i, j - 1] + B1 * s2 * 1j * np.exp(0.5j * (t10 + t11))
        X = 0.5 * (X1 + X2)
        bad = (A1 <= 0) | (B1 <= 0) | ~np.isfinite(X)
        new = np.where(ready, np.where(bad, FOLDED, VALID), UNREACHED).astype(np.int8)
        good = new == VALID
        z[i, j] = np.where(good, X, np.nan + 0j)
        e1[i, j] = np.where(good, A1, np.nan)
        e2[i, j] = np.where(good, B1, np.nan)
        status[i, j] = new
    return CharGrid(C1.s.copy(), C2.s.copy(), z, R1, R2, th, status, (s1, s2), 0.0,
                    {"system": system.to_json(), "edge1": e1, "edge2": e2})


def grid_min_jacobian(g: CharGrid) -> float:
    """Smallest oriented cell area over cells whose four corners are Valid."""
    jac = g.cell_jacobians()
    if jac.size == 0:
        raise ValueError("grid has no interior cell")
    if np.all(np.isnan(jac)):
        return math.nan
    return float(np.nanmin(jac))


def parallel_extension(C: Curve, r: float) -> Curve:
    """The curve ``z + r*i*z'``, reparametrised by its own arc length.

    Positive ``r`` offsets to the left of the direction of travel.
    """
    ds = np.diff(C.s)
    kappa = np.diff(C.phi) / ds
    stretch = 1.0 - r * kappa
    if np.any(stretch <= 0):
        k = int(np.argmin(stretch))
        raise Fold(f"parallel curve degenerates near s={C.s[k]:.6g} (1 - r*kappa = {stretch[k]:.3g})")
    s_new = np.concatenate([[0.0], np.cumsum(stretch * ds)])
    z0 = C.z[0] + r * 1j * np.exp(1j * C.phi[0])
    return Curve.from_angle(s_new, C.phi, z0)
