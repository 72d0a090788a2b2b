"""Closed-form reference solutions.

The spiral solution of the constant-product system has inclination
``theta = psi + alpha`` in polar coordinates ``z = r*exp(i*psi)``.  With
``a = m1 - m2``, ``m1*m2 = 1`` and ``tan(alpha) = m2``, the companion
function is ``phi = psi + a*log(r)``; then ``R1 = m1*theta - m2*phi`` is
constant along 1-characteristics (log spirals at angle alpha to the radius)
and ``R2 = m2*theta - m1*phi`` along the orthogonal 2-characteristics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OriginSingular
from .systems import InvariantPair, NormalSystem


def gm_stretch_factors(psi0: float, log_rho: float) -> tuple[float, float]:
    """Stretch factors ``(m1, m2)`` for twist ``psi0`` over an annulus of modulus ``log_rho``."""
    if log_rho <= 0:
        raise ValueError("log_rho must be positive")
    a = psi0 / log_rho
    root = math.sqrt(a * a + 4.0)
    if a >= 0:
        m1 = 0.5 * (root + a)
        m2 = 1.0 / m1
    else:
        m2 = 0.5 * (root - a)
        m1 = 1.0 / m2
    return m1, m2


def stretch_factors_from_a(a: float) -> tuple[float, float]:
    return gm_stretch_factors(a, 1.0)


def _lifted_arg(z, psi_ref: float):
    """arg z lifted into ``(psi_ref - pi, psi_ref + pi]``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise OriginSingular("the spiral field is singular at the origin")
    w = np.angle(z * np.exp(-1j * psi_ref))
    w = np.where(w == -math.pi, math.pi, w)
    return psi_ref + w


def spiral_theta(z, alpha: float, psi_ref: float = 0.0):
    """Inclination ``arg z + alpha``; ``arg`` is lifted around ``psi_ref``."""
    out = _lifted_arg(z, psi_ref) + alpha
    return float(out) if np.ndim(out) == 0 else out


def lift_along_path(zs, psi_start: float | None = None) -> np.ndarray:
    """Continuous lift of ``arg`` along a sampled path avoiding the origin."""
    zs = np.asarray(zs, dtype=complex)
    if np.any(zs == 0):
        raise OriginSingular("path passes through the origin")
    psi = np.unwrap(np.angle(zs))
    if psi_start is not None:
        psi = psi + 2 * math.pi * round((psi_start - psi[0]) / (2 * math.pi))
    return psi


def spiral_invariants(z, m1: float, m2: float, psi_ref: float = 0.0) -> InvariantPair:
    """``(m1*theta - m2*phi, m2*theta - m1*phi)`` for the spiral solution at ``z``."""
    R1, R2 = SpiralOracle(m1, m2, psi_ref=psi_ref).invariants_array(z)
    return InvariantPair(float(R1), float(R2))


@dataclass(frozen=True)
class SpiralOracle:
    """Spiral solution of CPS(m1, m2) on the punctured plane (needs ``m1*m2 = 1``)."""

    m1: float
    m2: float
    psi_ref: float = 0.0

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("stretch factors must be positive")
        if abs(self.m1 * self.m2 - 1.0) > 1e-9:
            raise ValueError("spiral solution requires m1*m2 = 1")

    @classmethod
    def from_alpha(cls, alpha: float, psi_ref: float = 0.0) -> "SpiralOracle":
        if not 0 < alpha < math.pi / 2:
            raise ValueError("alpha must lie in (0, pi/2)")
        m2 = math.tan(alpha)
        return cls(1.0 / m2, m2, psi_ref)

    @classmethod
    def from_annulus(cls, psi0: float, log_rho: float, psi_ref: float = 0.0) -> "SpiralOracle":
        m1, m2 = gm_stretch_factors(psi0, log_rho)
        return cls(m1, m2, psi_ref)

    @property
    def a(self) -> float:
        return self.m1 - self.m2

    @property
    def alpha(self) -> float:
        return math.atan(self.m2)

    @property
    def system(self) -> NormalSystem:
        return NormalSystem.cps(self.m1, self.m2)

    def with_branch(self, psi_ref: float) -> "SpiralOracle":
        return SpiralOracle(self.m1, self.m2, psi_ref)

    def theta(self, z):
        return spiral_theta(z, self.alpha, self.psi_ref)

    def phi(self, z):
        z = np.asarray(z, dtype=complex)
        out = _lifted_arg(z, self.psi_ref) + self.a * np.log(np.abs(z))
        return float(out) if out.ndim == 0 else out

    def invariants_array(self, z):
        th = np.asarray(self.theta(z))
        ph = np.asarray(self.phi(z))
        return self.m1 * th - self.m2 * ph, self.m2 * th - self.m1 * ph

    def invariants(self, z) -> InvariantPair:
        R1, R2 = self.invariants_array(z)
        return InvariantPair(float(R1), float(R2))

    def evaluate(self, z):
        """``(R1, R2, theta)`` at one point or an array of points."""
        R1, R2 = self.invariants_array(z)
        return R1, R2, self.theta(z)

    def position(self, R1, R2):
        """Point where the solution takes the invariants ``(R1, R2)`` (inverse of :meth:`invariants`)."""
        R1, R2 = np.asarray(R1, dtype=float), np.asarray(R2, dtype=float)
        d = self.m1 * self.m1 - self.m2 * self.m2
        th = (self.m1 * R1 - self.m2 * R2) / d
        ph = (self.m2 * R1 - self.m1 * R2) / d
        psi = th - self.alpha
        z = np.exp((ph - psi) / self.a) * np.exp(1j * psi)
        return complex(z) if z.ndim == 0 else z

    def first_derivatives(self, z) -> tuple[float, float]:
        """Exact ``(D1 theta, D2 theta)`` = ``(sin(alpha)/r, cos(alpha)/r)``."""
        r = abs(complex(z))
        if r == 0:
            raise OriginSingular("the spiral field is singular at the origin")
        return math.sin(self.alpha) / r, math.cos(self.alpha) / r

    def characteristic(self, z0: complex, index: int, length: float, n: int = 2001,
                       direction: int = 1):
        """Exact arc of the ``index``-characteristic through ``z0`` as a Curve.

        1-characteristics are log spirals at angle alpha to the radius,
        2-characteristics at angle ``alpha + pi/2``.  ``direction=-1`` runs
        against the characteristic orientation (tangent ``-d_index``).
        """
        from .curves import Curve

        z0 = complex(z0)
        if z0 == 0:
            raise OriginSingular("no characteristic through the origin")
        ang = self.alpha if index == 1 else self.alpha + math.pi / 2
        c, sn = math.cos(ang), math.sin(ang)
        r0 = abs(z0)
        psi0 = float(_lifted_arg(z0, self.psi_ref))
        s = np.linspace(0.0, length, n)
        if abs(c) < 1e-15:
            raise ValueError("degenerate characteristic (circle) not supported")
        # along the curve dr/ds = direction*c, dpsi/ds = direction*sn/r
        r = r0 + direction * c * s
        if np.any(r <= 0):
            raise OriginSingular("characteristic reaches the origin within the requested length")
        psi = psi0 + (sn / c) * np.log(r / r0)
        z = r * np.exp(1j * psi)
        base = self.theta(z0) + (0.0 if index == 1 else math.pi / 2) + (0.0 if direction == 1 else math.pi)
        heading = base + (psi - psi0)
        return Curve(s, z, heading)


@dataclass(frozen=True)
class ConstantOracle:
    """Constant solution: ``theta`` and ``R`` the same everywhere."""

    R1: float
    R2: float
    theta0: float

    @classmethod
    def for_system(cls, system: NormalSystem, R1: float, R2: float) -> "ConstantOracle":
        return cls(R1, R2, float(system.theta(R1, R2)))

    def theta(self, z):
        z = np.asarray(z)
        return self.theta0 if z.ndim == 0 else np.full(z.shape, self.theta0)

    def invariants(self, z) -> InvariantPair:
        return InvariantPair(self.R1, self.R2)

    def evaluate(self, z):
        z = np.asarray(z)
        if z.ndim == 0:
            return self.R1, self.R2, self.theta0
        return np.full(z.shape, self.R1), np.full(z.shape, self.R2), np.full(z.shape, self.theta0)

    def first_derivatives(self, z) -> tuple[float, float]:
        return 0.0, 0.0


# turning of each characteristic leg, fixed by the total-curvature bookkeeping of the glued
# construction; family 1 legs move R2 and family 2 legs move R1
CPS_LEGS = {
    "f1": lambda eps: [(1, -(1.25 * math.pi + eps))],
    "f2": lambda eps: [(1, -(math.pi + 2 * eps)), (2, 1.25 * math.pi + eps)],
    "g1": lambda eps: [(2, -(0.75 * math.pi + eps)), (1, 1.5 * math.pi + 2 * eps)],
    "g2": lambda eps: [(1, 0.75 * math.pi + eps), (2, -0.5 * math.pi)],
}


def cps_leg_translation(m1: float, m2: float, legs) -> np.ndarray:
    """Exact displacement of ``(R1, R2)`` along characteristic legs for theta = (m1 R1 - m2 R2)/d."""
    d = m1 * m1 - m2 * m2
    out = np.zeros(2)
    for family, turn in legs:
        if family == 1:
            out[1] += -d * turn / m2
        else:
            out[0] += d * turn / m1
    return out


def cps_transfer(m1: float, m2: float, eps: float, name: str, rho: InvariantPair) -> InvariantPair:
    """Closed-form transfer map ``f1``, ``f2``, ``g1`` or ``g2``: a translation in R."""
    v = cps_leg_translation(m1, m2, CPS_LEGS[name](eps))
    return InvariantPair(rho.R1 + float(v[0]), rho.R2 + float(v[1]))


def cps_corner_fixed_point(m1: float, m2: float, eps: float, rho0: InvariantPair, i: int) -> InvariantPair:
    """Child corner value solving ``f_j(g_i(rho)) = rho0`` with ``j = 3 - i``."""
    j = 3 - i
    v = cps_leg_translation(m1, m2, CPS_LEGS[f"g{i}"](eps) + CPS_LEGS[f"f{j}"](eps))
    return InvariantPair(rho0.R1 - float(v[0]), rho0.R2 - float(v[1]))
