"""Arc-length sampled planar curves with a continuous tangent-angle track.

Points are stored as complex numbers ``z = x + iy``.  The tangent angle
``phi`` is a continuous lift (no 2*pi jumps), so total turning along an arc
is simply ``phi[-1] - phi[0]``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import BadWindow, BoundaryPoint

HALF_PI = 0.5 * math.pi


def _segment_steps(ds: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Exact chord vectors of arcs whose angle varies linearly over each step."""
    dphi = np.diff(phi)
    mid = 0.5 * (phi[1:] + phi[:-1])
    return ds * np.exp(1j * mid) * np.sinc(dphi / (2 * np.pi))


@dataclass(frozen=True, eq=False)
class Curve:
    s: np.ndarray
    z: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 1 or s.size < 2 or np.any(np.diff(s) <= 0):
            raise ValueError("arc-length samples must be strictly increasing with at least two entries")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "z", np.asarray(self.z, dtype=complex))
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        if self.z.shape != s.shape or self.phi.shape != s.shape:
            raise ValueError("s, z and phi must have matching lengths")

    # --------------------------------------------------------- constructors
    @classmethod
    def from_angle(cls, s, phi, z0: complex = 0j) -> "Curve":
        """Integrate ``z' = exp(i*phi)``, exact for piecewise-linear phi."""
        s = np.asarray(s, dtype=float)
        phi = np.asarray(phi, dtype=float)
        steps = _segment_steps(np.diff(s), phi)
        z = complex(z0) + np.concatenate([[0j], np.cumsum(steps)])
        return cls(s - s[0], z, phi)

    @classmethod
    def from_points(cls, z) -> "Curve":
        z = np.asarray(z, dtype=complex)
        seg = np.abs(np.diff(z))
        keep = np.concatenate([[True], seg > 0])
        z = z[keep]
        s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(z)))])
        phi = np.unwrap(np.angle(np.gradient(z, s)))
        return cls(s, z, phi)

    @classmethod
    def segment(cls, z0: complex, heading: float, length: float, ds: float | None = None) -> "Curve":
        ds = default_ds(length) if ds is None else ds
        n = max(2, int(math.ceil(length / ds)) + 1)
        s = np.linspace(0.0, length, n)
        return cls.from_angle(s, np.full(n, float(heading)), z0)

    @classmethod
    def arc(cls, z0: complex, heading: float, curvature: float, length: float,
            ds: float | None = None) -> "Curve":
        ds = default_ds(length) if ds is None else ds
        n = max(2, int(math.ceil(length / ds)) + 1)
        s = np.linspace(0.0, length, n)
        return cls.from_angle(s, heading + curvature * s, z0)

    # ------------------------------------------------------------ accessors
    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    @property
    def x(self) -> np.ndarray:
        return self.z.real

    @property
    def y(self) -> np.ndarray:
        return self.z.imag

    @property
    def start(self) -> complex:
        return complex(self.z[0])

    @property
    def end(self) -> complex:
        return complex(self.z[-1])

    @property
    def turning(self) -> float:
        return float(self.phi[-1] - self.phi[0])

    def __len__(self) -> int:
        return self.s.size

    def angle_at(self, s) -> np.ndarray | float:
        return np.interp(s, self.s, self.phi)

    def point_at(self, s):
        """Position at arc length ``s`` (exact within a sample interval)."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        i = np.clip(np.searchsorted(self.s, s_arr, side="right") - 1, 0, self.s.size - 2)
        ds = s_arr - self.s[i]
        h = self.s[i + 1] - self.s[i]
        k = (self.phi[i + 1] - self.phi[i]) / h
        a = self.phi[i] + 0.5 * k * ds
        out = self.z[i] + ds * np.exp(1j * a) * np.sinc(k * ds / (2 * np.pi))
        return complex(out[0]) if np.ndim(s) == 0 else out

    def curvature(self) -> np.ndarray:
        return np.gradient(self.phi, self.s)

    def speed_ratio(self) -> np.ndarray:
        return np.abs(np.diff(self.z)) / np.diff(self.s)

    # -------------------------------------------------------- transformations
    def reversed(self) -> "Curve":
        L = self.s[-1]
        return Curve(L - self.s[::-1], self.z[::-1].copy(), self.phi[::-1] + math.pi)

    def similar(self, scale: float = 1.0, shift: complex = 0j, rotation: float = 0.0) -> "Curve":
        """Image under ``z -> scale * exp(i*rotation) * z + shift`` (scale > 0)."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        w = scale * np.exp(1j * rotation)
        return Curve(self.s * scale, w * self.z + shift, self.phi + rotation)

    def mirrored(self) -> "Curve":
        """Reflection across the imaginary axis, ``z -> -conj(z)``; keeps direction."""
        return Curve(self.s.copy(), -np.conj(self.z), math.pi - self.phi)

    def relift(self, k: int) -> "Curve":
        return Curve(self.s, self.z, self.phi + 2 * math.pi * k)

    def sub(self, s0: float, s1: float) -> "Curve":
        """Sub-arc between arc lengths s0 < s1, re-based to start at 0."""
        if not (self.s[0] - 1e-12 <= s0 < s1 <= self.s[-1] + 1e-12):
            raise BadWindow("sub-arc window outside the curve")
        inner = (self.s > s0) & (self.s < s1)
        s = np.concatenate([[s0], self.s[inner], [s1]])
        z = np.concatenate([[self.point_at(s0)], self.z[inner], [self.point_at(s1)]])
        phi = np.interp(s, self.s, self.phi)
        return Curve(s - s0, z, phi)

    def resample(self, ds: float | None = None) -> "Curve":
        ds = default_ds(self.length) if ds is None else ds
        n = max(2, int(math.ceil(self.length / ds)) + 1)
        s = np.linspace(self.s[0], self.s[-1], n)
        return Curve.from_angle(s, np.interp(s, self.s, self.phi), self.z[0])

    def extend(self, other: "Curve") -> "Curve":
        """Append ``other`` (assumed to start where this curve ends)."""
        k = round((self.phi[-1] - other.phi[0]) / (2 * math.pi))
        s = np.concatenate([self.s, self.s[-1] + other.s[1:]])
        z = np.concatenate([self.z, other.z[1:] - other.z[0] + self.z[-1]])
        phi = np.concatenate([self.phi, other.phi[1:] + 2 * math.pi * k])
        return Curve(s, z, phi)

    # ---------------------------------------------------------- serialisation
    def to_json(self) -> dict:
        return {"s": self.s.tolist(), "x": self.x.tolist(), "y": self.y.tolist(), "phi": self.phi.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "Curve":
        z = np.asarray(d["x"], dtype=float) + 1j * np.asarray(d["y"], dtype=float)
        return cls(np.asarray(d["s"], dtype=float), z, np.asarray(d["phi"], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "x", "y", "phi"])
        for row in zip(self.s, self.x, self.y, self.phi):
            w.writerow([f"{v:.12g}" for v in row])
        return buf.getvalue()


def default_ds(length: float) -> float:
    return min(0.01, length / 2000.0)


def check_curve(C: Curve, tol: float = 1e-6) -> dict:
    """Unit-speed, lift-continuity and re-integration checks."""
    ratio = C.speed_ratio()
    rebuilt = Curve.from_angle(C.s, C.phi, C.z[0])
    return {
        "unit_speed": bool(np.all((ratio >= 0.99) & (ratio <= 1.0 + 1e-9))),
        "continuous_lift": bool(np.all(np.abs(np.diff(C.phi)) < HALF_PI)),
        "reintegration_error": float(np.max(np.abs(rebuilt.z - C.z))),
        "reintegrates": bool(np.max(np.abs(rebuilt.z - C.z)) <= tol * max(C.length, 1.0)),
    }


# ---------------------------------------------------------------- curvature
def curvature_at(C: Curve, s: float, strict: bool = True) -> float:
    """Signed curvature (positive = turning left) by centred differences of phi.

    Within one sample of an endpoint a one-sided difference is used; with
    ``strict=True`` that case raises :class:`BoundaryPoint` instead.
    """
    i = int(np.searchsorted(C.s, s))
    n = C.s.size
    if i <= 1 or i >= n - 1:
        if strict:
            raise BoundaryPoint(f"s={s} is within one sample of an endpoint")
        j = 0 if i <= 1 else n - 2
        return float((C.phi[j + 1] - C.phi[j]) / (C.s[j + 1] - C.s[j]))
    h = min(s - C.s[i - 1], C.s[i] - s, C.s[i] - C.s[i - 1])
    h = max(h, 0.5 * (C.s[i] - C.s[i - 1]))
    lo, hi = max(C.s[0], s - h), min(C.s[-1], s + h)
    return float((C.angle_at(hi) - C.angle_at(lo)) / (hi - lo))


# ------------------------------------------------------------- mollifier & F
@lru_cache(maxsize=1)
def _bump_norm() -> float:
    val, _ = quad(lambda u: math.exp(-1.0 / (1.0 - u * u)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    return 1.0 / val


def mollifier(u):
    """Standard bump supported in (-1, 1), normalised to unit integral."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = _bump_norm() * np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def adjoin_F(Z: Curve, l: float, delta: float, kappa0: float, tau: float,
             ds: float | None = None) -> Curve:
    """Smoothly replace the tail of ``Z`` after ``l`` by a circle/line.

    The output agrees with ``Z`` on ``[0, l]`` and has tangent angle
    ``(s - l - delta) * kappa0 + tau`` for ``s >= l + delta``; it runs to
    ``s = l + 2*delta``.  The angle track is the piecewise function (``Z``'s
    angle, linear ramp, target line) convolved with the mollifier of
    half-width ``delta/10``; the smoothed values are blended in with a
    C-infinity cutoff supported in ``(l, l + delta)`` so that ``Z`` is kept
    verbatim on ``[0, l]``.
    """
    if delta <= 0:
        raise BadWindow("delta must be positive")
    if l < 0 or l + delta > Z.length * (1 + 1e-12) + 1e-12:
        raise BadWindow("F needs Z defined on [0, l + delta]")
    # target line, lifted to the branch of Z's angle track
    a_ref = float(Z.angle_at(l + delta / 3))
    t_ref = (delta / 3 - delta) * kappa0 + tau
    tau = tau + 2 * math.pi * round((a_ref - t_ref) / (2 * math.pi))

    def target(s):
        return (s - l - delta) * kappa0 + tau

    s1, s2 = l + delta / 3, l + 2 * delta / 3
    a1, b2 = float(Z.angle_at(s1)), target(s2)

    def beta(s):
        s = np.asarray(s, dtype=float)
        s_ref = np.where(s < 0, -s, s)  # reflection padding at the origin
        out = np.where(s_ref <= s1, np.interp(np.minimum(s_ref, Z.s[-1]), Z.s, Z.phi), 0.0)
        ramp = a1 + (b2 - a1) * (s_ref - s1) / (s2 - s1)
        out = np.where((s_ref > s1) & (s_ref < s2), ramp, out)
        return np.where(s_ref >= s2, target(s_ref), out)

    w = delta / 10.0
    h = delta / 400.0
    grid = np.arange(l, l + delta + h / 2, h)
    grid[-1] = l + delta
    u = np.arange(-w, w + h / 2, h)
    ker = mollifier(u / w) / w
    wts = np.full(u.size, h)
    wts[0] = wts[-1] = h / 2
    wts = wts / np.sum(ker * wts)
    conv = np.array([np.sum(beta(si - u) * ker * wts) for si in grid])
    base = beta(grid)
    rise = 7 * delta / 30
    chi = np.minimum(_smooth_step((grid - l) / rise), _smooth_step((l + delta - grid) / rise))
    ang_mid = base + chi * (conv - base)

    out_ds = ds if ds is not None else min(h * 4, float(np.min(np.diff(Z.s))) if Z.s.size > 1 else h)
    out_ds = min(out_ds, delta / 50)
    head = Z.sub(0.0, l) if l > 0 else None
    n_tail = int(math.ceil(delta / out_ds))
    s_tail = np.linspace(l + delta, l + 2 * delta, n_tail + 1)
    s_mid = grid
    s_new = np.concatenate([s_mid, s_tail[1:]])
    ang_new = np.concatenate([ang_mid, target(s_tail[1:])])
    start = Z.point_at(l)
    tail = Curve.from_angle(s_new - l, ang_new, start)
    if head is None:
        return tail
    return Curve(np.concatenate([head.s, l + tail.s[1:]]),
                 np.concatenate([head.z, tail.z[1:]]),
                 np.concatenate([head.phi, tail.phi[1:]]))


# ---------------------------------------------------------------- family S(eps)
def dist_to_half_disk(z) -> np.ndarray:
    """Distance from points to the closed upper half of the unit disk."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    upper = np.maximum(np.abs(z) - 1.0, 0.0)
    below = np.where(np.abs(x) <= 1.0, -y, np.hypot(np.abs(x) - 1.0, y))
    return np.where(y >= 0, upper, below)


def _angle_gap(a: float, b: float) -> float:
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def straight_end_lengths(C: Curve, kappa_tol: float = 1e-8) -> tuple[float, float]:
    """Lengths of the initial and terminal straight runs of ``C``."""
    kap = np.abs(np.diff(C.phi)) / np.diff(C.s)
    bent = np.flatnonzero(kap >= kappa_tol)
    if bent.size == 0:
        return C.length, C.length
    return float(C.s[bent[0]] - C.s[0]), float(C.s[-1] - C.s[bent[-1] + 1])


def in_S_eps(C: Curve, eps: float, tol: float = 1e-6) -> dict:
    """Membership report for the family of almost-semicircles S(eps).

    Returns per-condition booleans (``i`` .. ``v``) and the worst violation
    magnitude of each; never raises.
    """
    viol = {}
    viol["i"] = max(abs(C.z[0].imag + eps), abs(C.z[-1].imag + eps))
    viol["ii"] = max(_angle_gap(C.phi[0], HALF_PI + eps), _angle_gap(C.phi[-1], -(HALF_PI + eps)))
    viol["iii"] = max(0.0, float(np.max(np.diff(C.phi))))
    viol["iv"] = max(0.0, float(np.max(dist_to_half_disk(C.z))) - 2 * eps)
    run0, run1 = straight_end_lengths(C)
    viol["v"] = 0.0 if (run0 > 0 and run1 > 0) else 1.0
    limits = {"i": tol, "ii": tol, "iii": 1e-12, "iv": 0.0, "v": 0.0}
    report = {k: bool(v <= limits[k]) for k, v in viol.items()}
    report["violations"] = viol
    report["straight_ends"] = (run0, run1)
    report["all"] = all(report[k] for k in ("i", "ii", "iii", "iv", "v"))
    return report


def almost_semicircle(eps: float, radius: float = 1.0, straight: float | None = None,
                      ds: float | None = None) -> Curve:
    """A member of S(eps): straight start, circular arc, straight end.

    The arc turns clockwise through ``pi + 2*eps``; the straight ends are
    sized so both endpoints sit at height ``-eps`` and the curve is centred
    on the imaginary axis.
    """
    straight = eps if straight is None else straight
    ds = min(0.005, eps / 10) if ds is None else ds
    h0 = HALF_PI + eps
    turn = math.pi + 2 * eps
    L = 2 * straight + radius * turn
    n = max(3, int(math.ceil(L / ds)) + 1)
    s = np.linspace(0.0, L, n)
    # insert the two corners exactly so the straight parts stay straight
    s = np.union1d(s, [straight, straight + radius * turn])
    phi = np.where(s <= straight, h0, h0 - (s - straight) / radius)
    phi = np.where(s >= straight + radius * turn, h0 - turn, phi)
    C = Curve.from_angle(s, phi, 0j)
    # centre horizontally and put the endpoints at height -eps
    shift = -0.5 * (C.z[0] + C.z[-1]).real - eps * 1j - C.z[0].imag * 1j
    return Curve(C.s, C.z + shift, C.phi)
