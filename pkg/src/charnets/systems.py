"""Normal 2x2 systems in Riemann-invariant form.

A normal system is described entirely by its inclination function
``theta(R1, R2)``; the second characteristic family is inclined at
``theta + pi/2`` and is never stored.  Three kinds are supported:

* ``cps``: constant principal strain mappings with stretch factors m1 != m2,
  ``theta = (m1*R1 - m2*R2) / (m1**2 - m2**2)``;
* ``linear``: ``theta = c1*R1 + c2*R2 + c0``;
* ``tabulated``: bilinear interpolation of a table over an (R1, R2) rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from .errors import BoundsViolation, ConfigError, OutOfTable

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class InvariantPair:
    R1: float
    R2: float

    def __post_init__(self):
        if not (math.isfinite(self.R1) and math.isfinite(self.R2)):
            raise ValueError("Riemann invariants must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.R1, self.R2], dtype=float)

    @classmethod
    def from_array(cls, a) -> "InvariantPair":
        return cls(float(a[0]), float(a[1]))


@dataclass(frozen=True, eq=False)
class NormalSystem:
    """Inclination function of a normal system plus its derivative bounds.

    Use the :meth:`cps`, :meth:`linear` and :meth:`tabulated` constructors
    rather than instantiating directly.
    """

    kind: str
    params: dict
    A: float
    B: float
    _interp: Any = field(default=None, repr=False, compare=False)

    # ------------------------------------------------------------------ build
    @classmethod
    def cps(cls, m1: float, m2: float) -> "NormalSystem":
        m1, m2 = float(m1), float(m2)
        if not (m1 > 0 and m2 > 0) or m1 == m2:
            raise ValueError("cps system needs positive stretch factors m1 != m2")
        d = m1 * m1 - m2 * m2
        g1, g2 = abs(m1 / d), abs(m2 / d)
        return cls("cps", {"m1": m1, "m2": m2}, min(g1, g2), max(g1, g2))

    @classmethod
    def linear(cls, c1: float, c2: float, c0: float = 0.0) -> "NormalSystem":
        c1, c2, c0 = float(c1), float(c2), float(c0)
        if c1 == 0 or c2 == 0:
            raise ValueError("linear system must be genuinely nonlinear (c1, c2 != 0)")
        a, b = sorted((abs(c1), abs(c2)))
        return cls("linear", {"c1": c1, "c2": c2, "c0": c0}, a, b)

    @classmethod
    def tabulated(cls, r1: tuple, r2: tuple, values) -> "NormalSystem":
        """Build from a table of theta values.

        ``r1`` and ``r2`` are ``(min, max, n)`` triples; ``values`` holds
        ``n1*n2`` numbers in row-major order, row index running over R1.
        """
        lo1, hi1, n1 = float(r1[0]), float(r1[1]), int(r1[2])
        lo2, hi2, n2 = float(r2[0]), float(r2[1]), int(r2[2])
        if n1 < 2 or n2 < 2 or not (hi1 > lo1 and hi2 > lo2):
            raise ValueError("table needs at least 2x2 nodes on a proper rectangle")
        v = np.asarray(values, dtype=float).reshape(n1, n2)
        g1 = np.linspace(lo1, hi1, n1)
        g2 = np.linspace(lo2, hi2, n2)
        h1, h2 = g1[1] - g1[0], g2[1] - g2[0]
        # bilinear gradient at cell centres
        d1 = (v[1:, 1:] + v[1:, :-1] - v[:-1, 1:] - v[:-1, :-1]) / (2 * h1)
        d2 = (v[1:, 1:] + v[:-1, 1:] - v[1:, :-1] - v[:-1, :-1]) / (2 * h2)
        if np.any(d1 == 0) or np.any(d2 == 0):
            raise BoundsViolation("tabulated theta has a vanishing derivative")
        if not (np.all(np.sign(d1) == np.sign(d1.flat[0])) and np.all(np.sign(d2) == np.sign(d2.flat[0]))):
            raise BoundsViolation("tabulated theta is not monotone in each invariant")
        mags = np.concatenate([np.abs(d1).ravel(), np.abs(d2).ravel()])
        A = 0.99 * float(mags.min())
        B = 1.01 * float(mags.max())
        interp = RegularGridInterpolator((g1, g2), v, method="linear", bounds_error=False, fill_value=None)
        params = {"r1": (lo1, hi1, n1), "r2": (lo2, hi2, n2), "theta": v, "h": (h1, h2)}
        return cls("tabulated", params, A, B, interp)

    @classmethod
    def from_json(cls, spec: dict) -> "NormalSystem":
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError("system definition needs a 'kind'")
        allowed = {
            "cps": {"kind", "m1", "m2"},
            "linear": {"kind", "c1", "c2", "c0"},
            "tabulated": {"kind", "r1", "r2", "theta"},
        }
        kind = spec["kind"]
        if kind not in allowed:
            raise ConfigError(f"unknown system kind {kind!r}")
        extra = set(spec) - allowed[kind]
        if extra:
            raise ConfigError(f"unknown keys in system definition: {sorted(extra)}")
        try:
            if kind == "cps":
                return cls.cps(spec["m1"], spec["m2"])
            if kind == "linear":
                return cls.linear(spec["c1"], spec["c2"], spec.get("c0", 0.0))
            return cls.tabulated(spec["r1"], spec["r2"], spec["theta"])
        except KeyError as exc:
            raise ConfigError(f"system definition missing key {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self) -> dict:
        p = self.params
        if self.kind == "cps":
            return {"kind": "cps", "m1": p["m1"], "m2": p["m2"]}
        if self.kind == "linear":
            return {"kind": "linear", "c1": p["c1"], "c2": p["c2"], "c0": p["c0"]}
        return {
            "kind": "tabulated",
            "r1": list(p["r1"]),
            "r2": list(p["r2"]),
            "theta": p["theta"].ravel().tolist(),
        }

    # --------------------------------------------------------------- queries
    @property
    def is_linear(self) -> bool:
        return self.kind in ("cps", "linear")

    def coefficients(self) -> tuple[float, float, float]:
        """(c1, c2, c0) with theta = c1*R1 + c2*R2 + c0; linear kinds only."""
        p = self.params
        if self.kind == "cps":
            d = p["m1"] ** 2 - p["m2"] ** 2
            return p["m1"] / d, -p["m2"] / d, 0.0
        if self.kind == "linear":
            return p["c1"], p["c2"], p["c0"]
        raise TypeError("tabulated systems have no global coefficients")

    def theta(self, R1, R2):
        """Inclination of the 1-characteristics; vectorised over R1, R2."""
        if self.is_linear:
            c1, c2, c0 = self.coefficients()
            if np.ndim(R1) == 0 and np.ndim(R2) == 0:
                return c1 * float(R1) + c2 * float(R2) + c0
            return c1 * np.asarray(R1, dtype=float) + c2 * np.asarray(R2, dtype=float) + c0
        R1a, R2a = np.broadcast_arrays(np.asarray(R1, dtype=float), np.asarray(R2, dtype=float))
        self._check_table(R1a, R2a)
        out = self._interp(np.stack([R1a.ravel(), R2a.ravel()], axis=-1)).reshape(R1a.shape)
        return float(out) if out.ndim == 0 else out

    def theta_at(self, R: InvariantPair) -> float:
        return float(self.theta(R.R1, R.R2))

    def _check_table(self, R1, R2):
        lo1, hi1, _ = self.params["r1"]
        lo2, hi2, _ = self.params["r2"]
        tol = 1e-12 * max(1.0, hi1 - lo1, hi2 - lo2)
        if np.any(R1 < lo1 - tol) or np.any(R1 > hi1 + tol) or np.any(R2 < lo2 - tol) or np.any(R2 > hi2 + tol):
            raise OutOfTable("invariant pair outside the tabulated rectangle")

    def gradient(self, R1: float, R2: float) -> tuple[float, float]:
        if self.is_linear:
            c1, c2, _ = self.coefficients()
            return c1, c2
        h1, h2 = self.params["h"]
        lo1, hi1, _ = self.params["r1"]
        lo2, hi2, _ = self.params["r2"]
        s1, s2 = h1 / 2, h2 / 2
        a1, b1 = max(lo1, R1 - s1), min(hi1, R1 + s1)
        a2, b2 = max(lo2, R2 - s2), min(hi2, R2 + s2)
        g1 = (self.theta(b1, R2) - self.theta(a1, R2)) / (b1 - a1)
        g2 = (self.theta(R1, b2) - self.theta(R1, a2)) / (b2 - a2)
        for g in (g1, g2):
            if not (self.A < abs(g) < self.B):
                raise BoundsViolation(f"|dtheta/dR| = {abs(g):.6g} outside ({self.A:.6g}, {self.B:.6g})")
        return float(g1), float(g2)

    def invariant_window(self, index: int) -> tuple[float, float]:
        """Admissible range of R_index (infinite for the linear kinds)."""
        if self.is_linear:
            return -math.inf, math.inf
        lo, hi, _ = self.params["r1" if index == 1 else "r2"]
        return lo, hi

    def solve_component(self, fixed: float, fixed_index: int, target: float, guess: float,
                        max_shift: float | None = None) -> float:
        """Solve ``theta = target`` for the free invariant, the other held at ``fixed``.

        Monotonicity of theta in each argument makes the root unique; the
        search is bracketed around ``guess`` using the lower derivative bound.
        """
        free = 2 if fixed_index == 1 else 1

        def f(x):
            return (self.theta(fixed, x) if free == 2 else self.theta(x, fixed)) - target

        if self.is_linear:
            c1, c2, c0 = self.coefficients()
            return (target - c0 - c1 * fixed) / c2 if free == 2 else (target - c0 - c2 * fixed) / c1
        lo, hi = self.invariant_window(free)
        f0 = f(guess)
        span = abs(f0) / self.A * 1.05 + 1e-12
        if max_shift is not None:
            span = min(span, max_shift)
        a, b = max(lo, guess - span), min(hi, guess + span)
        fa, fb = f(a), f(b)
        if fa * fb > 0:
            raise OutOfTable("no root of theta = target inside the table")
        return float(brentq(f, a, b, xtol=1e-14, rtol=1e-14, maxiter=200))


def theta(system: NormalSystem, R: InvariantPair) -> float:
    return system.theta_at(R)


def theta_gradient(system: NormalSystem, R: InvariantPair) -> tuple[float, float]:
    return system.gradient(R.R1, R.R2)


def quasi_hp_constant(system: NormalSystem) -> float:
    """K = B/A; equal bounds (the HP case) give exactly 1."""
    if system.A == system.B:
        return 1.0
    return system.B / system.A


def admissible_corner_values(system: NormalSystem, rho1: float, target: float,
                             window: tuple[float, float]) -> list[float]:
    """All rho2 in ``window`` with theta(rho1, rho2) = target (mod 2*pi), ascending.

    An empty list is a legal answer.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise ValueError("window must be a bounded interval")
    if not system.is_linear:
        wlo, whi = system.invariant_window(2)
        lo, hi = max(lo, wlo), min(hi, whi)
        if hi < lo:
            return []

    def g(x):
        return float(system.theta(rho1, x))

    # bracket scan; monotonicity in rho2 guarantees one root per bracket
    step = math.pi / (2 * system.B)
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    xs = np.linspace(lo, hi, n)
    ts = np.array([g(x) for x in xs])
    kmin = math.ceil((ts.min() - target) / TWO_PI - 1e-15)
    kmax = math.floor((ts.max() - target) / TWO_PI + 1e-15)
    roots = []
    for k in range(kmin, kmax + 1):
        level = target + TWO_PI * k
        d = ts - level
        hit = np.flatnonzero(d == 0)
        if hit.size:
            roots.append(float(xs[hit[0]]))
            continue
        idx = np.flatnonzero(np.sign(d[:-1]) != np.sign(d[1:]))
        if idx.size == 0:
            continue
        i = idx[0]
        roots.append(float(brentq(lambda x: g(x) - level, xs[i], xs[i + 1], xtol=1e-12, rtol=4 * np.finfo(float).eps)))
    return sorted(roots)
