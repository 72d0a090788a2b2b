"""Box-counting dimension and middle-gamma Cantor sets on the line."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np


@dataclass
class DimensionEstimate:
    slope: float
    intercept: float
    r_squared: float
    scales_used: list
    counts: list = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        """True when the log-log fit is poor (r^2 < 0.9)."""
        return self.r_squared < 0.9

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "degenerate_fit": self.degenerate,
                "scales": [float(s) for s in self.scales_used], "counts": list(self.counts)}

    def to_csv(self) -> str:
        rows = ["scale,count"] + [f"{float(s):.12g},{c:.12g}" for s, c in zip(self.scales_used, self.counts)]
        return "\n".join(rows) + "\n"


def cantor_tau(gamma: float) -> float:
    """Exponent ``tau`` with ``gamma**tau = 1/2``."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    return math.log(2.0) / math.log(1.0 / gamma)


def generate_middle_gamma_cantor(gamma: float, depth: int) -> np.ndarray:
    """Level-``depth`` intervals of the Cantor set keeping both end pieces of relative length gamma.

    Returns an array of shape ``(2**depth, 2)`` of ``[a, b]`` rows, ascending.
    """
    if not 0 < gamma <= 0.5:
        raise ValueError("gamma must lie in (0, 1/2]")
    if not 0 <= depth <= 20:
        raise ValueError("depth must be between 0 and 20")
    starts = np.zeros(1)
    length = 1.0
    for _ in range(depth):
        starts = np.concatenate([starts, starts + length * (1 - gamma)])
        starts.sort()
        length *= gamma
    return np.column_stack([starts, starts + length])


def _as_intervals(data):
    """Normalise points or intervals to (a, b) sequences; keeps mpmath values."""
    if isinstance(data, np.ndarray) and data.dtype != object:
        arr = np.asarray(data, dtype=float)
        if arr.ndim == 1:
            return arr, arr, False
        return arr[:, 0], arr[:, 1], False
    rows = list(data)
    if rows and isinstance(rows[0], (list, tuple, np.ndarray)):
        a = [r[0] for r in rows]
        b = [r[1] for r in rows]
    else:
        a = b = rows
    hi_prec = any(isinstance(v, (mpmath.mpf, str)) for v in list(a) + list(b))
    if hi_prec:
        return [mpmath.mpf(v) for v in a], [mpmath.mpf(v) for v in b], True
    return np.asarray(a, dtype=float), np.asarray(b, dtype=float), False


def _count_ranges(k0, k1) -> int:
    order = np.lexsort((k1, k0))
    k0, k1 = k0[order], k1[order]
    total = 0
    cur_a, cur_b = k0[0], k1[0]
    for a, b in zip(k0[1:], k1[1:]):
        if a > cur_b:
            total += cur_b - cur_a + 1
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    return int(total + cur_b - cur_a + 1)


def box_count(a, b, r, offset, hi_prec: bool = False) -> int:
    """Number of grid boxes ``[offset + k*r, offset + (k+1)*r)`` meeting the set."""
    if hi_prec:
        k0 = np.array([int(mpmath.floor((x - offset) / r)) for x in a], dtype=object)
        k1 = np.array([int(mpmath.floor((x - offset) / r)) for x in b], dtype=object)
    else:
        k0 = np.floor((np.asarray(a) - offset) / r).astype(np.int64)
        k1 = np.floor((np.asarray(b) - offset) / r).astype(np.int64)
    return _count_ranges(k0, k1)


def default_scales(a, b, hi_prec: bool = False, n: int = 12) -> list:
    if hi_prec:
        lo, hi = min(a), max(b)
        extent = hi - lo
        lens = sorted(y - x for x, y in zip(a, b))
        med = lens[len(lens) // 2]
        if extent == 0:
            return [mpmath.mpf(2) ** -k for k in range(2, 2 + n)]
        r_min = min(max(8 * med, extent * mpmath.mpf("1e-40")), extent / 4096)
        r_max = extent / 8
        ratio = (r_min / r_max) ** (mpmath.mpf(1) / (n - 1))
        return [r_max * ratio ** k for k in range(n)]
    lo, hi = float(np.min(a)), float(np.max(b))
    extent = hi - lo
    if extent == 0:
        return list(2.0 ** -np.arange(2, 2 + n))
    med = float(np.median(np.asarray(b) - np.asarray(a)))
    r_min = min(max(8 * med, extent * 1e-12), extent / 4096)
    return list(np.geomspace(extent / 8, r_min, n))


def box_dimension(data, scales=None, seed: int = 0, n_offsets: int = 3) -> DimensionEstimate:
    """Least-squares slope of ``log N(r)`` against ``log(1/r)``.

    ``data`` is a 1-d array of points or an ``(n, 2)`` array of intervals.
    Values given as strings or mpmath numbers are handled in extended
    precision.  Counts are averaged over ``n_offsets`` random grid offsets.
    """
    a, b, hi_prec = _as_intervals(data)
    if scales is None:
        scales = default_scales(a, b, hi_prec)
    scales = sorted(scales, key=lambda s: -float(mpmath.log(s)) if hi_prec else -float(s))
    if len(scales) < 4:
        raise ValueError("need at least four scales")
    rng = np.random.default_rng(seed)
    counts = []
    origin = min(a) if hi_prec else float(np.min(a))
    for r in scales:
        c = 0.0
        for u in rng.random(n_offsets):
            off = origin - (mpmath.mpf(u) * r if hi_prec else u * r)
            c += box_count(a, b, r, off, hi_prec)
        counts.append(c / n_offsets)
    x = np.array([float(-mpmath.log(r)) if hi_prec else -math.log(r) for r in scales])
    y = np.log(np.asarray(counts))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return DimensionEstimate(float(slope), float(intercept), r2,
                             [float(r) if not hi_prec else r for r in scales], counts)
