"""Command-line front end: config validation, orchestration and file output.

Every command reads one JSON config, validates all of it before computing
and writes its results to ``--out``.  Exit codes: 0 ok, 1 a check failed,
2 config error, 3 fold or blow-up.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import mpmath
import numpy as np

from . import fractal, goursat, net_analysis as na, oracles, singular
from .curves import Curve
from .errors import (BadWindow, BoundaryPoint, BranchJump, CharnetsError, ConfigError, DegenerateCell, Fold,
                     FoldDuringGrowth, MaxLength, NotAdmissible, NotACover, OutOfTable, PropertyUnmet,
                     SeamMismatch, WindowTooSmall)
from .systems import InvariantPair, NormalSystem, admissible_corner_values, quasi_hp_constant

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_FOLD = 0, 1, 2, 3

_CONFIG_ERRORS = (ConfigError, NotAdmissible, BadWindow, OutOfTable, BoundaryPoint, WindowTooSmall)
_FOLD_ERRORS = (Fold, FoldDuringGrowth, BranchJump, DegenerateCell, MaxLength)
_CHECK_ERRORS = (PropertyUnmet, SeamMismatch, NotACover)


# ------------------------------------------------------------------ config
class Section:
    """A JSON object of the config with line-aware error reporting."""

    def __init__(self, data, text: str, path: str, name: str = "", offset: int = 0):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}:{_line_at(text, offset)}: {name or 'config'} must be a JSON object")
        self.data = data
        self.text = text
        self.path = path
        self.name = name
        self.offset = offset

    def _key_offset(self, key: str) -> int:
        m = re.compile(r'"' + re.escape(key) + r'"\s*:').search(self.text, self.offset)
        return m.start() if m else self.offset

    def fail(self, msg: str, key: str | None = None) -> ConfigError:
        off = self._key_offset(key) if key is not None else self.offset
        where = f"{self.name}.{key}" if self.name and key else (key or self.name or "config")
        return ConfigError(f"{self.path}:{_line_at(self.text, off)}: {where}: {msg}")

    def keys(self, allowed, required=()):
        for k in self.data:
            if k not in allowed:
                raise self.fail(f"unknown key (allowed: {', '.join(sorted(allowed))})", k)
        for k in required:
            if k not in self.data:
                raise self.fail(f"missing required key '{k}'")

    def has(self, key: str) -> bool:
        return key in self.data

    def section(self, key: str) -> "Section":
        name = f"{self.name}.{key}" if self.name else key
        return Section(self.data[key], self.text, self.path, name, self._key_offset(key))

    def number(self, key: str, default=None, lo=None, hi=None, integer=False, lo_open=False):
        if key not in self.data:
            if default is None:
                raise self.fail(f"missing required key '{key}'")
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
            raise self.fail("expected an integer" if integer else "expected a number", key)
        if not math.isfinite(v):
            raise self.fail("must be finite", key)
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise self.fail(f"must be {'>' if lo_open else '>='} {lo}", key)
        if hi is not None and v > hi:
            raise self.fail(f"must be <= {hi}", key)
        return v

    def choice(self, key: str, options, default=None):
        v = self.data.get(key, default)
        if v not in options:
            raise self.fail(f"must be one of {', '.join(map(str, options))}", key)
        return v

    def string(self, key: str, default=None) -> str:
        v = self.data.get(key, default)
        if not isinstance(v, str):
            raise self.fail("expected a string", key)
        return v

    def boolean(self, key: str, default: bool) -> bool:
        v = self.data.get(key, default)
        if not isinstance(v, bool):
            raise self.fail("expected true or false", key)
        return v

    def point(self, key: str, default=None) -> complex:
        v = self.data.get(key, default)
        if not _is_pair(v):
            raise self.fail("expected a point [x, y]", key)
        return complex(v[0], v[1])

    def pair(self, key: str, default=None) -> tuple:
        v = self.data.get(key, default)
        if not _is_pair(v):
            raise self.fail("expected a pair of numbers", key)
        return float(v[0]), float(v[1])

    def points(self, key: str) -> list:
        v = self.data.get(key)
        if not isinstance(v, list) or not v or not all(_is_pair(p) for p in v):
            raise self.fail("expected a non-empty list of points [x, y]", key)
        return [complex(p[0], p[1]) for p in v]

    def file(self, key: str) -> Path:
        p = Path(self.string(key))
        if not p.is_absolute():
            p = Path(self.path).parent / p
        if not p.is_file():
            raise self.fail(f"file not found: {p}", key)
        return p


def _is_pair(v) -> bool:
    return (isinstance(v, (list, tuple)) and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in v))


def _line_at(text: str, offset: int) -> int:
    return text.count("\n", 0, offset) + 1


def load_config(path: str) -> Section:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg} (column {exc.colno})") from None
    return Section(data, text, path)


def _load_json_file(sec: Section, key: str) -> dict:
    p = sec.file(key)
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise sec.fail(f"{p}:{exc.lineno}: invalid JSON: {exc.msg}", key) from None


# ------------------------------------------------------------------ output
def _clean(obj):
    """JSON-ready copy with floats cut to 12 significant digits and non-finite values as null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, mpmath.mpf):
        return mpmath.nstr(obj, 40)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n"


def write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj))


_FAMILY_COLOR = {1: "#1f5fbf", 2: "#c0392b"}


def render_svg(polylines: list, marks=(), size: int = 800, title: str = "") -> str:
    """Polylines ``(k, points)`` colored by family, ``marks`` drawn as black dots."""
    pts = [np.asarray(p, dtype=complex) for _, p in polylines] + [np.asarray(list(marks), dtype=complex)]
    allp = np.concatenate([p[np.isfinite(p)] for p in pts]) if pts else np.zeros(0, complex)
    if allp.size == 0:
        allp = np.array([0j, 1 + 1j])
    x0, x1 = allp.real.min(), allp.real.max()
    y0, y1 = allp.imag.min(), allp.imag.max()
    span = max(x1 - x0, y1 - y0, 1e-300)
    pad = 0.04 * span
    sc = size / (span + 2 * pad)

    def xy(z):
        return f"{(z.real - x0 + pad) * sc:.2f},{(y1 + pad - z.imag) * sc:.2f}"

    w = (x1 - x0 + 2 * pad) * sc
    h = (y1 - y0 + 2 * pad) * sc
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
           f'viewBox="0 0 {w:.2f} {h:.2f}">']
    if title:
        out.append(f"<title>{title}</title>")
    for k, p in polylines:
        p = np.asarray(p, dtype=complex)
        p = p[np.isfinite(p)]
        if p.size < 2:
            continue
        out.append(f'<polyline fill="none" stroke="{_FAMILY_COLOR.get(k, "#555")}" stroke-width="0.8" '
                   f'points="{" ".join(xy(z) for z in p)}"/>')
    for z in marks:
        if np.isfinite(z):
            out.append(f'<circle cx="{xy(z).split(",")[0]}" cy="{xy(z).split(",")[1]}" r="2.5" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------ builders
def parse_system(sec: Section, key: str = "system", default: NormalSystem | None = None) -> NormalSystem:
    if not sec.has(key):
        if default is None:
            raise sec.fail(f"missing required key '{key}'")
        return default
    sub = sec.section(key)
    try:
        return NormalSystem.from_json(sub.data)
    except ConfigError as exc:
        raise sub.fail(str(exc)) from None


def parse_oracle(sec: Section, system: NormalSystem | None = None):
    """Spiral oracle from ``alpha``, ``m1``/``m2``, ``a`` or ``psi0``/``log_rho``; or a constant one."""
    kind = sec.choice("kind", ("spiral", "constant"))
    if kind == "constant":
        sec.keys({"kind", "R1", "R2", "system"}, ("R1", "R2"))
        sys_ = parse_system(sec, "system", system)
        try:
            return oracles.ConstantOracle.for_system(sys_, sec.number("R1"), sec.number("R2"))
        except (OutOfTable, ValueError) as exc:
            raise sec.fail(str(exc)) from None
    sec.keys({"kind", "alpha", "m1", "m2", "a", "psi0", "log_rho", "psi_ref"})
    given = [k for k in ("alpha", "m1", "a", "psi0") if sec.has(k)]
    if len(given) != 1:
        raise sec.fail("give exactly one of alpha, m1 and m2, a, or psi0 and log_rho")
    psi_ref = sec.number("psi_ref", 0.0)
    try:
        if sec.has("alpha"):
            return oracles.SpiralOracle.from_alpha(sec.number("alpha"), psi_ref)
        if sec.has("m1"):
            return oracles.SpiralOracle(sec.number("m1", lo=0, lo_open=True), sec.number("m2", lo=0, lo_open=True),
                                        psi_ref)
        if sec.has("a"):
            return oracles.SpiralOracle(*oracles.stretch_factors_from_a(sec.number("a")), psi_ref)
        return oracles.SpiralOracle.from_annulus(sec.number("psi0"), sec.number("log_rho", lo=0, lo_open=True),
                                                 psi_ref)
    except ValueError as exc:
        raise sec.fail(str(exc)) from None


def parse_domain(sec: Section):
    kind = sec.choice("kind", ("plane", "halfplane", "box", "annulus"))
    if kind == "plane":
        sec.keys({"kind"})
        return na.Plane()
    if kind == "halfplane":
        sec.keys({"kind", "level"})
        return na.HalfPlane(sec.number("level", 0.0))
    if kind == "box":
        sec.keys({"kind", "xmin", "xmax", "ymin", "ymax"}, ("xmin", "xmax", "ymin", "ymax"))
        b = [sec.number(k) for k in ("xmin", "xmax", "ymin", "ymax")]
        if b[0] >= b[1] or b[2] >= b[3]:
            raise sec.fail("box must have xmin < xmax and ymin < ymax")
        return na.Box(*b)
    sec.keys({"kind", "r_in", "r_out", "center", "psi_min", "psi_max"}, ("r_in", "r_out"))
    r_in = sec.number("r_in", lo=0)
    r_out = sec.number("r_out", lo=0, lo_open=True)
    if r_out <= r_in:
        raise sec.fail("r_out must exceed r_in", "r_out")
    center = sec.point("center", [0.0, 0.0])
    if sec.has("psi_min") != sec.has("psi_max"):
        raise sec.fail("give both psi_min and psi_max or neither")
    pmin = sec.number("psi_min", 0.0) if sec.has("psi_min") else None
    pmax = sec.number("psi_max", 0.0) if sec.has("psi_max") else None
    if pmin is not None and pmax <= pmin:
        raise sec.fail("psi_max must exceed psi_min", "psi_max")
    return na.Annulus(r_in, r_out, center, pmin, pmax)


class CurveSpec:
    """Inline or file curve description; ``build(level)`` halves the spacing ``level`` times."""

    def __init__(self, sec: Section):
        self.sec = sec
        if sec.has("file"):
            sec.keys({"file"})
            d = _load_json_file(sec, "file")
            try:
                self.fixed = Curve.from_json(d.get("curve", d))
            except (KeyError, TypeError, ValueError) as exc:
                raise sec.fail(f"not a curve file ({exc})", "file") from None
            self.kind = "file"
            return
        self.fixed = None
        self.kind = sec.choice("kind", ("segment", "arc", "characteristic"))
        if self.kind == "characteristic":
            sec.keys({"kind", "oracle", "start", "family", "length", "n", "direction"},
                     ("oracle", "start", "family", "length"))
            self.oracle = parse_oracle(sec.section("oracle"))
            if not isinstance(self.oracle, oracles.SpiralOracle):
                raise sec.fail("characteristic curves need a spiral oracle", "oracle")
            self.family = sec.choice("family", (1, 2))
            self.direction = sec.choice("direction", (1, -1), 1)
            self.n = sec.number("n", 101, lo=3, hi=100001, integer=True)
        else:
            allowed = {"kind", "start", "heading", "length", "ds"} | ({"curvature"} if self.kind == "arc" else set())
            sec.keys(allowed, ("start", "heading", "length") + (("curvature",) if self.kind == "arc" else ()))
            self.heading = sec.number("heading")
            self.curvature = sec.number("curvature") if self.kind == "arc" else 0.0
            self.ds = sec.number("ds", 0.01, lo=0, lo_open=True)
        self.start = sec.point("start")
        self.length = sec.number("length", lo=0, lo_open=True)
        if self.kind != "characteristic" and self.length / self.ds > 200000:
            raise sec.fail("too many samples (length / ds > 200000)", "ds")

    def build(self, level: int = 0) -> Curve:
        if self.fixed is not None:
            if level:
                raise self.sec.fail("refinement needs inline curves, not files")
            return self.fixed
        if self.kind == "characteristic":
            n = (self.n - 1) * 2 ** level + 1
            return self.oracle.characteristic(self.start, self.family, self.length, n, self.direction)
        ds = self.ds / 2 ** level
        if self.kind == "segment":
            return Curve.segment(self.start, self.heading, self.length, ds)
        return Curve.arc(self.start, self.heading, self.curvature, self.length, ds)


def parse_field(sec: Section, system: NormalSystem | None):
    """``(field, system, descriptor)`` from an oracle or a grid file."""
    kind = sec.choice("kind", ("spiral", "constant", "grid"))
    if kind != "grid":
        o = parse_oracle(sec, system)
        sys_ = o.system if isinstance(o, oracles.SpiralOracle) else parse_system(sec, "system", system)
        return na.OracleField(o, system=sys_), sys_, {"kind": kind}
    sec.keys({"kind", "file", "system"}, ("file",))
    d = _load_json_file(sec, "file")
    if sec.has("system"):
        sys_ = parse_system(sec)
    elif "system" in d:
        try:
            sys_ = NormalSystem.from_json(d["system"])
        except ConfigError as exc:
            raise sec.fail(f"system in grid file: {exc}", "file") from None
    elif system is not None:
        sys_ = system
    else:
        raise sec.fail("grid fields need a system (in the grid file or the config)")
    try:
        g = goursat.CharGrid.from_json(d.get("grid", d), sys_)
        return na.GridField(g, sys_), sys_, {"kind": "grid", "file": Path(sec.data["file"]).name}
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise sec.fail(f"not a grid file ({exc})", "file") from None
    except CharnetsError as exc:
        raise sec.fail(f"unusable grid: {exc}", "file") from None


# ------------------------------------------------------------------ solve-goursat
def _node_errors(g: goursat.CharGrid, ref, C1: Curve, C2: Curve) -> float:
    ok = g.valid
    if isinstance(ref, oracles.SpiralOracle):
        exact = ref.position(g.R1_of_t2[None, :] + 0 * g.R2_of_t1[:, None],
                             g.R2_of_t1[:, None] + 0 * g.R1_of_t2[None, :])
    else:
        exact = C1.z[:, None] + C2.z[None, :] - C1.z[0]
    return float(np.max(np.abs(g.zeta[ok] - exact[ok])))


def _resolve_corner(cfg: Section, system, C1: Curve, ref) -> InvariantPair:
    corner = cfg.data["corner"]
    if _is_pair(corner):
        return InvariantPair(float(corner[0]), float(corner[1]))
    if corner == "reference":
        if not isinstance(ref, oracles.SpiralOracle):
            raise cfg.fail("'reference' needs a spiral reference oracle", "corner")
        return ref.invariants(C1.z[0])
    if corner != "auto":
        raise cfg.fail("expected [R1, R2], \"auto\" or \"reference\"", "corner")
    lo, hi = cfg.pair("window", [-10.0, 10.0])
    if hi <= lo:
        raise cfg.fail("window must be increasing", "window")
    R1 = cfg.number("corner_R1", 0.0)
    h = float(C1.phi[0])
    try:
        cands = admissible_corner_values(system, R1, h, (lo, hi)) + admissible_corner_values(system, R1, h + math.pi,
                                                                                             (lo, hi))
    except ValueError as exc:
        raise cfg.fail(str(exc), "window") from None
    if not cands:
        raise cfg.fail(f"no admissible corner value with R1 = {R1} in the window", "window")
    return InvariantPair(R1, min(cands))


def _grid_csv(g: goursat.CharGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "t1", "t2", "x", "y", "R1", "R2", "theta", "status"])
    n1, n2 = g.shape
    for i in range(n1):
        for j in range(n2):
            z = g.zeta[i, j]
            row = [g.t1[i], g.t2[j], z.real, z.imag, g.R1_of_t2[j], g.R2_of_t1[i], g.thetabar[i, j]]
            w.writerow([i, j] + [f"{v:.12g}" if math.isfinite(v) else "" for v in row] + [int(g.status[i, j])])
    return buf.getvalue()


def _grid_polylines(g: goursat.CharGrid, max_lines: int = 60) -> list:
    n1, n2 = g.shape
    lines = []
    for j in np.unique(np.linspace(0, n2 - 1, min(n2, max_lines)).round().astype(int)):
        lines.append((1, np.where(g.valid[:, j], g.zeta[:, j], np.nan)))
    for i in np.unique(np.linspace(0, n1 - 1, min(n1, max_lines)).round().astype(int)):
        lines.append((2, np.where(g.valid[i, :], g.zeta[i, :], np.nan)))
    return lines


def _fold_front(g: goursat.CharGrid) -> tuple[list, list]:
    front, marks = [], []
    for i, j in g.folded_nodes():
        front.append({"i": int(i), "j": int(j), "t1": float(g.t1[i]), "t2": float(g.t2[j])})
        z = g.zeta[i, j]
        marks.append(z if np.isfinite(z) else g.zeta[i - 1, j - 1])
    return front, marks


def prepare_solve_goursat(cfg: Section, args):
    cfg.keys({"system", "curve1", "curve2", "corner", "window", "corner_R1", "method", "reference", "refine"},
             ("system", "curve1", "curve2", "corner"))
    system = parse_system(cfg)
    spec1, spec2 = CurveSpec(cfg.section("curve1")), CurveSpec(cfg.section("curve2"))
    method = cfg.choice("method", ("cell", "metric"), "cell")
    ref = None
    if cfg.has("reference"):
        rs = cfg.section("reference")
        if rs.choice("kind", ("spiral", "translation")) == "spiral":
            ref = parse_oracle(rs)
        else:
            rs.keys({"kind"})
            ref = "translation"
    refine = cfg.number("refine", 0, lo=0, hi=4, integer=True)
    if refine and ref is None:
        raise cfg.fail("refinement needs a reference", "refine")
    if refine and "file" in (spec1.kind, spec2.kind):
        raise cfg.fail("refinement needs inline curves, not files", "refine")
    C1, C2 = spec1.build(0), spec2.build(0)
    if abs(C1.z[0] - C2.z[0]) > 1e-9 * max(1.0, abs(C1.z[0])):
        raise cfg.fail("curve1 and curve2 must start at the same point", "curve2")
    rho = _resolve_corner(cfg, system, C1, ref)
    opts = goursat.GoursatOptions(method=method)
    for fam, C, key in ((1, C1, "curve1"), (2, C2, "curve2")):
        try:
            goursat.tangent_sign(system, C, rho, fam, opts.corner_tol if fam == 1 else opts.ortho_tol)
        except (NotAdmissible, OutOfTable) as exc:
            raise cfg.fail(f"corner value does not fit this curve: {exc}", key) from None

    def run(out: Path) -> int:
        g = goursat.solve(system, C1, C2, rho, opts)
        front, marks = _fold_front(g)
        doc = {"system": system.to_json(), "corner": [rho.R1, rho.R2], "method": method,
               "signs": list(g.signs), "status": "fold" if g.fold_count else "ok",
               "fold_count": g.fold_count, "fold_front": front, "grid": g.to_json()}
        if ref is not None:
            levels = [{"shape": list(g.shape), "max_error": _node_errors(g, ref, C1, C2)}]
            for lev in range(1, refine + 1):
                D1, D2 = spec1.build(lev), spec2.build(lev)
                gl = goursat.solve(system, D1, D2, rho, opts)
                levels.append({"shape": list(gl.shape), "max_error": _node_errors(gl, ref, D1, D2)})
            errs = [lv["max_error"] for lv in levels]
            ratios = [a / b if b > 0 else None for a, b in zip(errs[:-1], errs[1:])]
            doc["reference"] = {"kind": "translation" if ref == "translation" else "spiral", "levels": levels,
                                "ratios": ratios,
                                "orders": [math.log2(r) if r else None for r in ratios]}
        write_json(out / "grid.json", doc)
        (out / "grid.csv").write_text(_grid_csv(g))
        (out / "grid.svg").write_text(render_svg(_grid_polylines(g), marks, title="characteristic grid"))
        print(f"solve-goursat: {doc['status']}, {g.fold_count} folded nodes")
        return EXIT_FOLD if g.fold_count else EXIT_OK

    return run


# ------------------------------------------------------------------ trace-net
def _domain_or_field(cfg: Section, fld):
    return parse_domain(cfg.section("domain")) if cfg.has("domain") else fld.domain


def prepare_trace_net(cfg: Section, args):
    cfg.keys({"system", "field", "seeds", "step", "length", "domain"}, ("field", "seeds"))
    system = parse_system(cfg) if cfg.has("system") else None
    fld, system, desc = parse_field(cfg.section("field"), system)
    seeds = cfg.points("seeds")
    dom = _domain_or_field(cfg, fld)
    step = cfg.number("step", 0.01, lo=0, lo_open=True)
    length = cfg.number("length", lo=0, lo_open=True) if cfg.has("length") else None
    if length is None and not math.isfinite(getattr(dom, "diameter", math.inf)):
        raise cfg.fail("unbounded domain: give a length or a bounded domain")
    for z in seeds:
        if not dom.contains(z) or not fld.covers(z):
            raise cfg.fail(f"seed {z.real:g},{z.imag:g} is outside the field's domain", "seeds")

    def run(out: Path) -> int:
        net = na.trace_net(fld, seeds, step, dom, length)
        write_json(out / "net.json", {"field": desc, "curves": [{"k": k, "curve": C.to_json()} for k, C in net]})
        (out / "net.svg").write_text(render_svg([(k, C.z) for k, C in net], seeds, title="characteristic net"))
        print(f"trace-net: {len(net)} curves")
        return EXIT_OK

    return run


# ------------------------------------------------------------------ audit
def _bbox(dom, fld) -> tuple:
    if isinstance(dom, na.Box):
        return dom.xmin, dom.xmax, dom.ymin, dom.ymax
    if isinstance(dom, na.Annulus):
        c = dom.center
        return c.real - dom.r_out, c.real + dom.r_out, c.imag - dom.r_out, c.imag + dom.r_out
    if isinstance(fld, na.GridField):
        z = fld.grid.zeta[fld.grid.valid]
        return z.real.min(), z.real.max(), z.imag.min(), z.imag.max()
    return None


def _sample_points(rng, dom, fld, n: int, margin: float, box) -> list:
    """``n`` points whose ``margin``-disc lies in the domain and is covered by the field."""
    x0, x1, y0, y1 = box
    ring = margin * np.exp(1j * np.linspace(0, 2 * math.pi, 8, endpoint=False))
    pts = []
    for _ in range(200 * n):
        if len(pts) == n:
            break
        z = complex(rng.uniform(x0, x1), rng.uniform(y0, y1))
        if all(dom.contains(w) and fld.covers(w) for w in np.concatenate([[z], z + ring])):
            pts.append(z)
    return pts


def _alignment(g: goursat.CharGrid, tol: float) -> tuple[dict, dict]:
    """Mismatch between grid edges and the characteristic directions at their ends."""
    worst = (0.0, None)
    z, th, ok = g.zeta, g.thetabar, g.valid
    s1, s2 = g.signs
    for fam in (1, 2):
        if fam == 1:
            a, b, ta, tb, m = z[:-1, :], z[1:, :], th[:-1, :], th[1:, :], ok[:-1, :] & ok[1:, :]
            base = 0.0 if s1 == 1 else math.pi
        else:
            a, b, ta, tb, m = z[:, :-1], z[:, 1:], th[:, :-1], th[:, 1:], ok[:, :-1] & ok[:, 1:]
            base = s2 * math.pi / 2
        d = b - a
        mid = ta + 0.5 * np.vectorize(na.wrap)(tb - ta) if ta.size else ta
        err = np.abs(np.vectorize(na.wrap)(np.angle(d) - mid - base)) if d.size else d
        err = np.where(m & (np.abs(d) > 0), err, 0.0)
        if err.size and err.max() > worst[0]:
            k = np.unravel_index(int(np.argmax(err)), err.shape)
            worst = (float(err.max()), {"family": fam, "node": [int(k[0]), int(k[1])],
                                        "z": complex(a[k]), "mismatch": float(err.max())})
    jac = g.cell_jacobians()
    neg = int(np.count_nonzero(np.nan_to_num(jac, nan=1.0) <= 0))
    check = {"pass": worst[0] <= tol and neg == 0, "max_mismatch": worst[0], "tol": tol,
             "inverted_cells": neg, "vacuous": False}
    return check, worst[1]


def prepare_audit(cfg: Section, args):
    cfg.keys({"system", "field", "domain", "seeds", "n_seeds", "K", "tol", "step", "quads", "quad_length",
              "quad_eps", "residual_points", "h", "align_tol"}, ("field",))
    system = parse_system(cfg) if cfg.has("system") else None
    fld, system, desc = parse_field(cfg.section("field"), system)
    dom = _domain_or_field(cfg, fld)
    box = _bbox(dom, fld)
    if box is None:
        raise cfg.fail("audits need a bounded domain (box or annulus)", "domain" if cfg.has("domain") else None)
    D = math.hypot(box[1] - box[0], box[3] - box[2])
    K = cfg.number("K", quasi_hp_constant(system) if system is not None else 1.0, lo=1.0)
    tol = cfg.number("tol", 0.05, lo=0)
    step = cfg.number("step", D / 400, lo=0, lo_open=True)
    n_quads = cfg.number("quads", 20, lo=0, hi=1000, integer=True)
    ql = cfg.number("quad_length", 0.05 * D, lo=0, lo_open=True)
    qe = cfg.number("quad_eps", 0.05 * D, lo=0, lo_open=True)
    n_res = cfg.number("residual_points", 20, lo=0, hi=1000, integer=True)
    h = cfg.number("h", 1e-3 * D, lo=0, lo_open=True)
    align_tol = cfg.number("align_tol", 0.02, lo=0, lo_open=True)
    n_seeds = cfg.number("n_seeds", 4, lo=0, hi=100, integer=True)
    seeds = cfg.points("seeds") if cfg.has("seeds") else None
    if seeds is not None:
        for z in seeds:
            if not dom.contains(z) or not fld.covers(z):
                raise cfg.fail(f"seed {z.real:g},{z.imag:g} is outside the field's domain", "seeds")

    def run(out: Path) -> int:
        rng = np.random.default_rng(args.seed)
        seed_pts = seeds if seeds is not None else _sample_points(rng, dom, fld, n_seeds, 0.0, box)
        quad_pts = _sample_points(rng, dom, fld, n_quads, 2.5 * max(ql, qe), box)
        quad_args = [(z, int(rng.integers(1, 3))) for z in quad_pts]
        res_pts = _sample_points(rng, dom, fld, n_res, 8 * h, box)
        net = na.trace_net(fld, seed_pts, step, dom)

        def quad(a):
            z, i = a
            try:
                return na.extract_quad(fld, z, i, ql, qe, domain=dom)
            except CharnetsError:
                return None

        def residual(z):
            try:
                r1 = max(abs(v) for v in na.blowup_residual(fld, z, h, dom))
                r2 = max(abs(v) for v in na.blowup_residual(fld, z, h / 2, dom))
                return r1, r2
            except CharnetsError:
                return None

        with ThreadPoolExecutor(max_workers=args.threads) as ex:
            quads = list(ex.map(quad, quad_args))
            residuals = list(ex.map(residual, res_pts))
        quads = [q for q in quads if q is not None]
        diam_arcs = [(C, lam) for _, C in net if (lam := na.chord_return_path(C, dom)) is not None]
        rep = na.bound_audit(fld, net, K, tol, step=step, domain=dom, arcs_for_diameter=diam_arcs, quads=quads)

        worst_q, n_ratio, bad = (0.0, None), 0, 0
        for q in quads:
            r = na.quasi_hp_ratio(q)
            ok = na.ratio_within(r, K, tol)
            if r["status"] == "ratio":
                n_ratio += 1
            out_by = 0.0 if ok else (1.0 if r["ratio"] is None else max(1 / K - tol - r["ratio"],
                                                                        r["ratio"] - K - tol, 1e-16))
            if not ok:
                bad += 1
            if out_by > worst_q[0] or (worst_q[1] is None and not ok):
                worst_q = (out_by, {"a": q.a, "ratio": r["ratio"], "status": r["status"],
                                    "same_sign": r["same_sign"]})
        rep.checks["quasi_hp_ratio"] = {"pass": bad == 0, "samples": len(quads), "violations": bad,
                                        "K": K, "vacuous": n_ratio == 0}
        rep.witnesses["quasi_hp_ratio"] = worst_q[1]

        pairs = [r for r in residuals if r is not None]
        grid_backed = isinstance(fld, na.GridField)
        shrinks = [r2 <= 0.75 * r1 or r2 < 1e-8 for r1, r2 in pairs]
        rep.checks["blowup_residual"] = {"pass": all(shrinks), "assert": not grid_backed, "samples": len(pairs),
                                         "max_residual_h": max((r1 for r1, _ in pairs), default=0.0),
                                         "max_residual_h2": max((r2 for _, r2 in pairs), default=0.0),
                                         "vacuous": all(r1 < 1e-8 for r1, _ in pairs)}
        if pairs:
            k = int(np.argmax([r1 for r1, _ in pairs]))
            rep.witnesses["blowup_residual"] = {"z": res_pts[k], "residual_h": pairs[k][0],
                                                "residual_h2": pairs[k][1]}
        if grid_backed:
            rep.checks["grid_alignment"], rep.witnesses["grid_alignment"] = _alignment(fld.grid, align_tol)
        doc = rep.to_json()
        doc["field"] = desc
        doc["seed"] = args.seed
        write_json(out / "report.json", doc)
        print(f"audit: {'pass' if rep.passed else 'FAIL'}")
        return EXIT_OK if rep.passed else EXIT_CHECK

    return run


# ------------------------------------------------------------------ construct-singular
def prepare_construct_singular(cfg: Section, args):
    cfg.keys({"system", "epsilon", "depth", "resolution", "rho0", "delta1", "patches", "patch_limit", "seam_tol",
              "ledger_samples", "ledger_tol"})
    system = parse_system(cfg, default=NormalSystem.cps(2.0, 1.0))
    eps = cfg.number("epsilon", 0.02)
    if not 0 < eps <= 0.05:
        raise cfg.fail("out of the supported range (0, 0.05]", "epsilon")
    depth = cfg.number("depth", 3, lo=1, hi=5, integer=True)
    resolution = cfg.number("resolution", 1.0, lo=0.25, hi=4.0)
    delta1 = cfg.number("delta1", 0.2, lo=0, lo_open=True, hi=1.0)
    patches = cfg.boolean("patches", True)
    limit = cfg.number("patch_limit", 40, lo=2, hi=400, integer=True)
    seam_tol = cfg.number("seam_tol", 1e-6, lo=0, lo_open=True)
    n_ledger = cfg.number("ledger_samples", 10, lo=1, hi=100, integer=True)
    ledger_tol = cfg.number("ledger_tol", 1e-6, lo=0, lo_open=True)
    rho0 = None
    if cfg.has("rho0"):
        rho0 = InvariantPair(*cfg.pair("rho0"))
        try:
            th = system.theta_at(rho0)
        except OutOfTable as exc:
            raise cfg.fail(str(exc), "rho0") from None
        if singular._wrap_pi(th + 0.25 * math.pi) > 1e-8:
            raise cfg.fail("corner value must give theta = -pi/4 (mod pi)", "rho0")

    def run(out: Path) -> int:
        sol = singular.build_singular_solution(system, eps, depth, rho0, resolution, delta1, seam_tol=seam_tol)
        tree = sol.tree
        ledger = singular.angle_shift_ledger(system, eps, n_ledger, resolution)
        structure = tree.check()
        seam_max = max(max(s["jump_U"], s["jump_C"]) for s in sol.seams)
        tree_doc = tree.to_json()
        tree_doc.update(epsilon=eps, depth=depth, resolution=resolution)
        write_json(out / "tree.json", tree_doc)
        n_patches = 0
        if patches:
            pdir = out / "patches"
            pdir.mkdir(exist_ok=True)
            entries = []
            for idx, f in enumerate(sol.patches.fields):
                g = singular._decimate(f.grid, limit)
                name = f"patch_{idx:02d}.json"
                write_json(pdir / name, {"system": system.to_json(), "grid": g.to_json()})
                z = g.zeta[g.valid]
                entries.append({"file": name, "role": "top_quadrilateral" if idx == 0 else "growth",
                                "shape": list(g.shape),
                                "bbox": [z.real.min(), z.real.max(), z.imag.min(), z.imag.max()]})
            n_patches = len(entries)
            write_json(pdir / "manifest.json", {"patches": entries, "seams": sol.seams, "seam_tol": seam_tol})
        checks = {"tree children nested and disjoint": structure["children"],
                  "tree separation gamma^n L0": structure["separation"],
                  "tau identity gamma^tau = 1/2": structure["tau_identity"] <= 1e-12,
                  f"seams (max jump {seam_max:.3e})": seam_max <= seam_tol}
        for name, e in ledger.items():
            checks[f"angle shift {name}: expected {e['expected']:.12g}, error {e['max_error']:.3e}"] = \
                e["max_error"] <= (2 * ledger_tol if len(name) == 4 else ledger_tol)
        lines = [f"epsilon = {eps:.12g}", f"depth = {depth}", f"gamma = {tree.gamma:.12g}",
                 f"tau = {tree.tau:.12g}", f"delta2 = {tree.delta2:.12g}", f"r1 = {tree.r1:.12g}",
                 "intervals per level = " + " ".join(str(len(lv)) for lv in tree.levels),
                 f"patches = {n_patches}"]
        lines += [f"{'pass' if ok else 'FAIL'}  {name}" for name, ok in checks.items()]
        (out / "summary.txt").write_text("\n".join(lines) + "\n")
        ok = all(checks.values())
        print(f"construct-singular: {'pass' if ok else 'FAIL'}, gamma {tree.gamma:.4g}, tau {tree.tau:.4g}")
        return EXIT_OK if ok else EXIT_CHECK

    return run


# ------------------------------------------------------------------ dim
def _read_interval_csv(sec: Section, p: Path) -> tuple[list, list]:
    """Rows ``a,b[,level]``; returns the intervals and the nested levels (empty without a level column)."""
    try:
        rows = list(csv.reader(p.read_text().splitlines()))
    except (OSError, csv.Error) as exc:
        raise sec.fail(f"cannot read {p}: {exc}", "input") from None
    if not rows or [c.strip() for c in rows[0]] not in (["a", "b"], ["a", "b", "level"]):
        raise sec.fail(f"{p}:1: header must be 'a,b' or 'a,b,level'", "input")
    with_level = len(rows[0]) == 3
    ivs, levels = [], {}
    for n, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        try:
            a, b = float(r[0]), float(r[1])
            lev = int(r[2]) if with_level else 0
        except (ValueError, IndexError):
            raise sec.fail(f"{p}:{n}: malformed row", "input") from None
        if not (math.isfinite(a) and math.isfinite(b)) or b < a:
            raise sec.fail(f"{p}:{n}: need finite a <= b", "input")
        ivs.append((r[0].strip(), r[1].strip()))
        levels.setdefault(lev, []).append((r[0].strip(), r[1].strip()))
    if not ivs:
        raise sec.fail(f"{p}: no intervals", "input")
    if not with_level:
        return ivs, []
    keys = sorted(levels)
    if keys != list(range(len(keys))) or any(len(levels[k]) != 2 ** k for k in keys):
        raise sec.fail(f"{p}: level n must hold 2**n intervals for n = 0, 1, ...", "input")
    deepest = [(float(a), float(b)) for a, b in levels[keys[-1]]]
    return deepest, [sorted(levels[k], key=lambda iv: float(iv[0])) for k in keys]


def prepare_dim(cfg: Section, args):
    cfg.keys({"input", "covers", "n_offsets", "falconer_tol"}, ("input",))
    p = cfg.file("input")
    n_covers = cfg.number("covers", 20, lo=0, hi=1000, integer=True)
    n_off = cfg.number("n_offsets", 3, lo=1, hi=50, integer=True)
    ftol = cfg.number("falconer_tol", 0.0, lo=0)
    tree = None
    if p.suffix.lower() == ".json":
        d = _load_json_file(cfg, "input")
        try:
            tree = singular.NestedIntervalTree.from_json(d)
        except (KeyError, TypeError, ValueError) as exc:
            raise cfg.fail(f"not a tree file ({exc})", "input") from None
        data = [(mpmath.nstr(a, 40), mpmath.nstr(b, 40)) for a, b in tree.levels[-1]]
    else:
        data, levels = _read_interval_csv(cfg, p)
        if len(levels) >= 2:
            try:
                tree = singular.NestedIntervalTree.from_intervals(levels)
            except (ValueError, ZeroDivisionError) as exc:
                raise cfg.fail(f"intervals do not form a Cantor tree ({exc})", "input") from None
        data = np.asarray(data, dtype=float) if levels == [] or tree is None else \
            np.asarray([(float(a), float(b)) for a, b in data])

    def run(out: Path) -> int:
        est = fractal.box_dimension(data, seed=args.seed, n_offsets=n_off)
        doc = {"input": p.name, "intervals": len(data), "estimate": est.to_json(), "reference": None,
               "falconer": None}
        ok = True
        if tree is not None:
            doc["reference"] = {"gamma": tree.gamma, "cantor_tau": fractal.cantor_tau(tree.gamma)}
            covers = singular.random_covers(tree, n_covers, args.seed) + [tree.normalized()]
            try:
                val = singular.falconer_lower_bound_check(tree, covers, ftol)
                doc["falconer"] = {"min_sum": float(val), "pass": True, "covers": len(covers), "tol": ftol}
            except PropertyUnmet as exc:
                ok = False
                doc["falconer"] = {"min_sum": 0.5 - exc.violation, "pass": False, "covers": len(covers),
                                   "tol": ftol}
        write_json(out / "estimate.json", doc)
        (out / "estimate.csv").write_text(est.to_csv())
        print(f"dim: estimate {est.slope:.4f}" + (f", cantor_tau {doc['reference']['cantor_tau']:.4f}"
                                                   if tree is not None else ""))
        return EXIT_OK if ok else EXIT_CHECK

    return run


# ------------------------------------------------------------------ oracle-eval
def prepare_oracle_eval(cfg: Section, args):
    cfg.keys({"system", "oracle", "points"}, ("oracle", "points"))
    system = parse_system(cfg) if cfg.has("system") else None
    o = parse_oracle(cfg.section("oracle"), system)
    pts = cfg.points("points")

    def run(out: Path) -> int:
        if isinstance(o, oracles.SpiralOracle):
            desc = {"kind": "spiral", "m1": o.m1, "m2": o.m2, "alpha": o.alpha, "a": o.a, "psi_ref": o.psi_ref}
        else:
            desc = {"kind": "constant", "R1": o.R1, "R2": o.R2, "theta": o.theta0}
        vals = []
        for z in pts:
            try:
                R1, R2, th = o.evaluate(z)
                vals.append({"z": z, "R1": float(R1), "R2": float(R2), "theta": float(th)})
            except CharnetsError as exc:
                vals.append({"z": z, "error": type(exc).__name__})
        write_json(out / "values.json", {"oracle": desc, "values": vals})
        print(f"oracle-eval: {len(vals)} points")
        return EXIT_OK

    return run


# ------------------------------------------------------------------ entry point
COMMANDS = {
    "solve-goursat": (prepare_solve_goursat, "fill a characteristic grid from two initial curves"),
    "trace-net": (prepare_trace_net, "trace both characteristic families through seed points"),
    "audit": (prepare_audit, "check the geometric bounds on a field"),
    "construct-singular": (prepare_construct_singular, "build the nested singular-set construction"),
    "dim": (prepare_dim, "box-counting dimension and cover-sum check"),
    "oracle-eval": (prepare_oracle_eval, "evaluate a closed-form solution at points"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON config file")
    common.add_argument("--out", default="out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, default=0, metavar="N", help="seed for randomized sampling")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads for sampling")
    parser = argparse.ArgumentParser(prog="charnets", description="Characteristic nets of planar hyperbolic systems")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_, description=help_)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config)
        run = COMMANDS[args.command][0](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return run(out)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _FOLD_ERRORS as exc:
        print(f"fold: {exc}", file=sys.stderr)
        return EXIT_FOLD
    except _CHECK_ERRORS as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
