# lkengine/geometry/zoo.py
"""Built-in manifolds, submersions and embedded surfaces with reference values.

Every reference carries its provenance: a closed form, or a reduced
one-dimensional quadrature where the closed form is an integral.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional
from urllib.parse import parse_qsl, urlsplit

from scipy import integrate

from lkengine.errors import ValidationError, ZooError
from lkengine.geometry.blocklin import BlockSplit
from lkengine.geometry.metricfield import make_chart, parse_expr
from lkengine.geometry.submersion import SubmersionChart, validate
from lkengine.geometry.tubeoracle import Embedding
from lkengine.geometry.weylsum import sphere_intrinsic_volume

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Reference:
    value: float
    provenance: str


@dataclass
class ZooEntry:
    name: str
    params: dict
    atlas: tuple = ()
    submersion: Optional[SubmersionChart] = None
    embedding: Optional[Embedding] = None
    references: Dict[str, Reference] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        if self.submersion is not None:
            return "submersion"
        if self.embedding is not None:
            return "embedding"
        return "manifold"

    @property
    def dim(self) -> int:
        return self.atlas[0].dim

    def reference(self, key: str) -> float:
        try:
            return self.references[key].value
        except KeyError:
            raise ZooError(f"{self.name} has no reference value '{key}'") from None


def _num(x: float) -> str:
    return repr(float(x))


def _diagonal(entries):
    n = len(entries)
    return [[entries[p] if q == p else "0" for q in range(p, n)] for p in range(n)]


def _sphere_metric(n: int, r: float):
    r2 = _num(r * r)
    entries, factor = [], r2
    for k in range(n):
        entries.append(factor)
        factor = f"{factor}*sin(x{k})^2"
    domain = [(0.0, math.pi)] * (n - 1) + [(0.0, TWO_PI)]
    periodic = [False] * (n - 1) + [True]
    return _diagonal(entries), domain, periodic


def _intrinsic_references(n: int, volumes: dict, provenance: str) -> dict:
    return {f"V_{i}": Reference(v, provenance) for i, v in volumes.items()}


def _positive(name: str, value: float) -> float:
    if not value > 0.0 or not math.isfinite(value):
        raise ZooError(f"parameter {name} must be positive, got {value}")
    return value


# ---------------------------------------------------------------------------
# Closed manifolds
# ---------------------------------------------------------------------------

def sphere(r: float = 1.0, n: int = 2) -> ZooEntry:
    r, n = _positive("r", float(r)), int(n)
    if n not in (2, 3, 4):
        raise ZooError(f"sphere dimension must be 2, 3 or 4, got {n}")
    metric, domain, periodic = _sphere_metric(n, r)
    chart = make_chart(metric, domain, periodic)
    volumes = {i: sphere_intrinsic_volume(n, i, r) for i in range(n + 1)}
    refs = _intrinsic_references(n, volumes, "closed form: round sphere, (4 pi r^2) normalization")
    refs["volume"] = Reference(volumes[n], "closed form: 2 pi^((n+1)/2) r^n / Gamma((n+1)/2)")
    refs["chi"] = Reference(2.0 if n % 2 == 0 else 0.0, "closed form")
    return ZooEntry("sphere", {"r": r, "n": n}, (chart,), references=refs)


def flat_torus(a: float = TWO_PI, b: float = TWO_PI) -> ZooEntry:
    a, b = _positive("a", float(a)), _positive("b", float(b))
    chart = make_chart(_diagonal(["1", "1"]), [(0.0, a), (0.0, b)], [True, True])
    refs = _intrinsic_references(2, {0: 0.0, 1: 0.0, 2: a * b}, "closed form: flat metric, product of periods")
    refs["volume"] = Reference(a * b, "closed form")
    refs["chi"] = Reference(0.0, "closed form")
    return ZooEntry("flat_torus", {"a": a, "b": b}, (chart,), references=refs)


def _ring_torus_metric(R: float, r: float):
    return _diagonal([_num(r * r), f"({_num(R)} + {_num(r)}*cos(x0))^2"])


def _ring_params(R: float, r: float):
    R, r = _positive("R", float(R)), _positive("r", float(r))
    if not r < R:
        raise ZooError(f"ring torus needs r < R, got R={R}, r={r}")
    return R, r


def ring_torus(R: float = 2.0, r: float = 1.0) -> ZooEntry:
    R, r = _ring_params(R, r)
    chart = make_chart(_ring_torus_metric(R, r), [(0.0, TWO_PI), (0.0, TWO_PI)], [True, True])
    area = 4.0 * math.pi ** 2 * R * r
    refs = _intrinsic_references(2, {0: 0.0, 1: 0.0, 2: area}, "closed form: torus of revolution")
    refs["volume"] = Reference(area, "closed form: 4 pi^2 R r")
    refs["chi"] = Reference(0.0, "closed form")
    refs["min_curvature"] = Reference(-1.0 / (r * (R - r)), "closed form: cos(t)/(r(R + r cos t)) at t = pi")
    return ZooEntry("ring_torus", {"R": R, "r": r}, (chart,), references=refs)


# ---------------------------------------------------------------------------
# Submersions over the circle
# ---------------------------------------------------------------------------

def _circle(length: float = TWO_PI):
    return make_chart([["1"]], [(0.0, length)], [True])


def _submersion_entry(name, params, total, base, fiber_dims, base_dims, refs) -> ZooEntry:
    sc = SubmersionChart(BlockSplit(tuple(fiber_dims), tuple(base_dims)), total, base, name)
    report = validate(sc, 32)
    if not report.passed:
        raise ValidationError(f"zoo submersion {name} failed validation (residual {report.residual:.3g})")
    return ZooEntry(name, params, (total,), submersion=sc, references=refs)


def product_s2_s1(r: float = 1.0, L: float = TWO_PI) -> ZooEntry:
    r, L = _positive("r", float(r)), _positive("L", float(L))
    r2 = _num(r * r)
    total = make_chart(_diagonal([r2, f"{r2}*sin(x0)^2", "1"]), [(0.0, math.pi), (0.0, TWO_PI), (0.0, L)],
                       [False, True, True])
    refs = {
        "volume": Reference(4.0 * math.pi * r * r * L, "closed form: area(S^2) * L"),
        "chi_fiber": Reference(2.0, "closed form: chi(S^2)"),
        "base_V_1": Reference(L, "closed form: circle length"),
        "limit_V_1": Reference(2.0 * L, "closed form: chi(S^2) V_1(S^1)"),
        "limit_V_0": Reference(0.0, "closed form: odd codimension"),
        "V_1": Reference(2.0 * L, "closed form: product formula, independent of eps"),
    }
    return _submersion_entry("product_s2_s1", {"r": r, "L": L}, total, _circle(L), (0, 1), (2,), refs)


def warped_s2_over_s1(a: float = 0.3) -> ZooEntry:
    """db^2 + f(b)^2 g_S2 with f = 1 + a sin(b)"""
    a = float(a)
    if not abs(a) < 1.0:
        raise ZooError(f"warping amplitude must satisfy |a| < 1, got {a}")
    f2 = f"(1.0 + {_num(a)}*sin(x2))^2"
    total = make_chart(_diagonal([f2, f"{f2}*sin(x0)^2", "1"]), [(0.0, math.pi), (0.0, TWO_PI), (0.0, TWO_PI)],
                       [False, True, True])
    volume, _ = integrate.quad(lambda b: 4.0 * math.pi * (1.0 + a * math.sin(b)) ** 2, 0.0, TWO_PI,
                               epsabs=1e-13, epsrel=1e-13)
    refs = {
        "volume": Reference(volume, "reduced quadrature: int 4 pi f(b)^2 db"),
        "volume_closed": Reference(8.0 * math.pi ** 2 + 4.0 * math.pi ** 2 * a * a, "closed form: 8 pi^2 + 4 pi^2 a^2"),
        "chi_fiber": Reference(2.0, "closed form: chi(S^2)"),
        "base_V_1": Reference(TWO_PI, "closed form: circle length"),
        "limit_V_1": Reference(4.0 * math.pi, "closed form: chi(S^2) V_1(S^1)"),
        "limit_V_0": Reference(0.0, "closed form: odd codimension"),
        "V_1_slope": Reference(TWO_PI * a * a, "closed form: V_1(eps) = 4 pi + 2 pi a^2 eps"),
    }
    return _submersion_entry("warped_s2_over_s1", {"a": a}, total, _circle(), (0, 1), (2,), refs)


def flat_t2_over_s1() -> ZooEntry:
    total = make_chart(_diagonal(["1", "1", "1"]), [(0.0, TWO_PI)] * 3, [True] * 3)
    refs = {
        "volume": Reference(TWO_PI ** 3, "closed form"),
        "chi_fiber": Reference(0.0, "closed form: chi(T^2)"),
        "limit_V_1": Reference(0.0, "closed form: chi(T^2) V_1(S^1)"),
    }
    return _submersion_entry("flat_t2_over_s1", {}, total, _circle(), (0, 1), (2,), refs)


def torus_fiber_bundle(R: float = 2.0, r: float = 1.0) -> ZooEntry:
    R, r = _ring_params(R, r)
    metric = _ring_torus_metric(R, r)
    total = make_chart([metric[0] + ["0"], metric[1] + ["0"], ["1"]], [(0.0, TWO_PI)] * 3, [True] * 3)
    refs = {
        "volume": Reference(4.0 * math.pi ** 2 * R * r * TWO_PI, "closed form: torus area * 2 pi"),
        "chi_fiber": Reference(0.0, "closed form: chi(T^2)"),
        "limit_V_1": Reference(0.0, "closed form: chi(T^2) V_1(S^1)"),
        "fiber_min_curvature": Reference(-1.0 / (r * (R - r)), "closed form: inner equator of the torus"),
    }
    return _submersion_entry("torus_fiber_bundle", {"R": R, "r": r}, total, _circle(), (0, 1), (2,), refs)


def coupled_t2_over_s1(c: float = 0.1) -> ZooEntry:
    """Flat T^2 -> S^1 with constant mixed block: g = [[1, c], [c, 1 + c^2]] over base metric 1"""
    c = float(c)
    if not abs(c) < 10.0:
        raise ZooError(f"coupling must satisfy |c| < 10, got {c}")
    total = make_chart([[ "1", _num(c)], [_num(1.0 + c * c)]], [(0.0, TWO_PI)] * 2, [True, True])
    refs = {
        "volume": Reference(TWO_PI ** 2, "closed form: det g = 1"),
        "chi_fiber": Reference(0.0, "closed form: chi(S^1)"),
        "limit_V_1": Reference(0.0, "closed form: odd fiber"),
        "h": Reference(-c, "closed form: -g_ab g~^ba"),
        "block_discrepancy": Reference(c * c, "closed form: g_BB - base metric"),
    }
    return _submersion_entry("coupled_t2_over_s1", {"c": c}, total, _circle(), (0,), (1,), refs)


# ---------------------------------------------------------------------------
# Embedded surfaces
# ---------------------------------------------------------------------------

def sphere2_embedded(r: float = 1.0) -> ZooEntry:
    r = _positive("r", float(r))
    entry = sphere(r, 2)
    chart = entry.atlas[0]
    R = _num(r)
    coordinates = tuple(parse_expr(text, 2) for text in (
        f"{R}*sin(x0)*cos(x1)", f"{R}*sin(x0)*sin(x1)", f"{R}*cos(x0)"))
    emb = Embedding(3, chart, coordinates, reach=r, lower=(-r, -r, -r), upper=(r, r, r), name="sphere2_embedded")
    refs = dict(entry.references)
    refs["tube_0.1"] = Reference(4.0 * math.pi / 3.0 * ((r + 0.1) ** 3 - (r - 0.1) ** 3),
                                 "closed form: spherical shell volume")
    return ZooEntry("sphere2_embedded", {"r": r}, (chart,), embedding=emb, references=refs)


def ring_torus_embedded(R: float = 2.0, r: float = 1.0) -> ZooEntry:
    R, r = _ring_params(R, r)
    entry = ring_torus(R, r)
    chart = entry.atlas[0]
    radius = f"({_num(R)} + {_num(r)}*cos(x0))"
    coordinates = tuple(parse_expr(text, 2) for text in (
        f"{radius}*cos(x1)", f"{radius}*sin(x1)", f"{_num(r)}*sin(x0)"))
    outer = R + r
    emb = Embedding(3, chart, coordinates, reach=min(r, R - r), lower=(-outer, -outer, -r), upper=(outer, outer, r),
                    name="ring_torus_embedded")
    refs = dict(entry.references)
    refs["tube_slope"] = Reference(8.0 * math.pi ** 2 * R * r, "closed form: 2 pi R * pi((r+e)^2 - (r-e)^2) / e")
    return ZooEntry("ring_torus_embedded", {"R": R, "r": r}, (chart,), embedding=emb, references=refs)


CATALOGUE: Dict[str, Callable[..., ZooEntry]] = {
    "sphere": sphere,
    "flat_torus": flat_torus,
    "ring_torus": ring_torus,
    "product_s2_s1": product_s2_s1,
    "warped_s2_over_s1": warped_s2_over_s1,
    "flat_t2_over_s1": flat_t2_over_s1,
    "torus_fiber_bundle": torus_fiber_bundle,
    "coupled_t2_over_s1": coupled_t2_over_s1,
    "sphere2_embedded": sphere2_embedded,
    "ring_torus_embedded": ring_torus_embedded,
}

SUBMERSIONS = ("product_s2_s1", "warped_s2_over_s1", "flat_t2_over_s1", "torus_fiber_bundle", "coupled_t2_over_s1")


def make(name: str, **params) -> ZooEntry:
    """Build a catalogue entry; parameters may be given as strings"""
    try:
        builder = CATALOGUE[name]
    except KeyError:
        raise ZooError(f"unknown zoo entry '{name}' (known: {', '.join(sorted(CATALOGUE))})") from None
    try:
        values = {key: float(value) for key, value in params.items()}
    except (TypeError, ValueError) as exc:
        raise ZooError(f"invalid parameter for {name}: {exc}") from None
    if "n" in values:
        values["n"] = int(values["n"])
    try:
        entry = builder(**values)
    except TypeError as exc:
        raise ZooError(f"invalid parameters for {name}: {exc}") from None
    logger.debug(f"built zoo entry {name} with {values}")
    return entry


def resolve(uri: str) -> ZooEntry:
    """Entry for a ``zoo:name?key=value&...`` URI"""
    parts = urlsplit(uri)
    if parts.scheme != "zoo":
        raise ZooError(f"not a zoo URI: {uri}")
    name = parts.path or parts.netloc
    return make(name, **dict(parse_qsl(parts.query, keep_blank_values=False, strict_parsing=False)))
