# lkengine/geometry/submersion.py
"""Riemannian submersions in product charts and their fiber collapse.

The collapsed metric g(eps) multiplies g by eps on vertical vectors and keeps
it on horizontal ones. In chart coordinates, with W the inverse fiber block,

    g(eps)_FF = eps g_FF,  g(eps)_FB = eps g_FB,
    g(eps)_BB = g_BB - (1 - eps) g_BF W g_FB,

and all blocks are differentiated through matrix jets, since the horizontal
complement moves with the point.
"""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from lkengine.errors import ConvergenceError, InputError, ValidationError
from lkengine.geometry.blocklin import BlockSplit, MatrixJet, det, invert
from lkengine.geometry.metricfield import Chart, MetricJet, Var, load_chart, metric_jet, substitute
from lkengine.geometry.tensorcore import curvature_bundle, restrict, sectional
from lkengine.geometry.weylsum import LkSpec, compute_intrinsic_volume, lk_integrand

logger = logging.getLogger(__name__)

VALIDATION_TOLERANCE = 1e-8
DEFAULT_SCHEDULE = tuple(2.0 ** -k for k in range(2, 10))


@dataclass(frozen=True)
class SubmersionChart:
    split: BlockSplit
    total: Chart
    base: Chart
    name: str = ""

    def __post_init__(self):
        if self.total.dim != self.split.n:
            raise InputError(f"total chart has dim {self.total.dim}, split covers {self.split.n} coordinates")
        if self.base.dim != self.split.base_count:
            raise InputError(f"base chart has dim {self.base.dim}, split has {self.split.base_count} base coordinates")

    @property
    def fiber_dim(self) -> int:
        return self.split.fiber_count

    @property
    def base_dim(self) -> int:
        return self.split.base_count

    def project(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float)[..., list(self.split.base_dims)]

    def default_base_point(self) -> np.ndarray:
        return 0.5 * (self.base.lower + self.base.upper)


def load_submersion(data: Mapping) -> SubmersionChart:
    """Submersion from {total_chart, base_chart, fiber_dims, base_dims}"""
    try:
        split = BlockSplit(tuple(int(k) for k in data["fiber_dims"]), tuple(int(k) for k in data["base_dims"]))
        return SubmersionChart(split, load_chart(data["total_chart"]), load_chart(data["base_chart"]),
                               str(data.get("name", "")))
    except KeyError as exc:
        raise InputError(f"submersion is missing field {exc}") from None


def _blocks(sc: SubmersionChart):
    F, B = list(sc.split.fiber_dims), list(sc.split.base_dims)
    return F, B


# ---------------------------------------------------------------------------
# Horizontal lift and validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HorizontalLift:
    h: np.ndarray
    xi: np.ndarray


def horizontal_lift(sc: SubmersionChart, point, mj: Optional[MetricJet] = None) -> HorizontalLift:
    """h^i_a = -g~^ij g_ja and xi_a = d_a + h^i_a d_i"""
    F, B = _blocks(sc)
    g = (mj or metric_jet(sc.total, point)).g
    w = invert(g[..., F, :][..., :, F])
    h = -w @ g[..., F, :][..., :, B]
    xi = np.zeros(g.shape[:-2] + (sc.split.n, len(B)))
    xi[..., B, :] = np.eye(len(B))
    xi[..., F, :] = h
    return HorizontalLift(h, xi)


@dataclass
class ValidationReport:
    samples: int
    residual: float
    orthogonality: float
    coordinate_block_discrepancy: float
    tolerance: float = VALIDATION_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance and self.orthogonality <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "residual": self.residual,
            "orthogonality": self.orthogonality,
            "coordinate_block_discrepancy": self.coordinate_block_discrepancy,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def sample_points(chart: Chart, count: int, seed: int = 0) -> np.ndarray:
    """Seeded uniform interior points of a chart"""
    rng = np.random.default_rng(seed)
    return rng.uniform(chart.lower, chart.upper, size=(int(count), chart.dim))


def validate(sc: SubmersionChart, sample_count: int = 256, seed: int = 0) -> ValidationReport:
    """Check that d(pi) maps horizontal spaces isometrically onto the base.

    Compares <xi_a, xi_b>_g with the base metric at the projected point, the
    g-orthogonality of xi to the fiber, and reports how far the coordinate
    block g_BB is from the base metric (nonzero when the mixed block is).
    """
    points = sample_points(sc.total, sample_count, seed)
    F, B = _blocks(sc)
    mj = metric_jet(sc.total, points)
    lift = horizontal_lift(sc, points, mj)
    horizontal = np.swapaxes(lift.xi, -1, -2) @ mj.g @ lift.xi
    base_g = metric_jet(sc.base, sc.project(points)).g
    orthogonality = mj.g[..., F, :] @ lift.xi
    report = ValidationReport(
        samples=len(points),
        residual=float(np.max(np.abs(horizontal - base_g))),
        orthogonality=float(np.max(np.abs(orthogonality))),
        coordinate_block_discrepancy=float(np.max(np.abs(mj.g[..., B, :][..., :, B] - base_g))),
    )
    if report.passed:
        logger.info(f"submersion {sc.name} valid: residual {report.residual:.3g} over {report.samples} points")
    else:
        logger.warning(f"submersion {sc.name} invalid: residual {report.residual:.3g}, "
                       f"orthogonality {report.orthogonality:.3g}")
    return report


# ---------------------------------------------------------------------------
# Collapsed metric
# ---------------------------------------------------------------------------

def _assemble(n: int, F, B, ff: MatrixJet, fb: MatrixJet, bb: MatrixJet) -> MetricJet:
    batch = ff.value.shape[:-2]
    g = np.empty(batch + (n, n))
    dg = np.empty(batch + (n, n, n))
    ddg = np.empty(batch + (n, n, n, n))
    F, B = np.asarray(F), np.asarray(B)
    for rows, cols, jet in ((F, F, ff), (F, B, fb), (B, F, fb.T), (B, B, bb)):
        r, c = rows[:, None], cols[None, :]
        g[..., r, c] = jet.value
        dg[..., :, r, c] = jet.first
        ddg[..., :, :, r, c] = jet.second
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, -1, -2))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, -3, -4))
    return MetricJet(g, dg, ddg)


def _check_eps(eps: float):
    if not eps > 0.0:
        raise InputError(f"eps must be positive, got {eps}")


def scale_metric(sc: SubmersionChart, point, eps: float, mj: Optional[MetricJet] = None) -> MetricJet:
    """Jet of the fiber-collapsed metric g(eps) built from the vertical/horizontal split"""
    _check_eps(eps)
    F, B = _blocks(sc)
    G = MatrixJet.from_metric_jet(mj or metric_jet(sc.total, point))
    ff, fb, bb = G.block(F, F), G.block(F, B), G.block(B, B)
    schur = fb.T @ ff.inverse() @ fb
    return _assemble(sc.split.n, F, B, ff.scale(eps), fb.scale(eps), bb - schur.scale(1.0 - eps))


def scale_metric_naive(sc: SubmersionChart, point, eps: float, mj: Optional[MetricJet] = None) -> MetricJet:
    """Coordinate blocks scaled literally: eps on FF and FB, BB unchanged"""
    _check_eps(eps)
    F, B = _blocks(sc)
    G = MatrixJet.from_metric_jet(mj or metric_jet(sc.total, point))
    return _assemble(sc.split.n, F, B, G.block(F, F).scale(eps), G.block(F, B).scale(eps), G.block(B, B))


def lemma_discrepancy(sc: SubmersionChart, point, eps: float) -> float:
    """max |g(eps) - naive g(eps)|; zero exactly when the mixed block vanishes"""
    mj = metric_jet(sc.total, point)
    return float(np.max(np.abs(scale_metric(sc, point, eps, mj).g - scale_metric_naive(sc, point, eps, mj).g)))


def collapsed_metric(sc: SubmersionChart, eps: float, naive: bool = False):
    """Metric function for quadrature over the total chart"""
    _check_eps(eps)
    builder = scale_metric_naive if naive else scale_metric

    def metric_fn(chart, points):
        return builder(sc, points, eps)

    return metric_fn


def volume_scaling_check(sc: SubmersionChart, eps: float, sample_count: int = 256, seed: int = 0) -> float:
    """max relative deviation of dvol_M(eps)/dvol_M from eps^(N/2)"""
    points = sample_points(sc.total, sample_count, seed)
    mj = metric_jet(sc.total, points)
    scaled = scale_metric(sc, points, eps, mj)
    ratio = np.sqrt(det(scaled.g) / det(mj.g))
    return float(np.max(np.abs(ratio / eps ** (sc.fiber_dim / 2.0) - 1.0)))


# ---------------------------------------------------------------------------
# Fibers
# ---------------------------------------------------------------------------

def fiber_chart(sc: SubmersionChart, base_point=None) -> Chart:
    """Chart of the fiber over ``base_point`` with the induced metric"""
    F, B = _blocks(sc)
    x_b = sc.default_base_point() if base_point is None else np.asarray(base_point, dtype=float)
    mapping = {f: Var(k) for k, f in enumerate(F)}
    mapping.update({b: float(x_b[k]) for k, b in enumerate(B)})
    rows = tuple(
        tuple(substitute(sc.total.component(F[a], F[c]), mapping) for c in range(a, len(F)))
        for a in range(len(F))
    )
    return Chart(len(F), tuple(sc.total.domain[f] for f in F), tuple(sc.total.periodic[f] for f in F), rows)


def fiber_euler(sc: SubmersionChart, base_point=None, settings=None, pool=None) -> int:
    """Euler characteristic of one fiber by Gauss-Bonnet; 0 for odd fibers"""
    if sc.fiber_dim % 2:
        return 0
    value = compute_intrinsic_volume(fiber_chart(sc, base_point), 0, settings=settings, pool=pool).value
    nearest = round(value)
    if abs(value - nearest) > 0.1:
        raise ValidationError(f"fiber Gauss-Bonnet integral {value:.6f} is not an integer")
    return int(nearest)


# ---------------------------------------------------------------------------
# Collapse sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepRecord:
    i: int
    eps_list: list
    values: list
    errors: list = field(default_factory=list)
    extrapolated_limit: float = float("nan")
    target: float = float("nan")
    slope: Optional[float] = None
    chi_fiber: int = 0
    base_volume: float = 0.0
    cancelled: bool = False

    @property
    def abs_error(self) -> float:
        return abs(self.extrapolated_limit - self.target)

    @property
    def passed(self) -> bool:
        tolerance = max(1e-3, 1e-2 * abs(self.target))
        return math.isfinite(self.extrapolated_limit) and self.abs_error <= tolerance

    def summary(self) -> dict:
        return {
            "i": self.i,
            "target": self.target,
            "extrapolated": self.extrapolated_limit,
            "slope": self.slope,
            "chi_fiber": self.chi_fiber,
            "base_volume": self.base_volume,
            "pass": self.passed,
            "cancelled": self.cancelled,
        }


def check_schedule(eps_schedule: Sequence[float], minimum: int = 4) -> tuple:
    schedule = tuple(float(e) for e in eps_schedule)
    if len(schedule) < minimum:
        raise InputError(f"an eps schedule needs at least {minimum} points, got {len(schedule)}")
    if any(not e > 0.0 for e in schedule):
        raise InputError("eps values must be positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise InputError("eps schedule must be strictly decreasing")
    return schedule


def richardson(eps_list: Sequence[float], values: Sequence[float]) -> float:
    """Limit from the two smallest eps under a first-order error model"""
    if len(values) < 2:
        return float(values[-1]) if values else float("nan")
    e0, e1 = eps_list[-2], eps_list[-1]
    v0, v1 = values[-2], values[-1]
    return (e0 * v1 - e1 * v0) / (e0 - e1)


def fit_slope(eps_list, deviations, floor: float) -> Optional[float]:
    """Log-log slope of deviations above ``floor``; None with fewer than two"""
    pairs = [(e, d) for e, d in zip(eps_list, deviations) if d > floor]
    if len(pairs) < 2:
        return None
    x = np.log([e for e, _ in pairs])
    y = np.log([d for _, d in pairs])
    return float(np.polyfit(x, y, 1)[0])


def sweep_target(sc: SubmersionChart, i: int, settings=None, pool=None):
    """chi(Z) * V_i(B), with V_i(B) = 0 above the base dimension"""
    chi = fiber_euler(sc, settings=settings, pool=pool)
    if chi == 0 or i > sc.base_dim:
        return chi, 0.0, 0.0
    base_volume = compute_intrinsic_volume(sc.base, i, settings=settings, pool=pool).value
    return chi, base_volume, chi * base_volume


def collapse_sweep(sc: SubmersionChart, i: int, eps_schedule: Sequence[float] = DEFAULT_SCHEDULE,
                   settings=None, pool=None, cancel: Optional[threading.Event] = None,
                   validation_samples: int = 64) -> SweepRecord:
    """V_i(M(eps)) along a decreasing eps schedule, extrapolated to eps -> 0.

    Refuses submersions that fail validate(). A set ``cancel`` event stops the
    sweep between eps points and returns the partial record.
    """
    schedule = check_schedule(eps_schedule)
    n = sc.split.n
    if not 0 <= i <= n:
        raise InputError(f"intrinsic volume index must satisfy 0 <= i <= {n}, got {i}")
    report = validate(sc, validation_samples)
    if not report.passed:
        raise ValidationError(f"refusing to sweep an invalid submersion (residual {report.residual:.3g})")
    chi, base_volume, target = sweep_target(sc, i, settings, pool)
    record = SweepRecord(i, [], [], [], target=target, chi_fiber=chi, base_volume=base_volume)
    for eps in schedule:
        if cancel is not None and cancel.is_set():
            logger.info(f"sweep cancelled before eps={eps:.9g}")
            record.cancelled = True
            break
        try:
            result = compute_intrinsic_volume(sc.total, i, collapsed_metric(sc, eps), settings, pool)
        except ConvergenceError as exc:
            raise ConvergenceError(str(exc), eps=eps, delta=exc.delta) from exc
        record.eps_list.append(eps)
        record.values.append(result.value)
        record.errors.append(result.error_estimate)
        logger.info(f"V_{i} at eps={eps:.9g}: {result.value:.12g}")
    if not record.values:
        return record
    record.extrapolated_limit = richardson(record.eps_list, record.values)
    floor = max(1e-11 * max(1.0, abs(record.extrapolated_limit)), 2.0 * max(record.errors))
    residuals = [abs(v - record.extrapolated_limit) for v in record.values]
    record.slope = fit_slope(record.eps_list, residuals, floor)
    if record.slope is None and any(r > floor for r in residuals):
        logger.warning("too few usable points to fit a convergence slope")
    if not record.passed:
        logger.warning(f"sweep limit {record.extrapolated_limit:.9g} misses target {record.target:.9g}")
    return record


# ---------------------------------------------------------------------------
# Curvature asymptotics
# ---------------------------------------------------------------------------

@dataclass
class CurvatureLimitReport:
    eps_list: list
    base_deviation: list
    fiber_deviation: list
    base_slope: Optional[float]
    fiber_slope: Optional[float]


DEVIATION_FLOOR = 1e-12


def base_curvature(sc: SubmersionChart, point) -> np.ndarray:
    """R^ab_cd of the base metric at the projected point"""
    x_b = sc.project(point)
    if sc.base_dim < 2:
        b = sc.base_dim
        return np.zeros(np.shape(x_b)[:-1] + (b, b, b, b))
    return curvature_bundle(metric_jet(sc.base, x_b)).riemann_mixed


def fiber_curvature(sc: SubmersionChart, point, mj: Optional[MetricJet] = None) -> np.ndarray:
    """R^mn_kl of the fiber through the point, with its induced metric"""
    F, _ = _blocks(sc)
    if len(F) < 2:
        return np.zeros(np.shape(point)[:-1] + (len(F),) * 4)
    return curvature_bundle(restrict(mj or metric_jet(sc.total, point), F)).riemann_mixed


def _sub(tensor: np.ndarray, dims) -> np.ndarray:
    d = np.asarray(dims)
    return tensor[..., d[:, None, None, None], d[None, :, None, None], d[None, None, :, None], d[None, None, None, :]]


def curvature_limit_check(sc: SubmersionChart, point, eps_schedule: Sequence[float] = DEFAULT_SCHEDULE
                          ) -> CurvatureLimitReport:
    """Deviations of R^ab_cd(eps) from the base curvature and of eps*R^mn_kl(eps)
    from the fiber curvature, with their fitted decay slopes"""
    schedule = check_schedule(eps_schedule, minimum=2)
    F, B = _blocks(sc)
    mj = metric_jet(sc.total, point)
    base = base_curvature(sc, point)
    fiber = fiber_curvature(sc, point, mj)
    base_dev, fiber_dev = [], []
    for eps in schedule:
        mixed = curvature_bundle(scale_metric(sc, point, eps, mj)).riemann_mixed
        base_dev.append(float(np.max(np.abs(_sub(mixed, B) - base))))
        fiber_dev.append(float(np.max(np.abs(eps * _sub(mixed, F) - fiber))))
    return CurvatureLimitReport(
        list(schedule), base_dev, fiber_dev,
        fit_slope(schedule, base_dev, DEVIATION_FLOOR),
        fit_slope(schedule, fiber_dev, DEVIATION_FLOOR),
    )


@dataclass
class SupremumReport:
    e: int
    eps_list: list
    suprema: list

    @property
    def growth_ratio(self) -> float:
        """sup at the smallest eps over sup at the middle of the schedule"""
        middle = self.suprema[len(self.suprema) // 2]
        if middle == 0.0:
            return 1.0 if self.suprema[-1] == 0.0 else math.inf
        return self.suprema[-1] / middle

    @property
    def bounded(self) -> bool:
        return self.growth_ratio <= 2.0


def scaled_integrand_suprema(sc: SubmersionChart, eps_schedule: Sequence[float] = DEFAULT_SCHEDULE, e: int = 2,
                             sample_count: int = 64, seed: int = 0) -> SupremumReport:
    """sup over sample points of |eps^(N/2) * coupling sum of g(eps)| per eps"""
    schedule = check_schedule(eps_schedule, minimum=2)
    spec = LkSpec(sc.split.n, e)
    points = sample_points(sc.total, sample_count, seed)
    mj = metric_jet(sc.total, points)
    suprema = []
    for eps in schedule:
        bundle = curvature_bundle(scale_metric(sc, points, eps, mj))
        suprema.append(float(np.max(np.abs(eps ** (sc.fiber_dim / 2.0) * lk_integrand(bundle, spec)))))
    return SupremumReport(e, list(schedule), suprema)


@dataclass
class FactorizedLimitReport:
    e: int
    eps_list: list
    values: list
    limit: float
    slope: Optional[float]

    @property
    def deviations(self) -> list:
        return [abs(v - self.limit) for v in self.values]


def factorized_limit_check(sc: SubmersionChart, point, e: int,
                           eps_schedule: Sequence[float] = DEFAULT_SCHEDULE) -> FactorizedLimitReport:
    """eps^(N/2) times the degree-e coupling sum of g(eps) against the product
    of the base sum of degree e - N and the fiber sum of degree N"""
    schedule = check_schedule(eps_schedule, minimum=2)
    N = sc.fiber_dim
    mj = metric_jet(sc.total, point)
    spec = LkSpec(sc.split.n, e)
    values = []
    for eps in schedule:
        bundle = curvature_bundle(scale_metric(sc, point, eps, mj))
        values.append(float(eps ** (N / 2.0) * lk_integrand(bundle, spec)))
    if N % 2 or e < N or e - N > sc.base_dim:
        limit = 0.0
    else:
        F, _ = _blocks(sc)
        fiber_sum = 1.0
        if N:
            fiber_sum = float(lk_integrand(curvature_bundle(restrict(mj, F)), LkSpec(N, N)))
        base_sum = 1.0
        if e - N:
            base_sum = float(lk_integrand(curvature_bundle(metric_jet(sc.base, sc.project(point))),
                                          LkSpec(sc.base_dim, e - N)))
        limit = base_sum * fiber_sum
    deviations = [abs(v - limit) for v in values]
    return FactorizedLimitReport(e, list(schedule), values, limit, fit_slope(schedule, deviations, DEVIATION_FLOOR))


# Predicted exponents of max |R^..(eps)| for the four index classes.
CURVATURE_CLASSES = {
    "base-base/base-base": 0,
    "base-base/fiber-any": 1,
    "fiber-base/any": 0,
    "fiber-fiber/any": -1,
}


@dataclass
class CurvatureOrderReport:
    eps_list: list
    magnitudes: dict
    exponents: dict

    def consistent(self, tolerance: float = 0.2) -> bool:
        """Every fitted exponent decays at least as fast as predicted"""
        return all(
            exponent is None or exponent >= CURVATURE_CLASSES[name] - tolerance
            for name, exponent in self.exponents.items()
        )


def curvature_orders(sc: SubmersionChart, point, eps_schedule: Sequence[float] = DEFAULT_SCHEDULE
                     ) -> CurvatureOrderReport:
    """Fitted eps-exponents of the collapsed curvature by index class"""
    schedule = check_schedule(eps_schedule, minimum=2)
    F, B = _blocks(sc)
    n = sc.split.n
    is_fiber = np.zeros(n, dtype=bool)
    is_fiber[F] = True
    up = is_fiber[:, None].astype(int) + is_fiber[None, :].astype(int)
    low_has_fiber = (is_fiber[:, None] | is_fiber[None, :])
    masks = {
        "base-base/base-base": (up == 0)[:, :, None, None] & ~low_has_fiber[None, None, :, :],
        "base-base/fiber-any": (up == 0)[:, :, None, None] & low_has_fiber[None, None, :, :],
        "fiber-base/any": np.broadcast_to((up == 1)[:, :, None, None], (n,) * 4),
        "fiber-fiber/any": np.broadcast_to((up == 2)[:, :, None, None], (n,) * 4),
    }
    mj = metric_jet(sc.total, point)
    magnitudes = {name: [] for name in masks}
    for eps in schedule:
        mixed = curvature_bundle(scale_metric(sc, point, eps, mj)).riemann_mixed
        for name, mask in masks.items():
            magnitudes[name].append(float(np.max(np.abs(mixed[mask]))) if mask.any() else 0.0)
    exponents = {name: fit_slope(schedule, values, DEVIATION_FLOOR) for name, values in magnitudes.items()}
    return CurvatureOrderReport(list(schedule), magnitudes, exponents)


# ---------------------------------------------------------------------------
# Sectional curvature sweep
# ---------------------------------------------------------------------------

SECTIONAL_CLASSES = ("base-base", "base-fiber", "fiber-fiber")


@dataclass
class SectionalReport:
    eps_list: list
    minima: dict
    scaled_fiber_minima: list
    fiber_min: Optional[float]
    scaled_fiber_limit: Optional[float]
    tolerance: float = 1e-6

    @property
    def bounded_below(self) -> bool:
        """Whether min K stays bounded as eps -> 0 (fiber curvature >= 0)"""
        if self.scaled_fiber_limit is None:
            return True
        return self.scaled_fiber_limit >= -self.tolerance

    def rows(self):
        for k, eps in enumerate(self.eps_list):
            for name in SECTIONAL_CLASSES:
                if name in self.minima:
                    yield eps, name, self.minima[name][k]


def _pairs(sc: SubmersionChart):
    F, B = _blocks(sc)
    return {
        "base-base": [(a, b) for k, a in enumerate(B) for b in B[k + 1:]],
        "base-fiber": [(a, i) for a in B for i in F],
        "fiber-fiber": [(i, j) for k, i in enumerate(F) for j in F[k + 1:]],
    }


def sectional_sweep(sc: SubmersionChart, eps_schedule: Sequence[float] = DEFAULT_SCHEDULE,
                    sample_count: int = 256, seed: int = 0) -> SectionalReport:
    """Per-class minima of coordinate-plane sectional curvature of g(eps)"""
    schedule = check_schedule(eps_schedule, minimum=2)
    points = sample_points(sc.total, sample_count, seed)
    mj = metric_jet(sc.total, points)
    pairs = {name: plist for name, plist in _pairs(sc).items() if plist}
    minima = {name: [] for name in pairs}
    for eps in schedule:
        scaled = scale_metric(sc, points, eps, mj)
        bundle = curvature_bundle(scaled)
        for name, plist in pairs.items():
            minima[name].append(float(min(np.min(sectional(bundle, scaled.g, p, q)) for p, q in plist)))
    scaled_fiber = []
    fiber_min = None
    extrapolated = None
    if "fiber-fiber" in minima:
        scaled_fiber = [eps * k for eps, k in zip(schedule, minima["fiber-fiber"])]
        extrapolated = richardson(schedule, scaled_fiber)
        F, _ = _blocks(sc)
        fiber_jet = restrict(mj, F)
        fiber_bundle = curvature_bundle(fiber_jet)
        fiber_pairs = [(a, b) for a in range(len(F)) for b in range(a + 1, len(F))]
        fiber_min = float(min(np.min(sectional(fiber_bundle, fiber_jet.g, a, b)) for a, b in fiber_pairs))
    for eps, values in zip(schedule, zip(*minima.values())):
        logger.debug(f"eps={eps:.9g} minima {values}")
    return SectionalReport(list(schedule), minima, scaled_fiber, fiber_min, extrapolated)
