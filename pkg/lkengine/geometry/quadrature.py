# lkengine/geometry/quadrature.py
"""Deterministic tensor-product quadrature over chart atlases.

Non-periodic axes use open Gauss-Legendre rules (scipy), periodic axes the
shifted uniform trapezoid rule; neither samples a coordinate endpoint, so
polar singularities of sqrt(det g) are never evaluated. Nodes are processed
in fixed-size chunks and the per-node contributions reduced with math.fsum
in node order, which makes the result independent of the worker count.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from lkengine.errors import ConvergenceError, MetricError
from lkengine.geometry.metricfield import Chart, MetricJet, evaluate, metric_jet

logger = logging.getLogger(__name__)

DEFAULT_MAX_NODES = 2 ** 21


@dataclass(frozen=True)
class QuadratureSettings:
    base_order: int = 12
    abs_tol: float = 1e-8
    rel_tol: float = 1e-7
    max_nodes: int = DEFAULT_MAX_NODES
    chunk_size: int = 4096

    @classmethod
    def from_config(cls, config) -> "QuadratureSettings":
        return cls(
            base_order=int(config.get("QUADRATURE_BASE_ORDER", cls.base_order)),
            abs_tol=float(config.get("QUADRATURE_ABS_TOL", cls.abs_tol)),
            rel_tol=float(config.get("QUADRATURE_REL_TOL", cls.rel_tol)),
            max_nodes=int(config.get("LK_MAX_NODES", cls.max_nodes)),
            chunk_size=int(config.get("QUADRATURE_CHUNK", cls.chunk_size)),
        )

    @classmethod
    def from_env(cls) -> "QuadratureSettings":
        return cls(max_nodes=int(os.environ.get("LK_MAX_NODES", DEFAULT_MAX_NODES)))

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


def axis_rule(a: float, b: float, order: int, periodic: bool):
    """Nodes and weights on [a, b] for one coordinate axis"""
    if periodic:
        h = (b - a) / order
        nodes = a + (np.arange(order) + 0.5) * h
        return nodes, np.full(order, h)
    x, w = special.roots_legendre(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor product of per-axis rules, addressed by flat node index"""
    axes: tuple
    orders: tuple

    @property
    def size(self) -> int:
        return int(np.prod(self.orders))

    @property
    def dim(self) -> int:
        return len(self.orders)

    def nodes(self, start: int = 0, stop: Optional[int] = None):
        """Points (k, n) and product weights (k,) for flat indices [start, stop)"""
        stop = self.size if stop is None else min(stop, self.size)
        flat = np.arange(start, stop)
        index = np.unravel_index(flat, self.orders)
        points = np.stack([self.axes[d][0][index[d]] for d in range(self.dim)], axis=-1)
        weights = np.ones(len(flat))
        for d in range(self.dim):
            weights = weights * self.axes[d][1][index[d]]
        return points, weights

    def chunks(self, chunk_size: int):
        return [(start, min(start + chunk_size, self.size)) for start in range(0, self.size, chunk_size)]

    def measure(self) -> float:
        return math.prod(math.fsum(w) for _, w in self.axes)


def build_grid(chart: Chart, order) -> QuadratureGrid:
    orders = tuple([int(order)] * chart.dim) if np.isscalar(order) else tuple(int(o) for o in order)
    axes = tuple(
        axis_rule(a, b, m, periodic)
        for (a, b), m, periodic in zip(chart.domain, orders, chart.periodic)
    )
    return QuadratureGrid(axes, orders)


MetricFn = Callable[[Chart, np.ndarray], MetricJet]
FieldFn = Callable[[Chart, np.ndarray, MetricJet], np.ndarray]


def default_metric(chart: Chart, points: np.ndarray) -> MetricJet:
    return metric_jet(chart, points)


def volume_element(mj: MetricJet, points=None) -> np.ndarray:
    det = np.linalg.det(mj.g)
    if np.any(~(det > 0.0)):
        where = ""
        if points is not None:
            where = f" at {np.asarray(points)[np.argmin(np.where(np.isnan(det), -np.inf, det))].tolist()}"
        raise MetricError(f"non-positive det g{where}")
    return np.sqrt(det)


@dataclass
class ChartIntegral:
    value: float
    error_estimate: float
    order: int
    nodes: int


@dataclass
class QuadratureResult:
    value: float
    error_estimate: float
    charts: list = field(default_factory=list)

    def __float__(self):
        return float(self.value)


def _contributions(chart, grid, span, field_fn, metric_fn):
    points, weights = grid.nodes(*span)
    mj = metric_fn(chart, points)
    values = np.asarray(field_fn(chart, points, mj), dtype=float) * weights * volume_element(mj, points)
    if chart.weight is not None:
        values = values * evaluate(chart.weight, points)
    return values


def integrate_chart(chart: Chart, field_fn: FieldFn, order: int, metric_fn: MetricFn = default_metric,
                    chunk_size: int = 4096, pool=None) -> float:
    """Integral over one chart at a fixed per-axis order"""
    grid = build_grid(chart, order)

    def work(span):
        return _contributions(chart, grid, span, field_fn, metric_fn)

    mapper = pool.map if pool is not None else (lambda fn, items: [fn(item) for item in items])
    parts = mapper(work, grid.chunks(chunk_size))
    return math.fsum(np.concatenate(parts).tolist()) if parts else 0.0


def integrate(atlas, field_fn: FieldFn, metric_fn: Optional[MetricFn] = None,
              settings: Optional[QuadratureSettings] = None, pool=None) -> QuadratureResult:
    """Integrate ``field_fn * chart weight`` against the Riemannian volume over an atlas.

    Each chart doubles its per-axis order from ``settings.base_order`` until
    successive values differ by at most max(abs_tol, rel_tol*|value|).

    Raises:
        ConvergenceError: when the next doubling would exceed ``settings.max_nodes``
    """
    settings = settings or QuadratureSettings.from_env()
    metric_fn = metric_fn or default_metric
    atlas = as_atlas(atlas)
    result = QuadratureResult(0.0, 0.0)
    values = []
    for index, chart in enumerate(atlas):
        order = settings.base_order
        previous = integrate_chart(chart, field_fn, order, metric_fn, settings.chunk_size, pool)
        delta = None
        while True:
            nxt = 2 * order
            if nxt ** chart.dim > settings.max_nodes:
                last = "n/a" if delta is None else f"{delta:.3g}"
                raise ConvergenceError(
                    f"quadrature on chart {index} did not converge below {settings.max_nodes} nodes "
                    f"(last change {last})",
                    delta=delta,
                )
            current = integrate_chart(chart, field_fn, nxt, metric_fn, settings.chunk_size, pool)
            delta = abs(current - previous)
            logger.debug(f"chart {index} order {order} -> {nxt}: value {current:.12g} delta {delta:.3g}")
            order, previous = nxt, current
            if delta <= settings.tolerance(current):
                break
        logger.info(f"chart {index} converged at order {order} ({order ** chart.dim} nodes), value {previous:.12g}")
        result.charts.append(ChartIntegral(previous, delta, order, order ** chart.dim))
        values.append(previous)
    result.value = math.fsum(values)
    result.error_estimate = math.fsum(c.error_estimate for c in result.charts)
    return result


def as_atlas(manifold) -> tuple:
    """Accept a Chart, a sequence of charts, or an object with an ``atlas`` attribute"""
    if isinstance(manifold, Chart):
        return (manifold,)
    atlas = getattr(manifold, "atlas", None)
    if atlas is not None:
        return tuple(atlas)
    return tuple(manifold)


def _one(chart, points, mj):
    return np.ones(points.shape[0])


def volume(manifold, metric_fn: Optional[MetricFn] = None, settings=None, pool=None) -> float:
    """Riemannian volume of an atlas"""
    return integrate(manifold, _one, metric_fn, settings, pool).value

