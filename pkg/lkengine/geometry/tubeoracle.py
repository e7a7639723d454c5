# lkengine/geometry/tubeoracle.py
"""Monte-Carlo volumes of Euclidean eps-tubes around parametrized surfaces,
and the Steiner/Weyl tube polynomial they are checked against."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import special
from scipy.spatial import cKDTree

from lkengine.errors import InputError, ValidationError
from lkengine.geometry.metricfield import Chart, eval_jet2, evaluate, load_chart, parse_expr

logger = logging.getLogger(__name__)

MIN_SAMPLES = 100_000
PROJECTION_STEPS = 25


@dataclass(frozen=True)
class Embedding:
    """Parametrization R^n chart -> R^L by coordinate expressions"""
    ambient_dim: int
    chart: Chart
    coordinates: tuple
    reach: float
    lower: tuple
    upper: tuple
    name: str = ""

    def __post_init__(self):
        if len(self.coordinates) != self.ambient_dim:
            raise InputError(f"embedding needs {self.ambient_dim} coordinate functions, got {len(self.coordinates)}")
        if self.ambient_dim < self.chart.dim:
            raise InputError("ambient dimension is below the surface dimension")

    def box(self, eps: float):
        lower = np.asarray(self.lower, dtype=float) - eps
        upper = np.asarray(self.upper, dtype=float) + eps
        return lower, upper


@dataclass(frozen=True)
class TubeSettings:
    cloud_points: int = 1_000_000
    batch_size: int = 1_000_000

    @classmethod
    def from_config(cls, config) -> "TubeSettings":
        return cls(
            cloud_points=int(config.get("TUBE_CLOUD_POINTS", cls.cloud_points)),
            batch_size=int(config.get("TUBE_BATCH", cls.batch_size)),
        )


def load_embedding(data: Mapping) -> Embedding:
    """Embedding from {chart, coordinates, reach, lower, upper, name?}"""
    try:
        chart = load_chart(data["chart"])
        coordinates = tuple(parse_expr(str(text), chart.dim) for text in data["coordinates"])
        return Embedding(len(coordinates), chart, coordinates, float(data["reach"]),
                         tuple(float(v) for v in data["lower"]), tuple(float(v) for v in data["upper"]),
                         str(data.get("name", "")))
    except KeyError as exc:
        raise InputError(f"embedding is missing field {exc}") from None


def position(emb: Embedding, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    return np.stack([evaluate(c, params) for c in emb.coordinates], axis=-1)


def jacobian(emb: Embedding, params) -> np.ndarray:
    """(..., L, n) derivative of the parametrization"""
    return np.stack([eval_jet2(c, params).gradient for c in emb.coordinates], axis=-2)


def induced_metric(emb: Embedding, params) -> np.ndarray:
    """Pullback J^T J of the Euclidean metric"""
    J = jacobian(emb, params)
    return np.swapaxes(J, -1, -2) @ J


def check_immersion(emb: Embedding, sample_count: int = 256, seed: int = 0):
    """Full-rank Jacobian at seeded interior parameter points"""
    rng = np.random.default_rng(seed)
    chart = emb.chart
    span = chart.upper - chart.lower
    params = chart.lower + span * rng.uniform(0.01, 0.99, size=(sample_count, chart.dim))
    s = np.linalg.svd(jacobian(emb, params), compute_uv=False)
    ratio = s[..., -1] / np.maximum(s[..., 0], np.finfo(float).tiny)
    if np.any(ratio < 1e-8):
        raise ValidationError(f"degenerate Jacobian in embedding {emb.name or ''} (singular value ratio {ratio.min():.3g})")


@dataclass(frozen=True)
class SurfaceCloud:
    tree: cKDTree
    params: np.ndarray
    covering_radius: float


@lru_cache(maxsize=4)
def build_cloud(emb: Embedding, cloud_points: int) -> SurfaceCloud:
    """Dense parameter-grid samples of the surface, endpoints included.

    ``covering_radius`` bounds the distance from any surface point to the
    nearest cloud point: half a grid step per axis times the largest speed.
    """
    chart = emb.chart
    per_axis = max(2, int(math.ceil(cloud_points ** (1.0 / chart.dim))))
    axes = [np.linspace(a, b, per_axis) for a, b in chart.domain]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.dim)
    points = position(emb, mesh)
    J = jacobian(emb, mesh)
    speeds = np.max(np.linalg.norm(J, axis=-2), axis=0)
    steps = np.array([(b - a) / (per_axis - 1) for a, b in chart.domain])
    radius = 1.1 * float(np.sum(speeds * steps) / 2.0)
    logger.info(f"surface cloud for {emb.name}: {len(points)} points, covering radius {radius:.3g}")
    return SurfaceCloud(cKDTree(points), mesh, radius)


def _wrap(emb: Embedding, params: np.ndarray) -> np.ndarray:
    chart = emb.chart
    lower, upper = chart.lower, chart.upper
    span = upper - lower
    periodic = np.asarray(chart.periodic)
    wrapped = lower + np.mod(params - lower, span)
    return np.where(periodic, wrapped, np.clip(params, lower, upper))


def project_distance(emb: Embedding, targets: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Distance to the surface by damped Gauss-Newton from nearby parameters"""
    params = start.copy()
    n = emb.chart.dim
    damping = np.full(len(targets), 1e-3)
    best = np.linalg.norm(position(emb, params) - targets, axis=-1)
    for _ in range(PROJECTION_STEPS):
        jets = [eval_jet2(c, params) for c in emb.coordinates]
        residual = np.stack([jet.value for jet in jets], axis=-1) - targets
        J = np.stack([jet.gradient for jet in jets], axis=-2)
        gradient = np.einsum("sli,sl->si", J, residual)
        system = np.swapaxes(J, -1, -2) @ J + damping[:, None, None] * np.eye(n)
        step = np.linalg.solve(system, -gradient[..., None])[..., 0]
        trial = _wrap(emb, params + step)
        distance = np.linalg.norm(position(emb, trial) - targets, axis=-1)
        better = distance < best
        params = np.where(better[:, None], trial, params)
        best = np.where(better, distance, best)
        damping = np.where(better, np.maximum(damping * 0.3, 1e-12), damping * 10.0)
    return best


def _count_batch(emb: Embedding, eps: float, count: int, seed: int, index: int, cloud: SurfaceCloud) -> int:
    rng = np.random.default_rng([seed, index])
    lower, upper = emb.box(eps)
    samples = rng.uniform(lower, upper, size=(count, emb.ambient_dim))
    distance, nearest = cloud.tree.query(samples, k=1, distance_upper_bound=eps + cloud.covering_radius)
    inside = distance <= eps
    uncertain = np.isfinite(distance) & ~inside
    if np.any(uncertain):
        refined = project_distance(emb, samples[uncertain], cloud.params[nearest[uncertain]])
        inside[np.flatnonzero(uncertain)] = np.minimum(refined, distance[uncertain]) <= eps
    return int(np.count_nonzero(inside))


@dataclass
class TubeEstimate:
    estimate: float
    sigma: float
    eps: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "sigma": self.sigma, "eps": self.eps,
                "samples": self.samples, "seed": self.seed}


def tube_volume_mc(emb: Embedding, eps: float, samples: int, seed: int, settings: Optional[TubeSettings] = None,
                   pool=None) -> TubeEstimate:
    """Volume of the eps-neighbourhood from uniform samples of a bounding box.

    Batches use generators seeded with (seed, batch index), so the estimate
    depends only on (eps, samples, seed) and not on the worker count.
    """
    settings = settings or TubeSettings()
    if eps < 0.0:
        raise InputError(f"eps must be non-negative, got {eps}")
    if eps == 0.0:
        return TubeEstimate(0.0, 0.0, 0.0, int(samples), int(seed))
    if samples < MIN_SAMPLES:
        raise InputError(f"at least {MIN_SAMPLES} samples are required, got {samples}")
    if eps >= emb.reach:
        raise InputError(f"eps={eps} is not below the declared reach {emb.reach}")
    check_immersion(emb, seed=seed)
    cloud = build_cloud(emb, settings.cloud_points)
    batches = []
    remaining, index = int(samples), 0
    while remaining > 0:
        count = min(settings.batch_size, remaining)
        batches.append((index, count))
        remaining -= count
        index += 1

    def work(batch):
        return _count_batch(emb, eps, batch[1], seed, batch[0], cloud)

    counts = pool.map(work, batches) if pool is not None else [work(b) for b in batches]
    inside = sum(counts)
    lower, upper = emb.box(eps)
    box_volume = float(np.prod(upper - lower))
    p = inside / samples
    estimate = box_volume * p
    sigma = box_volume * math.sqrt(p * (1.0 - p) / samples)
    logger.info(f"tube volume {emb.name} eps={eps:.9g}: {estimate:.9g} +- {sigma:.3g}")
    return TubeEstimate(estimate, sigma, float(eps), int(samples), int(seed))


def unit_ball_volume(j: int) -> float:
    """kappa_j = pi^(j/2) / Gamma(j/2 + 1)"""
    return float(math.pi ** (j / 2.0) / special.gamma(j / 2.0 + 1.0))


def steiner_eval(volumes: Sequence[float], eps: float, L: int) -> float:
    """sum_i kappa_(L-i) V_i eps^(L-i) for intrinsic volumes V_0..V_n"""
    n = len(volumes) - 1
    if L < n:
        raise InputError(f"ambient dimension {L} is below the manifold dimension {n}")
    return math.fsum(unit_ball_volume(L - i) * v * eps ** (L - i) for i, v in enumerate(volumes))


@dataclass
class SteinerFit:
    indices: list
    coefficients: list
    sigmas: list
    intrinsic_volumes: list

    def as_dict(self) -> dict:
        return {f"V_{i}": v for i, v in zip(self.indices, self.intrinsic_volumes)}


def fit_steiner_coefficients(eps_values, volumes, sigmas, L: int, n: int) -> SteinerFit:
    """Weighted least squares for kappa_(L-i) V_i with only n - i even terms"""
    eps_values = np.asarray(eps_values, dtype=float)
    volumes = np.asarray(volumes, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    indices = [i for i in range(n + 1) if (n - i) % 2 == 0]
    if len(eps_values) < len(indices):
        raise InputError(f"need at least {len(indices)} eps values to fit {len(indices)} coefficients")
    design = np.stack([eps_values ** (L - i) for i in indices], axis=-1)
    weights = 1.0 / np.where(sigmas > 0.0, sigmas, 1.0)
    coefficients, *_ = np.linalg.lstsq(design * weights[:, None], volumes * weights, rcond=None)
    covariance = np.linalg.inv((design * weights[:, None]).T @ (design * weights[:, None]))
    errors = np.sqrt(np.diag(covariance))
    return SteinerFit(
        indices,
        coefficients.tolist(),
        errors.tolist(),
        [c / unit_ball_volume(L - i) for c, i in zip(coefficients, indices)],
    )
