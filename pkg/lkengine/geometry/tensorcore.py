# lkengine/geometry/tensorcore.py
"""Christoffel symbols, Riemann tensor and sectional curvature from metric jets.

All functions accept arrays with a leading batch shape, so a whole
quadrature chunk is processed by one einsum per term.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from lkengine.errors import InputError, MetricError
from lkengine.geometry.blocklin import invert
from lkengine.geometry.metricfield import MetricJet

logger = logging.getLogger(__name__)

# Convention constants, fixed by calibration: the unit round sphere has
# sectional curvature +1 and Gauss-Bonnet gives V_0(S^2) = 2.
RIEMANN_FACTOR = 1.0
SECTIONAL_FACTOR = 1.0

CONVENTION = {
    "riemann": "R_pqrs = 1/2(d_q d_r g_ps + d_p d_s g_qr - d_q d_s g_pr - d_p d_r g_qs)"
               " + G_tqr G^t_ps - G_tqs G^t_pr",
    "riemann_factor": RIEMANN_FACTOR,
    "sectional": "K_pq = R_pqpq / (g_pp g_qq - g_pq^2)",
    "sectional_factor": SECTIONAL_FACTOR,
}

SYMMETRY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CurvatureBundle:
    g: np.ndarray
    g_inv: np.ndarray
    gamma_lower: np.ndarray
    gamma_upper: np.ndarray
    riemann_lower: np.ndarray
    riemann_mixed: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[-1]


def christoffel(mj: MetricJet, g_inv=None):
    """Gamma_pqr = 1/2(d_r g_pq + d_q g_pr - d_p g_qr) and Gamma^t_pq = g^ts Gamma_spq"""
    dg = mj.dg
    if g_inv is None:
        g_inv = invert(mj.g)
    gamma_lower = 0.5 * (np.moveaxis(dg, -3, -1) + np.swapaxes(dg, -3, -2) - dg)
    gamma_upper = np.einsum("...ts,...spq->...tpq", g_inv, gamma_lower)
    return gamma_lower, gamma_upper


def riemann(mj: MetricJet, gammas=None, verify: bool = False) -> np.ndarray:
    """Fully covariant Riemann tensor R_pqrs; R_0101 = sin^2(x0) on the unit sphere"""
    if gammas is None:
        gammas = christoffel(mj)
    gamma_lower, gamma_upper = gammas
    ddg = mj.ddg
    # paired so that each difference vanishes exactly when r == s
    second = 0.5 * (
        (np.einsum("...qrps->...pqrs", ddg) - np.einsum("...qspr->...pqrs", ddg))
        + (np.einsum("...psqr->...pqrs", ddg) - np.einsum("...prqs->...pqrs", ddg))
    )
    quadratic = (
        np.einsum("...tqr,...tps->...pqrs", gamma_lower, gamma_upper)
        - np.einsum("...tqs,...tpr->...pqrs", gamma_lower, gamma_upper)
    )
    tensor = RIEMANN_FACTOR * (second + quadratic)
    if verify:
        report = symmetry_report(tensor)
        if report.relative > SYMMETRY_TOLERANCE:
            raise MetricError(f"curvature tensor violates its symmetries by {report.relative:.3g}")
    return tensor


def raise_indices(riemann_lower: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """R^pq_rs = g^pa g^qb R_abrs"""
    return np.einsum("...pa,...qb,...abrs->...pqrs", g_inv, g_inv, riemann_lower, optimize=True)


def curvature_bundle(mj: MetricJet) -> CurvatureBundle:
    g_inv = invert(mj.g)
    gamma_lower, gamma_upper = christoffel(mj, g_inv)
    lower = riemann(mj, (gamma_lower, gamma_upper))
    return CurvatureBundle(mj.g, g_inv, gamma_lower, gamma_upper, lower, raise_indices(lower, g_inv))


def sectional(bundle: CurvatureBundle, g: np.ndarray, p: int, q: int) -> np.ndarray:
    """Sectional curvature of the coordinate plane spanned by d_p and d_q"""
    if p == q:
        raise InputError("sectional curvature needs two distinct coordinate directions")
    g = np.asarray(g)
    area = g[..., p, p] * g[..., q, q] - g[..., p, q] ** 2
    return SECTIONAL_FACTOR * bundle.riemann_lower[..., p, q, p, q] / area


def scalar_curvature(bundle: CurvatureBundle) -> np.ndarray:
    """Sc = sum over p, q of R^pq_pq (equals 2 on the unit 2-sphere)"""
    return np.einsum("...pqpq->...", bundle.riemann_mixed)


def restrict(mj: MetricJet, dims: Sequence[int]) -> MetricJet:
    """Metric jet of the coordinate submanifold spanned by ``dims``"""
    d = np.asarray(dims)
    g = mj.g[..., d[:, None], d[None, :]]
    dg = mj.dg[..., d, :, :][..., :, d[:, None], d[None, :]]
    ddg = mj.ddg[..., d[:, None], d[None, :], :, :][..., :, :, d[:, None], d[None, :]]
    return MetricJet(g, dg, ddg)


@dataclass(frozen=True)
class SymmetryReport:
    first_pair: float
    second_pair: float
    pair_exchange: float
    bianchi: float
    scale: float

    @property
    def max_violation(self) -> float:
        return max(self.first_pair, self.second_pair, self.pair_exchange, self.bianchi)

    @property
    def relative(self) -> float:
        return self.max_violation / max(1.0, self.scale)


def symmetry_report(riemann_lower: np.ndarray) -> SymmetryReport:
    """Largest violation of the antisymmetries, pair symmetry and first Bianchi identity"""
    R = np.asarray(riemann_lower)

    def worst(x):
        return float(np.max(np.abs(x))) if x.size else 0.0

    return SymmetryReport(
        first_pair=worst(R + np.einsum("...qprs->...pqrs", R)),
        second_pair=worst(R + np.einsum("...pqsr->...pqrs", R)),
        pair_exchange=worst(R - np.einsum("...rspq->...pqrs", R)),
        bianchi=worst(R + np.einsum("...prsq->...pqrs", R) + np.einsum("...psqr->...pqrs", R)),
        scale=worst(R),
    )
