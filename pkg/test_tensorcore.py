"""Christoffel symbols, curvature tensors and their symmetries."""
import math

import numpy as np
import pytest

from lkengine.errors import InputError
from lkengine.geometry import zoo
from lkengine.geometry.metricfield import make_chart, metric_jet
from lkengine.geometry.tensorcore import (
    christoffel,
    curvature_bundle,
    restrict,
    riemann,
    scalar_curvature,
    sectional,
    symmetry_report,
)


def sphere_jet(theta, r=1.0):
    return metric_jet(zoo.sphere(r).atlas[0], np.array([theta, 0.4]))


def test_sphere_christoffel_symbols():
    theta = math.pi / 3
    _, upper = christoffel(sphere_jet(theta))
    assert upper[0, 1, 1] == pytest.approx(-math.sin(theta) * math.cos(theta))
    assert upper[1, 0, 1] == pytest.approx(math.cos(theta) / math.sin(theta))
    assert upper[1, 1, 0] == pytest.approx(upper[1, 0, 1])
    assert upper[0, 0, 0] == 0.0


def test_sphere_riemann_and_sectional():
    theta = math.pi / 3
    mj = sphere_jet(theta)
    R = riemann(mj, verify=True)
    assert R[0, 1, 0, 1] == pytest.approx(math.sin(theta) ** 2)
    assert R[1, 0, 0, 1] == pytest.approx(-math.sin(theta) ** 2)
    bundle = curvature_bundle(mj)
    assert float(sectional(bundle, mj.g, 0, 1)) == pytest.approx(1.0)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_sphere_curvature_scales_with_radius(r):
    mj = sphere_jet(1.1, r)
    bundle = curvature_bundle(mj)
    assert float(sectional(bundle, mj.g, 0, 1)) == pytest.approx(1.0 / r ** 2)
    assert float(scalar_curvature(bundle)) == pytest.approx(2.0 / r ** 2)


def test_ring_torus_gauss_curvature():
    R, r = 2.0, 1.0
    chart = zoo.ring_torus(R, r).atlas[0]
    t = np.linspace(0.1, 6.0, 7)
    points = np.stack([t, np.full_like(t, 0.3)], axis=-1)
    mj = metric_jet(chart, points)
    K = sectional(curvature_bundle(mj), mj.g, 0, 1)
    np.testing.assert_allclose(K, np.cos(t) / (r * (R + r * np.cos(t))), rtol=1e-12, atol=1e-14)


def test_flat_metric_has_no_curvature():
    mj = metric_jet(zoo.flat_torus().atlas[0], np.array([0.3, 0.2]))
    assert np.all(curvature_bundle(mj).riemann_lower == 0.0)


def test_symmetries_hold_on_random_jets(metric_jets):
    for n in (2, 3, 4):
        for mj in metric_jets(n, 10):
            report = symmetry_report(riemann(mj))
            assert report.relative <= 1e-12


def test_three_sphere_scalar_curvature():
    chart = zoo.sphere(1.0, 3).atlas[0]
    mj = metric_jet(chart, np.array([[0.7, 1.2, 0.3], [2.0, 0.4, 5.0]]))
    np.testing.assert_allclose(scalar_curvature(curvature_bundle(mj)), 6.0, rtol=1e-12)


def test_restrict_to_fiber_matches_sphere():
    total = zoo.product_s2_s1().submersion.total
    point = np.array([0.9, 1.0, 2.0])
    fiber = restrict(metric_jet(total, point), (0, 1))
    sphere = metric_jet(zoo.sphere().atlas[0], point[:2])
    np.testing.assert_allclose(fiber.g, sphere.g)
    np.testing.assert_allclose(fiber.dg, sphere.dg)
    np.testing.assert_allclose(fiber.ddg, sphere.ddg)


def test_sectional_needs_two_directions():
    mj = sphere_jet(1.0)
    with pytest.raises(InputError):
        sectional(curvature_bundle(mj), mj.g, 1, 1)


def test_bundle_follows_coordinate_relabeling(metric_jets, relabel, rng):
    for n in (2, 3, 4):
        for mj in metric_jets(n, 5):
            perm = rng.permutation(n)
            original = curvature_bundle(mj)
            permuted = curvature_bundle(relabel(mj, perm))
            np.testing.assert_allclose(permuted.gamma_upper, original.gamma_upper[np.ix_(perm, perm, perm)],
                                       rtol=1e-12, atol=1e-14)
            index = np.ix_(perm, perm, perm, perm)
            np.testing.assert_allclose(permuted.riemann_lower, original.riemann_lower[index], rtol=1e-12, atol=1e-14)
            np.testing.assert_allclose(permuted.riemann_mixed, original.riemann_mixed[index], rtol=1e-12, atol=1e-14)
            assert float(scalar_curvature(permuted)) == pytest.approx(float(scalar_curvature(original)), rel=1e-12,
                                                                      abs=1e-14)


def test_conformally_flat_curvature():
    # g = exp(2u) I with u = 0.3 sin(x0) cos(x1) + 0.1 x0, so laplacian(u) = -0.6 sin(x0) cos(x1)
    u = "0.3*sin(x0)*cos(x1) + 0.1*x0"
    chart = make_chart([[f"exp(2*({u}))", "0"], [f"exp(2*({u}))"]], [(0, 2 * math.pi), (0, 2 * math.pi)])
    points = np.random.default_rng(5).uniform(0.0, 2.0 * math.pi, size=(32, 2))
    mj = metric_jet(chart, points)
    K = sectional(curvature_bundle(mj), mj.g, 0, 1)
    x, y = points[:, 0], points[:, 1]
    u_values = 0.3 * np.sin(x) * np.cos(y) + 0.1 * x
    expected = -np.exp(-2.0 * u_values) * (-0.6 * np.sin(x) * np.cos(y))
    np.testing.assert_allclose(K, expected, rtol=1e-7, atol=1e-7)
