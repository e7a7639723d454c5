"""Tube volumes by Monte Carlo and the Steiner polynomial."""
import math

import numpy as np
import pytest

from lkengine.errors import InputError, ValidationError
from lkengine.extensions import WorkerPool
from lkengine.geometry import zoo
from lkengine.geometry.metricfield import chart_to_dict, make_chart, parse_expr
from lkengine.geometry.tubeoracle import (
    Embedding,
    TubeSettings,
    check_immersion,
    fit_steiner_coefficients,
    induced_metric,
    load_embedding,
    steiner_eval,
    tube_volume_mc,
    unit_ball_volume,
)

SMALL = TubeSettings(cloud_points=40_000, batch_size=50_000)


def test_unit_ball_volumes():
    assert unit_ball_volume(0) == pytest.approx(1.0)
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_steiner_polynomial_of_the_sphere():
    assert steiner_eval([2.0, 0.0, 4.0 * math.pi], 0.1, 3) == pytest.approx(2.52165, abs=1e-5)
    entry = zoo.make("sphere2_embedded")
    assert steiner_eval([2.0, 0.0, 4.0 * math.pi], 0.1, 3) == pytest.approx(entry.reference("tube_0.1"))
    with pytest.raises(InputError):
        steiner_eval([1.0, 0.0, 1.0, 0.0], 0.1, 2)


def test_fit_recovers_synthetic_coefficients():
    volumes = [2.0, 0.0, 4.0 * math.pi]
    eps = [0.05, 0.1, 0.15, 0.2, 0.25]
    values = [steiner_eval(volumes, e, 3) for e in eps]
    fit = fit_steiner_coefficients(eps, values, [1e-3] * len(eps), 3, 2)
    assert fit.indices == [0, 2]
    assert fit.intrinsic_volumes[0] == pytest.approx(2.0, rel=1e-8)
    assert fit.intrinsic_volumes[1] == pytest.approx(4.0 * math.pi, rel=1e-8)
    assert fit.as_dict() == {"V_0": fit.intrinsic_volumes[0], "V_2": fit.intrinsic_volumes[1]}
    with pytest.raises(InputError):
        fit_steiner_coefficients([0.1], [1.0], [0.1], 3, 2)


def test_sphere_tube_estimate_is_within_noise():
    emb = zoo.make("sphere2_embedded").embedding
    result = tube_volume_mc(emb, 0.1, 200_000, 42, SMALL)
    assert abs(result.estimate - 2.52165) <= 4.0 * result.sigma
    assert 0.005 < result.sigma < 0.02
    assert result.to_dict()["seed"] == 42


def test_estimate_does_not_depend_on_worker_count():
    emb = zoo.make("sphere2_embedded").embedding
    serial = tube_volume_mc(emb, 0.1, 150_000, 5, SMALL, WorkerPool(1))
    threaded = tube_volume_mc(emb, 0.1, 150_000, 5, SMALL, WorkerPool(4))
    assert serial.estimate == threaded.estimate
    assert serial.sigma == threaded.sigma


def test_eps_edge_cases():
    emb = zoo.make("ring_torus_embedded").embedding
    assert tube_volume_mc(emb, 0.0, 10, 0).estimate == 0.0
    with pytest.raises(InputError):
        tube_volume_mc(emb, -0.1, 200_000, 0, SMALL)
    with pytest.raises(InputError):
        tube_volume_mc(emb, 1.0, 200_000, 0, SMALL)
    with pytest.raises(InputError):
        tube_volume_mc(emb, 0.1, 1_000, 0, SMALL)


def test_induced_metric_matches_the_chart():
    entry = zoo.make("ring_torus_embedded", R=3.0, r=1.0)
    params = np.array([[0.3, 1.0], [2.5, 4.0]])
    expected = np.array([np.diag([1.0, (3.0 + math.cos(t)) ** 2]) for t in params[:, 0]])
    np.testing.assert_allclose(induced_metric(entry.embedding, params), expected, atol=1e-12)


def test_degenerate_immersion_is_refused():
    chart = make_chart([["1", "0"], ["1"]], [(0, 1), (0, 1)])
    coordinates = tuple(parse_expr(text, 2) for text in ("x0", "x0^2", "sin(x0)"))
    emb = Embedding(3, chart, coordinates, reach=0.5, lower=(0, 0, 0), upper=(1, 1, 1), name="line")
    with pytest.raises(ValidationError):
        check_immersion(emb)


def test_load_embedding():
    entry = zoo.make("sphere2_embedded", r=2.0)
    emb = entry.embedding
    data = {"chart": chart_to_dict(emb.chart), "coordinates": ["2*sin(x0)*cos(x1)", "2*sin(x0)*sin(x1)", "2*cos(x0)"],
            "reach": 2.0, "lower": [-2, -2, -2], "upper": [2, 2, 2]}
    loaded = load_embedding(data)
    assert loaded.ambient_dim == 3 and loaded.reach == 2.0
    np.testing.assert_allclose(induced_metric(loaded, np.array([0.7, 0.2])), induced_metric(emb, np.array([0.7, 0.2])))
    del data["reach"]
    with pytest.raises(InputError):
        load_embedding(data)
