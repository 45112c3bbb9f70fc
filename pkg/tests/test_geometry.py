from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenpath import geometry as geo
from greenpath.errors import DimensionError, DomainError

DOMAINS = [
    geo.free_space(2), geo.half_space(1), geo.half_space(3), geo.unit_strip(1), geo.unit_strip(3),
    geo.unit_box(2), geo.unit_box(3), geo.ball(2, 1.5), geo.ball(3, 1.0), geo.ball_exterior(3, 1.0), geo.quadrant(),
]
BOUNDED_OR_WALLED = [d for d in DOMAINS if d.kind != "free"]

coord = st.floats(-3, 3, allow_nan=False)


def test_contains_examples():
    assert geo.contains(geo.ball(3, 1.0), [0.5, 0, 0])
    assert not geo.contains(geo.half_space(2), [0.3, -0.1])
    assert geo.contains(geo.quadrant(), [1, 1])
    assert geo.contains(geo.ball(3, 1.0), [1.0, 0, 0])  # closed domain
    assert not geo.contains(geo.ball_exterior(3, 1.0), [0.2, 0, 0])


def test_distance_examples():
    assert geo.distance_to_boundary(geo.ball(3, 1.0), [0, 0, 0]) == 1.0
    assert geo.distance_to_boundary(geo.half_space(4), [9, -2, 1, 0.3]) == pytest.approx(0.3, abs=1e-15)
    assert geo.distance_to_boundary(geo.unit_strip(1), [0.7]) == pytest.approx(0.3, abs=1e-15)
    assert geo.distance_to_boundary(geo.ball_exterior(3, 1.0), [0, 3, 0]) == pytest.approx(2.0)
    assert geo.distance_to_boundary(geo.free_space(2), [1, 2]) == np.inf


def test_distance_outside_raises():
    with pytest.raises(DomainError):
        geo.distance_to_boundary(geo.ball(3, 1.0), [2, 0, 0])


def test_normal_examples():
    np.testing.assert_array_equal(geo.boundary_normal(geo.ball(3, 1.0), [1, 0, 0]), [1, 0, 0])
    np.testing.assert_array_equal(geo.boundary_normal(geo.half_space(2), [5, 0]), [0, -1])
    np.testing.assert_array_equal(geo.boundary_normal(geo.quadrant(), [2, 0]), [0, -1])
    np.testing.assert_array_equal(geo.boundary_normal(geo.ball_exterior(3, 1.0), [0, 1, 0]), [0, -1, 0])
    np.testing.assert_array_equal(geo.boundary_normal(geo.unit_strip(2), [3, 1]), [0, 1])


@pytest.mark.parametrize("dom,p", [(geo.quadrant(), [0, 0]), (geo.unit_box(2), [1, 1]), (geo.unit_box(3), [0, 0.5, 1])])
def test_normal_undefined_at_corners(dom, p):
    with pytest.raises(DomainError):
        dom.boundary_normal(p)


def test_normal_requires_boundary_point():
    with pytest.raises(DomainError):
        geo.ball(3, 1.0).boundary_normal([0.5, 0, 0])
    with pytest.raises(DomainError):
        geo.free_space(3).boundary_normal([0, 0, 0])


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        geo.ball(3, 1.0).contains([0.1, 0.2])


@pytest.mark.parametrize("text", ["free:3", "halfspace:2", "strip:3", "box:2", "ball:3:1", "ball-ext:3:2", "quadrant"])
def test_parse_roundtrip(text):
    assert geo.parse_domain(text).spec == text


@pytest.mark.parametrize("text", ["pentagon", "ball:3", "box:x", "quadrant:2", "ball:3:-1", "free:0"])
def test_parse_rejects(text):
    with pytest.raises(DomainError):
        geo.parse_domain(text)


def _interior_point(dom, data):
    n = dom.n
    p = np.array(data.draw(st.lists(coord, min_size=n, max_size=n)))
    if dom.kind in ("halfspace", "strip"):
        p[-1] = abs(p[-1]) if dom.kind == "halfspace" else abs(p[-1]) % 1.0
    elif dom.kind == "box":
        p = np.abs(p) % 1.0
    elif dom.kind == "quadrant":
        p = np.abs(p)
    elif dom.kind == "ball":
        if dom.exterior:
            p = p + np.sign(p + 1e-9) * dom.radius
        elif np.linalg.norm(p) > dom.radius:
            p = p / np.linalg.norm(p) * dom.radius * 0.99
    return p


@pytest.mark.parametrize("dom", BOUNDED_OR_WALLED, ids=lambda d: d.spec)
@given(data=st.data())
def test_inscribed_ball_is_inside(dom, data):
    p = _interior_point(dom, data)
    if not dom.contains(p):
        return
    d = dom.distance_to_boundary(p)
    rng = np.random.default_rng(0)
    W = rng.standard_normal((1000, dom.n))
    W /= np.linalg.norm(W, axis=1)[:, None]
    pts = p + 0.999999 * d * W
    assert dom.contains_many(pts).all()


@pytest.mark.parametrize("dom", BOUNDED_OR_WALLED, ids=lambda d: d.spec)
@given(data=st.data())
def test_projection_lands_on_boundary_with_unit_normal(dom, data):
    p = _interior_point(dom, data)
    if not dom.contains(p):
        return
    q = dom.project_many(p[None, :])[0]
    assert dom.distance_to_boundary(q) <= 1e-12
    assert dom.on_boundary(q)
    assert abs(np.linalg.norm(q - p) - dom.distance_to_boundary(p)) <= 1e-12
    try:
        nrm = dom.boundary_normal(q)
    except DomainError:
        return  # projected onto a corner or edge
    assert abs(np.linalg.norm(nrm) - 1.0) <= 1e-14
    # the outward normal points away from the interior
    assert dom.contains(q - 1e-6 * nrm) and not dom.contains(q + 1e-3 * nrm)


@given(st.floats(0, 1), st.floats(0, 1))
def test_segment_exit_fraction_halfspace(a, b):
    hs = geo.half_space(1)
    P = np.array([[a + 0.1]])
    Q = np.array([[-b - 0.1]])
    frac = hs.segment_exit_fraction(P, Q)[0]
    crossing = P + frac * (Q - P)
    assert abs(crossing[0, 0]) <= 1e-12


def test_ray_exit_distance_ball():
    dom = geo.ball(3, 1.0)
    x = np.array([0.5, 0.0, 0.0])
    W = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0]])
    np.testing.assert_allclose(dom.ray_exit_distance(x, W), [0.5, 1.5, np.sqrt(0.75)], rtol=1e-14)


def test_spacetime_point_rejects_negative_time():
    with pytest.raises(DomainError):
        geo.SpaceTimePoint(np.zeros(2), -1.0)
