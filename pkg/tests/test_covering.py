from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenpath import covering
from greenpath import geometry as geo
from greenpath.errors import DomainError, UnsupportedError
from greenpath.verify import strip_sine_series

unit = st.floats(0.0, 1.0)


def test_halfspace_images():
    exp = covering.enumerate_images(geo.half_space(1), [0.3], 5)
    np.testing.assert_array_equal(exp.images(), [[0.3], [-0.3]])
    np.testing.assert_array_equal(exp.weights("dirichlet"), [1, -1])
    np.testing.assert_array_equal(exp.weights("neumann"), [1, 1])


def test_strip_images_order_one():
    exp = covering.enumerate_images(geo.unit_strip(1), [0.3], 1)
    got = {(round(float(p[0]), 12), int(w)) for p, w in zip(exp.images(), exp.weights("dirichlet"))}
    want = {(round(0.3 + 2 * m, 12), 1) for m in (-1, 0, 1)} | {(round(-0.3 + 2 * m, 12), -1) for m in (-1, 0, 1)}
    assert got == want
    assert len(exp) == 6


def test_box_order_zero():
    exp = covering.enumerate_images(geo.unit_box(2), [0.3, 0.5], 0)
    got = {(tuple(np.round(p, 12)), int(w)) for p, w in zip(exp.images(), exp.weights("dirichlet"))}
    assert got == {((0.3, 0.5), 1), ((-0.3, 0.5), -1), ((0.3, -0.5), -1), ((-0.3, -0.5), 1)}


def test_unsupported_domains():
    for dom in (geo.ball(3, 1.0), geo.quadrant(), geo.free_space(2)):
        with pytest.raises(UnsupportedError):
            covering.enumerate_images(dom, np.full(dom.n, 0.5), 1)


def test_point_outside_rejected():
    with pytest.raises(DomainError):
        covering.enumerate_images(geo.unit_strip(2), [0.0, 1.5], 1)


@pytest.mark.parametrize("dom", [geo.unit_strip(1), geo.unit_strip(2), geo.unit_box(2), geo.unit_box(3)], ids=lambda d: d.spec)
@given(data=st.data(), order=st.integers(0, 3))
def test_refinement_extends_prefix(dom, data, order):
    p = np.array(data.draw(st.lists(st.floats(0.01, 0.99), min_size=dom.n, max_size=dom.n)))
    small = covering.enumerate_images(dom, p, order)
    big = covering.enumerate_images(dom, p, order + 1)
    assert len(big) > len(small)
    for a, b in zip(small.terms, big.terms):
        np.testing.assert_array_equal(a.image, b.image)
        assert (a.weight_dirichlet, a.weight_neumann, a.label) == (b.weight_dirichlet, b.weight_neumann, b.label)


@pytest.mark.parametrize("dom", [geo.half_space(2), geo.unit_strip(2), geo.unit_box(2)], ids=lambda d: d.spec)
@given(data=st.data())
def test_reflection_generator_flips_dirichlet_weights(dom, data):
    p = np.array(data.draw(st.lists(st.floats(0.05, 0.95), min_size=dom.n, max_size=dom.n)))
    exp = covering.enumerate_images(dom, p, 2)
    lookup = {tuple(np.round(t.image, 9)): t for t in exp.terms}
    axes = [dom.n - 1] if dom.kind != "box" else range(dom.n)
    for ax in axes:
        for t in exp.terms:
            q = t.image.copy()
            q[ax] = -q[ax]
            partner = lookup[tuple(np.round(q, 9))]
            assert partner.weight_dirichlet == -t.weight_dirichlet
            assert partner.weight_neumann == t.weight_neumann


def _bump_sum(exp, bc, Y, tau=0.05):
    imgs = exp.images()
    w = exp.weights(bc)
    d2 = ((Y[:, None, :] - imgs[None, :, :]) ** 2).sum(axis=2)
    return (np.exp(-math.pi * d2 / tau) * w).sum(axis=1)


@pytest.mark.parametrize("dom", [geo.half_space(2), geo.unit_strip(2), geo.unit_box(2), geo.unit_box(3)], ids=lambda d: d.spec)
@given(data=st.data())
def test_image_sum_boundary_conditions(dom, data):
    n = dom.n
    p = np.array(data.draw(st.lists(st.floats(0.05, 0.95), min_size=n, max_size=n)))
    order = covering.truncation_order(dom, 0.05, 1e-14) if dom.kind != "halfspace" else 0
    exp = covering.enumerate_images(dom, p, order + 1)
    rng = np.random.default_rng(int(1e6 * p[0]))
    h = 1e-5
    for f in dom.faces:
        Y = rng.uniform(0, 1, size=(10, n))
        Y[:, f.axis] = f.offset
        assert np.max(np.abs(_bump_sum(exp, "dirichlet", Y))) <= 1e-12
        e = np.zeros(n)
        e[f.axis] = h
        dn = (_bump_sum(exp, "neumann", Y + e) - _bump_sum(exp, "neumann", Y - e)) / (2 * h)
        assert np.max(np.abs(dn)) <= 1e-8


def test_parabolic_truncation_unit_time():
    # direct summation of the omitted 1-d images: 4 exp(-pi (2k)^2) for k >= M
    def majorant(M):
        return math.fsum(4 * math.exp(-math.pi * (2 * k) ** 2) for k in range(M, M + 50))

    assert majorant(1) > 1e-12 > majorant(2)
    assert covering.truncation_order(geo.unit_strip(1), 1.0, 1e-12) == 2


@pytest.mark.parametrize("tol", [1e-3, 1e-8, 1e-15])
def test_parabolic_truncation_short_time(tol):
    assert covering.truncation_order(geo.unit_strip(1), 1e-3, tol) in (0, 1)


@given(st.floats(1e-3, 10.0), st.sampled_from([1e-6, 1e-10, 1e-14]))
def test_tail_bound_below_tolerance_and_monotone(tau, tol):
    for dom in (geo.unit_strip(3), geo.unit_box(2)):
        m = covering.truncation_order(dom, tau, tol)
        assert covering.parabolic_tail(dom, m, tau) < tol
        assert covering.parabolic_tail(dom, m + 1, tau) <= covering.parabolic_tail(dom, m, tau)


def test_elliptic_truncation_strip():
    dom = geo.unit_strip(3)
    M = covering.truncation_order(dom, 0.5, 1e-8, "elliptic")
    assert covering.elliptic_tail(3, M) < 1e-8 <= covering.elliptic_tail(3, M - 1)
    x = np.array([0.0, 0.0, 0.3])
    xp = np.array([0.5, 0.0, 0.3])
    ref = covering.strip_pair_sum(3, x, xp, 10_000)
    assert abs(covering.strip_pair_sum(3, x, xp, M) - ref) <= 1e-8
    # and the reference against the eigenfunction series
    assert abs(ref - strip_sine_series(x, xp)) <= 1e-8


def test_elliptic_truncation_rejects_box():
    with pytest.raises(UnsupportedError):
        covering.truncation_order(geo.unit_box(3), 0.5, 1e-8, "elliptic")


def test_truncation_rejects_bad_tolerance():
    with pytest.raises(DomainError):
        covering.truncation_order(geo.unit_strip(2), 1.0, 0.0)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_fold_to_cell(p):
    dom = geo.unit_box(2)
    folded, parity = covering.fold_to_cell(dom, np.array([p]))
    assert dom.contains(folded[0])
    # the fold is a group element: folding is idempotent and parity is +-1
    again, par2 = covering.fold_to_cell(dom, folded)
    np.testing.assert_allclose(again, folded, atol=1e-12)
    assert abs(parity[0]) == 1 and par2[0] == 1


def test_dump_json_roundtrip():
    exp = covering.enumerate_images(geo.unit_strip(2), [0.1, 0.4], 1, tau=0.5)
    data = json.loads(exp.to_json())
    assert data["domain"] == "strip:2"
    assert len(data["terms"]) == 6
    assert data["tail_bound"] == pytest.approx(covering.parabolic_tail(geo.unit_strip(2), 1, 0.5))
