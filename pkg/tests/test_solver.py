from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from greenpath import geometry as geo
from greenpath.errors import DomainError, QuadratureError, UnsupportedError
from greenpath.fields import ScalarField, bump
from greenpath.quadrature import QuadratureSpec
from greenpath.solver import BoundaryValueProblem, solve_elliptic, solve_parabolic, solve_wave_retarded
from greenpath.verify import newton_shell_potential

BALL = geo.ball(3, 1.0)
TIGHT = QuadratureSpec("sphere-cubature", 1e-10)


def ell(dom=BALL, f=None, phi=None):
    n = dom.n
    return BoundaryValueProblem(dom, "elliptic", f=f and ScalarField.from_expr(f, n), phi=phi and ScalarField.from_expr(phi, n))


# -- elliptic -------------------------------------------------------------------------


@pytest.mark.parametrize("x", [[0, 0, 0], [0.3, -0.2, 0.1], [0.0, 0.0, 0.999], [0.7, 0.7, 0.0]])
def test_poisson_kernel_unit_mass(x):
    assert solve_elliptic(ell(phi="1"), x, TIGHT) == pytest.approx(1.0, abs=1e-9)


def test_constant_source_ball():
    assert solve_elliptic(ell(f="1"), [0, 0, 0]) == pytest.approx(2 * math.pi / 3, rel=1e-8)
    # radial ODE: u = 2 pi (1 - r^2) / 3
    assert solve_elliptic(ell(f="1"), [0.6, 0, 0]) == pytest.approx(2 * math.pi * 0.64 / 3, rel=1e-8)


def test_linear_boundary_data():
    assert solve_elliptic(ell(phi="x1"), [0.5, 0, 0], TIGHT) == pytest.approx(0.5, abs=1e-9)


def test_disc_in_two_dimensions():
    disc = geo.ball(2, 2.0)
    # u = x1 x2 is harmonic
    val = solve_elliptic(ell(disc, phi="x1 * x2"), [0.4, -0.7], TIGHT)
    assert val == pytest.approx(0.4 * -0.7, abs=1e-8)


def test_boundary_recovery(rng):
    phi = "abs(x1) + 0.5 * x2 * x3"
    bvp = ell(phi=phi)
    sup = 1.5
    for _ in range(20):
        z = rng.standard_normal(3)
        xb = z / np.linalg.norm(z)
        x = xb * (1 - 1e-3)
        got = solve_elliptic(bvp, x, QuadratureSpec("sphere-cubature", 1e-6))
        assert abs(got - bvp.phi.at(xb)) <= 1e-2 * sup


def test_linearity():
    x = [0.2, 0.1, -0.3]
    a = solve_elliptic(ell(f="x1 + 1", phi="x2"), x, TIGHT)
    b = solve_elliptic(ell(f="x1 + 1"), x, TIGHT) + solve_elliptic(ell(phi="x2"), x, TIGHT)
    c = solve_elliptic(ell(f="3 * (x1 + 1)", phi="3 * x2"), x, TIGHT)
    assert a == pytest.approx(b, abs=1e-9)
    assert c == pytest.approx(3 * a, abs=1e-9)


def test_elliptic_residual():
    # (1/4pi) Lap u = -f at interior probes, 5-point stencil per axis
    bvp = ell(f="1 + x1 * x2", phi="x3")
    q = QuadratureSpec("sphere-cubature", 1e-11)
    x0 = np.array([0.2, -0.1, 0.15])
    h = 0.02
    lap = 0.0
    c = solve_elliptic(bvp, x0, q)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        vals = [solve_elliptic(bvp, x0 + k * e, q) for k in (-2, -1, 1, 2)]
        lap += (-vals[0] + 16 * vals[1] - 30 * c + 16 * vals[2] - vals[3]) / (12 * h * h)
    f = 1 + x0[0] * x0[1]
    assert lap / (4 * math.pi) == pytest.approx(-f, rel=1e-3)


def test_free_space_source_against_shell_quadrature():
    fr = geo.free_space(3)
    f = ScalarField.from_expr("bump(sqrt(x1**2 + x2**2 + x3**2) / 0.5)", 3, support=([0, 0, 0], 0.5))
    bvp = BoundaryValueProblem(fr, "elliptic", f=f)
    for x in ([0.1, 0.0, 0.0], [0.0, 0.9, 0.3]):
        ref = newton_shell_potential(lambda r: float(bump(r / 0.5)), [0, 0, 0], 0.5, x)
        assert solve_elliptic(bvp, x, QuadratureSpec("sphere-cubature", 1e-8)) == pytest.approx(ref, rel=1e-6)


def test_elliptic_validation():
    with pytest.raises(DomainError):
        BoundaryValueProblem(BALL, "elliptic", psi=ScalarField.zero(3))
    with pytest.raises(DomainError):
        solve_elliptic(ell(phi="1"), [2, 0, 0])
    with pytest.raises(DomainError):
        # an unbounded source needs a declared support
        solve_elliptic(BoundaryValueProblem(geo.free_space(3), "elliptic", f=ScalarField.const(1.0, 3)), [0, 0, 0])
    with pytest.raises(UnsupportedError):
        solve_elliptic(ell(geo.quadrant(), phi="1"), [1, 1])


def test_budget_exhaustion_is_reported():
    with pytest.raises(QuadratureError):
        solve_elliptic(ell(f="sin(40 * x1)"), [0.1, 0.2, 0.0], QuadratureSpec("sphere-cubature", 1e-14, 2000))


# -- parabolic ------------------------------------------------------------------------


def par(dom, f=None, phi=None, psi="0"):
    n = dom.n
    mk = lambda e: e if e is None else ScalarField.from_expr(e, n)  # noqa: E731
    return BoundaryValueProblem(dom, "parabolic", f=mk(f), phi=mk(phi), psi=mk(psi))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_free_space_unit_mass(n):
    bvp = par(geo.free_space(n), psi="1")
    for t in (1e-3, 0.5, 4.0):
        assert solve_parabolic(bvp, (np.full(n, 0.3), t)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("x,t", [(1.0, 1.0), (0.3, 0.1), (2.0, 5.0)])
def test_halfspace_erf_solution(x, t):
    val = solve_parabolic(par(geo.half_space(1), phi="1"), ([x], t), QuadratureSpec("adaptive-1d", 1e-10))
    assert val == pytest.approx(1 - math.erf(math.sqrt(math.pi / t) * x), abs=1e-9)


def test_initial_recovery():
    psi = "bump(sqrt((x1-0.5)**2 + (x2-0.5)**2) / 0.4)"
    bvp = BoundaryValueProblem(geo.unit_box(2), "parabolic", psi=ScalarField.from_expr(psi, 2, support=([0.5, 0.5], 0.4)))
    for x in ([0.5, 0.5], [0.3, 0.6], [0.75, 0.5]):
        got = solve_parabolic(bvp, (x, 1e-6))
        assert abs(got - bvp.psi.at(x)) <= 1e-3


def test_strip_eigenmode_decay():
    # sin(pi z) decays like exp(-pi t / 4) under (1/4pi) d^2/dz^2
    bvp = par(geo.unit_strip(1), psi="sin(pi * x1)")
    for t in (0.1, 1.0):
        got = solve_parabolic(bvp, ([0.3], t), QuadratureSpec("tensor-gauss", 1e-10))
        assert got == pytest.approx(math.sin(0.3 * math.pi) * math.exp(-math.pi * t / 4), abs=1e-8)


def test_box_eigenmode_decay_neumann():
    bvp = BoundaryValueProblem(geo.unit_box(2), "parabolic", "neumann", psi=ScalarField.from_expr("cos(pi * x1) * cos(pi * x2)", 2))
    got = solve_parabolic(bvp, ([0.2, 0.7], 0.5), QuadratureSpec("tensor-gauss", 1e-9))
    want = math.cos(0.2 * math.pi) * math.cos(0.7 * math.pi) * math.exp(-2 * math.pi * 0.5 / 4)
    assert got == pytest.approx(want, abs=1e-7)


def test_source_constant_in_free_space():
    bvp = par(geo.free_space(1), f="1", psi="0")
    # u_t = (1/4pi) u_xx + f with f = 1 gives u = t
    assert solve_parabolic(bvp, ([0.0], 0.7)) == pytest.approx(0.7, rel=1e-8)


def test_parabolic_residual():
    bvp = par(geo.half_space(1), f="exp(-x1**2)", phi="1", psi="x1 * exp(-x1)")
    q = QuadratureSpec("adaptive-1d", 1e-11)
    x0, t0, h, k = 0.6, 0.4, 0.02, 0.01
    u = lambda x, t: solve_parabolic(bvp, ([x], t), q)  # noqa: E731
    c = u(x0, t0)
    uxx = (-u(x0 - 2 * h, t0) + 16 * u(x0 - h, t0) - 30 * c + 16 * u(x0 + h, t0) - u(x0 + 2 * h, t0)) / (12 * h * h)
    ut = (u(x0, t0 - 2 * k) - 8 * u(x0, t0 - k) + 8 * u(x0, t0 + k) - u(x0, t0 + 2 * k)) / (12 * k)
    f = math.exp(-x0 * x0)
    assert uxx / (4 * math.pi) - ut == pytest.approx(-f, rel=1e-3)


def test_neumann_halfspace_flux_data():
    # outward normal derivative -u_x(0, t) = 1, zero start, D = 1/(4 pi):
    # u = 2 sqrt(D t / pi) exp(-x^2 / 4Dt) - x erfc(x / 2 sqrt(D t))
    bvp = BoundaryValueProblem(geo.half_space(1), "parabolic", "neumann", phi=ScalarField.const(1.0, 1), psi=ScalarField.zero(1))
    t, x = 0.5, 0.2
    D = 1 / (4 * math.pi)
    s = x / (2 * math.sqrt(D * t))
    want = 2 * math.sqrt(D * t / math.pi) * math.exp(-s * s) - x * math.erfc(s)
    got = solve_parabolic(bvp, ([x], t), QuadratureSpec("adaptive-1d", 1e-10))
    assert got == pytest.approx(want, rel=1e-7)


def test_parabolic_validation():
    with pytest.raises(DomainError):
        BoundaryValueProblem(BALL, "parabolic")  # needs psi
    with pytest.raises(UnsupportedError):
        solve_parabolic(par(BALL, psi="1"), ([0, 0, 0], 1.0))
    with pytest.raises(DomainError):
        solve_parabolic(par(geo.free_space(1), psi="1"), ([0.0], -1.0))


# -- hyperbolic -----------------------------------------------------------------------


def wave(f=None, psi="0", psi_t="0", support=None):
    mk = lambda e: None if e is None else ScalarField.from_expr(e, 3, support=support)  # noqa: E731
    return BoundaryValueProblem(geo.free_space(3), "hyperbolic", f=mk(f), psi=mk(psi), psi_t=mk(psi_t), case="i")


def test_wave_zero_data():
    assert solve_wave_retarded(wave(), ([0.1, 0.2, 0.3], 1.0)) == 0.0


def test_wave_static_limit():
    c = [0.2, -0.1, 0.0]
    f = "bump(sqrt((x1-0.2)**2 + (x2+0.1)**2 + x3**2) / 0.5)"
    x = np.array([0.4, 0.3, -0.2])
    q = QuadratureSpec("sphere-cubature", 1e-7)
    ref = newton_shell_potential(lambda r: float(bump(r / 0.5)), c, 0.5, x)
    u = solve_wave_retarded(wave(f=f, support=(c, 0.5)), (x, 10.0), q)
    assert u == pytest.approx(ref, rel=1e-3)
    st_ = solve_elliptic(BoundaryValueProblem(geo.free_space(3), "elliptic", f=ScalarField.from_expr(f, 3, support=(c, 0.5))), x, q)
    assert u == pytest.approx(st_, rel=1e-3)


def _dalembert(r, t, g):
    # radial solution with u(., 0) = g(|x|), u_t(., 0) = 0: r u = [(r-t) g(|r-t|) + (r+t) g(r+t)] / 2
    return ((r - t) * g(abs(r - t)) + (r + t) * g(r + t)) / (2 * r)


@pytest.mark.parametrize("t", [0.3, 1.0, 1.7])
@pytest.mark.parametrize("r", [0.2, 0.9])
def test_wave_spherical_means(r, t):
    g = lambda s: float(bump(s / 0.8))  # noqa: E731
    bvp = wave(psi="bump(sqrt(x1**2 + x2**2 + x3**2) / 0.8)", support=([0, 0, 0], 0.8))
    x = np.array([r, 0.0, 0.0])
    got = solve_wave_retarded(bvp, (x, t), QuadratureSpec("sphere-cubature", 1e-9))
    assert got == pytest.approx(_dalembert(r, t, g), abs=1e-6)


def test_wave_initial_velocity():
    # psi = 0, psi_t = 1 on a ball the sound cone never leaves: u = t
    bvp = wave(psi_t="1", support=([0.0, 0.0, 0.0], 5.0))
    assert solve_wave_retarded(bvp, ([0.0, 0.0, 0.0], 0.8)) == pytest.approx(0.8, rel=1e-9)


def test_wave_advanced_is_time_reversed():
    c = [0.0, 0.0, 0.0]
    f = "bump(sqrt(x1**2 + x2**2 + x3**2) / 0.5) * exp(-t)"
    ret = solve_wave_retarded(wave(f=f, support=(c, 0.5)), ([0.3, 0, 0], 2.0))
    adv = solve_wave_retarded(wave(f=f, support=(c, 0.5)), ([0.3, 0, 0], 2.0), advanced=True)
    assert ret != pytest.approx(adv)


def test_wave_validation():
    with pytest.raises(DomainError):
        BoundaryValueProblem(geo.free_space(3), "hyperbolic", psi=ScalarField.zero(3))
    with pytest.raises(UnsupportedError):
        solve_wave_retarded(
            BoundaryValueProblem(geo.free_space(2), "hyperbolic", psi=ScalarField.zero(2), psi_t=ScalarField.zero(2), case="i"),
            ([0.0, 0.0], 1.0),
        )
