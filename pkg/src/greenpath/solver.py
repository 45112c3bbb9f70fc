"""Kernel superposition solvers for elliptic, parabolic and wave problems.

Every solution is a sum of source, boundary and Cauchy integrals of the kernels
in :mod:`greenpath.kernels`.  Each integral is computed on a sequence of
refined rules; two consecutive levels agreeing to the target tolerance
stops the refinement, and their difference is the reported error estimate.

Conventions: the elliptic operator is ``(1/4pi) Lap u = -f``, the heat operator
``(1/4pi) Lap u - du/dt = -f`` and the wave operator
``(1/4pi)(Lap - d^2/dt^2) u = -f`` with unit speed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import kernels
from .covering import fold_to_cell
from .errors import DomainError, QuadratureError, UnsupportedError
from .fields import ScalarField
from .geometry import Domain, SpaceTimePoint, as_point
from .quadrature import (
    QuadratureSpec,
    gauss_hermite_prob,
    graded_breaks,
    panel_rule,
    refine_until,
    sphere_rule,
    split_interval,
    symmetric_breaks,
)

PDE_CLASSES = ("elliptic", "parabolic", "hyperbolic")

# half-width of the Gaussian window in standard deviations
_WINDOW = 9.0


@dataclass(frozen=True)
class BoundaryValueProblem:
    domain: Domain
    pde_class: str
    bc: str = "dirichlet"
    f: ScalarField | None = None
    phi: ScalarField | None = None
    psi: ScalarField | None = None
    psi_t: ScalarField | None = None
    case: str = "real"

    def __post_init__(self):
        if self.pde_class not in PDE_CLASSES:
            raise DomainError(f"pde_class must be one of {PDE_CLASSES}")
        object.__setattr__(self, "bc", kernels.normalize_bc(self.bc))
        object.__setattr__(self, "case", kernels.normalize_case(self.case))
        for name in ("f", "phi", "psi", "psi_t"):
            fld = getattr(self, name)
            if fld is not None and fld.n != self.domain.n:
                raise DomainError(f"field {name} has dimension {fld.n}, domain has {self.domain.n}")
        if self.pde_class == "elliptic" and (self.psi is not None or self.psi_t is not None):
            raise DomainError("elliptic problems take no Cauchy data")
        if self.pde_class == "parabolic" and self.psi is None:
            raise DomainError("parabolic problems need initial data psi")
        if self.pde_class == "hyperbolic":
            if self.psi is None or self.psi_t is None:
                raise DomainError("wave problems need psi and psi_t")
            if self.case != kernels.IMAGINARY:
                raise DomainError("wave problems use the imaginary case s = i")


@dataclass(frozen=True)
class Solution:
    value: float
    error: float
    terms: dict


def _active(fld: ScalarField | None) -> bool:
    return fld is not None and not fld.is_zero


def _as_spacetime(p) -> SpaceTimePoint:
    if isinstance(p, SpaceTimePoint):
        return p
    x, t = p
    return SpaceTimePoint(as_point(x), float(t))


# --------------------------------------------------------------------------
# elliptic
# --------------------------------------------------------------------------


def _ray_limits(domain: Domain, x, W, support):
    """Per-direction radial interval [lo, hi] of the region the integrand lives on."""
    hi = domain.ray_exit_distance(x, W)
    lo = np.zeros(W.shape[0])
    if support is not None:
        c, a = support
        d = x - c
        b = W @ d
        disc = b * b - (d @ d - a * a)
        ok = disc > 0
        s = np.sqrt(np.where(ok, disc, 0.0))
        lo = np.maximum(lo, np.where(ok, -b - s, np.inf))
        hi = np.minimum(hi, np.where(ok, -b + s, -np.inf))
    return lo, hi


def _direction_rule(domain: Domain, x, support, level: int):
    n = domain.n
    pieces = 2 ** level
    if n == 3:
        if support is not None and np.linalg.norm(support[0] - x) > support[1]:
            c, a = support
            axis = c - x
            dist = float(np.linalg.norm(axis))
            tmax = math.asin(min(1.0, a / dist))
            return sphere_rule(axis, split_interval(0.0, tmax, (), pieces), 12, 16 * pieces)
        return sphere_rule(np.array([0.0, 0.0, 1.0]), split_interval(0.0, math.pi, (), 2 * pieces), 12, 16 * pieces)
    if n == 2:
        ang, w = panel_rule(split_interval(-math.pi, math.pi, (), 8 * pieces), 12)
        if support is not None and np.linalg.norm(support[0] - x) > support[1]:
            c, a = support
            axis = c - x
            dist = float(np.linalg.norm(axis))
            tmax = math.asin(min(1.0, a / dist))
            ang, w = panel_rule(split_interval(-tmax, tmax, (), 2 * pieces), 12)
            ang = ang + math.atan2(axis[1], axis[0])
        return np.stack([np.cos(ang), np.sin(ang)], axis=1), w
    raise UnsupportedError(f"volume integrals are implemented for n = 2 and 3, not {n}")


def _ray_integral(domain: Domain, x, integrand, support, level: int, rho_max: float = math.inf):
    """``int integrand(x + rho w, rho) rho^(n-1) drho dw`` by rays from ``x``.

    ``integrand(Y, rho)`` is vectorised; the radial rule is graded towards the
    start point so that log or 1/rho kernels are integrated accurately.
    """
    W, wd = _direction_rule(domain, x, support, level)
    lo, hi = _ray_limits(domain, x, W, support)
    hi = np.minimum(hi, rho_max)
    live = hi > lo
    W, wd, lo, hi = W[live], wd[live], lo[live], hi[live]
    if W.shape[0] == 0:
        return 0.0, 0
    pieces = 2 ** level
    # unit-interval rule, graded towards 0 (start of every ray)
    s, ws = panel_rule(graded_breaks(0.0, 1.0, 1e-4, pieces), 10)
    span = hi - lo
    rho = lo[:, None] + span[:, None] * s[None, :]
    wr = span[:, None] * ws[None, :]
    Y = x[None, None, :] + rho[:, :, None] * W[:, None, :]
    vals = integrand(Y.reshape(-1, domain.n), rho.ravel()).reshape(rho.shape)
    total = float(np.sum(wd[:, None] * wr * rho ** (domain.n - 1) * vals))
    return total, rho.size


def _elliptic_source(bvp: BoundaryValueProblem, x, quad: QuadratureSpec):
    domain = bvp.domain
    f = bvp.f
    support = f.support
    if not domain.bounded and support is None:
        raise DomainError("the source on an unbounded domain needs a declared compact support")
    if domain.kind == "ball" and domain.exterior and support is None:
        raise DomainError("the source outside a ball needs a declared compact support")
    if domain.kind == "ball" and domain.n != 3:
        raise UnsupportedError("ball Green function available for n = 3 only")

    def integrand(Y, rho):
        g = kernels.green_many(domain, bvp.bc, x, Y)
        return g * f(Y, 0.0)

    return refine_until(
        lambda lev: _ray_integral(domain, x, integrand, support, lev),
        quad.target_tol,
        quad.max_evals,
        what="elliptic source integral",
    )


def _ball_boundary(bvp: BoundaryValueProblem, x, quad: QuadratureSpec):
    domain = bvp.domain
    n, R = domain.n, domain.radius
    phi = bvp.phi
    ax = float(np.linalg.norm(x))
    axis = x / ax if ax > 0 else np.eye(n)[-1]
    gap = abs(R - ax) / R
    coef = math.gamma(n / 2) / (2 * math.pi ** (n / 2))
    num = ax * ax - R * R if domain.exterior else R * R - ax * ax

    def compute(level):
        pieces = 2 ** level
        if n == 3:
            W, w = sphere_rule(axis, graded_breaks(0.0, math.pi, 0.5 * gap, pieces), 16, 16 * pieces)
            area = R * R
        elif n == 2:
            ang, w = panel_rule(symmetric_breaks(0.5 * gap, pieces), 16)
            base = math.atan2(axis[1], axis[0])
            W = np.stack([np.cos(base + ang), np.sin(base + ang)], axis=1)
            area = R
        else:
            raise UnsupportedError(f"boundary cubature implemented for n = 2, 3; got {n}")
        XB = R * W
        d2 = np.sum((XB - x) ** 2, axis=1)
        kern = coef * num / (R * d2 ** (n / 2))
        return float(np.sum(w * area * kern * phi(XB, 0.0))), XB.shape[0]

    return refine_until(compute, quad.target_tol, quad.max_evals, what="Poisson integral")


def solve_elliptic(bvp: BoundaryValueProblem, eval_at, quad: QuadratureSpec | None = None, *, full: bool = False):
    """``int K_U(x, x') f(x') dx' + int K_b(x, x_B) phi(x_B) dS``.

    Returns the value (or a :class:`Solution` with the error estimate when ``full``).
    """
    if bvp.pde_class != "elliptic":
        raise DomainError("solve_elliptic needs an elliptic problem")
    quad = quad or QuadratureSpec()
    domain = bvp.domain
    x = domain._point(eval_at)
    if not domain.contains(x) or (domain.kind != "free" and domain.on_boundary(x)):
        raise DomainError(f"{x} is not interior to {domain.spec}")
    terms = {}
    err = 0.0
    if _active(bvp.f):
        terms["source"], e = _elliptic_source(bvp, x, quad)
        err += e
    if _active(bvp.phi):
        if domain.kind != "ball" or bvp.bc != kernels.DIRICHLET:
            raise UnsupportedError(f"boundary data are supported on balls (Dirichlet), not {domain.spec}")
        terms["boundary"], e = _ball_boundary(bvp, x, quad)
        err += e
    value = float(sum(terms.values()))
    return Solution(value, err, terms) if full else value


# --------------------------------------------------------------------------
# parabolic
# --------------------------------------------------------------------------


def _folded_axes(domain: Domain) -> list[int]:
    if domain.kind in ("halfspace", "strip"):
        return [domain.n - 1]
    if domain.kind == "box":
        return list(range(domain.n))
    return []


def _axis_breaks(domain: Domain, ax: int, center: float, sigma: float, support, pieces: int):
    lo, hi = center - _WINDOW * sigma, center + _WINDOW * sigma
    cuts = []
    folded = ax in _folded_axes(domain)
    if folded:
        if domain.kind == "halfspace":
            cuts.append(0.0)
        else:
            cuts.extend(range(math.floor(lo), math.ceil(hi) + 1))
    if support is not None:
        c, a = support
        edges = [c[ax] - a, c[ax] + a]
        if not folded:
            lo, hi = max(lo, edges[0]), min(hi, edges[1])
            if hi <= lo:
                return None
        elif domain.kind == "halfspace":
            cuts += edges + [-e for e in edges]
        else:
            for e in edges:
                for k in range(math.floor((lo - e) / 2) - 1, math.ceil((hi + e) / 2) + 2):
                    cuts += [e + 2 * k, -e + 2 * k]
    return split_interval(lo, hi, cuts, pieces)


def _gaussian_convolution(bvp: BoundaryValueProblem, field: ScalarField, x, tau: float, time: float, level: int):
    """``int K(x, y; tau) field_ext(y, time) dy`` with the image-extended field."""
    domain = bvp.domain
    n = domain.n
    sigma = math.sqrt(tau / (2 * math.pi))
    # a single panel under-resolves the Gaussian (4e-2); two already give ~1e-10
    pieces = 2 ** (level + 1)
    nodes, weights = [], []
    for ax in range(n):
        br = _axis_breaks(domain, ax, x[ax], sigma, field.support, pieces)
        if br is None:
            return 0.0, 0
        y, w = panel_rule(br, 16)
        g = np.exp(-math.pi * (y - x[ax]) ** 2 / tau) / math.sqrt(tau)
        nodes.append(y)
        weights.append(w * g)
    grids = np.meshgrid(*nodes, indexing="ij")
    Y = np.stack([g.ravel() for g in grids], axis=1)
    W = weights[0]
    for w in weights[1:]:
        W = np.multiply.outer(W, w)
    W = W.ravel()
    if domain.kind == "free":
        vals = field(Y, time)
    else:
        folded, parity = fold_to_cell(domain, Y)
        vals = field(folded, time)
        if bvp.bc == kernels.DIRICHLET:
            vals = vals * parity
    return float(W @ vals), Y.shape[0]


def _parabolic_cauchy(bvp, x, t, quad):
    return refine_until(
        lambda lev: _gaussian_convolution(bvp, bvp.psi, x, t, 0.0, lev),
        quad.target_tol,
        quad.max_evals,
        what="Cauchy integral",
    )


def _parabolic_source(bvp, x, t, quad):
    # tau = t v^2 tames the tau -> 0 end; the inner integral is a Gaussian convolution
    def compute(level):
        v, wv = panel_rule(split_interval(0.0, 1.0, (), 2 ** level), 12)
        total, count = 0.0, 0
        for vi, wi in zip(v, wv):
            tau = t * vi * vi
            inner, c = _gaussian_convolution(bvp, bvp.f, x, tau, t - tau, level)
            total += wi * 2 * t * vi * inner
            count += c
        return total, count

    return refine_until(compute, quad.target_tol, quad.max_evals, what="parabolic source integral")


def _wall_average(field: ScalarField, x, dt: float, time: float, k: int = 24) -> float:
    """Gaussian average of ``field(., time)`` over the wall ``x_n = 0`` around ``x``."""
    n = x.shape[0]
    if n == 1:
        return float(field(np.zeros((1, 1)), time)[0])
    z, wz = gauss_hermite_prob(k)
    sigma = math.sqrt(dt / (2 * math.pi))
    grids = np.meshgrid(*([z] * (n - 1)), indexing="ij")
    Y = np.zeros((grids[0].size, n))
    for i, g in enumerate(grids):
        Y[:, i] = x[i] + sigma * g.ravel()
    W = wz
    for _ in range(n - 2):
        W = np.multiply.outer(W, wz)
    return float(W.ravel() @ field(Y, time))


def _quad(fn, a, b, tol, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, a, b, epsabs=tol, epsrel=0.0, limit=400)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"{what}: {exc}") from None
    if err > tol:
        raise QuadratureError(f"{what}: error estimate {err:.2e} above {tol:.1e}")
    return val, err


def _halfspace_boundary(bvp, x, t, quad):
    phi = bvp.phi
    xn = float(x[-1])
    if bvp.bc == kernels.DIRICHLET:
        if xn <= 0:
            raise DomainError("evaluation point must be off the wall")

        # u = 1/dt turns dt^(-3/2) exp(-pi xn^2/dt) into a decaying integrand
        def fn(u):
            dt = 1.0 / u
            return xn * u ** -0.5 * math.exp(-math.pi * xn * xn * u) * _wall_average(phi, x, dt, t - dt)

        return _quad(fn, 1.0 / t, math.inf, quad.target_tol / 4, "half-space boundary integral")

    # Neumann: phi is the outward flux; dt = v^2 removes the dt^(-1/2) endpoint
    def fn(v):
        dt = v * v
        if dt == 0.0:
            return 4.0 * (1.0 if xn == 0 else 0.0) * _wall_average(phi, x, 1e-300, t) / (4 * math.pi)
        return 4.0 * math.exp(-math.pi * xn * xn / dt) * _wall_average(phi, x, dt, t - dt) / (4 * math.pi)

    return _quad(fn, 0.0, math.sqrt(t), quad.target_tol / 4, "half-space flux integral")


def solve_parabolic(bvp: BoundaryValueProblem, eval_at, quad: QuadratureSpec | None = None, *, full: bool = False):
    """Source, boundary and Cauchy terms of the heat problem at ``(x, t)``.

    Domains: free space, half-space (Dirichlet data or Neumann flux data ``phi``),
    unit strip and unit box (homogeneous walls).  For the Neumann half-space
    ``phi`` is the outward normal derivative on the wall.
    """
    if bvp.pde_class != "parabolic":
        raise DomainError("solve_parabolic needs a parabolic problem")
    quad = quad or QuadratureSpec()
    st = _as_spacetime(eval_at)
    domain = bvp.domain
    x = domain._point(st.space)
    t = st.time
    if not t > 0:
        raise DomainError("evaluation time must be positive")
    if domain.kind not in ("free", "halfspace", "strip", "box"):
        raise UnsupportedError(f"no parabolic kernels on {domain.spec}")
    if not domain.contains(x):
        raise DomainError(f"{x} lies outside {domain.spec}")
    terms = {}
    err = 0.0
    if _active(bvp.psi):
        terms["cauchy"], e = _parabolic_cauchy(bvp, x, t, quad)
        err += e
    if _active(bvp.f):
        terms["source"], e = _parabolic_source(bvp, x, t, quad)
        err += e
    if _active(bvp.phi):
        if domain.kind != "halfspace":
            raise UnsupportedError(f"boundary data are supported on the half-space only, not {domain.spec}")
        terms["boundary"], e = _halfspace_boundary(bvp, x, t, quad)
        err += e
    value = float(sum(terms.values()))
    return Solution(value, err, terms) if full else value


# --------------------------------------------------------------------------
# wave (free space, 3 + 1)
# --------------------------------------------------------------------------


def _spherical_mean(field: ScalarField, x, s: float, level: int):
    """Mean of ``field`` over the sphere of radius ``|s|`` about ``x`` (support-aware)."""
    s = abs(s)
    c, a = field.support
    d = float(np.linalg.norm(c - x))
    if s == 0.0:
        return float(field(x[None, :], 0.0)[0]), 1
    if d + s <= a:
        tmax, axis = math.pi, np.array([0.0, 0.0, 1.0])
    elif s >= d + a or s <= d - a:
        return 0.0, 0
    else:
        cosmax = (d * d + s * s - a * a) / (2 * d * s)
        tmax = math.acos(max(-1.0, min(1.0, cosmax)))
        axis = (c - x) / d
    pieces = 2 ** level
    W, w = sphere_rule(axis, split_interval(0.0, tmax, (), pieces), 12, 16 * pieces)
    vals = field(x[None, :] + s * W, 0.0)
    return float(w @ vals) / (4 * math.pi), W.shape[0]


def _kirchhoff(bvp, x, t, quad):
    def compute(level):
        count = 0
        h = min(1e-3, 0.25 * max(t, 1e-3))
        g = []
        for k in (-2, -1, 1, 2):
            s = t + k * h
            m, c = _spherical_mean(bvp.psi, x, s, level)
            g.append(s * m)
            count += c
        dpsi = (g[0] - 8 * g[1] + 8 * g[2] - g[3]) / (12 * h)
        mt, c = _spherical_mean(bvp.psi_t, x, t, level)
        return dpsi + t * mt, count + c

    return refine_until(compute, quad.target_tol, quad.max_evals, what="Kirchhoff integral")


def _retarded_source(bvp, x, t, quad, advanced: bool):
    f = bvp.f
    sign = 1.0 if advanced else -1.0
    domain = bvp.domain

    def integrand(Y, rho):
        # kernel 1/rho, Jacobian rho^2 is applied by _ray_integral
        return f(Y, t + sign * rho) / rho

    def compute(level):
        # retarded: only sources switched on after t = 0 contribute, so rho <= t
        rho_max = math.inf if advanced else t
        return _ray_integral(domain, x, integrand, f.support, level, rho_max)

    return refine_until(compute, quad.target_tol, quad.max_evals, what="retarded potential")


def solve_wave_retarded(bvp: BoundaryValueProblem, eval_at, quad: QuadratureSpec | None = None, *,
                        advanced: bool = False, full: bool = False):
    """Retarded potential plus Kirchhoff terms for ``(1/4pi)(Lap - d_t^2) u = -f`` in R^3.

    ``advanced=True`` evaluates the source term with the advanced (time-reversed) kernel.
    """
    if bvp.pde_class != "hyperbolic":
        raise DomainError("solve_wave_retarded needs a hyperbolic problem")
    domain = bvp.domain
    if domain.kind != "free" or domain.n != 3:
        raise UnsupportedError("the wave solver works in free space with n = 3")
    quad = quad or QuadratureSpec()
    st = _as_spacetime(eval_at)
    x = domain._point(st.space)
    t = st.time
    terms = {}
    err = 0.0
    for name in ("f", "psi", "psi_t"):
        fld = getattr(bvp, name)
        if _active(fld) and fld.support is None:
            raise DomainError(f"wave data {name} must declare a compact support")
    if _active(bvp.psi) or _active(bvp.psi_t):
        psi = bvp.psi if _active(bvp.psi) else _null_like(bvp.psi_t)
        psi_t = bvp.psi_t if _active(bvp.psi_t) else _null_like(bvp.psi)
        terms["cauchy"], e = _kirchhoff(
            BoundaryValueProblem(domain, "hyperbolic", psi=psi, psi_t=psi_t, case="i"), x, t, quad
        )
        err += e
    if _active(bvp.f):
        terms["source"], e = _retarded_source(bvp, x, t, quad, advanced)
        err += e
    value = float(sum(terms.values()))
    return Solution(value, err, terms) if full else value


def _null_like(fld: ScalarField) -> ScalarField:
    return ScalarField(lambda P, t=0.0: np.zeros(np.atleast_2d(P).shape[0]), fld.n, fld.support, None, "0", False)
