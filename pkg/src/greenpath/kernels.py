"""Closed-form kernels in the ``(1/4pi) Laplacian`` convention.

The diffusion coefficient is ``1/(4 pi)``: the free heat kernel is
``dt^(-n/2) exp(-pi r^2 / dt)`` (unit mass) and the free elliptic kernel is its
time integral, so ``(1/4pi) Lap G = -delta``.  Textbook Green functions are
recovered by multiplying by ``1/(4 pi)``.

Real-case kernels return ``float``; the imaginary case (``s = i``) returns
``complex``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import special

from . import covering
from .errors import DomainError, SingularKernelError, UnsupportedError
from .geometry import BOUNDARY_TOL, Domain, as_point

REAL = "real"
IMAGINARY = "imaginary"
DIRICHLET = "dirichlet"
NEUMANN = "neumann"

QUADRANT_MODES = ("printed", "unit-mass")

# trapezoid step in u = ln(tau) for the subordinated strip/box Green functions
_LOG_STEP = 0.125


def normalize_case(case) -> str:
    key = str(case).strip().lower()
    if key in ("real", "1", "s=1", "heat"):
        return REAL
    if key in ("imaginary", "i", "s=i", "1j", "imag"):
        return IMAGINARY
    raise DomainError(f"unknown kernel case {case!r}")


def normalize_bc(bc) -> str:
    key = str(bc).strip().lower()
    if key in ("d", "dirichlet"):
        return DIRICHLET
    if key in ("n", "neumann"):
        return NEUMANN
    raise DomainError(f"unknown boundary condition {bc!r}")


# --------------------------------------------------------------------------
# free-space kernels
# --------------------------------------------------------------------------


def _elliptic_coefficient(n: int) -> float:
    return math.pi ** (1 - n / 2) * math.gamma(n / 2 - 1)


def free_elliptic(n: int, r: float) -> float:
    """Free elliptic kernel ``pi^(1-n/2) Gamma(n/2-1) r^(2-n)``, or ``-2 ln r`` for n = 2."""
    if n < 2:
        raise DomainError(f"free elliptic kernel needs n >= 2, got {n}")
    if not r > 0:
        raise SingularKernelError(f"free elliptic kernel is singular at r = {r}")
    if n == 2:
        return -2.0 * math.log(r)
    return _elliptic_coefficient(n) * r ** (2 - n)


def free_elliptic_many(n: int, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if n == 2:
        return -2.0 * np.log(r)
    return _elliptic_coefficient(n) * r ** (2 - n)


def free_heat(n: int, r: float, dt: float, case=REAL):
    """Free heat (``s = 1``) or Schrodinger (``s = i``) kernel at separation ``r``."""
    case = normalize_case(case)
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    if r < 0:
        raise DomainError(f"distance must be non-negative, got {r}")
    if case == REAL:
        if dt < 0 or (dt == 0 and r > 0):
            return 0.0
        if dt == 0:
            raise SingularKernelError("heat kernel is singular at dt = 0, r = 0")
        return dt ** (-n / 2) * math.exp(-math.pi * r * r / dt)
    if dt == 0:
        raise SingularKernelError("Schrodinger kernel is singular at dt = 0")
    # principal branch: (i dt)^(-n/2) = |dt|^(-n/2) exp(-+ i pi n / 4)
    phase = -math.pi * n / 4 if dt > 0 else math.pi * n / 4
    return abs(dt) ** (-n / 2) * complex(math.cos(phase), math.sin(phase)) * np.exp(
        1j * math.pi * r * r / dt
    ).item()


def free_heat_many(n: int, r2, dt):
    """Vectorised real heat kernel from squared distances; zero for ``dt <= 0``."""
    r2 = np.asarray(r2, dtype=float)
    dt = np.asarray(dt, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = dt ** (-n / 2) * np.exp(-math.pi * r2 / dt)
    return np.where(dt > 0, val, 0.0)


def _kv_half_integer(m: int, z: float) -> float:
    # K_{m+1/2}(z) as a finite sum
    s = sum(
        math.factorial(m + k) / (math.factorial(k) * math.factorial(m - k) * (2 * z) ** k)
        for k in range(m + 1)
    )
    return math.sqrt(math.pi / (2 * z)) * math.exp(-z) * s


def fixed_energy(n: int, r: float, energy: float) -> float:
    """``int_0^inf tau^(-n/2) exp(-2 pi E tau - pi r^2 / tau) dtau``.

    Equals ``2 (b/a)^(nu/2) K_nu(2 sqrt(ab))`` with ``nu = 1 - n/2``, ``a = 2 pi E``,
    ``b = pi r^2``; half-integer orders (odd n) use the elementary finite sum.
    """
    if not r > 0:
        raise SingularKernelError(f"fixed-energy kernel is singular at r = {r}")
    if energy < 0:
        raise DomainError(f"energy must be >= 0, got {energy}")
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    if energy == 0:
        if n <= 2:
            raise DomainError(f"fixed-energy integral diverges for n = {n} at zero energy")
        return free_elliptic(n, r)
    a = 2 * math.pi * energy
    b = math.pi * r * r
    nu = 1 - n / 2
    z = 2 * math.sqrt(a * b)
    if n % 2 == 1:
        m = int(abs(nu) - 0.5)
        kv = _kv_half_integer(m, z)
    else:
        kv = float(special.kv(abs(nu), z))
    return 2.0 * (b / a) ** (nu / 2) * kv


# --------------------------------------------------------------------------
# planar domains by images
# --------------------------------------------------------------------------


def _pair(domain: Domain, x, xp, extend=False):
    x = domain._point(x)
    xp = domain._point(xp)
    if not extend:
        for label, p in (("x", x), ("x'", xp)):
            if not domain.contains(p):
                raise DomainError(f"{label} = {p} lies outside {domain.spec}")
    return x, xp


def _axis_factor(z, zp, tau, bc: str, tol: float) -> np.ndarray:
    """1-d reflection-group heat kernel on [0, 1] for an array of times ``tau``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    order = _axis_order(float(tau.max()), tol)
    m = np.arange(-order, order + 1, dtype=float)
    wr = -1.0 if bc == DIRICHLET else 1.0
    d_id = (zp - z - 2 * m)[None, :] ** 2
    d_re = (zp + z - 2 * m)[None, :] ** 2
    t = tau[:, None]
    g = np.exp(-math.pi * d_id / t) + wr * np.exp(-math.pi * d_re / t)
    # sum smallest terms first so the cancellation at the walls is exact
    idx = np.argsort(np.abs(m))[::-1]
    return g[:, idx].sum(axis=1) / np.sqrt(tau)


_STRIP1 = Domain("strip", 1)


@lru_cache(maxsize=4096)
def _axis_order(tau_max: float, tol: float) -> int:
    # for shells >= 1 the tail grows with tau, so the largest time decides
    return max(covering.truncation_order(_STRIP1, tau_max, tol), 1)


def _halfspace_factor(z, zp, tau, bc):
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    wr = -1.0 if bc == DIRICHLET else 1.0
    return (np.exp(-math.pi * (zp - z) ** 2 / tau) + wr * np.exp(-math.pi * (zp + z) ** 2 / tau)) / np.sqrt(tau)


def _planar_heat(domain: Domain, bc: str, x, xp, tau, tol: float) -> np.ndarray:
    """Heat kernel on a half-space/strip/box for an array of positive times."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    n = domain.n
    if domain.kind == "box":
        out = np.ones_like(tau)
        for ax in range(n):
            out = out * _axis_factor(x[ax], xp[ax], tau, bc, tol)
        return out
    rho2 = float(np.sum((x[:-1] - xp[:-1]) ** 2))
    free = tau ** (-(n - 1) / 2) * np.exp(-math.pi * rho2 / tau)
    if domain.kind == "halfspace":
        return free * _halfspace_factor(x[-1], xp[-1], tau, bc)
    return free * _axis_factor(x[-1], xp[-1], tau, bc, tol)


def heat_domain_kernel(domain: Domain, bc, x, dt: float, xp, tol: float = 1e-15, *, extend: bool = False) -> float:
    """Image-sum heat kernel on the half-space, unit strip or unit box.

    This is both the parabolic elementary kernel (``dt = t_b - t_a``) and the
    Cauchy kernel (``dt = t_b``).  ``extend=True`` evaluates the image sum at
    points outside the domain, which is what finite-difference checks at the wall need.
    """
    bc = normalize_bc(bc)
    if domain.kind == "free":
        x, xp = _pair(domain, x, xp)
        return free_heat(domain.n, float(np.linalg.norm(x - xp)), dt)
    if domain.kind not in covering.PLANAR_KINDS:
        raise UnsupportedError(f"no image heat kernel on {domain.spec}")
    x, xp = _pair(domain, x, xp, extend)
    if dt <= 0:
        if dt == 0 and np.array_equal(x, xp):
            raise SingularKernelError("heat kernel is singular at dt = 0, x = x'")
        return 0.0
    return float(_planar_heat(domain, bc, x, xp, dt, tol)[0])


def _subordinated_green(domain: Domain, x, xp, tol: float) -> float:
    """Dirichlet strip/box Green function as the time integral of the heat kernel.

    The integral is a trapezoid rule in ``u = ln tau`` on a grid anchored at
    integer multiples of the step, so the discretisation error varies smoothly
    with ``x``.  Below ``tau_lo`` the integrand is under ``exp(-60)`` of its scale;
    above ``tau_hi`` the lowest Dirichlet mode bounds it by ``exp(-d pi tau / 4)``
    with ``d`` confined axes.
    """
    r0 = float(np.linalg.norm(x - xp))
    confined = domain.n if domain.kind == "box" else 1
    tau_lo = math.pi * r0 * r0 / 60.0
    tau_hi = max(4.0 / (confined * math.pi) * math.log(3.0 ** confined * 4.0 / (math.pi * tol)), 2.0)
    h = _LOG_STEP
    k = np.arange(math.floor(math.log(tau_lo) / h), math.ceil(math.log(tau_hi) / h) + 1)
    tau = np.exp(k * h)
    vals = _planar_heat(domain, DIRICHLET, x, xp, tau, tol=1e-17) * tau
    return float(h * math.fsum(vals))


def domain_green(domain: Domain, bc, x, xp, tol: float = 1e-12) -> float:
    """Elliptic elementary kernel (Green function) ``K(x, x')`` on ``domain``.

    * free space: the free kernel;
    * half-space: two images (Dirichlet or Neumann);
    * unit strip / unit box, Dirichlet: time integral of the image heat kernel
      (``tol`` is the absolute accuracy target);
    * ball, n = 3, interior or exterior, Dirichlet: Kelvin image;
    * quadrant, Dirichlet: four logarithms.
    """
    bc = normalize_bc(bc)
    x, xp = _pair(domain, x, xp)
    r = float(np.linalg.norm(x - xp))
    if r == 0:
        raise SingularKernelError("Green function is singular at x = x'")
    n = domain.n
    kind = domain.kind
    if kind == "free":
        return free_elliptic(n, r)
    if kind == "halfspace":
        xr = x.copy()
        xr[-1] = -xr[-1]
        rr = float(np.linalg.norm(xp - xr))
        w = -1.0 if bc == DIRICHLET else 1.0
        return free_elliptic(n, r) + w * free_elliptic(n, rr)
    if bc != DIRICHLET:
        raise UnsupportedError(f"only Dirichlet Green functions are available on {domain.spec}")
    if kind in ("strip", "box"):
        if n < 2 and kind == "strip":
            raise UnsupportedError("the 1-d strip is a box; use box:1")
        return _subordinated_green(domain, x, xp, tol)
    if kind == "ball":
        if n != 3:
            raise UnsupportedError("the ball Green function is available for n = 3 only")
        R = domain.radius
        ax = float(np.linalg.norm(x))
        if ax == 0.0:
            second = 1.0 / R
        else:
            second = 1.0 / float(np.linalg.norm((ax / R) * xp - R * x / ax))
        return 1.0 / r - second
    if kind == "quadrant":
        x1, x2 = x
        y1, y2 = xp

        def lg(a, b):
            return 0.5 * math.log((y1 - a) ** 2 + (y2 - b) ** 2)

        return -2.0 * (lg(x1, x2) - lg(-x1, x2) - lg(x1, -x2) + lg(-x1, -x2))
    raise UnsupportedError(f"no Green function on {domain.spec}")


# --------------------------------------------------------------------------
# boundary kernels
# --------------------------------------------------------------------------


def quadrant_segment(xb) -> int:
    """Segment index of a quadrant boundary point: 1 for the x1-axis, 2 for the x2-axis, 3 for the corner."""
    xb = as_point(xb)
    on1 = abs(xb[1]) <= BOUNDARY_TOL and xb[0] >= -BOUNDARY_TOL
    on2 = abs(xb[0]) <= BOUNDARY_TOL and xb[1] >= -BOUNDARY_TOL
    if on1 and on2:
        return 3
    if on1:
        return 1
    if on2:
        return 2
    raise DomainError(f"{xb} is not on the quadrant boundary")


def quadrant_normalizers(x) -> tuple[float, float, float]:
    """The printed per-segment factors ``(N1, N2, N3)`` for interior ``x``."""
    x1, x2 = as_point(x)
    n1 = x2 / (2.0 * (math.atan(x1 / x2) + math.pi / 2))
    n2 = x1 / (2.0 * (math.atan(x2 / x1) + math.pi / 2))
    return n1, n2, 0.0


def boundary_kernel_elliptic(domain: Domain, x, xb, mode: str = "printed") -> float:
    """Kernel carrying Dirichlet data from ``xb`` on the boundary to interior ``x``.

    Ball (any n): the Poisson kernel, with ``|x|^2 - R^2`` in the exterior.
    Quadrant: ``N_i / (pi |xb - x|^2)`` on segment ``i``; ``mode="unit-mass"``
    multiplies by ``pi`` so that the two segments carry total mass one.
    """
    x = domain._point(x)
    xb = domain._point(xb)
    if domain.kind not in ("ball", "quadrant"):
        raise UnsupportedError(f"no elliptic boundary kernel on {domain.spec}")
    if not domain.on_boundary(xb):
        raise DomainError(f"{xb} is not on the boundary of {domain.spec}")
    if not domain.contains(x) or domain.on_boundary(x):
        raise DomainError(f"{x} is not interior to {domain.spec}")
    d2 = float(np.sum((xb - x) ** 2))
    if domain.kind == "ball":
        n, R = domain.n, domain.radius
        coef = math.gamma(n / 2) / (2 * math.pi ** (n / 2))
        num = float(x @ x) - R * R if domain.exterior else R * R - float(x @ x)
        return coef * num / (R * d2 ** (n / 2))
    if mode not in QUADRANT_MODES:
        raise DomainError(f"unknown quadrant mode {mode!r}; choose from {QUADRANT_MODES}")
    seg = quadrant_segment(xb)
    nrm = quadrant_normalizers(x)[seg - 1]
    scale = math.pi if mode == "unit-mass" else 1.0
    return scale * nrm / (math.pi * d2)


def boundary_kernel_parabolic(domain: Domain, x, dt: float, xb) -> float:
    """Half-space first-passage density ``x_n dt^-(n/2+1) exp(-pi |xb - x|^2 / dt)``.

    Positive, causal (zero for ``dt <= 0``) and of unit total mass over
    ``(dt, xb)``; it equals the wall flux ``-(1/4pi) dK_D/dn'``.
    """
    if domain.kind != "halfspace":
        raise UnsupportedError(f"parabolic boundary kernel is available on the half-space only, not {domain.spec}")
    x = domain._point(x)
    xb = domain._point(xb)
    if abs(xb[-1]) > BOUNDARY_TOL:
        raise DomainError(f"{xb} is off the wall x_n = 0")
    if not domain.contains(x):
        raise DomainError(f"{x} lies outside {domain.spec}")
    if dt <= 0:
        return 0.0
    n = domain.n
    d2 = float(np.sum((xb - x) ** 2))
    return float(x[-1]) * dt ** (-(n / 2 + 1)) * math.exp(-math.pi * d2 / dt)


# --------------------------------------------------------------------------
# hyperbolic
# --------------------------------------------------------------------------


def gaussian_mollifier(u, w: float, derivative: int = 0):
    """Unit-mass Gaussian of standard deviation ``w`` (or its ``derivative``-th derivative)."""
    u = np.asarray(u, dtype=float)
    s = u / w
    base = np.exp(-0.5 * s * s) / (math.sqrt(2 * math.pi) * w)
    if derivative == 0:
        return base
    he = special.eval_hermitenorm(derivative, s)
    return (-1.0 / w) ** derivative * he * base


def hyperbolic_I(n: int, u, w: float):
    """Mollified wave kernel in the invariant interval ``u``.

    n = 4 gives ``2 eta_w(u)``, which tends to ``2 delta(u)``.  Larger even n give the
    modulus ``2^(n/2-1) (2 pi)^-p eta_w^(p)(u)`` with ``p = n/2 - 2`` derivatives;
    n = 2 gives the mollified step ``pi erf(u / (sqrt 2 w))``.  Odd n is not provided.
    """
    if not w > 0:
        raise DomainError(f"mollifier width must be positive, got {w}")
    if n % 2 == 1 or n < 2:
        raise UnsupportedError(f"hyperbolic kernel is only available for even n >= 2, got {n}")
    u_arr = np.asarray(u, dtype=float)
    if n == 2:
        val = math.pi * special.erf(u_arr / (math.sqrt(2) * w))
    else:
        p = n // 2 - 2
        val = 2.0 ** (n / 2 - 1) * (2 * math.pi) ** (-p) * gaussian_mollifier(u_arr, w, p)
    return float(val) if np.ndim(val) == 0 else val


def green_many(domain: Domain, bc, x, XP, tol: float = 1e-12, chunk: int = 256) -> np.ndarray:
    """Vectorised :func:`domain_green` for a fixed ``x`` and many ``x'`` (rows of ``XP``).

    No membership or diagonal checks are made; callers guarantee ``x' != x`` inside the domain.
    """
    bc = normalize_bc(bc)
    x = domain._point(x)
    XP = np.atleast_2d(np.asarray(XP, dtype=float))
    n = domain.n
    kind = domain.kind
    r = np.linalg.norm(XP - x, axis=1)
    if kind == "free":
        return free_elliptic_many(n, r)
    if kind == "halfspace":
        xr = x.copy()
        xr[-1] = -xr[-1]
        w = -1.0 if bc == DIRICHLET else 1.0
        return free_elliptic_many(n, r) + w * free_elliptic_many(n, np.linalg.norm(XP - xr, axis=1))
    if bc != DIRICHLET:
        raise UnsupportedError(f"only Dirichlet Green functions are available on {domain.spec}")
    if kind == "ball":
        if n != 3:
            raise UnsupportedError("the ball Green function is available for n = 3 only")
        R = domain.radius
        ax = float(np.linalg.norm(x))
        if ax == 0.0:
            return 1.0 / r - 1.0 / R
        return 1.0 / r - 1.0 / np.linalg.norm((ax / R) * XP - R * x / ax, axis=1)
    if kind == "quadrant":
        y1, y2 = XP[:, 0], XP[:, 1]
        x1, x2 = x

        def lg(a, b):
            return 0.5 * np.log((y1 - a) ** 2 + (y2 - b) ** 2)

        return -2.0 * (lg(x1, x2) - lg(-x1, x2) - lg(x1, -x2) + lg(-x1, -x2))
    if kind in ("strip", "box"):
        out = np.empty(XP.shape[0])
        for s in range(0, XP.shape[0], chunk):
            sl = slice(s, s + chunk)
            out[sl] = _subordinated_green_many(domain, x, XP[sl], tol)
        return out
    raise UnsupportedError(f"no Green function on {domain.spec}")


def _subordinated_green_many(domain: Domain, x, XP, tol: float) -> np.ndarray:
    # same rule as _subordinated_green, one shared log-time grid per chunk
    r0 = float(np.min(np.linalg.norm(XP - x, axis=1)))
    confined = domain.n if domain.kind == "box" else 1
    tau_lo = math.pi * r0 * r0 / 60.0
    tau_hi = max(4.0 / (confined * math.pi) * math.log(3.0 ** confined * 4.0 / (math.pi * tol)), 2.0)
    h = _LOG_STEP
    k = np.arange(math.floor(math.log(tau_lo) / h), math.ceil(math.log(tau_hi) / h) + 1)
    tau = np.exp(k * h)
    order = _axis_order(float(tau.max()), 1e-17)
    m = np.arange(-order, order + 1, dtype=float)
    t = tau[None, :, None]

    def axis(z, zp):
        d_id = (zp[:, None] - z - 2 * m[None, :])[:, None, :] ** 2
        d_re = (zp[:, None] + z - 2 * m[None, :])[:, None, :] ** 2
        g = np.exp(-math.pi * d_id / t) - np.exp(-math.pi * d_re / t)
        return g.sum(axis=2) / np.sqrt(tau)[None, :]

    if domain.kind == "box":
        val = np.ones((XP.shape[0], tau.size))
        for ax in range(domain.n):
            val = val * axis(x[ax], XP[:, ax])
    else:
        n = domain.n
        rho2 = np.sum((XP[:, :-1] - x[:-1]) ** 2, axis=1)
        free = tau[None, :] ** (-(n - 1) / 2) * np.exp(-math.pi * rho2[:, None] / tau[None, :])
        val = free * axis(x[-1], XP[:, -1])
    return h * (val * tau[None, :]).sum(axis=1)
