"""Quadrature building blocks: Gauss rules on panels, graded sphere rules, Gaussian averages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, QuadratureError

METHODS = ("adaptive-1d", "tensor-gauss", "sphere-cubature")


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "sphere-cubature"
    target_tol: float = 1e-8
    max_evals: int = 20_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown quadrature method {self.method!r}; choose from {METHODS}")
        if not self.target_tol > 0:
            raise DomainError("target_tol must be positive")
        if self.max_evals < 10:
            raise DomainError("max_evals must be at least 10")


@lru_cache(maxsize=64)
def gauss_legendre(k: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(k)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def gauss_hermite_prob(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for E[g(Z)], Z standard normal."""
    x, w = np.polynomial.hermite_e.hermegauss(k)
    return x, w / math.sqrt(2 * math.pi)


def panel_rule(breaks, k: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with ``k`` nodes on every panel between sorted ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(k)
    a, b = breaks[:-1], breaks[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def split_interval(a: float, b: float, cuts, pieces: int = 1) -> np.ndarray:
    """Breakpoints of ``[a, b]``: the interior ``cuts`` plus ``pieces`` equal subdivisions of every gap."""
    pts = [a] + sorted(c for c in cuts if a < c < b) + [b]
    out = [a]
    for lo, hi in zip(pts[:-1], pts[1:]):
        out.extend(lo + (hi - lo) * np.arange(1, pieces + 1) / pieces)
    return np.asarray(out)


def graded_breaks(a: float, b: float, h: float, pieces: int = 1) -> np.ndarray:
    """Panels on ``[a, b]`` refined geometrically towards ``a`` down to width ``~h``."""
    length = b - a
    if h <= 0 or h >= length:
        return split_interval(a, b, (), pieces)
    levels = int(math.ceil(math.log2(length / h)))
    pts = [a] + [a + length * 2.0 ** (-j) for j in range(levels, 0, -1)] + [b]
    out = [pts[0]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        out.extend(lo + (hi - lo) * np.arange(1, pieces + 1) / pieces)
    return np.asarray(out)


def rotation_to(axis: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose third column is the unit vector ``axis`` (3-d)."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - (helper @ a) * a
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return np.column_stack([e1, e2, a])


def sphere_rule(axis, theta_breaks, k_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions and weights on S^2, product rule around ``axis``.

    Polar angle: Gauss-Legendre on the panels ``theta_breaks`` (with the
    ``sin(theta)`` Jacobian); azimuth: the periodic trapezoid rule.
    """
    th, wth = panel_rule(theta_breaks, k_theta)
    ph = (np.arange(n_phi) + 0.5) * (2 * math.pi / n_phi)
    wph = 2 * math.pi / n_phi
    st, ct = np.sin(th), np.cos(th)
    local = np.stack(
        [
            (st[:, None] * np.cos(ph)[None, :]).ravel(),
            (st[:, None] * np.sin(ph)[None, :]).ravel(),
            np.repeat(ct, n_phi),
        ],
        axis=1,
    )
    w = np.repeat(wth * st, n_phi) * wph
    Q = rotation_to(axis if np.linalg.norm(axis) > 0 else np.array([0.0, 0.0, 1.0]))
    return local @ Q.T, w


def circle_rule(center_angle: float, breaks, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions in R^2 from angle offsets on ``breaks`` (within [-pi, pi]) around ``center_angle``."""
    a, w = panel_rule(breaks, k)
    ang = center_angle + a
    return np.stack([np.cos(ang), np.sin(ang)], axis=1), w


def symmetric_breaks(h: float, pieces: int) -> np.ndarray:
    """Panels on ``[-pi, pi]`` graded towards 0 on both sides."""
    right = graded_breaks(0.0, math.pi, h, pieces)
    return np.concatenate([-right[::-1], right[1:]])


def refine_until(compute, tol: float, max_evals: int, start: int = 0, max_level: int = 8, what: str = "integral"):
    """Run ``compute(level) -> (value, n_evals)`` at increasing levels until two
    consecutive values agree to ``tol``; returns ``(value, error_estimate)``."""
    used = 0
    prev, n = compute(start)
    used += n
    for level in range(start + 1, start + max_level + 1):
        cur, n = compute(level)
        used += n
        err = abs(cur - prev)
        if err <= tol:
            return cur, err
        if used > max_evals:
            raise QuadratureError(
                f"{what}: budget of {max_evals} evaluations exhausted (last change {err:.3e}, target {tol:.1e})"
            )
        prev = cur
    raise QuadratureError(f"{what}: no convergence after {max_level} refinements (last change {err:.3e}, target {tol:.1e})")
