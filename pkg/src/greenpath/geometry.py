"""Canonical flat domains: membership, boundary distance, normals.

Every domain is an intersection of coordinate half-spaces (free space, half-space,
strip, box, quadrant) or a ball/ball exterior, so all queries are closed form.
The ``*_many`` methods operate on arrays of shape ``(m, n)`` and are what the
Monte Carlo and quadrature code use; the scalar methods validate their input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, DomainError

BOUNDARY_TOL = 1e-12

KINDS = ("free", "halfspace", "strip", "box", "ball", "quadrant")


class Face(NamedTuple):
    # interior is sign * (x[axis] - offset) >= 0
    axis: int
    offset: float
    sign: int


@dataclass(frozen=True)
class SpaceTimePoint:
    space: np.ndarray
    time: float

    def __post_init__(self):
        if not self.time >= 0.0:
            raise DomainError(f"time must be >= 0, got {self.time}")
        object.__setattr__(self, "space", as_point(self.space))


def as_point(p) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"a point must be a flat vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"point has non-finite coordinates: {arr}")
    return arr


@dataclass(frozen=True)
class Domain:
    """A canonical domain in R^n.

    Use the constructors :func:`free_space`, :func:`half_space`, :func:`unit_strip`,
    :func:`unit_box`, :func:`ball`, :func:`ball_exterior`, :func:`quadrant`, or
    :func:`parse_domain` rather than building instances directly.
    """

    kind: str
    n: int
    radius: float = 1.0
    exterior: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n}")
        if self.kind == "quadrant" and self.n != 2:
            raise DomainError("the quadrant lives in R^2")
        if self.kind == "ball" and not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")
        if self.exterior and self.kind != "ball":
            raise DomainError("only balls have an exterior variant")

    # -- descriptive -------------------------------------------------------

    @property
    def spec(self) -> str:
        """The CLI grammar string for this domain (inverse of :func:`parse_domain`)."""
        if self.kind == "quadrant":
            return "quadrant"
        if self.kind == "ball":
            tag = "ball-ext" if self.exterior else "ball"
            return f"{tag}:{self.n}:{self.radius:g}"
        return f"{self.kind}:{self.n}"

    @property
    def bounded(self) -> bool:
        return self.kind == "box" or (self.kind == "ball" and not self.exterior)

    @property
    def faces(self) -> tuple[Face, ...]:
        """Planar faces; empty for free space and balls."""
        n = self.n
        if self.kind == "halfspace":
            return (Face(n - 1, 0.0, 1),)
        if self.kind == "strip":
            return (Face(n - 1, 0.0, 1), Face(n - 1, 1.0, -1))
        if self.kind == "box":
            return tuple(f for i in range(n) for f in (Face(i, 0.0, 1), Face(i, 1.0, -1)))
        if self.kind == "quadrant":
            return (Face(0, 0.0, 1), Face(1, 0.0, 1))
        return ()

    # -- vectorised primitives --------------------------------------------

    def _check_many(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        if P.ndim == 1:
            P = P[None, :]
        if P.shape[-1] != self.n:
            raise DimensionError(f"expected points of dimension {self.n}, got {P.shape[-1]}")
        return P

    def face_distances(self, P) -> np.ndarray:
        """Signed distances (positive inside) to every boundary piece, shape ``(m, k)``.

        Balls report a single column: ``R - |x|`` (interior) or ``|x| - R`` (exterior).
        Free space reports zero columns.
        """
        P = self._check_many(P)
        if self.kind == "ball":
            r = np.linalg.norm(P, axis=1)
            d = r - self.radius if self.exterior else self.radius - r
            return d[:, None]
        faces = self.faces
        if not faces:
            return np.empty((P.shape[0], 0))
        return np.stack([f.sign * (P[:, f.axis] - f.offset) for f in faces], axis=1)

    def signed_distance_many(self, P) -> np.ndarray:
        """Distance to the boundary, negative outside; ``inf`` for free space."""
        D = self.face_distances(P)
        if D.shape[1] == 0:
            return np.full(D.shape[0], np.inf)
        return D.min(axis=1)

    def contains_many(self, P, tol: float = BOUNDARY_TOL) -> np.ndarray:
        return self.signed_distance_many(P) >= -tol

    def project_many(self, P) -> np.ndarray:
        """Nearest boundary point for each row of ``P`` (points assumed near the domain)."""
        P = self._check_many(P).copy()
        if self.kind == "free":
            raise DomainError("free space has no boundary at finite distance")
        if self.kind == "ball":
            r = np.linalg.norm(P, axis=1)
            out = np.zeros_like(P)
            ok = r > 0
            out[ok] = P[ok] * (self.radius / r[ok])[:, None]
            out[~ok, 0] = self.radius
            return out
        D = self.face_distances(P)
        k = np.argmin(np.abs(D), axis=1)
        faces = self.faces
        for j, f in enumerate(faces):
            sel = k == j
            P[sel, f.axis] = f.offset
        # clip into the closed region so that corner overshoots land on the boundary
        for f in faces:
            if f.sign > 0:
                P[:, f.axis] = np.maximum(P[:, f.axis], f.offset)
            else:
                P[:, f.axis] = np.minimum(P[:, f.axis], f.offset)
        return P

    def segment_exit_fraction(self, P, Q) -> np.ndarray:
        """Fraction ``a`` in [0, 1] at which the segment ``P -> Q`` first leaves the domain.

        Rows with ``Q`` inside get ``a = 1``.
        """
        P = self._check_many(P)
        Q = self._check_many(Q)
        if self.kind == "ball":
            d = Q - P
            A = np.einsum("ij,ij->i", d, d)
            B = 2.0 * np.einsum("ij,ij->i", P, d)
            C = np.einsum("ij,ij->i", P, P) - self.radius ** 2
            disc = np.sqrt(np.maximum(B * B - 4 * A * C, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                if self.exterior:
                    a = (-B - disc) / (2 * A)
                else:
                    a = (-B + disc) / (2 * A)
            a = np.where(np.isfinite(a), a, 1.0)
            return np.clip(a, 0.0, 1.0)
        Dp = self.face_distances(P)
        Dq = self.face_distances(Q)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(Dq < 0, Dp / (Dp - Dq), 1.0)
        if frac.shape[1] == 0:
            return np.ones(P.shape[0])
        return np.clip(frac.min(axis=1), 0.0, 1.0)

    def ray_exit_distance(self, x, W) -> np.ndarray:
        """Distance along unit directions ``W`` (rows) from interior ``x`` to the boundary."""
        x = as_point(x)
        W = self._check_many(W)
        if self.kind == "free":
            return np.full(W.shape[0], np.inf)
        if self.kind == "ball":
            b = W @ x
            c = x @ x - self.radius ** 2
            disc = b * b - c
            if self.exterior:
                hit = (disc >= 0) & (b < 0)
                return np.where(hit, -b - np.sqrt(np.maximum(disc, 0)), np.inf)
            return -b + np.sqrt(np.maximum(disc, 0.0))
        out = np.full(W.shape[0], np.inf)
        for f in self.faces:
            dist = f.sign * (x[f.axis] - f.offset)
            rate = -f.sign * W[:, f.axis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(rate > 0, dist / rate, np.inf)
            out = np.minimum(out, t)
        return out

    # -- scalar API --------------------------------------------------------

    def _point(self, p) -> np.ndarray:
        p = as_point(p)
        if p.shape[0] != self.n:
            raise DimensionError(f"{self.spec} needs {self.n}-dimensional points, got {p.shape[0]}")
        return p

    def contains(self, p) -> bool:
        return bool(self.contains_many(self._point(p))[0])

    def distance_to_boundary(self, p) -> float:
        p = self._point(p)
        d = float(self.signed_distance_many(p)[0])
        if d < -BOUNDARY_TOL:
            raise DomainError(f"point {p} lies outside {self.spec}")
        return max(d, 0.0)

    def on_boundary(self, p, tol: float = BOUNDARY_TOL) -> bool:
        p = self._point(p)
        return abs(float(self.signed_distance_many(p)[0])) <= tol

    def boundary_normal(self, p) -> np.ndarray:
        p = self._point(p)
        if self.kind == "free":
            raise DomainError("free space has no boundary")
        D = self.face_distances(p)[0]
        if D.min() < -BOUNDARY_TOL:
            raise DomainError(f"point {p} lies outside {self.spec}")
        touching = np.flatnonzero(np.abs(D) <= BOUNDARY_TOL)
        if touching.size == 0:
            raise DomainError(f"point {p} is not on the boundary of {self.spec}")
        if self.kind == "ball":
            u = p / np.linalg.norm(p)
            return -u if self.exterior else u
        if touching.size > 1:
            raise DomainError(f"point {p} is a corner/edge of {self.spec}; the normal is undefined")
        f = self.faces[touching[0]]
        nrm = np.zeros(self.n)
        nrm[f.axis] = -float(f.sign)
        return nrm


def free_space(n: int) -> Domain:
    return Domain("free", n)


def half_space(n: int) -> Domain:
    return Domain("halfspace", n)


def unit_strip(n: int) -> Domain:
    return Domain("strip", n)


def unit_box(n: int) -> Domain:
    return Domain("box", n)


def ball(n: int, radius: float = 1.0) -> Domain:
    return Domain("ball", n, float(radius))


def ball_exterior(n: int, radius: float = 1.0) -> Domain:
    return Domain("ball", n, float(radius), exterior=True)


def quadrant() -> Domain:
    return Domain("quadrant", 2)


def parse_domain(text: str) -> Domain:
    """Parse ``free:<n>``, ``halfspace:<n>``, ``strip:<n>``, ``box:<n>``,
    ``ball:<n>:<R>``, ``ball-ext:<n>:<R>`` or ``quadrant``."""
    parts = text.strip().lower().split(":")
    head, args = parts[0], parts[1:]
    try:
        if head == "quadrant" and not args:
            return quadrant()
        if head in ("free", "halfspace", "strip", "box") and len(args) == 1:
            return Domain(head, int(args[0]))
        if head in ("ball", "ball-ext") and len(args) == 2:
            return Domain("ball", int(args[0]), float(args[1]), exterior=head == "ball-ext")
    except ValueError as exc:
        raise DomainError(f"invalid domain spec {text!r}: {exc}") from None
    raise DomainError(f"invalid domain spec {text!r}")


# module-level aliases mirroring the method API
def contains(domain: Domain, p) -> bool:
    return domain.contains(p)


def distance_to_boundary(domain: Domain, p) -> float:
    return domain.distance_to_boundary(p)


def boundary_normal(domain: Domain, p) -> np.ndarray:
    return domain.boundary_normal(p)
