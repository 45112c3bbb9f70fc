"""Image expansions for the half-space, unit strip and unit box.

The reflection group of ``[0, 1]`` is generated by ``z -> -z`` and ``z -> z + 2``;
every element is ``z -> sigma * z + 2m`` with ``sigma = +-1``.  A strip applies this
group to the last coordinate, a box applies it to every coordinate independently.

Weights are stored as *effective* kernel weights, so a kernel is always the
plain sum ``sum_p w_p * K_free(x', image_p(x))``:

* identity and translations carry ``+1``;
* each reflection multiplies the Dirichlet weight by ``-1`` and leaves the
  Neumann weight unchanged.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedError
from .geometry import Domain, as_point

PLANAR_KINDS = ("halfspace", "strip", "box")


@dataclass(frozen=True)
class ImageTerm:
    image: np.ndarray
    weight_dirichlet: int
    weight_neumann: int
    # per reflected axis: (sigma, m); empty tuple for untouched axes
    label: tuple = ()

    def weight(self, bc: str) -> int:
        return self.weight_dirichlet if bc == "dirichlet" else self.weight_neumann


@dataclass(frozen=True)
class ImageExpansion:
    domain: Domain
    source: np.ndarray
    terms: tuple[ImageTerm, ...]
    truncation_order: int
    tail_bound: float = math.inf
    scale: float | None = field(default=None)

    def __len__(self):
        return len(self.terms)

    def images(self) -> np.ndarray:
        return np.array([t.image for t in self.terms])

    def weights(self, bc: str) -> np.ndarray:
        return np.array([t.weight(bc) for t in self.terms], dtype=float)

    def to_json(self) -> str:
        return json.dumps(
            {
                "domain": self.domain.spec,
                "source": self.source.tolist(),
                "truncation_order": self.truncation_order,
                "tail_bound": self.tail_bound if math.isfinite(self.tail_bound) else None,
                "scale": self.scale,
                "terms": [
                    {
                        "image": t.image.tolist(),
                        "weight_dirichlet": t.weight_dirichlet,
                        "weight_neumann": t.weight_neumann,
                        "label": [list(lab) for lab in t.label],
                    }
                    for t in self.terms
                ],
            },
            indent=2,
        )


def _axis_elements(order: int) -> list[tuple[int, int]]:
    """(sigma, m) pairs ordered by shell |m| so that order M+1 extends order M."""
    out = [(1, 0), (-1, 0)]
    for k in range(1, order + 1):
        out += [(1, k), (-1, k), (1, -k), (-1, -k)]
    return out


def _shell(elements) -> int:
    return max(abs(m) for _, m in elements)


def _require_planar(domain: Domain):
    if domain.kind not in PLANAR_KINDS:
        raise UnsupportedError(f"no image expansion for {domain.spec}")


def enumerate_images(domain: Domain, p, order: int, tau: float | None = None) -> ImageExpansion:
    """Images of ``p`` under the covering group of ``domain`` truncated at shell ``order``.

    ``tau`` (optional) is the heat-kernel time used to report ``tail_bound``.
    """
    _require_planar(domain)
    p = domain._point(p)
    if not domain.contains(p):
        raise DomainError(f"{p} is not in {domain.spec}")
    if order < 0 or int(order) != order:
        raise DomainError(f"order must be a non-negative integer, got {order}")
    order = int(order)
    n = domain.n

    if domain.kind == "halfspace":
        q = p.copy()
        q[-1] = -q[-1]
        terms = (ImageTerm(p.copy(), 1, 1, ((1, 0),)), ImageTerm(q, -1, 1, ((-1, 0),)))
        return ImageExpansion(domain, p, terms, 0, 0.0, tau)

    axes = [n - 1] if domain.kind == "strip" else list(range(n))
    per_axis = _axis_elements(order)
    if len(axes) == 1:
        combos = [(e,) for e in per_axis]
    else:
        combos = sorted(
            itertools.product(per_axis, repeat=len(axes)),
            key=lambda c: (_shell(c), [per_axis.index(e) for e in c]),
        )
    terms = []
    for combo in combos:
        img = p.copy()
        parity = 1
        for ax, (sigma, m) in zip(axes, combo):
            img[ax] = sigma * p[ax] + 2 * m
            parity *= sigma
        terms.append(ImageTerm(img, parity, 1, tuple(combo)))
    tail = parabolic_tail(domain, order, tau) if tau is not None else math.inf
    return ImageExpansion(domain, p, tuple(terms), order, tail, tau)


def axis_tail(order: int, tau: float) -> float:
    """Bound on the omitted 1-d Gaussian images ``tau^-1/2 exp(-pi d^2 / tau)``.

    Every omitted image of a point in ``[0, 1]`` sits at distance at least ``2k``
    (``k >= order``) from any target in ``[0, 1]``, four images per ``k``.
    """
    if tau <= 0:
        return 0.0
    total = 0.0
    k = order
    while True:
        term = 4.0 * math.exp(-math.pi * (2 * k) ** 2 / tau) / math.sqrt(tau)
        total += term
        if term <= 1e-17 * max(total, 1e-300) or (term == 0.0 and k > order):
            break
        k += 1
        if k > order + 10_000:
            break
    return total


def parabolic_tail(domain: Domain, order: int, tau: float) -> float:
    """Certified bound on the heat-kernel contribution of images beyond ``order``.

    Perpendicular (free) directions contribute at most ``tau^-1/2`` each; for the box
    the absolute sum of every axis factor is at most ``2 tau^-1/2 + 1`` (two lattices
    of spacing 2) so the tensor tail is bounded by ``(kept + tail)^n - kept^n``.
    """
    _require_planar(domain)
    if domain.kind == "halfspace" or tau <= 0:
        return 0.0
    t1 = axis_tail(order, tau)
    if domain.kind == "strip":
        return t1 * tau ** (-(domain.n - 1) / 2)
    kept = 2.0 / math.sqrt(tau) + 1.0
    return (kept + t1) ** domain.n - kept ** domain.n


def _pair_constant(n: int) -> float:
    # |h''(a)| * a^n for the free elliptic kernel h, times the 4 * 2^-n of the
    # pair-of-pairs Taylor remainder: |g(m)| <= C / (m - 1)^n
    if n == 2:
        k = 2.0
    else:
        k = math.gamma(n / 2 - 1) * math.pi ** (1 - n / 2) * (n - 2) * (n - 1)
    return 4.0 * k * 2.0 ** (-n)


def elliptic_tail(n: int, order: int) -> float:
    """Integral-comparison bound on the omitted symmetric reflection pairs of the
    Dirichlet strip series (``|m| > order``) for the free elliptic kernel in dimension ``n``."""
    if order < 2 or n < 2:
        return math.inf
    return _pair_constant(n) / ((n - 1) * (order - 1) ** (n - 1))


def truncation_order(domain: Domain, scale: float, tol: float, kind: str = "parabolic") -> int:
    """Smallest image shell ``M`` whose omitted tail is below ``tol``.

    ``kind="parabolic"``: ``scale`` is the heat time ``tau``.
    ``kind="elliptic"``: the strip reflection-pair series; ``scale`` is the
    source-target distance (the bound used is uniform in it).
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale}")
    _require_planar(domain)
    if domain.kind == "halfspace":
        return 0
    if kind == "parabolic":
        m = 0
        while parabolic_tail(domain, m, scale) >= tol:
            m += 1
        return m
    if kind == "elliptic":
        if domain.kind != "strip":
            raise UnsupportedError("the elliptic pair bound is implemented for the strip only")
        n = domain.n
        if n < 2:
            raise UnsupportedError("the 1-d strip Green function has no image series")
        m = 1 + math.ceil((_pair_constant(n) / ((n - 1) * tol)) ** (1.0 / (n - 1)))
        while m > 2 and elliptic_tail(n, m - 1) < tol:
            m -= 1
        return m
    raise DomainError(f"unknown truncation kind {kind!r}")


def strip_pair_sum(n: int, x, xp, order: int) -> float:
    """Dirichlet strip Green function by direct summation in symmetric reflection pairs.

    Term ``m`` pairs the image ``x + 2m e_n`` with its reflected partner
    ``-x + 2m e_n``; shells ``+-m`` are added together, which makes the series
    absolutely convergent.  This is the textbook route and is used as an
    independent check of the heat-subordinated evaluation.
    """
    from .kernels import free_elliptic_many

    x = as_point(x)
    xp = as_point(xp)
    rho2 = float(np.sum((x[:-1] - xp[:-1]) ** 2))
    z, zp = x[-1], xp[-1]
    m = np.arange(-order, order + 1, dtype=float)
    d_plus = np.sqrt(rho2 + (zp - z - 2 * m) ** 2)
    d_minus = np.sqrt(rho2 + (zp + z - 2 * m) ** 2)
    pairs = free_elliptic_many(n, d_plus) - free_elliptic_many(n, d_minus)
    # add from the outside in to limit cancellation error
    order_idx = np.argsort(-np.abs(m), kind="stable")
    return float(math.fsum(pairs[order_idx]))


def fold_to_cell(domain: Domain, P) -> tuple[np.ndarray, np.ndarray]:
    """Map points of R^n into the closed domain; return ``(folded, parity)``.

    ``parity`` is the Dirichlet weight of the group element used, so the odd
    extension of a field ``g`` is ``parity * g(folded)`` and the even extension
    is ``g(folded)``.
    """
    _require_planar(domain)
    P = np.array(P, dtype=float, ndmin=2)
    parity = np.ones(P.shape[0])
    axes = [domain.n - 1] if domain.kind in ("halfspace", "strip") else range(domain.n)
    for ax in axes:
        z = P[:, ax]
        if domain.kind == "halfspace":
            parity = np.where(z < 0, -parity, parity)
            P[:, ax] = np.abs(z)
            continue
        r = np.mod(z, 2.0)
        flip = r > 1.0
        P[:, ax] = np.where(flip, 2.0 - r, r)
        parity = np.where(flip, -parity, parity)
    return P, parity
