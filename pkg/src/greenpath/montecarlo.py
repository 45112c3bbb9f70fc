"""Stochastic oracle: Brownian walks with generator ``(1/4pi) Laplacian``.

Two samplers share the same vectorised, lockstep layout:

* Euler-Maruyama (:func:`sample_exits_em`): Gaussian increments of variance
  ``dt / (2 pi)`` per coordinate.  Far from the boundary a walker takes one
  exact Gaussian macro-step whose length keeps the boundary at least
  ``MACRO_SIGMAS`` standard deviations away; near it, steps of ``cfg.step_dt``
  are used with a Brownian-bridge crossing test (exact for planar faces,
  tangent-plane approximation for spheres).
* walk-on-spheres (:func:`sample_exits_wos`): jumps to a uniform point on the
  largest inscribed sphere until within ``eps_shell`` of the boundary.

Randomness comes from counter-based Philox streams keyed by ``(seed, block)``.
Walks are split into blocks of ``cfg.block_size``; each block is simulated
independently, so results do not depend on how blocks are spread over threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MaxStepsExceeded, UnsupportedError
from .fields import ScalarField
from .geometry import Domain, as_point

SIGMA2 = 1.0 / (2.0 * math.pi)  # variance per unit time per coordinate
MACRO_SIGMAS = 6.0


@dataclass(frozen=True)
class WalkConfig:
    step_dt: float = 1e-4
    eps_shell: float = 1e-4
    max_steps: int = 10_000_000
    horizon: float = math.inf
    adaptive: bool = True
    bridge: bool = True
    block_size: int = 16384

    def __post_init__(self):
        if not self.step_dt > 0 or not self.eps_shell > 0:
            raise DomainError("step_dt and eps_shell must be positive")
        if self.max_steps < 1 or self.block_size < 1:
            raise DomainError("max_steps and block_size must be >= 1")
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")


@dataclass(frozen=True)
class ExitRecord:
    exit_point: np.ndarray
    exit_time: float


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n_samples, "seed": self.seed}


@dataclass
class ExitBatch:
    """Per-walk results in walk order.  ``exit_time`` is ``inf`` for walks still
    inside at the horizon; their final position is in ``exit_point``."""

    exit_point: np.ndarray
    exit_time: np.ndarray
    source_integral: np.ndarray
    steps: np.ndarray

    @property
    def exited(self) -> np.ndarray:
        return np.isfinite(self.exit_time)


def default_threads() -> int:
    env = os.environ.get("GREENPATH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"GREENPATH_THREADS must be an integer, got {env!r}") from None
    return 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    key = (int(block) << 64) | (int(seed) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def _blocks(n_walks: int, block_size: int) -> list[tuple[int, int]]:
    return [(b, min(block_size, n_walks - b * block_size)) for b in range((n_walks + block_size - 1) // block_size)]


def _run_blocks(fn, n_walks: int, cfg: WalkConfig, seed: int, threads: int | None):
    blocks = _blocks(n_walks, cfg.block_size)
    threads = threads or default_threads()
    if threads <= 1 or len(blocks) == 1:
        parts = [fn(block_rng(seed, b), m) for b, m in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda bm: fn(block_rng(seed, bm[0]), bm[1]), blocks))
    return parts


def _check_start(domain: Domain, start) -> np.ndarray:
    x = domain._point(start)
    if not domain.contains(x):
        raise DomainError(f"start {x} lies outside {domain.spec}")
    return x


# --------------------------------------------------------------------------
# Euler-Maruyama with bridge correction
# --------------------------------------------------------------------------


def _bridge_projection(domain: Domain, M, D0, D1):
    """Exit point for a bridge-detected crossing: the step midpoint moved onto the likeliest face."""
    if domain.kind == "ball":
        return domain.project_many(M)
    k = np.argmin(np.maximum(D0, 0) * np.maximum(D1, 0), axis=1)
    out = M.copy()
    for j, face in enumerate(domain.faces):
        sel = k == j
        out[sel, face.axis] = face.offset
    return domain.project_many(out) if domain.kind in ("box", "quadrant") else out


def _em_block(domain: Domain, start, cfg: WalkConfig, rng, m: int, source: ScalarField | None, t_eval: float):
    n = domain.n
    X = np.tile(start, (m, 1))
    T = np.zeros(m)
    acc = np.zeros(m)
    steps = np.zeros(m, dtype=np.int64)
    out_pt = np.empty((m, n))
    out_t = np.full(m, np.inf)
    out_acc = np.zeros(m)
    out_steps = np.zeros(m, dtype=np.int64)
    idx = np.arange(m)
    adaptive = cfg.adaptive and source is None
    dt = cfg.step_dt

    if domain.signed_distance_many(start[None, :])[0] <= 1e-12:
        out_pt[:] = start
        out_t[:] = 0.0
        return ExitBatch(out_pt, out_t, out_acc, out_steps)

    while idx.size:
        D0 = domain.face_distances(X)
        d = D0.min(axis=1) if D0.shape[1] else np.full(idx.size, np.inf)
        remaining = cfg.horizon - T
        if adaptive:
            with np.errstate(over="ignore"):
                h = np.maximum((d / MACRO_SIGMAS) ** 2 / SIGMA2, dt)
        else:
            h = np.full(idx.size, dt)
        last = h >= remaining
        h = np.where(last, remaining, h)
        if not np.all(np.isfinite(h)):
            raise DomainError(f"walks in {domain.spec} never exit; give a finite horizon")
        Z = rng.standard_normal((idx.size, n))
        U = rng.random(idx.size)
        X1 = X + np.sqrt(h * SIGMA2)[:, None] * Z
        steps += 1

        if D0.shape[1]:
            D1 = domain.face_distances(X1)
            crossed = D1.min(axis=1) < 0
            if cfg.bridge:
                with np.errstate(over="ignore", invalid="ignore"):
                    pf = np.exp(-4.0 * math.pi * np.maximum(D0, 0) * np.maximum(D1, 0) / h[:, None])
                p = 1.0 - np.prod(1.0 - pf, axis=1)
                bridged = ~crossed & (U < p)
            else:
                bridged = np.zeros(idx.size, dtype=bool)
        else:
            crossed = bridged = np.zeros(idx.size, dtype=bool)

        frac = np.ones(idx.size)
        if np.any(crossed):
            frac[crossed] = domain.segment_exit_fraction(X[crossed], X1[crossed])
        frac[bridged] = 0.5
        if source is not None:
            # left-endpoint rule for the accumulated source
            acc += source(X, t_eval - T) * frac * h

        ex = crossed | bridged
        if np.any(crossed):
            P = X[crossed] + frac[crossed, None] * (X1[crossed] - X[crossed])
            out_pt[idx[crossed]] = domain.project_many(P)
        if np.any(bridged):
            M = 0.5 * (X[bridged] + X1[bridged])
            out_pt[idx[bridged]] = _bridge_projection(domain, M, D0[bridged], D1[bridged])
        out_t[idx[ex]] = T[ex] + frac[ex] * h[ex]
        censored = last & ~ex
        out_pt[idx[censored]] = X1[censored]

        done = ex | censored
        out_acc[idx[done]] = acc[done]
        out_steps[idx[done]] = steps[done]
        stuck = ~done & (steps >= cfg.max_steps)
        if np.any(stuck):
            raise MaxStepsExceeded(f"{int(stuck.sum())} walks exceeded {cfg.max_steps} steps", int(stuck.sum()))
        keep = ~done
        X, T, acc, steps, idx = X1[keep], (T + h)[keep], acc[keep], steps[keep], idx[keep]
    return ExitBatch(out_pt, out_t, out_acc, out_steps)


def _concat(parts: list[ExitBatch]) -> ExitBatch:
    return ExitBatch(
        np.concatenate([p.exit_point for p in parts]),
        np.concatenate([p.exit_time for p in parts]),
        np.concatenate([p.source_integral for p in parts]),
        np.concatenate([p.steps for p in parts]),
    )


def sample_exits_em(domain: Domain, start, n_walks: int, cfg: WalkConfig | None = None, seed: int = 0, *,
                    source: ScalarField | None = None, t_eval: float = 0.0, threads: int | None = None) -> ExitBatch:
    """Run ``n_walks`` Euler-Maruyama walks from ``start``.

    ``source`` (optional) is accumulated along each path as ``int f(X_s, t_eval - s) ds``;
    it forces fixed steps of ``cfg.step_dt``.
    """
    cfg = cfg or WalkConfig()
    x = _check_start(domain, start)
    if n_walks < 1:
        raise DomainError("n_walks must be >= 1")
    parts = _run_blocks(lambda rng, m: _em_block(domain, x, cfg, rng, m, source, t_eval), n_walks, cfg, seed, threads)
    return _concat(parts)


def sample_exit_em(domain: Domain, start, cfg: WalkConfig | None = None, seed: int = 0) -> ExitRecord:
    """A single Euler-Maruyama exit; deterministic in ``(seed, cfg)``."""
    b = sample_exits_em(domain, start, 1, cfg, seed)
    return ExitRecord(b.exit_point[0].copy(), float(b.exit_time[0]))


# --------------------------------------------------------------------------
# walk on spheres
# --------------------------------------------------------------------------


def _wos_block(domain: Domain, start, eps: float, max_iter: int, rng, m: int):
    n = domain.n
    X = np.tile(start, (m, 1))
    out = np.empty((m, n))
    idx = np.arange(m)
    it = 0
    while idx.size:
        d = domain.signed_distance_many(X)
        near = d <= eps
        if np.any(near):
            out[idx[near]] = domain.project_many(X[near])
            X, d, idx = X[~near], d[~near], idx[~near]
            if not idx.size:
                break
        if it >= max_iter:
            raise MaxStepsExceeded(f"{idx.size} walk-on-spheres walks exceeded {max_iter} jumps", int(idx.size))
        Z = rng.standard_normal((idx.size, n))
        Z /= np.linalg.norm(Z, axis=1)[:, None]
        X = X + d[:, None] * Z
        it += 1
    return out


def sample_exits_wos(domain: Domain, start, n_walks: int, eps_shell: float = 1e-4, seed: int = 0, *,
                     max_iter: int = 100_000, block_size: int = 16384, threads: int | None = None) -> np.ndarray:
    """Exit points (rows) of ``n_walks`` walk-on-spheres walks."""
    if domain.kind == "free":
        raise UnsupportedError("free space has no boundary to exit through")
    x = _check_start(domain, start)
    cfg = WalkConfig(eps_shell=eps_shell, block_size=block_size)
    parts = _run_blocks(lambda rng, m: _wos_block(domain, x, eps_shell, max_iter, rng, m), n_walks, cfg, seed, threads)
    return np.concatenate(parts)


def sample_exit_wos(domain: Domain, start, eps_shell: float = 1e-4, seed: int = 0) -> np.ndarray:
    return sample_exits_wos(domain, start, 1, eps_shell, seed)[0]


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------


def summarize(values, seed: int) -> Estimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = math.fsum(values) / n
    stderr = float(np.sqrt(math.fsum((values - mean) ** 2) / (n - 1) / n)) if n > 1 else 0.0
    return Estimate(mean, stderr, n, int(seed))


def _fields_active(*fields):
    return [f is not None and not f.is_zero for f in fields]


def estimate_solution_elliptic(bvp, eval_at, n_walks: int, cfg: WalkConfig | None = None, seed: int = 0,
                               *, sampler: str = "auto", threads: int | None = None) -> Estimate:
    """Mean over walks of ``phi(exit) + int_0^tau f(X_s) ds``.

    ``sampler="auto"`` uses walk-on-spheres when there is no source and
    Euler-Maruyama otherwise.
    """
    cfg = cfg or WalkConfig()
    if bvp.pde_class != "elliptic":
        raise DomainError("estimate_solution_elliptic needs an elliptic problem")
    if bvp.bc != "dirichlet":
        raise UnsupportedError("the walk estimators handle Dirichlet data only")
    domain = bvp.domain
    x = _check_start(domain, eval_at)
    has_f, has_phi = _fields_active(bvp.f, bvp.phi)
    if sampler == "auto":
        sampler = "em" if has_f else "wos"
    if sampler == "wos":
        if has_f:
            raise DomainError("walk-on-spheres does not integrate sources; use sampler='em'")
        pts = sample_exits_wos(domain, x, n_walks, cfg.eps_shell, seed, block_size=cfg.block_size, threads=threads)
        vals = bvp.phi(pts, 0.0) if has_phi else np.zeros(n_walks)
        return summarize(vals, seed)
    batch = sample_exits_em(domain, x, n_walks, cfg, seed, source=bvp.f if has_f else None, threads=threads)
    if not np.all(batch.exited):
        raise MaxStepsExceeded("some walks did not exit before the horizon", int((~batch.exited).sum()))
    vals = batch.source_integral.copy()
    if has_phi:
        vals += bvp.phi(batch.exit_point, 0.0)
    return summarize(vals, seed)


def estimate_solution_parabolic(bvp, eval_at, n_walks: int, cfg: WalkConfig | None = None, seed: int = 0,
                                *, threads: int | None = None) -> Estimate:
    """Mean of ``psi(X_t) [tau > t] + phi(X_tau, t - tau) [tau <= t] + int_0^min(tau,t) f(X_s, t - s) ds``."""
    from .geometry import SpaceTimePoint

    if bvp.pde_class != "parabolic":
        raise DomainError("estimate_solution_parabolic needs a parabolic problem")
    if bvp.bc != "dirichlet" and bvp.domain.kind != "free":
        raise UnsupportedError("the walk estimators handle Dirichlet walls only")
    if isinstance(eval_at, SpaceTimePoint):
        x, t = eval_at.space, eval_at.time
    else:
        x, t = eval_at
    t = float(t)
    if not t > 0:
        raise DomainError("evaluation time must be positive")
    cfg = cfg or WalkConfig()
    cfg = WalkConfig(cfg.step_dt, cfg.eps_shell, cfg.max_steps, t, cfg.adaptive, cfg.bridge, cfg.block_size)
    domain = bvp.domain
    has_f, has_phi, has_psi = _fields_active(bvp.f, bvp.phi, bvp.psi)
    batch = sample_exits_em(domain, x, n_walks, cfg, seed, source=bvp.f if has_f else None, t_eval=t, threads=threads)
    vals = batch.source_integral.copy()
    ex = batch.exited
    if has_psi and np.any(~ex):
        vals[~ex] += bvp.psi(batch.exit_point[~ex], 0.0)
    if has_phi and np.any(ex):
        pts = batch.exit_point[ex]
        times = t - batch.exit_time[ex]
        vals[ex] += bvp.phi(pts, times) if bvp.phi.time_dependent else bvp.phi(pts, 0.0)
    return summarize(vals, seed)


def estimate_mean_exit_time(domain: Domain, start, n_walks: int, cfg: WalkConfig | None = None, seed: int = 0,
                            *, threads: int | None = None) -> Estimate:
    """Sample mean of the first-exit time.  Only domains with a finite mean are accepted."""
    if domain.kind in ("free", "halfspace", "quadrant") or (domain.kind == "ball" and domain.exterior):
        raise UnsupportedError(f"the mean exit time from {domain.spec} is infinite or undefined")
    batch = sample_exits_em(domain, start, n_walks, cfg, seed, threads=threads)
    if not np.all(batch.exited):
        raise MaxStepsExceeded("some walks did not exit", int((~batch.exited).sum()))
    return summarize(batch.exit_time, seed)


def em_time_bias(domain: Domain, start, dt: float) -> float:
    """Band for the residual step bias of the mean exit time at step ``dt``.

    Without a bridge correction a discretely monitored walk overshoots the wall by
    ``beta sigma sqrt(dt)`` on average (``beta = -zeta(1/2)/sqrt(2pi) ~ 0.5826``); the
    mean exit time moves by the slope of ``u = 2 pi (R^2 - r^2)/n`` at the wall
    times that overshoot.  This is used as a conservative band for ball domains.
    """
    if domain.kind != "ball" or domain.exterior:
        raise UnsupportedError("bias band is tabulated for ball interiors")
    R, n = domain.radius, domain.n
    beta = 0.5826
    return (2 * math.pi / n) * 2 * R * beta * math.sqrt(SIGMA2 * dt)
