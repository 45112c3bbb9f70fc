"""Command-line interface: ``greenpath {kernel,solve,mc,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import sys

import numpy as np

from . import covering, kernels, montecarlo, verify
from .errors import GreenpathError, UnsupportedError
from .fields import ScalarField
from .geometry import Domain, parse_domain
from .quadrature import QuadratureSpec
from .solver import BoundaryValueProblem, solve_elliptic, solve_parabolic, solve_wave_retarded

KERNELS = ("elliptic", "heat", "schrodinger", "fixed-energy", "green", "poisson", "first-passage", "wave-I")
EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(v) -> str:
    return f"{float(v):.16e}"


def _vector(text: str | None, what: str) -> np.ndarray | None:
    if text is None:
        return None
    try:
        return np.array([float(c) for c in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None


def _domain(text: str) -> Domain:
    try:
        return parse_domain(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


@contextlib.contextmanager
def _output(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# -- kernel ---------------------------------------------------------------------


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--kernel {args.kernel} needs --{name.replace('_', '-')}")


def _kernel_value(args, dom: Domain, x, xp):
    k = args.kernel
    n = dom.n
    if k in ("elliptic", "schrodinger", "fixed-energy") and dom.kind != "free":
        raise UsageError(f"--kernel {k} is the free-space kernel; use --domain free:<n>")
    if k == "wave-I":
        _require(args, "u", "w")
        return complex(kernels.hyperbolic_I(n, args.u, args.w))
    r = float(np.linalg.norm(x - xp))
    if k == "elliptic":
        return complex(kernels.free_elliptic(n, r))
    if k == "fixed-energy":
        _require(args, "energy")
        return complex(kernels.fixed_energy(n, r, args.energy))
    if k == "schrodinger":
        _require(args, "dt")
        return complex(kernels.free_heat(n, r, args.dt, "i"))
    if k == "heat":
        _require(args, "dt")
        if dom.kind == "free":
            return complex(kernels.free_heat(n, r, args.dt))
        return complex(kernels.heat_domain_kernel(dom, args.bc, x, args.dt, xp))
    if k == "green":
        return complex(kernels.domain_green(dom, args.bc, x, xp))
    if k == "poisson":
        return complex(kernels.boundary_kernel_elliptic(dom, x, xp, args.mode))
    if k == "first-passage":
        _require(args, "dt")
        return complex(kernels.boundary_kernel_parabolic(dom, x, args.dt, xp))
    raise UsageError(f"unknown kernel {k}")


def cmd_kernel(args) -> int:
    dom = _domain(args.domain)
    n = dom.n
    if args.kernel == "wave-I":
        coords, names = [args.u, args.w], ["u", "w"]
        x = xp = None
    else:
        x, xp = _vector(args.x, "--x"), _vector(args.xp, "--xp")
        if x is None or xp is None:
            raise UsageError(f"--kernel {args.kernel} needs --x and --xp")
        if x.size != n or xp.size != n:
            raise UsageError(f"--x and --xp need {n} coordinates for {dom.spec}")
        coords = [*x, *xp]
        names = [f"x{i + 1}" for i in range(n)] + [f"xp{i + 1}" for i in range(n)]
    val = _kernel_value(args, dom, x, xp)
    s = "i" if args.kernel == "schrodinger" else "1"
    if args.dump_images:
        order = args.image_order
        if order is None:
            order = covering.truncation_order(dom, args.dt or 1.0, 1e-12) if dom.kind != "halfspace" else 0
        exp = covering.enumerate_images(dom, xp, order, args.dt)
        with open(args.dump_images, "w") as fh:
            fh.write(exp.to_json())
    with _output(args.output) as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["domain", "bc", "s", "n", *names, "value_re", "value_im"])
        w.writerow([dom.spec, args.bc, s, n, *(fmt(c) for c in coords), fmt(val.real), fmt(val.imag)])
    return EXIT_OK


# -- solve ----------------------------------------------------------------------


def _field(spec, n):
    """A field from ``"expr"`` or ``{"expr": ..., "support": [[center...], radius]}``."""
    if spec is None:
        return None
    if isinstance(spec, (int, float)):
        return ScalarField.const(spec, n)
    if isinstance(spec, str):
        return ScalarField.from_expr(spec, n)
    if isinstance(spec, dict) and "expr" in spec:
        return ScalarField.from_expr(str(spec["expr"]), n, support=spec.get("support"))
    raise UsageError(f"cannot read field {spec!r}")


def _grid_points(grid: dict, n: int) -> np.ndarray:
    if "points" in grid:
        P = np.atleast_2d(np.asarray(grid["points"], dtype=float))
    elif "axes" in grid:
        axes = grid["axes"]
        if len(axes) != n:
            raise UsageError(f"grid.axes needs {n} entries [start, stop, count]")
        lines = [np.linspace(a, b, int(k)) for a, b, k in axes]
        P = np.stack([g.ravel() for g in np.meshgrid(*lines, indexing="ij")], axis=1)
    else:
        raise UsageError("grid needs 'points' or 'axes'")
    if P.shape[1] != n:
        raise UsageError(f"grid points must have {n} coordinates")
    return P


def load_problem(path: str) -> tuple[BoundaryValueProblem, np.ndarray, list, QuadratureSpec]:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: not valid JSON ({exc})") from None
    unknown = set(spec) - {"domain", "class", "bc", "case", "f", "phi", "psi", "psi_t", "grid", "quadrature"}
    if unknown:
        raise UsageError(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("domain", "class", "grid"):
        if key not in spec:
            raise UsageError(f"{path}: missing '{key}'")
    dom = _domain(spec["domain"])
    n = dom.n
    bvp = BoundaryValueProblem(
        dom, spec["class"], spec.get("bc", "dirichlet"),
        f=_field(spec.get("f"), n), phi=_field(spec.get("phi"), n),
        psi=_field(spec.get("psi"), n), psi_t=_field(spec.get("psi_t"), n),
        case=spec.get("case", "i" if spec["class"] == "hyperbolic" else "real"),
    )
    grid = spec["grid"]
    P = _grid_points(grid, n)
    times = [float(t) for t in grid.get("times", [0.0])]
    q = spec.get("quadrature", {})
    quad = QuadratureSpec(q.get("method", "sphere-cubature"), float(q.get("target_tol", 1e-8)),
                          int(q.get("max_evals", 20_000_000)))
    return bvp, P, times, quad


def cmd_solve(args) -> int:
    bvp, P, times, quad = load_problem(args.problem)
    if args.tol is not None:
        quad = QuadratureSpec(quad.method, args.tol, quad.max_evals)
    n = bvp.domain.n
    rows = []
    for t in times if bvp.pde_class != "elliptic" else [0.0]:
        for x in P:
            if bvp.pde_class == "elliptic":
                v = solve_elliptic(bvp, x, quad)
            elif bvp.pde_class == "parabolic":
                v = solve_parabolic(bvp, (x, t), quad)
            else:
                v = solve_wave_retarded(bvp, (x, t), quad)
            rows.append([*(fmt(c) for c in x), fmt(t), fmt(v)])
    with _output(args.output) as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow([*(f"x{i + 1}" for i in range(n)), "t", "value"])
        w.writerows(rows)
    return EXIT_OK


# -- mc -------------------------------------------------------------------------


def cmd_mc(args) -> int:
    dom = _domain(args.domain)
    x = _vector(args.x, "--x")
    if x is None or x.size != dom.n:
        raise UsageError(f"--x needs {dom.n} coordinates for {dom.spec}")
    cfg = montecarlo.WalkConfig(step_dt=args.dt, eps_shell=args.eps, horizon=args.horizon)
    n = dom.n
    per_walk = None
    if args.quantity == "exit-time":
        if not math.isfinite(args.horizon) and (
            dom.kind in ("free", "halfspace", "quadrant") or (dom.kind == "ball" and dom.exterior)
        ):
            raise UnsupportedError(f"the mean exit time from {dom.spec} is infinite; pass --horizon to censor")
        batch = montecarlo.sample_exits_em(dom, x, args.walks, cfg, args.seed)
        done = batch.exited
        est = montecarlo.summarize(batch.exit_time[done], args.seed) if done.any() else None
        result = {
            "mean": est.mean if est else None,
            "stderr": est.stderr if est else None,
            "n": int(args.walks),
            "seed": int(args.seed),
            "censored": int((~done).sum()),
        }
        per_walk = (["walk", *(f"x{i + 1}" for i in range(n)), "exit_time"],
                    [[k, *(fmt(c) for c in batch.exit_point[k]), fmt(batch.exit_time[k])] for k in range(args.walks)])
    elif args.quantity == "exit-point":
        pts = montecarlo.sample_exits_wos(dom, x, args.walks, args.eps, args.seed)
        est = montecarlo.summarize(np.linalg.norm(pts - x, axis=1), args.seed)
        result = {"mean": est.mean, "stderr": est.stderr, "n": est.n_samples, "seed": est.seed,
                  "statistic": "distance from start to exit point"}
        per_walk = (["walk", *(f"x{i + 1}" for i in range(n))],
                    [[k, *(fmt(c) for c in pts[k])] for k in range(args.walks)])
    else:
        f, phi, psi = (ScalarField.from_expr(e, n) if e is not None else None for e in (args.f, args.phi, args.psi))
        if args.quantity == "elliptic":
            bvp = BoundaryValueProblem(dom, "elliptic", f=f, phi=phi)
            est = montecarlo.estimate_solution_elliptic(bvp, x, args.walks, cfg, args.seed)
        else:
            if args.t is None:
                raise UsageError("--quantity parabolic needs --t")
            bvp = BoundaryValueProblem(dom, "parabolic", f=f, phi=phi, psi=psi or ScalarField.zero(n))
            est = montecarlo.estimate_solution_parabolic(bvp, (x, args.t), args.walks, cfg, args.seed)
        result = est.to_dict()
    if args.per_walk:
        if per_walk is None:
            raise UsageError("--per-walk is available for --quantity exit-time and exit-point")
        with open(args.per_walk, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(per_walk[0])
            w.writerows(per_walk[1])
    with _output(args.output) as out:
        out.write(json.dumps(result, sort_keys=True) + "\n")
    return EXIT_OK


# -- verify ---------------------------------------------------------------------


def cmd_verify(args) -> int:
    only = set(args.only) if args.only else None
    ok = True
    with _output(args.output) as out:
        out.write(f"greenpath verify suite={args.suite} seed={args.seed}\n")
        for res in verify.run_suite(args.suite, args.seed, only):
            ok &= res.passed
            out.write(res.report_line() + "\n")
            if args.details:
                for line in res.details:
                    out.write(f"    {line}\n")
            out.flush()
        out.write("ALL PASS\n" if ok else "SOME CRITERIA FAILED\n")
    return EXIT_OK if ok else EXIT_VERIFY


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=argparse.SUPPRESS,
                        help="worker threads (default: $GREENPATH_THREADS or 1); never changes results")
    p = _Parser(prog="greenpath", parents=[common],
                description="Green's functions, boundary-value solvers and random-walk estimators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    k = sub.add_parser("kernel", parents=[common], help="evaluate one kernel value, CSV output")
    k.add_argument("--kernel", choices=KERNELS, default="green")
    k.add_argument("--domain", required=True, help="free:<n> | halfspace:<n> | strip:<n> | box:<n> | ball:<n>:<R> | ball-ext:<n>:<R> | quadrant")
    k.add_argument("--bc", default="dirichlet", choices=("dirichlet", "neumann", "d", "n"))
    k.add_argument("--x", help="evaluation point, comma separated")
    k.add_argument("--xp", help="source point (or boundary point for poisson/first-passage)")
    k.add_argument("--dt", type=float, help="time difference (heat, schrodinger, first-passage)")
    k.add_argument("--energy", type=float, help="energy for the fixed-energy kernel")
    k.add_argument("--u", type=float, help="wave-I argument (t - t') - |x - x'|")
    k.add_argument("--w", type=float, help="mollifier width for wave-I")
    k.add_argument("--mode", choices=kernels.QUADRANT_MODES, default="printed", help="quadrant boundary-kernel normalization")
    k.add_argument("--dump-images", metavar="PATH", help="write the image expansion of --xp as JSON")
    k.add_argument("--image-order", type=int, help="shell order for --dump-images")
    k.add_argument("-o", "--output", help="output path (default stdout)")
    k.set_defaults(func=cmd_kernel)

    s = sub.add_parser("solve", parents=[common], help="solve a boundary-value problem from a JSON problem file, CSV output")
    s.add_argument("problem", help="problem file (JSON)")
    s.add_argument("--tol", type=float, help="override the quadrature target tolerance")
    s.add_argument("-o", "--output", help="output path (default stdout)")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("mc", parents=[common], help="Monte Carlo estimate, JSON output")
    m.add_argument("--domain", required=True)
    m.add_argument("--x", required=True, help="start point, comma separated")
    m.add_argument("--quantity", choices=("exit-time", "exit-point", "elliptic", "parabolic"), default="exit-time")
    m.add_argument("--walks", type=_positive_int, default=10_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--dt", type=float, default=1e-4, help="Euler-Maruyama step")
    m.add_argument("--eps", type=float, default=1e-4, help="walk-on-spheres shell width")
    m.add_argument("--horizon", type=float, default=math.inf, help="censor walks at this time")
    m.add_argument("--t", type=float, help="evaluation time (parabolic)")
    m.add_argument("--f", help="source expression")
    m.add_argument("--phi", help="boundary data expression")
    m.add_argument("--psi", help="initial data expression (parabolic)")
    m.add_argument("--per-walk", metavar="PATH", help="write per-walk CSV")
    m.add_argument("-o", "--output", help="output path (default stdout)")
    m.set_defaults(func=cmd_mc)

    v = sub.add_parser("verify", parents=[common], help="run the self-verification suite")
    v.add_argument("--suite", choices=("fast", "full"), default="fast")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--only", type=int, nargs="+", metavar="N", help="run only these criteria")
    v.add_argument("--details", action="store_true", help="print per-criterion detail tables")
    v.add_argument("-o", "--output", help="output path (default stdout)")
    v.set_defaults(func=cmd_verify)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if getattr(args, "bc", None) in ("d", "n"):
        args.bc = {"d": "dirichlet", "n": "neumann"}[args.bc]
    threads = getattr(args, "threads", None)
    saved = os.environ.get("GREENPATH_THREADS")
    if threads:
        os.environ["GREENPATH_THREADS"] = str(threads)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"greenpath {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GreenpathError, ValueError, NotImplementedError) as exc:
        print(f"greenpath {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"greenpath {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        if threads:
            if saved is None:
                os.environ.pop("GREENPATH_THREADS", None)
            else:
                os.environ["GREENPATH_THREADS"] = saved


def main() -> None:
    sys.exit(run())
