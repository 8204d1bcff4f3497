"""Command line front end: solve, convergence, tabulate-exit, verify."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import benchmarks, coupling, exit_time, experiment, lattice, solver


def _parse_n_list(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad n list {text!r}: {exc}") from None


def _cmd_solve(args) -> int:
    case = benchmarks.make_case(args.case, args.T, args.quad_order)
    problem = solver.BsdeProblem(
        T=args.T, n=args.n, g=case.g, f=case.f, alpha=case.alpha, lip_f=case.lip_f
    )
    if args.scheme == "explicit":
        solution = solver.solve_explicit(problem)
    else:
        solution = solver.solve_implicit(problem)
    y0, z0 = solution.root()
    print(f"case={args.case} n={args.n} T={args.T} scheme={args.scheme}")
    print(f"Y0 = {y0:.12g}")
    print(f"Z0 = {z0:.12g}")
    print(f"exact Y(0,0) = {case.exact.y_fn(0.0, 0.0):.12g}")
    if case.exact.z_fn is not None:
        print(f"exact Z(0,0) = {case.exact.z_fn(0.0, 0.0):.12g}")
    return 0


def _cmd_convergence(args) -> int:
    config = experiment.ExperimentConfig(
        case=args.case,
        n_list=args.n,
        M=args.M,
        T=args.T,
        t_eval=args.t_eval,
        seed=args.seed,
        scheme=args.scheme,
        out=args.out,
    )
    series = experiment.run_mc(config)
    regressions = {"Y": experiment.regress_loglog(series, "e_y")}
    if series.rows[0].e_z is not None:
        regressions["Z"] = experiment.regress_loglog(series, "e_z")
    experiment.emit_csv(series, regressions, config.out)
    alpha = series.meta["alpha"]
    for label, reg in regressions.items():
        note = ""
        if experiment.slope_flag(reg.slope, alpha):
            note = f"  [flag: above -alpha/2 + {experiment.SLOPE_SLACK}]"
        print(f"slope_{label} = {reg.slope:+.4f}  (r2 = {reg.r_squared:.4f}){note}")
    print(f"theory slope = {-0.5 * alpha:+.4f}   wrote {args.out}")
    return 0


def _cmd_tabulate_exit(args) -> int:
    cdf = exit_time.tabulate(args.h, args.points, args.t_min, args.t_max)
    with open(args.out, "w") as fh:
        fh.write("t,F\n")
        for t, f in zip(cdf.grid, cdf.values):
            fh.write(f"{t:.17g},{f:.17g}\n")
    print(f"wrote {cdf.size} rows to {args.out} (tail mass {cdf.tail_mass:.3g})")
    return 0


def _check(name: str, ok: bool, detail: str = "") -> bool:
    tag = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
    return ok


def _cmd_verify(args) -> int:
    rng = np.random.default_rng(20240817)
    ok = True

    # enumeration oracle: f == 0 root value equals the endpoint average of g
    n, T = 8, 1.0
    coeffs = rng.normal(size=4)
    g = lambda x: coeffs[0] + coeffs[1] * x + coeffs[2] * x**2 + coeffs[3] * x**3
    problem = solver.BsdeProblem(T=T, n=n, g=g, f=lambda t, x, y, z: 0.0 * y)
    solution = solver.solve_explicit(problem)
    signs = lattice.sign_matrix(n)
    endpoints = problem.geometry.sqrt_h * signs.sum(axis=1, dtype=np.int64)
    gap = abs(solution.y[0][0] - g(endpoints.astype(float)).mean())
    ok &= _check("enumeration oracle (f=0 martingale average)", gap <= 1e-12, f"gap {gap:.2e}")

    # Z representation identity on the explicit lattice
    case = benchmarks.make_case("square", T)
    problem = solver.BsdeProblem(T=T, n=n, g=case.g, f=case.f, lip_f=1.0)
    solution = solver.solve_explicit(problem)
    worst = 0.0
    for k in (0, n // 2):
        for i in range(k + 1):
            rep = solver.z_by_representation(problem, solution, k, i)
            worst = max(worst, abs(rep - solution.z[k][i]))
    ok &= _check("Z Malliavin-weight representation", worst <= 1e-10, f"max dev {worst:.2e}")

    # exit time: inversion vs series, and the table mean
    h = 0.4
    grid = np.geomspace(h / 100, 20 * h, 200)
    sup = float(np.max(np.abs(
        exit_time.cdf_laplace_inversion(grid, h) - exit_time.cdf_series(grid, h)
    )))
    ok &= _check("Talbot inversion vs series CDF", sup <= 1e-6, f"sup {sup:.2e}")
    cdf = exit_time.tabulate(h)
    mean_gap = abs(exit_time.tabulated_moment(cdf, 1.0) - h)
    ok &= _check("table quadrature mean = h", mean_gap <= 1e-6 * h, f"gap {mean_gap:.2e}")

    # coupling: exact +-sqrt(h) increments and the variance identity
    n_steps, n_paths = 100, 10_000
    cdf_c = exit_time.tabulate(T / n_steps)
    sqrt_h = np.sqrt(T / n_steps)
    exact_incr = True
    for _ in range(50):
        path = lattice.RademacherPath(rng.integers(0, 2, n_steps) * 2 - 1, T / n_steps)
        taus = exit_time.sample_tau_sequence(cdf_c, n_steps, rng)
        spath = coupling.couple(path, taus)
        exact_incr &= bool(np.all(np.abs(spath.increments) == sqrt_h))
    ok &= _check("skeleton increments exactly +-sqrt(h)", exact_incr)
    k_lo, k_hi = n_steps // 4, n_steps
    signs = rng.integers(0, 2, (n_paths, n_steps)) * 2 - 1
    seg = signs[:, k_lo:k_hi].sum(axis=1, dtype=np.int64).astype(float) * sqrt_h
    sq = seg * seg
    gap = abs(sq.mean() - (k_hi - k_lo) * T / n_steps)
    se3 = 3.0 * sq.std(ddof=1) / np.sqrt(n_paths)
    ok &= _check("E(B_tau_m - B_tau_k)^2 = t_m - t_k", gap <= se3, f"gap {gap:.2e} vs 3SE {se3:.2e}")

    # benchmarks: terminal consistency, Z = dY/db, PDE residual, quadrature oracle
    b_grid = np.linspace(-3 * np.sqrt(T), 3 * np.sqrt(T), 33)
    for name, tol in (("exp", 1e-10), ("square", 1e-10), ("sqrt", 1e-7)):
        bc = benchmarks.make_case(name, T)
        gap = benchmarks.verify_terminal(bc.exact, bc.g, b_grid)
        ok &= _check(f"terminal consistency ({name})", gap <= tol, f"sup {gap:.2e}")
    sq_case = benchmarks.make_case("square", T).exact
    t, b, eps = 0.4, 0.7, 1e-4
    resid = (
        (sq_case.y_fn(t + eps, b) - sq_case.y_fn(t - eps, b)) / (2 * eps)
        + 0.5 * (sq_case.y_fn(t, b + eps) - 2 * sq_case.y_fn(t, b) + sq_case.y_fn(t, b - eps)) / eps**2
        + sq_case.y_fn(t, b)
        + (sq_case.y_fn(t, b + eps) - sq_case.y_fn(t, b - eps)) / (2 * eps)
    )
    ok &= _check("square-case PDE residual", abs(resid) <= 1e-4, f"|resid| {abs(resid):.2e}")
    m_grid = np.linspace(0.0, 12.0, 61)
    quad_gap = float(np.max(np.abs(
        benchmarks._sqrt_abs_moment(m_grid, 64) - benchmarks.sqrt_abs_moment_reference(m_grid)
    )))
    ok &= _check("sqrt-case quadrature vs closed form", quad_gap <= 1e-8, f"sup {quad_gap:.2e}")

    print("verify:", "all checks passed" if ok else "FAILURES above")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwbsde",
        description="Random-walk BSDE lattice solver and convergence harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one lattice and print the root values")
    p.add_argument("--case", required=True, choices=benchmarks.CASE_NAMES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--scheme", choices=("explicit", "implicit"), default="explicit")
    p.add_argument("--quad-order", type=int, default=benchmarks.DEFAULT_QUAD_ORDER)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("convergence", help="Monte Carlo L2 errors and log-log slopes")
    p.add_argument("--case", required=True, choices=benchmarks.CASE_NAMES)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--t-eval", type=float, default=None, dest="t_eval")
    p.add_argument("--n", type=_parse_n_list, default=experiment.DEFAULT_N_LIST)
    p.add_argument("--M", type=int, default=experiment.DEFAULT_M)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--scheme", choices=("explicit", "implicit"), default="explicit")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("tabulate-exit", help="write the exit-time CDF table as CSV")
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--points", type=int, default=exit_time.DEFAULT_GRID_SIZE)
    p.add_argument("--t-min", type=float, default=None, dest="t_min")
    p.add_argument("--t-max", type=float, default=None, dest="t_max")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_tabulate_exit)

    p = sub.add_parser("verify", help="run the oracle/property checks")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
