"""Monte Carlo convergence harness.

For each step count n the lattice is solved once; then M independent
replications each draw a sign path and an exit-time ladder, couple them,
read (Y^n, Z^n) along the path at the evaluation level, recover the true
Brownian value there by a bridge draw and accumulate squared differences
against the exact solution. Per-n L2 errors are regressed log-log against n.

Reproducibility: the master seed feeds numpy's SeedSequence; one child is
spawned per entry of n_list (in order) and each child spawns one stream per
replication. Every replication draws, in this fixed order: n sign bits, n
uniforms for the exit times, one standard normal for the bridge. Results are
therefore bit-identical for a given config regardless of batch size, and
accumulation uses exact partial-sum combination (math.fsum over batch sums)
so worker count cannot move the reported means.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .benchmarks import CASE_NAMES, BenchmarkCase, make_case
from .coupling import bridge_sample_batch
from .exit_time import sample_sigma, tabulate
from .solver import BsdeProblem, solve_explicit, solve_implicit

DEFAULT_N_LIST = (50, 100, 200, 400, 800)
DEFAULT_M = 20000
_BATCH = 4096

# a fitted slope above -alpha/2 by more than this slack gets flagged
SLOPE_SLACK = 0.15


@dataclass(frozen=True)
class ExperimentConfig:
    """One convergence run: which case, which n's, how many replications."""

    case: str
    n_list: Sequence[int] = DEFAULT_N_LIST
    M: int = DEFAULT_M
    T: float = 1.0
    t_eval: Optional[float] = None   # defaults to T/2
    seed: int = 12345
    scheme: str = "explicit"
    out: Optional[str] = None        # CSV target; consumed by the CLI
    quad_order: int = 64

    def __post_init__(self) -> None:
        if self.case not in CASE_NAMES:
            raise ValueError(f"unknown case {self.case!r}; choose one of {CASE_NAMES}")
        if not self.T > 0.0:
            raise ValueError(f"need T > 0, got T={self.T}")
        n_list = tuple(int(n) for n in self.n_list)
        if not n_list or any(n < 2 for n in n_list):
            raise ValueError(f"every n must be >= 2, got {n_list}")
        object.__setattr__(self, "n_list", n_list)
        if self.M < 1:
            raise ValueError(f"need M >= 1, got M={self.M}")
        t_eval = 0.5 * self.T if self.t_eval is None else float(self.t_eval)
        if not 0.0 <= t_eval < self.T:
            raise ValueError(f"need 0 <= t_eval < T, got t_eval={t_eval}")
        object.__setattr__(self, "t_eval", t_eval)
        if self.scheme not in ("explicit", "implicit"):
            raise ValueError(f"scheme must be explicit or implicit, got {self.scheme!r}")


@dataclass(frozen=True)
class ErrorRow:
    """Monte Carlo L2 errors at one n; e_z/se_z are None without a Z truth."""

    n: int
    e_y: float
    se_y: float
    e_z: Optional[float]
    se_z: Optional[float]


@dataclass(frozen=True, eq=False)
class ErrorSeries:
    """One row per n, plus the config echo used by the CSV emitter."""

    rows: tuple
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float


def _mean_and_se(parts_sum: list, parts_sq: list, m: int) -> tuple:
    total = math.fsum(parts_sum)
    mean = total / m
    if m < 2:
        return mean, 0.0
    total_sq = math.fsum(parts_sq)
    var = max(total_sq - m * mean * mean, 0.0) / (m - 1)
    return mean, math.sqrt(var / m)


def _run_single_n(config: ExperimentConfig, case: BenchmarkCase, n: int,
                  seedseq: np.random.SeedSequence) -> ErrorRow:
    T = config.T
    h = T / n
    # float-robust floor: t_eval/h may sit one ulp below an integer
    k = int(math.floor(config.t_eval / h + 1e-9))
    k = min(k, n - 1)
    t_k = k * h

    problem = BsdeProblem(T=T, n=n, g=case.g, f=case.f,
                          alpha=case.alpha, lip_f=case.lip_f)
    if config.scheme == "explicit":
        solution = solve_explicit(problem)
    else:
        solution = solve_implicit(problem)
    sqrt_h = solution.geom.sqrt_h
    y_level = solution.y[k]
    z_level = solution.z[k]
    cdf = tabulate(h)
    exact = case.exact
    has_z = exact.z_fn is not None

    rep_seeds = seedseq.spawn(config.M)
    sum_y, sq_y, sum_z, sq_z = [], [], [], []
    for start in range(0, config.M, _BATCH):
        stop = min(start + _BATCH, config.M)
        rows = stop - start
        signs = np.empty((rows, n), dtype=np.int8)
        uniforms = np.empty((rows, n))
        normals = np.empty(rows)
        for local, ss in enumerate(rep_seeds[start:stop]):
            rng = np.random.default_rng(ss)
            signs[local] = rng.integers(0, 2, n).astype(np.int8) * 2 - 1
            uniforms[local] = rng.random(n)
            normals[local] = rng.standard_normal()
        uniforms[uniforms == 0.0] = 2.0**-53

        sigmas = np.asarray(sample_sigma(cdf, uniforms.ravel())).reshape(rows, n)
        taus = np.cumsum(sigmas, axis=1)
        walk = np.cumsum(signs, axis=1, dtype=np.int64)
        skeletons = np.concatenate(
            [np.zeros((rows, 1)), sqrt_h * walk], axis=1
        )

        if k > 0:
            node = (k + walk[:, k - 1]) // 2
        else:
            node = np.zeros(rows, dtype=np.int64)
        y_n = y_level[node]
        z_n = z_level[node]

        b_tk = bridge_sample_batch(taus, skeletons, t_k, normals)
        dy = y_n - exact.y_fn(t_k, b_tk)
        dy2 = dy * dy
        sum_y.append(float(np.sum(dy2)))
        sq_y.append(float(np.sum(dy2 * dy2)))
        if has_z:
            dz = z_n - exact.z_fn(t_k, b_tk)
            dz2 = dz * dz
            sum_z.append(float(np.sum(dz2)))
            sq_z.append(float(np.sum(dz2 * dz2)))

    e_y, se_y = _mean_and_se(sum_y, sq_y, config.M)
    if has_z:
        e_z, se_z = _mean_and_se(sum_z, sq_z, config.M)
    else:
        e_z, se_z = None, None
    return ErrorRow(n=n, e_y=e_y, se_y=se_y, e_z=e_z, se_z=se_z)


def run_mc(config: ExperimentConfig) -> ErrorSeries:
    """Run the paired (walk, tau, bridge) protocol over config.n_list."""
    case = make_case(config.case, config.T, config.quad_order)
    children = np.random.SeedSequence(config.seed).spawn(len(config.n_list))
    rows = tuple(
        _run_single_n(config, case, n, child)
        for n, child in zip(config.n_list, children)
    )
    meta = {
        "case": config.case,
        "T": config.T,
        "t_eval": config.t_eval,
        "M": config.M,
        "seed": config.seed,
        "scheme": config.scheme,
        "alpha": case.alpha,
    }
    return ErrorSeries(rows=rows, meta=meta)


def regress_loglog(series: ErrorSeries, field_name: str = "e_y") -> RegressionResult:
    """OLS fit of log(error) against log(n)."""
    pairs = [(row.n, getattr(row, field_name)) for row in series.rows]
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 rows for a regression, got {len(pairs)}")
    if any(e is None or e <= 0.0 for _, e in pairs):
        raise ValueError(f"nonpositive or missing {field_name} values cannot be log-fitted")
    x = np.log([n for n, _ in pairs])
    y = np.log([e for _, e in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RegressionResult(slope=float(slope), intercept=float(intercept), r_squared=r2)


def slope_flag(slope: float, alpha: float, slack: float = SLOPE_SLACK) -> bool:
    """True when the fitted slope sits above the -alpha/2 rate by more than slack.

    A flagged slope is reported, not failed: it marks a run whose decay is
    visibly short of the theoretical rate.
    """
    return slope > -0.5 * alpha + slack


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.17g}"


def emit_csv(series: ErrorSeries, regressions: dict, path) -> None:
    """Write the error table with the config echo and regression footer.

    Header comments echo the meta dict; the data header is
    n,E_Y,SE_Y,E_Z,SE_Z with empty fields where no Z truth exists; footer
    comments carry slope/intercept/r2 per fitted field, the theoretical
    reference -alpha/2 and a flag line when a slope falls short of it.
    """
    lines = []
    for key in sorted(series.meta):
        lines.append(f"# {key}={series.meta[key]}")
    lines.append("n,E_Y,SE_Y,E_Z,SE_Z")
    for row in series.rows:
        lines.append(
            f"{row.n},{_fmt(row.e_y)},{_fmt(row.se_y)},{_fmt(row.e_z)},{_fmt(row.se_z)}"
        )
    alpha = series.meta.get("alpha")
    for label, reg in regressions.items():
        if reg is None:
            continue
        lines.append(f"# slope_{label}={reg.slope:.17g}")
        lines.append(f"# intercept_{label}={reg.intercept:.17g}")
        lines.append(f"# r2_{label}={reg.r_squared:.17g}")
        if alpha is not None and slope_flag(reg.slope, alpha):
            lines.append(
                f"# flag_{label}=slope above theoretical -alpha/2 + {SLOPE_SLACK}"
            )
    if alpha is not None:
        lines.append(f"# theory_slope={-0.5 * alpha:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_scalar(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def parse_csv(path) -> tuple:
    """Read back emit_csv output: (ErrorSeries, footer dict).

    Floats round-trip exactly (17 significant digits); comment keys seen
    before the data header populate meta, those after populate the footer.
    """
    meta, footer, rows = {}, {}, []
    seen_header = False
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                target = footer if seen_header else meta
                target[key.strip()] = _parse_scalar(value.strip())
                continue
            if line.startswith("n,"):
                seen_header = True
                continue
            parts = line.split(",")
            rows.append(
                ErrorRow(
                    n=int(parts[0]),
                    e_y=float(parts[1]),
                    se_y=float(parts[2]),
                    e_z=float(parts[3]) if parts[3] else None,
                    se_z=float(parts[4]) if parts[4] else None,
                )
            )
    return ErrorSeries(rows=tuple(rows), meta=meta), footer
