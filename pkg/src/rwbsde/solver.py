"""Backward dynamic programming for (Y, Z) on the walk lattice.

Two sweeps are provided. The explicit one advances the generator with the
already-known next-level Y values and is the default used by the Monte Carlo
harness; the implicit one solves a per-node fixed point by Picard iteration
and exists to measure the O(h) gap between the two. Both evaluate the
generator at time t_{k+1} with the state at t_k.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .lattice import (
    ENUMERATION_CAP,
    LatticeGeometry,
    RademacherPath,
    level_coordinates,
    sign_matrix,
)

TerminalFn = Callable[[np.ndarray], np.ndarray]
DriverFn = Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class PicardConvergenceError(RuntimeError):
    """Per-node fixed point failed to contract within max_iter."""


@dataclass(frozen=True)
class BsdeProblem:
    """Problem instance: terminal function, generator and regularity metadata.

    Parameters
    ----------
    T, n : horizon and step count; h = T/n.
    g : terminal function, must accept numpy arrays (whole levels at once).
    f : generator, called as f(t, x, y, z) with scalar t and level arrays.
    alpha : Hoelder order of g in (0, 1].
    p0 : polynomial growth order of g, >= 0.
    lip_f : optional Lipschitz constant of f; when given, the implicit
        sweep checks the contraction condition h*lip_f < 1 up front.
    """

    T: float
    n: int
    g: TerminalFn
    f: DriverFn
    alpha: float = 1.0
    p0: float = 0.0
    lip_f: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.T > 0.0:
            raise ValueError(f"need T > 0, got T={self.T}")
        if self.n < 1:
            raise ValueError(f"need n >= 1, got n={self.n}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"need alpha in (0, 1], got {self.alpha}")
        if self.p0 < 0.0:
            raise ValueError(f"need p0 >= 0, got {self.p0}")
        if self.lip_f is not None and self.lip_f < 0.0:
            raise ValueError(f"need lip_f >= 0, got {self.lip_f}")

    @property
    def h(self) -> float:
        return self.T / self.n

    @property
    def geometry(self) -> LatticeGeometry:
        return LatticeGeometry(n=self.n, h=self.T / self.n)


@dataclass(frozen=True, eq=False)
class SolutionLattice:
    """Level arrays of Y (levels 0..n) and Z (levels 0..n-1)."""

    geom: LatticeGeometry
    y: tuple
    z: tuple
    scheme: str

    @property
    def n(self) -> int:
        return self.geom.n

    def root(self) -> tuple:
        """(Y, Z) at the single node of level 0."""
        return float(self.y[0][0]), float(self.z[0][0])


def _terminal_level(problem: BsdeProblem, geom: LatticeGeometry) -> np.ndarray:
    vals = np.asarray(problem.g(level_coordinates(geom, geom.n)), dtype=float)
    if vals.ndim == 0:
        vals = np.full(geom.n + 1, float(vals))
    if vals.shape != (geom.n + 1,):
        raise ValueError("terminal function g must map a level array to a level array")
    return vals


def solve_explicit(problem: BsdeProblem) -> SolutionLattice:
    """Backward sweep with Y at t_{k+1} inside the generator.

    Per node: z[k][i] = (Y+ - Y-)/(2 sqrt(h)) and
    y[k][i] = (Y+ + Y-)/2 + h*(f(t_{k+1}, x, Y+, z) + f(t_{k+1}, x, Y-, z))/2,
    the two-point conditional expectation over the next sign.
    """
    solve_explicit.calls += 1
    geom = problem.geometry
    n, h, sh = geom.n, geom.h, geom.sqrt_h
    y = [None] * (n + 1)
    z = [None] * n
    y[n] = _terminal_level(problem, geom)
    for k in range(n - 1, -1, -1):
        up = y[k + 1][1:]
        dn = y[k + 1][:-1]
        x = level_coordinates(geom, k)
        zk = (up - dn) / (2.0 * sh)
        t_next = (k + 1) * h
        fu = problem.f(t_next, x, up, zk)
        fd = problem.f(t_next, x, dn, zk)
        y[k] = 0.5 * (up + dn) + 0.5 * h * (fu + fd)
        z[k] = zk
    return SolutionLattice(geom=geom, y=tuple(y), z=tuple(z), scheme="explicit")


solve_explicit.calls = 0


def solve_implicit(problem: BsdeProblem, tol: float = 1e-12, max_iter: int = 100) -> SolutionLattice:
    """Backward sweep with the generator at the fixed point Y at t_k.

    Per node solves y = (Y+ + Y-)/2 + h*f(t_{k+1}, x, y, z) by Picard
    iteration; h*lip_f < 1 guarantees contraction.
    """
    solve_implicit.calls += 1
    if not tol > 0.0:
        raise ValueError(f"need tol > 0, got {tol}")
    if max_iter < 1:
        raise ValueError(f"need max_iter >= 1, got {max_iter}")
    geom = problem.geometry
    n, h, sh = geom.n, geom.h, geom.sqrt_h
    if problem.lip_f is not None and h * problem.lip_f >= 1.0:
        raise ValueError(
            f"contraction condition violated: h*lip_f = {h * problem.lip_f:.6g} >= 1"
        )
    y = [None] * (n + 1)
    z = [None] * n
    y[n] = _terminal_level(problem, geom)
    for k in range(n - 1, -1, -1):
        up = y[k + 1][1:]
        dn = y[k + 1][:-1]
        x = level_coordinates(geom, k)
        zk = (up - dn) / (2.0 * sh)
        base = 0.5 * (up + dn)
        t_next = (k + 1) * h
        yk = base.copy()
        for _ in range(max_iter):
            ynew = base + h * problem.f(t_next, x, yk, zk)
            delta = float(np.max(np.abs(ynew - yk)))
            yk = ynew
            if delta < tol:
                break
        else:
            raise PicardConvergenceError(
                f"no contraction at level {k}: last update {delta:.3e} after {max_iter} iterations"
            )
        y[k] = yk
        z[k] = zk
    return SolutionLattice(geom=geom, y=tuple(y), z=tuple(z), scheme="implicit")


solve_implicit.calls = 0


def evaluate_along_path(solution: SolutionLattice, path: RademacherPath, k: int) -> tuple:
    """(Y, Z) at the node reached by the first k steps of the path."""
    n = solution.n
    if path.n != n:
        raise ValueError(f"path length {path.n} does not match lattice n={n}")
    if not 0 <= k <= n - 1:
        raise IndexError(f"level k={k} outside 0..{n - 1}")
    i = int(np.count_nonzero(path.steps[:k] == 1))
    return float(solution.y[k][i]), float(solution.z[k][i])


def z_by_representation(
    problem: BsdeProblem,
    solution: SolutionLattice,
    k: int,
    i: int,
    cap: int = ENUMERATION_CAP,
) -> float:
    """Z at node (k, i) via the discrete Malliavin-weight expectations.

    Enumerates the 2**(n-k) remaining sign tails (each of weight
    2**-(n-k)) and returns

        E_k[ g(B_T) (B_T - B_k)/(t_n - t_k) ]
      + E_k[ h * sum_{m=k+1}^{n-1} f(t_{m+1}, B_m, Y, Z_m) (B_m - B_k)/(t_m - t_k) ],

    where the y-argument of f follows the convention of the scheme that
    produced the lattice (level m+1 node for the explicit sweep, level m
    node for the implicit one); with that convention the result equals the
    swept z[k][i] up to rounding.
    """
    geom = solution.geom
    n, h, sh = geom.n, geom.h, geom.sqrt_h
    if not 0 <= k <= n - 1:
        raise IndexError(f"level k={k} outside 0..{n - 1}")
    if not 0 <= i <= k:
        raise IndexError(f"node i={i} outside 0..{k} at level {k}")
    m_tail = n - k
    if m_tail > cap:
        raise ValueError(f"n - k = {m_tail} exceeds the enumeration cap {cap}")

    tails = sign_matrix(m_tail)                       # (R, m_tail)
    partial = np.cumsum(tails, axis=1, dtype=np.int64)
    c0 = 2 * i - k                                    # start coordinate in sqrt(h) units

    b_terminal = sh * (c0 + partial[:, -1]).astype(float)
    increment_n = sh * partial[:, -1].astype(float)
    total = float(np.mean(problem.g(b_terminal) * increment_n)) / (m_tail * h)

    explicit = solution.scheme == "explicit"
    for m in range(k + 1, n):
        j = m - k - 1                                 # tail column of step m
        s_m = partial[:, j]
        coord_m = c0 + s_m
        node_m = (coord_m + m) // 2
        x_m = sh * coord_m.astype(float)
        z_m = solution.z[m][node_m]
        if explicit:
            coord_next = coord_m + tails[:, j + 1]
            y_arg = solution.y[m + 1][(coord_next + m + 1) // 2]
        else:
            y_arg = solution.y[m][node_m]
        weights = sh * s_m.astype(float) / ((m - k) * h)
        f_vals = problem.f((m + 1) * h, x_m, y_arg, z_m)
        total += h * float(np.mean(f_vals * weights))
    return total
