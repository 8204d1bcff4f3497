"""Scaled Rademacher walk and its recombining binomial tree geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

# 2**20 ~ 1e6 paths; enumeration is oracle support, never a hot path
ENUMERATION_CAP = 20


@dataclass(frozen=True)
class LatticeGeometry:
    """Time/space geometry of an n-step walk with time step h.

    Node (k, i), 0 <= i <= k, carries i up-moves and sits at space
    coordinate (2i - k)*sqrt(h) at time k*h; level k has k + 1 nodes.
    sqrt(h) is computed once here so that every module indexing the tree
    produces bit-identical coordinates.
    """

    n: int
    h: float
    sqrt_h: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need n >= 1, got n={self.n}")
        if not self.h > 0.0:
            raise ValueError(f"need h > 0, got h={self.h}")
        object.__setattr__(self, "sqrt_h", math.sqrt(self.h))

    @property
    def horizon(self) -> float:
        """T = n*h in the arithmetic actually used downstream."""
        return self.n * self.h


@dataclass(frozen=True, eq=False)
class RademacherPath:
    """One realisation of n i.i.d. +-1 signs together with the step h."""

    steps: np.ndarray
    h: float

    def __post_init__(self) -> None:
        steps = np.asarray(self.steps, dtype=np.int8)
        if steps.ndim != 1 or steps.size == 0:
            raise ValueError("steps must be a non-empty 1-d sign sequence")
        if not np.all(np.abs(steps) == 1):
            raise ValueError("every step must be exactly +1 or -1")
        if not self.h > 0.0:
            raise ValueError(f"need h > 0, got h={self.h}")
        object.__setattr__(self, "steps", steps)

    @property
    def n(self) -> int:
        return int(self.steps.size)


def walk_values(path: RademacherPath) -> np.ndarray:
    """Walk positions sqrt(h)*(e_1 + ... + e_k) for k = 0..n.

    The cumulative sign sum is exact integer arithmetic; each position is a
    single int*sqrt(h) product, matching node_coordinate bit for bit.
    """
    out = np.empty(path.n + 1)
    out[0] = 0.0
    out[1:] = math.sqrt(path.h) * np.cumsum(path.steps, dtype=np.int64)
    return out


def node_coordinate(geom: LatticeGeometry, k: int, i: int) -> float:
    """Space coordinate (2i - k)*sqrt(h) of node (k, i)."""
    if not 0 <= k <= geom.n:
        raise IndexError(f"level k={k} outside 0..{geom.n}")
    if not 0 <= i <= k:
        raise IndexError(f"node i={i} outside 0..{k} at level {k}")
    return (2 * i - k) * geom.sqrt_h


def level_coordinates(geom: LatticeGeometry, k: int) -> np.ndarray:
    """All k+1 node coordinates of level k, bottom-up."""
    if not 0 <= k <= geom.n:
        raise IndexError(f"level k={k} outside 0..{geom.n}")
    return (2 * np.arange(k + 1, dtype=np.int64) - k) * geom.sqrt_h


def sign_matrix(m: int, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """All 2**m sign rows as an int8 array (exhaustive-oracle support)."""
    if m < 0:
        raise ValueError(f"need m >= 0, got m={m}")
    if m > cap:
        raise ValueError(f"enumeration of 2**{m} paths exceeds the cap 2**{cap}")
    codes = np.arange(1 << m, dtype=np.int64)[:, None]
    bits = (codes >> np.arange(m, dtype=np.int64)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def enumerate_paths(n: int, h: float = 1.0, cap: int = ENUMERATION_CAP) -> Iterator[RademacherPath]:
    """Yield each of the 2**n sign sequences exactly once."""
    if n < 1:
        raise ValueError(f"need n >= 1, got n={n}")
    for row in sign_matrix(n, cap=cap):
        yield RademacherPath(steps=row, h=h)
