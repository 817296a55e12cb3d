"""Particular solutions of the Lie system on SL(2,R) and right translations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .sl2 import SL2Element
from .systems import (
    DEFAULT_SOLVER,
    CoeffLike,
    SolverConfig,
    SystemKind,
    Trajectory,
    as_coefficient,
    integrate,
)

_REDUCED = SystemKind("reduced_sl2")


@dataclass
class ReducedPath:
    """Group elements ``g(t_k)`` on a uniform grid.

    ``entries`` has shape ``(K, 4)`` holding ``(alpha, beta, gamma, delta)``
    per sample.
    """

    times: np.ndarray
    entries: np.ndarray
    b1_fingerprint: str
    meta: dict = field(default_factory=dict)

    @property
    def elements(self) -> List[SL2Element]:
        return [SL2Element(*map(float, row)) for row in self.entries]

    def element(self, k: int) -> SL2Element:
        return SL2Element(*map(float, self.entries[k]))

    def __len__(self):
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def truncated(self) -> bool:
        return bool(self.meta.get("truncated", False))

    @property
    def dets(self) -> np.ndarray:
        e = self.entries
        return e[:, 0] * e[:, 3] - e[:, 1] * e[:, 2]

    def as_trajectory(self) -> Trajectory:
        t0 = float(self.times[0])
        t1 = float(self.meta.get("t1", self.times[-1]))
        return Trajectory("reduced_sl2", self.times, self.entries, t0, t1, self.dt, dict(self.meta))


def solve_reduced(b1: CoeffLike, t0: float = 0.0, t1: float = 1.0,
                  cfg: SolverConfig = DEFAULT_SOLVER) -> ReducedPath:
    """Integrate ``dg/dt = -(a3 + b1(t) a1) g`` from ``g(t0) = e``."""
    coeff = as_coefficient(b1)
    traj = integrate(_REDUCED, coeff, [1.0, 0.0, 0.0, 1.0], cfg, t0, t1)
    meta = dict(traj.meta)
    meta["t1"] = t1
    return ReducedPath(traj.times, traj.states, coeff.fingerprint, meta)


def right_translate(path: ReducedPath, g0: SL2Element) -> ReducedPath:
    """The solution ``g(t) g0`` through ``g0`` at the initial time."""
    a, b, c, d = g0.as_tuple()
    e = path.entries
    out = np.column_stack([
        e[:, 0] * a + e[:, 1] * c,
        e[:, 0] * b + e[:, 1] * d,
        e[:, 2] * a + e[:, 3] * c,
        e[:, 2] * b + e[:, 3] * d,
    ])
    meta = dict(path.meta)
    meta["right_translated"] = True
    return ReducedPath(path.times.copy(), out, path.b1_fingerprint, meta)


def reduced_residual(path: ReducedPath, b1: CoeffLike) -> float:
    """Max deviation of the central-difference derivative from ``-(a3 + b1 a1) g``.

    Interior samples only; the error is O(dt^2).
    """
    coeff = as_coefficient(b1)
    e = path.entries
    if len(e) < 3:
        return 0.0
    h = path.dt
    deriv = (e[2:] - e[:-2]) / (2.0 * h)
    t = path.times[1:-1]
    b = np.asarray(coeff(t), dtype=float) * np.ones_like(t)
    mid = e[1:-1]
    rhs = np.column_stack([-b * mid[:, 2], -b * mid[:, 3], mid[:, 0], mid[:, 1]])
    return float(np.max(np.abs(deriv - rhs)))
