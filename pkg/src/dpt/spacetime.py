"""Space-time staircases of 2x2 stress tensors on a slab (one space dimension).

A trajectory of cell states becomes a tensor field that is piecewise constant
on space-time cells.  Integrals, boundary traces, and the distributional
divergence mass of that staircase are exact sums, which makes the
measure-corrected determinant bound directly checkable on scheme output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symmat import det_packed, power, sphere_area

__all__ = ["SpacetimeSlab"]


@dataclass(frozen=True)
class SpacetimeSlab:
    """Packed 2x2 tensors per space-time cell: ``tensors[k, i]`` holds the
    value on ``[times[k], times[k+1]) x [y0 + i dy, y0 + (i+1) dy)``."""

    times: np.ndarray  # (K+1,) interval edges
    y0: float
    dy: float
    tensors: np.ndarray  # (K, N, 3) packed [a, b, c] = [[a, b], [b, c]]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        a = np.asarray(self.tensors, dtype=float)
        if a.ndim != 3 or a.shape[-1] != 3 or a.shape[0] != t.shape[0] - 1:
            raise ValueError("tensors must have shape (len(times)-1, N, 3)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "tensors", a)

    @property
    def dts(self) -> np.ndarray:
        return np.diff(self.times)

    def det_power_integral(self, n: int = 1) -> float:
        """Space-time integral of ``det^{1/n}`` over the staircase."""
        det = np.maximum(det_packed(self.tensors, 2), 0.0)
        per_step = (det ** (1.0 / n)).sum(axis=1) * self.dy
        return float(per_step @ self.dts)

    def boundary_trace_l1(self) -> float:
        """``|A n|`` integrated over all four sides of the slab."""
        a = self.tensors
        col_t = np.hypot(a[..., 0], a[..., 1])  # |A e_t| rows (a, b)
        col_y = np.hypot(a[..., 1], a[..., 2])  # |A e_y| rows (b, c)
        time_faces = (col_t[0].sum() + col_t[-1].sum()) * self.dy
        lateral = float((col_y[:, 0] + col_y[:, -1]) @ self.dts)
        return float(time_faces + lateral)

    def lateral_trace_l1(self) -> float:
        a = self.tensors
        col_y = np.hypot(a[..., 1], a[..., 2])
        return float((col_y[:, 0] + col_y[:, -1]) @ self.dts)

    def div_mass(self) -> float:
        """Total mass of the staircase's distributional row-divergence.

        Jumps across interior time faces carry ``|[A e_t]| dy``; jumps across
        interior space faces carry ``|[A e_y]| dt``.
        """
        a = self.tensors
        jt = np.diff(a, axis=0)  # (K-1, N, 3)
        time_mass = np.hypot(jt[..., 0], jt[..., 1]).sum() * self.dy
        jy = np.diff(a, axis=1)  # (K, N-1, 3)
        space_mass = float(np.hypot(jy[..., 1], jy[..., 2]).sum(axis=1) @ self.dts)
        return float(time_mass + space_mass)

    def convmeas_rhs(self) -> float:
        """Right side of the measure-corrected determinant bound on the slab."""
        d = 2
        total = self.boundary_trace_l1() + self.div_mass()
        return power(total, d / (d - 1.0)) / (d * power(sphere_area(d), 1.0 / (d - 1.0)))

    def reversed(self) -> "SpacetimeSlab":
        """Time-reversed staircase (momentum row flips sign)."""
        a = self.tensors[::-1].copy()
        a[..., 1] *= -1.0
        t = self.times
        times = t[-1] - t[::-1]
        return SpacetimeSlab(times, self.y0, self.dy, a)
