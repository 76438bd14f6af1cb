"""Domains, grids, and quadrature rules.

Four domain variants: a periodic torus given by a lattice basis, a ball, an
axis-aligned box, and (in two dimensions) a bounded convex polygon given by
halfspaces.  Fields sample cell centers; boundary and interior quadrature
rules are built here so inequality checks can integrate accurately on curved
boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import UnsupportedDomainError

__all__ = [
    "Torus",
    "Ball",
    "Box",
    "ConvexPolytope",
    "DomainSpec",
    "GridSpec",
    "Quadrature",
    "boundary_rule",
    "interior_rule",
]


@dataclass(frozen=True)
class Torus:
    """Periodic domain R^d / Gamma; ``basis`` rows are the lattice generators."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if b.shape[0] != b.shape[1]:
            raise ValueError("lattice basis must be square")
        if abs(np.linalg.det(b)) < 1e-14:
            raise ValueError("lattice basis is singular")
        object.__setattr__(self, "basis", b)

    @classmethod
    def unit(cls, d: int) -> "Torus":
        return cls(np.eye(d))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def volume(self) -> float:
        return float(abs(np.linalg.det(self.basis)))


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def volume(self) -> float:
        from .symmat import sphere_area

        d = self.dim
        return sphere_area(d) * self.radius**d / d

    @property
    def perimeter(self) -> float:
        from .symmat import sphere_area

        return sphere_area(self.dim) * self.radius ** (self.dim - 1)

    def bounding_box(self) -> "Box":
        return Box(self.center - self.radius, self.center + self.radius)


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise ValueError("box requires lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def perimeter(self) -> float:
        side = self.hi - self.lo
        vol = self.volume
        return float(sum(2.0 * vol / s for s in side))

    def bounding_box(self) -> "Box":
        return self


@dataclass(frozen=True)
class ConvexPolytope:
    """Intersection of halfspaces ``normals @ x <= offsets`` (dim 2 only)."""

    normals: np.ndarray
    offsets: np.ndarray
    _vertices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nrm = np.atleast_2d(np.asarray(self.normals, dtype=float))
        off = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if nrm.shape[0] != off.shape[0]:
            raise ValueError("one offset per halfspace required")
        if nrm.shape[1] != 2:
            raise UnsupportedDomainError("polytope domains are implemented for d=2 only")
        lengths = np.linalg.norm(nrm, axis=1)
        if np.any(lengths < 1e-14):
            raise ValueError("zero normal vector")
        nrm = nrm / lengths[:, None]
        off = off / lengths
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "_vertices", _polygon_vertices(nrm, off))

    @property
    def dim(self) -> int:
        return 2

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def volume(self) -> float:
        v = self._vertices
        x, y = v[:, 0], v[:, 1]
        return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    @property
    def perimeter(self) -> float:
        v = self._vertices
        return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())

    def bounding_box(self) -> "Box":
        v = self._vertices
        return Box(v.min(axis=0), v.max(axis=0))


DomainSpec = Union[Torus, Ball, Box, ConvexPolytope]


def _polygon_vertices(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Vertices of the polygon cut out by the halfspaces, ordered by angle."""
    m = normals.shape[0]
    pts = []
    for i in range(m):
        for j in range(i + 1, m):
            a = np.array([normals[i], normals[j]])
            if abs(np.linalg.det(a)) < 1e-12:
                continue
            x = np.linalg.solve(a, np.array([offsets[i], offsets[j]]))
            if np.all(normals @ x <= offsets + 1e-9):
                pts.append(x)
    if len(pts) < 3:
        raise ValueError("halfspaces do not bound a polygon with interior")
    pts = np.unique(np.round(np.array(pts), 12), axis=0)
    centroid = pts.mean(axis=0)
    # nonempty interior check: centroid strictly inside
    if not np.all(normals @ centroid < offsets - 1e-12):
        raise ValueError("polytope has empty interior")
    angles = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    return pts[np.argsort(angles)]


@dataclass(frozen=True)
class GridSpec:
    """Per-axis cell counts; sampling is at cell centers."""

    shape: tuple

    def __post_init__(self):
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        if any(n < 4 for n in shape):
            raise ValueError("every grid axis needs at least 4 cells")
        object.__setattr__(self, "shape", shape)

    @property
    def ncells(self) -> int:
        return int(np.prod(self.shape))

    def fractions(self) -> list[np.ndarray]:
        """Cell-center coordinates ``(i + 1/2)/n`` per axis."""
        return [(np.arange(n) + 0.5) / n for n in self.shape]


def cell_centers(domain: DomainSpec, grid: GridSpec) -> np.ndarray:
    """Cell-center coordinates, shape ``grid.shape + (d,)``.

    A torus is sampled uniformly on the fundamental domain; bounded domains
    are sampled on their bounding box.
    """
    fracs = np.meshgrid(*grid.fractions(), indexing="ij")
    s = np.stack(fracs, axis=-1)
    if isinstance(domain, Torus):
        return s @ domain.basis
    box = domain.bounding_box()
    return box.lo + s * (box.hi - box.lo)


def cell_volume(domain: DomainSpec, grid: GridSpec) -> float:
    if isinstance(domain, Torus):
        return domain.volume / grid.ncells
    box = domain.bounding_box()
    return box.volume / grid.ncells


def cell_spacing(domain: DomainSpec, grid: GridSpec) -> np.ndarray:
    if isinstance(domain, Torus):
        # spacing in fractional coordinates scaled by row lengths
        lengths = np.linalg.norm(domain.basis, axis=1)
        return lengths / np.array(grid.shape, dtype=float)
    box = domain.bounding_box()
    return (box.hi - box.lo) / np.array(grid.shape, dtype=float)


@dataclass(frozen=True)
class Quadrature:
    """points (m, d), weights (m,), and, for boundary rules, outward normals."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray | None = None


def _gauss_legendre(order: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _composite_gl(order: int, a: float, b: float, panels: int):
    edges = np.linspace(a, b, panels + 1)
    pts, wts = [], []
    for k in range(panels):
        x, w = _gauss_legendre(order, edges[k], edges[k + 1])
        pts.append(x)
        wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


def boundary_rule(domain: DomainSpec, order: int = 8, panels: int = 16) -> Quadrature:
    """Boundary quadrature with outward unit normals.

    Balls use angle parametrizations (trapezoid in the periodic angle,
    Gauss-Legendre otherwise); boxes and polygons use composite
    Gauss-Legendre of the given order per facet.
    """
    if isinstance(domain, Torus):
        raise UnsupportedDomainError("a torus has no boundary")
    if isinstance(domain, Ball):
        return _ball_boundary_rule(domain, order, panels)
    if isinstance(domain, Box):
        return _box_boundary_rule(domain, order, panels)
    if isinstance(domain, ConvexPolytope):
        return _polygon_boundary_rule(domain, order, panels)
    raise UnsupportedDomainError(f"unknown domain {type(domain).__name__}")


def _ball_boundary_rule(ball: Ball, order: int, panels: int) -> Quadrature:
    d = ball.dim
    if d == 2:
        m = max(order * panels, 16)
        theta = 2.0 * np.pi * np.arange(m) / m
        normals = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        pts = ball.center + ball.radius * normals
        w = np.full(m, 2.0 * np.pi * ball.radius / m)
        return Quadrature(pts, w, normals)
    if d == 3:
        mphi = max(2 * order, 16)
        phi = 2.0 * np.pi * np.arange(mphi) / mphi
        c, wc = np.polynomial.legendre.leggauss(max(order, 8) * max(panels // 4, 1))
        ct, st = c, np.sqrt(1.0 - c**2)
        normals = np.stack(
            [
                np.outer(st, np.cos(phi)).ravel(),
                np.outer(st, np.sin(phi)).ravel(),
                np.outer(ct, np.ones(mphi)).ravel(),
            ],
            axis=-1,
        )
        pts = ball.center + ball.radius * normals
        w = (np.outer(wc, np.full(mphi, 2.0 * np.pi / mphi)) * ball.radius**2).ravel()
        return Quadrature(pts, w, normals)
    raise UnsupportedDomainError("ball boundary quadrature implemented for d in {2, 3}")


def _box_boundary_rule(box: Box, order: int, panels: int) -> Quadrature:
    d = box.dim
    pts, wts, nrms = [], [], []
    for axis in range(d):
        others = [k for k in range(d) if k != axis]
        rules = [_composite_gl(order, box.lo[k], box.hi[k], panels) for k in others]
        if others:
            grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
            wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
            base_w = np.ones_like(grids[0])
            for wg in wgrids:
                base_w = base_w * wg
            npts = grids[0].size
        else:
            grids, base_w, npts = [], np.array([1.0]), 1
        for side, coord in ((-1.0, box.lo[axis]), (1.0, box.hi[axis])):
            p = np.zeros((npts, d))
            for k, g in zip(others, grids):
                p[:, k] = g.ravel()
            p[:, axis] = coord
            n = np.zeros((npts, d))
            n[:, axis] = side
            pts.append(p)
            wts.append(base_w.ravel())
            nrms.append(n)
    return Quadrature(np.concatenate(pts), np.concatenate(wts), np.concatenate(nrms))


def _polygon_boundary_rule(poly: ConvexPolytope, order: int, panels: int) -> Quadrature:
    v = poly.vertices
    pts, wts, nrms = [], [], []
    for k in range(v.shape[0]):
        a, b = v[k], v[(k + 1) % v.shape[0]]
        edge = b - a
        length = np.linalg.norm(edge)
        normal = np.array([edge[1], -edge[0]]) / length
        t, w = _composite_gl(order, 0.0, 1.0, panels)
        pts.append(a + np.outer(t, edge))
        wts.append(w * length)
        nrms.append(np.tile(normal, (t.size, 1)))
    return Quadrature(np.concatenate(pts), np.concatenate(wts), np.concatenate(nrms))


def interior_rule(domain: DomainSpec, nr: int = 64, nang: int = 128) -> Quadrature:
    """Interior quadrature for bounded domains.

    Balls get a polar/spherical rule (Gauss-Legendre radially, trapezoid in
    the periodic angle); boxes a tensor Gauss-Legendre rule; polygons a fan
    triangulation with a mapped tensor rule per triangle.
    """
    if isinstance(domain, Torus):
        raise UnsupportedDomainError("torus integrals use grid means")
    if isinstance(domain, Ball):
        return _ball_interior_rule(domain, nr, nang)
    if isinstance(domain, Box):
        rules = [_composite_gl(8, domain.lo[k], domain.hi[k], max(nr // 8, 2)) for k in range(domain.dim)]
        grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
        w = np.ones_like(grids[0])
        for wg in wgrids:
            w = w * wg
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return Quadrature(pts, w.ravel())
    if isinstance(domain, ConvexPolytope):
        return _polygon_interior_rule(domain, nr)
    raise UnsupportedDomainError(f"unknown domain {type(domain).__name__}")


def _ball_interior_rule(ball: Ball, nr: int, nang: int) -> Quadrature:
    d = ball.dim
    r, wr = _gauss_legendre(nr, 0.0, ball.radius)
    if d == 2:
        theta = 2.0 * np.pi * np.arange(nang) / nang
        wt = 2.0 * np.pi / nang
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        pts = ball.center + r[:, None, None] * dirs[None, :, :]
        w = (wr * r)[:, None] * wt
        return Quadrature(pts.reshape(-1, 2), np.broadcast_to(w, (nr, nang)).ravel())
    if d == 3:
        sphere = _ball_boundary_rule(Ball(np.zeros(3), 1.0), 8, max(nang // 16, 2))
        pts = ball.center + r[:, None, None] * sphere.points[None, :, :]
        w = (wr * r**2)[:, None] * sphere.weights[None, :]
        return Quadrature(pts.reshape(-1, 3), w.ravel())
    raise UnsupportedDomainError("ball interior quadrature implemented for d in {2, 3}")


def _polygon_interior_rule(poly: ConvexPolytope, n: int) -> Quadrature:
    v = poly.vertices
    centroid = v.mean(axis=0)
    x, w = np.polynomial.legendre.leggauss(max(n // 4, 8))
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    pts, wts = [], []
    for k in range(v.shape[0]):
        a, b = v[k], v[(k + 1) % v.shape[0]]
        # map unit square onto triangle (centroid, a, b) via collapsed edge
        u, s = np.meshgrid(x, x, indexing="ij")
        wu, ws = np.meshgrid(w, w, indexing="ij")
        p = centroid + u[..., None] * ((a - centroid) + s[..., None] * (b - a))
        ca, cb = a - centroid, b - a
        jac = abs(ca[0] * cb[1] - ca[1] * cb[0]) * u
        pts.append(p.reshape(-1, 2))
        wts.append((wu * ws * jac).ravel())
    return Quadrature(np.concatenate(pts), np.concatenate(wts))
