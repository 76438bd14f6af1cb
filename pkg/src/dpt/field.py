"""Cell-sampled scalar, vector, and symmetric-tensor fields plus their calculus.

Fields are immutable after construction.  Tensor values are stored packed
(upper triangle, row-major) with one trailing axis, so every per-cell kernel
from :mod:`dpt.symmat` applies directly.  Periodic derivatives are spectral;
bounded domains use fourth-order finite differences with one-sided closures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dfield
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import spectral
from .domain import (
    Ball,
    Box,
    ConvexPolytope,
    DomainSpec,
    GridSpec,
    Quadrature,
    Torus,
    boundary_rule,
    cell_centers,
    cell_spacing,
    cell_volume,
)
from .errors import SingularTransformError, UnsupportedDomainError
from .symmat import (
    SymMat,
    det_packed,
    min_eig_packed,
    pack,
    packed_length,
    unpack,
)

__all__ = [
    "ScalarField",
    "VectorField",
    "TensorField",
    "field_average",
    "discrete_divergence",
    "divergence_mass",
    "congruence",
    "boundary_trace_norm",
    "save_field",
    "load_field",
]


@dataclass(frozen=True)
class ScalarField:
    domain: DomainSpec
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class VectorField:
    domain: DomainSpec
    grid: GridSpec
    values: np.ndarray  # grid.shape + (d,)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[:-1] != self.grid.shape:
            raise ValueError(f"values shape {v.shape} incompatible with grid {self.grid.shape}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class TensorField:
    """Symmetric matrix field; ``values`` has shape ``grid.shape + (d(d+1)/2,)``."""

    dim: int
    domain: DomainSpec
    grid: GridSpec
    values: np.ndarray
    metadata: dict = dfield(default_factory=dict)
    evaluator: Callable[[np.ndarray], np.ndarray] | None = dfield(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        want = self.grid.shape + (packed_length(self.dim),)
        if v.shape != want:
            raise ValueError(f"values shape {v.shape} != {want}")
        if not np.all(np.isfinite(v)):
            raise ValueError("tensor field has non-finite entries")
        object.__setattr__(self, "values", v)

    # -- per-cell views ---------------------------------------------------

    def matrices(self) -> np.ndarray:
        return unpack(self.values, self.dim)

    def dets(self) -> np.ndarray:
        return det_packed(self.values, self.dim)

    def min_eigs(self) -> np.ndarray:
        return min_eig_packed(self.values, self.dim)

    def is_psd(self, tol: float = 1e-10) -> bool:
        scale = 1.0 + np.abs(self.values).max(axis=-1)
        return bool(np.all(self.min_eigs() >= -tol * scale))

    def value_at(self, index: tuple) -> SymMat:
        return SymMat(self.dim, self.values[index].copy())

    def cell_volume(self) -> float:
        return cell_volume(self.domain, self.grid)

    def centers(self) -> np.ndarray:
        return cell_centers(self.domain, self.grid)

    def with_values(self, values: np.ndarray, **meta) -> "TensorField":
        md = dict(self.metadata)
        md.update(meta)
        return TensorField(self.dim, self.domain, self.grid, values, md)

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Packed values at arbitrary points (closed form when available)."""
        if self.evaluator is not None:
            return self.evaluator(np.asarray(points, dtype=float))
        box = (
            self.domain.bounding_box()
            if not isinstance(self.domain, Torus)
            else None
        )
        if box is None:
            raise UnsupportedDomainError("interpolation targets bounded domains")
        axes = [
            box.lo[k] + (np.arange(n) + 0.5) * (box.hi[k] - box.lo[k]) / n
            for k, n in enumerate(self.grid.shape)
        ]
        interp = RegularGridInterpolator(
            axes, self.values, method="linear", bounds_error=False, fill_value=None
        )
        return interp(points)


def field_average(field: TensorField) -> SymMat:
    """Arithmetic mean of the cell values (exact trapezoid mean on a torus)."""
    flat = field.values.reshape(-1, field.values.shape[-1])
    return SymMat(field.dim, flat.mean(axis=0))


# -- discrete divergence ------------------------------------------------------

_FD4_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD4_EDGE = {
    0: np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    1: np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
}


def _fd4(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    n = v.shape[0]
    if n < 5:
        raise ValueError("fourth-order differences need at least 5 samples")
    out = np.empty_like(v)
    out[2:-2] = (
        v[:-4] * _FD4_INTERIOR[0]
        + v[1:-3] * _FD4_INTERIOR[1]
        + v[3:-1] * _FD4_INTERIOR[3]
        + v[4:] * _FD4_INTERIOR[4]
    )
    for i, coeffs in _FD4_EDGE.items():
        out[i] = sum(c * v[k] for k, c in enumerate(coeffs))
        out[n - 1 - i] = -sum(c * v[n - 1 - k] for k, c in enumerate(coeffs))
    return np.moveaxis(out, 0, axis) / h


def discrete_divergence(field: TensorField) -> VectorField:
    """Row-wise divergence ``(Div A)_i = sum_j d_j A_ij``.

    Spectral on a torus (exact for band-limited fields), fourth-order
    centered differences with one-sided closures on bounded domains.
    """
    d = field.dim
    rows, cols = np.triu_indices(d)
    full = field.matrices()  # grid + (d, d)
    if isinstance(field.domain, Torus):
        minv = np.linalg.inv(field.domain.basis)
        out = np.zeros(field.grid.shape + (d,))
        for i in range(d):
            out[..., i] = spectral.divergence(full[..., i, :], minv)
        return VectorField(field.domain, field.grid, out)
    h = cell_spacing(field.domain, field.grid)
    out = np.zeros(field.grid.shape + (d,))
    for i in range(d):
        for j in range(d):
            out[..., i] += _fd4(full[..., i, j], j, h[j])
    return VectorField(field.domain, field.grid, out)


def divergence_mass(field: TensorField) -> float:
    """Discrete L1 mass of |Div A| (Euclidean norm of the row-divergence)."""
    div = discrete_divergence(field)
    norms = np.linalg.norm(div.values, axis=-1)
    return float(norms.sum() * cell_volume(field.domain, field.grid))


# -- congruence ---------------------------------------------------------------

def _trig_coefficients(values: np.ndarray, grid_shape: tuple) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients of cell-centered samples, with half-cell phase fixed."""
    gdim = len(grid_shape)
    coeff = np.fft.fftn(values, axes=tuple(range(gdim)))
    for ax, n in enumerate(grid_shape):
        k = spectral.freqs(n)
        phase = np.exp(-1.0j * np.pi * k / n)
        shape = [1] * coeff.ndim
        shape[ax] = n
        coeff = coeff * phase.reshape(shape)
    coeff = coeff / np.prod(grid_shape)
    grids = np.meshgrid(*[spectral.freqs(n) for n in grid_shape], indexing="ij")
    kvecs = np.stack([g.ravel() for g in grids], axis=-1)
    return coeff.reshape(-1, *values.shape[gdim:]), kvecs


def _trig_eval(coeff: np.ndarray, kvecs: np.ndarray, s: np.ndarray, chunk: int = 512) -> np.ndarray:
    out = np.empty((s.shape[0],) + coeff.shape[1:])
    flat = coeff.reshape(coeff.shape[0], -1)
    for start in range(0, s.shape[0], chunk):
        block = s[start : start + chunk]
        phases = np.exp(2.0j * np.pi * (block @ kvecs.T))
        out[start : start + chunk] = np.real(phases @ flat).reshape(
            (block.shape[0],) + coeff.shape[1:]
        )
    return out


def congruence(field: TensorField, p: np.ndarray) -> TensorField:
    """Transform a periodic field by ``y -> P A(P^{-1} y) P^T``.

    The lattice basis maps along; values are resampled onto the image grid by
    trigonometric interpolation, which is exact for band-limited fields.
    """
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.det(p)) < 1e-12:
        raise SingularTransformError("transform matrix is numerically singular")
    if not isinstance(field.domain, Torus):
        raise UnsupportedDomainError("congruence acts on periodic fields")
    if p.shape != (field.dim, field.dim):
        raise ValueError("transform dimension mismatch")
    m = field.domain.basis
    m_new = m @ p.T  # lattice generators map by P
    new_domain = Torus(m_new)
    fracs = np.meshgrid(*field.grid.fractions(), indexing="ij")
    s_new = np.stack([g.ravel() for g in fracs], axis=-1)
    y = s_new @ m_new
    x = y @ np.linalg.inv(p).T
    s_old = x @ np.linalg.inv(m)
    coeff, kvecs = _trig_coefficients(field.values, field.grid.shape)
    sampled = _trig_eval(coeff, kvecs, s_old)
    mats = unpack(sampled, field.dim)
    transformed = np.einsum("ij,cjk,lk->cil", p, mats, p)
    values = pack(transformed).reshape(field.grid.shape + (-1,))
    return TensorField(
        field.dim,
        new_domain,
        field.grid,
        values,
        metadata={**field.metadata, "congruence": True},
    )


# -- boundary trace -----------------------------------------------------------

def boundary_trace_norm(field: TensorField, rule: Quadrature | None = None) -> float:
    """Integral of ``|A n|`` over the boundary (Euclidean norm of the vector)."""
    if isinstance(field.domain, Torus):
        raise UnsupportedDomainError("a torus has no boundary trace")
    if rule is None:
        rule = boundary_rule(field.domain)
    packed = field.interpolate(rule.points)
    mats = unpack(packed, field.dim)
    traces = np.einsum("mij,mj->mi", mats, rule.normals)
    return float(np.linalg.norm(traces, axis=-1) @ rule.weights)


# -- serialization ------------------------------------------------------------

def _domain_to_json(domain: DomainSpec) -> dict:
    if isinstance(domain, Torus):
        return {"type": "torus", "basis": domain.basis.tolist()}
    if isinstance(domain, Ball):
        return {"type": "ball", "center": domain.center.tolist(), "radius": domain.radius}
    if isinstance(domain, Box):
        return {"type": "box", "lo": domain.lo.tolist(), "hi": domain.hi.tolist()}
    if isinstance(domain, ConvexPolytope):
        return {
            "type": "polytope",
            "normals": domain.normals.tolist(),
            "offsets": domain.offsets.tolist(),
        }
    raise UnsupportedDomainError(f"unknown domain {type(domain).__name__}")


def domain_from_json(doc: dict) -> DomainSpec:
    kind = doc["type"]
    if kind == "torus":
        return Torus(np.array(doc["basis"], dtype=float))
    if kind == "ball":
        return Ball(np.array(doc["center"], dtype=float), float(doc["radius"]))
    if kind == "box":
        return Box(np.array(doc["lo"], dtype=float), np.array(doc["hi"], dtype=float))
    if kind == "polytope":
        return ConvexPolytope(
            np.array(doc["normals"], dtype=float), np.array(doc["offsets"], dtype=float)
        )
    raise UnsupportedDomainError(f"unknown domain tag {kind!r}")


def save_field(field: TensorField, path) -> None:
    """Write the bit-exact round-trip format (hexadecimal float literals)."""
    doc = {
        "d": field.dim,
        "domain": _domain_to_json(field.domain),
        "grid": list(field.grid.shape),
        "tag": field.metadata.get("constructor", ""),
        "values_hex": [v.hex() for v in field.values.ravel().tolist()],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_field(path) -> TensorField:
    with open(path) as fh:
        doc = json.load(fh)
    d = int(doc["d"])
    grid = GridSpec(tuple(doc["grid"]))
    values = np.array([float.fromhex(h) for h in doc["values_hex"]])
    values = values.reshape(grid.shape + (packed_length(d),))
    meta = {"constructor": doc.get("tag", "")}
    return TensorField(d, domain_from_json(doc["domain"]), grid, values, meta)
