"""Symmetric-matrix kernels: packed storage, determinants, cofactors, PSD tests.

A symmetric d x d matrix is stored as its upper triangle, row-major:
``(0,0), (0,1), ..., (0,d-1), (1,1), ..., (d-1,d-1)``.  All kernels accept
arrays of packed matrices with arbitrary leading axes, so per-cell field
operations run vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPSDError

__all__ = [
    "SymMat",
    "pack",
    "unpack",
    "packed_dim",
    "packed_length",
    "det_packed",
    "cofactor_packed",
    "min_eig_packed",
    "cofactor",
    "det_power",
    "psd_check",
    "sphere_area",
]


def packed_length(d: int) -> int:
    return d * (d + 1) // 2


def packed_dim(length: int) -> int:
    """Matrix dimension for a packed entry count, rejecting non-triangular sizes."""
    d = int((math.isqrt(8 * length + 1) - 1) // 2)
    if packed_length(d) != length:
        raise ValueError(f"{length} is not a triangular number")
    return d


def _upper_indices(d: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(d)
    return rows, cols


def pack(mat: np.ndarray) -> np.ndarray:
    """Pack symmetric matrices ``(..., d, d)`` into ``(..., d(d+1)/2)``."""
    mat = np.asarray(mat, dtype=float)
    d = mat.shape[-1]
    rows, cols = _upper_indices(d)
    return mat[..., rows, cols]


def unpack(packed: np.ndarray, d: int | None = None) -> np.ndarray:
    """Expand packed entries ``(..., d(d+1)/2)`` into full ``(..., d, d)`` matrices."""
    packed = np.asarray(packed, dtype=float)
    if d is None:
        d = packed_dim(packed.shape[-1])
    rows, cols = _upper_indices(d)
    out = np.zeros(packed.shape[:-1] + (d, d), dtype=float)
    out[..., rows, cols] = packed
    out[..., cols, rows] = packed
    return out


def det_packed(packed: np.ndarray, d: int | None = None) -> np.ndarray:
    """Determinants of packed symmetric matrices (closed form for d <= 3)."""
    packed = np.asarray(packed, dtype=float)
    if d is None:
        d = packed_dim(packed.shape[-1])
    if d == 1:
        return packed[..., 0]
    if d == 2:
        a, b, c = packed[..., 0], packed[..., 1], packed[..., 2]
        return a * c - b * b
    if d == 3:
        a, b, c, e, f, g = (packed[..., k] for k in range(6))
        return a * (e * g - f * f) - b * (b * g - c * f) + c * (b * f - c * e)
    return np.linalg.det(unpack(packed, d))


def cofactor_packed(packed: np.ndarray, d: int | None = None) -> np.ndarray:
    """Cofactor matrices of packed symmetric matrices, packed again."""
    packed = np.asarray(packed, dtype=float)
    if d is None:
        d = packed_dim(packed.shape[-1])
    if d == 2:
        a, b, c = packed[..., 0], packed[..., 1], packed[..., 2]
        return np.stack([c, -b, a], axis=-1)
    if d == 3:
        a, b, c, e, f, g = (packed[..., k] for k in range(6))
        return np.stack(
            [
                e * g - f * f,
                c * f - b * g,
                b * f - c * e,
                a * g - c * c,
                b * c - a * f,
                a * e - b * b,
            ],
            axis=-1,
        )
    # general dimension: signed minors, one sub-determinant batch per entry
    full = unpack(packed, d)
    rows, cols = _upper_indices(d)
    out = np.empty_like(packed)
    idx = np.arange(d)
    for k, (i, j) in enumerate(zip(rows, cols)):
        sub = full[..., idx != i, :][..., :, idx != j]
        out[..., k] = (-1.0) ** (i + j) * np.linalg.det(sub)
    return out


def min_eig_packed(packed: np.ndarray, d: int | None = None) -> np.ndarray:
    """Smallest eigenvalue per packed matrix."""
    return np.linalg.eigvalsh(unpack(packed, d))[..., 0]


@dataclass(frozen=True)
class SymMat:
    """A d x d symmetric matrix stored as packed upper-triangular entries."""

    dim: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=float)
        if ent.shape != (packed_length(self.dim),):
            raise ValueError(
                f"expected {packed_length(self.dim)} packed entries for dim {self.dim},"
                f" got shape {ent.shape}"
            )
        if not np.all(np.isfinite(ent)):
            raise ValueError("SymMat entries must be finite")
        object.__setattr__(self, "entries", ent)

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_matrix(cls, mat, symmetrize: bool = True) -> "SymMat":
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("expected a square matrix")
        if symmetrize:
            mat = 0.5 * (mat + mat.T)
        elif not np.allclose(mat, mat.T):
            raise ValueError("matrix is not symmetric")
        return cls(mat.shape[0], pack(mat))

    @classmethod
    def from_diag(cls, diag) -> "SymMat":
        return cls.from_matrix(np.diag(np.asarray(diag, dtype=float)))

    @classmethod
    def identity(cls, d: int) -> "SymMat":
        return cls.from_matrix(np.eye(d))

    @classmethod
    def zero(cls, d: int) -> "SymMat":
        return cls(d, np.zeros(packed_length(d)))

    # -- views ----------------------------------------------------------

    @property
    def matrix(self) -> np.ndarray:
        return unpack(self.entries, self.dim)

    def det(self) -> float:
        return float(det_packed(self.entries, self.dim))

    def trace(self) -> float:
        m = self.matrix
        return float(np.trace(m))

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.matrix, 2))

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def __add__(self, other: "SymMat") -> "SymMat":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return SymMat(self.dim, self.entries + other.entries)

    def __sub__(self, other: "SymMat") -> "SymMat":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return SymMat(self.dim, self.entries - other.entries)

    def __mul__(self, t: float) -> "SymMat":
        return SymMat(self.dim, self.entries * float(t))

    __rmul__ = __mul__

    def allclose(self, other: "SymMat", atol: float = 1e-12, rtol: float = 1e-12) -> bool:
        return bool(np.allclose(self.entries, other.entries, atol=atol, rtol=rtol))


def cofactor(a: SymMat) -> SymMat:
    """Cofactor matrix, satisfying ``cof(A) @ A = det(A) I``."""
    return SymMat(a.dim, cofactor_packed(a.entries, a.dim))


def psd_check(a: SymMat, tol: float = 1e-10) -> bool:
    """True iff the smallest eigenvalue is >= ``-tol * (1 + ||a||)``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return bool(a.eigvals()[0] >= -tol * (1.0 + a.norm()))


def det_power(a: SymMat, alpha: float, psd_tol: float = 1e-10) -> float:
    """``max(det a, 0) ** alpha`` for a PSD-up-to-tolerance matrix.

    Small negative determinants from roundoff clamp to zero; a genuinely
    indefinite input raises :class:`NotPSDError`.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not psd_check(a, psd_tol):
        raise NotPSDError(
            f"matrix has eigenvalue {a.eigvals()[0]:.3e} below the PSD tolerance"
        )
    det = a.det()
    if det <= 0.0:
        return 0.0
    return power(det, alpha)


def power(x: float, p: float) -> float:
    """``x ** p`` for x >= 0, evaluated in log space to dodge overflow."""
    if x < 0:
        raise ValueError("negative base")
    if x == 0.0:
        return 0.0
    return math.exp(p * math.log(x))


def det_power_packed(
    packed: np.ndarray,
    d: int,
    alpha: float,
    psd_tol: float = 1e-10,
    check: bool = True,
) -> np.ndarray:
    """Vectorized ``max(det, 0) ** alpha`` over packed matrices."""
    if check:
        norms = np.abs(unpack(packed, d)).sum(axis=-1).max(axis=-1)
        bad = min_eig_packed(packed, d) < -psd_tol * (1.0 + norms)
        if np.any(bad):
            raise NotPSDError(f"{int(bad.sum())} cells fail the PSD tolerance")
    det = np.maximum(det_packed(packed, d), 0.0)
    return det**alpha


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d: ``2 pi^{d/2} / Gamma(d/2)``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
