"""Fourier collocation helpers on the unit torus in fractional coordinates.

Grid functions live on cell centers ``(i + 1/2)/n``; derivatives are exact
for band-limited data.  The Nyquist mode of every odd-order derivative is
zeroed so that real input yields real output.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "freqs",
    "deriv",
    "gradient",
    "divergence",
    "hessian",
    "project",
    "solve_const_elliptic",
]


def freqs(n: int) -> np.ndarray:
    """Integer wavenumbers for an n-point periodic axis."""
    return np.fft.fftfreq(n, d=1.0 / n)


def _deriv_factor(n: int) -> np.ndarray:
    k = freqs(n)
    fac = 2.0j * np.pi * k
    if n % 2 == 0:
        fac[n // 2] = 0.0
    return fac


def deriv(values: np.ndarray, axis: int) -> np.ndarray:
    """d/ds along one axis (s the fractional coordinate, period 1)."""
    n = values.shape[axis]
    fac = _deriv_factor(n)
    shape = [1] * values.ndim
    shape[axis] = n
    vhat = np.fft.fft(values, axis=axis)
    return np.real(np.fft.ifft(vhat * fac.reshape(shape), axis=axis))


def gradient(values: np.ndarray, minv: np.ndarray | None = None) -> np.ndarray:
    """Gradient w.r.t. physical coordinates, shape ``values.shape + (d,)``.

    ``minv`` is the inverse lattice basis (rows are generators); identity for
    the unit torus.
    """
    d = values.ndim
    ds = np.stack([deriv(values, ax) for ax in range(d)], axis=-1)
    if minv is None:
        return ds
    return ds @ minv.T  # (grad_x)_k = sum_j minv[k, j] ds_j


def divergence(vec: np.ndarray, minv: np.ndarray | None = None) -> np.ndarray:
    """Divergence of a vector field stored as ``grid_shape + (d,)``."""
    d = vec.shape[-1]
    if minv is not None:
        vec = vec @ minv  # contract physical derivative back to s-derivatives
    out = np.zeros(vec.shape[:-1])
    for ax in range(d):
        out += deriv(vec[..., ax], ax)
    return out


def hessian(values: np.ndarray, minv: np.ndarray | None = None) -> np.ndarray:
    """Packed Hessian w.r.t. physical coordinates, ``grid + (d(d+1)/2,)``."""
    d = values.ndim
    grad = gradient(values, minv)
    cols = []
    for i in range(d):
        gi = gradient(grad[..., i], minv)
        for j in range(i, d):
            cols.append(gi[..., j])
    # reorder into row-major upper triangle: entries were generated as
    # (0,0),(0,1),...,(0,d-1),(1,1),... already
    return np.stack(cols, axis=-1)


def project(values: np.ndarray) -> np.ndarray:
    """Drop the mean and every Nyquist plane.

    Odd-order spectral derivatives annihilate Nyquist modes, so elliptic
    solves must run in the complement; this is the associated projection.
    """
    vhat = np.fft.fftn(values)
    for ax, n in enumerate(values.shape):
        if n % 2 == 0:
            sl = [slice(None)] * values.ndim
            sl[ax] = n // 2
            vhat[tuple(sl)] = 0.0
    vhat[(0,) * values.ndim] = 0.0
    return np.real(np.fft.ifftn(vhat))


def solve_const_elliptic(
    rhs: np.ndarray, kmat: np.ndarray, minv: np.ndarray | None = None
) -> np.ndarray:
    """Solve ``div(K grad u) = rhs`` with constant SPD ``K``, mean-zero u.

    Used as the preconditioner for variable-coefficient solves.
    """
    d = rhs.ndim
    if minv is None:
        minv = np.eye(d)
    keff = minv @ kmat @ minv.T  # symbol in s-space wavenumbers
    grids = np.meshgrid(*[freqs(n) for n in rhs.shape], indexing="ij")
    kvec = np.stack(grids, axis=-1)
    symbol = -4.0 * np.pi**2 * np.einsum("...i,ij,...j->...", kvec, keff, kvec)
    symbol[(0,) * d] = 1.0  # zero mode handled by projection
    rhat = np.fft.fftn(rhs)
    rhat[(0,) * d] = 0.0
    return np.real(np.fft.ifftn(rhat / symbol))
