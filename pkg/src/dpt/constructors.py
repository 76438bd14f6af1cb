"""Constructors for concrete divergence-free positive tensor (DPT) families
and for the fluid / kinetic / relativistic stress tensors.

Analytic structure is kept wherever it pays off: laminates carry exact
breakpoints so two-state checks avoid sampling error, trigonometric
potentials get closed-form Hessians, and every constructor attaches a
closed-form evaluator when one exists so boundary quadrature does not have
to interpolate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .domain import Ball, Box, DomainSpec, GridSpec, Torus, cell_centers
from .errors import (
    IncompatiblePairError,
    NegativeDensityError,
    NegativeDistributionError,
    NegativeEntryError,
    NegativePressureError,
    NotConvexError,
    SuperluminalVelocityError,
)
from .field import ScalarField, TensorField, VectorField
from .symmat import SymMat, cofactor_packed, min_eig_packed, pack, packed_length

__all__ = [
    "TrigScalar",
    "TrigPotential",
    "RadialBumpPotential",
    "PotentialSpec",
    "LaminateSpec",
    "diagonal_dpt",
    "hessian_cofactor",
    "laminate",
    "euler_tensor",
    "moment_matrix",
    "kinetic_moment_tensor",
    "relativistic_tensor",
    "relativistic_det_sweep",
    "selfsimilar_tensor",
    "constant_field",
    "field_from_spec",
]


# -- trigonometric building blocks ---------------------------------------------


@dataclass(frozen=True)
class TrigScalar:
    """Real trigonometric polynomial ``sum_t a_t cos(2 pi k.s) + b_t sin(2 pi k.s)``.

    ``modes`` is a list of ``(k, a, b)`` with integer wavevector ``k``; ``s``
    are fractional (period-1) coordinates.
    """

    dim: int
    modes: tuple
    offset: float = 0.0

    def __post_init__(self):
        cleaned = []
        for k, a, b in self.modes:
            k = tuple(int(x) for x in np.atleast_1d(k))
            if len(k) != self.dim:
                raise ValueError("wavevector dimension mismatch")
            cleaned.append((k, float(a), float(b)))
        object.__setattr__(self, "modes", tuple(cleaned))

    def __call__(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape[:-1], self.offset)
        for k, a, b in self.modes:
            phase = 2.0 * np.pi * (s @ np.array(k, dtype=float))
            out = out + a * np.cos(phase) + b * np.sin(phase)
        return out

    def mean(self) -> float:
        zero = sum(a for k, a, _ in self.modes if not any(k))
        return self.offset + zero

    def to_json(self) -> dict:
        return {
            "offset": self.offset,
            "modes": [{"k": list(k), "cos": a, "sin": b} for k, a, b in self.modes],
        }

    @classmethod
    def from_json(cls, doc: dict, dim: int) -> "TrigScalar":
        modes = [
            (tuple(m["k"]), m.get("cos", 0.0), m.get("sin", 0.0))
            for m in doc.get("modes", [])
        ]
        return cls(dim, tuple(modes), offset=float(doc.get("offset", 0.0)))


@dataclass(frozen=True)
class TrigPotential:
    """Periodic potential with closed-form gradient and Hessian."""

    dim: int
    modes: tuple  # same layout as TrigScalar

    def __post_init__(self):
        object.__setattr__(self, "_scalar", TrigScalar(self.dim, self.modes))

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return self._scalar(s)

    def hessian(self, s: np.ndarray, minv: np.ndarray | None = None) -> np.ndarray:
        """Packed Hessian w.r.t. physical coordinates at fractional points."""
        s = np.asarray(s, dtype=float)
        d = self.dim
        if minv is None:
            minv = np.eye(d)
        rows, cols = np.triu_indices(d)
        out = np.zeros(s.shape[:-1] + (packed_length(d),))
        for k, a, b in self._scalar.modes:
            kv = np.array(k, dtype=float)
            kappa = minv @ kv
            phase = 2.0 * np.pi * (s @ kv)
            amp = -4.0 * np.pi**2 * (a * np.cos(phase) + b * np.sin(phase))
            out += amp[..., None] * (kappa[rows] * kappa[cols])
        return out


@dataclass(frozen=True)
class RadialBumpPotential:
    """Compactly supported smooth bump ``amp * exp(1 - 1/(1 - |x-c|^2/R^2))``.

    All derivatives vanish at the support edge, so cell means of its Hessian
    converge superalgebraically.
    """

    center: np.ndarray
    radius: float
    amplitude: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, float)))
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def _profile(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        inside = u < 1.0
        g = np.zeros_like(u)
        gp = np.zeros_like(u)
        gpp = np.zeros_like(u)
        ui = u[inside]
        v = 1.0 - ui
        e = np.exp(1.0 - 1.0 / v)
        g[inside] = e
        gp[inside] = -e / v**2
        gpp[inside] = e * (2.0 * ui - 1.0) / v**4
        return g, gp, gpp

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = ((x - self.center) ** 2).sum(axis=-1) / self.radius**2
        g, _, _ = self._profile(np.minimum(u, 1.0))
        return self.amplitude * g

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = self.center.shape[0]
        rel = x - self.center
        u = (rel**2).sum(axis=-1) / self.radius**2
        _, gp, gpp = self._profile(np.minimum(u, 1.0))
        rows, cols = np.triu_indices(d)
        rank1 = rel[..., rows] * rel[..., cols]
        eye = pack(np.eye(d))
        out = self.amplitude * (
            (4.0 / self.radius**4) * gpp[..., None] * rank1
            + (2.0 / self.radius**2) * gp[..., None] * eye
        )
        return out


@dataclass(frozen=True)
class PotentialSpec:
    """Quadratic part plus a periodic or compactly supported perturbation."""

    s: SymMat
    psi: TrigPotential | RadialBumpPotential | None = None


# -- hessian-cofactor family ----------------------------------------------------


def hessian_cofactor(
    spec: PotentialSpec,
    domain: DomainSpec | None = None,
    grid: GridSpec | None = None,
    psd_tol: float = 1e-10,
) -> TensorField:
    """Cofactor of ``S + Hess(psi)``, a divergence-free PSD tensor field.

    Raises :class:`NotConvexError` (reporting the worst cell) if the Hessian
    argument fails positive semi-definiteness anywhere on the grid.
    """
    d = spec.s.dim
    if domain is None:
        domain = Torus.unit(d)
    if grid is None:
        grid = GridSpec((64,) * d)

    if isinstance(domain, Torus):
        if spec.psi is not None and not isinstance(spec.psi, TrigPotential):
            raise ValueError("periodic construction needs a trigonometric potential")
        minv = np.linalg.inv(domain.basis)

        def hess_arg(points_s: np.ndarray) -> np.ndarray:
            out = np.broadcast_to(
                spec.s.entries, points_s.shape[:-1] + (packed_length(d),)
            ).copy()
            if spec.psi is not None:
                out += spec.psi.hessian(points_s, minv)
            return out

        fracs = np.meshgrid(*grid.fractions(), indexing="ij")
        s_pts = np.stack(fracs, axis=-1)
        hess = hess_arg(s_pts)

        def evaluator(points_x: np.ndarray) -> np.ndarray:
            s = np.asarray(points_x, float) @ minv
            return cofactor_packed(hess_arg(s), d)

    else:
        if spec.psi is not None and not isinstance(spec.psi, RadialBumpPotential):
            raise ValueError("bounded construction needs a closed-form potential")

        def hess_arg(points_x: np.ndarray) -> np.ndarray:
            out = np.broadcast_to(
                spec.s.entries, points_x.shape[:-1] + (packed_length(d),)
            ).copy()
            if spec.psi is not None:
                out += spec.psi.hessian(points_x)
            return out

        hess = hess_arg(cell_centers(domain, grid))

        def evaluator(points_x: np.ndarray) -> np.ndarray:
            return cofactor_packed(hess_arg(np.asarray(points_x, float)), d)

    eigs = min_eig_packed(hess, d)
    scale = 1.0 + np.abs(hess).max()
    if eigs.min() < -psd_tol * scale:
        worst = np.unravel_index(int(np.argmin(eigs)), grid.shape)
        raise NotConvexError(
            f"S + Hess(psi) has eigenvalue {eigs.min():.3e} at cell {worst}"
        )

    values = cofactor_packed(hess, d)
    return TensorField(
        d,
        domain,
        grid,
        values,
        metadata={"constructor": "hessian_cofactor"},
        evaluator=evaluator,
    )


# -- diagonal family -------------------------------------------------------------


def diagonal_dpt(gs: list, grid: GridSpec, basis: np.ndarray | None = None) -> TensorField:
    """Diagonal field ``diag(g_1(x^_1), ..., g_d(x^_d))``.

    Entry j must not depend on coordinate j (hence divergence-free); each
    ``g_j`` is a constant, a :class:`TrigScalar` in the remaining ``d-1``
    fractional coordinates, or a callable on points of shape ``(..., d-1)``.
    """
    d = len(gs)
    domain = Torus.unit(d) if basis is None else Torus(basis)
    fracs = np.meshgrid(*grid.fractions(), indexing="ij")
    s = np.stack(fracs, axis=-1)
    values = np.zeros(grid.shape + (packed_length(d),))
    diag_positions = []
    pos = 0
    for i in range(d):
        diag_positions.append(pos)
        pos += d - i
    for j, g in enumerate(gs):
        hat = np.delete(s, j, axis=-1)
        if np.isscalar(g) or isinstance(g, (int, float)):
            sampled = np.full(grid.shape, float(g))
        else:
            sampled = np.asarray(g(hat), dtype=float)
        if sampled.min() < 0:
            raise NegativeEntryError(
                f"diagonal entry {j} dips to {sampled.min():.3e}"
            )
        values[..., diag_positions[j]] = sampled
    return TensorField(d, domain, grid, values, metadata={"constructor": "diagonal"})


# -- laminates --------------------------------------------------------------------


@dataclass(frozen=True)
class LaminateSpec:
    """Two-state layered field ``g(x.xi) B + (1 - g(x.xi)) C``.

    ``intervals`` lists the (disjoint, within [0,1)) sub-intervals where the
    profile equals 1; integrals over the profile are exact interval sums, so
    two-state checks carry no sampling error.
    """

    b: SymMat
    c: SymMat
    xi: np.ndarray
    intervals: tuple = ((0.0, 0.5),)
    check_tol: float = 1e-12

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        object.__setattr__(self, "xi", xi)
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        if any(not (0.0 <= a < b <= 1.0) for a, b in iv):
            raise ValueError("profile intervals must satisfy 0 <= a < b <= 1")
        starts = sorted(iv)
        for (a0, b0), (a1, _) in zip(starts, starts[1:]):
            if a1 < b0:
                raise ValueError("profile intervals overlap")
        object.__setattr__(self, "intervals", iv)
        diff = self.c.matrix - self.b.matrix
        resid = np.linalg.norm(diff @ xi)
        scale = np.linalg.norm(diff)
        if scale > 0 and resid > self.check_tol * max(scale, 1.0):
            raise IncompatiblePairError(
                f"(c - b) xi has norm {resid:.3e}; the pair is not layered along xi"
            )

    @property
    def dim(self) -> int:
        return self.b.dim

    @property
    def theta(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def profile(self, t: np.ndarray) -> np.ndarray:
        frac = np.mod(t, 1.0)
        out = np.zeros_like(frac)
        for a, b in self.intervals:
            out = np.where((frac >= a) & (frac < b), 1.0, out)
        return out

    def average(self) -> SymMat:
        th = self.theta
        return SymMat(self.dim, th * self.b.entries + (1.0 - th) * self.c.entries)

    def det_power_mean(self, alpha: float) -> float:
        """Exact two-state value of the averaged determinant power."""
        th = self.theta
        db = max(self.b.det(), 0.0) ** alpha
        dc = max(self.c.det(), 0.0) ** alpha
        return th * db + (1.0 - th) * dc

    def transformed(self, p: np.ndarray) -> "LaminateSpec":
        """Exact image under the congruence ``A -> P A(P^{-1} y) P^T``."""
        p = np.asarray(p, dtype=float)
        xi_new = np.linalg.solve(p.T, self.xi)
        return LaminateSpec(
            SymMat.from_matrix(p @ self.b.matrix @ p.T),
            SymMat.from_matrix(p @ self.c.matrix @ p.T),
            xi_new,
            self.intervals,
        )


def laminate(spec: LaminateSpec, grid: GridSpec) -> TensorField:
    """Sample a laminate on the unit torus (midpoint values per cell)."""
    d = spec.dim
    domain = Torus.unit(d)
    x = cell_centers(domain, grid)
    g = spec.profile(x @ spec.xi)
    values = (
        g[..., None] * spec.b.entries + (1.0 - g)[..., None] * spec.c.entries
    )
    return TensorField(
        d,
        domain,
        grid,
        values,
        metadata={"constructor": "laminate", "laminate_spec": spec},
    )


# -- fluid / kinetic / relativistic tensors ----------------------------------------


def _check_nonnegative(arr: np.ndarray, what: str, err) -> None:
    if np.min(arr) < 0:
        raise err(f"{what} has negative value {np.min(arr):.3e}")


def euler_state_packed(rho: np.ndarray, u: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Packed space-time stress blocks ``[[rho, rho u^T], [rho u, rho u x u + p I]]``.

    ``u`` carries a trailing velocity axis of length n; output packs square
    matrices of dimension d = n + 1 and satisfies ``det = rho p^n`` cellwise.
    """
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    n = u.shape[-1]
    d = n + 1
    full = np.zeros(rho.shape + (d, d))
    full[..., 0, 0] = rho
    mom = rho[..., None] * u
    full[..., 0, 1:] = mom
    full[..., 1:, 0] = mom
    full[..., 1:, 1:] = mom[..., :, None] * u[..., None, :]
    idx = np.arange(n)
    full[..., 1 + idx, 1 + idx] += p[..., None]
    return pack(full)


def euler_tensor(rho: ScalarField, u: VectorField, p: ScalarField) -> TensorField:
    """Space-time Euler tensor on a shared grid; PSD with ``det = rho p^n``."""
    _check_nonnegative(rho.values, "density", NegativeDensityError)
    _check_nonnegative(p.values, "pressure", NegativePressureError)
    values = euler_state_packed(rho.values, u.values, p.values)
    n = u.values.shape[-1]
    return TensorField(
        n + 1, rho.domain, rho.grid, values, metadata={"constructor": "euler"}
    )


def moment_matrix(weights: np.ndarray, f: np.ndarray, nodes: np.ndarray) -> SymMat:
    """Velocity-moment Gram matrix ``sum_k w_k f_k (1, v_k) x (1, v_k)``."""
    weights = np.asarray(weights, dtype=float)
    f = np.asarray(f, dtype=float)
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    if nodes.shape[0] != weights.shape[0]:
        nodes = nodes.T
    if np.min(weights) <= 0:
        raise ValueError("velocity weights must be positive")
    _check_nonnegative(f, "distribution", NegativeDistributionError)
    lifted = np.concatenate([np.ones((nodes.shape[0], 1)), nodes], axis=1)
    mat = np.einsum("k,k,ki,kj->ij", weights, f, lifted, lifted)
    return SymMat.from_matrix(mat)


def kinetic_moment_tensor(state, cell: int) -> SymMat:
    """Moment tensor of a kinetic state at one spatial cell."""
    return moment_matrix(state.weights, state.f[cell], state.nodes)


def relativistic_tensor(rho: float, v, p: float, c: float) -> SymMat:
    """Stress-energy block matrix of an isentropic relativistic gas state.

    Positive semi-definite for ``|v| < c``; its determinant equals
    ``rho * p**n`` exactly, as in the non-relativistic case.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if rho < 0:
        raise NegativeDensityError(f"density {rho}")
    if p < 0:
        raise NegativePressureError(f"pressure {p}")
    speed2 = float(v @ v)
    if speed2 >= c * c:
        raise SuperluminalVelocityError(f"|v| = {math.sqrt(speed2):.6g} >= c = {c}")
    n = v.shape[0]
    w = (rho * c * c + p) / (c * c - speed2)
    full = np.zeros((n + 1, n + 1))
    full[0, 0] = w - p / (c * c)
    full[0, 1:] = w * v
    full[1:, 0] = w * v
    full[1:, 1:] = w * np.outer(v, v) + p * np.eye(n)
    return SymMat.from_matrix(full)


def _det_small(mats: np.ndarray) -> np.ndarray:
    """Cofactor-expansion determinant for stacked 2x2 / 3x3 / 4x4 matrices.

    Works in whatever dtype the input carries (np.linalg.det would downcast
    extended precision to float64).
    """
    d = mats.shape[-1]
    if d == 2:
        return mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    if d == 3:
        a = mats
        return (
            a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0])
        )
    if d == 4:
        keep = np.arange(4)
        out = np.zeros(mats.shape[:-2], dtype=mats.dtype)
        sign = 1.0
        for j in range(4):
            minor = mats[..., 1:, :][..., :, keep != j]
            out = out + sign * mats[..., 0, j] * _det_small(minor)
            sign = -sign
        return out
    raise ValueError("supported sizes are 2, 3, 4")


def relativistic_det_sweep(
    count: int, n: int, c: float = 1.0, vmax_frac: float = 0.99, seed: int = 0
) -> float:
    """Max relative deviation of ``det A - rho p^n`` over random states.

    Both sides are evaluated in extended precision so the sweep measures the
    identity, not float64 entry-formation noise (which alone reaches 1e-12
    at near-luminal speeds).
    """
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.1, 3.0, count).astype(np.longdouble)
    p = rng.uniform(0.1, 3.0, count).astype(np.longdouble)
    dirs = rng.normal(size=(count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    speeds = rng.uniform(0.0, vmax_frac * c, count)
    v = (dirs * speeds[:, None]).astype(np.longdouble)
    cc = np.longdouble(c) * np.longdouble(c)
    speed2 = (v**2).sum(axis=1)
    w = (rho * cc + p) / (cc - speed2)
    full = np.zeros((count, n + 1, n + 1), dtype=np.longdouble)
    full[:, 0, 0] = w - p / cc
    full[:, 0, 1:] = w[:, None] * v
    full[:, 1:, 0] = w[:, None] * v
    full[:, 1:, 1:] = w[:, None, None] * v[:, :, None] * v[:, None, :]
    idx = np.arange(n)
    full[:, 1 + idx, 1 + idx] += p[:, None]
    target = rho * p**n
    dev = np.abs(_det_small(full) - target) / (1.0 + target)
    return float(dev.max())


def selfsimilar_tensor(
    rho: ScalarField, v: VectorField, p: ScalarField
) -> tuple[TensorField, VectorField]:
    """Pseudo-velocity stress ``rho v x v + p I`` plus its analytic source.

    The returned source field is ``-(n+1) rho v``, the row-divergence of the
    tensor for exact self-similar flows; ``det = p^{n-1}(p + rho |v|^2)``.
    """
    _check_nonnegative(rho.values, "density", NegativeDensityError)
    _check_nonnegative(p.values, "pressure", NegativePressureError)
    n = v.values.shape[-1]
    full = rho.values[..., None, None] * (
        v.values[..., :, None] * v.values[..., None, :]
    )
    idx = np.arange(n)
    full[..., idx, idx] += p.values[..., None]
    tensor = TensorField(
        n, rho.domain, rho.grid, pack(full), metadata={"constructor": "selfsimilar"}
    )
    source = VectorField(
        rho.domain, rho.grid, -(n + 1) * rho.values[..., None] * v.values
    )
    return tensor, source


# -- generic helpers -----------------------------------------------------------------


def constant_field(
    mat: SymMat, domain: DomainSpec | None = None, grid: GridSpec | None = None
) -> TensorField:
    d = mat.dim
    if domain is None:
        domain = Torus.unit(d)
    if grid is None:
        grid = GridSpec((8,) * d)
    values = np.broadcast_to(mat.entries, grid.shape + (packed_length(d),)).copy()

    def evaluator(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.broadcast_to(
            mat.entries, points.shape[:-1] + (packed_length(d),)
        ).copy()

    return TensorField(
        d, domain, grid, values, metadata={"constructor": "constant"}, evaluator=evaluator
    )


def _symmat_from_json(doc) -> SymMat:
    if isinstance(doc, dict) and "diag" in doc:
        return SymMat.from_diag(doc["diag"])
    return SymMat.from_matrix(np.array(doc, dtype=float))


def field_from_spec(doc: dict) -> TensorField:
    """Build a tensor field from a JSON constructor document.

    Supported tags: ``constant``, ``diagonal``, ``hessian_cofactor``,
    ``laminate``.  Trigonometric data uses ``{"k": [...], "cos": a, "sin": b}``
    mode entries.
    """
    from .field import domain_from_json

    tag = doc.get("tag")
    grid = GridSpec(tuple(doc["grid"])) if "grid" in doc else None
    domain = domain_from_json(doc["domain"]) if "domain" in doc else None
    if tag == "constant":
        mat = _symmat_from_json(doc["matrix"])
        return constant_field(mat, domain, grid)
    if tag == "diagonal":
        gs = []
        d = len(doc["entries"])
        for entry in doc["entries"]:
            if isinstance(entry, (int, float)):
                gs.append(float(entry))
            else:
                gs.append(TrigScalar.from_json(entry, d - 1))
        return diagonal_dpt(gs, grid or GridSpec((32,) * d))
    if tag == "hessian_cofactor":
        s = _symmat_from_json(doc["s"])
        psi = None
        if doc.get("modes"):
            modes = [
                (tuple(m["k"]), m.get("cos", 0.0), m.get("sin", 0.0))
                for m in doc["modes"]
            ]
            psi = TrigPotential(s.dim, tuple(modes))
        elif doc.get("bump"):
            b = doc["bump"]
            psi = RadialBumpPotential(
                np.array(b["center"], dtype=float), b["radius"], b["amplitude"]
            )
        return hessian_cofactor(PotentialSpec(s, psi), domain, grid)
    if tag == "laminate":
        spec = LaminateSpec(
            _symmat_from_json(doc["b"]),
            _symmat_from_json(doc["c"]),
            np.array(doc["xi"], dtype=float),
            tuple(tuple(iv) for iv in doc.get("intervals", [(0.0, 0.5)])),
        )
        return laminate(spec, grid or GridSpec((32,) * spec.dim))
    raise ValueError(f"unknown constructor tag {tag!r}")
