import numpy as np
import pytest

from dpt.constructors import (
    LaminateSpec,
    PotentialSpec,
    TrigPotential,
    constant_field,
    hessian_cofactor,
    laminate,
)
from dpt.domain import Ball, Box, GridSpec, Torus
from dpt.errors import SingularTransformError, UnsupportedDomainError
from dpt.field import (
    TensorField,
    boundary_trace_norm,
    congruence,
    discrete_divergence,
    divergence_mass,
    field_average,
    load_field,
    save_field,
)
from dpt.symmat import SymMat, pack


def _torus_field(values):
    grid = GridSpec(values.shape[:-1])
    return TensorField(values.shape[-1] // 2 + values.shape[-1] % 2, Torus.unit(2), grid, values)


class TestAverage:
    def test_constant(self):
        f = constant_field(SymMat.from_diag([1.0, 2.0]), grid=GridSpec((8, 8)))
        assert field_average(f).allclose(SymMat.from_diag([1.0, 2.0]))

    def test_laminate_two_state(self):
        spec = LaminateSpec(
            SymMat.identity(3), SymMat.from_diag([2.0, 5.0, 1.0]), np.array([0, 0, 1.0])
        )
        f = laminate(spec, GridSpec((8, 8, 8)))
        assert field_average(f).allclose(SymMat.from_diag([1.5, 3.0, 1.0]))

    def test_linearity(self, rng):
        grid = GridSpec((8, 8))
        v1 = rng.normal(size=grid.shape + (3,))
        v2 = rng.normal(size=grid.shape + (3,))
        dom = Torus.unit(2)
        s = field_average(TensorField(2, dom, grid, v1 + v2))
        s1 = field_average(TensorField(2, dom, grid, v1))
        s2 = field_average(TensorField(2, dom, grid, v2))
        assert np.allclose(s.entries, s1.entries + s2.entries, atol=1e-14)

    def test_permutation_invariance(self, rng):
        grid = GridSpec((4, 4))
        vals = rng.normal(size=grid.shape + (3,))
        shuffled = vals.reshape(-1, 3)[rng.permutation(16)].reshape(grid.shape + (3,))
        dom = Torus.unit(2)
        a = field_average(TensorField(2, dom, grid, vals))
        b = field_average(TensorField(2, dom, grid, shuffled))
        assert np.allclose(a.entries, b.entries, atol=1e-15)


class TestDivergence:
    def test_constant_field_zero(self):
        f = constant_field(SymMat.from_diag([1.0, 2.0]), grid=GridSpec((16, 16)))
        assert divergence_mass(f) == 0.0

    def test_absent_coordinate(self):
        grid = GridSpec((32, 32))
        fr = np.meshgrid(*grid.fractions(), indexing="ij")
        vals = np.zeros(grid.shape + (3,))
        vals[..., 0] = np.sin(2 * np.pi * fr[1])
        vals[..., 2] = np.sin(2 * np.pi * fr[0])
        f = _torus_field(vals)
        assert divergence_mass(f) < 1e-12

    def test_analytic_derivative(self):
        grid = GridSpec((32, 32))
        fr = np.meshgrid(*grid.fractions(), indexing="ij")
        vals = np.zeros(grid.shape + (3,))
        vals[..., 0] = np.sin(2 * np.pi * fr[0])
        f = _torus_field(vals)
        div = discrete_divergence(f)
        expected = 2 * np.pi * np.cos(2 * np.pi * fr[0])
        assert np.abs(div.values[..., 0] - expected).max() < 1e-10
        assert np.abs(div.values[..., 1]).max() < 1e-10

    def test_lattice_scaling(self):
        # same samples on a stretched lattice halve the derivative
        basis = np.diag([2.0, 1.0])
        grid = GridSpec((32, 32))
        fr = np.meshgrid(*grid.fractions(), indexing="ij")
        vals = np.zeros(grid.shape + (3,))
        vals[..., 0] = np.sin(2 * np.pi * fr[0])
        f = TensorField(2, Torus(basis), grid, vals)
        div = discrete_divergence(f)
        expected = np.pi * np.cos(2 * np.pi * fr[0])
        assert np.abs(div.values[..., 0] - expected).max() < 1e-10

    def test_fd4_on_box(self):
        grid = GridSpec((64, 64))
        box = Box(np.zeros(2), np.ones(2))
        fr = np.meshgrid(*grid.fractions(), indexing="ij")
        vals = np.zeros(grid.shape + (3,))
        vals[..., 0] = fr[0] ** 3
        f = TensorField(2, box, grid, vals)
        div = discrete_divergence(f)
        expected = 3.0 * fr[0] ** 2
        assert np.abs(div.values[..., 0] - expected).max() < 1e-9

    def test_hessian_cofactor_annihilated_3d(self):
        spec = PotentialSpec(
            SymMat.identity(3), TrigPotential(3, (((1, 1, 1), 0.005, 0.0),))
        )
        f = hessian_cofactor(spec, grid=GridSpec((16, 16, 16)))
        assert divergence_mass(f) < 1e-10


class TestCongruence:
    def test_constant_diag(self):
        f = constant_field(SymMat.identity(2), Torus.unit(2), GridSpec((8, 8)))
        g = congruence(f, np.diag([1.0, 2.0]))
        assert np.allclose(g.values, pack(np.diag([1.0, 4.0])), atol=1e-12)

    def test_identity(self, equality_field):
        g = congruence(equality_field, np.eye(2))
        assert np.abs(g.values - equality_field.values).max() < 1e-12

    def test_preserves_divergence(self, equality_field, rng):
        p = np.eye(2) + 0.3 * rng.normal(size=(2, 2))
        g = congruence(equality_field, p)
        assert divergence_mass(g) < 1e-10
        assert g.is_psd()

    def test_singular_rejected(self, equality_field):
        with pytest.raises(SingularTransformError):
            congruence(equality_field, np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_laminate_spec_transform_matches_sampling(self, rng):
        spec = LaminateSpec(
            SymMat.from_diag([1.0, 2.0]), SymMat.from_diag([3.0, 2.0]), np.array([0.0, 1.0])
        )
        p = np.array([[1.0, 0.4], [-0.2, 1.1]])
        moved = spec.transformed(p)
        # exact transform keeps the layered structure and the profile
        assert moved.theta == spec.theta
        diff = moved.c.matrix - moved.b.matrix
        assert np.linalg.norm(diff @ moved.xi) < 1e-12
        assert np.allclose(moved.b.matrix, p @ spec.b.matrix @ p.T)

    def test_bounded_domain_rejected(self):
        f = constant_field(SymMat.identity(2), Ball(np.zeros(2), 1.0), GridSpec((8, 8)))
        with pytest.raises(UnsupportedDomainError):
            congruence(f, np.eye(2))


class TestBoundaryTrace:
    def test_identity_on_disk(self):
        f = constant_field(SymMat.identity(2), Ball(np.zeros(2), 1.0), GridSpec((16, 16)))
        assert boundary_trace_norm(f) == pytest.approx(2 * np.pi, rel=1e-12)

    def test_identity_on_square(self):
        f = constant_field(SymMat.identity(2), Box(np.zeros(2), np.ones(2)), GridSpec((16, 16)))
        assert boundary_trace_norm(f) == pytest.approx(4.0, rel=1e-12)

    def test_scaling(self):
        f = constant_field(SymMat.from_diag([2.0, 2.0]), Ball(np.zeros(2), 1.0), GridSpec((16, 16)))
        assert boundary_trace_norm(f) == pytest.approx(4 * np.pi, rel=1e-12)

    def test_interpolated_field(self):
        # drop the closed-form evaluator; linear interpolation carries it
        grid = GridSpec((64, 64))
        box = Box(np.zeros(2), np.ones(2))
        fr = np.meshgrid(*grid.fractions(), indexing="ij")
        vals = np.zeros(grid.shape + (3,))
        vals[..., 0] = 1.0 + fr[0]
        vals[..., 2] = 1.0
        f = TensorField(2, box, grid, vals)
        got = boundary_trace_norm(f)
        # left edge 1, right edge 2, top and bottom 1 each
        assert got == pytest.approx(5.0, rel=1e-6)


class TestRoundTrip:
    def test_bit_exact(self, tmp_path, equality_field):
        path = tmp_path / "field.json"
        save_field(equality_field, path)
        back = load_field(path)
        assert np.array_equal(back.values, equality_field.values)
        assert back.grid == equality_field.grid
        assert np.array_equal(back.domain.basis, equality_field.domain.basis)

    def test_bounded_domain_roundtrip(self, tmp_path):
        f = constant_field(SymMat.identity(2), Ball(np.array([0.5, 0.5]), 2.0), GridSpec((8, 8)))
        path = tmp_path / "ball.json"
        save_field(f, path)
        back = load_field(path)
        assert isinstance(back.domain, Ball)
        assert back.domain.radius == 2.0
        assert np.array_equal(back.values, f.values)
