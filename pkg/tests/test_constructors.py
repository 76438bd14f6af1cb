import numpy as np
import pytest

from dpt.constructors import (
    LaminateSpec,
    PotentialSpec,
    RadialBumpPotential,
    TrigPotential,
    TrigScalar,
    diagonal_dpt,
    euler_tensor,
    field_from_spec,
    hessian_cofactor,
    kinetic_moment_tensor,
    laminate,
    moment_matrix,
    relativistic_det_sweep,
    relativistic_tensor,
    selfsimilar_tensor,
)
from dpt.domain import Ball, Box, GridSpec, Torus, cell_volume
from dpt.errors import (
    IncompatiblePairError,
    NegativeDensityError,
    NegativeDistributionError,
    NegativeEntryError,
    NotConvexError,
    SuperluminalVelocityError,
)
from dpt.field import ScalarField, VectorField, divergence_mass, field_average
from dpt.symmat import SymMat


class TestDiagonal:
    def test_constants(self):
        f = diagonal_dpt([2.0, 3.0], GridSpec((8, 8)))
        assert np.allclose(f.matrices(), np.diag([2.0, 3.0]))

    def test_trig_entry_psd_divfree(self):
        g1 = TrigScalar(2, (((1, 0), 0.0, 0.5),), offset=1.0)  # 1 + 0.5 sin(2 pi x2)
        f = diagonal_dpt([g1, 1.0, 1.0], GridSpec((32, 32, 32)))
        assert f.is_psd(1e-10)
        assert divergence_mass(f) <= 1e-8

    def test_zero_entry_makes_singular(self):
        f = diagonal_dpt([0.0, 1.0], GridSpec((8, 8)))
        assert np.all(f.dets() == 0.0)

    def test_negative_entry_rejected(self):
        g = TrigScalar(1, (((1,), 2.0, 0.0),), offset=0.5)
        with pytest.raises(NegativeEntryError):
            diagonal_dpt([g, 1.0], GridSpec((16, 16)))


class TestHessianCofactor:
    def test_quadratic_only(self):
        f = hessian_cofactor(PotentialSpec(SymMat.identity(2)), grid=GridSpec((8, 8)))
        assert np.allclose(f.matrices(), np.eye(2))

    def test_periodic_perturbation(self, equality_field):
        assert equality_field.is_psd(1e-10)
        assert divergence_mass(equality_field) <= 1e-8

    def test_radial_on_ball_identity(self):
        # potential |x|^2/2 has Hessian I, so the cofactor field is I
        f = hessian_cofactor(
            PotentialSpec(SymMat.identity(2)), Ball(np.zeros(2), 1.0), GridSpec((16, 16))
        )
        assert np.allclose(f.matrices(), np.eye(2))

    def test_bump_on_box(self):
        bump = RadialBumpPotential(np.array([0.5, 0.5]), 0.45, 1e-3)
        f = hessian_cofactor(
            PotentialSpec(SymMat.identity(2), bump),
            Box(np.zeros(2), np.ones(2)),
            GridSpec((128, 128)),
        )
        assert f.is_psd(1e-10)
        dev = np.abs(field_average(f).matrix - np.eye(2)).max()
        assert dev <= 1e-8

    def test_not_convex_reports_cell(self):
        spec = PotentialSpec(
            SymMat.identity(2), TrigPotential(2, (((1, 0), 0.2, 0.0),))
        )
        with pytest.raises(NotConvexError, match="cell"):
            hessian_cofactor(spec, grid=GridSpec((32, 32)))


class TestLaminate:
    def test_average(self, laminate_311):
        assert field_average(laminate_311).allclose(SymMat.from_diag([1.5, 3.0, 1.0]))
        assert divergence_mass(laminate_311) == 0.0

    def test_equal_states_constant(self):
        spec = LaminateSpec(SymMat.identity(2), SymMat.identity(2), np.array([1.0, 0.0]))
        f = laminate(spec, GridSpec((8, 8)))
        assert np.allclose(f.matrices(), np.eye(2))

    def test_incompatible_pair(self):
        with pytest.raises(IncompatiblePairError):
            LaminateSpec(
                SymMat.identity(2), SymMat.from_diag([2.0, 3.0]), np.array([0.0, 1.0])
            )

    def test_d2_det_affine_equality(self):
        # rank-one direction makes det affine on the segment: mean det = det mean
        spec = LaminateSpec(
            SymMat.identity(2), SymMat.from_diag([2.0, 1.0]), np.array([0.0, 1.0])
        )
        lhs = spec.det_power_mean(1.0)
        rhs = spec.average().det()
        assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_profile_intervals(self):
        spec = LaminateSpec(
            SymMat.identity(2),
            SymMat.from_diag([2.0, 1.0]),
            np.array([0.0, 1.0]),
            intervals=((0.0, 0.25), (0.5, 0.75)),
        )
        assert spec.theta == pytest.approx(0.5)
        g = spec.profile(np.array([0.1, 0.3, 0.6, 0.9, 1.1]))
        assert np.array_equal(g, [1.0, 0.0, 1.0, 0.0, 1.0])


class TestEulerTensor:
    def _fields(self, rho, u, p, n=1):
        grid = GridSpec((8,) * 2)
        dom = Torus.unit(2)
        shape = grid.shape
        return (
            ScalarField(dom, grid, np.full(shape, rho)),
            VectorField(dom, grid, np.full(shape + (n,), u)),
            ScalarField(dom, grid, np.full(shape, p)),
        )

    def test_rest_state(self):
        f = euler_tensor(*self._fields(1.0, 0.0, 2.0))
        assert np.allclose(f.matrices(), np.diag([1.0, 2.0]))
        assert np.allclose(f.dets(), 2.0)

    def test_moving_state(self):
        f = euler_tensor(*self._fields(2.0, 3.0, 5.0))
        assert np.allclose(f.matrices(), [[2.0, 6.0], [6.0, 23.0]])
        assert np.allclose(f.dets(), 10.0)

    def test_vacuum(self):
        f = euler_tensor(*self._fields(0.0, 0.0, 3.0))
        assert np.all(f.dets() == 0.0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_det_identity_random(self, rng, n):
        count = 500
        rho = rng.uniform(0.0, 3.0, count)
        u = rng.normal(size=(count, n))
        p = rng.uniform(0.0, 3.0, count)
        from dpt.constructors import euler_state_packed
        from dpt.symmat import det_packed

        packed = euler_state_packed(rho, u, p)
        target = rho * p**n
        assert np.all(np.abs(det_packed(packed, n + 1) - target) <= 1e-12 * (1.0 + target))

    def test_negative_density(self):
        with pytest.raises(NegativeDensityError):
            grid = GridSpec((8, 8))
            dom = Torus.unit(2)
            euler_tensor(
                ScalarField(dom, grid, np.full(grid.shape, -1.0)),
                VectorField(dom, grid, np.zeros(grid.shape + (1,))),
                ScalarField(dom, grid, np.ones(grid.shape)),
            )


class TestKineticMoment:
    def test_two_atoms(self):
        m = moment_matrix(np.ones(2), np.ones(2), np.array([0.0, 1.0]))
        assert np.allclose(m.matrix, [[2.0, 1.0], [1.0, 1.0]])
        assert m.det() == pytest.approx(1.0)

    def test_single_atom_rank_one(self):
        m = moment_matrix(np.ones(1), np.ones(1), np.array([0.7]))
        assert m.det() == pytest.approx(0.0, abs=1e-15)

    def test_zero_distribution(self):
        m = moment_matrix(np.ones(3), np.zeros(3), np.array([-1.0, 0.0, 1.0]))
        assert np.allclose(m.matrix, 0.0)

    def test_gram_quadratic_form(self, rng):
        w = rng.uniform(0.5, 2.0, 8)
        f = rng.uniform(0.0, 1.0, 8)
        v = rng.normal(size=(8, 2))
        m = moment_matrix(w, f, v)
        for _ in range(50):
            x = rng.normal(size=3)
            lifted = np.concatenate([[np.ones(8)], v.T]).T
            expected = float((w * f * (lifted @ x) ** 2).sum())
            assert x @ m.matrix @ x == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_negative_distribution(self):
        with pytest.raises(NegativeDistributionError):
            moment_matrix(np.ones(2), np.array([1.0, -0.5]), np.array([0.0, 1.0]))

    def test_state_accessor(self):
        from dpt.kinetic import KineticState

        st = KineticState(np.ones((4, 2)), np.array([0.0, 1.0]), np.ones(2), dy=0.25)
        m = kinetic_moment_tensor(st, 0)
        assert np.allclose(m.matrix, [[2.0, 1.0], [1.0, 1.0]])


class TestRelativistic:
    def test_rest_frame(self):
        a = relativistic_tensor(1.0, [0.0], 1.0, 1.0)
        assert np.allclose(a.matrix, np.eye(2))
        assert a.det() == pytest.approx(1.0)

    def test_moving_state(self):
        a = relativistic_tensor(1.0, [0.5], 2.0, 1.0)
        assert np.allclose(a.matrix, [[2.0, 2.0], [2.0, 3.0]])
        assert a.det() == pytest.approx(2.0)

    def test_superluminal(self):
        with pytest.raises(SuperluminalVelocityError):
            relativistic_tensor(1.0, [1.0], 1.0, 1.0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_det_identity_sweep(self, n):
        assert relativistic_det_sweep(10_000, n, seed=11) <= 1e-12

    def test_psd_random(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 4))
            v = rng.normal(size=n)
            v *= rng.uniform(0.0, 0.99) / max(np.linalg.norm(v), 1e-12)
            a = relativistic_tensor(rng.uniform(0.0, 2.0), v, rng.uniform(0.0, 2.0), 1.0)
            assert a.eigvals()[0] >= -1e-12 * (1.0 + a.norm())


class TestSelfSimilar:
    def _fields(self, rho_val, v_vec, p_val, grid):
        dom = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
        shape = grid.shape
        rho = ScalarField(dom, grid, np.full(shape, rho_val))
        v = VectorField(dom, grid, np.broadcast_to(np.asarray(v_vec, float), shape + (2,)).copy())
        p = ScalarField(dom, grid, np.full(shape, p_val))
        return rho, v, p

    def test_vacuum_constant_pressure(self):
        grid = GridSpec((8, 8))
        tensor, source = selfsimilar_tensor(*self._fields(0.0, [0.0, 0.0], 1.0, grid))
        assert np.allclose(tensor.matrices(), np.eye(2))
        assert np.allclose(source.values, 0.0)
        assert np.allclose(tensor.dets(), 1.0)

    def test_moving_state(self):
        grid = GridSpec((8, 8))
        tensor, _ = selfsimilar_tensor(*self._fields(1.0, [1.0, 0.0], 2.0, grid))
        assert np.allclose(tensor.matrices(), np.diag([3.0, 2.0]))
        assert np.allclose(tensor.dets(), 6.0)

    def test_source_l1_matches_quadrature(self):
        # source = -(n+1) rho v, so its L1 mass is (n+1) * integral of rho |v|
        grid = GridSpec((32, 32))
        dom = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
        fr = np.meshgrid(*grid.fractions(), indexing="ij")
        x = -1.0 + 2.0 * fr[0]
        y = -1.0 + 2.0 * fr[1]
        rho = ScalarField(dom, grid, 1.0 + 0.5 * np.sin(np.pi * x))
        v = VectorField(dom, grid, np.stack([np.cos(np.pi * y), 0.2 * x], axis=-1))
        p = ScalarField(dom, grid, np.ones(grid.shape))
        tensor, source = selfsimilar_tensor(rho, v, p)
        mass = np.linalg.norm(source.values, axis=-1).sum() * cell_volume(dom, grid)
        speed = np.linalg.norm(v.values, axis=-1)
        oracle = 3.0 * (rho.values * speed).sum() * cell_volume(dom, grid)
        assert mass == pytest.approx(oracle, rel=1e-12)

    def test_det_formula(self, rng):
        # det(rho v v^T + p I) = p^{n-1} (p + rho |v|^2)
        grid = GridSpec((8, 8))
        rho_val, p_val = rng.uniform(0.1, 2.0, 2)
        v_vec = rng.normal(size=2)
        tensor, _ = selfsimilar_tensor(*self._fields(rho_val, v_vec, p_val, grid))
        expected = p_val * (p_val + rho_val * (v_vec @ v_vec))
        assert np.allclose(tensor.dets(), expected)


class TestFieldFromSpec:
    def test_constant(self):
        f = field_from_spec({"tag": "constant", "matrix": {"diag": [1.0, 2.0]}, "grid": [8, 8]})
        assert np.allclose(f.matrices(), np.diag([1.0, 2.0]))

    def test_laminate_roundtrip(self):
        doc = {
            "tag": "laminate",
            "b": {"diag": [1, 1, 1]},
            "c": {"diag": [2, 5, 1]},
            "xi": [0, 0, 1],
            "grid": [8, 8, 8],
        }
        f = field_from_spec(doc)
        assert field_average(f).allclose(SymMat.from_diag([1.5, 3.0, 1.0]))

    def test_unknown_tag(self):
        with pytest.raises(ValueError, match="unknown constructor"):
            field_from_spec({"tag": "mystery"})
