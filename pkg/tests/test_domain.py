import numpy as np
import pytest

from dpt.domain import (
    Ball,
    Box,
    ConvexPolytope,
    GridSpec,
    Torus,
    boundary_rule,
    cell_centers,
    cell_volume,
    interior_rule,
)
from dpt.errors import UnsupportedDomainError


def test_grid_min_cells():
    with pytest.raises(ValueError):
        GridSpec((3, 8))


def test_torus_singular_basis_rejected():
    with pytest.raises(ValueError):
        Torus(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_box_ordering():
    with pytest.raises(ValueError):
        Box(np.array([0.0, 1.0]), np.array([1.0, 0.5]))


def test_ball_volume_perimeter():
    b = Ball(np.zeros(2), 2.0)
    assert b.volume == pytest.approx(np.pi * 4.0)
    assert b.perimeter == pytest.approx(4.0 * np.pi)
    b3 = Ball(np.zeros(3), 1.0)
    assert b3.volume == pytest.approx(4.0 * np.pi / 3.0)


class TestPolytope:
    def square(self):
        normals = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        offsets = np.array([1.0, 0.0, 1.0, 0.0])
        return ConvexPolytope(normals, offsets)

    def test_square_vertices(self):
        poly = self.square()
        assert poly.volume == pytest.approx(1.0)
        assert poly.perimeter == pytest.approx(4.0)

    def test_triangle(self):
        normals = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
        offsets = np.array([0.0, 0.0, 1.0])
        tri = ConvexPolytope(normals, offsets)
        assert tri.volume == pytest.approx(0.5)
        assert tri.perimeter == pytest.approx(2.0 + np.sqrt(2.0))

    def test_unbounded_rejected(self):
        with pytest.raises(ValueError):
            ConvexPolytope(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1.0, 1.0]))

    def test_3d_rejected(self):
        with pytest.raises(UnsupportedDomainError):
            ConvexPolytope(np.eye(3), np.ones(3))


class TestBoundaryRules:
    def test_circle_length(self):
        rule = boundary_rule(Ball(np.array([0.3, -0.2]), 1.5))
        assert rule.weights.sum() == pytest.approx(2.0 * np.pi * 1.5)
        assert np.allclose(np.linalg.norm(rule.normals, axis=1), 1.0)

    def test_sphere_area(self):
        rule = boundary_rule(Ball(np.zeros(3), 2.0))
        assert rule.weights.sum() == pytest.approx(4.0 * np.pi * 4.0)

    def test_box_perimeter(self):
        rule = boundary_rule(Box(np.zeros(2), np.array([2.0, 1.0])))
        assert rule.weights.sum() == pytest.approx(6.0)

    def test_box3_area(self):
        rule = boundary_rule(Box(np.zeros(3), np.ones(3)), order=4, panels=2)
        assert rule.weights.sum() == pytest.approx(6.0)

    def test_polygon_first_moment(self):
        # integral of x over the unit square boundary = perimeter * centroid
        normals = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        poly = ConvexPolytope(normals, np.array([1.0, 0.0, 1.0, 0.0]))
        rule = boundary_rule(poly)
        assert (rule.points[:, 0] * rule.weights).sum() == pytest.approx(2.0)

    def test_torus_has_no_boundary(self):
        with pytest.raises(UnsupportedDomainError):
            boundary_rule(Torus.unit(2))


class TestInteriorRules:
    def test_disk_area_and_moment(self):
        rule = interior_rule(Ball(np.array([1.0, 0.0]), 1.0))
        assert rule.weights.sum() == pytest.approx(np.pi, rel=1e-12)
        # centroid check: mean of x over the disk equals the center
        assert (rule.points[:, 0] * rule.weights).sum() / np.pi == pytest.approx(1.0)

    def test_disk_quadratic(self):
        rule = interior_rule(Ball(np.zeros(2), 1.0))
        val = ((rule.points**2).sum(axis=1) * rule.weights).sum()
        assert val == pytest.approx(np.pi / 2.0, rel=1e-12)

    def test_ball3_volume(self):
        rule = interior_rule(Ball(np.zeros(3), 1.0), nr=32, nang=64)
        assert rule.weights.sum() == pytest.approx(4.0 * np.pi / 3.0, rel=1e-10)

    def test_polygon_area(self):
        normals = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
        tri = ConvexPolytope(normals, np.array([0.0, 0.0, 1.0]))
        rule = interior_rule(tri)
        assert rule.weights.sum() == pytest.approx(0.5, rel=1e-12)


def test_cell_centers_and_volume():
    grid = GridSpec((4, 8))
    box = Box(np.zeros(2), np.array([2.0, 1.0]))
    pts = cell_centers(box, grid)
    assert pts.shape == (4, 8, 2)
    assert pts[0, 0, 0] == pytest.approx(0.25)
    assert cell_volume(box, grid) == pytest.approx(2.0 / 32)
    torus = Torus(np.diag([2.0, 3.0]))
    assert cell_volume(torus, grid) == pytest.approx(6.0 / 32)
