import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpt.errors import NotPSDError
from dpt.symmat import (
    SymMat,
    cofactor,
    cofactor_packed,
    det_packed,
    det_power,
    pack,
    psd_check,
    sphere_area,
    unpack,
)


class TestCofactor:
    def test_2x2_diag_swap(self):
        assert cofactor(SymMat.from_diag([2.0, 3.0])).allclose(SymMat.from_diag([3.0, 2.0]))

    def test_identity_fixed_point(self):
        assert cofactor(SymMat.identity(3)).allclose(SymMat.identity(3))

    def test_2x2_full(self):
        a = SymMat.from_matrix([[2.0, 1.0], [1.0, 3.0]])
        ahat = cofactor(a)
        assert np.allclose(ahat.matrix, [[3.0, -1.0], [-1.0, 2.0]])
        assert np.allclose(ahat.matrix @ a.matrix, 5.0 * np.eye(2))

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_cofactor_identity_random(self, rng, d):
        mats = rng.normal(size=(1000, d, d))
        mats = mats + np.swapaxes(mats, 1, 2)
        packed = pack(mats)
        cof = unpack(cofactor_packed(packed, d), d)
        prod = np.einsum("cij,cjk->cik", cof, mats)
        dets = det_packed(packed, d)
        err = np.abs(prod - dets[:, None, None] * np.eye(d)).max(axis=(1, 2))
        scale = 1.0 + np.linalg.norm(mats, 2, axis=(1, 2)) ** d
        assert np.all(err <= 1e-10 * scale)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_det_of_cofactor(self, rng, d):
        m = rng.normal(size=(d, d))
        a = SymMat.from_matrix(m + m.T)
        assert cofactor(a).det() == pytest.approx(a.det() ** (d - 1), rel=1e-10, abs=1e-12)


class TestDetPower:
    def test_plain_product(self):
        assert det_power(SymMat.from_diag([4.0, 9.0]), 1.0) == pytest.approx(36.0)

    def test_sqrt(self):
        assert det_power(SymMat.from_diag([1.0, 2.0, 3.0]), 0.5) == pytest.approx(
            math.sqrt(6.0), rel=1e-12
        )

    def test_zero_matrix(self):
        assert det_power(SymMat.zero(3), 0.7) == 0.0

    def test_roundoff_clamp(self):
        a = SymMat.from_diag([1.0, -1e-14])
        assert det_power(a, 1.0) == 0.0

    def test_indefinite_raises(self):
        with pytest.raises(NotPSDError):
            det_power(SymMat.from_matrix([[1.0, 2.0], [2.0, 1.0]]), 1.0)

    @given(
        t=st.floats(min_value=1e-3, max_value=1e3),
        alpha=st.floats(min_value=0.1, max_value=2.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_homogeneity(self, t, alpha):
        a = SymMat.from_matrix([[2.0, 0.5], [0.5, 1.0]])
        lhs = det_power(t * a, alpha)
        rhs = t ** (2 * alpha) * det_power(a, alpha)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestPsdCheck:
    def test_identity(self):
        assert psd_check(SymMat.identity(2), 0.0)

    def test_indefinite(self):
        assert not psd_check(SymMat.from_matrix([[1.0, 2.0], [2.0, 1.0]]), 1e-10)

    def test_tolerance_case(self):
        assert psd_check(SymMat.from_diag([1e-16, 1.0]), 1e-10)

    def test_slightly_negative_within_tol(self):
        assert psd_check(SymMat.from_diag([-1e-12, 1.0]), 1e-10)


class TestPacking:
    @given(d=st.integers(min_value=2, max_value=5), data=st.data())
    @settings(max_examples=50, deadline=None)
    def test_roundtrip(self, d, data):
        flat = data.draw(
            st.lists(
                st.floats(-1e6, 1e6, allow_nan=False),
                min_size=d * d,
                max_size=d * d,
            )
        )
        m = np.array(flat).reshape(d, d)
        m = m + m.T
        assert np.array_equal(unpack(pack(m), d), m)

    def test_entry_count_invariant(self):
        with pytest.raises(ValueError):
            SymMat(3, np.zeros(5))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            SymMat(2, np.array([1.0, np.nan, 1.0]))


@pytest.mark.parametrize(
    "d,expected",
    [
        (1, 2.0),
        (2, 2.0 * math.pi),
        (3, 4.0 * math.pi),
        (4, 2.0 * math.pi**2),
    ],
)
def test_sphere_area(d, expected):
    assert sphere_area(d) == pytest.approx(expected, rel=1e-14)
