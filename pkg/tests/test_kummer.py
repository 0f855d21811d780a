"""Second-order basis, Kummer map, and the addition-formula oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kummerlab as kl
from kummerlab.errors import ValidationError

from conftest import random_period_matrix, random_point


class TestSecondOrderValues:
    def test_length_is_two_for_g1(self, pm_g1):
        basis = kl.basis_for(pm_g1)
        assert kl.second_order_values(basis, [0.2 + 0.1j]).shape == (2,)

    def test_even_in_z(self, pm_g2):
        basis = kl.basis_for(pm_g2)
        for k in range(5):
            z = random_point(2, 70 + k)
            a = kl.second_order_values(basis, z)
            b = kl.second_order_values(basis, -z)
            assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(a).max())

    def test_addition_formula_is_the_oracle(self, pm_g2):
        basis = kl.basis_for(pm_g2)
        z = random_point(2, 81)
        w = random_point(2, 82)
        assert kl.addition_residual(basis, z, w, eps=1e-13) <= 1e-10

    def test_derivative_vs_finite_differences(self, pm_g2):
        basis = kl.basis_for(pm_g2)
        z = random_point(2, 83)
        w = np.array([0.5 - 0.1j, 0.2 + 0.3j])
        h = 1e-5
        fd = (kl.second_order_values(basis, z + h * w, eps=1e-14)
              - kl.second_order_values(basis, z - h * w, eps=1e-14)) / (2 * h)
        dv = kl.second_order_derivative(basis, z, w, eps=1e-14)
        assert np.abs(dv - fd).max() <= 1e-6 * max(1.0, np.abs(dv).max())


class TestAdditionResidual:
    def test_w_zero_specialization(self, pm_g2):
        basis = kl.basis_for(pm_g2)
        z = random_point(2, 90)
        assert kl.addition_residual(basis, z, np.zeros(2), eps=1e-13) <= 1e-10

    @pytest.mark.parametrize("g", [1, 2, 3])
    def test_random_inputs(self, g):
        for k in range(4):
            pm = random_period_matrix(g, 2000 * g + k)
            basis = kl.basis_for(pm)
            z = random_point(g, 3000 + k)
            w = random_point(g, 4000 + k)
            assert kl.addition_residual(basis, z, w, eps=1e-13) <= 1e-10

    def test_sensitive_to_basis_scaling(self, pm_g2):
        # the same identity recomputed with one basis member doubled must fail loudly
        basis = kl.basis_for(pm_g2)
        worst = 0.0
        for k in range(5):
            z = random_point(2, 60 + k)
            w = random_point(2, 65 + k)
            lhs = kl.theta(pm_g2, z + w) * kl.theta(pm_g2, z - w)
            vz = kl.second_order_values(basis, z)
            vw = kl.second_order_values(basis, w)
            vz_bad = vz.copy()
            vz_bad[0] *= 2.0
            residual = abs(lhs - vz_bad @ vw) / max(1.0, abs(lhs))
            worst = max(worst, residual)
        assert worst > 1e-3


class TestKummerMap:
    def test_evenness_100_points(self, pm_g2):
        basis = kl.basis_for(pm_g2)
        for k in range(100):
            z = random_point(2, 7000 + k)
            d = kl.projective_distance(kl.kummer(basis, z), kl.kummer(basis, -z))
            assert d <= 1e-10

    def test_g1_at_origin(self, pm_g1):
        pt = kl.kummer(kl.basis_for(pm_g1), [0.0])
        assert pt.coords.shape == (2,)
        assert np.abs(pt.coords).max() == pytest.approx(1.0)

    def test_lattice_invariance(self, pm_g2):
        basis = kl.basis_for(pm_g2)
        gen = np.random.default_rng(17)
        for k in range(5):
            z = random_point(2, 7500 + k)
            lam = pm_g2.tau @ gen.integers(-2, 3, size=2) + gen.integers(-2, 3, size=2)
            d = kl.projective_distance(kl.kummer(basis, z), kl.kummer(basis, z + lam))
            assert d <= 1e-10

    def test_degenerate_point_guard(self, pm_g2):
        # an accuracy floor above the value scale must be reported, not hidden
        basis = kl.basis_for(pm_g2)
        with pytest.raises(kl.DegeneratePointError):
            kl.kummer(basis, random_point(2, 7600), eps=1e3)


class TestProjectivePoint:
    def test_normalization_pivot_is_one(self):
        pt = kl.ProjectivePoint(np.array([1.0 + 1.0j, 3.0 - 4.0j, 0.5j]))
        assert np.abs(pt.coords).max() == pytest.approx(1.0)
        assert pt.coords[1] == pytest.approx(1.0 + 0.0j)

    def test_rejects_zero_vector(self):
        with pytest.raises(ValidationError):
            kl.ProjectivePoint(np.zeros(4, dtype=complex))


class TestProjectiveDistance:
    def test_identical_points(self):
        p = kl.ProjectivePoint(np.array([1.0, 2.0j, -0.5]))
        assert kl.projective_distance(p, p) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_vectors(self):
        p = kl.ProjectivePoint(np.array([1.0, 0.0], dtype=complex))
        q = kl.ProjectivePoint(np.array([0.0, 1.0], dtype=complex))
        assert kl.projective_distance(p, q) == pytest.approx(1.0)

    @given(st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=25, deadline=None)
    def test_scale_invariance(self, seed):
        gen = np.random.default_rng(seed)
        v = gen.normal(size=4) + 1j * gen.normal(size=4)
        p = kl.ProjectivePoint(v)
        q = kl.ProjectivePoint(3.0 * v)
        assert kl.projective_distance(p, q) <= 1e-12


class TestHalfPeriods:
    def test_count(self, pm_g2):
        assert len(kl.all_half_periods(pm_g2)) == 16

    def test_doubled_half_period_is_lattice(self, pm_g2):
        for bits, h in kl.all_half_periods(pm_g2):
            assert np.linalg.norm(kl.lattice_reduce(pm_g2, 2.0 * h)) < 1e-12

    def test_rejects_bad_bits(self, pm_g2):
        with pytest.raises(ValidationError):
            kl.half_period(pm_g2, [0, 1, 2, 0])
