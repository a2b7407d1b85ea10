import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caplaw import (
    ConjugateQuery,
    ConjugateTruncationWarning,
    DomainError,
    NFunctionSpec,
    analytic_conjugate,
    numeric_conjugate,
    phi_p_derivative,
    phi_p_dual_index,
    phi_p_eval,
    scaled_conjugate,
    verify_conjugate_is_quadratic,
    verify_quadratic_nfunction,
)


def conj(f, y, **kwargs):
    return numeric_conjugate(f, ConjugateQuery(y=float(y), **kwargs)).value


class TestPhiP:

    def test_values(self):
        assert phi_p_eval(2, 1) == 0.5
        assert phi_p_eval(3, 0) == 0.0
        assert phi_p_eval(3, 2) == pytest.approx(17 / 6, rel=1e-15)

    def test_continuous_at_one(self):
        for p in (1, 1.5, 2, 3, 7):
            assert phi_p_eval(p, 1.0) == 0.5
            assert phi_p_eval(p, 1.0 + 1e-9) == pytest.approx(0.5, abs=1e-8)

    def test_vectorised_and_even(self):
        x = np.linspace(-4, 4, 81)
        values = phi_p_eval(3, x)
        assert values.shape == x.shape
        np.testing.assert_array_equal(values, phi_p_eval(3, -x))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            phi_p_eval(0.5, 1.0)
        with pytest.raises(DomainError):
            phi_p_eval(2, math.inf)
        with pytest.raises(DomainError):
            phi_p_eval(2, [1.0, math.nan])

    def test_derivative(self):
        assert phi_p_derivative(3, 0.5) == 0.5
        assert phi_p_derivative(3, -2.0) == -4.0
        assert phi_p_derivative(1.5, 4.0) == pytest.approx(2.0)


class TestDualIndex:

    @pytest.mark.parametrize('p, q', [(2, 2), (3, 1.5), (1.5, 3)])
    def test_examples(self, p, q):
        assert phi_p_dual_index(p) == pytest.approx(q, rel=1e-15)
        assert 1 / p + 1 / phi_p_dual_index(p) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize('p', [1, 0.5])
    def test_undefined(self, p):
        with pytest.raises(DomainError, match='dual index undefined'):
            phi_p_dual_index(p)


class TestNumericConjugate:

    def test_examples(self, phi2, phi3):
        assert conj(phi2, 0.5, x_max=10) == pytest.approx(0.125, abs=1e-9)
        expected = (2 / 3) * 2 ** 1.5 - 2 / 3 + 0.5
        assert conj(phi3, 2, x_max=10) == pytest.approx(expected, abs=1e-9)
        assert conj(phi3, 2, x_max=10) == pytest.approx(phi_p_eval(1.5, 2), abs=1e-9)
        custom = NFunctionSpec.custom(lambda x: np.abs(x) ** 4, name='quartic')
        for f in (phi2, phi3, custom):
            assert conj(f, 0.0) == 0.0

    @pytest.mark.parametrize('p', [1.5, 2, 3])
    def test_conjugate_pair(self, p, y_grid):
        f = NFunctionSpec.phi_p(p)
        q = phi_p_dual_index(p)
        numeric = np.array([conj(f, y) for y in y_grid])
        np.testing.assert_allclose(numeric, phi_p_eval(q, y_grid), rtol=0, atol=1e-6)

    def test_even(self, phi3):
        for y in (0.3, 1.0, 2.5, 9.0):
            assert conj(phi3, y) == conj(phi3, -y)

    def test_order_reversal(self, phi2, y_grid):
        larger = phi2.scaled(2.0, 1.0)
        for y in y_grid:
            assert conj(larger, y) <= conj(phi2, y) + 1e-8

    def test_fenchel_young(self, phi3):
        xs = np.linspace(-5, 5, 41)
        ys = np.linspace(-5, 5, 41)
        star = {y: conj(phi3, y) for y in ys}
        for x in xs:
            for y in ys:
                assert x * y <= phi3(x) + star[y] + 1e-8

    def test_nonnegative(self, phi3, y_grid):
        assert all(conj(phi3, y) >= 0 for y in y_grid)

    def test_truncation_is_flagged(self):
        linear = NFunctionSpec.custom(np.abs, name='abs')
        with pytest.warns(ConjugateTruncationWarning):
            result = numeric_conjugate(linear, ConjugateQuery(y=2.0, x_max=5.0))
        assert result.truncated
        assert result.argmax == pytest.approx(5.0)

    def test_interior_maximum_not_flagged(self, phi2):
        with warnings.catch_warnings():
            warnings.simplefilter('error', ConjugateTruncationWarning)
            result = numeric_conjugate(phi2, ConjugateQuery(y=3.0))
        assert not result.truncated
        assert result.argmax == pytest.approx(3.0, abs=1e-6)

    @pytest.mark.parametrize('kwargs', [{'x_max': 0.0}, {'x_max': -1.0}, {'tol': 0.0}, {'tol': -1e-9}])
    def test_bad_query(self, phi2, kwargs):
        with pytest.raises(DomainError):
            numeric_conjugate(phi2, ConjugateQuery(y=1.0, **kwargs))

    @settings(max_examples=50, deadline=None)
    @given(x=st.floats(-8, 8), y=st.floats(-8, 8))
    def test_fenchel_young_property(self, x, y):
        f = NFunctionSpec.phi_p(2.5)
        assert x * y <= f(x) + conj(f, y) + 1e-8


class TestScaledConjugate:

    def test_examples(self, phi2):
        assert scaled_conjugate(1, 1, phi2, 1) == pytest.approx(0.5)
        assert scaled_conjugate(2, 1, phi2, 2) == pytest.approx(1.0)
        assert scaled_conjugate(1, 3, phi2, 3) == pytest.approx(0.5)
        assert conj(phi2.scaled(2, 1), 2) == pytest.approx(1.0, abs=1e-9)
        assert conj(phi2.scaled(1, 3), 3) == pytest.approx(0.5, abs=1e-9)

    def test_scaling_identity(self, phi2, y_grid):
        for a in (0.5, 1.0, 2.0):
            for b in (0.5, 1.0, 3.0):
                psi = phi2.scaled(a, b)
                numeric = np.array([conj(psi, y) for y in y_grid])
                analytic = np.array([scaled_conjugate(a, b, phi2, y) for y in y_grid])
                np.testing.assert_allclose(numeric, analytic, rtol=0, atol=1e-6)

    def test_numeric_base(self):
        quartic = NFunctionSpec.custom(lambda x: np.asarray(x) ** 4 / 4, name='quartic')
        # (x^4/4)* = (3/4) |y|^(4/3)
        value = scaled_conjugate(2.0, 0.5, quartic, 1.5, tol=1e-10)
        y = 1.5 / (2.0 * 0.5)
        assert value == pytest.approx(2.0 * 0.75 * y ** (4 / 3), abs=1e-7)

    @pytest.mark.parametrize('a, b', [(0, 1), (-1, 1), (1, 0)])
    def test_domain(self, phi2, a, b):
        with pytest.raises(DomainError):
            scaled_conjugate(a, b, phi2, 1.0)

    def test_scaled_keeps_quadratic_constants(self, phi2):
        psi = phi2.scaled(2.0, 3.0)
        assert psi.c == pytest.approx(0.5 * 2 * 9)
        assert psi.x0 == pytest.approx(1 / 3)
        assert psi(0.1) == pytest.approx(psi.c * 0.01)


class TestAnalyticConjugate:

    def test_matches_dual(self, phi3):
        result = analytic_conjugate(phi3, 4.0)
        assert result.value == pytest.approx(phi_p_eval(1.5, 4.0))
        assert result.argmax == pytest.approx(2.0)

    def test_rejects_custom_and_p_one(self):
        with pytest.raises(DomainError):
            analytic_conjugate(NFunctionSpec.phi_p(1), 0.5)
        with pytest.raises(DomainError):
            analytic_conjugate(NFunctionSpec.custom(np.abs), 0.5)


class TestVerifyQuadratic:

    @pytest.mark.parametrize('p', [2, 3])
    def test_phi_p_passes(self, p, symmetric_grid):
        report = verify_quadratic_nfunction(NFunctionSpec.phi_p(p), symmetric_grid, 0.5, 1.0)
        assert report.passed, report.failures()

    @pytest.mark.parametrize('p', [2, 3])
    def test_steep_scaling_passes(self, p, symmetric_grid):
        psi = NFunctionSpec.phi_p(p).scaled(2.0, 3.0)
        assert (psi.c, psi.x0) == (9.0, pytest.approx(1 / 3))
        report = verify_quadratic_nfunction(psi, symmetric_grid, psi.c, psi.x0)
        assert report.passed, report.failures()

    def test_grid_outside_quadratic_part(self, phi2):
        grid = np.array([-3.0, -2.0, 2.0, 3.0])
        report = verify_quadratic_nfunction(phi2, grid, 0.5, 1.0)
        assert not report['ratio_vanishes_at_zero'].passed

    def test_abs_is_not_an_nfunction(self, symmetric_grid):
        report = verify_quadratic_nfunction(NFunctionSpec.custom(np.abs, name='abs'), symmetric_grid, 0.5, 1.0)
        assert not report['ratio_vanishes_at_zero'].passed
        assert not report.passed

    def test_empty_grid(self, phi2):
        with pytest.raises(DomainError):
            verify_quadratic_nfunction(phi2, [], 0.5, 1.0)

    def test_conjugate_is_quadratic(self, phi3):
        positive = np.arange(1, 13) * 0.25
        grid = np.concatenate([-positive[::-1], positive])
        report = verify_conjugate_is_quadratic(phi3, grid)
        assert report.passed, report.failures()
