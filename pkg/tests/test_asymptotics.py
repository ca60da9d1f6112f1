"""Tests for the iterated-integral decay layer.

Anchors are hand-checkable: the n=0 integral is a triangle area, n=1 has an
elementary antiderivative, and the hypergeometric closed form at c = c' = 1
is pinned by the Gauss summation theorem.  The substitution identity is
verified both as a full rescaling (prefactor 1/c — the n=0 triangle areas
already force this factor) and as the literal partial substitution
c^{-1/2} int_0^{c'} int_0^{t sqrt(c)} (1-u^2)^n du dt.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from gpchaos.asymptotics import (
    fit_decay_exponent,
    gauss_theorem_value,
    iter_integral_closed_form,
    iter_integral_quadrature,
    iter_integral_series,
    series_to_csv,
)
from gpchaos.errors import DomainError
from gpchaos.specfun import hyp2f1_terminating


class TestQuadrature:
    def test_triangle_areas(self):
        assert_allclose(iter_integral_quadrature(1.0, 1.0, 0), 0.5,
                        rtol=1e-12)
        assert_allclose(iter_integral_quadrature(4.0, 0.4, 0), 0.08,
                        rtol=1e-12)

    def test_elementary_antiderivative(self):
        # int_0^1 (1-s)(1-s^2) ds = 1 - 1/2 - 1/3 + 1/4 = 5/12
        assert_allclose(iter_integral_quadrature(1.0, 1.0, 1), 5.0 / 12.0,
                        rtol=1e-12)

    def test_strictly_decreasing_in_n(self):
        vals = [iter_integral_quadrature(1.0, 0.9, n) for n in range(25)]
        assert np.all(np.diff(vals) < 0.0)
        vals4 = [iter_integral_quadrature(4.0, 0.3, n) for n in range(25)]
        assert np.all(np.diff(vals4) < 0.0)

    @pytest.mark.parametrize("c,cp", [(1.0, 1.0), (4.0, 0.4), (0.25, 1.9)])
    def test_full_rescaling_identity(self, c, cp):
        # u = s sqrt(c), v = t sqrt(c) rescales both axes: prefactor 1/c
        for n in range(21):
            lhs = iter_integral_quadrature(c, cp, n)
            rhs = iter_integral_quadrature(1.0, cp * math.sqrt(c), n) / c
            assert_allclose(lhs, rhs, atol=1e-10)

    @pytest.mark.parametrize("c,cp", [(4.0, 0.4), (0.25, 1.9)])
    def test_partial_substitution_step(self, c, cp):
        # substituting only the inner variable leaves c^{-1/2} outside
        for n in (0, 1, 5):
            def inner(t):
                return quad(lambda u: (1.0 - u * u) ** n,
                            0.0, t * math.sqrt(c))[0]
            rhs = c**-0.5 * quad(inner, 0.0, cp, limit=100)[0]
            assert_allclose(iter_integral_quadrature(c, cp, n), rhs,
                            atol=1e-10)

    def test_domain_boundary(self):
        # c' may sit exactly at c^{-1/2} (the closed form's case) ...
        assert iter_integral_quadrature(4.0, 0.5, 3) > 0.0
        # ... but not beyond, where the integrand leaves [0, 1]
        with pytest.raises(DomainError):
            iter_integral_quadrature(4.0, 0.51, 3)
        with pytest.raises(DomainError):
            iter_integral_quadrature(1.0, 1.2, 0)
        with pytest.raises(DomainError):
            iter_integral_quadrature(-1.0, 0.5, 0)
        with pytest.raises(DomainError):
            iter_integral_quadrature(1.0, 0.0, 0)
        with pytest.raises(DomainError):
            iter_integral_quadrature(1.0, 0.5, -1)


class TestClosedForm:
    def test_anchors(self):
        assert_allclose(iter_integral_closed_form(0), 0.5, rtol=1e-12)
        assert_allclose(iter_integral_closed_form(1), 5.0 / 12.0,
                        rtol=1e-12)

    def test_matches_quadrature(self):
        for n in range(31):
            assert_allclose(iter_integral_closed_form(n),
                            iter_integral_quadrature(1.0, 1.0, n),
                            atol=1e-10)

    def test_rejects_negative_n(self):
        with pytest.raises(DomainError):
            iter_integral_closed_form(-1)


class TestGaussTheorem:
    def test_n_zero_is_two(self):
        # sqrt(pi) Gamma(2)/Gamma(3/2) = sqrt(pi)/(sqrt(pi)/2) = 2
        assert_allclose(gauss_theorem_value(0), 2.0, rtol=1e-13)

    def test_identity_with_terminating_series(self):
        for n in range(51):
            f = hyp2f1_terminating(-0.5, -(n + 1), 0.5, 1.0)
            assert_allclose(gauss_theorem_value(n), f, rtol=1e-11)

    def test_stirling_growth(self):
        n = 10**4
        assert_allclose(gauss_theorem_value(n) / math.sqrt(n),
                        math.sqrt(math.pi), rtol=1e-2)


class TestDecayFit:
    def test_exact_power_law(self):
        ns = np.arange(10, 60, 3)
        fit = fit_decay_exponent([(n, 3.7 * n**-0.5) for n in ns])
        assert_allclose(fit.fitted_slope, -0.5, atol=1e-12)
        assert_allclose(fit.fitted_log_constant, math.log(3.7), atol=1e-12)
        assert fit.residual < 1e-12
        assert fit.fit_window == (10, 58)

    def test_constant_series(self):
        fit = fit_decay_exponent([(n, 2.0) for n in range(5, 20)])
        assert_allclose(fit.fitted_slope, 0.0, atol=1e-12)

    def test_iterated_integral_rate(self):
        ns = sorted(set(np.geomspace(50, 400, 25).astype(int)))
        fit = fit_decay_exponent(iter_integral_series(1.0, 1.0, ns))
        assert abs(fit.fitted_slope + 0.5) < 0.05

    def test_degenerate_inputs(self):
        with pytest.raises(DomainError):
            fit_decay_exponent([(5, 1.0), (5, 2.0)])
        with pytest.raises(DomainError):
            fit_decay_exponent([(5, 1.0), (6, -1.0)])


class TestCsv:
    def test_header_and_round_trip(self):
        series = [(1, 0.5), (2, 0.25)]
        text = series_to_csv(series)
        lines = text.strip().split("\n")
        assert lines[0] == "n,value"
        parsed = [tuple(line.split(",")) for line in lines[1:]]
        assert [(int(a), float(b)) for a, b in parsed] == series

    def test_values_survive_exactly(self):
        v = 0.1234567890123456789
        text = series_to_csv([(3, v)])
        assert float(text.strip().split("\n")[1].split(",")[1]) == v
