"""First-order operator tests: the cubic correction operator, its symbol,
and the closed-form matrix elements against direct quadrature."""

import math

import numpy as np
import pytest

from specvol.core import Interval, MarketParams, SpectrumCase, derived_c
from specvol.errors import Degeneracy, InvalidParams, UnsupportedCase
from specvol.perturbation import (A1Operator, MatrixElements, chi_const,
                                  eigen_correction, eta_poly, gamma_poly,
                                  matrix_elements, matrix_elements_numeric,
                                  xi_poly)
from specvol.quadrature import QuadratureConfig
from specvol.spectral import eigenpair

PM = MarketParams(mu=0.05, sigma_sq=0.1156)
DB = Interval(l=math.log(1.5), r=math.log(2.5))
C = derived_c(PM)
TIGHT = QuadratureConfig(abs_tol=1e-12, rel_tol=1e-11)
# High modes oscillate; 1e-12 is not reachable there in a bounded number of
# panels, so the quadrature cross-checks run at 1e-10.
NUMERIC = QuadratureConfig(abs_tol=1e-10, rel_tol=1e-9,
                           max_subdivisions=4000)


# ---------------------------------------------------------------------------
# The operator itself


def test_symbol_matches_polynomial():
    op = A1Operator(v2=0.7, v3=0.4)
    for m in (0.3, -1.2, 2.0 + 1.5j):
        expected = 0.4 * (m ** 3 - m ** 2) + 0.7 * (m ** 2 - m)
        assert op.symbol(m) == pytest.approx(expected, rel=1e-14)


def test_apply_agrees_with_symbol_on_exponentials():
    # Full-line modes are exact exponentials, so A1 psi = symbol(z) psi.
    op = A1Operator(v2=0.7, v3=0.4)
    pair = eigenpair(SpectrumCase.CONTINUOUS_FULL_LINE, Interval(), PM, 2.0)
    x = np.linspace(-1.0, 1.0, 7)
    z = 1j * 2.0 - C
    np.testing.assert_allclose(op.apply(pair.psi0_deriv, x),
                               op.symbol(z) * pair.psi0(x), rtol=1e-13)


def test_apply_annihilates_constants_and_exp_x():
    # m = 0 and m = 1 are roots of both m^2 - m and m^3 - m^2; the operator
    # kills cash and forward positions regardless of v2, v3.
    op = A1Operator(v2=1.3, v3=-0.8)
    assert op.symbol(0.0) == 0.0
    assert op.symbol(1.0) == 0.0


# ---------------------------------------------------------------------------
# Symbol polynomials


@pytest.mark.parametrize("alpha", [0.5, 2.0, 11.0])
def test_polynomials_reduce_the_symbol(alpha):
    # For a sine-family mode the off-diagonal reduction leaves eta (cubic
    # slot) and xi (quadratic slot); the diagonal shift is v2 xi + v3 gamma.
    # Check internal consistency against the raw definitions.
    assert chi_const(C) == pytest.approx(2.0 * C + 1.0, rel=1e-15)
    assert eta_poly(C, alpha) == pytest.approx(
        alpha * alpha - (3.0 * C * C + 2.0 * C), rel=1e-15)
    assert xi_poly(C, alpha) == pytest.approx(
        -alpha * alpha + (C * C + C), rel=1e-15)
    assert gamma_poly(C, alpha) == pytest.approx(
        (3.0 * C + 1.0) * alpha * alpha - (C ** 3 + C ** 2), rel=1e-15)


# ---------------------------------------------------------------------------
# Matrix elements: closed forms vs quadrature


def test_variant_must_be_known():
    with pytest.raises(InvalidParams):
        matrix_elements(SpectrumCase.DISCRETE, DB, PM, 1.0, 1.0,
                        variant="zeta")


@pytest.mark.parametrize("p,q", [(1, 2), (2, 1), (3, 7), (6, 2)])
def test_discrete_off_diagonal_matches_quadrature(p, q):
    me = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4)
    numeric = matrix_elements_numeric(SpectrumCase.DISCRETE, DB, PM,
                                      0.7, 0.4, p, q, NUMERIC)
    assert me.C1(p, q) == pytest.approx(numeric, rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("q", [1, 3, 8])
def test_discrete_diagonal_matches_quadrature(q):
    me = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4)
    numeric = matrix_elements_numeric(SpectrumCase.DISCRETE, DB, PM,
                                      0.7, 0.4, q, q, NUMERIC)
    assert me.D1(q) == pytest.approx(numeric, rel=1e-8, abs=1e-8)


def test_diagonal_is_variant_independent():
    chi = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4,
                          variant="chi")
    xi = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4,
                         variant="xi")
    for q in (1, 4, 9):
        assert chi.D1(q) == pytest.approx(xi.D1(q), rel=1e-14)


def test_off_diagonal_variants_differ():
    # The two published reductions disagree off the diagonal; only the
    # default one reproduces the quadrature values.
    chi = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4,
                          variant="chi")
    xi = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4,
                         variant="xi")
    assert abs(chi.C1(1, 2) - xi.C1(1, 2)) > 1e-6
    numeric = matrix_elements_numeric(SpectrumCase.DISCRETE, DB, PM,
                                      0.7, 0.4, 1, 2, NUMERIC)
    assert abs(chi.C1(1, 2) - numeric) < 1e-8 * max(1.0, abs(numeric))
    assert abs(xi.C1(1, 2) - numeric) > 1e-6


def test_diagonal_shift_formula():
    me = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4)
    for q in (1, 5):
        alpha = eigenpair(SpectrumCase.DISCRETE, DB, PM, q).alpha
        expected = 0.7 * xi_poly(C, alpha) + 0.4 * gamma_poly(C, alpha)
        assert me.D1(q) == pytest.approx(expected, rel=1e-13)


def test_full_line_elements_are_diagonal():
    # Constant-coefficient operator: exponential modes are exact
    # eigenfunctions, so off-diagonal coupling vanishes and the diagonal
    # shift is the symbol at m = i nu - c.
    me = matrix_elements(SpectrumCase.CONTINUOUS_FULL_LINE, Interval(), PM,
                         0.7, 0.4)
    op = A1Operator(v2=0.7, v3=0.4)
    assert me.C1(1.0, 2.5) == 0.0
    for nu in (0.5, 2.0):
        assert me.D1(nu) == pytest.approx(op.symbol(1j * nu - C), rel=1e-13)


def test_half_line_elements_exist_and_couple():
    me = matrix_elements(SpectrumCase.CONTINUOUS_HALF_LINE_UPPER,
                         Interval(r=4.0), PM, 0.7, 0.4)
    assert me.C1(1.0, 2.0) != 0.0
    assert me.D1(2.0) == pytest.approx(
        0.7 * xi_poly(C, 2.0) + 0.4 * gamma_poly(C, 2.0), rel=1e-13)


def test_numeric_elements_reject_continuous_cases():
    with pytest.raises(UnsupportedCase):
        matrix_elements_numeric(SpectrumCase.CONTINUOUS_FULL_LINE, Interval(),
                                PM, 1.0, 1.0, 1.0, 2.0, NUMERIC)


# ---------------------------------------------------------------------------
# Eigen corrections


def test_correction_links_element_and_gap():
    me = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4)
    corr = eigen_correction(me, 2, 5)
    lam_q = eigenpair(SpectrumCase.DISCRETE, DB, PM, 2).lambda0
    lam_p = eigenpair(SpectrumCase.DISCRETE, DB, PM, 5).lambda0
    assert corr.a1 == pytest.approx(me.C1(5, 2) / (lam_q - lam_p), rel=1e-13)
    assert corr.lambda1 == pytest.approx(me.D1(2), rel=1e-13)


def test_correction_vanishes_on_the_diagonal():
    me = matrix_elements(SpectrumCase.DISCRETE, DB, PM, 0.7, 0.4)
    assert eigen_correction(me, 3, 3).a1 == 0.0


def test_correction_flags_degenerate_pairs():
    me = matrix_elements(SpectrumCase.CONTINUOUS_FULL_LINE, Interval(), PM,
                         0.7, 0.4)
    # nu and -nu share lambda0 on the full line.
    with pytest.raises(Degeneracy):
        eigen_correction(me, 2.0, -2.0)
