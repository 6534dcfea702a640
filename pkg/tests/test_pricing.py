"""Pricing-engine tests.

Every numerical claim is checked against an oracle that does not share code
with the engine: the lognormal closed form, absorbed transition densities
built by the method of images, direct weighted projections, and Gaussian
convolution for full-line payoffs.
"""

import math

import numpy as np
import pytest
from scipy.stats import norm

from specvol.core import (Interval, MarketParams, OptionKind, OptionSpec,
                          SmoothstepPayoff, SpectrumCase, derived_c)
from specvol.errors import ConvergenceViolation, InvalidParams, UnsupportedCase
from specvol.pricing import (PriceBreakdown, SeriesConfig, bs_reference,
                             bs_vega, coeff_a0, coeff_a1, price, price_first,
                             price_knock_in, price_rebate, price_zeroth,
                             time_factors)
from specvol.quadrature import QuadratureConfig
from specvol.spectral import WeightDensity, eigenpair, inner_product

LN2 = math.log(2.0)
L = math.log(1.5)
R = math.log(2.5)
T = 0.5
PM = MarketParams(mu=0.05, sigma_sq=0.1156, v2_eps=0.01, v3_eps=0.003)
SIG = math.sqrt(PM.sigma_sq)
DRIFT = PM.mu - 0.5 * PM.sigma_sq  # log-spot drift under the pricing measure


def euro(t=T):
    return OptionSpec(kind=OptionKind.EUROPEAN_CALL, k=LN2,
                      interval=Interval(), t=t)


def up_and_out(t=T):
    return OptionSpec(kind=OptionKind.UP_AND_OUT_CALL, k=LN2,
                      interval=Interval(r=R), t=t)


def double_barrier(l=L, t=T):
    return OptionSpec(kind=OptionKind.DOUBLE_BARRIER_KNOCK_OUT_CALL, k=LN2,
                      interval=Interval(l=l, r=R), t=t)


# ---------------------------------------------------------------------------
# Reference formulas


def test_bs_reference_matches_lognormal_formula():
    for x, t in ((LN2, 0.5), (0.2, 0.25), (1.1, 2.0)):
        st = SIG * math.sqrt(t)
        d1 = (x - LN2 + PM.mu * t) / st + 0.5 * st
        d2 = d1 - st
        expected = math.exp(x + PM.mu * t) * norm.cdf(d1) \
            - 2.0 * norm.cdf(d2)
        assert bs_reference(t, x, LN2, PM.mu, SIG) == pytest.approx(
            expected, rel=1e-14)


def test_bs_vega_matches_finite_difference():
    h = 1e-6
    for x in (0.4, LN2, 1.0):
        fd = (bs_reference(T, x, LN2, PM.mu, SIG + h)
              - bs_reference(T, x, LN2, PM.mu, SIG - h)) / (2.0 * h)
        assert bs_vega(T, x, LN2, PM.mu, SIG) == pytest.approx(fd, abs=1e-8)


def test_time_factors_values_and_degenerate_limit():
    g0, g1 = time_factors(-1.0, 0.5, 0.5)
    assert g0 == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert g1 == pytest.approx(0.5 * 0.5 * math.exp(-0.5), rel=1e-14)
    g0v, g1v = time_factors(np.array([-1.0, -2.0]), np.array([0.0, 0.0]), 0.5)
    np.testing.assert_allclose(g0v, np.exp([-0.5, -1.0]), rtol=1e-14)
    np.testing.assert_allclose(g1v, 0.0, atol=0.0)


# ---------------------------------------------------------------------------
# European: zeroth order is Black-Scholes, first order is t * A1 u0


@pytest.mark.parametrize("x", [0.0, 0.3, LN2, 1.2])
def test_european_zeroth_is_black_scholes(x):
    got = price_zeroth(euro(), PM, x)
    assert got == pytest.approx(bs_reference(T, x, LN2, PM.mu, SIG),
                                abs=1e-9)


def _bs_call_derivatives(x, t):
    """(u', u'', u''') of the undiscounted call value in log-spot."""
    st = SIG * math.sqrt(t)
    d1 = (x - LN2 + PM.mu * t) / st + 0.5 * st
    fwd = math.exp(x + PM.mu * t)
    u1 = fwd * norm.cdf(d1)
    u2 = u1 + fwd * norm.pdf(d1) / st
    u3 = u2 + fwd * norm.pdf(d1) / st * (1.0 - d1 / st)
    return u1, u2, u3


@pytest.mark.parametrize("x", [0.3, LN2, 1.1])
def test_european_first_order_is_t_times_operator_image(x):
    # On the full line the zeroth- and first-order generators commute, so
    # the correction collapses to t * (v2 (d2-d1) + v3 (d3-d2)) u0.
    ux, uxx, uxxx = _bs_call_derivatives(x, T)
    expected = T * (PM.v2_eps * (uxx - ux) + PM.v3_eps * (uxxx - uxx))
    assert price_first(euro(), PM, x) == pytest.approx(expected, abs=1e-12)


def test_european_first_order_flips_with_the_sign_of_v():
    flipped = MarketParams(mu=PM.mu, sigma_sq=PM.sigma_sq,
                           v2_eps=-PM.v2_eps, v3_eps=-PM.v3_eps)
    assert price_first(euro(), flipped, 0.4) == pytest.approx(
        -price_first(euro(), PM, 0.4), rel=1e-12)


# ---------------------------------------------------------------------------
# Coefficients against direct projections


def test_european_coeff_closed_form_point():
    # With c = 0 and k = 0 the payoff transform at nu = 2i reduces to
    # 1 / (6 sqrt(sigma_sq pi)).
    pm0 = MarketParams(mu=0.02, sigma_sq=0.04)
    spec = OptionSpec(kind=OptionKind.EUROPEAN_CALL, k=0.0,
                      interval=Interval(), t=1.0)
    got = coeff_a0(spec, pm0, 2.0j)
    assert got == pytest.approx(1.0 / (6.0 * math.sqrt(0.04 * math.pi)),
                                rel=1e-12)


@pytest.mark.parametrize("nu", [0.7, 3.0, 12.0])
def test_up_and_out_coeff_matches_weighted_projection(nu):
    c = derived_c(PM)
    w = WeightDensity.from_params(PM)
    y = np.linspace(LN2, R, 200001)
    psi = math.sqrt(PM.sigma_sq / math.pi) * np.exp(-c * y) \
        * np.sin(nu * (y - R))
    want = np.trapezoid(psi * (np.exp(y) - 2.0) * w(y), y)
    assert coeff_a0(up_and_out(), PM, nu) == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("n", [1, 2, 6])
def test_double_barrier_coeff_matches_inner_product(n):
    iv = Interval(l=L, r=R)
    pair = eigenpair(SpectrumCase.DISCRETE, iv, PM, n)
    w = WeightDensity.from_params(PM)
    want = inner_product(pair.psi0,
                         lambda y: np.maximum(np.exp(y) - 2.0, 0.0),
                         iv, w, QuadratureConfig(abs_tol=1e-12, rel_tol=1e-11))
    assert coeff_a0(double_barrier(), PM, n) == pytest.approx(want, abs=1e-10)


def test_european_first_order_coeff_vanishes():
    # Exponential modes are exact eigenfunctions of the correction operator,
    # so the full-line expansion has no off-diagonal admixture.
    assert coeff_a1(euro(), PM, 1.5) == 0.0


# ---------------------------------------------------------------------------
# Knock-outs against absorbed transition densities (method of images)


def _gauss(z, s):
    return np.exp(-0.5 * (z / s) ** 2) / (s * math.sqrt(2.0 * math.pi))


def _half_line_absorbed_value(x, payoff, lo_cut):
    """E[payoff(X_T); X stays below R], single reflection at the barrier."""
    s = SIG * math.sqrt(T)
    y = np.linspace(lo_cut, R, 200001)
    dens = _gauss(y - x - DRIFT * T, s) \
        - math.exp(2.0 * DRIFT * (R - x) / PM.sigma_sq) \
        * _gauss(y - (2.0 * R - x) - DRIFT * T, s)
    return float(np.trapezoid(payoff(y) * dens, y))


def _interval_absorbed_value(x, payoff):
    """Image-series density on (L, R) with a Girsanov drift tilt."""
    s = SIG * math.sqrt(T)
    width = R - L
    y = np.linspace(L, R, 100001)
    p0 = np.zeros_like(y)
    for n in range(-8, 9):
        p0 += _gauss(y - x + 2.0 * n * width, s) \
            - _gauss(y + x - 2.0 * L + 2.0 * n * width, s)
    tilt = np.exp(DRIFT * (y - x) / PM.sigma_sq
                  - DRIFT ** 2 * T / (2.0 * PM.sigma_sq))
    return float(np.trapezoid(payoff(y) * p0 * tilt, y))


@pytest.mark.parametrize("x", [0.3, 0.6, 0.85])
def test_up_and_out_zeroth_matches_reflection_density(x):
    want = _half_line_absorbed_value(x, lambda y: np.exp(y) - 2.0, LN2)
    assert price_zeroth(up_and_out(), PM, x) == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("x", [0.5, 0.7])
def test_double_barrier_zeroth_matches_image_series(x):
    want = _interval_absorbed_value(
        x, lambda y: np.maximum(np.exp(y) - 2.0, 0.0))
    assert price_zeroth(double_barrier(), PM, x) == pytest.approx(want,
                                                                  abs=1e-8)


def test_generic_interval_payoff_matches_image_series():
    pay = SmoothstepPayoff(lower=0.55, upper=0.8, cap=1.0)
    spec = OptionSpec(kind=OptionKind.GENERIC_KNOCK_OUT, k=None,
                      interval=Interval(l=L, r=R), t=T, payoff_fn=pay)
    want = _interval_absorbed_value(0.6, pay)
    assert price_zeroth(spec, PM, 0.6) == pytest.approx(want, abs=1e-8)


def test_knock_outs_vanish_at_and_beyond_barriers():
    np.testing.assert_allclose(
        price_zeroth(double_barrier(), PM, np.array([L, R, L - 0.2, R + 0.2])),
        0.0, atol=1e-12)
    np.testing.assert_allclose(
        price_zeroth(up_and_out(), PM, np.array([R, R + 0.5])),
        0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# Full-line generic payoffs against Gaussian convolution


def _full_line_kernel_moments(x, payoff):
    s = SIG * math.sqrt(T)
    y = np.linspace(x - 10.0 * s, x + 10.0 * s, 200001)
    z = (y - x - DRIFT * T) / s
    base = _gauss(y - x - DRIFT * T, s)
    h = payoff(y)
    u0 = np.trapezoid(h * base, y)
    d1 = np.trapezoid(h * base * z / s, y)
    d2 = np.trapezoid(h * base * (z * z - 1.0) / s ** 2, y)
    d3 = np.trapezoid(h * base * (z ** 3 - 3.0 * z) / s ** 3, y)
    return u0, d1, d2, d3


def test_generic_full_line_matches_convolution_both_orders():
    pay = SmoothstepPayoff(lower=0.64, upper=0.74, cap=1.0)
    spec = OptionSpec(kind=OptionKind.GENERIC_KNOCK_OUT, k=None,
                      interval=Interval(), t=T, payoff_fn=pay)
    x = math.log(1.8)
    u0, d1, d2, d3 = _full_line_kernel_moments(x, pay)
    assert price_zeroth(spec, PM, x) == pytest.approx(u0, abs=1e-9)
    want_u1 = T * (PM.v2_eps * (d2 - d1) + PM.v3_eps * (d3 - d2))
    assert price_first(spec, PM, x) == pytest.approx(want_u1, abs=1e-9)


def test_generic_lower_half_line_is_rejected():
    pay = SmoothstepPayoff(lower=0.5, upper=1.0)
    spec = OptionSpec(kind=OptionKind.GENERIC_KNOCK_OUT, k=None,
                      interval=Interval(l=0.0), t=T, payoff_fn=pay)
    with pytest.raises(UnsupportedCase):
        price_zeroth(spec, PM, 1.2)


# ---------------------------------------------------------------------------
# First order across representations


def test_up_and_out_first_order_v2_channel_matches_deep_barrier_series():
    # A double-barrier interval with a very remote lower barrier represents
    # the same half-line problem; the v2 channel converges fast in the mode
    # cutoff, so the two engines must agree tightly.
    pm = MarketParams(mu=0.05, sigma_sq=0.1156, v2_eps=1.0, v3_eps=0.0)
    series = SeriesConfig(n_max=8192, tail_tol=1e-13)
    for x in (0.3, 0.6):
        u1_uo = price_first(up_and_out(), pm, x)
        u1_db = price_first(double_barrier(l=-25.0), pm, x, series=series)
        assert u1_uo == pytest.approx(u1_db, abs=5e-8)


def test_up_and_out_first_order_v3_channel_matches_extrapolated_series():
    # The third-derivative channel makes the discrete admixture sum converge
    # like 1/alpha_max (each doubling of n_max halves the gap), so compare
    # against the Richardson limit of two cutoffs and check the reported
    # truncation errors bracket the raw gap.
    pm = MarketParams(mu=0.05, sigma_sq=0.1156, v2_eps=0.0, v3_eps=1.0)
    x = 0.6
    bd_uo = price(up_and_out(), pm, x)
    bd_half = price(double_barrier(l=-6.0), pm, x,
                    series=SeriesConfig(n_max=16384, tail_tol=1e-13))
    bd_full = price(double_barrier(l=-6.0), pm, x,
                    series=SeriesConfig(n_max=32768, tail_tol=1e-13))
    extrapolated = 2.0 * bd_full.u1 - bd_half.u1
    assert bd_uo.u1 == pytest.approx(extrapolated, abs=1e-4)
    assert abs(bd_uo.u1 - bd_full.u1) <= bd_uo.trunc_error \
        + bd_full.trunc_error


def test_first_order_is_linear_in_group_parameters():
    base = price_first(double_barrier(), PM, 0.6)
    doubled = MarketParams(mu=PM.mu, sigma_sq=PM.sigma_sq,
                           v2_eps=2.0 * PM.v2_eps, v3_eps=2.0 * PM.v3_eps)
    assert price_first(double_barrier(), doubled, 0.6) == pytest.approx(
        2.0 * base, rel=1e-12)


# ---------------------------------------------------------------------------
# Knock-in parity and rebates


def test_knock_in_plus_knock_out_is_european_per_order():
    ki = OptionSpec(kind=OptionKind.KNOCK_IN, k=LN2, interval=Interval(r=R),
                    t=T)
    for x in (0.3, 0.7):
        bd_ki = price_knock_in(ki, PM, x)
        bd_ko = price(up_and_out(), PM, x)
        bd_eu = price(euro(), PM, x)
        assert bd_ki.u0 + bd_ko.u0 == pytest.approx(bd_eu.u0, abs=1e-10)
        assert bd_ki.u1 + bd_ko.u1 == pytest.approx(bd_eu.u1, abs=1e-10)


def test_knock_in_equals_european_beyond_the_barrier():
    # Above the barrier the contract has already knocked in.
    ki = OptionSpec(kind=OptionKind.KNOCK_IN, k=LN2, interval=Interval(r=R),
                    t=T)
    x = R + 0.3
    assert price_knock_in(ki, PM, x).price == pytest.approx(
        price(euro(), PM, x).price, abs=1e-10)


def rebate_spec(rl=0.5, rr=1.0):
    return OptionSpec(kind=OptionKind.REBATE, k=LN2,
                      interval=Interval(l=L, r=R), t=T,
                      rebate_l=rl, rebate_r=rr)


def test_rebate_profile_hits_the_rebates_at_the_barriers():
    out = price_rebate(rebate_spec(), PM, np.array([L, R]))
    np.testing.assert_allclose(out.phi0, [0.5, 1.0], rtol=0, atol=1e-13)


def test_rebate_decomposition_reassembles():
    x = np.array([0.55, 0.8])
    out = price_rebate(rebate_spec(), PM, x)
    grow = math.exp(PM.mu * T)
    np.testing.assert_allclose(out.u0, grow * out.phi0 + out.v0, rtol=1e-12)
    np.testing.assert_allclose(out.u1, grow * out.phi1 + out.v1, rtol=1e-12)
    np.testing.assert_allclose(out.price, out.u0 + out.u1, rtol=1e-12)


def test_rebate_settles_beyond_the_barriers():
    out = price_rebate(rebate_spec(), PM, np.array([L - 0.4, R + 0.4]))
    grow = math.exp(PM.mu * T)
    np.testing.assert_allclose(out.price, [0.5 * grow, 1.0 * grow],
                               rtol=1e-13)


def test_zero_rebate_package_is_plain_knock_out():
    x = np.array([0.45, 0.6, 0.85])
    out = price_rebate(rebate_spec(rl=0.0, rr=0.0), PM, x)
    bd = price(double_barrier(), PM, x)
    np.testing.assert_allclose(out.u0, bd.u0, atol=1e-10)
    np.testing.assert_allclose(out.u1, bd.u1, atol=1e-10)


# ---------------------------------------------------------------------------
# Wiring: totals, discounting, eps reporting, warnings, guards


def test_price_breakdown_is_consistent():
    bd = price(double_barrier(), PM, 0.6)
    assert isinstance(bd, PriceBreakdown)
    assert bd.price == pytest.approx(bd.u0 + bd.u1, rel=1e-14)
    assert bd.u0 == pytest.approx(price_zeroth(double_barrier(), PM, 0.6),
                                  rel=1e-14)
    assert bd.u1 == pytest.approx(price_first(double_barrier(), PM, 0.6),
                                  rel=1e-14)


def test_discounting_scales_every_reported_value():
    plain = price(euro(), PM, 0.4)
    disc = price(euro(), PM, 0.4, discounted=True)
    f = math.exp(-PM.mu * T)
    assert disc.u0 == pytest.approx(f * plain.u0, rel=1e-14)
    assert disc.u1 == pytest.approx(f * plain.u1, rel=1e-14)
    assert disc.price == pytest.approx(f * plain.price, rel=1e-14)


def test_eps_argument_rescales_only_the_reported_split():
    plain = price(euro(), PM, 0.4)
    split = price(euro(), PM, 0.4, eps=0.25)
    assert split.u1 == pytest.approx(plain.u1 / 0.5, rel=1e-14)
    assert split.price == pytest.approx(plain.price, rel=1e-14)
    with pytest.raises(InvalidParams):
        price(euro(), PM, 0.4, eps=0.0)


def test_array_input_round_trip():
    x = np.array([0.3, 0.6, 0.8])
    bd = price(double_barrier(), PM, x)
    singles = [price(double_barrier(), PM, xi).price for xi in x]
    np.testing.assert_allclose(bd.price, singles, rtol=1e-13)


def test_barrier_proximity_warning():
    bd = price(up_and_out(), PM, R - 0.01)
    assert any("barrier-proximity" in w for w in bd.warnings)
    clean = price(up_and_out(), PM, 0.5)
    assert not any("barrier-proximity" in w for w in clean.warnings)


def test_short_maturity_warning():
    bd = price(euro(t=5e-4), PM, LN2)
    assert any("short-maturity" in w for w in bd.warnings)


def test_contour_offset_must_clear_the_payoff_poles():
    quad = QuadratureConfig(contour_offset=derived_c(PM) + 0.5)
    with pytest.raises(ConvergenceViolation):
        price_zeroth(euro(), PM, 0.4, quad=quad)


def test_truncation_error_is_reported_and_small():
    bd = price(up_and_out(), PM, 0.6)
    assert 0.0 < bd.trunc_error < 1e-4
