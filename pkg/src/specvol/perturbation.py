"""First-order correction operator and its matrix elements in each eigenbasis.

The correction operator is

    A1 = v3 (d3/dx3 - d2/dx2) + v2 (d2/dx2 - d/dx),

acting with the scaled coefficients (v2_eps, v3_eps) in production pricing.
Its weighted matrix elements C1(p, q) = (psi_p, A1 psi_q)_s close in elementary
functions for every basis family. Diagonal elements give the eigenvalue shift
lambda1; off-diagonal ones, divided by eigenvalue gaps, give the basis
correction coefficients a1.

Two published variants of the off-diagonal constant exist, differing in
whether the v2 part multiplies chi = 2c + 1 or the nu-dependent xi(nu); the
"chi" variant is the one consistent with direct integration of the operator
against the sine bases and is the default. The "xi" variant is retained
behind a flag for comparison.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .core import Interval, MarketParams, SpectrumCase, classify_spectrum, derived_c
from .errors import Degeneracy, InvalidIndex, InvalidParams, UnsupportedCase
from .quadrature import DEFAULT_CONFIG, QuadratureConfig
from .spectral import WeightDensity, eigenpair, inner_product


@dataclass(frozen=True)
class A1Operator:
    """The third-order correction operator with coefficients (v2, v3)."""

    v2: float
    v3: float

    @classmethod
    def from_params(cls, params: MarketParams) -> "A1Operator":
        return cls(v2=params.v2_eps, v3=params.v3_eps)

    def apply(self, deriv: Callable, x):
        """Apply to a function given by its derivative evaluator
        deriv(x, order)."""
        d1 = deriv(x, 1)
        d2 = deriv(x, 2)
        d3 = deriv(x, 3)
        return self.v3 * (d3 - d2) + self.v2 * (d2 - d1)

    def symbol(self, m):
        """Action on exp(m x): the cubic multiplier
        v3 (m^3 - m^2) + v2 (m^2 - m). Accepts complex/array m."""
        m = np.asarray(m)
        m2 = m * m
        return self.v3 * (m2 * m - m2) + self.v2 * (m2 - m)


# Wavenumber polynomials entering every closed-form matrix element. chi is the
# constant weighting the v2 part of off-diagonal elements (chi variant).
def chi_const(c: float) -> float:
    return 2.0 * c + 1.0


def eta_poly(c: float, alpha):
    return np.asarray(alpha) ** 2 - (3.0 * c * c + 2.0 * c)


def xi_poly(c: float, alpha):
    return -np.asarray(alpha) ** 2 + (c * c + c)


def gamma_poly(c: float, alpha):
    a2 = np.asarray(alpha) ** 2
    return (3.0 * c + 1.0) * a2 - (c ** 3 + c * c)


@dataclass(frozen=True)
class MatrixElements:
    """Closed-form weighted matrix elements of A1 for one spectrum case.

    ``C1(p, q)`` is (psi_p, A1 psi_q)_s with indices in the case's labeling
    (mode numbers or wavenumbers); for the continuous sine family it is the
    coefficient of the principal-value part (the diagonal delta part is
    reported separately by D1). ``D1(q)`` is the eigenvalue shift lambda1.
    """

    case: SpectrumCase
    interval: Interval
    params: MarketParams
    v2: float
    v3: float
    variant: str
    c: float

    def _offdiag_const(self, alpha_q):
        if self.variant == "chi":
            return self.v2 * chi_const(self.c) + self.v3 * eta_poly(self.c, alpha_q)
        return self.v2 * xi_poly(self.c, alpha_q) + self.v3 * eta_poly(self.c, alpha_q)

    def C1(self, p, q):
        """Off-diagonal closed form; vectorized over numpy index arrays."""
        case = self.case
        if case is SpectrumCase.DISCRETE:
            p = np.asarray(p)
            q = np.asarray(q)
            width = self.interval.width
            am = p * math.pi / width
            an = q * math.pi / width
            parity = np.where((p + q) % 2 == 0, 0.0, -2.0)  # (-1)^(p+q) - 1
            with np.errstate(divide="ignore", invalid="ignore"):
                geom = np.where(p == q, 0.0,
                                2.0 * am * an / (width * (am * am - an * an)))
            return parity * geom * self._offdiag_const(an)
        if case is SpectrumCase.CONTINUOUS_HALF_LINE_UPPER:
            om = np.asarray(p, dtype=float)
            nu = np.asarray(q, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                geom = np.where(om == nu, 0.0,
                                2.0 * om * nu / (math.pi * (om * om - nu * nu)))
            return geom * self._offdiag_const(nu)
        if case is SpectrumCase.CONTINUOUS_FULL_LINE:
            # Fourier modes diagonalize constant-coefficient operators.
            return np.zeros(np.broadcast(np.asarray(p), np.asarray(q)).shape)
        raise UnsupportedCase(
            f"no closed-form matrix elements for case {case.value}")

    def D1(self, q):
        """Diagonal element: the first-order eigenvalue shift lambda1(q)."""
        case = self.case
        if case is SpectrumCase.DISCRETE:
            alpha = np.asarray(q) * math.pi / self.interval.width
            return self.v2 * xi_poly(self.c, alpha) + self.v3 * gamma_poly(self.c, alpha)
        if case is SpectrumCase.CONTINUOUS_HALF_LINE_UPPER:
            alpha = np.asarray(q, dtype=float)
            return self.v2 * xi_poly(self.c, alpha) + self.v3 * gamma_poly(self.c, alpha)
        if case is SpectrumCase.CONTINUOUS_FULL_LINE:
            # Action on exp((i nu - c) x) is multiplication by the symbol.
            m = 1j * np.asarray(q) - self.c
            op = A1Operator(v2=self.v2, v3=self.v3)
            return op.symbol(m)
        raise UnsupportedCase(
            f"no closed-form matrix elements for case {case.value}")

    def a1(self, q, p):
        """Basis-correction coefficient a1_{q,p} = C1(p, q) / (lam0_q - lam0_p)
        for q != p (zero on the diagonal); vectorized. Eigenvalue gaps reduce
        to alpha_p^2 - alpha_q^2 times sigma_sq/2, hence the squared
        denominator relative to C1."""
        case = self.case
        sq = self.params.sigma_sq
        if case is SpectrumCase.DISCRETE:
            q = np.asarray(q)
            p = np.asarray(p)
            width = self.interval.width
            an = q * math.pi / width  # corrected mode
            am = p * math.pi / width  # admixed mode
            parity = np.where((p + q) % 2 == 0, 0.0, -2.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                geom = np.where(
                    p == q, 0.0,
                    2.0 * am * an / (width * (am * am - an * an) ** 2))
            return (2.0 / sq) * parity * geom * self._offdiag_const(an)
        if case is SpectrumCase.CONTINUOUS_HALF_LINE_UPPER:
            nu = np.asarray(q, dtype=float)
            om = np.asarray(p, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                geom = np.where(
                    om == nu, 0.0,
                    2.0 * om * nu / (math.pi * (om * om - nu * nu) ** 2))
            return (2.0 / sq) * geom * self._offdiag_const(nu)
        if case is SpectrumCase.CONTINUOUS_FULL_LINE:
            return np.zeros(np.broadcast(np.asarray(q), np.asarray(p)).shape)
        raise UnsupportedCase(
            f"no closed-form matrix elements for case {case.value}")


def matrix_elements(case: SpectrumCase, interval: Interval,
                    params: MarketParams, v2: float, v3: float,
                    variant: str = "chi") -> MatrixElements:
    """Closed-form matrix element evaluators for the given case. ``v2``/``v3``
    are the operator coefficients actually used (pass the scaled values for
    production prices, or unit values to probe the kernels)."""
    if classify_spectrum(interval) is not case:
        raise InvalidParams(
            f"interval {interval} does not match spectrum case {case.value}")
    if variant not in ("chi", "xi"):
        raise InvalidParams(f"variant must be 'chi' or 'xi', got {variant!r}")
    if case is SpectrumCase.CONTINUOUS_HALF_LINE_LOWER:
        raise UnsupportedCase(
            "closed-form matrix elements are not provided for (l, inf)")
    return MatrixElements(case=case, interval=interval, params=params,
                          v2=float(v2), v3=float(v3), variant=variant,
                          c=derived_c(params))


def matrix_elements_numeric(case: SpectrumCase, interval: Interval,
                            params: MarketParams, v2: float, v3: float,
                            p, q, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Independent numeric evaluation of (psi_p, A1 psi_q)_s by quadrature
    against the closed-form eigenfunction derivatives. Only the discrete case
    has an absolutely convergent integral; continuous families are
    distribution-valued and rejected."""
    if case is not SpectrumCase.DISCRETE:
        raise UnsupportedCase(
            "numeric matrix elements are only defined for the discrete case")
    pair_p = eigenpair(case, interval, params, p)
    pair_q = eigenpair(case, interval, params, q)
    op = A1Operator(v2=v2, v3=v3)
    weight = WeightDensity.from_params(params)

    def a1_psi_q(x):
        return op.apply(pair_q.psi0_deriv, x)

    return inner_product(pair_p.psi0, a1_psi_q, interval, weight, cfg)


@dataclass(frozen=True)
class EigenCorrection:
    """First-order corrections attached to mode q: the eigenvalue shift and
    the admixture coefficient of mode p."""

    lambda1: complex
    a1: complex


def eigen_correction(me: MatrixElements, q, p) -> EigenCorrection:
    """Corrections for mode q from mode p: a1 = C1(p, q) / (lam0_q - lam0_p)
    (zero when p == q) and lambda1 = D1(q)."""
    lam1 = me.D1(q)
    if _indices_equal(q, p):
        return EigenCorrection(lambda1=_maybe_scalar(lam1), a1=0.0)
    pair_q = eigenpair(me.case, me.interval, me.params, q)
    pair_p = eigenpair(me.case, me.interval, me.params, p)
    gap = pair_q.lambda0 - pair_p.lambda0
    if abs(gap) < 1e-14 * (abs(pair_q.lambda0) + abs(pair_p.lambda0) + 1.0):
        raise Degeneracy(
            f"eigenvalue gap between modes {q!r} and {p!r} is degenerate")
    a1 = me.C1(p, q) / gap
    return EigenCorrection(lambda1=_maybe_scalar(lam1), a1=_maybe_scalar(a1))


def _indices_equal(q, p) -> bool:
    if isinstance(q, numbers.Integral) and isinstance(p, numbers.Integral):
        return int(q) == int(p)
    return complex(q) == complex(p)


def _maybe_scalar(value):
    arr = np.asarray(value)
    if arr.ndim == 0:
        item = arr.item()
        if isinstance(item, complex) and item.imag == 0.0:
            return item.real
        return item
    return value
