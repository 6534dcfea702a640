"""Weighted eigenstructure of the averaged log-price generator on an interval.

The generator L = (sigma_sq/2) d2/dx2 + sigma_sq c d/dx is self-adjoint in
L^2(I, s(x) dx) with weight s(x) = (2/sigma_sq) exp(2 c x). Every
eigenfunction is exp(-c x) times a Dirichlet mode of the half-Laplacian, and
every eigenvalue is lambda0 = -(sigma_sq/2) (c^2 + alpha^2) with alpha the
mode's wavenumber.

Normalizations (N below) make each family orthonormal, resp. delta-normalized,
under the weighted inner product whose FIRST argument is conjugated:

  Discrete (l, r):            N exp(-c x) sin(alpha_n (x - l)),
                              alpha_n = n pi / (r - l), N = sqrt(sigma_sq/(r-l))
  Full line:                  N exp(-c x) exp(i nu x),  N = sqrt(sigma_sq/(4 pi))
  Half line (-inf, r):        N exp(-c x) sin(nu (x - r)), N = sqrt(sigma_sq/pi)
  Half line (l, inf):         N exp(-c x) sin(nu (x - l)), same N.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .core import Interval, MarketParams, SpectrumCase, classify_spectrum, derived_c
from .errors import InvalidGrid, InvalidIndex, InvalidParams, UnsupportedCase
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, integrate_1d


@dataclass(frozen=True)
class WeightDensity:
    """Weight s(x) = (2/sigma_sq) exp(2 c x) making the generator symmetric."""

    sigma_sq: float
    c: float

    @classmethod
    def from_params(cls, params: MarketParams) -> "WeightDensity":
        return cls(sigma_sq=params.sigma_sq, c=derived_c(params))

    def __call__(self, x):
        return (2.0 / self.sigma_sq) * np.exp(2.0 * self.c * np.asarray(x))


@dataclass(frozen=True)
class EigenPair:
    """One eigenfunction with its eigenvalue and closed-form derivatives.

    ``index`` is the defining label (mode number n for the discrete case, the
    wavenumber nu otherwise); ``alpha`` is the wavenumber in either case.
    ``psi0_deriv(x, order)`` evaluates d^order/dx^order psi0 analytically for
    order 0..3 (complex for the full-line family)."""

    case: SpectrumCase
    index: Union[int, float, complex]
    alpha: Union[float, complex]
    lambda0: complex
    psi0: Callable
    psi0_deriv: Callable


def _sine_family(case: SpectrumCase, index, alpha, pin: float, norm: float,
                 c: float, sigma_sq: float) -> EigenPair:
    # exp(-c x) sin(alpha (x - pin)) = Im[exp((ialpha - c) x) exp(-i alpha pin)],
    # so the m-th derivative just multiplies by (ialpha - c)^m inside Im().
    z = complex(-c, alpha)
    phase = complex(math.cos(alpha * pin), -math.sin(alpha * pin))

    def deriv(x, order: int = 0):
        if order not in (0, 1, 2, 3):
            raise InvalidParams(f"derivative order {order} not supported")
        xx = np.asarray(x, dtype=float)
        return norm * np.imag((z ** order) * phase * np.exp(z * xx))

    lam0 = -(sigma_sq / 2.0) * (c * c + alpha * alpha)
    return EigenPair(case=case, index=index, alpha=alpha, lambda0=lam0,
                     psi0=lambda x: deriv(x, 0), psi0_deriv=deriv)


def eigenpair(case: SpectrumCase, interval: Interval, params: MarketParams,
              q) -> EigenPair:
    """Eigenpair labeled q for the given spectrum case.

    Discrete: q is an integer >= 1. Continuous half-line families: q is a
    positive real wavenumber. Full line: q is a real (or, for analytic
    continuation purposes, complex) wavenumber."""
    if classify_spectrum(interval) is not case:
        raise InvalidParams(
            f"interval {interval} does not match spectrum case {case.value}")
    c = derived_c(params)
    sq = params.sigma_sq

    if case is SpectrumCase.DISCRETE:
        if isinstance(q, bool) or not isinstance(q, numbers.Integral):
            raise InvalidIndex(f"discrete case needs an integer index, got {q!r}")
        n = int(q)
        if n < 1:
            raise InvalidIndex(f"discrete mode number must be >= 1, got {n}")
        alpha = n * math.pi / interval.width
        norm = math.sqrt(sq / interval.width)
        return _sine_family(case, n, alpha, interval.l, norm, c, sq)

    if case is SpectrumCase.CONTINUOUS_FULL_LINE:
        if isinstance(q, numbers.Real):
            nu = complex(float(q), 0.0)
        elif isinstance(q, numbers.Complex):
            nu = complex(q)
        else:
            raise InvalidIndex(f"full-line case needs a wavenumber, got {q!r}")
        norm = math.sqrt(sq / (4.0 * math.pi))
        z = 1j * nu - c

        def deriv(x, order: int = 0):
            if order not in (0, 1, 2, 3):
                raise InvalidParams(f"derivative order {order} not supported")
            xx = np.asarray(x, dtype=float)
            return norm * (z ** order) * np.exp(z * xx)

        lam0 = -(sq / 2.0) * (c * c + nu * nu)
        idx = float(q) if isinstance(q, numbers.Real) else nu
        return EigenPair(case=case, index=idx, alpha=idx, lambda0=lam0,
                         psi0=lambda x: deriv(x, 0), psi0_deriv=deriv)

    if case in (SpectrumCase.CONTINUOUS_HALF_LINE_UPPER,
                SpectrumCase.CONTINUOUS_HALF_LINE_LOWER):
        if not isinstance(q, numbers.Real) or isinstance(q, bool):
            raise InvalidIndex(f"half-line case needs a real wavenumber, got {q!r}")
        nu = float(q)
        if not (math.isfinite(nu) and nu > 0.0):
            raise InvalidIndex(f"half-line wavenumber must be positive, got {nu}")
        pin = interval.r if case is SpectrumCase.CONTINUOUS_HALF_LINE_UPPER \
            else interval.l
        norm = math.sqrt(sq / math.pi)
        return _sine_family(case, nu, nu, pin, norm, c, sq)

    raise UnsupportedCase(f"unhandled spectrum case {case!r}")  # pragma: no cover


def inner_product(f: Callable, g: Callable, interval: Interval,
                  weight: WeightDensity,
                  cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Weighted inner product (f, g)_s = int_I conj(f) g s dx. The first
    argument is the conjugated one. Both callables must be vectorized."""

    def integrand(x):
        return np.conjugate(f(x)) * g(x) * weight(x)

    value, _ = integrate_1d(integrand, (interval.l, interval.r), cfg)
    if np.ndim(value) == 0 and abs(np.imag(value)) < 1e-14 * (1.0 + abs(value)):
        return float(np.real(value))
    return value


def eigen_residual(pair: EigenPair, params: MarketParams, x_grid,
                   h: float = 1e-5) -> float:
    """Max residual |L psi - lambda0 psi| on a grid, with L applied by central
    finite differences. Validates that the closed forms actually solve the
    eigenvalue problem; h is the stencil step."""
    grid = np.asarray(x_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or not np.all(np.isfinite(grid)):
        raise InvalidGrid("x_grid must be a finite 1-d grid with >= 3 points")
    if not (0.0 < h < 1.0):
        raise InvalidGrid(f"stencil step must be in (0, 1), got {h}")
    c = derived_c(params)
    sq = params.sigma_sq
    up = pair.psi0(grid + h)
    dn = pair.psi0(grid - h)
    mid = pair.psi0(grid)
    d1 = (up - dn) / (2.0 * h)
    d2 = (up - 2.0 * mid + dn) / (h * h)
    resid = (sq / 2.0) * d2 + sq * c * d1 - pair.lambda0 * mid
    return float(np.max(np.abs(resid)))
