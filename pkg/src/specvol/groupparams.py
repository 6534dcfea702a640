"""Group parameters of a fast mean-reverting volatility model: the averaged
variance, the solution of the centering problem, and the two correction
coefficients obtained by averaging against the invariant density.

The driver is an Ornstein-Uhlenbeck factor with invariant law
N(y_bar, upsilon^2); f maps the factor to instantaneous volatility and
Lambda is the combined risk premium entering the first-order drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.stats import norm

from .errors import CenteringViolation, InvalidParams
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, integrate_1d

_AVG_HALF_WIDTH = 10.0  # integration half-width in units of upsilon


@dataclass(frozen=True)
class SVModelPrimitives:
    """Model inputs: OU invariant-law parameters, spot-vol correlation,
    time-scale separation eps, the vol map f, and the risk premium Lambda."""

    y_bar: float
    upsilon: float
    rho: float
    eps: float
    f: Callable
    lambda_fn: Optional[Callable] = None

    def __post_init__(self):
        if not (self.upsilon > 0.0 and math.isfinite(self.upsilon)):
            raise InvalidParams(f"upsilon must be positive, got {self.upsilon}")
        if not (-1.0 <= self.rho <= 1.0):
            raise InvalidParams(f"rho must lie in [-1, 1], got {self.rho}")
        if not (self.eps > 0.0 and math.isfinite(self.eps)):
            raise InvalidParams(f"eps must be positive, got {self.eps}")
        if not callable(self.f):
            raise InvalidParams("f must be callable")
        if self.lambda_fn is not None and not callable(self.lambda_fn):
            raise InvalidParams("lambda_fn must be callable or None")


@dataclass(frozen=True)
class GroupParameters:
    """Averaged market inputs derived from a model: sigma_sq = <f^2>, the raw
    correction coefficients, and their sqrt(eps)-scaled versions."""

    sigma_sq: float
    v2: float
    v3: float
    v2_eps: float
    v3_eps: float
    eps: float


def stationary_average(g: Callable, y_bar: float, upsilon: float,
                       cfg: QuadratureConfig = DEFAULT_CONFIG,
                       breakpoints: Sequence[float] = ()) -> float:
    """<g> = int g(y) N(y_bar, upsilon^2)(dy), integrated over +-10 upsilon
    (the neglected tail mass is ~1e-23). ``breakpoints`` marks kink locations
    (e.g. clip corners of f) so the adaptive rule splits there."""
    if not (upsilon > 0.0 and math.isfinite(upsilon)):
        raise InvalidParams(f"upsilon must be positive, got {upsilon}")
    lo = y_bar - _AVG_HALF_WIDTH * upsilon
    hi = y_bar + _AVG_HALF_WIDTH * upsilon
    edges = [lo] + sorted(float(b) for b in breakpoints if lo < b < hi) + [hi]

    def integrand(y):
        y = np.asarray(y, dtype=float)
        z = (y - y_bar) / upsilon
        dens = np.exp(-0.5 * z * z) / (upsilon * math.sqrt(2.0 * math.pi))
        return np.asarray(g(y), dtype=float) * dens

    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, _ = integrate_1d(integrand, (a, b), cfg)
        total += float(value)
    return total


class PhiPrimeEvaluator:
    """Derivative of the centering-problem solution, tabulated on a grid and
    extended by its 1/(y_bar - y) far-field form. Callable and vectorized."""

    def __init__(self, spline: CubicSpline, y_lo: float, y_hi: float,
                 y_bar: float, c_lo: float, c_hi: float):
        self._spline = spline
        self.y_lo = y_lo
        self.y_hi = y_hi
        self.y_bar = y_bar
        self._c_lo = c_lo
        self._c_hi = c_hi

    def __call__(self, y):
        yy = np.asarray(y, dtype=float)
        scalar = yy.ndim == 0
        yy = np.atleast_1d(yy)
        out = np.empty_like(yy)
        below = yy < self.y_lo
        above = yy > self.y_hi
        mid = ~(below | above)
        out[mid] = self._spline(yy[mid])
        # Far field: (f(edge)^2 - sigma_sq) / (y_bar - y) on either side.
        out[below] = self._c_lo / (self.y_bar - yy[below])
        out[above] = self._c_hi / (self.y_bar - yy[above])
        return float(out[0]) if scalar else out


def phi_prime(f: Callable, sigma_sq: float, y_bar: float, upsilon: float,
              n_grid: int = 2001, half_width: float = 8.0) -> PhiPrimeEvaluator:
    """Solve the centering problem for phi': with p the invariant density,

        phi'(y) = (1 / (upsilon^2 p(y))) * int_{-inf}^{y} (f(z)^2 - sigma_sq) p(z) dz.

    Requires <f^2> = sigma_sq (else the integrand fails to vanish at +inf and
    phi' grows); violation raises centering-violation. Tabulated on n_grid
    points over +-half_width upsilon, cubic spline inside, asymptotic tails
    outside."""
    if n_grid < 51:
        raise InvalidParams(f"n_grid must be >= 51, got {n_grid}")
    if not (half_width > 1.0):
        raise InvalidParams(f"half_width must exceed 1, got {half_width}")
    avg = stationary_average(lambda y: np.asarray(f(y)) ** 2, y_bar, upsilon,
                             breakpoints=getattr(f, "breakpoints", ()))
    tol = max(1e-8, 1e-6 * abs(sigma_sq))
    if not abs(avg - sigma_sq) <= tol:
        raise CenteringViolation(
            f"<f^2> = {avg!r} does not match sigma_sq = {sigma_sq!r} "
            f"(difference {avg - sigma_sq:.3e} exceeds {tol:.1e})")

    y = np.linspace(y_bar - half_width * upsilon, y_bar + half_width * upsilon,
                    n_grid)
    z = (y - y_bar) / upsilon
    dens = np.exp(-0.5 * z * z) / (upsilon * math.sqrt(2.0 * math.pi))
    w = (np.asarray(f(y), dtype=float) ** 2 - sigma_sq) * dens

    # Cumulative integral of w from the left grid edge: per-cell Simpson with
    # midpoint samples, O(h^4) away from clip kinks. Analytic lower tail added
    # where f is flat below the grid.
    h = y[1] - y[0]
    ym = 0.5 * (y[1:] + y[:-1])
    zm = (ym - y_bar) / upsilon
    mid_dens = np.exp(-0.5 * zm * zm) / (upsilon * math.sqrt(2.0 * math.pi))
    wm = (np.asarray(f(ym), dtype=float) ** 2 - sigma_sq) * mid_dens
    cum = np.zeros_like(w)
    cum[1:] = np.cumsum((h / 6.0) * (w[:-1] + 4.0 * wm + w[1:]))

    f_lo = float(np.asarray(f(y[0]), dtype=float))
    f_hi = float(np.asarray(f(y[-1]), dtype=float))
    lower_tail = (f_lo ** 2 - sigma_sq) * norm.cdf(-half_width)
    vals = (cum + lower_tail) / (upsilon ** 2 * dens)

    spline = CubicSpline(y, vals)
    return PhiPrimeEvaluator(spline, y[0], y[-1], y_bar,
                             c_lo=f_lo ** 2 - sigma_sq,
                             c_hi=f_hi ** 2 - sigma_sq)


def group_parameters(prim: SVModelPrimitives,
                     cfg: QuadratureConfig = DEFAULT_CONFIG) -> GroupParameters:
    """Averaged variance and correction coefficients of a model:

        sigma_sq = <f^2>,
        v2 = (upsilon / sqrt2) <Lambda phi'>,
        v3 = -(rho upsilon / sqrt2) <f phi'>,

    with the scaled versions multiplied by sqrt(eps)."""
    breakpoints = getattr(prim.f, "breakpoints", ())
    sigma_sq = stationary_average(lambda y: np.asarray(prim.f(y)) ** 2,
                                  prim.y_bar, prim.upsilon, cfg, breakpoints)
    pp = phi_prime(prim.f, sigma_sq, prim.y_bar, prim.upsilon)
    pref = prim.upsilon / math.sqrt(2.0)
    if prim.lambda_fn is None:
        v2 = 0.0
    else:
        v2 = pref * stationary_average(
            lambda y: np.asarray(prim.lambda_fn(y)) * pp(y),
            prim.y_bar, prim.upsilon, cfg, breakpoints)
    v3 = -prim.rho * pref * stationary_average(
        lambda y: np.asarray(prim.f(y)) * pp(y),
        prim.y_bar, prim.upsilon, cfg, breakpoints)
    root = math.sqrt(prim.eps)
    return GroupParameters(sigma_sq=sigma_sq, v2=v2, v3=v3,
                           v2_eps=root * v2, v3_eps=root * v3, eps=prim.eps)


class ClippedExp:
    """Volatility map f(y) = clip(exp(y), lo, hi); exposes its kink locations
    so averaging routines can split panels there."""

    def __init__(self, lo: float = 0.01, hi: float = 5.0):
        if not 0.0 < lo < hi:
            raise InvalidParams(f"need 0 < lo < hi, got lo={lo}, hi={hi}")
        self.lo = lo
        self.hi = hi
        self.breakpoints = (math.log(lo), math.log(hi))

    def __call__(self, y):
        return np.clip(np.exp(np.asarray(y, dtype=float)), self.lo, self.hi)


def clipped_exp_model(target_sigma_sq: float, upsilon: float = 0.5,
                      rho: float = -0.4, eps: float = 0.1,
                      lo: float = 0.01, hi: float = 5.0,
                      lambda_fn: Optional[Callable] = None) -> SVModelPrimitives:
    """Reference model with f = clip(exp(y), lo, hi), y_bar tuned by root
    finding so that <f^2> equals target_sigma_sq."""
    if not (0.0 < target_sigma_sq):
        raise InvalidParams(
            f"target_sigma_sq must be positive, got {target_sigma_sq}")
    f = ClippedExp(lo=lo, hi=hi)
    if not lo ** 2 < target_sigma_sq < hi ** 2:
        raise InvalidParams(
            f"target_sigma_sq {target_sigma_sq} not attainable with clip "
            f"range [{lo}, {hi}]")

    def avg_minus_target(y_bar: float) -> float:
        return stationary_average(lambda y: f(y) ** 2, y_bar, upsilon,
                                  breakpoints=f.breakpoints) - target_sigma_sq

    # <f^2> is increasing in y_bar and spans (lo^2, hi^2); bracket generously.
    lo_b = math.log(lo) - 8.0 * upsilon
    hi_b = math.log(hi) + 8.0 * upsilon
    y_bar = brentq(avg_minus_target, lo_b, hi_b, xtol=1e-12, rtol=1e-14)
    return SVModelPrimitives(y_bar=float(y_bar), upsilon=upsilon, rho=rho,
                             eps=eps, f=f, lambda_fn=lambda_fn)


def load_model(source) -> SVModelPrimitives:
    """Build SVModelPrimitives from a JSON file path or dict. f is given as
    {"type": "clipped_exp", "lo": .., "hi": ..} (with either "y_bar" at the
    top level or "target_sigma_sq" inside f to tune it) or
    {"type": "constant", "value": ..}; lambda as {"type": "constant",
    "value": ..} or omitted."""
    from .core import _as_mapping  # shared JSON plumbing
    data = _as_mapping(source)
    fdata = data.get("f", {"type": "clipped_exp"})
    ftype = str(fdata.get("type", "clipped_exp")).lower()
    lambda_fn = None
    ldata = data.get("lambda")
    if ldata:
        ltype = str(ldata.get("type", "zero")).lower()
        if ltype == "constant":
            lval = float(ldata["value"])
            lambda_fn = lambda y, _v=lval: np.full_like(
                np.asarray(y, dtype=float), _v)
        elif ltype != "zero":
            raise InvalidParams(f"unknown lambda type {ltype!r}")

    if ftype == "clipped_exp":
        lo = float(fdata.get("lo", 0.01))
        hi = float(fdata.get("hi", 5.0))
        if "target_sigma_sq" in fdata:
            model = clipped_exp_model(float(fdata["target_sigma_sq"]),
                                      upsilon=float(data["upsilon"]),
                                      rho=float(data["rho"]),
                                      eps=float(data["eps"]),
                                      lo=lo, hi=hi, lambda_fn=lambda_fn)
            return model
        f = ClippedExp(lo=lo, hi=hi)
    elif ftype == "constant":
        fval = float(fdata["value"])
        if fval <= 0.0:
            raise InvalidParams(f"constant f must be positive, got {fval}")

        def f(y, _v=fval):
            return np.full_like(np.asarray(y, dtype=float), _v)
    else:
        raise InvalidParams(f"unknown f type {ftype!r}")
    return SVModelPrimitives(y_bar=float(data["y_bar"]),
                             upsilon=float(data["upsilon"]),
                             rho=float(data["rho"]), eps=float(data["eps"]),
                             f=f, lambda_fn=lambda_fn)
