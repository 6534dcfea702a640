"""Calibration of effective parameters from vanilla quotes.

The implied-volatility surface of the corrected European price is affine in
the log-moneyness-to-maturity ratio LMMR = log(K/S)/t:

    I = b + a * LMMR,
    a = v3_eps / sigma_star^3,
    b = sigma_star + (v3_eps / (2 sigma_star)) (1 - 2 mu / sigma_star^2),

with sigma_star^2 = sigma_sq + 2 v2_eps. Fitting (a, b) by least squares and
pairing them with a historical variance estimate recovers (sigma_star,
v2_eps, v3_eps).

Quotes and prices are un-discounted u-values, matching the pricing modules;
convert discounted market premiums by exp(mu t) before loading.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import (CalibrationFailure, DegenerateFit, InvalidParams,
                     NoSolution)
from .pricing import bs_reference, bs_vega

_VOL_LO = 1e-4
_VOL_HI = 5.0


@dataclass(frozen=True)
class Quote:
    """One vanilla quote: maturity, strike and spot (natural units), and a
    value that is either an un-discounted price or an implied vol."""

    t: float
    strike: float
    spot: float
    value: float
    value_type: str = "price"

    def __post_init__(self):
        for name, v in (("t", self.t), ("strike", self.strike),
                        ("spot", self.spot)):
            if not (v > 0.0 and math.isfinite(v)):
                raise InvalidParams(f"quote {name} must be positive, got {v}")
        if self.value_type not in ("price", "iv"):
            raise InvalidParams(
                f"value_type must be 'price' or 'iv', got {self.value_type!r}")
        if self.value_type == "iv":
            if not (0.0 < self.value <= _VOL_HI):
                raise InvalidParams(
                    f"implied vol quote must lie in (0, {_VOL_HI}], got "
                    f"{self.value}")
        elif not (self.value >= 0.0 and math.isfinite(self.value)):
            raise InvalidParams(f"price quote must be >= 0, got {self.value}")

    @property
    def lmmr(self) -> float:
        return math.log(self.strike / self.spot) / self.t

    def implied_vol(self, mu: float) -> float:
        if self.value_type == "iv":
            return self.value
        return implied_vol(self.value, self.t, math.log(self.spot),
                           math.log(self.strike), mu)


def implied_vol(price: float, t: float, x: float, k: float, mu: float,
                tol: float = 1e-10) -> float:
    """Volatility solving bs_reference(t, x, k, mu, sigma) = price, by Newton
    safeguarded with a maintained bracket inside [1e-4, 5]. Prices at or
    outside the no-arbitrage bounds raise no-solution."""
    if not (t > 0.0 and math.isfinite(t)):
        raise InvalidParams(f"t must be positive, got {t}")
    forward = math.exp(x + mu * t)
    intrinsic = max(forward - math.exp(k), 0.0)
    scale = max(forward, math.exp(k))
    if price <= intrinsic + 1e-15 * scale:
        raise NoSolution(
            f"price {price} at or below the zero-vol bound {intrinsic}")
    if price >= forward:
        raise NoSolution(f"price {price} at or above the spot bound {forward}")
    lo, hi = _VOL_LO, _VOL_HI
    g_lo = bs_reference(t, x, k, mu, lo) - price
    g_hi = bs_reference(t, x, k, mu, hi) - price
    if g_lo > 0.0:
        raise NoSolution(
            f"price {price} below the value at minimum vol {_VOL_LO}")
    if g_hi < 0.0:
        raise NoSolution(
            f"price {price} above the value at maximum vol {_VOL_HI}")
    sigma = min(max(0.3, lo), hi)
    for _ in range(200):
        g = bs_reference(t, x, k, mu, sigma) - price
        if g > 0.0:
            hi = sigma
        else:
            lo = sigma
        vega = bs_vega(t, x, k, mu, sigma)
        if vega > 1e-300:
            step = g / vega
            candidate = sigma - step
        else:
            candidate = 0.5 * (lo + hi)
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if abs(candidate - sigma) <= tol:
            return candidate
        sigma = candidate
    return sigma  # bracket width is far below tol after 200 iterations


def fit_lmmr(quotes: Sequence[Quote], mu: float) -> Tuple[float, float]:
    """Least-squares line I = b + a * LMMR through the quotes' implied vols.
    Raises degenerate-fit when the moneyness spread cannot identify a slope."""
    if len(quotes) < 2:
        raise DegenerateFit(f"need >= 2 quotes, got {len(quotes)}")
    lmmr = np.array([q.lmmr for q in quotes])
    ivs = np.array([q.implied_vol(mu) for q in quotes])
    spread = float(np.var(lmmr))
    if spread < 1e-14 * (1.0 + float(np.mean(lmmr)) ** 2):
        raise DegenerateFit(
            "quotes share one log-moneyness-to-maturity ratio; slope is "
            "unidentifiable")
    a, b = np.polyfit(lmmr, ivs, 1)
    return float(a), float(b)


@dataclass(frozen=True)
class RecoveredParams:
    sigma_star: float
    v2_eps: float
    v3_eps: float


def recover_params(a: float, b: float, sigma_sq_hist: float,
                   mu: float) -> RecoveredParams:
    """Invert the smile line: sigma_star solves
    s + (a/2) s^2 = b + a mu on [1e-4, 5] (safeguarded Newton), then
    v3_eps = a sigma_star^3 and v2_eps = (sigma_star^2 - sigma_sq_hist)/2."""
    if not (sigma_sq_hist > 0.0 and math.isfinite(sigma_sq_hist)):
        raise InvalidParams(
            f"sigma_sq_hist must be positive, got {sigma_sq_hist}")
    target = b + a * mu

    def g(s: float) -> float:
        return s + 0.5 * a * s * s - target

    lo, hi = _VOL_LO, _VOL_HI
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0:
        sigma_star = lo
    elif g_hi == 0.0:
        sigma_star = hi
    elif g_lo * g_hi > 0.0:
        raise CalibrationFailure(
            f"no effective vol in [{_VOL_LO}, {_VOL_HI}]: residuals at the "
            f"bracket ends are {g_lo:.3e} and {g_hi:.3e}")
    else:
        s = min(max(b, lo), hi)
        for _ in range(200):
            val = g(s)
            if (val > 0.0) == (g_hi > 0.0):
                hi = s
            else:
                lo = s
            slope = 1.0 + a * s
            candidate = s - val / slope if abs(slope) > 1e-12 else \
                0.5 * (lo + hi)
            if not lo < candidate < hi:
                candidate = 0.5 * (lo + hi)
            if abs(candidate - s) <= 1e-14:
                s = candidate
                break
            s = candidate
        sigma_star = s
    v3_eps = a * sigma_star ** 3
    v2_eps = 0.5 * (sigma_star ** 2 - sigma_sq_hist)
    return RecoveredParams(sigma_star=float(sigma_star), v2_eps=float(v2_eps),
                           v3_eps=float(v3_eps))


def forward_ab(sigma_sq: float, v2_eps: float, v3_eps: float,
               mu: float) -> Tuple[float, float]:
    """Smile-line coefficients implied by effective parameters (the forward
    map inverted by recover_params)."""
    star_sq = sigma_sq + 2.0 * v2_eps
    if star_sq <= 0.0:
        raise InvalidParams(
            f"sigma_sq + 2 v2_eps must be positive, got {star_sq}")
    sigma_star = math.sqrt(star_sq)
    a = v3_eps / sigma_star ** 3
    b = sigma_star + (v3_eps / (2.0 * sigma_star)) \
        * (1.0 - 2.0 * mu / star_sq)
    return a, b


@dataclass(frozen=True)
class CalibrationResult:
    a: float
    b: float
    sigma_star: float
    v2_eps: float
    v3_eps: float
    residuals: Tuple[float, ...]
    n_quotes: int


def calibrate(quotes: Sequence[Quote], sigma_sq_hist: float,
              mu: float) -> CalibrationResult:
    """Full pipeline: implied vols, smile-line fit, parameter recovery, and
    per-quote fit residuals I_obs - (b + a LMMR)."""
    a, b = fit_lmmr(quotes, mu)
    rec = recover_params(a, b, sigma_sq_hist, mu)
    residuals = tuple(
        q.implied_vol(mu) - (b + a * q.lmmr) for q in quotes)
    return CalibrationResult(a=a, b=b, sigma_star=rec.sigma_star,
                             v2_eps=rec.v2_eps, v3_eps=rec.v3_eps,
                             residuals=residuals, n_quotes=len(quotes))


def load_quotes(path) -> List[Quote]:
    """Read quotes from CSV with header columns t, strike, spot, value, type
    (type defaults to 'price' when the column is absent)."""
    quotes: List[Quote] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InvalidParams(f"quotes file {path} has no header row")
        cols = {c.strip().lower(): c for c in reader.fieldnames}
        required = ("t", "strike", "spot", "value")
        missing = [c for c in required if c not in cols]
        if missing:
            raise InvalidParams(
                f"quotes file {path} is missing columns {missing}")
        for row in reader:
            vt = row[cols["type"]].strip().lower() if "type" in cols else "price"
            quotes.append(Quote(
                t=float(row[cols["t"]]), strike=float(row[cols["strike"]]),
                spot=float(row[cols["spot"]]), value=float(row[cols["value"]]),
                value_type=vt))
    if not quotes:
        raise InvalidParams(f"quotes file {path} contains no rows")
    return quotes
