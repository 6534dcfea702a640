"""Shared domain types: market parameters, barrier intervals, option
specifications, spectrum classification, and payoff evaluation.

Prices everywhere in this package are quoted in log-spot coordinates and as
un-discounted expectations: a reported value ``u`` corresponds to the market
price ``exp(-mu*t) * u``. The CLI applies the discount factor on request.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from .errors import InvalidInterval, InvalidParams, UnsupportedCase

UNBOUNDED = math.inf


def _require_finite(name: str, value: float) -> None:
    if not (isinstance(value, numbers.Real) and math.isfinite(value)):
        raise InvalidParams(f"{name} must be a finite real number, got {value!r}")


@dataclass(frozen=True)
class MarketParams:
    """Effective market inputs: drift, averaged variance, and the two
    sqrt(epsilon)-scaled correction coefficients.

    v2_eps and v3_eps are the scaled values actually entering prices; use
    :meth:`from_model` when starting from raw correction coefficients and an
    explicit epsilon.
    """

    mu: float
    sigma_sq: float
    v2_eps: float = 0.0
    v3_eps: float = 0.0

    def __post_init__(self):
        _require_finite("mu", self.mu)
        _require_finite("sigma_sq", self.sigma_sq)
        _require_finite("v2_eps", self.v2_eps)
        _require_finite("v3_eps", self.v3_eps)
        if self.sigma_sq <= 0.0:
            raise InvalidParams(
                f"sigma_sq must be positive, got {self.sigma_sq}")

    @classmethod
    def from_model(cls, mu: float, sigma_sq: float, v2: float, v3: float,
                   eps: float) -> "MarketParams":
        """Scale raw correction coefficients by sqrt(eps)."""
        _require_finite("eps", eps)
        if eps <= 0.0:
            raise InvalidParams(f"eps must be positive, got {eps}")
        root = math.sqrt(eps)
        return cls(mu=mu, sigma_sq=sigma_sq, v2_eps=root * v2, v3_eps=root * v3)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)


def derived_c(params: MarketParams) -> float:
    """Drift-to-variance ratio c = (mu - sigma_sq/2) / sigma_sq that fixes the
    weight density and the similarity factor exp(-c x) of every eigenfunction."""
    return (params.mu - params.sigma_sq / 2.0) / params.sigma_sq


@dataclass(frozen=True)
class Interval:
    """Open interval (l, r) in log-spot space; infinite endpoints use math.inf
    markers. Degenerate or reversed intervals are rejected."""

    l: float = -UNBOUNDED
    r: float = UNBOUNDED

    def __post_init__(self):
        for name, v in (("l", self.l), ("r", self.r)):
            if not isinstance(v, numbers.Real) or math.isnan(v):
                raise InvalidInterval(f"endpoint {name} must be a real number "
                                      f"or +-inf, got {v!r}")
        if not self.l < self.r:
            raise InvalidInterval(
                f"interval requires l < r, got l={self.l}, r={self.r}")

    @property
    def l_finite(self) -> bool:
        return math.isfinite(self.l)

    @property
    def r_finite(self) -> bool:
        return math.isfinite(self.r)

    @property
    def width(self) -> float:
        return self.r - self.l

    def contains(self, x: float) -> bool:
        return self.l < x < self.r


class SpectrumCase(Enum):
    """Which of the four eigenstructure regimes an interval falls in."""

    DISCRETE = "Discrete"
    CONTINUOUS_FULL_LINE = "ContinuousFullLine"
    CONTINUOUS_HALF_LINE_UPPER = "ContinuousHalfLineUpper"
    CONTINUOUS_HALF_LINE_LOWER = "ContinuousHalfLineLower"


def classify_spectrum(interval: Interval) -> SpectrumCase:
    """Finite interval -> discrete sine basis; the full line -> continuous
    Fourier family; one finite endpoint -> continuous sine family pinned there
    ("Upper" means a finite upper endpoint r, i.e. I = (-inf, r))."""
    if interval.l_finite and interval.r_finite:
        return SpectrumCase.DISCRETE
    if not interval.l_finite and not interval.r_finite:
        return SpectrumCase.CONTINUOUS_FULL_LINE
    if interval.r_finite:
        return SpectrumCase.CONTINUOUS_HALF_LINE_UPPER
    return SpectrumCase.CONTINUOUS_HALF_LINE_LOWER


class OptionKind(Enum):
    EUROPEAN_CALL = "EuropeanCall"
    UP_AND_OUT_CALL = "UpAndOutCall"
    DOUBLE_BARRIER_KNOCK_OUT_CALL = "DoubleBarrierKnockOutCall"
    KNOCK_IN = "KnockIn"
    REBATE = "Rebate"
    GENERIC_KNOCK_OUT = "GenericKnockOut"


_CALL_KINDS = {
    OptionKind.EUROPEAN_CALL,
    OptionKind.UP_AND_OUT_CALL,
    OptionKind.DOUBLE_BARRIER_KNOCK_OUT_CALL,
    OptionKind.KNOCK_IN,
    OptionKind.REBATE,
}

# Maturities below this are priced but flagged: the correction term carries a
# payoff-smoothing error that is not small relative to u1 at very short t.
T_MIN_RELIABLE = 1e-3


@dataclass(frozen=True)
class OptionSpec:
    """Contract description: kind, log-strike k, barrier interval, maturity t,
    and (for rebate kinds) the cash amounts paid at each barrier.

    GenericKnockOut carries an arbitrary terminal payoff callable h(x)
    (vectorized over numpy arrays) in place of the call payoff; for pricing on
    unbounded intervals the callable must expose a ``support`` attribute
    (x_lo, x_hi) outside which it is constant (zero below, ``tail_value``
    above, default 0).
    """

    kind: OptionKind
    k: Optional[float]
    interval: Interval
    t: float
    rebate_l: float = 0.0
    rebate_r: float = 0.0
    payoff_fn: Optional[Callable] = None

    def __post_init__(self):
        _require_finite("t", self.t)
        if self.t <= 0.0:
            raise InvalidParams(f"maturity t must be positive, got {self.t}")
        kind, iv = self.kind, self.interval
        if kind in _CALL_KINDS:
            if self.k is None:
                raise InvalidParams(f"{kind.value} requires a log-strike k")
            _require_finite("k", self.k)
        if kind is OptionKind.EUROPEAN_CALL:
            if iv.l_finite or iv.r_finite:
                raise InvalidInterval(
                    "EuropeanCall must use the full line (-inf, inf)")
        elif kind is OptionKind.UP_AND_OUT_CALL:
            if iv.l_finite or not iv.r_finite:
                raise InvalidInterval(
                    "UpAndOutCall requires interval (-inf, r) with finite r")
            if not self.k < iv.r:
                raise InvalidParams(
                    f"UpAndOutCall requires k < r, got k={self.k}, r={iv.r}")
        elif kind is OptionKind.DOUBLE_BARRIER_KNOCK_OUT_CALL:
            if not (iv.l_finite and iv.r_finite):
                raise InvalidInterval(
                    "DoubleBarrierKnockOutCall requires a finite interval")
            if not iv.l < self.k < iv.r:
                raise InvalidParams(
                    f"DoubleBarrierKnockOutCall requires l < k < r, got "
                    f"l={iv.l}, k={self.k}, r={iv.r}")
        elif kind is OptionKind.KNOCK_IN:
            # Knock-in is priced by parity against a knock-out companion, so
            # the same geometric constraints apply. A lower half line has no
            # supported knock-out companion.
            if iv.l_finite and iv.r_finite:
                if not iv.l < self.k < iv.r:
                    raise InvalidParams(
                        f"KnockIn on a finite interval requires l < k < r, "
                        f"got l={iv.l}, k={self.k}, r={iv.r}")
            elif iv.r_finite:
                if not self.k < iv.r:
                    raise InvalidParams(
                        f"KnockIn requires k < r, got k={self.k}, r={iv.r}")
            elif iv.l_finite:
                raise UnsupportedCase(
                    "KnockIn on (l, inf) has no supported knock-out companion")
            else:
                raise InvalidInterval(
                    "KnockIn requires at least one finite barrier")
        elif kind is OptionKind.REBATE:
            if not (iv.l_finite and iv.r_finite):
                raise InvalidInterval(
                    "Rebate requires a finite interval (l, r)")
            if not iv.l < self.k < iv.r:
                raise InvalidParams(
                    f"Rebate requires l < k < r, got l={iv.l}, k={self.k}, "
                    f"r={iv.r}")
            for name, v in (("rebate_l", self.rebate_l),
                            ("rebate_r", self.rebate_r)):
                _require_finite(name, v)
                if v < 0.0:
                    raise InvalidParams(f"{name} must be nonnegative, got {v}")
        elif kind is OptionKind.GENERIC_KNOCK_OUT:
            if self.payoff_fn is None or not callable(self.payoff_fn):
                raise InvalidParams(
                    "GenericKnockOut requires a callable payoff_fn")
        else:  # pragma: no cover
            raise InvalidParams(f"unknown option kind {kind!r}")


def eval_payoff(spec: OptionSpec, x) -> Union[float, np.ndarray]:
    """Terminal payoff h(x), vectorized; zero outside the closed interval for
    knock-out kinds. Rebate kinds return the cash rebate on and beyond the
    corresponding barrier. KnockIn returns the unrestricted call payoff (the
    amount paid at maturity once the contract has knocked in)."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    iv = spec.interval

    if spec.kind is OptionKind.GENERIC_KNOCK_OUT:
        vals = np.asarray(spec.payoff_fn(arr), dtype=float)
        inside = np.ones_like(arr, dtype=bool)
        if iv.l_finite:
            inside &= arr > iv.l
        if iv.r_finite:
            inside &= arr < iv.r
        out = np.where(inside, vals, 0.0)
    elif spec.kind is OptionKind.KNOCK_IN:
        out = np.maximum(np.exp(arr) - math.exp(spec.k), 0.0)
    elif spec.kind is OptionKind.REBATE:
        call = np.maximum(np.exp(arr) - math.exp(spec.k), 0.0)
        out = np.where(arr <= iv.l, spec.rebate_l,
                       np.where(arr >= iv.r, spec.rebate_r, call))
    else:
        call = np.maximum(np.exp(arr) - math.exp(spec.k), 0.0)
        inside = np.ones_like(arr, dtype=bool)
        if iv.l_finite:
            inside &= arr > iv.l
        if iv.r_finite:
            inside &= arr < iv.r
        out = np.where(inside, call, 0.0)

    return float(out[0]) if scalar else out


class SmoothstepPayoff:
    """Bounded C^2 payoff: 0 below ``lower``, ``cap`` above ``upper``, quintic
    smoothstep in between. Used as the smooth test payoff for convergence
    studies; exposes the support metadata generic pricing needs on unbounded
    intervals."""

    def __init__(self, lower: float, upper: float, cap: float = 1.0):
        if not lower < upper:
            raise InvalidParams(
                f"SmoothstepPayoff requires lower < upper, got {lower}, {upper}")
        _require_finite("cap", cap)
        self.lower = float(lower)
        self.upper = float(upper)
        self.cap = float(cap)
        self.support = (self.lower, self.upper)
        self.tail_value = self.cap

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        s = np.clip((arr - self.lower) / (self.upper - self.lower), 0.0, 1.0)
        return self.cap * s * s * s * (10.0 + s * (-15.0 + 6.0 * s))

    def deriv(self, x, order: int):
        """Analytic derivatives up to third order (zero outside the ramp)."""
        arr = np.asarray(x, dtype=float)
        w = self.upper - self.lower
        s = np.clip((arr - self.lower) / w, 0.0, 1.0)
        inside = (arr > self.lower) & (arr < self.upper)
        if order == 0:
            return self(arr)
        if order == 1:
            d = 30.0 * s * s * (s - 1.0) ** 2 / w
        elif order == 2:
            d = 60.0 * s * (s - 1.0) * (2.0 * s - 1.0) / w ** 2
        elif order == 3:
            d = 60.0 * (6.0 * s * s - 6.0 * s + 1.0) / w ** 3
        else:
            raise InvalidParams(f"derivative order {order} not supported")
        return self.cap * np.where(inside, d, 0.0)


# ---------------------------------------------------------------------------
# JSON ingestion

def _as_mapping(source) -> dict:
    if isinstance(source, dict):
        return source
    with open(source, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidParams(f"expected a JSON object in {source}")
    return data


def load_market_params(source) -> MarketParams:
    """Build MarketParams from a JSON file path or a dict. Accepts either the
    scaled fields (v2_eps, v3_eps) or raw (v2, v3, eps)."""
    data = _as_mapping(source)
    try:
        mu = float(data["mu"])
        sigma_sq = float(data["sigma_sq"])
    except KeyError as exc:
        raise InvalidParams(f"market params missing field {exc}") from exc
    if "eps" in data:
        return MarketParams.from_model(mu, sigma_sq,
                                       float(data.get("v2", 0.0)),
                                       float(data.get("v3", 0.0)),
                                       float(data["eps"]))
    return MarketParams(mu=mu, sigma_sq=sigma_sq,
                        v2_eps=float(data.get("v2_eps", 0.0)),
                        v3_eps=float(data.get("v3_eps", 0.0)))


_KIND_ALIASES = {k.value.lower(): k for k in OptionKind}
_KIND_ALIASES.update({
    "european": OptionKind.EUROPEAN_CALL,
    "call": OptionKind.EUROPEAN_CALL,
    "upandout": OptionKind.UP_AND_OUT_CALL,
    "upandoutcall": OptionKind.UP_AND_OUT_CALL,
    "doublebarrier": OptionKind.DOUBLE_BARRIER_KNOCK_OUT_CALL,
    "doublebarrierknockout": OptionKind.DOUBLE_BARRIER_KNOCK_OUT_CALL,
    "knockin": OptionKind.KNOCK_IN,
    "rebate": OptionKind.REBATE,
    "generic": OptionKind.GENERIC_KNOCK_OUT,
    "genericknockout": OptionKind.GENERIC_KNOCK_OUT,
})


def _endpoint(value, default: float) -> float:
    if value is None:
        return default
    if isinstance(value, str):
        low = value.strip().lower()
        if low in ("inf", "+inf", "infinity"):
            return UNBOUNDED
        if low in ("-inf", "-infinity"):
            return -UNBOUNDED
        return float(value)
    return float(value)


def load_option_spec(source) -> OptionSpec:
    """Build an OptionSpec from a JSON file path or dict. Barrier endpoints
    may be omitted/null for infinite sides. A GenericKnockOut payoff is given
    as {"type": "smoothstep", "lower": .., "upper": .., "cap": ..}."""
    data = _as_mapping(source)
    raw_kind = str(data.get("kind", "")).strip()
    key = raw_kind.replace("_", "").replace("-", "").replace(" ", "").lower()
    kind = _KIND_ALIASES.get(key)
    if kind is None:
        raise InvalidParams(f"unknown option kind {raw_kind!r}")
    interval = Interval(l=_endpoint(data.get("l"), -UNBOUNDED),
                        r=_endpoint(data.get("r"), UNBOUNDED))
    payoff_fn = None
    if "payoff" in data and data["payoff"] is not None:
        pdata = data["payoff"]
        ptype = str(pdata.get("type", "")).lower()
        if ptype == "smoothstep":
            payoff_fn = SmoothstepPayoff(lower=float(pdata["lower"]),
                                         upper=float(pdata["upper"]),
                                         cap=float(pdata.get("cap", 1.0)))
        else:
            raise UnsupportedCase(f"unknown payoff type {ptype!r} in JSON; "
                                  "only 'smoothstep' is loadable")
    k = data.get("k")
    return OptionSpec(kind=kind,
                      k=None if k is None else float(k),
                      interval=interval,
                      t=float(data["t"]),
                      rebate_l=float(data.get("rebate_l", 0.0)),
                      rebate_r=float(data.get("rebate_r", 0.0)),
                      payoff_fn=payoff_fn)
