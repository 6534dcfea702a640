"""Adaptive Gauss-Legendre quadrature for complex, vector-valued integrands on
finite, half-infinite, full-line, and imaginary-shifted contour domains, plus
the rotated antisymmetric double integral used by barrier correction terms.

Determinism: identical inputs give bit-identical results. Refinement is
worst-panel-first bisection with deterministic tie breaking, and returned
values are re-summed over panels sorted by left endpoint.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractViolation, IntegrationFailure, InvalidParams

_GL_CACHE: dict = {}


def _gl(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class QuadratureConfig:
    """Engine tolerances. ``contour_offset`` None means "use the pricing
    default" (c + 2 for the European contour). ``truncation_radius`` is the
    width of the first chunk when a domain endpoint is infinite; subsequent
    chunk widths double."""

    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    truncation_radius: float = 16.0
    contour_offset: Optional[float] = None

    def __post_init__(self):
        if self.abs_tol <= 0.0 or self.rel_tol < 0.0:
            raise InvalidParams("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise InvalidParams("max_subdivisions must be >= 1")
        if self.truncation_radius <= 0.0:
            raise InvalidParams("truncation_radius must be positive")

    @classmethod
    def from_mapping(cls, data: dict) -> "QuadratureConfig":
        known = {"abs_tol", "rel_tol", "max_subdivisions",
                 "truncation_radius", "contour_offset"}
        unknown = set(data) - known
        if unknown:
            raise InvalidParams(f"unknown quadrature config keys {sorted(unknown)}")
        kwargs = {k: data[k] for k in known if k in data}
        return cls(**kwargs)


DEFAULT_CONFIG = QuadratureConfig()


def _panel(f: Callable, a: float, b: float):
    """15-point Gauss value on [a, b] with a 15-vs-7 point error estimate."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x15, w15 = _gl(15)
    x7, w7 = _gl(7)
    f15 = np.asarray(f(mid + half * x15))
    f7 = np.asarray(f(mid + half * x7))
    v15 = half * np.tensordot(w15, f15, axes=(0, 0))
    v7 = half * np.tensordot(w7, f7, axes=(0, 0))
    err = float(np.max(np.abs(v15 - v7)))
    return v15, err


def _magnitude(value) -> float:
    return float(np.max(np.abs(value))) if np.ndim(value) else abs(value)


def _adaptive_finite(f: Callable, a: float, b: float, abs_tol: float,
                     rel_tol: float, max_subdivisions: int):
    """Worst-first adaptive bisection on a finite interval.

    Returns (value, error_estimate, converged). Values may be complex and/or
    vector valued; the error metric is the max-norm over components.
    """
    v, e = _panel(f, a, b)
    if not np.all(np.isfinite(np.atleast_1d(v))):
        raise IntegrationFailure(
            f"non-finite integrand values on [{a}, {b}]",
            best_estimate=v, error_estimate=math.inf)
    # Heap entries (-err, left, right, value); left endpoints are unique so
    # comparison never reaches the numpy payload.
    heap = [(-e, a, b, v)]
    frozen = []
    total_err = e
    total_val = np.array(v, copy=True) if np.ndim(v) else v
    n_panels = 1

    def tol_now() -> float:
        return max(abs_tol, rel_tol * _magnitude(total_val))

    while total_err > tol_now() and heap and n_panels < max_subdivisions:
        neg_e, a0, b0, v0 = heapq.heappop(heap)
        m = 0.5 * (a0 + b0)
        if m <= a0 or m >= b0:
            # Float resolution exhausted; this panel's error is irreducible.
            frozen.append((a0, b0, v0, -neg_e))
            continue
        v1, e1 = _panel(f, a0, m)
        v2, e2 = _panel(f, m, b0)
        for vv in (v1, v2):
            if not np.all(np.isfinite(np.atleast_1d(vv))):
                raise IntegrationFailure(
                    f"non-finite integrand values near [{a0}, {b0}]",
                    best_estimate=total_val, error_estimate=math.inf)
        total_err += e1 + e2 + neg_e
        total_val = total_val + (v1 + v2 - v0)
        heapq.heappush(heap, (-e1, a0, m, v1))
        heapq.heappush(heap, (-e2, m, b0, v2))
        n_panels += 1

    segments = [(item[1], item[3], -item[0]) for item in heap]
    segments.extend((a0, v0, e0) for a0, b0, v0, e0 in frozen)
    segments.sort(key=lambda s: s[0])
    if segments:
        value = segments[0][1]
        for _, v0, _ in segments[1:]:
            value = value + v0
        err = math.fsum(s[2] for s in segments)
    else:  # pragma: no cover
        value, err = total_val, total_err
    converged = err <= max(abs_tol, rel_tol * _magnitude(value))
    return value, err, converged


def _integrate_half_line(f: Callable, a: float, abs_tol: float, rel_tol: float,
                         max_subdivisions: int, first_width: float):
    """Integrate over [a, inf) by chunks of doubling width; stops when a chunk
    contributes below tolerance and contributions are shrinking."""
    chunks = []
    left = a
    width = first_width
    total = None
    total_err = 0.0
    prev_mag = math.inf
    small_streak = 0
    for j in range(64):
        chunk_tol = 0.25 * abs_tol / (2.0 ** j)
        v, e, _ = _adaptive_finite(f, left, left + width, chunk_tol, rel_tol,
                                   max_subdivisions)
        chunks.append(v)
        total_err += e
        mag = _magnitude(v)
        total = v if total is None else total + v
        if mag <= 0.5 * abs_tol and mag <= prev_mag:
            small_streak += 1
            if small_streak >= 2:
                # Bound the remaining tail by the last chunk's magnitude.
                total_err += mag
                return total, total_err, True
        else:
            small_streak = 0
        prev_mag = mag
        left += width
        width *= 2.0
    return total, total_err + prev_mag, False


def integrate_1d(f: Callable, domain: Tuple[float, float],
                 cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Integrate a vectorized integrand over (a, b), where either endpoint may
    be infinite. Returns (value, error_estimate); raises IntegrationFailure
    (carrying the best estimate) when tolerance cannot be met."""
    a, b = domain
    if math.isnan(a) or math.isnan(b) or not a < b:
        raise InvalidParams(f"invalid integration domain ({a}, {b})")
    at, rt, ms = cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions

    if math.isfinite(a) and math.isfinite(b):
        value, err, ok = _adaptive_finite(f, a, b, at, rt, ms)
    elif math.isfinite(a):
        value, err, ok = _integrate_half_line(f, a, at, rt, ms,
                                              cfg.truncation_radius)
    elif math.isfinite(b):
        value, err, ok = _integrate_half_line(lambda y: f(-np.asarray(y)), -b,
                                              at, rt, ms, cfg.truncation_radius)
    else:
        v1, e1, ok1 = _integrate_half_line(f, 0.0, 0.5 * at, rt, ms,
                                           cfg.truncation_radius)
        v2, e2, ok2 = _integrate_half_line(lambda y: f(-np.asarray(y)), 0.0,
                                           0.5 * at, rt, ms,
                                           cfg.truncation_radius)
        value, err, ok = v1 + v2, e1 + e2, ok1 and ok2

    if not ok and err > max(at, rt * _magnitude(value)):
        raise IntegrationFailure(
            f"quadrature did not converge on ({a}, {b}): "
            f"error estimate {err:.3e}",
            best_estimate=value, error_estimate=err)
    return value, err


def integrate_contour(f: Callable, offset: float,
                      cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Integrate f along the horizontal contour Im(nu) = offset, parametrized
    by the real part. f receives complex nu arrays."""
    if not math.isfinite(offset):
        raise InvalidParams(f"contour offset must be finite, got {offset}")

    def shifted(p):
        return f(np.asarray(p) + 1j * offset)

    return integrate_1d(shifted, (-math.inf, math.inf), cfg)


def gaussian_truncation_radius(decay_coeff: float, tol: float,
                               floor: float = 5.0, cap: float = 1000.0) -> float:
    """Radius beyond which exp(-decay_coeff * u^2) < tol."""
    if decay_coeff <= 0.0 or tol <= 0.0:
        raise InvalidParams("decay_coeff and tol must be positive")
    r = math.sqrt(max(math.log(1.0 / tol), 1.0) / decay_coeff)
    return min(max(r, floor), cap)


@dataclass(frozen=True)
class DoubleIntegralSpec:
    """Inputs for the rotated double integral

        J = int_0^inf dnu int_0^inf domega  decay(nu) * kernel(nu, omega)

    where kernel is antisymmetric: kernel(omega, nu) = -kernel(nu, omega).
    kernel and decay must be vectorized; kernel may return (n,) or (n, k).
    ``u_max`` truncates the rotated diagonal coordinate (caller derives it
    from the decay factor's Gaussian envelope); ``antisym_scale`` sets the
    magnitude against which the antisymmetry spot check is judged."""

    kernel: Callable
    decay: Callable
    u_max: float
    antisym_scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.u_max) and self.u_max > 0.0):
            raise InvalidParams(f"u_max must be positive, got {self.u_max}")


_SQRT_HALF = math.sqrt(0.5)


def _check_antisymmetry(dspec: DoubleIntegralSpec) -> None:
    u = dspec.u_max
    probes = [(0.13 * u, 0.41 * u), (0.29 * u, 0.77 * u), (0.52 * u, 0.68 * u)]
    nus = np.array([p[0] for p in probes])
    oms = np.array([p[1] for p in probes])
    forward = np.atleast_1d(np.asarray(dspec.kernel(nus, oms)))
    backward = np.atleast_1d(np.asarray(dspec.kernel(oms, nus)))
    resid = np.max(np.abs(forward + backward))
    scale = dspec.antisym_scale + np.max(np.abs(forward))
    if not resid <= 1e-8 * scale:
        raise ContractViolation(
            f"double-integral kernel is not antisymmetric: residual {resid:.3e} "
            f"against scale {scale:.3e}")


def integrate_double_antisym(dspec: DoubleIntegralSpec,
                             cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Evaluate the antisymmetric double integral after rotating to
    u = (nu+omega)/sqrt2, v = (omega-nu)/sqrt2:

        J = int_0^{u_max} du int_0^u dv H(u,v) * (G(u,v) - G(u,-v)),

    H(u,v) = kernel(nu, omega), G(u,v) = decay((u-v)/sqrt2). The difference of
    decay factors cancels the kernel's 1/v growth near the diagonal, so open
    Gauss nodes integrate it stably. Returns (value, error_estimate)."""
    _check_antisymmetry(dspec)
    at, rt, ms = cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions
    inner_tol = 0.5 * at / dspec.u_max
    inner_err_max = 0.0

    def inner(u: float):
        nonlocal inner_err_max

        def integrand(v):
            v = np.asarray(v)
            nu = (u - v) * _SQRT_HALF
            om = (u + v) * _SQRT_HALF
            dg = dspec.decay(nu) - dspec.decay(om)
            h = np.asarray(dspec.kernel(nu, om))
            if h.ndim == 2:
                return h * dg[:, None]
            return h * dg

        value, err, ok = _adaptive_finite(integrand, 0.0, u, inner_tol, rt, ms)
        if not ok:
            raise IntegrationFailure(
                f"inner rotated integral did not converge at u={u:.6g}",
                best_estimate=value, error_estimate=err)
        inner_err_max = max(inner_err_max, err)
        return value

    def outer(us):
        us = np.atleast_1d(np.asarray(us, dtype=float))
        rows = [inner(float(u)) for u in us]
        return np.stack([np.atleast_1d(np.asarray(r)) for r in rows])

    value, err, ok = _adaptive_finite(outer, 0.0, dspec.u_max, 0.5 * at, rt, ms)
    total_err = err + inner_err_max * dspec.u_max
    value = np.asarray(value)
    if value.shape == (1,):
        value = value[0]
    if not ok:
        raise IntegrationFailure(
            "outer rotated integral did not converge",
            best_estimate=value, error_estimate=total_err)
    return value, total_err


def fixed_gauss(f: Callable, a: float, b: float, n: int = 64,
                panels: int = 1):
    """Non-adaptive composite Gauss rule; used for smooth transforms where the
    node count is chosen from a known oscillation budget."""
    x, w = _gl(n)
    edges = np.linspace(a, b, panels + 1)
    total = None
    for i in range(panels):
        mid = 0.5 * (edges[i] + edges[i + 1])
        half = 0.5 * (edges[i + 1] - edges[i])
        vals = np.asarray(f(mid + half * x))
        part = half * np.tensordot(w, vals, axes=(0, 0))
        total = part if total is None else total + part
    return total
