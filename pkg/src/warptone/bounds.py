"""Lower bounds for fundamental tones from radial vector fields.

Two estimators, both for radial fields X = a(t) d/dt with divergence
div X = a' + a h (h the log-derivative of the volume weight):

* divergence bound:      lam* >= (1/4) (inf div X / sup |a|)^2,
  valid when inf div X > 0 (otherwise reported as a typed no-bound);
* log-derivative bound:  lam* >= inf (div X - a^2),
  always valid, sharp when a = -u'/u for the ground state u.

Infima and suprema are sampled on a uniform grid (default 1e4 points,
endpoints included).  For unbounded domains the window ends at a finite
horizon and, when the last decade of samples decreases monotonically, an
Aitken delta-squared extrapolation of three tail points supplies the limit
candidate (e.g. coth -> 1); the smaller of sampled minimum and candidate is
used.  The eigenfield -u'/u blows up where u vanishes, so it is built only on
the region |u| >= cutoff * max|u|, and its bounds are certified on that
shrunken window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import BaseModel, SubmersionModel, fiber_volume, h_function
from .profiles import DomainError, Profile
from .sturm import RadialDomain
from .tone import ToneResult

__all__ = [
    "RadialField", "BoundReport", "VolumeRatioReport",
    "unit_radial_field", "divergence_bound", "logderivative_bound",
    "eigenfield_from_tone", "volume_ratio_check", "DEFAULT_RESOLUTION",
    "DEFAULT_HORIZON", "EIGENFIELD_CUTOFF",
]

DEFAULT_RESOLUTION = 10_000
DEFAULT_HORIZON = 50.0
EIGENFIELD_CUTOFF = 0.05


@dataclass(frozen=True)
class RadialField:
    """X = a(t) d/dt with its derivative a'(t); both vectorized callables.

    ``support`` optionally restricts where the field is defined (eigenfields
    are only valid away from the zeros of u).
    """

    a: Callable
    da: Callable
    label: str = "X"
    support: tuple[float, float] | None = None

    @staticmethod
    def from_profile(p: Profile, label: str | None = None) -> "RadialField":
        return RadialField(p.value, p.derivative, label or p.source)

    @staticmethod
    def constant(c: float, label: str | None = None) -> "RadialField":
        return RadialField(lambda t: np.full_like(np.asarray(t, dtype=float), c),
                           lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                           label or f"{c}*d/dt")


def unit_radial_field() -> RadialField:
    """X = d/dt."""
    return RadialField.constant(1.0, label="d/dt")


@dataclass(frozen=True)
class BoundReport:
    kind: str
    bound: float | None
    hypothesis_ok: bool
    witnesses: dict
    resolution: int
    window: tuple[float, float]


@dataclass(frozen=True)
class VolumeRatioReport:
    passed: bool
    inf_volume: float
    sup_volume: float
    lhs: float      # inf vol * lam(total)
    rhs: float      # sup vol * lam(base)
    slack: float


def _endpoint_limit(func, t_end: float, nearest: np.ndarray):
    """Value to use at a window endpoint.

    ``nearest`` holds the three interior samples closest to the endpoint,
    nearest first.  The raw evaluation is kept when it agrees with the
    quadratic extrapolation of those samples; a singular endpoint (evaluation
    error, or a blow-up that swamps the extrapolation, like cot at pi) is
    replaced by the extrapolated limit.
    """
    v1, v2, v3 = (float(x) for x in nearest)
    extrap = 3.0 * v1 - 3.0 * v2 + v3
    try:
        raw = float(func(t_end))
    except (DomainError, ZeroDivisionError):
        raw = math.nan
    if not math.isfinite(raw):
        return extrap
    spread = max(abs(v1 - v2), abs(v2 - v3))
    if abs(raw - extrap) <= 1e-2 * max(abs(raw), abs(extrap)) + 10.0 * spread:
        return raw
    return extrap


def _window_samples(func, domain: RadialDomain, horizon: float, resolution: int):
    """Sample func over the domain: interior grid plus endpoint limits.

    Unbounded domains are cut at the horizon; the cut end is an ordinary
    sample (the tail extrapolation in _tail_infimum handles the limit), while
    true boundary endpoints get the limit analysis of _endpoint_limit.
    """
    lo, hi = domain.a, domain.b
    unbounded = not math.isfinite(hi)
    if unbounded:
        hi = max(horizon, lo + 1.0)
    ts = np.linspace(lo, hi, resolution)
    body_t = ts[1:] if unbounded else ts[1:-1]
    body_v = np.asarray(func(body_t), dtype=float)
    left = _endpoint_limit(func, float(ts[0]), body_v[:3])
    t_parts = [np.array([ts[0]]), body_t]
    v_parts = [np.array([left]), body_v]
    if not unbounded:
        right = _endpoint_limit(func, float(ts[-1]), body_v[-1:-4:-1])
        t_parts.append(np.array([ts[-1]]))
        v_parts.append(np.array([right]))
    return np.concatenate(t_parts), np.concatenate(v_parts), unbounded


def _h_values(model, ts: np.ndarray) -> np.ndarray:
    if isinstance(model, BaseModel):
        model = SubmersionModel(model)
    if isinstance(model, SubmersionModel):
        return h_function(model, ts)
    # explicit log-weight callable: differentiate numerically
    step = 1e-6
    return (np.asarray(model(ts + step)) - np.asarray(model(ts - step))) / (2 * step)


def _tail_infimum(values: np.ndarray, unbounded: bool):
    """Sampled infimum, refined by tail extrapolation on unbounded windows."""
    idx = int(np.argmin(values))
    inf_sampled = float(values[idx])
    extrapolated = None
    if unbounded and values.size >= 20:
        j = max(values.size // 20, 1)
        tail = values[-(2 * j + 1):]
        if np.all(np.diff(tail) <= 0.0):      # still decreasing at the horizon
            y0, y1, y2 = values[-1 - 2 * j], values[-1 - j], values[-1]
            d1, d2 = y1 - y0, y2 - y1
            denom = d2 - d1
            if denom != 0.0:
                cand = y2 - d2 * d2 / denom   # Aitken delta-squared
                if math.isfinite(cand) and cand < inf_sampled:
                    extrapolated = float(cand)
    if extrapolated is not None:
        return extrapolated, idx, True
    return inf_sampled, idx, False


def divergence_bound(model, domain: RadialDomain, field: RadialField,
                     resolution: int = DEFAULT_RESOLUTION,
                     horizon: float = DEFAULT_HORIZON) -> BoundReport:
    """lam* >= (1/4) (inf div X / sup |a|)^2, when inf div X > 0."""
    def div_of(t):
        t = np.asarray(t, dtype=float)
        return field.da(t) + np.asarray(field.a(t), dtype=float) * _h_values(model, t)

    def mag_of(t):
        return np.abs(field.a(np.asarray(t, dtype=float)))

    ts, div, unbounded = _window_samples(div_of, domain, horizon, resolution)
    _, mag, _ = _window_samples(mag_of, domain, horizon, resolution)
    if not (np.all(np.isfinite(div)) and np.all(np.isfinite(mag))):
        raise DomainError("field or divergence not finite on the sampled window")
    inf_div, _, extrapolated = _tail_infimum(div, unbounded)
    sup_a = float(np.max(mag))
    witnesses = {"inf_div": inf_div, "sup_field": sup_a,
                 "tail_extrapolated": extrapolated}
    if inf_div <= 0.0 or sup_a == 0.0:
        return BoundReport("divergence", None, False, witnesses,
                           resolution, (float(ts[0]), float(ts[-1])))
    bound = 0.25 * (inf_div / sup_a) ** 2
    return BoundReport("divergence", bound, True, witnesses,
                       resolution, (float(ts[0]), float(ts[-1])))


def logderivative_bound(model, domain: RadialDomain, field: RadialField,
                        resolution: int = DEFAULT_RESOLUTION,
                        horizon: float = DEFAULT_HORIZON) -> BoundReport:
    """lam* >= inf (div X - |a|^2); may be <= 0, still a valid bound."""
    def g_of(t):
        t = np.asarray(t, dtype=float)
        a_vals = np.asarray(field.a(t), dtype=float)
        return field.da(t) + a_vals * _h_values(model, t) - a_vals * a_vals

    ts, g, unbounded = _window_samples(g_of, domain, horizon, resolution)
    if not np.all(np.isfinite(g)):
        raise DomainError("div X - |X|^2 is not finite on the sampled window")
    bound, idx, extrapolated = _tail_infimum(g, unbounded)
    witnesses = {"inf_value": bound, "argmin_t": float(ts[idx]),
                 "tail_extrapolated": extrapolated}
    return BoundReport("log-derivative", bound, True, witnesses,
                       resolution, (float(ts[0]), float(ts[-1])))


def eigenfield_from_tone(result: ToneResult,
                         cutoff: float = EIGENFIELD_CUTOFF) -> RadialField:
    """The optimal field a = -u'/u of the computed ground state.

    Built on the largest window where |u| >= cutoff * max|u| (the field has
    poles at the Dirichlet endpoints); the window is recorded in ``support``.
    """
    u = np.asarray(result.eigenfunction, dtype=float)
    t = np.asarray(result.nodes, dtype=float)
    peak = float(np.max(np.abs(u)))
    keep = np.abs(u) >= cutoff * peak
    # inset by one node so every difference below is a central one
    i0 = max(int(np.argmax(keep)), 1)
    i1 = min(int(len(keep) - 1 - np.argmax(keep[::-1])), len(u) - 2)
    if i1 <= i0:
        raise ValueError("cutoff leaves no interior window")
    uu = u[i0:i1 + 1]
    if not (np.all(uu > 0.0) or np.all(uu < 0.0)):
        raise ValueError("eigenfunction changes sign; not a ground state")
    dt = float(t[1] - t[0])
    u_left, u_right = u[i0 - 1:i1], u[i0 + 1:i1 + 2]
    du = (u_right - u_left) / (2.0 * dt)
    d2u = (u_right - 2.0 * uu + u_left) / (dt * dt)
    a_vals = -du / uu
    # product rule: a' = -u''/u + (u'/u)^2, second differences of u directly
    da_vals = -d2u / uu + a_vals * a_vals
    tt = t[i0:i1 + 1]

    def a_of(t_query):
        return np.interp(np.asarray(t_query, dtype=float), tt, a_vals)

    def da_of(t_query):
        return np.interp(np.asarray(t_query, dtype=float), tt, da_vals)

    return RadialField(a_of, da_of, label="-u'/u",
                       support=(float(tt[0]), float(tt[-1])))


def volume_ratio_check(model: SubmersionModel, domain: RadialDomain,
                       tone_base: ToneResult, tone_total: ToneResult,
                       resolution: int = DEFAULT_RESOLUTION,
                       horizon: float = DEFAULT_HORIZON) -> VolumeRatioReport:
    """[inf vol fiber] lam*(lifted) <= [sup vol fiber] lam*(base), with slack
    for the two tone error estimates."""
    if model.fiber is None:
        raise ValueError("volume ratio check requires a fiber")
    _, vols, _ = _window_samples(lambda t: fiber_volume(model, t),
                                 domain, horizon, resolution)
    inf_v, sup_v = float(np.min(vols)), float(np.max(vols))
    lhs = inf_v * tone_total.lam
    rhs = sup_v * tone_base.lam
    slack = (inf_v * tone_total.error_estimate + sup_v * tone_base.error_estimate
             + 1e-10 * max(abs(lhs), abs(rhs), 1.0))
    return VolumeRatioReport(passed=bool(lhs <= rhs + slack),
                             inf_volume=inf_v, sup_volume=sup_v,
                             lhs=lhs, rhs=rhs, slack=slack)
