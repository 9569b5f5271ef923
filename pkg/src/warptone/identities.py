"""Numerical verification of the radial submersion calculus.

The warped-product reduction rests on three pointwise identities
relating total-space divergences and Laplacians to their base
counterparts plus a mean-curvature correction.  Each check evaluates
the two sides through deliberately different code paths — the left
side by symbolic differentiation of the assembled product expression,
the right side through the model helpers — so a residual isolates a
formula error rather than echoing one implementation twice.

The mean-curvature sign is the one piece of the calculus the source
formulas leave ambiguous; resolve_sign_convention adjudicates it by
running the divergence identity under both signs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import SubmersionModel, _log_ratio, _require_fiber, fiber_volume, mean_curvature_radial
from .profiles import Expr, Profile, const, constant_profile, differentiate, eval_expr, mul, pow_

__all__ = [
    "ResidualReport",
    "SignResolution",
    "check_divergence_identity",
    "check_laplacian_lift",
    "check_grad_average",
    "resolve_sign_convention",
]

DEFAULT_WINDOW = (0.05, 10.0)
DEFAULT_SAMPLES = 200
DEFAULT_TOLERANCE = 1e-7


@dataclass(frozen=True)
class ResidualReport:
    """Worst-case residual of one identity over a sample grid."""

    check: str
    max_residual: float
    argmax_t: float
    samples: int
    tolerance: float
    passed: bool

    def __post_init__(self):
        if self.passed != (self.max_residual < self.tolerance):
            raise ValueError("pass flag inconsistent with residual/tolerance")


def _report(check: str, ts: np.ndarray, residual: np.ndarray,
            tolerance: float) -> ResidualReport:
    i = int(np.argmax(residual))
    worst = float(residual[i])
    return ResidualReport(check=check, max_residual=worst, argmax_t=float(ts[i]),
                          samples=ts.size, tolerance=tolerance,
                          passed=bool(worst < tolerance))


def _sample_grid(window: tuple, samples: int) -> np.ndarray:
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise ValueError("sample window must satisfy 0 < lo < hi")
    if samples < 2:
        raise ValueError("need at least two samples")
    return np.linspace(lo, hi, samples)


def _power_expr(base: Expr, k: int) -> Expr:
    return base if k == 1 else pow_(base, const(float(k)))


def _base_weight_expr(model: SubmersionModel) -> Expr:
    return _power_expr(model.base.f.expr, model.base.n - 1)


def _full_weight_expr(model: SubmersionModel) -> Expr:
    w = _base_weight_expr(model)
    if model.has_fiber:
        w = mul(w, _power_expr(model.fiber.psi.expr, model.fiber.m))
    return w


def _weighted_divergence(weight: Expr, field: Expr, ts: np.ndarray) -> np.ndarray:
    """(weight * field)' / weight, differentiated symbolically, read in log space."""
    return np.asarray(_log_ratio(differentiate(mul(weight, field)), weight, ts))


def check_divergence_identity(model: SubmersionModel, a: Profile,
                              samples: int = DEFAULT_SAMPLES,
                              window: tuple = DEFAULT_WINDOW,
                              tolerance: float = DEFAULT_TOLERANCE,
                              sign: int = +1) -> ResidualReport:
    """Divergence lift: (w a)'/w = (f^{n-1} a)'/f^{n-1} + a * (fiber term).

    With minimal fibers the correction vanishes and the two sides agree
    to round-off.  The sign argument exists so the convention test can
    demonstrate that the flipped correction is loudly wrong.
    """
    _require_fiber(model)
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    ts = _sample_grid(window, samples)
    lhs = _weighted_divergence(_full_weight_expr(model), a.expr, ts)
    rhs = (_weighted_divergence(_base_weight_expr(model), a.expr, ts)
           + sign * np.asarray(a.value(ts)) * np.asarray(mean_curvature_radial(model, ts)))
    return _report("divergence", ts, np.abs(lhs - rhs), tolerance)


def check_laplacian_lift(model: SubmersionModel, phi: Profile,
                         samples: int = DEFAULT_SAMPLES,
                         window: tuple = DEFAULT_WINDOW,
                         tolerance: float = DEFAULT_TOLERANCE) -> ResidualReport:
    """Laplacian lift: apply the divergence identity to the gradient field.

    For phi(t) = t this reproduces the tail-driving function h, since the
    lifted Laplacian of the distance function is exactly the log-weight
    derivative.
    """
    ts = _sample_grid(window, samples)
    lhs = _weighted_divergence(_full_weight_expr(model), phi.d1, ts)
    rhs = _weighted_divergence(_base_weight_expr(model), phi.d1, ts)
    if model.has_fiber:
        rhs = rhs + np.asarray(phi.derivative(ts)) * np.asarray(mean_curvature_radial(model, ts))
    return _report("laplacian-lift", ts, np.abs(lhs - rhs), tolerance)


def check_grad_average(model: SubmersionModel, phi: Profile,
                       samples: int = DEFAULT_SAMPLES,
                       window: tuple = DEFAULT_WINDOW,
                       tolerance: float = DEFAULT_TOLERANCE) -> ResidualReport:
    """Fiber-average derivative: d/dt[vol(F_t) phi] = vol(F_t)[phi' + phi * H_rad].

    phi == 1 reduces to the first-variation formula for the fiber
    volume.  Both sides stay at fiber-volume scale, so the check runs in
    plain arithmetic (profiles that overflow it would fail model
    validation long before reaching here).
    """
    fib = _require_fiber(model)
    ts = _sample_grid(window, samples)
    vol_expr = _power_expr(fib.psi.expr, fib.m)
    lhs = fib.unit_fiber_volume * np.asarray(eval_expr(differentiate(mul(vol_expr, phi.expr)), ts))
    rhs = np.asarray(fiber_volume(model, ts)) * (
        np.asarray(phi.derivative(ts))
        + np.asarray(phi.value(ts)) * np.asarray(mean_curvature_radial(model, ts)))
    return _report("grad-average", ts, np.abs(lhs - rhs), tolerance)


@dataclass(frozen=True)
class SignResolution:
    """Which mean-curvature sign makes the divergence identity hold.

    degenerate means the model cannot distinguish the signs (constant
    warping); the conventional +1 is returned with both residual
    reports attached as evidence.
    """

    sign: int
    degenerate: bool
    plus: ResidualReport
    minus: ResidualReport


def resolve_sign_convention(model: SubmersionModel,
                            samples: int = DEFAULT_SAMPLES,
                            window: tuple = DEFAULT_WINDOW,
                            tolerance: float = DEFAULT_TOLERANCE) -> SignResolution:
    """Adjudicate the fiber mean-curvature sign on a concrete model.

    Runs the divergence identity with the correction added and
    subtracted; the accepted sign must pass while the other misses by
    at least 10x the tolerance, unless the model is sign-degenerate.
    """
    one = constant_profile(1.0)
    plus = check_divergence_identity(model, one, samples=samples, window=window,
                                     tolerance=tolerance, sign=+1)
    minus = check_divergence_identity(model, one, samples=samples, window=window,
                                      tolerance=tolerance, sign=-1)
    if plus.passed and minus.passed:
        return SignResolution(sign=+1, degenerate=True, plus=plus, minus=minus)
    if plus.passed and minus.max_residual > 10.0 * tolerance:
        return SignResolution(sign=+1, degenerate=False, plus=plus, minus=minus)
    if minus.passed and plus.max_residual > 10.0 * tolerance:
        return SignResolution(sign=-1, degenerate=False, plus=plus, minus=minus)
    raise ValueError("sign resolution inconclusive: "
                     f"residuals +{plus.max_residual:.3e} / -{minus.max_residual:.3e}")
