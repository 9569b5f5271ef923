"""Rotationally symmetric base manifolds and warped-product submersions.

A base manifold is (N, g) of dimension n with a pole, metric
dt^2 + f(t)^2 g_{S^{n-1}} in radial coordinates.  On top of it an optional
fiber bundle M = N x_psi F with compact fiber F of dimension m, warped by
psi(t).  Everything the spectral machinery needs reduces to radial scalar
fields:

    radial_laplacian   (n-1) f'/f          (Laplacian of the distance function)
    radial_curvature   -f''/f              (sectional curvature of radial planes)
    mean_curvature     m psi'/psi          (radial mean-curvature coefficient)
    volume_density     w = f^{n-1} psi^m
    h_function         (n-1) f'/f + m psi'/psi   = (log w)'
    l_function         (n-1) f'/f - |m psi'/psi|

Sign convention: the divergence identity div(X lifted) = div_N(X) + <X, H>
with weight w = f^{n-1} psi^m forces the radial mean-curvature coefficient to
be +m psi'/psi; the identities module checks this numerically.

Validation is numerical: positivity of f and psi is sampled (through the
log-magnitude evaluation path, since the interesting profiles overflow plain
float64 well inside the sampling window), and pole smoothness f(0)=0, f'(0)=1
is checked at t = 1e-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .profiles import DomainError, Profile, constant_profile, eval_log

__all__ = [
    "BaseModel", "FiberModel", "SubmersionModel", "ModelValidationError",
    "circle_fiber", "base_mode_eigenvalue",
    "radial_laplacian", "radial_curvature", "mean_curvature_radial",
    "volume_density", "log_volume_density", "log_weight_parts",
    "fiber_volume", "h_function", "l_function", "mode_potential",
]

T_CHECK = 50.0
N_CHECK = 10_000
POLE_EPS = 1e-6
POLE_TOL = 1e-8


class ModelValidationError(ValueError):
    pass


def _check_positive(profile: Profile, name: str, lo: float, hi: float):
    ts = np.linspace(lo, hi, N_CHECK)
    try:
        sign, _ = eval_log(profile.expr, ts)
    except DomainError as ex:
        raise ModelValidationError(f"{name} not evaluable on ({lo}, {hi}]: {ex}") from ex
    if np.any(sign <= 0.0):
        bad = ts[np.asarray(sign) <= 0.0][0]
        raise ModelValidationError(f"{name} must be positive; fails near t={bad:.6g}")


@dataclass(frozen=True)
class BaseModel:
    """Rotationally symmetric base of dimension n with warp profile f."""

    n: int
    f: Profile
    pole_label: str = "p0"

    def __post_init__(self):
        if self.n < 2:
            raise ModelValidationError("base dimension must be >= 2")
        _check_positive(self.f, "base profile f", POLE_EPS, T_CHECK)
        # smooth pole: f(0)=0, f'(0)=1, checked just off the origin
        try:
            v = self.f.value(POLE_EPS)
            d = self.f.derivative(POLE_EPS)
        except DomainError as ex:
            raise ModelValidationError(f"base profile f not evaluable at the pole: {ex}") from ex
        if abs(v - POLE_EPS) > POLE_TOL or abs(d - 1.0) > POLE_TOL:
            raise ModelValidationError(
                f"base profile f is not pole-regular: f({POLE_EPS})={v!r}, f'({POLE_EPS})={d!r}")


@dataclass(frozen=True)
class FiberModel:
    """Compact fiber of dimension m with warp profile psi.

    ``fiber_mode_eigenvalues`` is the spectrum of the unit fiber listed with
    multiplicity, nondecreasing, starting at 0.
    """

    m: int
    psi: Profile
    unit_fiber_volume: float = 2.0 * math.pi
    fiber_mode_eigenvalues: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.m < 1:
            raise ModelValidationError("fiber dimension must be >= 1")
        if self.unit_fiber_volume <= 0:
            raise ModelValidationError("unit fiber volume must be positive")
        ev = self.fiber_mode_eigenvalues
        if not ev or ev[0] != 0.0:
            raise ModelValidationError("fiber mode eigenvalues must start at 0")
        if any(b < a for a, b in zip(ev, ev[1:])):
            raise ModelValidationError("fiber mode eigenvalues must be nondecreasing")
        _check_positive(self.psi, "fiber warp psi", 0.0, T_CHECK)


def circle_fiber(psi: Profile | float = 1.0, max_mode: int = 8) -> FiberModel:
    """Circle fiber of circumference 2*pi: eigenvalues 0, 1, 1, 4, 4, 9, 9, ..."""
    if not isinstance(psi, Profile):
        psi = constant_profile(float(psi))
    modes = [0.0]
    for j in range(1, max_mode + 1):
        modes += [float(j * j)] * 2
    return FiberModel(m=1, psi=psi, unit_fiber_volume=2.0 * math.pi,
                      fiber_mode_eigenvalues=tuple(modes))


@dataclass(frozen=True)
class SubmersionModel:
    """Base manifold with an optional warped fiber (absent = base alone)."""

    base: BaseModel
    fiber: FiberModel | None = None

    @property
    def total_dimension(self) -> int:
        return self.base.n + (self.fiber.m if self.fiber else 0)

    @property
    def has_fiber(self) -> bool:
        return self.fiber is not None


def base_mode_eigenvalue(n: int, k: int) -> float:
    """k-th eigenvalue of the round unit sphere S^{n-1}: k(k+n-2)."""
    return float(k * (k + n - 2))


def _require_fiber(model: SubmersionModel) -> FiberModel:
    if model.fiber is None:
        raise ValueError("model has no fiber")
    return model.fiber


def _log_ratio(num_expr, den_expr, t):
    """num/den through (sign, log) pairs: finite whenever the ratio is,
    even where numerator and denominator separately overflow float64."""
    arr = np.asarray(t, dtype=float)
    sn, ln = eval_log(num_expr, arr)
    sd, ld = eval_log(den_expr, arr)
    if np.any(np.asarray(sd) == 0.0):
        raise DomainError("denominator profile vanishes")
    with np.errstate(over="raise"):
        try:
            out = np.asarray(sn) * np.asarray(sd) * np.exp(np.asarray(ln) - np.asarray(ld))
        except FloatingPointError as ex:
            raise DomainError("profile ratio overflow") from ex
    return float(out) if arr.ndim == 0 else out


def radial_laplacian(base: BaseModel, t):
    """(n-1) f'/f: the Laplacian of the radial distance function."""
    return (base.n - 1) * _log_ratio(base.f.d1, base.f.expr, t)


def radial_curvature(base: BaseModel, t):
    """-f''/f: sectional curvature of planes containing the radial direction."""
    return -_log_ratio(base.f.d2, base.f.expr, t)


def mean_curvature_radial(model: SubmersionModel, t):
    """m psi'/psi: radial coefficient of the fibers' mean-curvature field."""
    fib = _require_fiber(model)
    return fib.m * _log_ratio(fib.psi.d1, fib.psi.expr, t)


def volume_density(model: SubmersionModel, t):
    """w(t) = f^{n-1} psi^m.  Overflows for fast-growing profiles at large t;
    use log_volume_density past moderate radii."""
    base = model.base
    w = base.f.value(t) ** (base.n - 1)
    if model.fiber is not None:
        w = w * model.fiber.psi.value(t) ** model.fiber.m
    return w


def log_weight_parts(model: SubmersionModel, t):
    """[(exponent, log profile value)] pairs making up log volume_density.

    Kept separate (rather than pre-summed) so that downstream differences of
    log-weights cancel component by component: a constant psi then contributes
    exactly zero to every difference, bit for bit.
    """
    base = model.base
    sf, lf = eval_log(base.f.expr, t)
    if np.any(np.asarray(sf) <= 0.0):
        raise DomainError("nonpositive weight sample (base profile f)")
    parts = [(float(base.n - 1), lf)]
    if model.fiber is not None:
        sp, lpsi = eval_log(model.fiber.psi.expr, t)
        if np.any(np.asarray(sp) <= 0.0):
            raise DomainError("nonpositive weight sample (fiber warp psi)")
        parts.append((float(model.fiber.m), lpsi))
    return parts


def log_volume_density(model: SubmersionModel, t):
    """log w(t) = (n-1) log f + m log psi, stable at any radius."""
    parts = log_weight_parts(model, t)
    out = parts[0][0] * parts[0][1]
    for c, l in parts[1:]:
        out = out + c * l
    return out


def fiber_volume(model: SubmersionModel, t):
    """Volume of the fiber over a point at radius t: unit volume times psi^m."""
    fib = _require_fiber(model)
    _, lpsi = eval_log(fib.psi.expr, t)
    return fib.unit_fiber_volume * np.exp(fib.m * lpsi)


def h_function(model: SubmersionModel, t):
    """h = (n-1) f'/f + m psi'/psi, the log-derivative of volume_density."""
    out = radial_laplacian(model.base, t)
    if model.fiber is not None:
        out = out + mean_curvature_radial(model, t)
    return out


def l_function(model: SubmersionModel, t):
    """l = (n-1) f'/f - |m psi'/psi| (worst-case drift over the fiber)."""
    out = radial_laplacian(model.base, t)
    if model.fiber is not None:
        out = out - np.abs(mean_curvature_radial(model, t))
    return out


def mode_potential(model: SubmersionModel, t, k: int = 0, j: int = 0):
    """Angular potential mu_k/f^2 + nu_j/psi^2 for separated modes.

    k indexes the base sphere S^{n-1} modes (eigenvalue k(k+n-2)), j indexes
    ``fiber_mode_eigenvalues``.  Computed through log-magnitudes so that huge
    f only underflows the potential to zero instead of overflowing f^2.
    """
    arr = np.asarray(t, dtype=float)
    out = np.zeros_like(arr)
    mu = base_mode_eigenvalue(model.base.n, k)
    if mu != 0.0:
        _, lf = eval_log(model.base.f.expr, arr)
        out = out + np.exp(math.log(mu) - 2.0 * lf)
    if j != 0:
        fib = _require_fiber(model)
        if j >= len(fib.fiber_mode_eigenvalues):
            raise ValueError(f"fiber mode index {j} out of range")
        nu = fib.fiber_mode_eigenvalues[j]
        if nu != 0.0:
            _, lpsi = eval_log(fib.psi.expr, arr)
            out = out + np.exp(math.log(nu) - 2.0 * lpsi)
    if not np.all(np.isfinite(out)):
        raise DomainError("mode potential overflow")
    return float(out) if arr.ndim == 0 else out
