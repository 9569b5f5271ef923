"""Essential-spectrum estimation from exterior fundamental tones.

The bottom of the essential spectrum of a complete manifold equals the
supremum, over compact sets K, of the fundamental tone of the exterior
M \\ K.  Numerically we approximate each exterior tone by Dirichlet
truncations [R, R_cut] with R_cut driven upward until the values are
Cauchy, then extrapolate the resulting R-sequence.  Truncation always
over-estimates the exterior tone and the truncated values decrease in
R_cut, so the last sweep value together with its Cauchy residual gives
a defensible estimate-with-error.

The same machinery decides discreteness: when the exterior tones blow
up instead of stabilising, the spectrum below any threshold is finite.
Tail certificates package the sufficient conditions for that blow-up
(properness of the log-weight derivative or of its curvature-robust
variant) into an auditable verdict + bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .models import SubmersionModel, h_function, l_function, fiber_volume, log_volume_density
from .sturm import RadialDomain
from .tone import DEFAULT_GRIDS, ToneResult, fundamental_tone, total_space_tone

__all__ = [
    "TruncationPolicy",
    "SweepPoint",
    "EssEstimate",
    "Certificate",
    "TransferReport",
    "BrooksReport",
    "ess_bottom_estimate",
    "discreteness_certificate",
    "tail_certificate",
    "submersion_transfer",
    "brooks_growth",
]

# Verdict vocabulary shared by every certificate producer.
CERTIFIED = "certified-to-horizon"
NOT_CERTIFIED = "not-certified"
HYPOTHESIS_FAILED = "hypothesis-failed"


@dataclass(frozen=True)
class TruncationPolicy:
    """Knobs for the exterior-tone truncation sweeps.

    The cut radius sequence for a shell starting at R is
    R + l0 * growth**k, k = 0 .. max_steps.  A sweep stops once two
    consecutive values agree to max(stop_rtol * value, stop_atol);
    running out of steps is reported, not raised.
    """

    l0: float = 15.0
    growth: float = 2.0
    stop_rtol: float = 2e-3
    stop_atol: float = 1e-4
    max_steps: int = 6
    divergence_threshold: float = 1e3
    grids: Sequence[int] = DEFAULT_GRIDS

    def cut_radii(self, r: float) -> list[float]:
        return [r + self.l0 * self.growth**k for k in range(self.max_steps + 1)]


@dataclass(frozen=True)
class SweepPoint:
    """One truncation evaluation: tone of [r, r_cut] with its solver error."""

    r_cut: float
    lam: float
    err: float


@dataclass(frozen=True)
class EssEstimate:
    """Exterior-tone table and the extrapolated essential bottom.

    lam_values[i] is the converged (or last, if the budget ran out)
    truncation value for the exterior of radius r_values[i];
    point_errors[i] combines the Cauchy residual of the sweep with the
    discretization error estimate of the final solve.  bottom is None
    exactly when the sweep was flagged divergent (discrete spectrum).
    """

    r_values: tuple
    lam_values: tuple
    point_errors: tuple
    converged: tuple
    sweeps: tuple
    bottom: Optional[float]
    bottom_error: Optional[float]
    diverged: bool
    policy: TruncationPolicy

    def __post_init__(self):
        k = len(self.r_values)
        if not (len(self.lam_values) == len(self.point_errors) == len(self.converged) == len(self.sweeps) == k):
            raise ValueError("ragged estimate table")
        if self.diverged and self.bottom is not None:
            raise ValueError("divergent estimate cannot carry a bottom value")


@dataclass(frozen=True)
class Certificate:
    """Outcome of a tail test for discreteness (or, for the growth kind,
    for non-emptiness of the essential spectrum).

    bound is present exactly when verdict == certified-to-horizon and
    always equals (1/4) * (inf of the driving function on the certified
    tail)**2.  For the proper/curvature kinds that is a lower bound for
    exterior tones; for the growth kind the same formula applied to the
    volume-entropy series is an upper bound for the essential bottom.
    """

    kind: str
    verdict: str
    bound: Optional[float]
    horizon: float
    r_star: Optional[float]
    witnesses: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.verdict == CERTIFIED) != (self.bound is not None):
            raise ValueError("bound must be attached exactly for certified verdicts")

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED


def _sweep_one(model: SubmersionModel, r: float, policy: TruncationPolicy,
               tol: float) -> tuple:
    """Run one R_cut sweep; returns (points, value, error, converged)."""
    points = []
    prev = None
    converged = False
    for r_cut in policy.cut_radii(r):
        domain = RadialDomain(r, r_cut, "dirichlet")
        if model.has_fiber:
            res = total_space_tone(model, domain, grids=policy.grids, tol=tol)
        else:
            res = fundamental_tone(model, domain, grids=policy.grids, tol=tol)
        points.append(SweepPoint(r_cut=r_cut, lam=res.lam, err=res.error_estimate))
        if prev is not None:
            residual = abs(res.lam - prev)
            if residual <= max(policy.stop_rtol * abs(res.lam), policy.stop_atol):
                converged = True
                break
        prev = res.lam
    last = points[-1]
    cauchy = abs(points[-1].lam - points[-2].lam) if len(points) > 1 else math.inf
    return tuple(points), last.lam, cauchy + last.err, converged


def _extrapolate_increasing(values: Sequence[float]) -> float:
    """Aitken acceleration of a monotone sequence; falls back to the last value."""
    if len(values) >= 3:
        v1, v2, v3 = values[-3], values[-2], values[-1]
        denom = (v3 - v2) - (v2 - v1)
        if denom != 0.0:
            cand = v3 - (v3 - v2) ** 2 / denom
            if math.isfinite(cand) and cand >= v3 - abs(v3) * 1e-12:
                return cand
    return float(values[-1])


def ess_bottom_estimate(model: SubmersionModel, r_values: Sequence[float],
                        policy: Optional[TruncationPolicy] = None,
                        tol: float = 1e-10) -> EssEstimate:
    """Estimate the bottom of the essential spectrum of the model.

    For each R in r_values the exterior tone lambda*([R, oo)) is
    approximated by a Dirichlet truncation sweep.  The resulting
    R-sequence is nondecreasing (up to solver error); its limit is the
    essential bottom.  If the last three values all exceed the
    divergence threshold and still increase, the exterior tones are
    unbounded and the spectrum is reported as discrete (bottom = None).
    """
    policy = policy or TruncationPolicy()
    rs = [float(r) for r in r_values]
    if len(rs) < 1 or any(r <= 0 for r in rs) or sorted(rs) != rs:
        raise ValueError("r_values must be positive and increasing")

    sweeps, lams, errs, flags = [], [], [], []
    for r in rs:
        pts, lam, err, ok = _sweep_one(model, r, policy, tol)
        sweeps.append(pts)
        lams.append(lam)
        errs.append(err)
        flags.append(ok)

    diverged = False
    if len(lams) >= 3:
        tail = lams[-3:]
        if all(v > policy.divergence_threshold for v in tail) and tail[0] < tail[1] < tail[2]:
            diverged = True

    if diverged:
        bottom = None
        bottom_error = None
    else:
        bottom = _extrapolate_increasing(lams)
        # the R-sequence's own Cauchy residual is the honest error floor:
        # a still-climbing sequence must not masquerade as a converged bottom
        r_residual = abs(lams[-1] - lams[-2]) if len(lams) > 1 else 0.0
        bottom_error = abs(bottom - lams[-1]) + errs[-1] + r_residual

    return EssEstimate(
        r_values=tuple(rs),
        lam_values=tuple(lams),
        point_errors=tuple(errs),
        converged=tuple(flags),
        sweeps=tuple(sweeps),
        bottom=bottom,
        bottom_error=bottom_error,
        diverged=diverged,
        policy=policy,
    )


# ---------------------------------------------------------------------------
# tail certificates


def tail_certificate(kind: str, ts: np.ndarray, driving: np.ndarray,
                     horizon: float, r_star: float,
                     extra_witnesses: Optional[dict] = None) -> Certificate:
    """Certify that `driving` is nondecreasing and growing on [r_star, horizon].

    On success the attached bound is (1/4) * (inf_{[r_star, horizon]}
    driving)^2.  The witnesses record a thinned sample of the tail plus
    the checked quantities, so a report consumer can audit the verdict.
    """
    ts = np.asarray(ts, dtype=float)
    driving = np.asarray(driving, dtype=float)
    mask = ts >= r_star - 1e-12
    tt, dd = ts[mask], driving[mask]
    if tt.size < 8:
        raise ValueError("tail window too thin to certify")

    scale = float(np.max(np.abs(dd)))
    slack = 1e-9 * max(scale, 1.0)
    nondecreasing = bool(np.all(np.diff(dd) >= -slack))
    growing = bool(dd[-1] > dd[0] + 1e-6 * max(scale, 1.0))

    step = max(1, tt.size // 12)
    wit = {
        "tail_samples": [(float(a), float(b)) for a, b in zip(tt[::step], dd[::step])],
        "tail_inf": float(np.min(dd)),
        "tail_sup": float(np.max(dd)),
        "nondecreasing": nondecreasing,
        "growing": growing,
    }
    if extra_witnesses:
        wit.update(extra_witnesses)

    if nondecreasing and growing:
        inf_driving = float(np.min(dd))
        return Certificate(kind=kind, verdict=CERTIFIED, bound=0.25 * inf_driving**2,
                           horizon=horizon, r_star=r_star, witnesses=wit)
    return Certificate(kind=kind, verdict=NOT_CERTIFIED, bound=None,
                       horizon=horizon, r_star=r_star, witnesses=wit)


def discreteness_certificate(model: SubmersionModel, horizon: float = 20.0,
                             mode: str = "h", r_star: Optional[float] = None,
                             resolution: int = 4000) -> Certificate:
    """Tail test for discrete spectrum driven by the log-weight derivative.

    mode "h" uses the full logarithmic derivative of the volume density,
    mode "l" its curvature-robust variant with the fiber term demoted to
    -|.|.  A proper, eventually increasing driving function pushes every
    exterior tone above (1/4) * inf(tail)^2, so the certificate bound is
    a lower bound for the tones beyond r_star.
    """
    if mode not in ("h", "l"):
        raise ValueError("mode must be 'h' or 'l'")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    r0 = horizon / 10.0 if r_star is None else float(r_star)
    if not 0 < r0 < horizon:
        raise ValueError("r_star must sit inside (0, horizon)")

    ts = np.linspace(0.0, horizon, resolution + 1)[1:]
    func = h_function if mode == "h" else l_function
    driving = func(model, ts)
    return tail_certificate(f"{mode}-proper", ts, driving, horizon, r0)


# ---------------------------------------------------------------------------
# transfer of base estimates to the total space


@dataclass(frozen=True)
class TransferReport:
    """How a base-manifold essential bottom moves to the warped total space.

    kind is one of "equality" (constant warping), "two-sided" (fiber
    volume pinched between positive bounds -> bracketing interval),
    "degenerate" (fiber volume collapses on the tail; no transfer) and
    "discrete" (base estimate was divergent; discreteness transfers
    whenever the fiber volume does not collapse).
    """

    kind: str
    base_bottom: Optional[float]
    base_diverged: bool
    value: Optional[float]
    interval: Optional[tuple]
    inf_volume: float
    sup_volume: float
    window: tuple
    note: str = ""


def submersion_transfer(base_est: EssEstimate, model: SubmersionModel,
                        window: Optional[tuple] = None,
                        resolution: int = 10000,
                        collapse_ratio: float = 1e-12) -> TransferReport:
    """Transfer an essential-bottom estimate for the base to the total space.

    The exterior-tone comparison gives, on any exterior region,
    (inf V / sup V) * lam_base <= lam_total <= (sup V / inf V) * lam_base
    with V the fiber volume.  Constant V collapses the interval to
    equality; V -> 0 on the tail voids the lower half (degenerate).
    """
    if not model.has_fiber:
        raise ValueError("transfer needs a model with a fiber")
    if window is None:
        window = (base_est.r_values[-1], max(50.0, base_est.r_values[-1] + 10.0))
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise ValueError("transfer window must be positive and increasing")

    if model.fiber.psi.is_constant():
        vol = float(fiber_volume(model, lo))
        if base_est.diverged:
            return TransferReport(kind="discrete", base_bottom=None, base_diverged=True,
                                  value=None, interval=None, inf_volume=vol, sup_volume=vol,
                                  window=(lo, hi), note="constant fiber: discreteness transfers")
        return TransferReport(kind="equality", base_bottom=base_est.bottom, base_diverged=False,
                              value=base_est.bottom, interval=None, inf_volume=vol,
                              sup_volume=vol, window=(lo, hi),
                              note="constant fiber volume: bottoms coincide")

    ts = np.linspace(lo, hi, resolution)
    vols = fiber_volume(model, ts)
    inf_v = float(np.min(vols))
    sup_v = float(np.max(vols))

    if inf_v <= collapse_ratio * max(sup_v, 1.0):
        return TransferReport(kind="degenerate", base_bottom=base_est.bottom,
                              base_diverged=base_est.diverged, value=None, interval=None,
                              inf_volume=inf_v, sup_volume=sup_v, window=(lo, hi),
                              note="fiber volume collapses on the tail; no two-sided transfer")

    if base_est.diverged:
        return TransferReport(kind="discrete", base_bottom=None, base_diverged=True,
                              value=None, interval=None, inf_volume=inf_v, sup_volume=sup_v,
                              window=(lo, hi),
                              note="pinched fiber volume: discreteness transfers")

    b = base_est.bottom
    interval = (b * inf_v / sup_v, b * sup_v / inf_v)
    return TransferReport(kind="two-sided", base_bottom=b, base_diverged=False,
                          value=None, interval=interval, inf_volume=inf_v,
                          sup_volume=sup_v, window=(lo, hi),
                          note="fiber volume pinched; bracketing constants reported")


# ---------------------------------------------------------------------------
# volume growth (Brooks-type upper bound)


@dataclass(frozen=True)
class BrooksReport:
    """Exponential volume-growth diagnostics.

    mu_hat is the tail slope of log vol B(r) (the numerically stable
    reading of limsup log vol / r); mu_series holds the raw log vol / r
    samples on the recorded grid.  When the volume keeps growing and
    the slope has stabilised, the essential spectrum is nonempty with
    bottom <= mu_hat^2 / 4.
    """

    r_max: float
    r_grid: tuple
    log_volumes: tuple
    mu_series: tuple
    mu_hat: float
    slope_previous: float
    volume_diverges: bool
    slope_stable: bool
    verdict: str
    angular_constant: float

    @property
    def upper_bound(self) -> Optional[float]:
        if self.verdict.startswith("sigma_ess"):
            return 0.25 * self.mu_hat**2
        return None


def brooks_growth(model: SubmersionModel, r_max: float = 30.0,
                  resolution: int = 12000, keep: int = 64) -> BrooksReport:
    """Estimate the exponential volume growth rate of the model.

    Ball volumes are accumulated with a trapezoid rule in log space
    (logaddexp), so super-exponential weights never overflow: the
    quadrature works on logarithms end to end and only the growth rate
    is exponentiated back.
    """
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    n = model.base.n
    ang = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    if model.has_fiber:
        ang *= model.fiber.unit_fiber_volume

    ts = np.linspace(0.0, r_max, resolution + 1)
    lw = np.full(ts.shape, -np.inf)
    lw[1:] = log_volume_density(model, ts[1:])
    if not np.all(np.isfinite(lw[1:])):
        # defensive: keep the largest finite prefix so the report stays usable
        bad = int(np.argmax(~np.isfinite(lw[1:]))) + 1
        ts, lw = ts[:bad], lw[:bad]
    dt = ts[1] - ts[0]
    seg = np.logaddexp(lw[:-1], lw[1:]) + math.log(dt / 2.0)
    log_vol = math.log(ang) + np.logaddexp.accumulate(seg)
    rs = ts[1:]

    mu_series = log_vol / rs

    def _slope(f0: float, f1: float) -> tuple:
        i0 = int(round(f0 * (rs.size - 1)))
        i1 = int(round(f1 * (rs.size - 1)))
        return (log_vol[i1] - log_vol[i0]) / (rs[i1] - rs[i0])

    slope_prev = float(_slope(0.8, 0.9))
    slope_last = float(_slope(0.9, 1.0))
    diverges = bool(log_vol[-1] > log_vol[int(0.9 * (rs.size - 1))] + 1e-9)
    stable = abs(slope_last - slope_prev) <= 0.05 * max(1.0, abs(slope_last))
    verdict = "sigma_ess nonempty (Brooks)" if (diverges and stable) else "inconclusive"

    step = max(1, rs.size // keep)
    return BrooksReport(
        r_max=float(r_max),
        r_grid=tuple(float(x) for x in rs[::step]),
        log_volumes=tuple(float(x) for x in log_vol[::step]),
        mu_series=tuple(float(x) for x in mu_series[::step]),
        mu_hat=slope_last,
        slope_previous=slope_prev,
        volume_diverges=diverges,
        slope_stable=stable,
        verdict=verdict,
        angular_constant=ang,
    )


def brooks_certificate(report: BrooksReport, tail_fraction: float = 0.2) -> Certificate:
    """Package a growth report as a certificate (upper-bound flavour).

    The driving series is the volume-entropy reading mu_hat over the
    tail; the usual (1/4) inf^2 formula then bounds the essential
    bottom from above rather than below.
    """
    rs = np.asarray(report.r_grid)
    mus = np.asarray(report.mu_series)
    cut = rs[-1] * (1.0 - tail_fraction)
    tail = mus[rs >= cut]
    wit = {
        "mu_hat": report.mu_hat,
        "slope_previous": report.slope_previous,
        "volume_diverges": report.volume_diverges,
        "slope_stable": report.slope_stable,
        "tail_inf": float(np.min(tail)),
        "tail_sup": float(np.max(tail)),
        "tail_samples": [(float(a), float(b)) for a, b in zip(rs[rs >= cut], tail)],
    }
    if report.verdict.startswith("sigma_ess"):
        inf_mu = float(min(np.min(tail), report.mu_hat))
        return Certificate(kind="brooks", verdict=CERTIFIED, bound=0.25 * inf_mu**2,
                           horizon=report.r_max, r_star=float(cut), witnesses=wit)
    return Certificate(kind="brooks", verdict=NOT_CERTIFIED, bound=None,
                       horizon=report.r_max, r_star=float(cut), witnesses=wit)
