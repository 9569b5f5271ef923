"""Weighted radial eigenproblem -(w u')'/w + V u = lam u on an interval.

Discretization is a second-order flux scheme on a uniform grid.  With nodes
t_i and cell faces t_{i +/- 1/2}, row i of the stiffness matrix couples its
neighbours with -w(t_{i±1/2})/dt^2, carries diagonal
[w(t_{i-1/2}) + w(t_{i+1/2})]/dt^2 + V_i w_i, and mass w_i.

Two inner boundary conditions:

* Dirichlet at a: nodes t_i = a + i dt, dt = (b-a)/(N+1).
* pole-regular at a = 0: the half-cell staggered grid t_i = a + (i-1/2) dt
  with dt = (b-a)/(N+1/2), zero flux through the pole (the first row simply
  has no inner flux term) and the Dirichlet ghost node landing exactly on b.
  (A plain Dirichlet cutoff at some epsilon > 0 converges at first order only;
  the staggered closure restores second order.)

The generalized problem A u = lam W u is never formed with raw weights: for
profiles like f = t e^{t^2} the weight reaches e^{1600} inside scan range.
Instead the mass-symmetrized matrix B = W^{-1/2} A W^{-1/2} is assembled
directly from *differences* of log-weights, which are O(dt) numbers:

    B_ii    = [exp(lw(t_{i-1/2}) - lw_i) + exp(lw(t_{i+1/2}) - lw_i)]/dt^2 + V_i
    B_i,i+1 = -exp(lw(t_{i+1/2}) - (lw_i + lw_{i+1})/2)/dt^2

The log-weight differences are taken component by component ((n-1) log f and
m log psi separately), so a constant psi cancels bit-for-bit and the system
for a trivial fiber is identical to the base system down to the last ulp.

The smallest eigenvalue comes from bisection on the Sturm sequence count
(negative pivots of the LDL^T factorization of B - lam I, LAPACK-style pivmin
safeguard), and the eigenvector from inverse iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .models import SubmersionModel, log_weight_parts
from .profiles import DomainError

__all__ = [
    "DIRICHLET", "POLE_REGULAR", "RadialDomain", "Grid", "TridiagonalSystem",
    "ConvergenceError", "ball", "annulus", "grid_for", "assemble",
    "sturm_count", "smallest_eigenpair", "DEFAULT_TOL",
]

DIRICHLET = "dirichlet"
POLE_REGULAR = "pole-regular"
DEFAULT_TOL = 1e-10
_ITER_BUDGET = 200

try:
    from numba import njit as _njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba present in the supported env
    _HAVE_NUMBA = False

    def _njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap


class ConvergenceError(RuntimeError):
    """Inverse iteration failed to converge within its budget."""


@dataclass(frozen=True)
class RadialDomain:
    """Radial interval [a, b]; inner_bc says what happens at a."""

    a: float
    b: float
    inner_bc: str = DIRICHLET

    def __post_init__(self):
        if not (self.b > self.a >= 0.0):
            raise ValueError(f"need 0 <= a < b, got [{self.a}, {self.b}]")
        if self.inner_bc not in (DIRICHLET, POLE_REGULAR):
            raise ValueError(f"unknown inner boundary condition {self.inner_bc!r}")
        if self.inner_bc == POLE_REGULAR and self.a != 0.0:
            raise ValueError("pole-regular boundary requires a = 0")


def ball(radius: float) -> RadialDomain:
    return RadialDomain(0.0, radius, POLE_REGULAR)


def annulus(a: float, b: float) -> RadialDomain:
    return RadialDomain(a, b, DIRICHLET)


@dataclass(frozen=True)
class Grid:
    """N interior nodes on [a, b]; staggered grids implement the pole closure."""

    a: float
    b: float
    n: int
    staggered: bool = False

    def __post_init__(self):
        # production solves use thousands of nodes; tiny grids stay legal so
        # that hand-checkable stencil fixtures can be built
        if self.n < 1:
            raise ValueError("grid needs at least one interior node")
        if not (self.b > self.a and math.isfinite(self.b) and math.isfinite(self.a)):
            raise ValueError("grid needs a finite nonempty interval")

    @property
    def spacing(self) -> float:
        return (self.b - self.a) / (self.n + (0.5 if self.staggered else 1.0))

    def nodes(self) -> np.ndarray:
        i = np.arange(1, self.n + 1, dtype=float)
        off = (i - 0.5) if self.staggered else i
        return self.a + off * self.spacing

    def flux_points(self) -> np.ndarray:
        """Cell faces; entry i is the face between node i and its left neighbour."""
        i = np.arange(0, self.n + 1, dtype=float)
        off = i if self.staggered else (i + 0.5)
        return self.a + off * self.spacing


def grid_for(domain: RadialDomain, n: int) -> Grid:
    return Grid(domain.a, domain.b, n, staggered=(domain.inner_bc == POLE_REGULAR))


@dataclass(frozen=True)
class TridiagonalSystem:
    """Mass-symmetrized discrete eigensystem B v = lam v.

    ``sym_diag``/``sym_off`` are the entries of B = W^{-1/2} A W^{-1/2};
    ``log_weight`` holds log w at the nodes.  The raw (unsymmetrized) arrays
    are exposed as properties — they overflow for weights beyond float64
    range, which is precisely why they are not what gets stored.
    """

    sym_diag: np.ndarray
    sym_off: np.ndarray
    log_weight: np.ndarray
    grid: Grid

    @property
    def weight(self) -> np.ndarray:
        return np.exp(self.log_weight)

    @property
    def diag(self) -> np.ndarray:
        return self.sym_diag * self.weight

    @property
    def offdiag(self) -> np.ndarray:
        lw = self.log_weight
        return self.sym_off * np.exp(0.5 * (lw[:-1] + lw[1:]))

    def quadratic_form(self, v: np.ndarray) -> float:
        """v . B v (nonnegative for V >= 0)."""
        return float(np.dot(v, self.matvec(v)))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.sym_diag * v
        out[:-1] += self.sym_off * v[1:]
        out[1:] += self.sym_off * v[:-1]
        return out


def assemble(model, domain: RadialDomain, grid: Grid,
             potential=None) -> TridiagonalSystem:
    """Build the symmetrized system for the model's volume weight and potential.

    ``model`` is a SubmersionModel, or (for explicit-weight fixtures) a
    callable mapping a node array to log w.  ``potential`` may be None (zero),
    a callable of the node array, or an array of node values; it must be >= 0.
    """
    t = grid.nodes()
    tf = grid.flux_points()
    pole = grid.staggered
    if pole:
        tf_eval = tf[1:]          # tf[0] is the pole itself; zero flux, never evaluated
    else:
        tf_eval = tf

    if potential is None:
        v_pot = np.zeros_like(t)
    elif callable(potential):
        v_pot = np.asarray(potential(t), dtype=float)
    else:
        v_pot = np.asarray(potential, dtype=float)
    if v_pot.shape != t.shape:
        raise ValueError("potential has wrong shape")
    if np.any(v_pot < 0.0):
        raise ValueError("potential must be nonnegative")

    if isinstance(model, SubmersionModel):
        parts_n = log_weight_parts(model, t)
        parts_f = log_weight_parts(model, tf_eval)
    else:
        parts_n = [(1.0, np.asarray(model(t), dtype=float))]
        parts_f = [(1.0, np.asarray(model(tf_eval), dtype=float))]

    # component-wise log-weight differences (exact cancellation for constant
    # components), then exponentiate: all O(1) quantities
    dlw_left = np.zeros(grid.n)   # face left of node i minus node i
    dlw_right = np.zeros(grid.n)  # face right of node i minus node i
    dlw_mid = np.zeros(grid.n - 1)  # face between i, i+1 minus their mean
    for (c, ln), (_, lf) in zip(parts_n, parts_f):
        if pole:
            # lf covers faces 1..N; face i sits between nodes i-1 and i,
            # face 0 is the pole (zero flux, left of row 0, never used)
            dlw_left[1:] += c * (lf[:-1] - ln[1:])
            dlw_right += c * (lf - ln)
            dlw_mid += c * (lf[:-1] - 0.5 * (ln[:-1] + ln[1:]))
        else:
            dlw_left += c * (lf[:-1] - ln)
            dlw_right += c * (lf[1:] - ln)
            dlw_mid += c * (lf[1:-1] - 0.5 * (ln[:-1] + ln[1:]))

    dt2 = grid.spacing ** 2
    with np.errstate(over="raise"):
        try:
            sym_diag = (np.exp(dlw_left) + np.exp(dlw_right)) / dt2 + v_pot
            sym_off = -np.exp(dlw_mid) / dt2
        except FloatingPointError as ex:
            raise DomainError("weight ratio overflow during assembly") from ex
    if pole:
        # zero flux through the pole: the first row keeps only its outer flux
        sym_diag[0] = np.exp(dlw_right[0]) / dt2 + v_pot[0]

    log_w = np.zeros(grid.n)
    for c, ln in parts_n:
        log_w += c * ln
    return TridiagonalSystem(sym_diag, sym_off, log_w, grid)


# ---------------------------------------------------------------------------
# Sturm count + bisection + inverse iteration
# ---------------------------------------------------------------------------

@_njit(cache=True)
def _count_below(diag, off, lam, pivmin):  # pragma: no cover - compiled
    count = 0
    d = diag[0] - lam
    if abs(d) < pivmin:
        d = -pivmin
    if d < 0.0:
        count += 1
    for i in range(1, diag.shape[0]):
        d = diag[i] - lam - off[i - 1] * off[i - 1] / d
        if abs(d) < pivmin:
            d = -pivmin
        if d < 0.0:
            count += 1
    return count


def _pivmin(off: np.ndarray) -> float:
    biggest = float(np.max(np.abs(off))) if off.size else 1.0
    return max(np.finfo(float).tiny, (biggest * biggest) * 1e-300)


def sturm_count(sys: TridiagonalSystem, lam: float) -> int:
    """Number of eigenvalues strictly below lam (negative LDL^T pivots)."""
    return int(_count_below(sys.sym_diag, sys.sym_off, float(lam),
                            _pivmin(sys.sym_off)))


def _gershgorin_upper(sys: TridiagonalSystem) -> float:
    off = np.abs(sys.sym_off)
    radius = np.zeros_like(sys.sym_diag)
    radius[:-1] += off
    radius[1:] += off
    return float(np.max(sys.sym_diag + radius))


def _bisect_smallest(sys: TridiagonalSystem, tol: float) -> float:
    lo = 0.0
    # lam1 <= min_i B_ii (Rayleigh quotient of a basis vector); much tighter
    # than Gershgorin when a mode potential spikes to ~1e100 somewhere
    hi = min(_gershgorin_upper(sys), float(np.min(sys.sym_diag)))
    hi = hi * (1.0 + 1e-12) + 1e-300
    pivmin = _pivmin(sys.sym_off)
    diag, off = sys.sym_diag, sys.sym_off
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if _count_below(diag, off, mid, pivmin) >= 1:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def _inverse_iteration(sys: TridiagonalSystem, lam: float, tol: float):
    n = sys.grid.n
    ab = np.zeros((3, n))
    shift = lam * (1.0 - 1e-11) if lam != 0.0 else -1e-300
    ab[0, 1:] = sys.sym_off
    ab[1, :] = sys.sym_diag - shift
    ab[2, :-1] = sys.sym_off
    v = np.ones(n) / math.sqrt(n)
    # residual cannot beat the matvec rounding floor eps*||B||, so the target
    # is that floor (with margin) or the eigenvalue tolerance, whichever is larger
    gersh = _gershgorin_upper(sys)
    target = max(max(tol, 1e-13) * abs(lam), 100.0 * np.finfo(float).eps * gersh)
    reseeded = False
    resid = math.inf
    for sweep in range(_ITER_BUDGET):
        try:
            v_new = solve_banded((1, 1), ab, v, check_finite=False)
        except np.linalg.LinAlgError:
            shift *= 1.0 - 1e-9
            ab[1, :] = sys.sym_diag - shift
            continue
        norm = float(np.linalg.norm(v_new))
        if not np.isfinite(norm) or norm == 0.0:
            if reseeded:
                raise ConvergenceError("inverse iteration produced a degenerate vector")
            v = np.random.default_rng(0).standard_normal(n)
            v /= np.linalg.norm(v)
            reseeded = True
            continue
        v = v_new / norm
        resid = float(np.linalg.norm(sys.matvec(v) - lam * v))
        if resid <= target:
            return v
        if sweep == _ITER_BUDGET // 2 and not reseeded:
            # stuck: re-seed once with a deterministic random vector
            v = np.random.default_rng(0).standard_normal(n)
            v /= np.linalg.norm(v)
            reseeded = True
    raise ConvergenceError(
        f"inverse iteration did not converge in {_ITER_BUDGET} sweeps "
        f"(last residual {resid:.3e}, target {target:.3e})")


def smallest_eigenpair(sys: TridiagonalSystem, tol: float = DEFAULT_TOL):
    """Smallest eigenvalue (relative accuracy tol) and its eigenvector.

    The eigenvector is returned in the original (unsymmetrized) coordinates,
    one-signed and scaled to max-norm 1.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam = _bisect_smallest(sys, tol)
    v = _inverse_iteration(sys, lam, tol)
    # undo the mass symmetrization, u = W^{-1/2} v, up to harmless scaling;
    # shift in log space so the largest component lands at exp(0) even when
    # the weight spans hundreds of e-folds across the window
    with np.errstate(divide="ignore"):
        log_u = np.log(np.abs(v)) - 0.5 * sys.log_weight
    u = np.sign(v) * np.exp(log_u - log_u.max())
    u = u / u[np.argmax(np.abs(u))]
    return lam, u
