"""Fundamental tones of radial domains, with Richardson error control.

The tone lam*(Omega) of a rotationally invariant domain is the smallest
Dirichlet eigenvalue of the weighted radial problem.  Separation of variables
reduces everything to one dimension: the base weight is f^{n-1}, the total
space weight f^{n-1} psi^m, and non-invariant modes add the nonnegative
potential mu_k/f^2 + nu_j/psi^2, so the tone lives at the invariant mode
(k = j = 0).  ``check_mode=True`` verifies that claim against the first
excited mode instead of assuming it.

Each tone is solved on N and 2N nodes; the reported value is the Richardson
extrapolation lam(2N) + (lam(2N) - lam(N))/3 of the second-order scheme, and
error_estimate = |lam(N) - lam(2N)|/3 is the extrapolation residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (BaseModel, SubmersionModel, log_volume_density,
                     mode_potential)
from .sturm import (DEFAULT_TOL, Grid, RadialDomain, assemble, grid_for,
                    smallest_eigenpair)

__all__ = ["ToneResult", "fundamental_tone", "total_space_tone",
           "mode_tone", "rayleigh_quotient", "DEFAULT_GRIDS"]

DEFAULT_GRIDS = (4096, 8192)


@dataclass(frozen=True)
class ToneResult:
    """Extrapolated tone.  ``lam`` is the eigenvalue (``lambda`` is reserved)."""

    lam: float
    error_estimate: float
    grids: tuple[int, int]
    eigenfunction: np.ndarray
    mode: tuple[int, int]
    nodes: np.ndarray

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("tone must be nonnegative")


def _as_model(model) -> SubmersionModel:
    if isinstance(model, BaseModel):
        return SubmersionModel(model)
    return model


def _solve(model, domain: RadialDomain, n: int, k: int, j: int, tol: float):
    if isinstance(model, SubmersionModel) and (k or j):
        potential = lambda t: mode_potential(model, t, k=k, j=j)
    else:
        potential = None
    sys = assemble(model, domain, grid_for(domain, n), potential)
    return smallest_eigenpair(sys, tol)


def _richardson_tone(model, domain: RadialDomain, grids, tol, k, j) -> ToneResult:
    n_coarse, n_fine = grids
    lam_c, _ = _solve(model, domain, n_coarse, k, j, tol)
    lam_f, u = _solve(model, domain, n_fine, k, j, tol)
    lam = lam_f + (lam_f - lam_c) / 3.0
    err = abs(lam_c - lam_f) / 3.0
    return ToneResult(lam=max(lam, 0.0), error_estimate=err,
                      grids=(n_coarse, n_fine), eigenfunction=u, mode=(k, j),
                      nodes=grid_for(domain, n_fine).nodes())


def fundamental_tone(model, domain: RadialDomain,
                     grids: tuple[int, int] = DEFAULT_GRIDS,
                     tol: float = DEFAULT_TOL,
                     check_mode: bool = False) -> ToneResult:
    """lam*(Omega) in the base manifold (weight f^{n-1}, invariant mode)."""
    model = _as_model(model)
    if isinstance(model, SubmersionModel) and model.fiber is not None:
        model = SubmersionModel(model.base)      # base tone ignores the fiber
    result = _richardson_tone(model, domain, grids, tol, k=0, j=0)
    if check_mode and isinstance(model, SubmersionModel):
        excited = _richardson_tone(model, domain, grids, tol, k=1, j=0)
        slack = result.error_estimate + excited.error_estimate + 1e-10 * result.lam
        if excited.lam < result.lam - slack:
            raise RuntimeError(
                f"mode reduction violated: k=1 tone {excited.lam} below "
                f"invariant tone {result.lam}")
    return result


def total_space_tone(model: SubmersionModel, domain: RadialDomain,
                     fiber_mode: int = 0,
                     grids: tuple[int, int] = DEFAULT_GRIDS,
                     tol: float = DEFAULT_TOL,
                     check_mode: bool = False) -> ToneResult:
    """Tone of the lifted domain pi^{-1}(Omega) at a given fiber mode.

    Weight f^{n-1} psi^m, potential nu_j/psi^2; lam*(lifted Omega) is the
    value at fiber_mode=0.
    """
    model = _as_model(model)
    if model.fiber is None:
        raise ValueError("total_space_tone requires a fiber")
    if not 0 <= fiber_mode < len(model.fiber.fiber_mode_eigenvalues):
        raise ValueError(f"fiber mode {fiber_mode} out of range")
    result = _richardson_tone(model, domain, grids, tol, k=0, j=fiber_mode)
    if check_mode and fiber_mode == 0 and len(model.fiber.fiber_mode_eigenvalues) > 1:
        excited = _richardson_tone(model, domain, grids, tol, k=0, j=1)
        slack = result.error_estimate + excited.error_estimate + 1e-10 * result.lam
        if excited.lam < result.lam - slack:
            raise RuntimeError(
                f"fiber mode reduction violated: j=1 tone {excited.lam} below "
                f"invariant tone {result.lam}")
    return result


def mode_tone(model, domain: RadialDomain, mode_k: int = 0, mode_j: int = 0,
              grids: tuple[int, int] = DEFAULT_GRIDS,
              tol: float = DEFAULT_TOL) -> ToneResult:
    """Tone of the (k, j) separated mode: base spherical index k, fiber mode j.

    The ground mode (0, 0) reproduces fundamental_tone / total_space_tone;
    higher modes add the centrifugal potential mu_k / f^2 + nu_j / psi^2.
    """
    model = _as_model(model)
    if mode_k < 0:
        raise ValueError("mode_k must be nonnegative")
    if mode_j:
        if model.fiber is None:
            raise ValueError("fiber mode requested on a model without fiber")
        if not 0 <= mode_j < len(model.fiber.fiber_mode_eigenvalues):
            raise ValueError(f"fiber mode {mode_j} out of range")
    return _richardson_tone(model, domain, grids, tol, k=mode_k, j=mode_j)


def _log_weight(model, t: np.ndarray) -> np.ndarray:
    if isinstance(model, (SubmersionModel, BaseModel)):
        return log_volume_density(_as_model(model), t)
    return np.asarray(model(t), dtype=float)


def rayleigh_quotient(model, domain: RadialDomain, u, potential=None) -> float:
    """Trapezoid Rayleigh quotient of a sampled test function.

    ``u`` holds interior node values on the uniform grid for the domain (the
    layout ToneResult.eigenfunction uses).  Dirichlet zeros are appended at
    the endpoints; a pole-regular inner boundary contributes no flux.  The
    quotient is invariant under scaling of u and of the weight, so the weight
    enters only through differences from its maximum (no overflow).
    """
    u = np.asarray(u, dtype=float)
    if not np.any(u != 0.0):
        raise ValueError("test function is identically zero")
    grid = grid_for(domain, u.size)
    t = grid.nodes()
    tf = grid.flux_points()
    dt = grid.spacing

    lw_n = _log_weight(model, t)
    lw_f = _log_weight(model, tf[1:] if grid.staggered else tf)
    ref = max(lw_n.max(), lw_f.max())
    w_n = np.exp(lw_n - ref)
    w_f = np.exp(lw_f - ref)

    if grid.staggered:
        # faces 1..N: slopes between consecutive nodes, then the ghost at b
        du = np.concatenate((np.diff(u), [-u[-1]])) / dt
        num = float(np.sum(w_f * du * du) * dt)
    else:
        # faces 0..N: ghost zeros at both endpoints
        du = np.concatenate(([u[0]], np.diff(u), [-u[-1]])) / dt
        num = float(np.sum(w_f * du * du) * dt)
    if potential is not None:
        v = np.asarray(potential(t) if callable(potential) else potential, dtype=float)
        num += float(np.sum(v * w_n * u * u) * dt)
    den = float(np.sum(w_n * u * u) * dt)
    if den == 0.0:
        raise ValueError("test function has zero weighted norm")
    return num / den
