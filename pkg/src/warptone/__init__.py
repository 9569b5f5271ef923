"""warptone: fundamental tones and essential-spectrum diagnostics for
rotationally symmetric manifolds and warped-product submersions.

The package reduces the Laplace-Beltrami operator of a rotationally
symmetric base (optionally warped by a compact fiber) to weighted
Sturm-Liouville problems on radial intervals, computes fundamental
tones with certified Richardson error estimates, estimates the bottom
of the essential spectrum through exterior-tone truncation sweeps, and
cross-checks everything against closed-form bounds, Jacobi-equation
comparison, volume growth, and the submersion calculus identities.
"""

__version__ = "0.1.0"

from .bounds import (BoundReport, RadialField, VolumeRatioReport, divergence_bound,
                     eigenfield_from_tone, logderivative_bound, unit_radial_field,
                     volume_ratio_check)
from .comparison import (ComparisonReport, ConjugatePointError, JacobiSolution,
                         comparison_check, ell, radial_discreteness_certificate,
                         solve_jacobi)
from .identities import (ResidualReport, SignResolution, check_divergence_identity,
                         check_grad_average, check_laplacian_lift,
                         resolve_sign_convention)
from .models import (BaseModel, FiberModel, ModelValidationError, SubmersionModel,
                     base_mode_eigenvalue, circle_fiber, fiber_volume, h_function,
                     l_function, log_volume_density, mean_curvature_radial,
                     mode_potential, radial_curvature, radial_laplacian,
                     volume_density)
from .profiles import (DomainError, ExpressionSyntaxError, Profile, constant_profile,
                       differentiate, eval_expr, eval_log, parse_profile,
                       preset_profile, to_source)
from .spectrum import (BrooksReport, Certificate, EssEstimate, TransferReport,
                       TruncationPolicy, brooks_certificate, brooks_growth,
                       discreteness_certificate, ess_bottom_estimate,
                       submersion_transfer, tail_certificate)
from .sturm import (ConvergenceError, Grid, RadialDomain, TridiagonalSystem,
                    annulus, assemble, ball, grid_for, smallest_eigenpair,
                    sturm_count)
from .tone import (ToneResult, fundamental_tone, mode_tone, rayleigh_quotient,
                   total_space_tone)

__all__ = [
    "__version__",
    # profiles
    "Profile", "DomainError", "ExpressionSyntaxError", "parse_profile",
    "to_source", "differentiate", "eval_expr", "eval_log", "constant_profile",
    "preset_profile",
    # models
    "BaseModel", "FiberModel", "SubmersionModel", "ModelValidationError",
    "circle_fiber", "base_mode_eigenvalue", "radial_laplacian",
    "radial_curvature", "mean_curvature_radial", "volume_density",
    "log_volume_density", "fiber_volume", "h_function", "l_function",
    "mode_potential",
    # sturm
    "RadialDomain", "Grid", "TridiagonalSystem", "ConvergenceError",
    "ball", "annulus", "grid_for", "assemble", "sturm_count",
    "smallest_eigenpair",
    # tone
    "ToneResult", "fundamental_tone", "total_space_tone", "mode_tone",
    "rayleigh_quotient",
    # bounds
    "RadialField", "BoundReport", "VolumeRatioReport", "unit_radial_field",
    "divergence_bound", "logderivative_bound", "eigenfield_from_tone",
    "volume_ratio_check",
    # comparison
    "JacobiSolution", "ConjugatePointError", "ComparisonReport",
    "solve_jacobi", "ell", "comparison_check",
    "radial_discreteness_certificate",
    # spectrum
    "TruncationPolicy", "EssEstimate", "Certificate", "TransferReport",
    "BrooksReport", "ess_bottom_estimate", "discreteness_certificate",
    "tail_certificate", "submersion_transfer", "brooks_growth",
    "brooks_certificate",
    # identities
    "ResidualReport", "SignResolution", "check_divergence_identity",
    "check_laplacian_lift", "check_grad_average", "resolve_sign_convention",
]
