"""Model dataclasses and the radial geometric quantities derived from them."""

import math

import numpy as np
import pytest

from warptone.models import (
    BaseModel, FiberModel, ModelValidationError, SubmersionModel,
    base_mode_eigenvalue, circle_fiber, fiber_volume, h_function, l_function,
    log_volume_density, log_weight_parts, mean_curvature_radial,
    mode_potential, radial_curvature, radial_laplacian, volume_density,
)
from warptone.profiles import Profile, constant_profile, preset_profile


def hyperbolic_base(n=2, kappa=-1.0):
    return BaseModel(n, preset_profile(f"hyperbolic:{kappa}"))


def baider_model():
    return SubmersionModel(
        BaseModel(2, preset_profile("baider_base")),
        FiberModel(1, preset_profile("baider_fiber")))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_base_dimension_must_be_at_least_two():
    with pytest.raises(ModelValidationError):
        BaseModel(1, preset_profile("euclidean"))


def test_base_profile_must_be_pole_regular():
    # f(0) != 0
    with pytest.raises(ModelValidationError):
        BaseModel(2, constant_profile(1.0))
    # f'(0) = 2, not 1
    with pytest.raises(ModelValidationError):
        BaseModel(2, Profile.from_source("2*t"))


def test_base_profile_must_stay_positive():
    with pytest.raises(ModelValidationError):
        BaseModel(2, Profile.from_source("sin(t)"))   # vanishes at pi


def test_fiber_validation():
    psi = constant_profile(1.0)
    with pytest.raises(ModelValidationError):
        FiberModel(0, psi)
    with pytest.raises(ModelValidationError):
        FiberModel(1, psi, unit_fiber_volume=0.0)
    with pytest.raises(ModelValidationError):
        FiberModel(1, psi, fiber_mode_eigenvalues=(1.0, 2.0))   # must start at 0
    with pytest.raises(ModelValidationError):
        FiberModel(1, psi, fiber_mode_eigenvalues=(0.0, 2.0, 1.0))
    with pytest.raises(ModelValidationError):
        FiberModel(1, Profile.from_source("1 - t"))   # sign change


def test_has_fiber_is_a_property_not_a_method():
    # a bare method object is always truthy; this guards the access pattern
    assert isinstance(SubmersionModel.has_fiber, property)
    base_only = SubmersionModel(hyperbolic_base())
    assert base_only.has_fiber is False
    assert baider_model().has_fiber is True


def test_total_dimension():
    assert SubmersionModel(hyperbolic_base(3)).total_dimension == 3
    assert baider_model().total_dimension == 3


def test_circle_fiber_modes():
    fib = circle_fiber(1.0, max_mode=3)
    assert fib.fiber_mode_eigenvalues == (0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0)
    assert fib.unit_fiber_volume == pytest.approx(2 * math.pi)
    assert fib.m == 1


def test_base_mode_eigenvalue():
    # k(k + n - 2): circle k^2, S^2 gives k(k+1)
    assert base_mode_eigenvalue(2, 0) == 0.0
    assert base_mode_eigenvalue(2, 1) == 1.0
    assert base_mode_eigenvalue(2, 3) == 9.0
    assert base_mode_eigenvalue(3, 1) == 2.0
    assert base_mode_eigenvalue(4, 2) == 8.0


# ---------------------------------------------------------------------------
# radial quantities, closed forms
# ---------------------------------------------------------------------------

def test_radial_laplacian_euclidean():
    base = BaseModel(3, preset_profile("euclidean"))
    ts = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(radial_laplacian(base, ts), 2.0 / ts, rtol=1e-13)


def test_radial_laplacian_hyperbolic():
    base = hyperbolic_base()
    ts = np.array([0.5, 1.0, 3.0])
    np.testing.assert_allclose(radial_laplacian(base, ts),
                               1.0 / np.tanh(ts), rtol=1e-13)


def test_radial_curvature_closed_forms():
    ts = np.array([0.4, 1.0, 2.2])
    np.testing.assert_allclose(
        radial_curvature(BaseModel(2, preset_profile("euclidean")), ts),
        0.0, atol=1e-14)
    np.testing.assert_allclose(radial_curvature(hyperbolic_base(), ts),
                               -1.0, rtol=1e-12)
    np.testing.assert_allclose(radial_curvature(hyperbolic_base(2, -4.0), ts),
                               -4.0, rtol=1e-12)
    # f = t e^{t^2}: f''/f = 4t^2 + 6
    np.testing.assert_allclose(
        radial_curvature(BaseModel(2, preset_profile("baider_base")), ts),
        -(4 * ts**2 + 6), rtol=1e-12)


def test_mean_curvature_radial():
    model = baider_model()
    ts = np.array([0.3, 1.0, 2.5])
    # psi = e^{t-t^2}: m psi'/psi = 1 - 2t
    np.testing.assert_allclose(mean_curvature_radial(model, ts),
                               1.0 - 2.0 * ts, rtol=1e-12)
    two = SubmersionModel(hyperbolic_base(),
                          FiberModel(2, Profile.from_source("exp(t)")))
    np.testing.assert_allclose(mean_curvature_radial(two, ts), 2.0, rtol=1e-12)


def test_h_and_l_functions():
    model = baider_model()
    ts = np.array([0.5, 1.0, 2.0, 20.0])
    h_exact = (1 + 2 * ts**2) / ts + (1 - 2 * ts)    # = 1/t + 1
    np.testing.assert_allclose(h_function(model, ts), h_exact, rtol=1e-12)
    l_exact = (1 + 2 * ts**2) / ts - np.abs(1 - 2 * ts)
    np.testing.assert_allclose(l_function(model, ts), l_exact, rtol=1e-12)
    # the two coincide where the fiber term is nonpositive (t >= 1/2)
    assert h_function(model, 2.0) == pytest.approx(l_function(model, 2.0))
    assert h_function(model, 0.25) > l_function(model, 0.25)


def test_h_function_requires_no_fiber_term_without_fiber():
    base_only = SubmersionModel(hyperbolic_base())
    ts = np.array([1.0, 2.0])
    np.testing.assert_allclose(h_function(base_only, ts),
                               1.0 / np.tanh(ts), rtol=1e-13)


# ---------------------------------------------------------------------------
# weights and volumes
# ---------------------------------------------------------------------------

def test_fiber_volume_closed_form():
    model = baider_model()
    # vol(F_t) = 2*pi * psi(t)^m; at t=2, psi = e^{-2}
    assert fiber_volume(model, 2.0) == pytest.approx(
        2 * math.pi * math.exp(-2.0), rel=1e-14)
    assert fiber_volume(model, 2.0) == pytest.approx(0.8503366631752727,
                                                     rel=1e-13)


def test_fiber_volume_requires_fiber():
    with pytest.raises(ValueError):
        fiber_volume(SubmersionModel(hyperbolic_base()), 1.0)


def test_volume_density_and_log_agree():
    model = baider_model()
    ts = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(np.log(volume_density(model, ts)),
                               log_volume_density(model, ts), rtol=1e-12)


def test_log_volume_density_at_overflow_scale():
    # w = t e^{t^2} e^{t-t^2} = t e^t stays modest, but the parts blow up;
    # the combination must be computed without overflow
    model = baider_model()
    t = 600.0
    assert log_volume_density(model, t) == pytest.approx(
        math.log(t) + t, rel=1e-12)


def test_log_weight_parts_sum_to_density():
    model = baider_model()
    ts = np.array([0.7, 1.5, 3.0])
    parts = log_weight_parts(model, ts)
    assert len(parts) == 2                      # (n-1, log f), (m, log psi)
    assert parts[0][0] == 1.0 and parts[1][0] == 1.0
    total = sum(c * l for c, l in parts)
    np.testing.assert_allclose(total, log_volume_density(model, ts),
                               rtol=1e-12)


# ---------------------------------------------------------------------------
# mode potential
# ---------------------------------------------------------------------------

def test_mode_potential_ground_mode_vanishes():
    model = baider_model()
    np.testing.assert_allclose(
        mode_potential(model, np.array([0.5, 1.0]), k=0, j=0), 0.0, atol=0.0)


def test_mode_potential_base_mode():
    model = SubmersionModel(BaseModel(2, preset_profile("euclidean")))
    ts = np.array([0.5, 2.0])
    np.testing.assert_allclose(mode_potential(model, ts, k=1), 1.0 / ts**2,
                               rtol=1e-13)
    np.testing.assert_allclose(mode_potential(model, ts, k=2), 4.0 / ts**2,
                               rtol=1e-13)


def test_mode_potential_fiber_mode():
    model = SubmersionModel(hyperbolic_base(),
                            circle_fiber(constant_profile(2.0)))
    ts = np.array([1.0, 3.0])
    # nu_1 / psi^2 = 1 / 4
    np.testing.assert_allclose(mode_potential(model, ts, j=1), 0.25,
                               rtol=1e-13)
    np.testing.assert_allclose(mode_potential(model, ts, j=3), 1.0,
                               rtol=1e-13)   # nu_3 = 4


def test_mode_potential_combined():
    model = SubmersionModel(hyperbolic_base(), circle_fiber(1.0))
    t = 1.3
    combined = mode_potential(model, t, k=1, j=1)
    expect = 1.0 / math.sinh(t) ** 2 + 1.0
    assert combined == pytest.approx(expect, rel=1e-12)
