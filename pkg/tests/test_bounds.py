"""Radial-field lower bounds: closed-form values and soundness sweeps."""

import math

import numpy as np
import pytest

from warptone.bounds import (
    DEFAULT_HORIZON, RadialField, divergence_bound, eigenfield_from_tone,
    logderivative_bound, unit_radial_field, volume_ratio_check,
)
from warptone.models import BaseModel, FiberModel, SubmersionModel, circle_fiber
from warptone.profiles import DomainError, Profile, preset_profile
from warptone.sturm import RadialDomain, annulus, ball
from warptone.tone import ToneResult, fundamental_tone, total_space_tone

EUCLID2 = SubmersionModel(BaseModel(2, preset_profile("euclidean")))
HYP2 = SubmersionModel(BaseModel(2, preset_profile("hyperbolic")))
BAIDER_MIN = SubmersionModel(BaseModel(2, preset_profile("baider_base")))

FLAT = lambda t: np.zeros_like(np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# divergence bound, closed forms
# ---------------------------------------------------------------------------

def test_hyperbolic_exterior_bound_is_quarter():
    # X = d/dt on [1, inf): div X = coth t, inf = 1 at infinity, so the
    # bound is exactly 1/4 (needs the tail extrapolation; coth is strictly
    # decreasing at every finite sample)
    rep = divergence_bound(HYP2, RadialDomain(1.0, math.inf),
                           unit_radial_field())
    assert rep.hypothesis_ok
    assert rep.bound == pytest.approx(0.25, abs=1e-9)
    assert rep.window[1] == DEFAULT_HORIZON
    # at a short horizon coth has visibly not converged; the Aitken tail
    # extrapolation must supply the limit instead of the sampled minimum
    short = divergence_bound(HYP2, RadialDomain(1.0, math.inf),
                             unit_radial_field(), horizon=10.0)
    assert short.witnesses["tail_extrapolated"] is True
    assert short.bound == pytest.approx(0.25, abs=1e-12)


def test_euclid_annulus_bound():
    # div d/dt = 1/t on [1, 2]: inf = 1/2, bound = 1/16; the true tone is
    # far above it (the bound is crude but sound)
    rep = divergence_bound(EUCLID2, annulus(1.0, 2.0), unit_radial_field())
    assert rep.bound == pytest.approx(0.0625, rel=1e-10)
    tone = fundamental_tone(EUCLID2, annulus(1.0, 2.0))
    assert tone.lam == pytest.approx(9.753322096253642, rel=1e-9)
    assert rep.bound <= tone.lam


def test_baider_exterior_bound_explicit_constant():
    # h = 1/t + 2t + ... for f = t e^{t^2}: on [2, inf) with psi == 1 the
    # infimum sits at t = 2 where h = 1/2 + 4 = 4.5, giving (4.5/2)^2
    rep = divergence_bound(BAIDER_MIN, RadialDomain(2.0, math.inf),
                           unit_radial_field())
    assert rep.bound == pytest.approx(5.0625, abs=1e-9)
    assert rep.witnesses["inf_div"] == pytest.approx(4.5, abs=1e-9)


def test_divergence_no_bound_is_typed():
    # X = -d/dt makes div X negative: no bound, flagged, witnesses kept
    rep = divergence_bound(EUCLID2, annulus(1.0, 2.0),
                           RadialField.constant(-1.0))
    assert rep.bound is None
    assert not rep.hypothesis_ok
    assert rep.witnesses["inf_div"] < 0.0


def test_divergence_bound_scaling_invariance():
    # scaling the field leaves the ratio inf div / sup |a| unchanged
    a = divergence_bound(HYP2, annulus(1.0, 3.0), unit_radial_field())
    b = divergence_bound(HYP2, annulus(1.0, 3.0), RadialField.constant(7.0))
    assert b.bound == pytest.approx(a.bound, rel=1e-12)


# ---------------------------------------------------------------------------
# log-derivative bound
# ---------------------------------------------------------------------------

def test_cot_field_reproduces_sine_eigenvalue():
    # flat weight, a = -cot: div X - a^2 = csc^2 - cot^2 = 1 identically,
    # the sharp value for the [0, pi] sine ground state
    field = RadialField(lambda t: -1.0 / np.tan(np.asarray(t, dtype=float)),
                        lambda t: 1.0 / np.sin(np.asarray(t, dtype=float)) ** 2,
                        label="-cot")
    rep = logderivative_bound(FLAT, RadialDomain(0.05, math.pi - 0.05), field)
    assert rep.bound == pytest.approx(1.0, abs=1e-9)


def test_logderivative_bound_may_be_negative_but_valid():
    # a big constant field drives div X - a^2 negative; still a true bound
    rep = logderivative_bound(EUCLID2, annulus(1.0, 2.0),
                              RadialField.constant(10.0))
    assert rep.hypothesis_ok
    assert rep.bound < 0.0
    assert rep.bound <= fundamental_tone(EUCLID2, annulus(1.0, 2.0)).lam


def test_nonfinite_field_raises():
    bad = RadialField(
        lambda t: np.where(np.asarray(t, dtype=float) > 1.5, np.inf, 1.0),
        lambda t: np.zeros_like(np.asarray(t, dtype=float)))
    with np.errstate(invalid="ignore"):      # inf * 0 upstream of the check
        with pytest.raises(DomainError):
            logderivative_bound(EUCLID2, annulus(1.0, 2.0), bad)
        with pytest.raises(DomainError):
            divergence_bound(EUCLID2, annulus(1.0, 2.0), bad)


# ---------------------------------------------------------------------------
# eigenfield: the equality route
# ---------------------------------------------------------------------------

def shrunken_domain(field: RadialField) -> RadialDomain:
    lo, hi = field.support
    return RadialDomain(lo, hi)


def test_eigenfield_bound_matches_disk_tone():
    tone = fundamental_tone(EUCLID2, ball(1.0))
    field = eigenfield_from_tone(tone)
    assert field.support is not None
    rep = logderivative_bound(EUCLID2, shrunken_domain(field), field)
    assert abs(rep.bound - tone.lam) < 1e-3


def test_eigenfield_bound_matches_hyperbolic_annulus_tone():
    dom = annulus(1.0, 4.0)
    tone = fundamental_tone(HYP2, dom)
    field = eigenfield_from_tone(tone)
    rep = logderivative_bound(HYP2, shrunken_domain(field), field)
    assert abs(rep.bound - tone.lam) < 1e-3


def test_eigenfield_rejects_sign_changing_state():
    tone = fundamental_tone(EUCLID2, ball(1.0), grids=(128, 256))
    excited = ToneResult(lam=tone.lam, error_estimate=tone.error_estimate,
                         grids=tone.grids,
                         eigenfunction=np.sin(2 * math.pi *
                                              np.linspace(0.01, 0.99, 256)),
                         mode=(0, 0), nodes=tone.nodes)
    with pytest.raises(ValueError):
        eigenfield_from_tone(excited)


def test_eigenfield_support_shrinks_with_cutoff():
    tone = fundamental_tone(EUCLID2, ball(1.0))
    wide = eigenfield_from_tone(tone, cutoff=0.05)
    narrow = eigenfield_from_tone(tone, cutoff=0.5)
    assert narrow.support[0] >= wide.support[0]
    assert narrow.support[1] <= wide.support[1]
    assert narrow.support[1] < 1.0


# ---------------------------------------------------------------------------
# randomized soundness: bound <= tone, zero violations
# ---------------------------------------------------------------------------

def test_divergence_bound_soundness_randomized():
    rng = np.random.default_rng(2024)
    bases = [EUCLID2, HYP2, BAIDER_MIN]
    checked = 0
    for _ in range(20):
        model = bases[int(rng.integers(len(bases)))]
        a = float(rng.uniform(0.3, 4.0))
        b = a + float(rng.uniform(0.5, 4.0))
        dom = annulus(a, b)
        rep = divergence_bound(model, dom, unit_radial_field())
        tone = fundamental_tone(model, dom, grids=(1024, 2048))
        if rep.bound is not None:
            checked += 1
            assert rep.bound <= tone.lam + tone.error_estimate + 1e-8, \
                f"violation on {model.base.f.source} [{a}, {b}]"
    assert checked >= 10      # most draws should produce a usable bound


def test_eigenfield_soundness_randomized():
    rng = np.random.default_rng(99)
    for _ in range(5):
        a = float(rng.uniform(0.5, 2.0))
        b = a + float(rng.uniform(1.0, 3.0))
        tone = fundamental_tone(HYP2, annulus(a, b), grids=(2048, 4096))
        field = eigenfield_from_tone(tone)
        rep = logderivative_bound(HYP2, shrunken_domain(field), field)
        assert rep.bound <= tone.lam + tone.error_estimate + 1e-6
        assert abs(rep.bound - tone.lam) < 5e-3


# ---------------------------------------------------------------------------
# fiber volume ratio inequality
# ---------------------------------------------------------------------------

def pinched_model():
    psi = Profile.from_source("2 + sin(t)/2")
    return SubmersionModel(BaseModel(2, preset_profile("hyperbolic")),
                           circle_fiber(psi))


def test_volume_ratio_inequality_holds():
    model = pinched_model()
    dom = annulus(1.0, 3.0)
    rep = volume_ratio_check(model, dom,
                             fundamental_tone(model, dom),
                             total_space_tone(model, dom))
    assert rep.passed
    assert rep.lhs <= rep.rhs + rep.slack
    # psi in [1.5, 2.5] caps the fiber volume by 2 pi * 2.5 on any window
    assert rep.sup_volume <= 2 * math.pi * 2.5 + 1e-9
    assert rep.inf_volume >= 2 * math.pi * 1.5 - 1e-9


def test_volume_ratio_detects_violation():
    # wiring in a tone from a much smaller lifted domain breaks the
    # inequality; the check must say so rather than paper over it
    model = pinched_model()
    dom = annulus(1.0, 3.0)
    rep = volume_ratio_check(model, dom,
                             fundamental_tone(model, dom),
                             total_space_tone(model, annulus(1.0, 1.4)))
    assert not rep.passed


def test_volume_ratio_requires_fiber():
    with pytest.raises(ValueError):
        volume_ratio_check(HYP2, annulus(1.0, 2.0),
                           fundamental_tone(HYP2, annulus(1.0, 2.0)),
                           fundamental_tone(HYP2, annulus(1.0, 2.0)))
