import math
from dataclasses import replace

import numpy as np
import pytest

from mesodrop.mesoscopic import RadialGrid, solve_radial_eigen
from mesodrop.potential import HE4_HFDHE2
from mesodrop.shortscale import (PairResponse, amplitude_scaling_study,
                                 corrected_mesoscopic_potential, default_s_max,
                                 kinetic_correction_profile,
                                 pair_kinetic_correction,
                                 relative_separation_weight, s_max_sensitivity,
                                 solve_pair_response, weak_case_psi2)
from mesodrop.smoothing import SmoothedPotential, SmoothingKernel, smooth_pair_potential
from mesodrop.units import make_droplet

SILENT = replace(HE4_HFDHE2, eps_over_kB=0.0)


@pytest.fixture(scope="module")
def he_smoothed(he4, kappa):
    kernel = SmoothingKernel(xi=0.35, kappa=kappa)
    sv = smooth_pair_potential(he4, kernel, grid=np.geomspace(0.05, 34.0, 700))
    return kernel, sv


def constant_source_response(c: float, s_max: float = 8.0) -> PairResponse:
    """Response to source v - vt = c (vt tabulated at -c, zero potential)."""
    grid = np.linspace(0.5, 20.0, 50)
    sv = SmoothedPotential.tabulated(grid, np.full(50, -c))
    return solve_pair_response(SILENT, sv, 5.0, s_max)


def test_zero_source_gives_zero_response():
    resp = constant_source_response(0.0)
    assert np.all(resp.values == 0.0)
    assert np.all(resp.gradient == 0.0)


def test_constant_source_closed_form():
    c, s_max = 3.7e-23, 8.0
    resp = constant_source_response(c, s_max)
    s = resp.s_grid
    np.testing.assert_allclose(resp.values, (c / 3.0) * (s**2 - s_max**2),
                               rtol=1e-12, atol=1e-40)
    np.testing.assert_allclose(resp.gradient, 2.0 * c * s / 3.0,
                               rtol=1e-12, atol=1e-40)


def test_anchoring_conventions():
    resp = constant_source_response(1e-23)
    assert resp.gradient[0] == 0.0
    assert resp.values[-1] == 0.0


def test_residual_bound_on_helium_source(he_smoothed):
    _, sv = he_smoothed
    resp = solve_pair_response(HE4_HFDHE2, sv, 3.52, 7.5)
    assert resp.residual_max <= 1e-8 * resp.source_max


def test_linearity_in_source(he_smoothed):
    _, sv = he_smoothed
    one = solve_pair_response(HE4_HFDHE2, sv, 3.52, 7.5, source_scale=1.0)
    two = solve_pair_response(HE4_HFDHE2, sv, 3.52, 7.5, source_scale=2.0)
    np.testing.assert_allclose(two.values, 2.0 * one.values, rtol=1e-12)
    np.testing.assert_allclose(two.gradient, 2.0 * one.gradient, rtol=1e-12)


def test_rejects_bad_domains(he_smoothed):
    _, sv = he_smoothed
    with pytest.raises(ValueError, match="repulsive core"):
        solve_pair_response(HE4_HFDHE2, sv, 3.52, 2.0)
    with pytest.raises(ValueError, match="outside tabulated range"):
        solve_pair_response(HE4_HFDHE2, sv, 100.0, 7.5)


def test_kinetic_correction_zero_for_zero_response():
    resp = constant_source_response(0.0)
    kernel = SmoothingKernel(xi=0.35, kappa=1.0)
    assert pair_kinetic_correction(resp, kernel) == 0.0


def test_kinetic_correction_uniform_weight_closed_form():
    # b = s^2 means |b'|^2 = 4 s^2; its uniform-weight mean is (4/3) smax^2
    s_max = 6.0
    s = np.linspace(0.0, s_max, 6001)
    resp = PairResponse(s_grid=s, values=s**2, gradient=2.0 * s,
                        r_context=3.0, s_max=s_max, residual_max=0.0,
                        source_max=1.0)
    kernel = SmoothingKernel(xi=0.35, kappa=1.0)
    value = pair_kinetic_correction(resp, kernel, weight=np.ones_like(s))
    assert math.isclose(value, (4.0 / 3.0) * s_max**2, rel_tol=1e-7)


def test_kinetic_correction_zero_width_interpolates(he_smoothed):
    _, sv = he_smoothed
    resp = solve_pair_response(HE4_HFDHE2, sv, 3.52, 7.5)
    kernel = SmoothingKernel(xi=0.0, kappa=1.0)
    value = pair_kinetic_correction(resp, kernel)
    idx = np.searchsorted(resp.s_grid, 3.52)
    assert math.isclose(value, resp.gradient[idx] ** 2, rel_tol=1e-3)


def test_kinetic_correction_positive_on_helium(he_smoothed):
    kernel, sv = he_smoothed
    resp = solve_pair_response(HE4_HFDHE2, sv, 3.52, 7.5)
    value = pair_kinetic_correction(resp, kernel)
    assert value > 0.0
    assert math.isfinite(value)


def test_separation_weight_is_normalized():
    s = np.linspace(0.0, 60.0, 30001)
    w = relative_separation_weight(s, 3.5, 0.8)
    assert math.isclose(np.trapezoid(w, s), 1.0, rel_tol=1e-8)
    assert np.all(w >= 0.0)


def test_weak_case_has_identical_profile(he_smoothed):
    _, sv = he_smoothed
    strong = solve_pair_response(HE4_HFDHE2, sv, 3.52, 7.5)
    weak = weak_case_psi2(HE4_HFDHE2, sv, 3.52, 7.5)
    assert np.array_equal(weak.values, strong.values)
    assert np.array_equal(weak.gradient, strong.gradient)
    assert weak.role == "weak_residual"
    assert strong.role == "pair"


def test_weak_source_sign_near_core(he_smoothed):
    # where v - vt > 0 the Poisson charge density -2 (v - vt) phi is negative
    _, sv = he_smoothed
    vt = float(sv(3.52))
    from mesodrop.potential import evaluate
    core_excess = evaluate(HE4_HFDHE2, 2.0) - vt
    assert core_excess > 0.0
    assert -2.0 * core_excess < 0.0


@pytest.mark.parametrize("coupling,expected", [("weak", 2.0), ("strong", 1.0)])
def test_amplitude_scaling_exponents(he_smoothed, coupling, expected):
    _, sv = he_smoothed
    droplets = [make_droplet(n, 3.6) for n in (1000, 8000, 64000)]
    record = amplitude_scaling_study(HE4_HFDHE2, sv, droplets, coupling, 3.52, 7.5)
    assert abs(record.fitted_exponent - expected) < 1e-6
    assert record.fit_residual < 1e-6
    assert all(a > 0.0 for a in record.relative_amplitudes)


def test_amplitude_scaling_linear_in_coupling(he_smoothed):
    _, sv = he_smoothed
    droplets = [make_droplet(n, 3.6) for n in (1000, 8000, 64000)]
    base = amplitude_scaling_study(HE4_HFDHE2, sv, droplets, "weak", 3.52, 7.5,
                                   source_scale=1.0)
    doubled = amplitude_scaling_study(HE4_HFDHE2, sv, droplets, "weak", 3.52, 7.5,
                                      source_scale=2.0)
    ratios = [d / b for d, b in zip(doubled.relative_amplitudes,
                                    base.relative_amplitudes)]
    np.testing.assert_allclose(ratios, 2.0, rtol=1e-12)


def test_amplitude_scaling_rejects_degenerate(he_smoothed):
    _, sv = he_smoothed
    droplets = [make_droplet(1000, 3.6)] * 3
    with pytest.raises(ValueError, match="distinct"):
        amplitude_scaling_study(HE4_HFDHE2, sv, droplets, "weak", 3.52, 7.5)
    with pytest.raises(ValueError, match="coupling"):
        amplitude_scaling_study(HE4_HFDHE2, sv,
                                [make_droplet(n, 3.6) for n in (8, 64, 512)],
                                "medium", 3.52, 7.5)


def test_corrected_potential_zero_correction_is_rescaled_base(he_smoothed):
    _, sv = he_smoothed
    r = np.linspace(0.5, 12.0, 40)
    eps = 0.1
    out = corrected_mesoscopic_potential(r, np.zeros(40), sv, eps)
    np.testing.assert_allclose(out, np.asarray(sv(r)) / eps, rtol=1e-14)


def test_corrected_potential_dominates_base(he_smoothed):
    kernel, sv = he_smoothed
    r = np.linspace(0.5, 12.0, 24)
    profile = kinetic_correction_profile(HE4_HFDHE2, sv, kernel, r, 7.5)
    assert np.all(profile >= 0.0)
    out = corrected_mesoscopic_potential(r, profile, sv, 0.1)
    assert np.all(out >= np.asarray(sv(r)) / 0.1)


def test_corrected_potential_validation(he_smoothed):
    _, sv = he_smoothed
    r = np.linspace(0.5, 12.0, 10)
    with pytest.raises(ValueError):
        corrected_mesoscopic_potential(r, np.zeros(9), sv, 0.1)
    with pytest.raises(ValueError):
        corrected_mesoscopic_potential(r, -np.ones(10), sv, 0.1)
    with pytest.raises(ValueError):
        corrected_mesoscopic_potential(r, np.zeros(10), sv, 1.5)


def test_corrected_potential_raises_ground_level(he_smoothed):
    kernel, sv = he_smoothed
    grid = RadialGrid(20.0, 500)
    r = np.linspace(0.5, 20.0, 40)
    profile = kinetic_correction_profile(HE4_HFDHE2, sv, kernel, r, 7.5)
    from scipy.interpolate import CubicSpline
    corr = CubicSpline(r, corrected_mesoscopic_potential(r, profile, sv, 0.1))
    base = np.asarray(sv(grid.nodes)) / 0.1
    e_base, _ = solve_radial_eigen(base, grid)
    e_corr, _ = solve_radial_eigen(corr(grid.nodes), grid)
    assert e_corr >= e_base


def test_default_s_max_clears_core(he4):
    for xi in (0.1, 0.35, 0.9):
        kernel = SmoothingKernel(xi=xi, kappa=0.875)
        s_max = default_s_max(he4, kernel, 3.6)
        assert s_max > 2.65  # past the repulsive core


def test_s_max_sensitivity_reported(he_smoothed):
    kernel, sv = he_smoothed
    value = s_max_sensitivity(HE4_HFDHE2, sv, kernel, 3.52, 7.5)
    assert math.isfinite(value)
    assert value >= 0.0
