import math

import numpy as np
import pytest
from scipy.optimize import brentq

import mesodrop.mesoscopic as meso
from mesodrop.mesoscopic import (GridTooCoarseError, OrderParameter, RadialGrid,
                                 box_sensitivity, build_v_eff,
                                 chemical_potential_probe, converged_ground_state,
                                 density, hartree_energy, phi_from_u, scf_solve,
                                 solve_radial_eigen, xi_scan)
from mesodrop.smoothing import SmoothedPotential
from mesodrop.units import ANGSTROM, CODATA, make_droplet

HBAR, MASS = CODATA.hbar, CODATA.m


def sphere_energy(radius_angstrom: float) -> float:
    return math.pi**2 * HBAR**2 / (2.0 * MASS * (radius_angstrom * ANGSTROM) ** 2)


def test_grid_geometry():
    g = RadialGrid(10.0, 99)
    assert math.isclose(g.spacing, 0.1)
    assert math.isclose(g.nodes[0], 0.1)
    assert math.isclose(g.nodes[-1], 9.9)
    assert g.refined().n_points == 199
    assert math.isclose(g.refined().spacing, 0.05)
    with pytest.raises(ValueError):
        RadialGrid(10.0, 3)
    with pytest.raises(ValueError):
        RadialGrid(-1.0, 300)


def test_sphere_ground_state():
    g = RadialGrid(20.0, 300)
    e, u = solve_radial_eigen(np.zeros(300), g)
    assert abs(e / sphere_energy(20.0) - 1.0) < 1e-4
    # eigenfunction proportional to sin(pi r / R)
    expected = np.sin(np.pi * g.nodes / 20.0)
    expected /= math.sqrt(np.sum(expected**2) * g.spacing)
    assert np.max(np.abs(u - expected)) < 1e-4
    assert np.all(u >= -1e-12)


def test_harmonic_ground_state():
    omega = HBAR / (MASS * (1e-10) ** 2)
    g = RadialGrid(12.0, 2000)
    v = lambda r: 0.5 * MASS * omega**2 * (r * ANGSTROM) ** 2
    e, _ = solve_radial_eigen(v, g)
    assert abs(e / (1.5 * HBAR * omega) - 1.0) < 1e-4


def test_square_well_matches_transcendental_root():
    v0, a, rmax = 7.288e-23, 3.0, 12.0

    def mismatch(e):
        k = math.sqrt(2.0 * MASS * (v0 + e)) / HBAR
        kap = math.sqrt(-2.0 * MASS * e) / HBAR
        return k / math.tan(k * a * ANGSTROM) + kap / math.tanh(kap * (rmax - a) * ANGSTROM)

    e_root = brentq(mismatch, -v0 * 0.999, -1e-26, xtol=1e-40, rtol=1e-15)
    grid = RadialGrid(rmax, 2399)  # interface lands on a node
    nodes = grid.nodes
    v = np.where(np.abs(nodes - a) < 1e-12, -v0 / 2.0,
                 np.where(nodes < a, -v0, 0.0))
    e, _ = solve_radial_eigen(v, grid)
    assert abs(e - e_root) / abs(e_root) < 1e-6


def test_refinement_check_flags_coarse_grid():
    omega = HBAR / (MASS * (1e-10) ** 2)
    v = lambda r: 0.5 * MASS * omega**2 * (r * ANGSTROM) ** 2
    coarse = RadialGrid(12.0, 60)
    with pytest.raises(GridTooCoarseError):
        converged_ground_state(v, coarse, rel_tol=1e-9)
    e, _, shift = converged_ground_state(v, RadialGrid(12.0, 1200), rel_tol=1e-4)
    assert shift < 1e-4
    assert abs(e / (1.5 * HBAR * omega) - 1.0) < 1e-6


def test_v_eff_zero_interaction(gaussian_well):
    grid = RadialGrid(15.0, 80)
    sv0 = SmoothedPotential.tabulated(gaussian_well.grid,
                                      np.zeros_like(gaussian_well.values))
    _, u = solve_radial_eigen(np.zeros(80), grid)
    v_eff = build_v_eff(phi_from_u(u, grid), sv0, 5)
    assert np.all(v_eff == 0.0)


def test_v_eff_delta_density_limit(gaussian_well):
    # a narrow normalized density at the origin turns the convolution into vt
    grid = RadialGrid(12.0, 2400)
    sigma = 0.1
    phi = np.exp(-grid.nodes**2 / (2.0 * sigma**2))
    u = math.sqrt(4.0 * math.pi) * grid.nodes * phi
    u /= math.sqrt(np.sum(u**2) * grid.spacing)
    v_eff = build_v_eff(phi_from_u(u, grid), gaussian_well, 2)
    for r in (1.0, 2.5, 4.0):
        idx = int(round(r / grid.spacing)) - 1
        assert math.isclose(v_eff[idx], float(gaussian_well(grid.nodes[idx])),
                            rel_tol=5e-3)


def test_v_eff_matches_direct_double_loop(gaussian_well):
    rng = np.random.default_rng(3)
    grid = RadialGrid(15.0, 64)
    u = rng.uniform(0.1, 1.0, 64)
    u /= math.sqrt(np.sum(u**2) * grid.spacing)
    phi = phi_from_u(u, grid)
    v_eff = build_v_eff(phi, gaussian_well, 7)
    h = grid.spacing
    y = gaussian_well.evaluate_pair_integral(h * np.arange(0, 2 * 64 + 1))
    rho = phi.phi**2
    direct = np.zeros(64)
    for a in range(1, 65):
        acc = 0.0
        for b in range(1, 65):
            acc += rho[b - 1] * grid.nodes[b - 1] * h * (y[a + b] - y[abs(a - b)])
        direct[a - 1] = 6 * 2.0 * math.pi / grid.nodes[a - 1] * acc
    np.testing.assert_allclose(v_eff, direct, rtol=1e-12)


def test_v_eff_pair_energy_symmetric(gaussian_well):
    """Bilinear pair energy is invariant under swapping the two densities."""
    rng = np.random.default_rng(11)
    grid = RadialGrid(15.0, 200)
    h = grid.spacing
    weight = 4.0 * math.pi * grid.nodes**2 * h

    def normalized_phi(seed):
        u = rng.uniform(0.05, 1.0, 200) * np.exp(-grid.nodes / 6.0)
        u /= math.sqrt(np.sum(u**2) * h)
        return phi_from_u(u, grid)

    pa, pb = normalized_phi(1), normalized_phi(2)
    ab = float(np.sum(pa.phi**2 * build_v_eff(pb, gaussian_well, 2) * weight))
    ba = float(np.sum(pb.phi**2 * build_v_eff(pa, gaussian_well, 2) * weight))
    assert math.isclose(ab, ba, rel_tol=1e-12)


def test_scf_noninteracting_converges_first_iteration():
    grid = RadialGrid(20.0, 300)
    tab = np.geomspace(0.02, 45.0, 50)
    sv0 = SmoothedPotential.tabulated(tab, np.zeros(50))
    st = scf_solve(sv0, make_droplet(50, 3.6), grid)
    assert st.converged
    assert st.iterations == 1
    assert st.residual == 0.0
    assert math.isclose(st.energy, 50.0 * sphere_energy(20.0), rel_tol=1e-4)
    assert not st.bound  # box-dominated, eigenvalue positive


def test_scf_bound_model(gaussian_well):
    grid = RadialGrid(25.0, 1000)
    st = scf_solve(gaussian_well, make_droplet(2, 3.6), grid, mixing=0.5)
    assert st.converged
    assert st.bound
    assert st.eigenvalue < 0.0
    assert st.energy < 0.0
    assert st.residual <= 1e-10
    assert st.norm_drift_max <= 1e-10
    total, kinetic, pair = hartree_energy(st.phi, gaussian_well, 2)
    assert math.isclose(total, st.energy, rel_tol=1e-8)
    assert kinetic > 0.0
    assert pair < 0.0


def test_scf_rejects_bad_arguments(gaussian_well):
    grid = RadialGrid(25.0, 1000)
    spec = make_droplet(2, 3.6)
    with pytest.raises(ValueError):
        scf_solve(gaussian_well, spec, grid, mixing=0.0)
    with pytest.raises(ValueError):
        scf_solve(gaussian_well, spec, grid, tol=-1.0)
    with pytest.raises(ValueError):
        scf_solve(gaussian_well, spec, RadialGrid(25.0, 50))


def test_scf_mixing_guard_reaches_tolerance(gaussian_well):
    # mixing at the guard boundary still ends below tolerance in bound cases
    grid = RadialGrid(25.0, 600)
    st = scf_solve(gaussian_well, make_droplet(2, 3.6), grid, mixing=0.5, tol=1e-10)
    assert st.converged and st.residual <= 1e-10


def test_variational_bound_against_random_trials(gaussian_well):
    grid = RadialGrid(25.0, 600)
    spec = make_droplet(3, 3.6)
    st = scf_solve(gaussian_well, spec, grid, mixing=0.5)
    assert st.converged
    rng = np.random.default_rng(17)
    h = grid.spacing
    for _ in range(20):
        width = rng.uniform(1.0, 8.0)
        center = rng.uniform(0.0, 6.0)
        u = grid.nodes * np.exp(-((grid.nodes - center) ** 2) / (2.0 * width**2))
        u += rng.uniform(0.0, 0.3) * np.sin(np.pi * grid.nodes / grid.r_max) ** 2
        u /= math.sqrt(np.sum(u**2) * h)
        trial = phi_from_u(u, grid)
        e_trial, _, _ = hartree_energy(trial, gaussian_well, 3)
        assert e_trial >= st.energy - 1e-12 * abs(st.energy)


def test_box_sensitivity_small_for_bound_state(gaussian_well):
    grid = RadialGrid(25.0, 800)
    sens = box_sensitivity(gaussian_well, make_droplet(2, 3.6), grid,
                           scf_options=dict(mixing=0.5))
    assert sens < 1e-6


def test_density_properties(gaussian_well):
    grid = RadialGrid(25.0, 800)
    st = scf_solve(gaussian_well, make_droplet(2, 3.6), grid, mixing=0.5)
    rho = density(st, 1000).rho
    total = float(np.sum(rho * 4.0 * math.pi * grid.nodes**2 * grid.spacing))
    assert math.isclose(total, 1000.0, rel_tol=1e-8)
    assert np.all(rho >= 0.0)
    assert rho[-1] < 1e-12 * rho.max()


def test_exchange_symmetry_of_product_state():
    # permuting particle labels of a product state leaves it invariant
    # (equality up to float reassociation of the triple product)
    grid = RadialGrid(10.0, 12)
    rng = np.random.default_rng(23)
    phi = rng.uniform(0.1, 1.0, 12)
    product = np.einsum("i,j,k->ijk", phi, phi, phi)
    for axes in ((1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1)):
        np.testing.assert_allclose(np.transpose(product, axes), product,
                                   rtol=5e-16, atol=0.0)


def test_eigen_monotonicity_under_nonnegative_addition(gaussian_well):
    grid = RadialGrid(15.0, 400)
    rng = np.random.default_rng(31)
    base = np.asarray(gaussian_well(grid.nodes))
    bump = rng.uniform(0.0, 5e-23, 400)
    e0, _ = solve_radial_eigen(base, grid)
    e1, _ = solve_radial_eigen(base + bump, grid)
    assert e1 >= e0


def test_xi_scan_single_point(he4, kappa):
    spec = make_droplet(2, 3.6)
    grid = RadialGrid(20.0, 240)
    res = xi_scan(he4, spec, kappa, [0.5], grid,
                  scf_options=dict(max_iter=80), refine=True)
    assert len(res.rows) == 1
    assert res.best_xi == 0.5
    assert not res.refined


def test_xi_scan_all_unbound_warns(he4, kappa):
    from dataclasses import replace
    repulsive = replace(he4, C6=0.0, C8=0.0, C10=0.0)
    spec = make_droplet(2, 3.6)
    grid = RadialGrid(20.0, 240)
    res = xi_scan(repulsive, spec, kappa, [0.3, 0.5, 0.7], grid,
                  scf_options=dict(max_iter=60), refine=False)
    assert all(not row.bound for row in res.rows)
    assert all(row.eigenvalue > 0.0 for row in res.rows)
    assert res.warning is not None


def test_xi_scan_records_per_point_failures(he4, kappa, monkeypatch):
    calls = {"n": 0}
    original = meso.scf_solve

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise RuntimeError("synthetic failure")
        return original(*args, **kwargs)

    monkeypatch.setattr(meso, "scf_solve", flaky)
    spec = make_droplet(2, 3.6)
    grid = RadialGrid(20.0, 240)
    res = xi_scan(he4, spec, kappa, [0.4, 0.6, 0.8], grid,
                  scf_options=dict(max_iter=40), refine=False)
    errors = [row for row in res.rows if row.error]
    assert len(errors) == 1
    assert "synthetic failure" in errors[0].error
    assert math.isfinite(res.best_xi)


def test_xi_scan_refines_interior_argmin(he4, kappa, monkeypatch):
    # synthetic energy landscape with an interior minimum at xi = 0.55
    real_state = scf_solve(
        SmoothedPotential.tabulated(np.geomspace(0.02, 45.0, 50), np.zeros(50)),
        make_droplet(2, 3.6), RadialGrid(20.0, 240))

    def synthetic(sv, spec, grid, **kwargs):
        xi = sv.kernel.xi
        energy = 1e-22 * (xi - 0.55) ** 2
        from dataclasses import replace as dc_replace
        return dc_replace(real_state, energy=energy)

    monkeypatch.setattr(meso, "scf_solve", synthetic)
    spec = make_droplet(2, 3.6)
    grid = RadialGrid(20.0, 240)
    res = xi_scan(he4, spec, kappa, [0.4, 0.5, 0.7], grid, refine=True)
    assert res.refined
    assert abs(res.best_xi - 0.55) < 5e-3
    assert res.best_energy <= min(row.energy for row in res.rows)


def test_xi_scan_thread_merge_matches_sequential(he4, kappa):
    spec = make_droplet(2, 3.6)
    grid = RadialGrid(20.0, 240)
    seq = xi_scan(he4, spec, kappa, [0.4, 0.6, 0.8], grid,
                  scf_options=dict(max_iter=40), refine=False, max_workers=1)
    par = xi_scan(he4, spec, kappa, [0.4, 0.6, 0.8], grid,
                  scf_options=dict(max_iter=40), refine=False, max_workers=3)
    for a, b in zip(seq.rows, par.rows):
        assert a == b


def test_chemical_potential_box_is_exactly_constant():
    grid = RadialGrid(20.0, 300)
    tab = np.geomspace(0.02, 45.0, 50)
    sv0 = SmoothedPotential.tabulated(tab, np.zeros(50))
    rows = chemical_potential_probe(sv0, 3.6, range(5, 11), grid)
    mus = [row.chemical_potential for row in rows]
    e_box = sphere_energy(20.0)
    for mu in mus:
        assert math.isclose(mu, mus[0], rel_tol=1e-9)
        assert math.isclose(mu, e_box, rel_tol=1e-4)


def test_chemical_potential_definition(gaussian_well):
    grid = RadialGrid(25.0, 400)
    rows = chemical_potential_probe(gaussian_well, 3.6, [2], grid,
                                    scf_options=dict(mixing=0.5))
    st2 = scf_solve(gaussian_well, make_droplet(2, 3.6), grid, mixing=0.5)
    st3 = scf_solve(gaussian_well, make_droplet(3, 3.6), grid, mixing=0.5)
    assert math.isclose(rows[0].chemical_potential, st3.energy - st2.energy,
                        rel_tol=1e-12)


def test_order_parameter_norm_check():
    grid = RadialGrid(10.0, 500)
    u = np.sin(np.pi * grid.nodes / 10.0)
    u /= math.sqrt(np.sum(u**2) * grid.spacing)
    phi = phi_from_u(u, grid)
    assert math.isclose(phi.norm_check, 1.0, abs_tol=1e-12)
    assert isinstance(phi, OrderParameter)
