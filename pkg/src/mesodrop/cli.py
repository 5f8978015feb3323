"""Command line front end tying the library into reproducible runs.

Artifacts (CSV profiles, JSON reports, PNG figures) are deterministic for a
fixed config and seed; wall-clock timings go to the console log only.  Exit
codes: 0 success, 2 config error, 3 numeric failure, 4 comparison failure
(``--check``).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, reference
from .config import ConfigError, RunConfig, load_config, parse_xi_list
from .mesoscopic import RadialGrid, default_tabulation_grid, density, scf_solve, xi_scan
from .potential import PairPotential, analyze_bare_well, evaluate
from .report import make_report, write_csv, write_json
from .shortscale import (amplitude_scaling_study, default_s_max,
                         pair_kinetic_correction, s_max_sensitivity,
                         solve_pair_response)
from .smoothing import (SmoothingKernel, calibrate_kappa, mc_oracle,
                        smooth_pair_potential, smoothed_value, smoothed_well)
from .units import (Constants, characteristic_kinetic_energy, joule_to_kelvin,
                    make_droplet, scale_ratio)

log = logging.getLogger("mesodrop")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_COMPARISON = 4

#: Quadrature-vs-Monte-Carlo checkpoints spanning core, well, and tail.
ORACLE_PAIRS = tuple(
    (xi, r) for xi in (0.2, 0.35, 0.6, 0.9) for r in (2.0, 3.5, 8.0)
)

#: Scan points used by the orchestrated run.
ALL_XI_VALUES = (0.30, 0.45, 0.60, 0.75, 0.90)

#: Tolerances for published-value comparisons (--check and row annotations).
POSITION_RTOL = 0.05
DEPTH_RTOL = 0.15
SHALLOW_DEPTH_ATOL_K = 0.02
REST_ENERGY_RTOL = 0.25


class Session:
    """Resolved configuration plus lazily calibrated shared state."""

    def __init__(self, cfg: RunConfig, out_dir: Path):
        from dataclasses import asdict

        self.cfg = cfg
        self.constants: Constants = cfg.constants
        self.potential = PairPotential(**asdict(cfg.potential))
        self.out_dir = out_dir
        self.config_hash = cfg.config_hash()
        self.seed = cfg.seeds.mc_seed
        self._kappa: float | None = None

    @property
    def kappa(self) -> float:
        if self._kappa is None:
            if self.cfg.kernel.kappa == "calibrate":
                t0 = time.perf_counter()
                self._kappa = calibrate_kappa(
                    self.potential, reference.CALIBRATION_TARGET, self.constants
                )
                log.info("kappa calibrated to %.6f angstrom per unit xi in %.1f s",
                         self._kappa, time.perf_counter() - t0)
            else:
                self._kappa = float(self.cfg.kernel.kappa)
        return self._kappa

    def kernel(self, xi: float) -> SmoothingKernel:
        return SmoothingKernel(xi=xi, kappa=self.kappa)

    def wants(self, fmt: str) -> bool:
        return fmt in self.cfg.output.formats

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def report(self, command: str, results: dict, units: dict,
               notes: list[str] | None = None) -> dict:
        return make_report(command, self.config_hash, self.seed, results, units, notes)


def _thread_cap() -> int:
    raw = os.environ.get("MESODROP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring invalid MESODROP_THREADS=%r", raw)
        return 1


# ----------------------------- commands -----------------------------


def cmd_potential(session: Session, args) -> list[Path]:
    if args.rmin <= 0 or args.rmax <= args.rmin:
        raise ConfigError("need 0 < rmin < rmax")
    if args.samples < 2:
        raise ConfigError("need at least 2 samples")
    r = np.linspace(args.rmin, args.rmax, args.samples)
    v_j = np.asarray(evaluate(session.potential, r, session.constants))
    v_k = v_j / session.constants.k_B
    artifacts = []
    if session.wants("csv"):
        artifacts.append(write_csv(
            session.path("potential.csv"),
            ["r_angstrom", "v_kelvin", "v_joule"],
            zip(r, v_k, v_j),
        ))
    if session.wants("png"):
        from . import plotting
        artifacts.append(plotting.plot_potential(session.path("potential.png"), r, v_k))
    return artifacts


def cmd_smooth(session: Session, args) -> list[Path]:
    if args.rmin <= 0 or args.rmax <= args.rmin:
        raise ConfigError("need 0 < rmin < rmax")
    xi = session.cfg.kernel.xi if args.xi is None else args.xi
    n_particles = session.cfg.droplet.N if args.n is None else args.n
    if xi < 0:
        raise ConfigError("xi must be non-negative")
    if n_particles < 2:
        raise ConfigError("droplet needs at least 2 particles")
    kernel = session.kernel(xi)
    # positions follow the droplet's scaled-length convention relative to
    # the 10^3-particle reference droplet
    scale = scale_ratio(n_particles) / scale_ratio(1000)
    r_phys = np.linspace(args.rmin, args.rmax, args.samples)
    vt = np.array([smoothed_value(session.potential, kernel.pair_width, r,
                                  session.constants) for r in r_phys])
    vt_k = vt / session.constants.k_B
    r_out = r_phys * scale
    artifacts = []
    stem = f"smooth_xi{xi:g}"
    if session.wants("csv"):
        artifacts.append(write_csv(
            session.path(stem + ".csv"),
            ["R_angstrom", "v_tilde_kelvin"],
            zip(r_out, vt_k),
        ))
    if session.wants("png"):
        from . import plotting
        artifacts.append(plotting.plot_smoothed(session.path(stem + ".png"),
                                                r_out, vt_k, xi))
    return artifacts


def _bare_row(session: Session) -> dict:
    constants = session.constants
    well = analyze_bare_well(session.potential, constants)
    ref = reference.well_reference(1000, 0.0)
    depth_k = joule_to_kelvin(well.depth, constants)
    rest_dev = well.rest_energy / reference.REST_ENERGY_JOULE - 1.0
    droplet = make_droplet(1000, session.cfg.droplet.l_angstrom)
    box_energy = characteristic_kinetic_energy(droplet, constants) * math.pi**2 / 2.0
    row = {
        "n_particles": 1000,
        "xi": 0.0,
        "position_angstrom": well.r_min,
        "position_physical_angstrom": well.r_min,
        "depth_kelvin": depth_k,
        "depth_joule": well.depth,
        "curvature_newton_per_meter": well.curvature_si,
        "rest_energy_joule": well.rest_energy,
        "reference": {
            "position_angstrom": ref.position_angstrom,
            "depth_kelvin": ref.depth_kelvin,
            "depth_joule": ref.depth_joule,
            "rest_energy_joule": reference.REST_ENERGY_JOULE,
            "tag": reference.TABLE_TAG,
        },
        "deviation": {
            "position_rel": well.r_min / ref.position_angstrom - 1.0,
            "depth_rel": depth_k / ref.depth_kelvin - 1.0,
            "rest_energy_rel": rest_dev,
        },
        "within_tolerance": bool(
            abs(well.r_min - ref.position_angstrom) <= 0.01
            and abs(depth_k - ref.depth_kelvin) <= 0.1
        ),
        "finding": None,
        "best_guess_columns": {
            "half_width_angstrom": {
                "value": math.sqrt(constants.hbar / (constants.m * well.omega)) / 1e-10,
                "reference": reference.HALF_WIDTH_ANGSTROM,
                "definition": "sqrt(hbar / (m omega)) for the bare-well harmonic frequency",
            },
            "ground_state_energy_joule": {
                "value": box_energy,
                "reference": reference.GROUND_STATE_ENERGY_JOULE,
                "definition": "pi^2 hbar^2 / (2 m L^2), lowest droplet-size box mode (N = 10^3)",
            },
            "droplet_kinetic_joule": {
                "value": 1000 * characteristic_kinetic_energy(droplet, constants),
                "reference": reference.DROPLET_KINETIC_JOULE,
                "definition": "N hbar^2 / (m L^2) for the 10^3-particle droplet",
            },
        },
    }
    if abs(rest_dev) > REST_ENERGY_RTOL:
        row["finding"] = (
            f"rest energy hbar*omega/2 = {well.rest_energy:.4e} J deviates by "
            f"{rest_dev:+.1%} from the published 1.108e-22 J; the published "
            "curvature convention is not reconstructible, so the deviation is "
            "reported rather than asserted"
        )
    return row


def _smoothed_row(session: Session, n_particles: int, xi: float) -> dict:
    constants = session.constants
    kernel = session.kernel(xi)
    scale = scale_ratio(n_particles) / scale_ratio(1000)
    well = smoothed_well(session.potential, kernel, constants, scale=scale)
    ref = reference.well_reference(n_particles, xi)
    depth_k = joule_to_kelvin(well.depth, constants)
    pos_dev = well.r_min / ref.position_angstrom - 1.0
    depth_dev = depth_k / ref.depth_kelvin - 1.0
    shallow = abs(ref.depth_kelvin) < 0.1
    depth_ok = (abs(depth_k - ref.depth_kelvin) <= SHALLOW_DEPTH_ATOL_K if shallow
                else abs(depth_dev) <= DEPTH_RTOL)
    pos_ok = abs(pos_dev) <= POSITION_RTOL
    finding = None
    # only the near-zero well carries a documented finding: once its position
    # pins the Gaussian width, the depth there is forced to the family's
    # locus value, which no single-parameter width can reconcile with the
    # published near-zero depth; any other miss is a real comparison failure
    if not depth_ok and shallow and pos_ok:
        finding = (
            f"best-fit depth {depth_k:.4f} K at xi={xi:g} misses the published "
            f"{ref.depth_kelvin} K (tolerance {SHALLOW_DEPTH_ATOL_K} K): the "
            f"minimum position pins the calibrated width, and the Gaussian "
            f"family's depth at that position is {depth_k:.3f} K, so no single "
            f"width reproduces this (position, depth) pair simultaneously"
        )
    return {
        "n_particles": n_particles,
        "xi": xi,
        "position_angstrom": well.r_min,
        "position_physical_angstrom": well.r_min / scale,
        "depth_kelvin": depth_k,
        "depth_joule": well.depth,
        "reference": {
            "position_angstrom": ref.position_angstrom,
            "depth_kelvin": ref.depth_kelvin,
            "depth_joule": ref.depth_joule,
            "tag": reference.TABLE_TAG,
        },
        "deviation": {
            "position_rel": pos_dev,
            "depth_rel": depth_dev,
            "depth_abs_kelvin": depth_k - ref.depth_kelvin,
        },
        "within_tolerance": bool(pos_ok and depth_ok),
        "finding": finding,
    }


def run_table1(session: Session) -> dict:
    """Comparison table of well properties against the published values.

    Per-row failures are annotated and the remaining rows still compute.
    """
    rows = []
    try:
        rows.append(_bare_row(session))
    except Exception as exc:
        log.error("bare row failed: %s", exc)
        rows.append({"n_particles": 1000, "xi": 0.0, "within_tolerance": False,
                     "finding": None, "error": str(exc)})
    for n_particles in (1000, 1_000_000):
        for xi in (0.35, 0.60, 0.90):
            try:
                rows.append(_smoothed_row(session, n_particles, xi))
            except Exception as exc:
                log.error("row N=%d xi=%g failed: %s", n_particles, xi, exc)
                rows.append({"n_particles": n_particles, "xi": xi,
                             "within_tolerance": False, "finding": None,
                             "error": str(exc)})
    notes = [row["finding"] for row in rows if row.get("finding")]
    notes += [f"row N={row['n_particles']} xi={row['xi']:g} failed: {row['error']}"
              for row in rows if row.get("error")]
    results = {
        "kappa_angstrom_per_xi": session.kappa,
        "rows": rows,
        "position_convention": (
            "positions for each droplet size are stated in that droplet's "
            "scaled length units relative to the 10^3-particle reference "
            "(physical position times the scale-ratio quotient)"
        ),
    }
    units = {
        "position_angstrom": "angstrom",
        "position_physical_angstrom": "angstrom",
        "depth_kelvin": "K",
        "depth_joule": "J",
        "curvature_newton_per_meter": "N/m",
        "rest_energy_joule": "J",
        "half_width_angstrom": "angstrom",
        "ground_state_energy_joule": "J",
        "droplet_kinetic_joule": "J",
        "kappa_angstrom_per_xi": "angstrom",
        "deviation.position_rel": "relative",
        "deviation.depth_rel": "relative",
        "deviation.depth_abs_kelvin": "K",
    }
    return session.report("table1", results, units, notes)


def cmd_table1(session: Session, args) -> list[Path]:
    payload = run_table1(session)
    artifacts = [write_json(session.path("table1.json"), payload)]
    if args.check:
        bad = [row for row in payload["results"]["rows"]
               if not row["within_tolerance"] and not row.get("finding")]
        if bad:
            raise ComparisonFailure(
                f"{len(bad)} row(s) outside tolerance without a documented finding"
            )
    return artifacts


class ComparisonFailure(RuntimeError):
    """Published-value comparison failed (CLI exit code 4)."""


def cmd_fig1(session: Session, args) -> list[Path]:
    if args.samples < 2:
        raise ConfigError("need at least 2 samples")
    xis = (0.35, 0.60, 0.90)
    r = np.linspace(args.rmin, args.rmax, args.samples)
    bare = np.asarray(evaluate(session.potential, r, session.constants))
    bare_k = bare / session.constants.k_B
    profiles = {}
    for xi in xis:
        kernel = session.kernel(xi)
        vt = np.array([smoothed_value(session.potential, kernel.pair_width, rr,
                                      session.constants) for rr in r])
        profiles[xi] = vt / session.constants.k_B
    artifacts = []
    if session.wants("csv"):
        for label, xi in zip("abc", xis):
            artifacts.append(write_csv(
                session.path(f"fig1_{label}_xi{xi:g}.csv"),
                ["R_angstrom", "v_tilde_kelvin", "v_bare_kelvin"],
                zip(r, profiles[xi], bare_k),
            ))
    if session.wants("png"):
        from . import plotting
        artifacts.append(plotting.plot_profiles(session.path("fig1.png"),
                                                r, profiles, bare_k))
    return artifacts


def _scf_setup(session: Session, n_particles: int, xi: float):
    droplet = make_droplet(n_particles, session.cfg.droplet.l_angstrom)
    grid = RadialGrid(session.cfg.grid.r_max_factor * droplet.size,
                      session.cfg.grid.n_points)
    kernel = session.kernel(xi)
    sv = smooth_pair_potential(session.potential, kernel,
                               grid=default_tabulation_grid(grid),
                               constants=session.constants)
    return droplet, grid, sv


def cmd_scf(session: Session, args) -> list[Path]:
    n_particles = session.cfg.droplet.N if args.n is None else args.n
    xi = session.cfg.kernel.xi if args.xi is None else args.xi
    mixing = session.cfg.scf.mixing if args.mixing is None else args.mixing
    tol = session.cfg.scf.tol if args.tol is None else args.tol
    droplet, grid, sv = _scf_setup(session, n_particles, xi)
    t0 = time.perf_counter()
    state = scf_solve(sv, droplet, grid, mixing=mixing, tol=tol,
                      max_iter=session.cfg.scf.max_iter, constants=session.constants)
    log.info("scf: %d iterations in %.1f s (converged=%s)",
             state.iterations, time.perf_counter() - t0, state.converged)
    rho = density(state, n_particles).rho
    results = {
        "n_particles": n_particles,
        "xi": xi,
        "kappa_angstrom_per_xi": session.kappa,
        "E_star_J": state.eigenvalue,
        "E2_J": state.energy,
        "kinetic_per_particle_J": state.kinetic_per_particle,
        "pair_expectation_J": state.pair_expectation,
        "bound": state.bound,
        "converged": state.converged,
        "iterations": state.iterations,
        "residual": state.residual,
        "mixing_final": state.mixing_final,
        "halvings": state.halvings,
        "grid": {"r_max_angstrom": grid.r_max, "n_points": grid.n_points},
    }
    notes = []
    if not state.converged:
        notes.append(
            "self-consistent iteration did not reach the residual tolerance; "
            "values describe the final flagged iterate"
        )
    units = {"E_star_J": "J", "E2_J": "J", "kinetic_per_particle_J": "J",
             "pair_expectation_J": "J", "residual": "relative L2 density change",
             "r_max_angstrom": "angstrom"}
    artifacts = [write_json(session.path("scf.json"),
                            session.report("scf", results, units, notes))]
    if session.wants("csv"):
        artifacts.append(write_csv(
            session.path("scf_profiles.csv"),
            ["r_angstrom", "phi_per_angstrom32", "rho_per_angstrom3", "v_eff_joule"],
            zip(grid.nodes, state.phi.phi, rho, state.v_eff),
        ))
    if session.wants("png"):
        from . import plotting
        artifacts.append(plotting.plot_scf(session.path("scf.png"), grid.nodes,
                                           state.phi.phi, rho, state.v_eff))
    return artifacts


def cmd_xiscan(session: Session, args) -> list[Path]:
    n_particles = session.cfg.droplet.N if args.n is None else args.n
    xi_values = parse_xi_list(args.xi_list)
    if not xi_values:
        raise ConfigError("xi list is empty")
    droplet = make_droplet(n_particles, session.cfg.droplet.l_angstrom)
    grid = RadialGrid(session.cfg.grid.r_max_factor * droplet.size,
                      session.cfg.grid.n_points)
    t0 = time.perf_counter()
    scan = xi_scan(
        session.potential, droplet, session.kappa, xi_values, grid,
        constants=session.constants,
        scf_options=dict(mixing=session.cfg.scf.mixing, tol=session.cfg.scf.tol,
                         max_iter=session.cfg.scf.max_iter),
        refine=args.refine,
        max_workers=_thread_cap(),
    )
    log.info("xiscan: %d points in %.1f s", len(xi_values), time.perf_counter() - t0)
    rows = [{
        "xi": row.xi, "E2_J": row.energy, "E_star_J": row.eigenvalue,
        "bound": row.bound, "converged": row.converged,
        "iterations": row.iterations, "residual": row.residual, "error": row.error,
    } for row in scan.rows]
    results = {
        "n_particles": n_particles,
        "kappa_angstrom_per_xi": session.kappa,
        "rows": rows,
        "argmin": {"xi": scan.best_xi, "E2_J": scan.best_energy,
                   "refined": scan.refined},
        "warning": scan.warning,
    }
    units = {"E2_J": "J", "E_star_J": "J", "xi": "dimensionless"}
    notes = [scan.warning] if scan.warning else []
    artifacts = [write_json(session.path("xiscan.json"),
                            session.report("xiscan", results, units, notes))]
    if session.wants("csv"):
        artifacts.append(write_csv(
            session.path("xiscan.csv"),
            ["xi", "E2_joule", "E_star_joule", "bound", "converged",
             "iterations", "residual"],
            [(r.xi, r.energy, r.eigenvalue, r.bound, r.converged,
              r.iterations, r.residual) for r in scan.rows],
        ))
    if session.wants("png"):
        from . import plotting
        finite = [(r.xi, r.energy) for r in scan.rows if math.isfinite(r.energy)]
        if finite:
            xs, es = map(np.asarray, zip(*finite))
            artifacts.append(plotting.plot_xiscan(session.path("xiscan.png"),
                                                  xs, es, scan.best_xi))
    return artifacts


def cmd_shortscale(session: Session, args) -> list[Path]:
    xi = session.cfg.kernel.xi if args.xi is None else args.xi
    kernel = session.kernel(xi)
    spacing = session.cfg.droplet.l_angstrom
    s_max = args.smax if args.smax is not None else default_s_max(
        session.potential, kernel, spacing)
    tab = np.geomspace(0.05, max(34.0, 1.5 * args.R), 700)
    sv = smooth_pair_potential(session.potential, kernel, grid=tab,
                               constants=session.constants)
    resp = solve_pair_response(session.potential, sv, args.R, s_max,
                               constants=session.constants)
    correction = pair_kinetic_correction(resp, kernel)
    sensitivity = s_max_sensitivity(session.potential, sv, kernel, args.R, s_max,
                                    session.constants)
    results = {
        "xi": xi,
        "R_angstrom": args.R,
        "s_max_angstrom": s_max,
        "C_pair": correction,
        "residual_max_J": resp.residual_max,
        "residual_bound_J": 1e-8 * resp.source_max,
        "vt_context_J": float(sv(args.R)),
        "s_max_sensitivity_rel": sensitivity,
    }
    units = {"R_angstrom": "angstrom", "s_max_angstrom": "angstrom",
             "C_pair": "J^2 angstrom^2", "residual_max_J": "J",
             "residual_bound_J": "J", "vt_context_J": "J",
             "s_max_sensitivity_rel": "relative"}
    notes = ["C_pair is the kernel-weighted mean of the squared response "
             "gradient; the anchoring radius sensitivity is reported alongside"]
    artifacts = [write_json(session.path("shortscale.json"),
                            session.report("shortscale", results, units, notes))]
    if session.wants("csv"):
        step = max(1, len(resp.s_grid) // 2000)
        artifacts.append(write_csv(
            session.path("shortscale.csv"),
            ["s_angstrom", "b_joule_angstrom2", "db_ds_joule_angstrom"],
            zip(resp.s_grid[::step], resp.values[::step], resp.gradient[::step]),
        ))
    if session.wants("png"):
        from . import plotting
        artifacts.append(plotting.plot_shortscale(
            session.path("shortscale.png"), resp.s_grid, resp.values, resp.gradient))
    return artifacts


def cmd_scaling(session: Session, args) -> list[Path]:
    eps_values = [float(tok) for tok in args.eps.split(",") if tok.strip()]
    if len(set(eps_values)) < 3:
        raise ConfigError("need at least 3 distinct scale ratios")
    if any(not 0.0 < e < 1.0 for e in eps_values):
        raise ConfigError("scale ratios must lie in (0, 1)")
    # epsilon is tied to the particle count; map each ratio to its droplet
    droplets = [make_droplet(max(2, round(e ** -3)), session.cfg.droplet.l_angstrom)
                for e in eps_values]
    xi = session.cfg.kernel.xi
    kernel = session.kernel(xi)
    spacing = session.cfg.droplet.l_angstrom
    s_max = default_s_max(session.potential, kernel, spacing)
    tab = np.geomspace(0.05, 34.0, 700)
    sv = smooth_pair_potential(session.potential, kernel, grid=tab,
                               constants=session.constants)
    couplings = ("weak", "strong") if args.coupling == "both" else (args.coupling,)
    records = {}
    for coupling in couplings:
        rec = amplitude_scaling_study(session.potential, sv, droplets, coupling,
                                      args.R, s_max, session.constants)
        records[coupling] = {
            "epsilon_values": list(rec.epsilon_values),
            "relative_amplitudes": list(rec.relative_amplitudes),
            "fitted_exponent": rec.fitted_exponent,
            "fit_residual": rec.fit_residual,
        }
    results = {"xi": xi, "R_angstrom": args.R, "s_max_angstrom": s_max,
               "records": records}
    units = {"R_angstrom": "angstrom", "s_max_angstrom": "angstrom",
             "relative_amplitudes": "response units (J angstrom^2) per unit envelope",
             "fitted_exponent": "dimensionless"}
    artifacts = [write_json(session.path("scaling.json"),
                            session.report("scaling", results, units))]
    if session.wants("png"):
        from . import plotting
        for coupling, rec in records.items():
            artifacts.append(plotting.plot_scaling(
                session.path(f"scaling_{coupling}.png"),
                np.asarray(rec["epsilon_values"]),
                np.asarray(rec["relative_amplitudes"]),
                rec["fitted_exponent"], coupling))
    return artifacts


def cmd_oracle(session: Session, args) -> list[Path]:
    if args.samples < 10_000:
        raise ConfigError("oracle needs at least 1e4 samples")
    pairs = ORACLE_PAIRS
    if args.xi is not None and args.R is not None:
        pairs = ((args.xi, args.R),)
    rows = []
    for i, (xi, r) in enumerate(pairs):
        kernel = session.kernel(xi)
        quad_val = smoothed_value(session.potential, kernel.pair_width, r,
                                  session.constants)
        mc_val, se = mc_oracle(session.potential, kernel, r, args.samples,
                               seed=session.seed + i, constants=session.constants)
        z = (quad_val - mc_val) / se if se > 0 else 0.0
        rows.append({"xi": xi, "R_angstrom": r, "quadrature_J": quad_val,
                     "mc_estimate_J": mc_val, "mc_std_error_J": se,
                     "z_score": z, "samples": args.samples,
                     "seed": session.seed + i})
    worst = max(abs(row["z_score"]) for row in rows)
    results = {"rows": rows, "worst_abs_z": worst, "all_within_3se": worst <= 3.0}
    units = {"R_angstrom": "angstrom", "quadrature_J": "J", "mc_estimate_J": "J",
             "mc_std_error_J": "J", "z_score": "standard errors"}
    return [write_json(session.path("oracle.json"),
                       session.report("oracle", results, units))]


ALL_STEPS = ("potential", "fig1", "table1", "scf", "xiscan", "shortscale", "scaling")


def cmd_all(session: Session, args) -> list[Path]:
    parser = build_parser()
    steps: dict[str, dict] = {}
    artifacts: list[Path] = []
    failed = False
    for step in ALL_STEPS:
        defaults = parser.parse_args([step] + _default_step_args(step))
        t0 = time.perf_counter()
        try:
            produced = COMMANDS[step](session, defaults)
            steps[step] = {
                "status": "ok",
                "artifacts": sorted(p.name for p in produced),
            }
            artifacts.extend(produced)
        except Exception as exc:
            failed = True
            steps[step] = {"status": "failed", "artifacts": [], "error": str(exc)}
            log.error("step %s failed: %s", step, exc)
        log.info("step %s finished in %.1f s", step, time.perf_counter() - t0)
    summary = session.report(
        "all",
        {"steps": steps, "kappa_angstrom_per_xi": session.kappa},
        {"kappa_angstrom_per_xi": "angstrom"},
        ["orchestrated run; per-step numeric failures are annotated, not fatal"],
    )
    artifacts.append(write_json(session.path("summary.json"), summary))
    if failed:
        raise StepFailure("one or more steps failed; see summary.json")
    if args.check:
        table_args = parser.parse_args(["table1", "--check"])
        cmd_table1(session, table_args)
    return artifacts


def _default_step_args(step: str) -> list[str]:
    if step == "xiscan":
        return ["--xi-list", ",".join(f"{x:g}" for x in ALL_XI_VALUES)]
    return []


class StepFailure(RuntimeError):
    """At least one orchestrated step failed numerically (exit code 3)."""


COMMANDS = {
    "potential": cmd_potential,
    "smooth": cmd_smooth,
    "table1": cmd_table1,
    "fig1": cmd_fig1,
    "scf": cmd_scf,
    "xiscan": cmd_xiscan,
    "shortscale": cmd_shortscale,
    "scaling": cmd_scaling,
    "oracle": cmd_oracle,
    "all": cmd_all,
}


# ----------------------------- parser -----------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mesodrop",
        description="Smoothed effective potentials and mean-field ground states "
                    "of finite boson droplets.",
    )
    parser.add_argument("--version", action="version", version=f"mesodrop {__version__}")
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, help="artifact output directory")
    parser.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("potential", help="bare pair potential profile")
    p.add_argument("--rmin", type=float, default=2.0)
    p.add_argument("--rmax", type=float, default=12.0)
    p.add_argument("--samples", type=int, default=500)

    p = sub.add_parser("smooth", help="smoothed pair potential profile")
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--n", type=int, default=None, help="droplet particle count")
    p.add_argument("--rmin", type=float, default=0.5)
    p.add_argument("--rmax", type=float, default=15.0)
    p.add_argument("--samples", type=int, default=400)

    p = sub.add_parser("table1", help="well-property comparison table")
    p.add_argument("--check", action="store_true",
                   help="exit 4 when a comparison is out of tolerance and undocumented")

    p = sub.add_parser("fig1", help="three-panel smoothed-potential profiles")
    p.add_argument("--rmin", type=float, default=2.0)
    p.add_argument("--rmax", type=float, default=12.0)
    p.add_argument("--samples", type=int, default=300)

    p = sub.add_parser("scf", help="self-consistent mean-field ground state")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--mixing", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("xiscan", help="energy scan over the smoothing parameter")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--xi-list", type=str, default="0.3:0.9:0.15",
                   help="'start:stop:step' or comma list")
    p.add_argument("--refine", dest="refine", action="store_true", default=True)
    p.add_argument("--no-refine", dest="refine", action="store_false")

    p = sub.add_parser("shortscale", help="pair response and kinetic correction")
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--R", type=float, default=3.52, help="envelope separation")
    p.add_argument("--smax", type=float, default=None)

    p = sub.add_parser("scaling", help="short-scale amplitude scaling study")
    p.add_argument("--coupling", choices=["weak", "strong", "both"], default="both")
    p.add_argument("--eps", type=str, default="0.1,0.05,0.025")
    p.add_argument("--R", type=float, default=3.52)

    p = sub.add_parser("oracle", help="quadrature vs Monte Carlo cross-check")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--R", type=float, default=None)

    p = sub.add_parser("all", help="run every report step with one config")
    p.add_argument("--check", action="store_true")

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be non-negative")
            from dataclasses import replace as dc_replace
            cfg = dc_replace(cfg, seeds=dc_replace(cfg.seeds, mc_seed=args.seed))
        out_dir = Path(args.out) if args.out else Path(cfg.output.directory)
        session = Session(cfg, out_dir)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG

    t0 = time.perf_counter()
    try:
        artifacts = COMMANDS[args.command](session, args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except ComparisonFailure as exc:
        log.error("comparison failure: %s", exc)
        return EXIT_COMPARISON
    except Exception as exc:
        log.error("numeric failure in %s: %s", args.command, exc)
        return EXIT_NUMERIC
    log.info("%s finished in %.1f s; %d artifact(s) in %s",
             args.command, time.perf_counter() - t0, len(artifacts), out_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
