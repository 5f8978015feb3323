"""Mean-field ground state of the droplet envelope on a radial grid.

The envelope order parameter phi solves the nonlinear eigenproblem

    [ -(hbar^2 / 2m) lap + v_eff ] phi = E* phi,
    v_eff(R) = (N - 1) int vt(|R - R'|) |phi(R')|^2 d^3R',

closed by self-consistent iteration with linear density mixing.  The s-wave
reduction u = sqrt(4 pi) r phi turns the Laplacian into a symmetric
tridiagonal operator with Dirichlet walls at 0 and r_max; the effective
potential is built by the same isotropic radial-convolution reduction used
for the pair smoothing.

Total energy convention: E_total = N <kin> + (1/2) N (N-1) <phi phi|vt|phi phi>,
the one-half preventing double counting of pairs.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize_scalar

from .potential import PairPotential
from .smoothing import SmoothedPotential, SmoothingKernel, smooth_pair_potential
from .units import ANGSTROM, CODATA, Constants, DropletSpec

log = logging.getLogger(__name__)

#: Production grids must resolve the droplet; coarser grids are for oracles.
MIN_PRODUCTION_POINTS = 200


class GridTooCoarseError(RuntimeError):
    """Eigenvalue shift under refinement exceeded the requested tolerance."""


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid of interior nodes with Dirichlet walls at 0, r_max."""

    r_max: float
    n_points: int

    def __post_init__(self):
        if self.r_max <= 0.0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.n_points < 4:
            raise ValueError(f"need at least 4 interior nodes, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return self.r_max / (self.n_points + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.spacing * np.arange(1, self.n_points + 1)

    def refined(self) -> "RadialGrid":
        """Grid with halved spacing on the same domain."""
        return RadialGrid(self.r_max, 2 * self.n_points + 1)


@dataclass(frozen=True)
class OrderParameter:
    """Radial order parameter phi on a grid, normalized to unit 3-D integral."""

    grid: RadialGrid
    phi: np.ndarray

    @property
    def norm_check(self) -> float:
        """int |phi|^2 d^3R under the grid's trapezoid rule."""
        u = self.radial_u()
        return float(np.sum(u * u) * self.grid.spacing)

    def radial_u(self) -> np.ndarray:
        """Reduced radial function u = sqrt(4 pi) r phi."""
        return math.sqrt(4.0 * math.pi) * self.grid.nodes * self.phi


@dataclass(frozen=True)
class Density:
    """Single-particle density rho = N |phi|^2 (angstrom^-3)."""

    grid: RadialGrid
    rho: np.ndarray


@dataclass(frozen=True)
class HartreeState:
    """Converged (or flagged) self-consistent field solution."""

    phi: OrderParameter
    v_eff: np.ndarray          # J, on the grid nodes
    eigenvalue: float          # single-particle level E* (J)
    energy: float              # total mean-field energy (J)
    kinetic_per_particle: float  # J
    pair_expectation: float    # <phi phi|vt|phi phi> (J)
    iterations: int
    residual: float
    converged: bool
    bound: bool
    mixing_final: float
    halvings: int
    norm_drift_max: float      # worst |norm - 1| seen before renormalization


def solve_radial_eigen(
    v,
    grid: RadialGrid,
    constants: Constants = CODATA,
    mass: float | None = None,
) -> tuple[float, np.ndarray]:
    """Lowest s-wave eigenpair of -(hbar^2/2m) u'' + v(r) u = E u.

    ``v`` is an array on the grid nodes or a callable (J).  Returns the
    eigenvalue (J) and the radial function u normalized to sum(u^2) h = 1,
    sign-fixed non-negative.  Second-order symmetric finite differences;
    the eigenpair comes from bisection plus inverse iteration.
    """
    m = constants.m if mass is None else mass
    nodes = grid.nodes
    v_arr = np.asarray(v(nodes) if callable(v) else v, dtype=float)
    if v_arr.shape != nodes.shape:
        raise ValueError("potential array does not match the grid")
    if not np.all(np.isfinite(v_arr)):
        raise ValueError("potential must be finite on the grid")
    h_m = grid.spacing * ANGSTROM
    t = constants.hbar**2 / (2.0 * m * h_m * h_m)
    diag = 2.0 * t + v_arr
    off = np.full(grid.n_points - 1, -t)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    u = vecs[:, 0]
    u = u / math.sqrt(np.sum(u * u) * grid.spacing)
    if u[np.argmax(np.abs(u))] < 0.0:
        u = -u
    return float(vals[0]), u


def converged_ground_state(
    v,
    grid: RadialGrid,
    constants: Constants = CODATA,
    mass: float | None = None,
    rel_tol: float | None = None,
) -> tuple[float, np.ndarray, float]:
    """Ground eigenvalue with a 2x-refinement consistency check.

    Returns (richardson-extrapolated eigenvalue, coarse-grid u, shift).
    ``v`` must be callable so it can be sampled on the refined grid.  When
    ``rel_tol`` is given and the refinement shift exceeds it, raises
    GridTooCoarseError (grid too coarse for the requested accuracy).
    """
    if not callable(v):
        raise TypeError("refinement check needs a callable potential")
    e_coarse, u = solve_radial_eigen(v, grid, constants, mass)
    e_fine, _ = solve_radial_eigen(v, grid.refined(), constants, mass)
    extrapolated = (4.0 * e_fine - e_coarse) / 3.0
    scale = max(abs(extrapolated), abs(e_coarse), 1e-300)
    shift = abs(e_fine - e_coarse) / scale
    if rel_tol is not None and shift > rel_tol:
        raise GridTooCoarseError(
            f"eigenvalue shifts by {shift:.3e} (relative) under 2x refinement, "
            f"exceeding {rel_tol:.3e}; refine the grid"
        )
    return extrapolated, u, shift


def phi_from_u(u: np.ndarray, grid: RadialGrid) -> OrderParameter:
    """Order parameter from the reduced radial function."""
    phi = u / (math.sqrt(4.0 * math.pi) * grid.nodes)
    return OrderParameter(grid=grid, phi=phi)


def build_v_eff(
    phi: OrderParameter,
    sv: SmoothedPotential,
    n_particles: int,
) -> np.ndarray:
    """Mean-field effective potential (N-1) int vt(|R-R'|) |phi(R')|^2 d^3R'.

    Isotropic reduction: with Y the antiderivative of s*vt(s),

        v_eff(r) = (N-1) (2 pi / r) int r' rho(r') [Y(r+r') - Y(|r-r'|)] dr'.

    On the uniform grid r_i = i h both Y arguments land on grid multiples, so
    the quadrature is two discrete convolutions against Y sampled at k h.
    """
    if n_particles < 2:
        raise ValueError("mean field needs at least 2 particles")
    grid = phi.grid
    h = grid.spacing
    nodes = grid.nodes
    rho = phi.phi**2
    n = grid.n_points
    y = np.asarray(sv.evaluate_pair_integral(h * np.arange(0, 2 * n + 1)))
    c = rho * nodes * h
    # hankel part: sum_b c_b Y[a+b]
    hank = np.convolve(c[::-1], y)[n + 1 : 2 * n + 1]
    # toeplitz part: sum_b c_b Y[|a-b|]
    y_sym = np.concatenate([y[n - 1 : 0 : -1], y[: n]])
    toep = np.convolve(c, y_sym)[n - 1 : 2 * n - 1]
    return (n_particles - 1) * 2.0 * math.pi / nodes * (hank - toep)


def hartree_energy(
    phi: OrderParameter,
    sv: SmoothedPotential,
    n_particles: int,
    constants: Constants = CODATA,
    mass: float | None = None,
) -> tuple[float, float, float]:
    """(total energy, kinetic per particle, pair expectation), all joule.

    Uses the same discrete operators as the eigensolver, making the total a
    true variational value on the grid: any normalized trial phi bounds the
    self-consistent minimum from above.
    """
    m = constants.m if mass is None else mass
    grid = phi.grid
    u = phi.radial_u()
    norm = np.sum(u * u) * grid.spacing
    h_m = grid.spacing * ANGSTROM
    t = constants.hbar**2 / (2.0 * m * h_m * h_m)
    du = np.diff(u)
    kinetic = t * (u[0] ** 2 + np.sum(du * du) + u[-1] ** 2) * grid.spacing / norm
    w_pair = build_v_eff(phi, sv, n_particles=2)  # (N-1) factor stripped: N=2 gives 1
    pair = float(np.sum(u * u * w_pair) * grid.spacing / (norm * norm))
    total = n_particles * kinetic + 0.5 * n_particles * (n_particles - 1) * pair
    return float(total), float(kinetic), pair


def scf_solve(
    sv: SmoothedPotential,
    spec: DropletSpec,
    grid: RadialGrid,
    mixing: float = 0.3,
    tol: float = 1e-10,
    max_iter: int = 500,
    constants: Constants = CODATA,
    initial: OrderParameter | None = None,
    enforce_production_grid: bool = True,
) -> HartreeState:
    """Self-consistent field solve of the mean-field eigenproblem.

    Fixed point of phi -> v_eff -> eigensolve -> phi with linear density
    mixing; converged when the relative L2 density residual drops below
    ``tol``.  A residual increase triggers automatic mixing halving.
    Non-convergence is returned as a flagged state, not raised.
    """
    if not 0.0 < mixing <= 1.0:
        raise ValueError(f"mixing must be in (0, 1], got {mixing}")
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if enforce_production_grid and grid.n_points < MIN_PRODUCTION_POINTS:
        raise ValueError(
            f"production solves need at least {MIN_PRODUCTION_POINTS} grid points, "
            f"got {grid.n_points}; pass enforce_production_grid=False for desk-scale checks"
        )
    n_particles = spec.n_particles
    h = grid.spacing
    nodes = grid.nodes
    weight = 4.0 * math.pi * nodes**2 * h  # 3-D volume weights on the nodes

    if initial is None:
        _, u0 = solve_radial_eigen(np.zeros(grid.n_points), grid, constants)
        current = phi_from_u(u0, grid)
    else:
        current = initial
    rho_cur = current.phi**2

    def l2(f: np.ndarray) -> float:
        return math.sqrt(float(np.sum(f * f * weight)))

    mixing_initial = mixing
    residual = math.inf
    best_residual = math.inf
    stall = 0
    improving = 0
    halvings = 0
    norm_drift_max = 0.0
    eigenvalue = math.nan
    v_eff = np.zeros(grid.n_points)
    iterations = 0
    converged = False

    for iterations in range(1, max_iter + 1):
        v_eff = build_v_eff(current, sv, n_particles)
        eigenvalue, u_new = solve_radial_eigen(v_eff, grid, constants)
        candidate = phi_from_u(u_new, grid)
        rho_cand = candidate.phi**2
        residual = l2(rho_cand - rho_cur) / max(l2(rho_cur), 1e-300)
        if residual <= tol:
            current = candidate
            rho_cur = rho_cand
            converged = True
            break
        # oscillation guard: a residual that stops improving for several
        # consecutive iterations means the map is not contracting at this
        # mixing; halve it (logged), with a floor so the state keeps moving
        if residual < 0.99 * best_residual:
            best_residual = residual
            stall = 0
            improving += 1
            if improving >= 8 and mixing < mixing_initial:
                mixing = min(1.5 * mixing, mixing_initial)
                improving = 0
        else:
            stall += 1
            improving = 0
            if stall >= 3 and mixing > 1e-5:
                mixing *= 0.5
                halvings += 1
                stall = 0
                best_residual = residual
                log.debug("iter %d: residual stalled at %.3e, mixing halved to %.3g",
                          iterations, residual, mixing)
        rho_mixed = (1.0 - mixing) * rho_cur + mixing * rho_cand
        norm = float(np.sum(rho_mixed * weight))
        norm_drift_max = max(norm_drift_max, abs(norm - 1.0))
        rho_cur = rho_mixed / norm
        current = OrderParameter(grid=grid, phi=np.sqrt(rho_cur))

    if not converged:
        log.warning("SCF did not converge in %d iterations (residual %.3e)",
                    max_iter, residual)

    state_phi = current
    u = state_phi.radial_u()
    mean_v = float(np.sum(u * u * v_eff) * h)
    kinetic = eigenvalue - mean_v
    pair = mean_v / (n_particles - 1)
    energy = n_particles * kinetic + 0.5 * n_particles * (n_particles - 1) * pair
    tail = state_phi.phi[-1] ** 2
    bound = bool(eigenvalue < 0.0 and tail < 1e-12 * float(np.max(state_phi.phi**2)))
    return HartreeState(
        phi=state_phi,
        v_eff=v_eff,
        eigenvalue=float(eigenvalue),
        energy=float(energy),
        kinetic_per_particle=float(kinetic),
        pair_expectation=float(pair),
        iterations=iterations,
        residual=float(residual),
        converged=converged,
        bound=bound,
        mixing_final=mixing,
        halvings=halvings,
        norm_drift_max=norm_drift_max,
    )


def density(state: HartreeState, n_particles: int) -> Density:
    """Single-particle density N |phi|^2 of a solved state."""
    return Density(grid=state.phi.grid, rho=n_particles * state.phi.phi**2)


@dataclass(frozen=True)
class XiScanRow:
    xi: float
    energy: float
    eigenvalue: float
    bound: bool
    converged: bool
    iterations: int
    residual: float
    error: str | None = None


@dataclass(frozen=True)
class XiScanResult:
    rows: tuple[XiScanRow, ...]
    best_xi: float
    best_energy: float
    refined: bool
    warning: str | None


def _scan_point(
    p: PairPotential,
    spec: DropletSpec,
    kappa: float,
    xi: float,
    grid: RadialGrid,
    tab_grid: np.ndarray,
    constants: Constants,
    scf_options: dict,
) -> XiScanRow:
    try:
        kernel = SmoothingKernel(xi=xi, kappa=kappa)
        sv = smooth_pair_potential(p, kernel, grid=tab_grid, constants=constants)
        state = scf_solve(sv, spec, grid, constants=constants, **scf_options)
        return XiScanRow(
            xi=xi,
            energy=state.energy,
            eigenvalue=state.eigenvalue,
            bound=state.bound,
            converged=state.converged,
            iterations=state.iterations,
            residual=state.residual,
        )
    except Exception as exc:  # per-point failures recorded, scan continues
        log.warning("xi = %.4g failed: %s", xi, exc)
        return XiScanRow(
            xi=xi, energy=math.nan, eigenvalue=math.nan, bound=False,
            converged=False, iterations=0, residual=math.nan, error=str(exc),
        )


def default_tabulation_grid(grid: RadialGrid) -> np.ndarray:
    """Smoothing tabulation covering the separations the SCF convolution needs."""
    lo = min(0.05, grid.spacing)
    hi = 34.0
    return np.geomspace(lo, hi, 700)


def xi_scan(
    p: PairPotential,
    spec: DropletSpec,
    kappa: float,
    xi_values,
    grid: RadialGrid,
    constants: Constants = CODATA,
    scf_options: dict | None = None,
    tab_grid: np.ndarray | None = None,
    refine: bool = True,
    max_workers: int = 1,
) -> XiScanResult:
    """Energy scan over the smoothing parameter with argmin refinement.

    Each point runs the calibrated smoothing plus an SCF solve; failures are
    recorded per row and the scan continues.  When the grid argmin is
    interior, a bounded golden-section pass refines it.  Points are
    independent and may run on worker threads; results merge by index.
    """
    xi_list = [float(x) for x in xi_values]
    if not xi_list:
        raise ValueError("xi_values must be non-empty")
    if any(x < 0.0 for x in xi_list):
        raise ValueError("xi values must be non-negative")
    if tab_grid is None:
        tab_grid = default_tabulation_grid(grid)
    options = dict(scf_options or {})

    def run(xi: float) -> XiScanRow:
        return _scan_point(p, spec, kappa, xi, grid, tab_grid, constants, options)

    if max_workers > 1 and len(xi_list) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(run, xi_list))
    else:
        rows = [run(xi) for xi in xi_list]

    finite = [(i, row) for i, row in enumerate(rows) if math.isfinite(row.energy)]
    if not finite:
        return XiScanResult(
            rows=tuple(rows), best_xi=math.nan, best_energy=math.nan,
            refined=False, warning="every scan point failed",
        )
    best_i, best_row = min(finite, key=lambda item: item[1].energy)
    best_xi, best_energy = best_row.xi, best_row.energy
    refined = False
    if refine and len(rows) >= 3 and 0 < best_i < len(rows) - 1:
        lo, hi = rows[best_i - 1].xi, rows[best_i + 1].xi
        if (math.isfinite(rows[best_i - 1].energy)
                and math.isfinite(rows[best_i + 1].energy)):
            def objective(xi: float) -> float:
                row = run(xi)
                return row.energy if math.isfinite(row.energy) else math.inf

            res = minimize_scalar(
                objective, bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-3, "maxiter": 20},
            )
            if math.isfinite(res.fun) and res.fun < best_energy:
                best_xi, best_energy = float(res.x), float(res.fun)
            refined = True
    warning = None
    if not best_row.bound:
        warning = "minimizing state is not self-bound"
    if not best_row.converged:
        warning = (warning + "; " if warning else "") + "minimizing state did not converge"
    return XiScanResult(
        rows=tuple(rows), best_xi=best_xi, best_energy=best_energy,
        refined=refined, warning=warning,
    )


@dataclass(frozen=True)
class ChemicalPotentialRow:
    n_particles: int
    energy: float
    chemical_potential: float
    converged: bool


def chemical_potential_probe(
    sv: SmoothedPotential,
    spacing: float,
    n_values,
    grid: RadialGrid,
    constants: Constants = CODATA,
    scf_options: dict | None = None,
) -> list[ChemicalPotentialRow]:
    """Finite-difference chemical potential mu(N) = E(N+1) - E(N).

    Mean-field cost is N-independent; the droplet counts stay at desk scale.
    Flatness of mu(N) is reported by the caller, never asserted here.
    """
    n_list = sorted({int(n) for n in n_values})
    if not n_list:
        raise ValueError("n_values must be non-empty")
    if n_list[0] < 2 or n_list[-1] > 10_000:
        raise ValueError("probe expects 2 <= N <= 10000")
    options = dict(scf_options or {})
    from .units import make_droplet

    cache: dict[int, HartreeState] = {}

    def energy_of(n: int) -> HartreeState:
        if n not in cache:
            cache[n] = scf_solve(sv, make_droplet(n, spacing), grid,
                                 constants=constants, **options)
        return cache[n]

    rows = []
    for n in n_list:
        st = energy_of(n)
        st_next = energy_of(n + 1)
        rows.append(ChemicalPotentialRow(
            n_particles=n,
            energy=st.energy,
            chemical_potential=st_next.energy - st.energy,
            converged=st.converged and st_next.converged,
        ))
    return rows


def box_sensitivity(
    sv: SmoothedPotential,
    spec: DropletSpec,
    grid: RadialGrid,
    constants: Constants = CODATA,
    scf_options: dict | None = None,
) -> float:
    """Relative energy shift when the Dirichlet box is doubled.

    Bound states must be insensitive to the wall; this returns the measured
    relative shift so callers can report or assert it.  The doubled box is
    warm-started from the small-box solution (its first n nodes coincide).
    """
    options = dict(scf_options or {})
    st = scf_solve(sv, spec, grid, constants=constants, **options)
    big = RadialGrid(2.0 * grid.r_max, 2 * grid.n_points + 1)
    phi_big = np.zeros(big.n_points)
    phi_big[: grid.n_points] = st.phi.phi
    u_big = math.sqrt(4.0 * math.pi) * big.nodes * phi_big
    u_big /= math.sqrt(np.sum(u_big * u_big) * big.spacing)
    st2 = scf_solve(sv, spec, big, constants=constants,
                    initial=phi_from_u(u_big, big), **options)
    scale = max(abs(st.energy), abs(st2.energy), 1e-300)
    return abs(st2.energy - st.energy) / scale
