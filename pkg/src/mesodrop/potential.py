"""Bare He-4 pair interaction (HFDHE2 form) and potential-well analysis.

The pair potential is

    v(r) = eps * [ A exp(-alpha x) - (C6/x^6 + C8/x^8 + C10/x^10) F(x) ],
    x = r / r_m,   F(x) = exp(-(D/x - 1)^2) for x < D, else 1,

with eps = eps_over_kB * k_B.  The default parameter set is the standard
HFDHE2 fit for helium-4; all parameters are overridable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .units import CODATA, ANGSTROM, Constants


class NoMinimumError(RuntimeError):
    """Raised when no interior minimum exists on the search bracket."""


class CurvatureError(RuntimeError):
    """Raised when the finite-difference curvature fails its convergence check."""


@dataclass(frozen=True)
class PairPotential:
    """HFDHE2-form two-body potential.  Lengths in angstrom, depth scale in K."""

    eps_over_kB: float = 10.8
    r_m: float = 2.9673
    A: float = 0.5448504e6
    alpha: float = 13.353384
    C6: float = 1.3732412
    C8: float = 0.4253785
    C10: float = 0.178100
    D: float = 1.241314


HE4_HFDHE2 = PairPotential()

# Below x = D/27 the damping factor underflows to exactly zero in double
# precision; zeroing the dispersion sum there avoids 0*inf at tiny x.
_DISPERSION_CUTOFF_FRACTION = 1.0 / 27.0


def _evaluate_scalar(p: PairPotential, r: float, k_B: float) -> float:
    x = r / p.r_m
    repulsive = p.A * math.exp(-p.alpha * x)
    if x < p.D * _DISPERSION_CUTOFF_FRACTION:
        dispersion = 0.0
    else:
        inv2 = 1.0 / (x * x)
        dispersion = (p.C6 + (p.C8 + p.C10 * inv2) * inv2) * inv2**3
        if x < p.D:
            dispersion *= math.exp(-((p.D / x - 1.0) ** 2))
    return p.eps_over_kB * k_B * (repulsive - dispersion)


def evaluate(p: PairPotential, r, constants: Constants = CODATA):
    """Pair potential at separation ``r`` (angstrom), in joule.

    Accepts scalars or arrays; rejects any non-positive separation.
    """
    if isinstance(r, float) or isinstance(r, int):
        if r <= 0.0:
            raise ValueError("separation must be positive")
        return _evaluate_scalar(p, float(r), constants.k_B)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise ValueError("separation must be positive")
    x = r_arr / p.r_m
    repulsive = p.A * np.exp(-p.alpha * x)
    with np.errstate(over="ignore", under="ignore"):
        damping = np.where(x < p.D, np.exp(-((p.D / np.maximum(x, 1e-300) - 1.0) ** 2)), 1.0)
        inv2 = 1.0 / (x * x)
        dispersion = (p.C6 + (p.C8 + p.C10 * inv2) * inv2) * inv2**3
    # damping underflows to 0 long before the dispersion sum overflows
    dispersion = np.where(x < p.D * _DISPERSION_CUTOFF_FRACTION, 0.0, dispersion * damping)
    reduced = repulsive - dispersion
    v = p.eps_over_kB * constants.k_B * reduced
    if np.isscalar(r) or r_arr.ndim == 0:
        return float(v)
    return v


def core_height(p: PairPotential, constants: Constants = CODATA) -> float:
    """Limit of v(r) as r -> 0+ (the finite repulsive-core height, J)."""
    return p.eps_over_kB * constants.k_B * p.A


@dataclass(frozen=True)
class WellAnalysis:
    """Location, depth and harmonic properties of a potential-well minimum."""

    r_min: float          # angstrom
    depth: float          # J, negative
    curvature: float      # J / angstrom^2
    curvature_si: float   # N / m
    omega: float          # rad / s
    rest_energy: float    # hbar * omega / 2, J


def _central_derivative(v, r: float, h: float) -> float:
    return (v(r + h) - v(r - h)) / (2.0 * h)


def radial_derivative(v, r: float, h: float = 1e-3) -> float:
    """Richardson-extrapolated central first derivative of ``v`` at ``r``."""
    return (4.0 * _central_derivative(v, r, h / 2.0) - _central_derivative(v, r, h)) / 3.0


def _second_derivative_richardson(v, r: float, h: float) -> float:
    """Richardson-extrapolated central second derivative with a step check."""

    def d2(step: float) -> float:
        return (v(r + step) - 2.0 * v(r) + v(r - step)) / (step * step)

    rich_h = (4.0 * d2(h / 2.0) - d2(h)) / 3.0
    rich_h2 = (4.0 * d2(h / 4.0) - d2(h / 2.0)) / 3.0
    scale = max(abs(rich_h2), abs(rich_h))
    if scale == 0.0:
        return 0.0
    if abs(rich_h2 - rich_h) > 1e-4 * scale:
        raise CurvatureError(
            f"second derivative did not converge under step refinement at r={r:.6g}: "
            f"{rich_h:.9e} vs {rich_h2:.9e}"
        )
    return rich_h2


def analyze_well(
    v,
    constants: Constants = CODATA,
    bracket: tuple[float, float] = (2.0, 4.5),
    fd_step: float = 1e-3,
    polish: bool = True,
) -> WellAnalysis:
    """Locate and characterize the minimum of a radial potential ``v(r) -> J``.

    The minimum is bracketed by bounded minimization and then polished by a
    root find on the central-difference derivative.  Curvature comes from
    Richardson-extrapolated central differences; ``omega = sqrt(k/m)`` and the
    rest energy is ``hbar*omega/2``.

    Raises NoMinimumError when ``v`` is monotone on the bracket (heavily
    smoothed potentials lose their well; callers must handle this).
    """
    lo, hi = bracket
    if not lo < hi:
        raise ValueError(f"invalid bracket {bracket}")
    res = minimize_scalar(v, bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
    r_min = float(res.x)
    span = hi - lo
    if r_min - lo < 1e-3 * span or hi - r_min < 1e-3 * span:
        raise NoMinimumError(
            f"no interior minimum found on [{lo:.4g}, {hi:.4g}] angstrom"
        )

    if polish:
        h = fd_step
        dlo, dhi = r_min - 50.0 * h, r_min + 50.0 * h
        dlo, dhi = max(dlo, lo), min(dhi, hi)
        try:
            glo = radial_derivative(v, dlo, h)
            ghi = radial_derivative(v, dhi, h)
            if glo < 0.0 < ghi:
                r_min = brentq(
                    lambda rr: radial_derivative(v, rr, h), dlo, dhi, xtol=1e-13
                )
        except ValueError:
            pass  # keep the bounded-minimization result

    depth = float(v(r_min))
    curvature = _second_derivative_richardson(v, r_min, fd_step)
    if curvature <= 0.0:
        raise NoMinimumError(f"stationary point at r={r_min:.6g} is not a minimum")
    curvature_si = curvature / ANGSTROM**2  # J/angstrom^2 -> J/m^2 = N/m
    omega = math.sqrt(curvature_si / constants.m)
    rest_energy = 0.5 * constants.hbar * omega
    return WellAnalysis(
        r_min=r_min,
        depth=depth,
        curvature=curvature,
        curvature_si=curvature_si,
        omega=omega,
        rest_energy=rest_energy,
    )


def analyze_bare_well(
    p: PairPotential,
    constants: Constants = CODATA,
    bracket: tuple[float, float] = (2.0, 4.5),
) -> WellAnalysis:
    """Well analysis of the bare pair potential.

    Keeps the finite-difference stencil away from the damping-function kink at
    x = D, where the potential is only C^1.
    """
    kink = p.D * p.r_m
    fd_step = 1e-3
    well = analyze_well(
        lambda r: evaluate(p, r, constants),
        constants=constants,
        bracket=bracket,
        fd_step=fd_step,
    )
    if abs(well.r_min - kink) < 4.0 * fd_step:
        shrunk = max(abs(well.r_min - kink) / 8.0, 1e-6)
        well = analyze_well(
            lambda r: evaluate(p, r, constants),
            constants=constants,
            bracket=bracket,
            fd_step=shrunk,
        )
    return well
