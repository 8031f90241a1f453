"""First-order Melnikov functions on the period annuli.

For the normal-form family the first nonvanishing Melnikov function of
a quadratic perturbation reduces to

    M(t) = alpha*J_0(t) + beta*J_1(t) + gamma*J_{-1}(t),

with gamma = 0 forced at order one.  Near the loop energy t = -0 it
expands as d0 + d1*t*ln|t| + d2*t + d3*t^2*ln|t| + ..., picking up an
extra ln|t| term exactly when gamma != 0.  The d-coefficients here come
from fitting quadrature data, which keeps them an independent check of
the series asymptotics in picard_fuchs.

The appendix family's perturbation enters through its own first-order
function of the oval energy, provided at the bottom of the module.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import Annulus, Family, HamiltonianSpec, MelnikovCoeffs
from .abelian import (appendix_oval_moments, default_log_window,
                      fit_log_basis, triple, triples_on_grid)


class ZeroFunctionError(RuntimeError):
    """Raised when the function is identically zero and a zero count is
    therefore meaningless."""


def value(spec: HamiltonianSpec, coeffs: MelnikovCoeffs, annulus: Annulus,
          t: float, tol: float = 1e-11) -> float:
    tr = triple(spec, annulus, t, tol=tol)
    if not tr.converged:
        warnings.warn(f"quadrature not converged at t={t}", RuntimeWarning)
    return coeffs.alpha * tr.j0 + coeffs.beta * tr.j1 + coeffs.gamma * tr.jm1


def values_on_grid(spec: HamiltonianSpec, coeffs: MelnikovCoeffs,
                   annulus: Annulus, ts, tol: float = 1e-11,
                   threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Returns (values, converged mask) over the grid."""
    trs = triples_on_grid(spec, annulus, ts, tol=tol, threads=threads)
    vals = np.array([coeffs.alpha * tr.j0 + coeffs.beta * tr.j1
                     + coeffs.gamma * tr.jm1 for tr in trs])
    ok = np.array([tr.converged for tr in trs])
    return vals, ok


@dataclass(frozen=True)
class MelnikovExpansion:
    d0: float
    d1: float          # t ln|t|
    d2: float          # t
    d3: float          # t^2 ln|t|
    fit_residual: float
    dlog: float | None  # ln|t|, present only when gamma != 0
    cond: float
    well_conditioned: bool


def expansion(spec: HamiltonianSpec, coeffs: MelnikovCoeffs,
              window=None, tol: float = 1e-11) -> MelnikovExpansion:
    """Fit the loop-side expansion coefficients on a t -> -0 window."""
    # Default window stops at |t| = 1e-2: the basis omits the analytic
    # t^2 term, whose leakage into the t*ln|t| column grows with t_max.
    if window is None:
        window = default_log_window(t_max=1e-2)
    window = np.asarray(window, dtype=float)
    vals, ok = values_on_grid(spec, coeffs, Annulus.SIGMA_PLUS, window,
                              tol=tol)
    if not ok.all():
        warnings.warn("expansion window contains unconverged quadrature "
                      "points", RuntimeWarning)
    log_powers = (1, 2) if coeffs.gamma == 0.0 else (0, 1, 2)
    fit = fit_log_basis(window, vals, poly_powers=(0, 1), log_powers=log_powers)
    if not fit.well_conditioned:
        warnings.warn(f"expansion fit ill-conditioned (cond={fit.cond:.2e})",
                      RuntimeWarning)
    return MelnikovExpansion(
        d0=fit.coeffs["t^0"], d1=fit.coeffs["t^1*log"],
        d2=fit.coeffs["t^1"], d3=fit.coeffs["t^2*log"],
        fit_residual=fit.residual,
        dlog=fit.coeffs.get("t^0*log") if coeffs.gamma != 0.0 else None,
        cond=fit.cond, well_conditioned=fit.well_conditioned)


def expected_log_terms(spec: HamiltonianSpec, coeffs: MelnikovCoeffs,
                       orders=(0, 1, 2)) -> dict[int, float]:
    """Exact coefficient of t^m ln|t| in M from the series solution.

    The log part of the triple is lam*Q(t)*ln|t| componentwise, so the
    m-th log coefficient of M is lam*(alpha, beta, gamma) . q_m taken in
    the matching component order.
    """
    from .picard_fuchs import fundamental

    fs = fundamental(spec, order=max(orders) + 1 if max(orders) >= 3 else 3)
    out = {}
    for m in orders:
        qm = fs.q[m]  # (J_-1, J_0, J_1) components
        out[m] = fs.lam * (coeffs.gamma * qm[0] + coeffs.alpha * qm[1]
                           + coeffs.beta * qm[2])
    return out


def d1_expected(spec: HamiltonianSpec, coeffs: MelnikovCoeffs) -> float:
    """Closed form of the t ln|t| coefficient when gamma = 0."""
    if coeffs.gamma != 0.0:
        raise ValueError("closed form applies to the gamma = 0 case")
    return -coeffs.alpha / math.sqrt(3.0 * (2.0 - spec.a))


@dataclass(frozen=True)
class ZeroCount:
    count: int
    zeros: tuple[float, ...]
    grid_coarse: bool     # adjacent zeros closer than a few grid cells


def _default_range(spec: HamiltonianSpec, annulus: Annulus) -> tuple[float, float]:
    if annulus is Annulus.SIGMA_PLUS:
        t0 = spec.a - 3.0
        return t0 + 1e-3 * abs(t0), -1e-6 * abs(t0)
    t1 = (spec.a + 1.0) * (spec.a - 2.0) ** 2 / spec.a ** 2
    return 1e-6 * t1, t1 * (1.0 - 1e-3)


def _count_sign_changes(f, grid, vals, refine_tol: float) -> ZeroCount:
    scale = float(np.max(np.abs(vals)))
    if scale < 1e-13:
        raise ZeroFunctionError("function is identically zero on the grid; "
                                "zero count is meaningless")
    zeros = []
    for i in range(len(grid) - 1):
        va, vb = vals[i], vals[i + 1]
        if va == 0.0:
            zeros.append(float(grid[i]))
            continue
        if va * vb < 0.0:
            z = brentq(f, grid[i], grid[i + 1], xtol=refine_tol,
                       rtol=8.9e-16, maxiter=200)
            zeros.append(float(z))
    if vals[-1] == 0.0:
        zeros.append(float(grid[-1]))
    step = grid[1] - grid[0] if len(grid) > 1 else 0.0
    coarse = any(z2 - z1 < 3.0 * step for z1, z2 in zip(zeros, zeros[1:]))
    if coarse:
        warnings.warn("adjacent zeros within a few grid cells; increase "
                      "resolution to trust the count", RuntimeWarning)
    return ZeroCount(count=len(zeros), zeros=tuple(zeros), grid_coarse=coarse)


def count_zeros(spec: HamiltonianSpec, coeffs: MelnikovCoeffs,
                annulus: Annulus, t_range=None, resolution: int = 200,
                refine_tol: float = 1e-10, tol: float = 1e-11,
                threads: int = 1) -> ZeroCount:
    """Count sign changes of M on the annulus, bisecting each bracket.

    Counts isolated sign-crossing zeros only; no multiplicity claim.
    """
    if coeffs.all_zero:
        raise ZeroFunctionError("Melnikov coefficients are identically zero; "
                                "order insufficient")
    if t_range is None:
        t_range = _default_range(spec, annulus)
    lo, hi = float(t_range[0]), float(t_range[1])
    grid = np.linspace(lo, hi, resolution)
    vals, ok = values_on_grid(spec, coeffs, annulus, grid, tol=tol,
                              threads=threads)
    if not ok.all():
        warnings.warn("zero count grid contains unconverged quadrature "
                      "points", RuntimeWarning)
    return _count_sign_changes(
        lambda t: value(spec, coeffs, annulus, t, tol=tol), grid, vals,
        refine_tol)


@dataclass(frozen=True)
class Classification:
    order_k: int
    regime: str
    max_cycles_from_loop: int
    max_cycles_from_annulus: int
    annulus_closure: str   # "closed" or "open"
    note: str

    def __str__(self) -> str:
        return (f"order k={self.order_k}, {self.regime}: "
                f"<= {self.max_cycles_from_loop} cycle(s) from the loop, "
                f"<= {self.max_cycles_from_annulus} from the "
                f"{self.annulus_closure} annulus")


def classify_cyclicity(coeffs: MelnikovCoeffs,
                       d0_is_zero: bool) -> Classification:
    """Cyclicity bounds keyed on (k, gamma, alpha, beta, M_k(0)).

    d0_is_zero states whether M_k vanishes in the loop limit; it is
    ignored when gamma != 0 since the function then diverges there.
    """
    if coeffs.all_zero:
        raise ZeroFunctionError("Melnikov function identically zero; "
                                "order insufficient to classify")
    k = coeffs.order_k
    if k == 1:
        if d0_is_zero:
            return Classification(k, "M1(0) = 0", 2, 0, "open",
                                  "both cycles split off the loop")
        return Classification(k, "M1(0) != 0", 0, 1, "closed",
                              "single cycle from the closed annulus")
    if coeffs.gamma != 0.0:
        return Classification(k, "gamma != 0", 0, 2, "closed",
                              "log-dominated loop limit")
    if d0_is_zero:
        if coeffs.alpha == 0.0:
            # gamma = alpha = 0 forces M_k(0) = beta*J_1(0) != 0
            raise ValueError("d0_is_zero inconsistent: with gamma = alpha = 0 "
                             "the loop limit is beta*J_1(0) != 0")
        return Classification(k, "gamma = 0, M_k(0) = 0", 2, 0, "open",
                              "loop-dominated regime")
    if coeffs.alpha != 0.0:
        return Classification(k, "gamma = 0, alpha != 0, M_k(0) != 0",
                              0, 1, "closed",
                              "single cycle from the closed annulus")
    return Classification(k, "gamma = alpha = 0, beta != 0", 3, 0, "open",
                          "up to three cycles from the loop")


def appendix_first_order(spec: HamiltonianSpec, mu2: float, h: float,
                         tol: float = 1e-11) -> float:
    """First-order displacement density for the appendix perturbation.

    Along closed ovals the perturbation one-form reduces to
    (16 + mu2) * oint y dx - pi*sqrt(3) * oint y^2 dx: the mu1 and c*x*y
    terms integrate to zero by closedness and x -> -x symmetry.  In the
    loop limit the value tends to -pi*sqrt(3)*mu2.
    """
    if spec.family is not Family.APPENDIX_ELLIPSE:
        raise ValueError("defined for the appendix family")
    iy, iy2 = appendix_oval_moments(spec, h, tol=tol)
    return (16.0 + mu2) * iy - math.pi * math.sqrt(3.0) * iy2


def appendix_count_zeros(spec: HamiltonianSpec, mu2: float, h_range,
                         resolution: int = 200, refine_tol: float = 1e-10,
                         tol: float = 1e-11) -> ZeroCount:
    """Zero count of the appendix first-order function on an h-window."""
    lo, hi = float(h_range[0]), float(h_range[1])
    if not (-4.0 / 3.0 < lo < hi < 0.0):
        raise ValueError("h range must lie inside (-4/3, 0)")
    grid = np.linspace(lo, hi, resolution)
    vals = np.array([appendix_first_order(spec, mu2, h, tol=tol)
                     for h in grid])
    return _count_sign_changes(
        lambda h: appendix_first_order(spec, mu2, h, tol=tol), grid, vals,
        refine_tol)
