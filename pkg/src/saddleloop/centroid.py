"""Centroid curves of the period annuli and their line intersections.

Each annulus maps to a planar curve (xi(t), eta(t)) = (J_1/J_0, J_-1/J_0).
The plus curve starts at (1,1) at the center energy, has xi strictly
decreasing and eta strictly increasing, is convex, and runs off to a
vertical asymptote as t -> -0.  The minus curve (present for a in (0,2))
ends at ((a-2)/a, a/(a-2)), is concave, with its own vertical asymptote.
A line alpha + beta*xi + gamma*eta = 0 meets either curve at most twice,
which is what ties zero counts of Melnikov functions to cycle counts.

Intersections are counted in the t-parameterization: sign changes of the
affine functional along the samples, which is exact for monotone curves
and avoids 2-D clipping predicates.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np

from .model import Annulus, Family, HamiltonianSpec, MelnikovCoeffs, critical_data
from .abelian import jk_at_loop, triples_on_grid

_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


@dataclass(frozen=True, eq=False)
class CentroidCurve:
    spec: HamiltonianSpec
    annulus: Annulus
    ts: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    endpoint: tuple[float, float]   # analytic center-limit value
    asymptote: float                # fitted abscissa of the loop-side limit
    t_center: float
    converged: bool

    def __len__(self) -> int:
        return len(self.ts)

    def functional(self, coeffs: MelnikovCoeffs) -> np.ndarray:
        return coeffs.alpha + coeffs.beta * self.xi + coeffs.gamma * self.eta

    def endpoint_extrapolated(self, n_points: int = 4) -> tuple[float, float]:
        """Richardson (polynomial) extrapolation of the samples nearest
        the center energy, for checking against the analytic endpoint."""
        if len(self.ts) < n_points:
            raise ValueError("not enough samples to extrapolate")
        if self.annulus is Annulus.SIGMA_PLUS:
            idx = np.arange(n_points)
        else:
            idx = np.arange(len(self.ts) - n_points, len(self.ts))
        ts = self.ts[idx]
        out = []
        for arr in (self.xi, self.eta):
            # Neville tableau evaluated at t = t_center
            w = arr[idx].astype(float).copy()
            for level in range(1, n_points):
                for i in range(n_points - level):
                    num = ((self.t_center - ts[i]) * w[i + 1]
                           - (self.t_center - ts[i + level]) * w[i])
                    w[i] = num / (ts[i + level] - ts[i])
            out.append(float(w[0]))
        return out[0], out[1]


def center_endpoint(spec: HamiltonianSpec, annulus: Annulus) -> tuple[float, float]:
    """Analytic centroid limit at the center energy."""
    if annulus is Annulus.SIGMA_PLUS:
        return 1.0, 1.0
    xc = (spec.a - 2.0) / spec.a
    return xc, 1.0 / xc


def loop_abscissa_exact(spec: HamiltonianSpec) -> float:
    """xi_+(-0) = J_1(0)/J_0(0) from the loop-limit quadratures."""
    return jk_at_loop(spec, 1) / jk_at_loop(spec, 0)


def default_grid(spec: HamiltonianSpec, annulus: Annulus, n: int = 200,
                 center_margin: float = 1e-5,
                 loop_margin: float = 1e-6) -> np.ndarray:
    """Samples clustered toward the center endpoint (cosine map), with
    relative margins off both singular ends."""
    if n < 4:
        raise ValueError("need at least 4 samples")
    cd = critical_data(spec)
    if annulus is Annulus.SIGMA_PLUS:
        t_center = cd.center0.energy
        t_loop = -loop_margin * abs(t_center)
    else:
        if cd.center1 is None:
            raise ValueError("no second annulus for this parameter")
        t_center = cd.center1.energy
        t_loop = loop_margin * t_center
    v0 = 2.0 / math.pi * math.sqrt(center_margin)
    v = np.linspace(v0, 1.0, n)
    s = 0.5 * (1.0 - np.cos(math.pi * v))
    ts = t_center + s * (t_loop - t_center)
    return np.sort(ts)


def sample_curve(spec: HamiltonianSpec, annulus: Annulus, t_grid=None,
                 n: int = 200, tol: float = 1e-11,
                 threads: int = 1) -> CentroidCurve:
    """Sample the centroid curve; results are cached per grid."""
    if spec.family is not Family.NORMAL_FORM:
        raise ValueError("centroid curves are defined for the normal-form "
                         "family")
    if t_grid is None:
        t_grid = default_grid(spec, annulus, n=n)
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    key = (spec.a, annulus.value, tol, t_grid.tobytes())
    with _CACHE_LOCK:
        hit = _CACHE.get(key)
    if hit is not None:
        return hit

    trs = triples_on_grid(spec, annulus, t_grid, tol=tol, threads=threads)
    j = np.array([tr.as_vector() for tr in trs])  # columns J_-1, J_0, J_1
    if np.any(j[:, 1] == 0.0):
        raise ArithmeticError("J_0 vanished on the grid; orientation "
                              "normalization violated upstream")
    xi = j[:, 2] / j[:, 1]
    eta = j[:, 0] / j[:, 1]
    cd = critical_data(spec)
    t_center = (cd.center0.energy if annulus is Annulus.SIGMA_PLUS
                else cd.center1.energy)
    curve = CentroidCurve(
        spec=spec, annulus=annulus, ts=t_grid, xi=xi, eta=eta,
        endpoint=center_endpoint(spec, annulus),
        asymptote=_fit_asymptote(t_grid, xi, annulus),
        t_center=t_center,
        converged=all(tr.converged for tr in trs))
    with _CACHE_LOCK:
        _CACHE[key] = curve
    return curve


def _fit_asymptote(ts: np.ndarray, xi: np.ndarray, annulus: Annulus) -> float:
    """Loop-side limit of xi by fitting {1, t ln|t|, t} on the samples
    of the last energy decade."""
    absts = np.abs(ts)
    tiny = absts <= max(1e-2 * absts.min(), absts.min() * 10.0)
    if tiny.sum() < 4:
        order = np.argsort(absts)
        tiny = np.zeros(len(ts), dtype=bool)
        tiny[order[:max(4, len(ts) // 10)]] = True
    if tiny.sum() < 4:
        return float("nan")  # explicit grid too short to extrapolate
    t = ts[tiny]
    cols = np.column_stack([np.ones_like(t), t * np.log(np.abs(t)), t])
    scale = np.linalg.norm(cols, axis=0)
    sol, *_ = np.linalg.lstsq(cols / scale, xi[tiny], rcond=None)
    return float(sol[0] / scale[0])


@dataclass(frozen=True)
class ShapeReport:
    n: int
    xi_decreasing: bool
    eta_increasing: bool
    curvature_constant_sign: bool
    curvature_sign: int         # sign of cross products along increasing t
    expected_curvature_sign: int
    first_violation: str | None

    @property
    def passed(self) -> bool:
        return (self.xi_decreasing and self.eta_increasing
                and self.curvature_constant_sign
                and self.curvature_sign == self.expected_curvature_sign)


# Cross product of consecutive secants along increasing t.  On the plus
# curve (xi falls, eta rises, convex toward the asymptote) the sign is
# negative; on the minus curve positive.  Checked numerically in tests.
_EXPECTED_CURVATURE = {Annulus.SIGMA_PLUS: -1, Annulus.SIGMA_MINUS: 1}


def verify_shape(curve: CentroidCurve) -> ShapeReport:
    if len(curve) < 20:
        raise ValueError("shape verification needs at least 20 samples")
    dxi = np.diff(curve.xi)
    deta = np.diff(curve.eta)
    violation = None
    xi_dec = bool(np.all(dxi < 0.0))
    if not xi_dec:
        violation = f"xi not decreasing at index {int(np.argmax(dxi >= 0.0))}"
    eta_inc = bool(np.all(deta > 0.0))
    if eta_inc is False and violation is None:
        violation = f"eta not increasing at index {int(np.argmax(deta <= 0.0))}"
    cross = dxi[:-1] * deta[1:] - deta[:-1] * dxi[1:]
    signs = np.sign(cross)
    constant = bool(np.all(signs == signs[0])) and signs[0] != 0.0
    if not constant and violation is None:
        violation = "curvature sign not constant"
    sign = int(signs[0]) if constant else 0
    expected = _EXPECTED_CURVATURE[curve.annulus]
    if constant and sign != expected and violation is None:
        violation = f"curvature sign {sign}, expected {expected}"
    return ShapeReport(n=len(curve), xi_decreasing=xi_dec,
                       eta_increasing=eta_inc,
                       curvature_constant_sign=constant,
                       curvature_sign=sign,
                       expected_curvature_sign=expected,
                       first_violation=violation)


@dataclass(frozen=True)
class LineIntersections:
    count: int
    ts: tuple[float, ...]
    points: tuple[tuple[float, float], ...]
    tangency_suspected: bool
    contains_curve: bool


def line_intersections(curve: CentroidCurve, coeffs: MelnikovCoeffs,
                       dead_band: float = 1e-8) -> LineIntersections:
    """Count crossings of alpha + beta*xi + gamma*eta = 0 with the curve.

    Sign-change count along t with linear-in-t refinement; values inside
    the dead band that do not produce a sign change raise the tangency
    flag (multiplicity is not certified).
    """
    if coeffs.all_zero:
        raise ValueError("line coefficients are all zero")
    g = curve.functional(coeffs)
    scale = (abs(coeffs.alpha) + abs(coeffs.beta) * np.max(np.abs(curve.xi))
             + abs(coeffs.gamma) * np.max(np.abs(curve.eta)))
    if np.max(np.abs(g)) < 1e-13 * max(scale, 1e-300):
        warnings.warn("line functional vanishes along the whole curve",
                      RuntimeWarning)
        return LineIntersections(0, (), (), False, True)
    ts, pts = [], []
    for i in range(len(g) - 1):
        if g[i] == 0.0:
            ts.append(float(curve.ts[i]))
            pts.append((float(curve.xi[i]), float(curve.eta[i])))
        elif g[i] * g[i + 1] < 0.0:
            w = g[i] / (g[i] - g[i + 1])
            ts.append(float(curve.ts[i] + w * (curve.ts[i + 1] - curve.ts[i])))
            pts.append((float(curve.xi[i] + w * (curve.xi[i + 1] - curve.xi[i])),
                        float(curve.eta[i] + w * (curve.eta[i + 1] - curve.eta[i]))))
    if g[-1] == 0.0:
        ts.append(float(curve.ts[-1]))
        pts.append((float(curve.xi[-1]), float(curve.eta[-1])))
    near = np.abs(g) < dead_band * scale
    tangent = False
    for i in np.nonzero(near)[0]:
        left = g[i - 1] if i > 0 else g[i]
        right = g[i + 1] if i + 1 < len(g) else g[i]
        if left * right > 0.0 and g[i] != 0.0:
            tangent = True
    if tangent:
        warnings.warn("near-tangent approach detected; count excludes "
                      "possible even-multiplicity contact", RuntimeWarning)
    return LineIntersections(count=len(ts), ts=tuple(ts), points=tuple(pts),
                             tangency_suspected=tangent, contains_curve=False)


def total_line_intersections(spec: HamiltonianSpec, coeffs: MelnikovCoeffs,
                             n: int = 200, tol: float = 1e-11) -> int:
    """Intersection count relevant for cycle bifurcation from periodic
    orbits: the plus curve alone, or both curves when the second annulus
    exists and gamma != 0 (elliptic case convention)."""
    total = line_intersections(sample_curve(spec, Annulus.SIGMA_PLUS, n=n,
                                            tol=tol), coeffs).count
    if 0.0 < spec.a < 2.0 and coeffs.gamma != 0.0:
        total += line_intersections(sample_curve(spec, Annulus.SIGMA_MINUS,
                                                 n=n, tol=tol), coeffs).count
    return total


@dataclass(frozen=True)
class SimultaneousLoopReport:
    annihilates_both: bool
    xi_plus_loop: float
    xi_minus_loop: float
    sign_fact_ok: bool   # xi_-(+0) < 0 < xi_+(-0)

    def __bool__(self) -> bool:
        return self.annihilates_both


def simultaneous_loop_test(spec: HamiltonianSpec, coeffs: MelnikovCoeffs,
                           band: float = 1e-3, n: int = 200,
                           tol: float = 1e-11) -> SimultaneousLoopReport:
    """Whether (alpha, beta) kills the loop-limit condition on both
    annuli at once.  Must come out false for any nonzero pair, since the
    two loop abscissas straddle zero."""
    if not (0.0 < spec.a < 2.0):
        raise ValueError("both loops exist only for a in (0, 2)")
    if coeffs.gamma != 0.0:
        raise ValueError("loop bifurcation condition applies to gamma = 0")
    if coeffs.alpha == 0.0 and coeffs.beta == 0.0:
        raise ValueError("degenerate zero coefficients")
    xp = sample_curve(spec, Annulus.SIGMA_PLUS, n=n, tol=tol).asymptote
    xm = sample_curve(spec, Annulus.SIGMA_MINUS, n=n, tol=tol).asymptote
    scale = abs(coeffs.alpha) + abs(coeffs.beta)
    both = (abs(coeffs.alpha + xp * coeffs.beta) <= band * scale
            and abs(coeffs.alpha + xm * coeffs.beta) <= band * scale)
    return SimultaneousLoopReport(annihilates_both=both, xi_plus_loop=xp,
                                  xi_minus_loop=xm,
                                  sign_fact_ok=xm < 0.0 < xp)
