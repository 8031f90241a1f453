"""Picard-Fuchs system for the basic integral triple (J_-1, J_0, J_1).

On the normal-form family the triple satisfies a first order linear
system (A1*t + A0) J' = B J with polynomial coefficient matrices.  At
the loop energy t = 0 the system has a triple zero characteristic
exponent, so a fundamental set near 0 is

    P(t)       degree-one polynomial solution,
    Q(t)       analytic power series, Q(0) = (1, 0, 0),
    Q(t) ln t + S(t)   with S analytic.

Every actual triple is lam*(Q ln|t| + S) + mu*P + nu*Q with the log
multiplier lam = -2*sqrt(3*(2-a)) fixed by the saddle data.  The series
coefficients of Q follow from the recursion

    (j*A1 - B) q_j + (j+1) A0 q_{j+1} = 0.

A0 has rank two (zero third row, zero first column), so each level
determines the last two entries of q_{j+1} and the first entry comes
from the third-row constraint of the next level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Family, HamiltonianSpec


def _param(spec_or_a) -> float:
    if isinstance(spec_or_a, HamiltonianSpec):
        if spec_or_a.family is not Family.NORMAL_FORM:
            raise ValueError("Picard-Fuchs system is defined for the "
                             "normal-form family only")
        return spec_or_a.a
    return float(spec_or_a)


@dataclass(frozen=True)
class PFSystem:
    """Coefficient matrices of (A1*t + A0) J' = B J."""

    a: float
    A1: np.ndarray
    A0: np.ndarray
    B: np.ndarray

    def coefficient(self, t: float) -> np.ndarray:
        return self.A1 * t + self.A0

    def residual(self, t: float, J: np.ndarray, Jprime: np.ndarray,
                 floor: float = 1e-30) -> float:
        """Relative defect of one (J, J') sample in the system."""
        J = np.asarray(J, dtype=float)
        Jprime = np.asarray(Jprime, dtype=float)
        lhs = self.coefficient(t) @ Jprime
        rhs = self.B @ J
        return float(np.linalg.norm(lhs - rhs) / (np.linalg.norm(rhs) + floor))

    def derivative(self, t: float, J: np.ndarray) -> np.ndarray:
        """Solve for J'(t); fails on the critical energies where the
        coefficient matrix is singular."""
        M = self.coefficient(t)
        if abs(np.linalg.det(M)) < 1e-14 * max(1.0, abs(t)) ** 3:
            raise ValueError(f"coefficient matrix singular at t={t}")
        return np.linalg.solve(M, self.B @ np.asarray(J, dtype=float))


def pf_system(spec_or_a) -> PFSystem:
    a = _param(spec_or_a)
    A1 = np.array([[1.0, 0.0, 0.0],
                   [1.0 - a, 2.0 * a, 0.0],
                   [a - 2.0, 2.0 - 2.0 * a, a]])
    A0 = np.array([[0.0, 4.0 - 2.0 * a, a - 1.0],
                   [0.0, 0.0, 3.0 + 2.0 * a - a * a],
                   [0.0, 0.0, 0.0]])
    B = np.array([[1.0 / 3.0, 0.0, 0.0],
                  [0.0, 4.0 * a / 3.0, 0.0],
                  [0.0, 1.5 * (1.0 - a), a]])
    return PFSystem(a=a, A1=A1, A0=A0, B=B)


@dataclass(frozen=True)
class FundamentalSeries:
    """P, Q pair of the fundamental system near the loop energy."""

    a: float
    lam: float
    p_const: np.ndarray
    p_lin: np.ndarray
    q: np.ndarray  # shape (order+1, 3), q[j] multiplies t**j

    @property
    def order(self) -> int:
        return self.q.shape[0] - 1

    def P(self, t):
        t = np.asarray(t, dtype=float)
        return self.p_const + np.multiply.outer(t, self.p_lin)

    def P_prime(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.p_lin, t.shape + (3,)).copy()

    def Q(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (3,))
        for coeff in self.q[::-1]:
            out = out * t[..., None] + coeff
        return out

    def Q_prime(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (3,))
        for j in range(self.order, 0, -1):
            out = out * t[..., None] + j * self.q[j]
        return out

    def log_term(self, k: int) -> tuple[int, float]:
        """Leading log contribution of J_k: returns (power m, coeff c)
        meaning J_k(t) = c * t^m * ln|t| + smoother terms near 0."""
        col = {-1: 0, 0: 1, 1: 2}[k]
        power = {-1: 0, 0: 1, 1: 2}[k]
        return power, self.lam * float(self.q[power, col])


def fundamental(spec_or_a, order: int = 8) -> FundamentalSeries:
    """Compute P and the Q series to the given order.

    Rejects a in {0, 2}: at a=0 the polynomial solution degenerates and
    at a=2 the loop collapses (the series denominators vanish).
    """
    a = _param(spec_or_a)
    if order < 3:
        raise ValueError("order must be at least 3")
    for bad in (0.0, 2.0):
        if abs(a - bad) < 1e-12:
            raise ValueError(f"fundamental system not defined at a={bad}")
    disc = 3.0 + 2.0 * a - a * a  # vanishes at a=-1, 3, off the loop range
    if abs(disc) < 1e-12:
        raise ValueError(f"series recursion breaks down at a={a}")
    sys = pf_system(a)

    p_const = np.array([3.0 * (a - 1.0),
                        3.0 * disc / (4.0 * a),
                        9.0 * (a - 1.0) * disc / (8.0 * a * a)])
    p_lin = np.array([0.0, 0.0, 1.0])
    # P is exactly degree one: (A1 t + A0) p_lin = B (p_const + p_lin t)
    # splits into two constant identities checked here.
    if not (np.allclose(sys.A1 @ p_lin, sys.B @ p_lin, atol=1e-12)
            and np.allclose(sys.A0 @ p_lin, sys.B @ p_const, atol=1e-12)):
        raise AssertionError("polynomial solution P failed the system check")

    q = np.zeros((order + 1, 3))
    q[0] = (1.0, 0.0, 0.0)
    for j in range(order):
        v = -((j * sys.A1 - sys.B) @ q[j])
        # rows of (j+1) A0 q_{j+1} = v: row 2 pins the J_1 entry, row 1
        # then the J_0 entry; row 3 is the consistency condition 0 = v_3.
        qj1 = v[1] / ((j + 1.0) * disc)
        qj0 = (v[0] / (j + 1.0) - (a - 1.0) * qj1) / (4.0 - 2.0 * a)
        # first entry from the zero third row of A0 at level j+1:
        # row3((j+1) A1 - B) . q_{j+1} = 0.
        qjm1 = -(((j + 1.0) * (2.0 - 2.0 * a) + 1.5 * (a - 1.0)) * qj0
                 + j * a * qj1) / ((j + 1.0) * (a - 2.0))
        q[j + 1] = (qjm1, qj0, qj1)
        scale = max(1.0, float(np.max(np.abs(q[j]))))
        if abs(v[2]) > 1e-12 * scale:
            raise AssertionError(
                f"series recursion inconsistent at level {j}: "
                f"consistency defect {v[2]:.3e}")
    # independent re-check: every level equation satisfied.
    for j in range(order):
        res = (j * sys.A1 - sys.B) @ q[j] + (j + 1.0) * (sys.A0 @ q[j + 1])
        scale = max(1.0, float(np.max(np.abs(q[j]))),
                    float(np.max(np.abs(q[j + 1]))))
        if np.max(np.abs(res)) > 1e-12 * scale:
            raise AssertionError(f"series residual {np.max(np.abs(res)):.3e} "
                                 f"at level {j}")

    lam = -2.0 * math.sqrt(3.0 * (2.0 - a))
    return FundamentalSeries(a=a, lam=lam, p_const=p_const, p_lin=p_lin, q=q)


def finite_difference_residuals(spec: HamiltonianSpec, ts,
                                delta: float = 1e-3,
                                tol: float = 1e-11) -> np.ndarray:
    """System residual at each t with J' from a five-point stencil.

    Quadrature values of the triple feed both sides, so this checks the
    integrals against the ODE with no shared code path.
    """
    from .abelian import triple
    from .model import Annulus

    sys = pf_system(spec)
    ts = np.asarray(ts, dtype=float)
    out = np.empty(ts.shape)
    weights = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * delta)
    for i, t in enumerate(ts):
        stencil = t + delta * np.arange(-2.0, 3.0)
        vals = np.array([triple(spec, Annulus.SIGMA_PLUS, s, tol=tol)
                         .as_vector() for s in stencil])
        J = vals[2]
        Jprime = weights @ vals
        out[i] = sys.residual(t, J, Jprime)
    return out


@dataclass(frozen=True)
class AsymptoticsMatch:
    lam_expected: float
    lam_fitted: np.ndarray      # per component of the triple
    rel_err: np.ndarray
    residual_rms: np.ndarray
    window: np.ndarray


def match_asymptotics(spec: HamiltonianSpec, window=None,
                      tol: float = 1e-11, order: int = 8) -> AsymptoticsMatch:
    """Fit each J_k on {Q_k(t) ln|t|, 1, t, t^2, t^3} near t = -0.

    The triple is lam*(Q ln|t| + S) + mu*P + nu*Q with analytic S, so the
    fitted multiplier of the structured log column must reproduce lam on
    every component.  (A direct three-column fit against lam, mu, nu is
    not solvable from data because S is not in the span of P and Q.)
    """
    from .abelian import default_log_window, triples_on_grid
    from .model import Annulus

    fs = fundamental(spec, order=order)
    if window is None:
        window = default_log_window()
    window = np.asarray(window, dtype=float)
    trs = triples_on_grid(spec, Annulus.SIGMA_PLUS, window, tol=tol)
    vals = np.array([tr.as_vector() for tr in trs])
    qcols = fs.Q(window)  # (n, 3)
    logs = np.log(np.abs(window))

    lam_fit = np.empty(3)
    res_rms = np.empty(3)
    for c in range(3):
        cols = np.column_stack([qcols[:, c] * logs,
                                np.ones_like(window),
                                window, window**2, window**3])
        scale = np.linalg.norm(cols, axis=0)
        scale[scale == 0.0] = 1.0
        sol, *_ = np.linalg.lstsq(cols / scale, vals[:, c], rcond=None)
        coeffs = sol / scale
        lam_fit[c] = coeffs[0]
        res_rms[c] = float(np.sqrt(np.mean((cols @ coeffs - vals[:, c])**2)))
    rel = np.abs(lam_fit - fs.lam) / abs(fs.lam)
    return AsymptoticsMatch(lam_expected=fs.lam, lam_fitted=lam_fit,
                            rel_err=rel, residual_rms=res_rms, window=window)
