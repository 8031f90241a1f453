"""Direct integration of the perturbed flows and limit-cycle detection.

The perturbed system is dH + eps*omega = 0 with omega = f dx + g dy,
i.e. xdot = H_y + eps*g, ydot = -H_x - eps*f, for quadratic f and g.
The appendix family uses f = (16 + c*x - pi*sqrt(3)*y)*y + mu1 + mu2*y,
g = 0.

Tooling here: adaptive DOP853 integration with saddle-ball segmentation
(short max step inside balls of radius 0.05 around the saddles, where
passage times diverge), Poincare return maps located by terminal
section events, a cycle census by displacement sign changes, saddle
traces by Newton continuation, and separatrix shift functions measured
in the Hamiltonian chart on mid-connection transversals.

Cycle detection is fixed-point based rather than attractor settling:
the cycles of interest can be repelling or nearly neutral (traces are
O(eps)), so forward settling would miss them.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .model import (Annulus, Family, HamiltonianSpec, MelnikovCoeffs,
                    PerturbationSpec, critical_data)
from .ovals import SectionSegment, section_segment

SADDLE_BALL_RADIUS = 0.05
BALL_MAX_STEP = 0.01
OUTER_MAX_STEP = 0.2
BALL_HYSTERESIS = 1e-6

# coefficient order for quadratic polynomials
QUAD_BASIS = ("1", "x", "y", "x^2", "x*y", "y^2")


def _poly_val(c, x, y):
    return (c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y
            + c[5] * y * y)


def _poly_dx(c, x, y):
    return c[1] + 2.0 * c[3] * x + c[4] * y


def _poly_dy(c, x, y):
    return c[2] + c[4] * x + 2.0 * c[5] * y


@dataclass(frozen=True)
class QuadraticOneForm:
    """omega = f dx + g dy with quadratic coefficient tuples ordered as
    (1, x, y, x^2, x*y, y^2)."""

    f: tuple[float, float, float, float, float, float]
    g: tuple[float, float, float, float, float, float] = (0.0,) * 6

    def __post_init__(self):
        if len(self.f) != 6 or len(self.g) != 6:
            raise ValueError("quadratic coefficient tuples have 6 entries")

    def first_order_coeffs(self) -> MelnikovCoeffs:
        """(alpha, beta) of M_1 = alpha*J_0 + beta*J_1 for this form.

        Green's theorem on the clockwise ovals turns the loop integral
        of omega into the area integral of f_y - g_x; the constant and
        x moments give alpha and beta, while the y moment integrates to
        zero by the y-symmetry of the ovals.
        """
        alpha = self.f[2] - self.g[1]
        beta = self.f[4] - 2.0 * self.g[3]
        return MelnikovCoeffs(alpha=alpha, beta=beta, gamma=0.0, order_k=1)

    def gamma_direction(self) -> float:
        """Coefficient of the y moment (2*f02 - g11).  When the first
        order coefficients vanish but this does not, the perturbation is
        gamma-type: M_1 = 0 and the next Melnikov function carries a
        nonzero x^{-1} coefficient."""
        return 2.0 * self.f[5] - self.g[4]

    @classmethod
    def gamma_type(cls, c: float = 1.0) -> "QuadraticOneForm":
        return cls(f=(0.0, 0.0, 0.0, 0.0, 0.0, 0.5 * c))

    @classmethod
    def appendix(cls, spec: HamiltonianSpec,
                 pert: PerturbationSpec) -> "QuadraticOneForm":
        if spec.family is not Family.APPENDIX_ELLIPSE:
            raise ValueError("appendix one-form requires the appendix family")
        return cls(f=(pert.mu1, 0.0, 16.0 + pert.mu2, 0.0, spec.c,
                      -math.pi * math.sqrt(3.0)))


@dataclass(frozen=True)
class FlowSpec:
    hamiltonian: HamiltonianSpec
    epsilon: float
    one_form: QuadraticOneForm
    tol: float = 1e-10

    def rhs(self, t, z):
        x, y = z
        hx, hy = self.hamiltonian.grad_H(x, y)
        if self.epsilon == 0.0:
            return (hy, -hx)
        w = self.one_form
        return (hy + self.epsilon * _poly_val(w.g, x, y),
                -hx - self.epsilon * _poly_val(w.f, x, y))

    def jacobian(self, z) -> np.ndarray:
        x, y = z
        hxx, hxy, hyy = self.hamiltonian.hess_H(x, y)
        w, e = self.one_form, self.epsilon
        return np.array([
            [hxy + e * _poly_dx(w.g, x, y), hyy + e * _poly_dy(w.g, x, y)],
            [-hxx - e * _poly_dx(w.f, x, y), -hxy - e * _poly_dy(w.f, x, y)]])

    def energy(self, z) -> float:
        return self.hamiltonian.eval_H(z[0], z[1])


def appendix_flow(spec: HamiltonianSpec, pert: PerturbationSpec,
                  tol: float = 1e-10) -> FlowSpec:
    return FlowSpec(hamiltonian=spec, epsilon=pert.epsilon,
                    one_form=QuadraticOneForm.appendix(spec, pert), tol=tol)


@dataclass(frozen=True)
class EventSpec:
    """Terminal event.  ``direction`` is the sign of d(func)/dtau along
    the trajectory as computed, so for backward runs it refers to the
    time-reversed motion."""

    func: Callable[[np.ndarray], float]
    direction: int = 0
    name: str = "event"


@dataclass
class Trajectory:
    ts: np.ndarray
    states: np.ndarray          # shape (n, 2)
    status: str                 # completed | event | failed
    event_name: str | None = None
    event_state: np.ndarray | None = None
    event_time: float | None = None
    n_segments: int = 1

    def energies(self, flow: FlowSpec) -> np.ndarray:
        return np.array([flow.energy(z) for z in self.states])


def _saddle_centers(spec: HamiltonianSpec) -> list[np.ndarray]:
    return [np.asarray(s.xy, dtype=float)
            for s in critical_data(spec).saddles]


def integrate(flow: FlowSpec, start, T: float,
              user_events: Sequence[EventSpec] = (),
              time_direction: int = 1,
              max_segments: int = 10000) -> Trajectory:
    """Integrate for duration T (one time direction), segmenting at
    saddle-ball boundaries to cap the step size near slow passages.

    Terminal user events stop the run; the result records which one.
    """
    if T <= 0.0:
        raise ValueError("duration must be positive")
    sgn = 1.0 if time_direction >= 0 else -1.0

    def rhs(t, z):
        dx, dy = flow.rhs(t, z)
        return (sgn * dx, sgn * dy)

    saddles = _saddle_centers(flow.hamiltonian)
    z = np.asarray(start, dtype=float)
    inside = None
    for i, s in enumerate(saddles):
        if np.linalg.norm(z - s) < SADDLE_BALL_RADIUS:
            inside = i
    ts_parts, zs_parts = [], []
    t_now = 0.0
    n_seg = 0
    while n_seg < max_segments:
        n_seg += 1
        events = []
        labels = []
        if inside is None:
            for i, s in enumerate(saddles):
                def enter(t, zz, s=s):
                    return float(np.hypot(zz[0] - s[0], zz[1] - s[1])
                                 - SADDLE_BALL_RADIUS)
                enter.terminal = True
                enter.direction = -1
                events.append(enter)
                labels.append(("ball_enter", i))
        else:
            s = saddles[inside]

            def leave(t, zz, s=s):
                return float(np.hypot(zz[0] - s[0], zz[1] - s[1])
                             - SADDLE_BALL_RADIUS - BALL_HYSTERESIS)
            leave.terminal = True
            leave.direction = 1
            events.append(leave)
            labels.append(("ball_exit", inside))
        for ev in user_events:
            def uf(t, zz, ev=ev):
                return ev.func(zz)
            uf.terminal = True
            uf.direction = ev.direction
            events.append(uf)
            labels.append(("user", ev.name))

        sol = solve_ivp(rhs, (t_now, T), z, method="DOP853",
                        rtol=flow.tol, atol=0.01 * flow.tol,
                        max_step=BALL_MAX_STEP if inside is not None
                        else OUTER_MAX_STEP,
                        events=events)
        ts_parts.append(sgn * sol.t)
        zs_parts.append(sol.y.T)
        if sol.status == 0:
            return Trajectory(np.concatenate(ts_parts),
                              np.vstack(zs_parts), "completed",
                              n_segments=n_seg)
        if sol.status < 0:
            warnings.warn(f"integrator failed at t={sol.t[-1]:.6g}: "
                          f"{sol.message}", RuntimeWarning)
            return Trajectory(np.concatenate(ts_parts),
                              np.vstack(zs_parts), "failed",
                              n_segments=n_seg)
        # an event fired; the earliest one decided termination
        fired = [(k, te[0]) for k, te in enumerate(sol.t_events) if len(te)]
        k, t_ev = min(fired, key=lambda p: p[1])
        z_ev = sol.y_events[k][0]
        kind, which = labels[k]
        if kind == "user":
            # scipy already ends sol.t/sol.y at the event point
            return Trajectory(np.concatenate(ts_parts),
                              np.vstack(zs_parts), "event",
                              event_name=which, event_state=z_ev,
                              event_time=sgn * t_ev, n_segments=n_seg)
        inside = which if kind == "ball_enter" else None
        z = z_ev
        t_now = t_ev
    raise RuntimeError("segment budget exhausted; trajectory is likely "
                       "stuck at a saddle ball boundary")


@dataclass(frozen=True)
class ReturnResult:
    s_return: float | None
    reason: str          # ok | escape | left_annulus | timeout | failed
    t_return: float | None


def _section_event(section: SectionSegment) -> EventSpec:
    # crossing functional is the off-section coordinate
    idx = 1 if section.axis == "x" else 0
    return EventSpec(func=lambda z, i=idx: float(z[i]),
                     direction=section.direction, name="section")


def _escape_event(radius: float) -> EventSpec:
    return EventSpec(func=lambda z: float(z[0] * z[0] + z[1] * z[1]
                                          - radius * radius),
                     direction=1, name="escape")


def return_map(flow: FlowSpec, section: SectionSegment, s: float,
               T_max: float = 400.0, escape_radius: float = 12.0,
               burn_in: float = 1e-3) -> ReturnResult:
    """First return to the section in the flow direction.

    A short burn-in keeps the departure itself from registering as the
    return.  No-return outcomes (escape through the broken loop, or no
    crossing within T_max) are reported as data, not errors.
    """
    if not section.contains(s):
        raise ValueError(f"s={s} outside section range {section.s_bounds()}")
    start = section.point(s)
    lead = integrate(flow, start, burn_in,
                     user_events=(_escape_event(escape_radius),))
    if lead.status == "event":
        return ReturnResult(None, "escape", None)
    if lead.status == "failed":
        return ReturnResult(None, "failed", None)
    tr = integrate(flow, lead.states[-1], T_max - burn_in,
                   user_events=(_section_event(section),
                                _escape_event(escape_radius)))
    if tr.status == "event" and tr.event_name == "section":
        coord = 0 if section.axis == "x" else 1
        s_ret = float(tr.event_state[coord])
        if not section.contains(s_ret):
            # crossed the section line outside the annulus (slipped
            # through a broken connection): an exit, not a return
            return ReturnResult(None, "left_annulus", None)
        return ReturnResult(s_ret, "ok", burn_in + tr.event_time)
    if tr.status == "event":
        return ReturnResult(None, "escape", None)
    if tr.status == "failed":
        return ReturnResult(None, "failed", None)
    return ReturnResult(None, "timeout", None)


def displacement(flow: FlowSpec, section: SectionSegment, s: float,
                 **kw) -> float | None:
    res = return_map(flow, section, s, **kw)
    return None if res.s_return is None else res.s_return - s


@dataclass(frozen=True)
class Cycle:
    section_coordinate: float
    energy_estimate: float
    stability: str                      # attracting | repelling | undetermined
    return_derivative: float


@dataclass(frozen=True)
class CycleCensus:
    cycles: tuple[Cycle, ...]
    saddle_traces: tuple[float, float] | None
    shifts: tuple[float, float] | None
    degenerate_continuum: bool
    no_return_count: int
    grid_size: int
    flow: FlowSpec


def census(flow: FlowSpec, annulus: Annulus = Annulus.SIGMA_PLUS,
           s_range=None, n: int = 100, margin: float = 0.0,
           refine_tol: float = 1e-10, stability_delta: float = 1e-4,
           T_max: float = 400.0, escape_radius: float = 12.0,
           threads: int = 1, with_saddle_data: bool = True) -> CycleCensus:
    """Limit-cycle census by return-map fixed points on one annulus.

    s_range defaults to the full section span (slightly shrunk); pass a
    narrow window near the loop end for near-loop censuses, with margin
    extending the section past the unperturbed loop.
    """
    if n < 100:
        raise ValueError("census needs a grid of at least 100 points")
    sec = section_segment(flow.hamiltonian, annulus, margin=margin)
    lo, hi = sec.s_bounds()
    if s_range is None:
        span0 = hi - lo
        lo, hi = lo + 1e-3 * span0, hi - 1e-3 * span0
    else:
        lo, hi = float(s_range[0]), float(s_range[1])
        if not (sec.contains(lo) and sec.contains(hi)):
            raise ValueError(f"s_range {s_range} outside section "
                             f"{sec.s_bounds()}")
    grid = np.linspace(lo, hi, n)
    span = abs(hi - lo)

    if flow.epsilon == 0.0:
        return CycleCensus(cycles=(), saddle_traces=None, shifts=None,
                           degenerate_continuum=True, no_return_count=0,
                           grid_size=n, flow=flow)

    def disp(s):
        return displacement(flow, sec, float(s), T_max=T_max,
                            escape_radius=escape_radius)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(disp, grid))
    else:
        vals = [disp(s) for s in grid]
    no_return = sum(1 for v in vals if v is None)

    class _Escaped(Exception):
        pass

    def disp_strict(s):
        v = disp(s)
        if v is None:
            raise _Escaped
        return v

    roots = []
    for i in range(n - 1):
        va, vb = vals[i], vals[i + 1]
        if va is None or vb is None:
            continue
        if va == 0.0:
            roots.append(float(grid[i]))
        elif va * vb < 0.0:
            try:
                r = brentq(disp_strict, grid[i], grid[i + 1],
                           xtol=refine_tol, rtol=8.9e-16, maxiter=120)
            except _Escaped:
                no_return += 1
                continue
            roots.append(float(r))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    # deduplicate
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-8 * span:
            merged.append(r)

    slo, shi = sec.s_bounds()
    slo, shi = min(slo, shi), max(slo, shi)
    cycles = []
    for r in merged:
        d = stability_delta * span
        d = min(d, 0.5 * (r - slo), 0.5 * (shi - r))
        if d < 1e-13 * span:
            cycles.append(Cycle(section_coordinate=r,
                                energy_estimate=sec.energy(r),
                                stability="undetermined",
                                return_derivative=math.nan))
            continue
        rp = return_map(flow, sec, r + d, T_max=T_max,
                        escape_radius=escape_radius).s_return
        rm = return_map(flow, sec, r - d, T_max=T_max,
                        escape_radius=escape_radius).s_return
        if rp is None or rm is None:
            deriv = math.nan
            stab = "undetermined"
        else:
            deriv = (rp - rm) / (2.0 * d)
            if abs(deriv - 1.0) < 1e-5:
                stab = "undetermined"
            elif abs(deriv) < 1.0:
                stab = "attracting"
            else:
                stab = "repelling"
        cycles.append(Cycle(section_coordinate=r,
                            energy_estimate=sec.energy(r),
                            stability=stab, return_derivative=deriv))

    traces = shifts = None
    if with_saddle_data and flow.hamiltonian.family is Family.APPENDIX_ELLIPSE:
        tp = saddle_traces(flow)
        traces = (tp.sigma1, tp.sigma2)
        sh = separatrix_shifts(flow)
        shifts = (sh.b1, sh.b2)
    return CycleCensus(cycles=tuple(cycles), saddle_traces=traces,
                       shifts=shifts, degenerate_continuum=False,
                       no_return_count=no_return, grid_size=n, flow=flow)


class NewtonError(RuntimeError):
    pass


def _newton_saddle(flow: FlowSpec, seed) -> np.ndarray:
    z = np.asarray(seed, dtype=float)
    for _ in range(60):
        fx, fy = flow.rhs(0.0, z)
        res = np.array([fx, fy])
        if np.max(np.abs(res)) < 1e-14:
            return z
        step = np.linalg.solve(flow.jacobian(z), res)
        z = z - step
        if not np.all(np.isfinite(z)):
            raise NewtonError(f"saddle continuation diverged from {seed}")
    if np.max(np.abs(np.array(flow.rhs(0.0, z)))) > 1e-10:
        raise NewtonError(f"saddle continuation stalled near {z}")
    return z


@dataclass(frozen=True)
class TracePair:
    sigma1: float          # at the saddle continued from (-1, 0)
    sigma2: float          # at the saddle continued from (+1, 0)
    saddle1: tuple[float, float]
    saddle2: tuple[float, float]


def saddle_traces(flow: FlowSpec) -> TracePair:
    """Jacobian traces at the two continued saddles (appendix family)."""
    if flow.hamiltonian.family is not Family.APPENDIX_ELLIPSE:
        raise ValueError("saddle traces are defined for the appendix family")
    s1 = _newton_saddle(flow, (-1.0, 0.0))
    s2 = _newton_saddle(flow, (1.0, 0.0))
    j1, j2 = flow.jacobian(s1), flow.jacobian(s2)
    return TracePair(sigma1=float(j1[0, 0] + j1[1, 1]),
                     sigma2=float(j2[0, 0] + j2[1, 1]),
                     saddle1=(float(s1[0]), float(s1[1])),
                     saddle2=(float(s2[0]), float(s2[1])))


def _eig_directions(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(unstable, stable) unit eigenvectors of a 2x2 saddle Jacobian."""
    vals, vecs = np.linalg.eig(J)
    if np.iscomplexobj(vals) and np.max(np.abs(vals.imag)) > 1e-12:
        raise NewtonError("saddle eigenvalues are not real")
    vals, vecs = vals.real, vecs.real
    iu, js = int(np.argmax(vals)), int(np.argmin(vals))
    if vals[iu] <= 0.0 or vals[js] >= 0.0:
        raise NewtonError("continued point is not a saddle")
    u = vecs[:, iu] / np.linalg.norm(vecs[:, iu])
    v = vecs[:, js] / np.linalg.norm(vecs[:, js])
    return u, v


@dataclass(frozen=True)
class ShiftPair:
    b1: float       # lower connection (segment through y = 0)
    b2: float       # upper connection (half-ellipse arc)
    saddle1: tuple[float, float]
    saddle2: tuple[float, float]


def _transversal_energy(flow: FlowSpec, start, direction: int,
                        time_direction: int, T_max: float,
                        escape_radius: float) -> float:
    ev = EventSpec(func=lambda z: float(z[0]), direction=direction,
                   name="transversal")
    tr = integrate(flow, start, T_max, user_events=(ev,
                   _escape_event(escape_radius)),
                   time_direction=time_direction)
    if tr.status != "event" or tr.event_name != "transversal":
        raise RuntimeError(f"separatrix did not reach the transversal "
                           f"({tr.status})")
    return flow.energy(tr.event_state)


def separatrix_shifts(flow: FlowSpec, offset: float = 1e-8,
                      T_max: float = 60.0,
                      escape_radius: float = 12.0) -> ShiftPair:
    """Shift functions b_1, b_2 of the two broken connections.

    Each b_i is the difference of H-values, measured on the transversal
    x = 0, between the arriving unstable separatrix and the departing
    stable separatrix: b_i = H(unstable) - H(stable).  To first order
    b_1 = 2*eps*mu1 and b_2 = eps*(-2*mu1 - pi*sqrt(3)*mu2).

    Launch points sit `offset` along the saddle eigenvectors; the O(offset^2)
    manifold curvature error is far below the O(eps*mu) shifts.
    """
    if flow.hamiltonian.family is not Family.APPENDIX_ELLIPSE:
        raise ValueError("shift functions are defined for the appendix family")
    s1 = _newton_saddle(flow, (-1.0, 0.0))
    s2 = _newton_saddle(flow, (1.0, 0.0))
    u1, v1 = _eig_directions(flow.jacobian(s1))
    u2, v2 = _eig_directions(flow.jacobian(s2))

    # lower connection: flow runs from s2 to s1 along y = 0.
    u2 = u2 if u2[0] < 0.0 else -u2        # unstable of s2 into the segment
    v1 = v1 if v1[0] > 0.0 else -v1        # stable of s1 from inside
    hu = _transversal_energy(flow, s2 + offset * u2, direction=-1,
                             time_direction=1, T_max=T_max,
                             escape_radius=escape_radius)
    hs = _transversal_energy(flow, s1 + offset * v1, direction=1,
                             time_direction=-1, T_max=T_max,
                             escape_radius=escape_radius)
    b1 = hu - hs

    # upper connection: flow runs from s1 over the arc to s2.
    u1 = u1 if u1[1] > 0.0 else -u1        # unstable of s1, ascending branch
    v2 = v2 if v2[1] > 0.0 else -v2        # stable of s2 from above
    hu = _transversal_energy(flow, s1 + offset * u1, direction=1,
                             time_direction=1, T_max=T_max,
                             escape_radius=escape_radius)
    hs = _transversal_energy(flow, s2 + offset * v2, direction=-1,
                             time_direction=-1, T_max=T_max,
                             escape_radius=escape_radius)
    b2 = hu - hs
    return ShiftPair(b1=b1, b2=b2,
                     saddle1=(float(s1[0]), float(s1[1])),
                     saddle2=(float(s2[0]), float(s2[1])))


def alien_witness() -> dict:
    """Committed parameter point whose census exceeds the first-order zero count.

    Returns the fixture dict: family constants, perturbation values, the
    section window holding both cycles, census settings, and the expected
    counts. See data/alien_witness.json for the parameter rationale.
    """
    import json
    from importlib import resources

    path = resources.files("saddleloop").joinpath("data/alien_witness.json")
    return json.loads(path.read_text())


def witness_flow(witness: dict | None = None) -> FlowSpec:
    """Build the perturbed flow at the committed witness point."""
    w = alien_witness() if witness is None else witness
    spec = HamiltonianSpec(family=Family.APPENDIX_ELLIPSE, c=float(w["c"]))
    pert = PerturbationSpec(epsilon=float(w["epsilon"]),
                            mu1=float(w["mu1"]), mu2=float(w["mu2"]))
    return appendix_flow(spec, pert)
