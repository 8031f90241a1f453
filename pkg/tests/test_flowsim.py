import math

import numpy as np
import pytest
from scipy.interpolate import interp1d

from saddleloop.model import (
    Annulus,
    Family,
    HamiltonianSpec,
    PerturbationSpec,
)
from saddleloop.ovals import OvalRangeError, section_segment
from saddleloop.flowsim import (
    FlowSpec,
    QuadraticOneForm,
    alien_witness,
    appendix_flow,
    census,
    displacement,
    integrate,
    return_map,
    saddle_traces,
    separatrix_shifts,
    witness_flow,
)


def unperturbed(spec):
    return FlowSpec(hamiltonian=spec, epsilon=0.0,
                    one_form=QuadraticOneForm.gamma_type(0.0))


# --- conservative checks ------------------------------------------------


def test_energy_conserved_normal_form(spec_a1):
    flow = unperturbed(spec_a1)
    traj = integrate(flow, np.array([1.5, 0.2]), 100.0)
    assert traj.status == "completed"
    hs = np.array([flow.energy(z) for z in traj.states])
    assert np.max(np.abs(hs - hs[0])) < 1e-7


def test_energy_conserved_appendix(appendix_spec):
    flow = appendix_flow(appendix_spec, PerturbationSpec(epsilon=0.0))
    start = np.array([0.0, 1.0])
    assert flow.energy(start) == pytest.approx(-11.0 / 12.0, rel=1e-15)
    traj = integrate(flow, start, 100.0)
    hs = np.array([flow.energy(z) for z in traj.states])
    assert np.max(np.abs(hs + 11.0 / 12.0)) < 1e-7


def test_reversibility_normal_form(spec_a1):
    # the unperturbed field is odd under (x, y, t) -> (x, -y, -t)
    flow = unperturbed(spec_a1)
    start = np.array([1.5, 0.3])
    fwd = integrate(flow, start, 5.0)
    back = integrate(flow, start * np.array([1.0, -1.0]), 5.0,
                     time_direction=-1)
    interp = interp1d(fwd.ts, fwd.states.T, kind="cubic")
    worst = 0.0
    for t, z in zip(back.ts, back.states):
        if abs(t) <= fwd.ts[-1]:
            zf = interp(abs(t))
            worst = max(worst, abs(zf[0] - z[0]), abs(zf[1] + z[1]))
    assert worst < 1e-8


def test_return_identity_unperturbed(spec_a1):
    flow = unperturbed(spec_a1)
    sect = section_segment(spec_a1, Annulus.SIGMA_PLUS)
    s = sect.coord_for_energy(-1.0)
    res = return_map(flow, sect, s)
    assert res.reason == "ok"
    assert abs(res.s_return - s) < 1e-8
    assert res.t_return > 0


def test_integrate_validation(spec_a1):
    flow = unperturbed(spec_a1)
    with pytest.raises(ValueError):
        integrate(flow, np.array([1.5, 0.2]), -1.0)


def test_return_map_rejects_out_of_section(spec_a1):
    flow = unperturbed(spec_a1)
    sect = section_segment(spec_a1, Annulus.SIGMA_PLUS)
    lo, hi = sect.s_bounds()
    with pytest.raises(ValueError):
        return_map(flow, sect, hi + 0.5)


# --- one-form bookkeeping -----------------------------------------------


def test_one_form_first_order_coeffs():
    f = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    g = (0.7, 0.8, 0.9, 1.0, 1.1, 1.2)
    w = QuadraticOneForm(f=f, g=g)
    coeffs = w.first_order_coeffs()
    assert coeffs.alpha == pytest.approx(f[2] - g[1])
    assert coeffs.beta == pytest.approx(f[4] - 2 * g[3])
    assert w.gamma_direction() == pytest.approx(2 * f[5] - g[4])


def test_one_form_validation():
    with pytest.raises(ValueError):
        QuadraticOneForm(f=(1.0, 2.0), g=(0.0,) * 6)


def test_gamma_type_constructor():
    w = QuadraticOneForm.gamma_type(0.8)
    coeffs = w.first_order_coeffs()
    assert coeffs.alpha == 0.0 and coeffs.beta == 0.0
    assert w.gamma_direction() == pytest.approx(0.8)


def test_appendix_one_form_requires_family(spec_a1):
    with pytest.raises(ValueError):
        QuadraticOneForm.appendix(spec_a1, PerturbationSpec(epsilon=1e-3))


# --- saddle quantities ---------------------------------------------------


def test_traces_vanish_unperturbed(appendix_spec):
    flow = appendix_flow(appendix_spec, PerturbationSpec(epsilon=0.0))
    tp = saddle_traces(flow)
    assert tp.sigma1 == pytest.approx(0.0, abs=1e-12)
    assert tp.sigma2 == pytest.approx(0.0, abs=1e-12)


def test_traces_first_order_law(appendix_spec):
    eps, mu1, mu2 = 1e-6, 0.005, 0.003
    c = appendix_spec.c
    flow = appendix_flow(appendix_spec, PerturbationSpec(eps, mu1, mu2))
    tp = saddle_traces(flow)
    assert tp.sigma1 / eps == pytest.approx(-16.0 + c - mu2, rel=1e-2)
    assert tp.sigma2 / eps == pytest.approx(-16.0 - c - mu2, rel=1e-2)
    # c > 16 makes the traces differ in sign
    assert tp.sigma1 > 0 > tp.sigma2


def test_traces_reject_normal_form(spec_a1):
    with pytest.raises(ValueError):
        saddle_traces(unperturbed(spec_a1))


def test_shifts_first_order_law(appendix_spec):
    # at eps=1e-6 the eps^2 contamination of the connection shifts sits
    # near 1e-2 relative; at eps=1e-3 it dominates b2 and the law fails
    eps, mu1, mu2 = 1e-6, 0.005, 0.003
    flow = appendix_flow(appendix_spec, PerturbationSpec(eps, mu1, mu2))
    sh = separatrix_shifts(flow)
    assert sh.b1 / eps == pytest.approx(2 * mu1, rel=5e-2)
    assert sh.b2 / eps == pytest.approx(-2 * mu1 - math.pi * math.sqrt(3.0) * mu2,
                                        rel=5e-2)


# --- census --------------------------------------------------------------


def test_census_unperturbed_degenerate(spec_a1):
    res = census(unperturbed(spec_a1), n=100, with_saddle_data=False)
    assert res.degenerate_continuum
    assert res.cycles == ()


def test_census_validation(spec_a1):
    flow = FlowSpec(hamiltonian=spec_a1, epsilon=1e-3,
                    one_form=QuadraticOneForm.gamma_type(0.5))
    with pytest.raises(ValueError):
        census(flow, n=50)
    with pytest.raises(ValueError):
        census(flow, n=100, s_range=(0.0, 99.0))
    with pytest.raises(OvalRangeError):
        census(appendix_flow(HamiltonianSpec(family=Family.APPENDIX_ELLIPSE, c=17.0),
                             PerturbationSpec(epsilon=1e-3)),
               annulus=Annulus.SIGMA_MINUS, n=100)


def test_census_threaded_deterministic(spec_a1):
    one_form = QuadraticOneForm(
        f=(0.3, -0.1, 0.2, 0.05, -0.4, 0.15),
        g=(-0.2, 0.1, 0.3, -0.25, 0.05, -0.1))
    flow = FlowSpec(hamiltonian=spec_a1, epsilon=1e-3, one_form=one_form)
    sect = section_segment(spec_a1, Annulus.SIGMA_PLUS)
    win = (sect.coord_for_energy(-0.4), sect.coord_for_energy(-1e-3))
    win = (min(win), max(win))
    seq = census(flow, s_range=win, n=100, T_max=60.0, with_saddle_data=False)
    par = census(flow, s_range=win, n=100, T_max=60.0, threads=4,
                 with_saddle_data=False)
    assert len(seq.cycles) == len(par.cycles)
    for a, b in zip(seq.cycles, par.cycles):
        assert a.section_coordinate == b.section_coordinate
        assert a.stability == b.stability


# --- committed witness ---------------------------------------------------


def test_witness_fixture_contents():
    w = alien_witness()
    for key in ("family", "c", "epsilon", "mu1", "mu2", "section_window",
                "energy_window", "grid_points", "stability_delta", "t_max",
                "expected_cycles", "expected_stabilities",
                "expected_section_coords", "coord_tolerance",
                "melnikov_max_zeros"):
        assert key in w, key
    assert w["expected_cycles"] == 2
    assert w["c"] > 16.0


def test_witness_census_replay():
    w = alien_witness()
    flow = witness_flow()
    res = census(flow, s_range=tuple(w["section_window"]),
                 n=int(w["grid_points"]),
                 stability_delta=float(w["stability_delta"]),
                 T_max=float(w["t_max"]), with_saddle_data=False)
    assert len(res.cycles) == w["expected_cycles"]
    stabs = [c.stability for c in res.cycles]
    assert stabs == list(w["expected_stabilities"])
    for cyc, ref in zip(res.cycles, w["expected_section_coords"]):
        assert abs(cyc.section_coordinate - ref) < w["coord_tolerance"]
    # repeller inside, attractor outside, per the return derivatives
    assert res.cycles[0].return_derivative > 1.0
    assert res.cycles[1].return_derivative < 1.0


def test_witness_cycle_is_fixed_point():
    w = alien_witness()
    flow = witness_flow()
    sect = section_segment(flow.hamiltonian, Annulus.SIGMA_PLUS)
    s_rep = w["expected_section_coords"][0]
    d = displacement(flow, sect, s_rep, T_max=float(w["t_max"]))
    assert d is not None
    assert abs(d) < 5e-7
