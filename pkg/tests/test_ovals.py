import math

import numpy as np
import pytest

from saddleloop.model import Annulus, Family, HamiltonianSpec, critical_data
from saddleloop.ovals import (
    OvalRangeError,
    section_segment,
    slice_oval,
    x1_loop_root,
)


def test_slice_endpoints_lie_on_level_set(spec_a1):
    sl = slice_oval(spec_a1, Annulus.SIGMA_PLUS, -1.0)
    for u in (sl.lo, sl.hi):
        x, y = (u, 0.0) if sl.axis == "x" else (0.0, u)
        assert spec_a1.eval_H(x, y) == pytest.approx(-1.0, abs=1e-10)
    # interior of the span carries a real branch
    um = 0.5 * (sl.lo + sl.hi)
    assert sl.branch_sq(um) > 0.0


def test_slice_factored_weight_consistent(spec_a1):
    sl = slice_oval(spec_a1, Annulus.SIGMA_PLUS, -1.0)
    for u in np.linspace(sl.lo + 1e-3, sl.hi - 1e-3, 7):
        direct = sl.branch_sq(u)
        factored = (u - sl.lo) * (sl.hi - u) * sl.phi(u)
        assert direct == pytest.approx(factored, rel=1e-12)
        assert sl.phi(u) > 0.0
    # phi_prime by central difference
    u0 = 0.5 * (sl.lo + sl.hi)
    d = 1e-6
    fd = (sl.phi(u0 + d) - sl.phi(u0 - d)) / (2 * d)
    assert sl.phi_prime(u0) == pytest.approx(fd, abs=1e-8)


def test_slice_shrinks_to_center(spec_a1):
    # t just above the center energy a-3 = -2
    sl = slice_oval(spec_a1, Annulus.SIGMA_PLUS, -2.0 + 1e-6)
    assert sl.hi - sl.lo < 5e-3
    assert sl.lo < 1.0 < sl.hi


def test_slice_range_errors(spec_a1, spec_a05):
    with pytest.raises(OvalRangeError):
        slice_oval(spec_a1, Annulus.SIGMA_PLUS, -3.5)  # below center energy
    with pytest.raises(OvalRangeError):
        slice_oval(spec_a1, Annulus.SIGMA_PLUS, 0.1)  # above the loop
    no_minus = HamiltonianSpec(family=Family.NORMAL_FORM, a=-0.5)
    with pytest.raises(OvalRangeError):
        slice_oval(no_minus, Annulus.SIGMA_MINUS, 1.0)
    t1 = critical_data(spec_a05).center1.energy
    with pytest.raises(OvalRangeError):
        slice_oval(spec_a05, Annulus.SIGMA_MINUS, t1 + 0.1)


def test_sigma_minus_slice_negative_x(spec_a05):
    sl = slice_oval(spec_a05, Annulus.SIGMA_MINUS, 1.0)
    assert sl.hi < 0.0
    xc = (spec_a05.a - 2.0) / spec_a05.a
    assert sl.lo < xc < sl.hi


def test_appendix_slice(appendix_spec):
    sl = slice_oval(appendix_spec, Annulus.SIGMA_PLUS, -0.5)
    assert sl.axis == "y"
    assert 0.0 < sl.lo < 2.0 < sl.hi
    for u in (sl.lo, sl.hi):
        assert appendix_spec.eval_H(0.0, u) == pytest.approx(-0.5, abs=1e-10)
    with pytest.raises(OvalRangeError):
        slice_oval(appendix_spec, Annulus.SIGMA_MINUS, 0.5)


def test_x1_loop_root(spec_a1):
    x1 = x1_loop_root(spec_a1.a)
    assert x1 == pytest.approx(math.sqrt(3.0), rel=1e-14)
    # r(x1) = 0 for general a
    for a in (0.5, 1.5, -0.5):
        x1 = x1_loop_root(a)
        r = -a * x1**2 + 3 * (a - 1) * x1 - 3 * (a - 2)
        assert abs(r) < 1e-12


def test_section_energy_chart_monotone(spec_a1):
    sect = section_segment(spec_a1, Annulus.SIGMA_PLUS)
    lo, hi = sect.s_bounds()
    ss = np.linspace(lo, hi, 50)
    es = np.array([sect.energy(s) for s in ss])
    diffs = np.diff(es)
    assert np.all(diffs > 0) or np.all(diffs < 0)
    # endpoints: center energy and loop energy
    assert sect.energy(sect.s_center) == pytest.approx(-2.0, rel=1e-12)
    assert sect.energy(sect.s_loop) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("annulus,t", [(Annulus.SIGMA_PLUS, -1.3), (Annulus.SIGMA_MINUS, 2.0)])
def test_coord_for_energy_inverts_energy(spec_a05, annulus, t):
    sect = section_segment(spec_a05, annulus)
    s = sect.coord_for_energy(t)
    assert sect.contains(s)
    assert sect.energy(s) == pytest.approx(t, rel=1e-10, abs=1e-12)


def test_section_margin_extends_past_loop(spec_a1):
    plain = section_segment(spec_a1, Annulus.SIGMA_PLUS)
    wide = section_segment(spec_a1, Annulus.SIGMA_PLUS, margin=0.05)
    lo0, hi0 = plain.s_bounds()
    lo1, hi1 = wide.s_bounds()
    assert (hi1 - hi0) + (lo0 - lo1) == pytest.approx(0.05, rel=1e-12)
    outside = plain.s_loop + 0.01 * (plain.s_loop - plain.s_center)
    assert not plain.contains(outside)
    assert wide.contains(outside)


def test_appendix_section(appendix_spec):
    sect = section_segment(appendix_spec, Annulus.SIGMA_PLUS)
    assert sect.axis == "y"
    assert sect.energy(sect.s_center) == pytest.approx(-4.0 / 3.0, rel=1e-12)
    assert sect.energy(sect.s_loop) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(OvalRangeError):
        section_segment(appendix_spec, Annulus.SIGMA_MINUS)
