import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticeforge.errors import DomainError
from latticeforge.lattice import (LatticeBasis2, ReducedParams2, basis_from_xy, hcp_config,
                                  named_lattice, norm2_spectrum)
from latticeforge.optimize import (MultiStart, classify_shape, minimize_2d_fixed_area,
                                   minimize_3d_fixed_volume, minimize_dilation, phase_diagram_2d,
                                   quasi_random_starts, reduce_xy, scan_rectangular, scan_rhombic)
from latticeforge.potentials import PotentialSpec
from latticeforge.sums import energy_morse, lattice_sum

M61 = PotentialSpec.morse(6, 1)
M33 = PotentialSpec.morse(3, 3)
SQ3_2 = math.sqrt(3) / 2


def same_shape(L1, L2, radius=2.5):
    a, b = norm2_spectrum(L1, radius), norm2_spectrum(L2, radius)
    return len(a) == len(b) and np.allclose(a, b, rtol=1e-6)


def test_dilation_unimodal_minimum():
    fcc = named_lattice("fcc", 1.0)
    r = minimize_dilation(fcc, 6, 1)
    assert r.converged
    E = lambda lam: energy_morse(fcc.scaled(lam), 6, 1).value
    lam = r.params
    assert r.value == pytest.approx(E(lam), rel=1e-14)
    for d in (1e-3, 1e-2, 0.1):
        assert E(lam - d) > r.value and E(lam + d) > r.value
    grid = np.linspace(0.6, 1.6, 41)
    vals = np.array([E(g) for g in grid])
    k = int(np.argmin(vals))
    assert np.all(np.diff(vals[:k + 1]) < 0) and np.all(np.diff(vals[k:]) > 0)


def test_dilation_scaling():
    fcc = named_lattice("fcc", 1.0)
    a = minimize_dilation(fcc, 2, 3).params
    b = minimize_dilation(fcc, 6, 1).params
    assert a == pytest.approx(3 * b, rel=1e-8)


def test_dilation_b3_f3_gap():
    b = minimize_dilation(named_lattice("bcc", 1.0), 3, 1).value
    f = minimize_dilation(named_lattice("fcc", 1.0), 3, 1).value
    assert abs(b - f) < 5e-4


def test_dilation_hcp_and_lj():
    assert minimize_dilation(hcp_config(), 6, 1).converged
    r = minimize_dilation(named_lattice("fcc", 1.0), potential=PotentialSpec.lennard_jones())
    assert r.converged and r.value < 0
    with pytest.raises(DomainError):
        minimize_dilation(named_lattice("fcc", 1.0))


def test_rhombic_scan_endpoints():
    s = scan_rhombic(M33, 9.28, n=201)
    assert s.argmin == pytest.approx(math.pi / 3, abs=1e-9)
    assert not s.interior
    tri = lattice_sum(named_lattice("triangular", 9.28), M33, True).value
    assert s.values[0] == pytest.approx(tri, rel=1e-14)


def test_rhombic_scan_at_transition():
    s = scan_rhombic(M33, 9.285, n=201)
    assert s.interior
    assert math.degrees(s.argmin) == pytest.approx(72.19, abs=0.3)


def test_rectangular_scan():
    s = scan_rectangular(M61, 1.2, n=201)
    assert s.argmin == 1.0
    sq = lattice_sum(named_lattice("square", 1.2), M61, True).value
    assert s.values[0] == pytest.approx(sq, rel=1e-14)
    with pytest.raises(DomainError):
        scan_rectangular(M61, 1.0, ys=[0.5, 1.0])
    assert s.csv("y").startswith("y,energy\n")


@pytest.mark.parametrize("A", [10.0, 50.0])
def test_rectangular_thinning(A):
    s = scan_rectangular(M61, A, n=401)
    assert s.interior
    assert 0.9 <= s.argmin / A <= 1.1


@pytest.mark.parametrize("A, shape", [(0.3, "triangular"), (0.8, "triangular"),
                                      (1.0, "triangular"), (1.25, "square"), (2.0, "rectangular")])
def test_minimize_2d_morse(A, shape):
    r = minimize_2d_fixed_area(M61, A)
    assert classify_shape(r.params.x, r.params.y)[0] == shape
    assert r.params.in_fundamental_domain()
    assert r.gradient_norm < 1e-7
    if shape == "triangular":
        assert abs(r.params.x - 0.5) < 1e-6 and abs(r.params.y - SQ3_2) < 1e-6
    if shape == "rectangular":
        assert r.params.y > 1
    # no start is better than the returned point
    for x, y in [(0.5, SQ3_2), (0.0, 1.0)] + quasi_random_starts(8):
        e = lattice_sum(LatticeBasis2(basis_from_xy(x, y, A)), M61, True).value
        assert r.value <= e + 1e-12 * abs(e)


def test_global_area_below_r0_squared():
    areas = np.linspace(0.6, 1.4, 9)
    best = [minimize_2d_fixed_area(M61, A, MultiStart(n_random=2)).value for A in areas]
    assert areas[int(np.argmin(best))] <= 1.0


def test_quasi_random_starts():
    pts = quasi_random_starts(16, seed=3)
    assert pts == quasi_random_starts(16, seed=3)
    for x, y in pts:
        assert 0 <= x <= 0.5 and 1 - 1e-12 <= x * x + y * y <= 4 + 1e-12 and y > 0
    assert quasi_random_starts(0) == []


@given(st.floats(-3, 3), st.floats(0.05, 5))
def test_reduce_xy_lands_in_domain(x, y):
    xr, yr = reduce_xy(x, y)
    assert ReducedParams2(xr, yr, 1.0).in_fundamental_domain(1e-9)
    a = norm2_spectrum(LatticeBasis2(basis_from_xy(x, y, 1.0)), 3.0)
    b = norm2_spectrum(LatticeBasis2(basis_from_xy(xr, yr, 1.0)), 3.0)
    assert len(a) == len(b) and np.allclose(a, b, rtol=1e-9)


@pytest.mark.parametrize("x, y, shape", [
    (0.5, SQ3_2, "triangular"), (0.0, 1.0, "square"), (0.0, 1.5, "rectangular"),
    (math.cos(1.3), math.sin(1.3), "rhombic"), (0.2, 1.5, "other"),
])
def test_classify_shape(x, y, shape):
    assert classify_shape(x, y)[0] == shape
    if shape == "rhombic":
        assert classify_shape(x, y)[1] == pytest.approx(1.3)


def test_phase_diagram_stable_under_resolution_and_workers():
    a = phase_diagram_2d(M61, 1.2, 1.35, resolution=4)
    b = phase_diagram_2d(M61, 1.2, 1.35, resolution=8, workers=2)
    assert [(t.frm, t.to) for t in a.transitions] == [("square", "rectangular")]
    assert [(t.frm, t.to) for t in b.transitions] == [("square", "rectangular")]
    assert abs(a.transitions[0].A - b.transitions[0].A) <= 1e-4
    assert a.transitions[0].width <= 1e-4
    c = phase_diagram_2d(M61, 1.2, 1.35, resolution=8)
    assert [p.csv_row() for p in b.points] == [p.csv_row() for p in c.points]


def test_phase_diagram_validation():
    with pytest.raises(DomainError):
        phase_diagram_2d(M61, 1.0, 0.5)
    with pytest.raises(DomainError):
        phase_diagram_2d(M61, 1.0, 1.5, resolution=1)


def test_minimize_3d_morse_fcc():
    V = minimize_dilation(named_lattice("fcc", 1.0), 6, 1).params ** 3
    r = minimize_3d_fixed_volume(M61, V, n_perturb=0)
    assert r.converged and r.info["classification"] == "local_min"
    assert same_shape(r.params.basis(), named_lattice("fcc", V))


def test_minimize_3d_bcc_stays():
    r = minimize_3d_fixed_volume(PotentialSpec.morse(3, 1), 0.9, seeds=["bcc"], n_perturb=0)
    assert r.info["classification"] == "local_min"
    assert same_shape(r.params.basis(), named_lattice("bcc", 0.9))


def test_minimize_3d_gaussian_prefers_fcc():
    r = minimize_3d_fixed_volume(PotentialSpec.gaussian(2.0), 1.0, n_perturb=0)
    assert same_shape(r.params.basis(), named_lattice("fcc", 1.0))
    g = PotentialSpec.gaussian(2.0)
    fcc = lattice_sum(named_lattice("fcc", 1.0), g).value
    assert fcc < lattice_sum(named_lattice("bcc", 1.0), g).value
    assert fcc < lattice_sum(named_lattice("cubic", 1.0), g).value
