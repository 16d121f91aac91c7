import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from latticeforge.errors import DivergenceError, DomainError
from latticeforge.lattice import (LatticeBasis3, dual, enumerate_arrays,
                                  hcp_config, named_lattice, named_structure)
from latticeforge.potentials import PotentialSpec, value_sq
from latticeforge.sums import (FrozenSum, SumResult, SumTolerance, direct_radius,
                               dual_energy_morse, dual_series_nonzero, energy_morse,
                               energy_pair, epstein_zeta, exp_sum, g_A, g_u_prefactor,
                               lattice_sum, small_alpha_shape, tail_estimate, theta, u_A,
                               upper_gamma)

from conftest import random_basis, random_unimodular, rotation

M61 = PotentialSpec.morse(6, 1)
LJ = PotentialSpec.lennard_jones()
# 4 zeta(2) beta(2) with Catalan's constant beta(2)
ZETA_Z2_4 = 4 * (math.pi**2 / 6) * 0.915965594177219015054603514932
THETA_1D = math.fsum(math.exp(-math.pi * n * n) for n in range(-30, 31))


def cube_sum(basis, fn, n):
    """Brute-force sum of fn(|p|^2) over a coefficient cube, origin excluded."""
    d = basis.shape[0]
    c = np.array([v for v in itertools.product(range(-n, n + 1), repeat=d) if any(v)], dtype=float)
    p = c @ basis
    return math.fsum(fn(np.einsum("ij,ij->i", p, p)))


def unit_lattices():
    return {"triangular": named_lattice("triangular", 1.0), "square": named_lattice("square", 1.0),
            "fcc": named_lattice("fcc", 1.0), "bcc": named_lattice("bcc", 1.0)}


def test_sum_result_serialization():
    r = SumResult(1, 2, 3, 4.0)
    assert isinstance(r.value, float) and isinstance(r.points_used, int)
    assert r.to_json() == {"value": 1.0, "tail_bound": 2.0, "radius": 3.0, "points": 4}
    assert r.csv_row() == "1,2,3,4"


def test_tolerance_validation():
    with pytest.raises(DomainError):
        SumTolerance(rel_tol=0)


def test_morse_square_matches_cube_oracle():
    Z2 = named_lattice("square", 1.0)
    got = energy_morse(Z2, 6, 1, include_origin=False)
    oracle = cube_sum(Z2.basis, lambda q: value_sq(M61, q), 40)
    assert got.value < 0
    assert got.value == pytest.approx(oracle, rel=1e-13)
    assert got.tail_bound <= 1e-12 * abs(got.value)


def test_origin_convention():
    L = named_lattice("triangular", 0.8)
    a = energy_morse(L, 6, 1).value
    b = energy_morse(L, 6, 1, include_origin=False).value
    assert a - b == pytest.approx(math.exp(6) - 2, rel=1e-14)
    assert exp_sum(L, 2.0).value - exp_sum(L, 2.0, include_origin=False).value == \
        pytest.approx(1.0, abs=1e-14)
    with pytest.raises(DomainError):
        lattice_sum(L, LJ, include_origin=True)


@pytest.mark.parametrize("A", [0.2, 0.5, 0.8, 1.0])
def test_triangular_beats_square_small_area(A):
    tri = energy_morse(named_lattice("triangular", A), 6, 1).value
    sq = energy_morse(named_lattice("square", A), 6, 1).value
    assert tri < sq


def test_zeta_square():
    z = epstein_zeta(named_lattice("square", 1.0), 4.0)
    assert z.value == pytest.approx(ZETA_Z2_4, rel=1e-12)
    assert abs(z.value - ZETA_Z2_4) <= z.tail_bound + 1e-13
    assert z.value == pytest.approx(6.02681, abs=1e-5)


def test_zeta_cubic_value():
    # frozen from a Gram-box sum to radius 400 with continuum tail (agrees to ~1e-10)
    z = epstein_zeta(LatticeBasis3(np.eye(3)), 4.0)
    assert z.value == pytest.approx(16.5323159597617, rel=1e-11)


def test_zeta_direct_path_consistent():
    Z2 = named_lattice("square", 1.0)
    d = lattice_sum(Z2, PotentialSpec.inverse_power(4), radius=300.0)
    assert abs(d.value - ZETA_Z2_4) <= d.tail_bound


def test_zeta_properties():
    L = named_lattice("triangular", 1.0)
    z = epstein_zeta(L, 4.0).value
    assert z < epstein_zeta(named_lattice("square", 1.0), 4.0).value
    assert epstein_zeta(L.scaled(1.7), 4.0).value == pytest.approx(1.7**-4 * z, rel=1e-11)
    with pytest.raises(DivergenceError):
        epstein_zeta(L, 2.0)
    with pytest.raises(DivergenceError):
        energy_pair(PotentialSpec.inverse_power(3.0), named_lattice("cubic", 1.0))


def test_gaussian_square():
    r = energy_pair(PotentialSpec.gaussian(1.0), named_lattice("square", 1.0))
    assert r.value == pytest.approx(THETA_1D**2 - 1, rel=1e-13)
    assert r.value == pytest.approx(0.180341, abs=1e-6)
    assert theta(named_lattice("square", 1.0), 1.0).value == pytest.approx(1.1803406, abs=1e-7)


def test_lennard_jones_triangular_brute_force():
    L = named_lattice("triangular", 1.0)
    got = energy_pair(LJ, L)
    R = 300.0
    c, _, q = enumerate_arrays(L.basis, R, sort=False)
    brute = math.fsum(value_sq(LJ, q))
    corr, bound = tail_estimate(LJ, R, 0.7, L.covolume, 2)
    assert abs(got.value - (brute + corr)) <= bound + got.tail_bound
    assert got.tail_bound < 1e-12


@pytest.mark.parametrize("name", ["square", "triangular", "fcc", "bcc"])
def test_lennard_jones_ewald_matches_direct(name):
    L = named_lattice(name, 1.2)
    e = energy_pair(LJ, L)
    d = lattice_sum(L, LJ, radius=60.0)
    assert abs(e.value - d.value) <= d.tail_bound + e.tail_bound


def test_hcp_energy_per_point():
    h = hcp_config(1.0)
    pts = enumerate_arrays(h.base.basis, 8.0)[2]
    r = energy_morse(h, 6, 1, include_origin=False)
    # both offsets see the same neighbourhood, so the per-point energy is the sum from one point
    shift = np.linalg.solve(h.base.basis.T, h.offsets[1])
    q_other = enumerate_arrays(h.base.basis, 8.0, shift, False, sort=False)[2]
    oracle = math.fsum(np.concatenate([value_sq(M61, pts), value_sq(M61, q_other)]))
    assert r.value == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_fcc_theta_below_hcp(alpha):
    fcc = named_structure("fcc", 1.0)
    hcp = named_structure("hcp", 1.0)
    g = PotentialSpec.gaussian(alpha)
    assert lattice_sum(fcc, g).value < lattice_sum(hcp, g).value


@pytest.mark.parametrize("name", ["triangular", "square", "fcc", "bcc"])
@pytest.mark.parametrize("alpha", [0.2, 0.5, 2.0, 5.0])
def test_theta_functional_equation(name, alpha):
    L = unit_lattices()[name]
    a = theta(L, alpha, route="direct").value
    b = theta(L, alpha, route="dual").value
    assert a == pytest.approx(b, rel=1e-12)
    d = L.dim
    assert a == pytest.approx(alpha ** (-d / 2) * theta(dual(L), 1 / alpha, route="direct").value,
                              rel=1e-12)


def test_theta_errors():
    with pytest.raises(DomainError):
        theta(named_lattice("square", 1.0), -1.0)
    with pytest.raises(DomainError):
        theta(hcp_config(), 1.0, route="dual")


def seed_lattices():
    rng = np.random.default_rng(7)
    b = random_basis(rng, 3, spread=0.15).with_covolume(1.0)
    return [named_lattice("cubic", 1.0), named_lattice("fcc", 1.0), named_lattice("bcc", 1.0),
            named_lattice("fcc", 1.4), b]


@pytest.mark.parametrize("L", seed_lattices(), ids=["cubic", "fcc", "bcc", "fcc1.4", "random"])
def test_poisson_agreement(L):
    d = dual_energy_morse(L, 6, 1)
    e = energy_morse(L, 6, 1)
    assert d.value == pytest.approx(e.value, rel=1e-8)


def test_small_alpha_shape():
    L = named_lattice("cubic", 1.0)
    ratios = [dual_series_nonzero(L, a, 1, 6.0) / small_alpha_shape(L, a, 1, 6.0)
              for a in (0.1, 0.01, 0.001)]
    errs = [abs(r - 1) for r in ratios]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_upper_gamma():
    assert upper_gamma(2.5, 1.3) == pytest.approx(special.gammaincc(2.5, 1.3) * special.gamma(2.5))
    assert upper_gamma(0.0, 2.0) == pytest.approx(special.exp1(2.0), rel=1e-14)
    # Gamma(a, x) = (Gamma(a + 1, x) - x^a e^-x) / a
    x, a = 1.7, -0.5
    assert upper_gamma(a, x) == pytest.approx(
        (upper_gamma(a + 1, x) - x**a * math.exp(-x)) / a, rel=1e-12)


def test_tail_bound_monotone_in_radius():
    for spec in (M61, LJ, PotentialSpec.gaussian(0.5)):
        bounds = [tail_estimate(spec, R, 0.8, 1.0, 3)[1] for R in np.linspace(3, 30, 28)]
        assert np.all(np.diff(bounds) <= 0)


def test_g_A_examples():
    y = np.geomspace(1, 1e4, 400)
    assert np.all(g_A(y, 6, 1, 0.3) >= 0)
    np.testing.assert_allclose(g_A(y, 6, 1, 0.3), g_u_prefactor(y, 6, 0.3) * u_A(y, 6, 1, 0.3),
                               rtol=1e-12, atol=1e-300)
    with pytest.raises(DomainError):
        g_A(0.5, 6, 1, 0.3)


def test_u_A_negative_for_small_area():
    # alpha r0 = 6 > 4 pi / 3 with lambda = 1
    vals = [u_A(1.0 / A, 6, 1, A) for A in (1e-2, 1e-3, 1e-4, 1e-5)]
    assert all(v < 0 for v in vals)
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < -1e6


def test_frozen_sum_matches_lattice_sum():
    for spec, L in ((M61, named_lattice("square", 1.2)), (LJ, named_lattice("bcc", 1.1))):
        R = direct_radius(L, spec, exp_only=True) * 1.3
        F = FrozenSum(spec, L, R)
        assert F(L.basis) == pytest.approx(lattice_sum(L, spec).value, rel=1e-11, abs=1e-13)
        # nearby basis
        M = type(L)(L.basis @ (np.eye(L.dim) + 1e-3 * np.ones((L.dim, L.dim))))
        assert F(M.basis) == pytest.approx(lattice_sum(M, spec).value, rel=1e-10, abs=1e-12)


seeds = st.integers(0, 2**32 - 1)
SPECS = [M61, PotentialSpec.morse(3, 1.2), PotentialSpec.gaussian(0.7),
         PotentialSpec.pure_exponential(3.0), LJ]


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(SPECS))
def test_unimodular_and_rotation_invariance(seed, dim, spec):
    rng = np.random.default_rng(seed)
    L = random_basis(rng, dim, spread=0.2)
    M = type(L)(random_unimodular(rng, dim) @ L.basis @ rotation(rng, dim))
    a, b = lattice_sum(L, spec).value, lattice_sum(M, spec).value
    assert a == pytest.approx(b, rel=1e-12, abs=1e-14)


@given(seeds, st.sampled_from([2, 3]), st.floats(1.0, 8.0))
def test_morse_decomposition(seed, dim, alpha):
    L = random_basis(np.random.default_rng(seed), dim, spread=0.2)
    E = energy_morse(L, alpha, 1.0).value
    F2 = exp_sum(L, 2 * alpha).value
    F1 = exp_sum(L, alpha).value
    assert E == pytest.approx(math.exp(alpha) * F2 - 2 * F1, rel=1e-12,
                              abs=1e-12 * math.exp(alpha) * F2)


@given(seeds, st.sampled_from([2, 3]), st.floats(1.0, 8.0), st.floats(0.3, 3.0))
def test_scaling_identity(seed, dim, alpha, r0):
    L = random_basis(np.random.default_rng(seed), dim, spread=0.2)
    a = energy_morse(L, alpha, r0).value
    b = energy_morse(L.scaled(1 / r0), alpha * r0, 1.0).value
    assert a == pytest.approx(b, rel=1e-10)


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(SPECS[:4]))
def test_brute_force_equivalence_small_radius(seed, dim, spec):
    rng = np.random.default_rng(seed)
    L = random_basis(rng, dim, spread=0.2)
    R = 2.5
    r = lattice_sum(L, spec, radius=R)
    n = 8 if dim == 3 else 15
    c = np.array([v for v in itertools.product(range(-n, n + 1), repeat=dim) if any(v)], dtype=float)
    p = c @ L.basis
    q = np.einsum("ij,ij->i", p, p)
    assert r.value == pytest.approx(math.fsum(value_sq(spec, q[q <= R * R])), rel=1e-13, abs=1e-15)


@given(seeds, st.sampled_from([2, 3]), st.sampled_from(SPECS[:4]))
def test_truncation_certificate(seed, dim, spec):
    L = random_basis(np.random.default_rng(seed), dim, spread=0.2)
    r = lattice_sum(L, spec)
    r2 = lattice_sum(L, spec, radius=2 * r.radius)
    assert abs(r2.value - r.value) <= r.tail_bound + 1e-15 * abs(r.value)
    assert r2.tail_bound <= r.tail_bound
