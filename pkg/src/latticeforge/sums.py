"""Lattice sums with certified truncation.

Every sum is over the distance multiset of a lattice (or of a periodic
configuration, per point) truncated at a radius R.  The omitted mass is
bounded by comparing each lattice point with its centred unit cell, which
lies inside a ball of radius ``rho = cell_radius``:

    sum_{|p|>R} g(|p|) <= (|B_{R+rho}| - |B_{R-rho}|) g(R) / V
                          + S_d / V * int_R^inf g(u) (u + rho)^{d-1} du

for nonincreasing g.  Exponentially decaying parts are bounded with this
majorant.  Inverse powers |p|^-s are split with the incomplete gamma function
(Ewald) into two Gaussian-decaying series, one over the lattice and one over
its dual, each truncated with the same cell bound.  At an explicit radius the
inverse powers are instead summed directly plus their continuum estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError, DomainError, NonConvergenceError
from .lattice import (Basis, LatticeBasis2, LatticeBasis3, PeriodicConfig, Structure,
                      cell_radius, dual, enumerate_arrays, shortest_vector_length)
from .potentials import PotentialSpec, exponential_majorant, exponential_part, value_sq

KAPPA = 4.0 * math.pi**2


@dataclass(frozen=True)
class SumTolerance:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    # radius growth stops (NonConvergenceError) once the point count would exceed this
    max_points: int = 30_000_000
    start_factor: float = 6.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")

    def target(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_TOL = SumTolerance()


@dataclass(frozen=True)
class SumResult:
    value: float
    tail_bound: float
    radius: float
    points_used: int

    def __post_init__(self):
        for name in ("value", "tail_bound", "radius"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "points_used", int(self.points_used))

    def to_json(self) -> dict:
        return {"value": self.value, "tail_bound": self.tail_bound, "radius": self.radius,
                "points": self.points_used}

    def csv_row(self) -> str:
        return ",".join(f"{v:.17g}" for v in (self.value, self.tail_bound, self.radius)) + \
            f",{self.points_used}"

    CSV_HEADER = "value,tail,radius,points"


# ---------------------------------------------------------------------------
# geometry of a structure


@dataclass(frozen=True)
class _Geometry:
    basis: np.ndarray
    shifts: tuple            # fractional shifts, None for the unshifted pair
    n: int                   # points per cell
    covolume: float
    rho: float
    lam1: float

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


def _geometry(structure: Structure) -> _Geometry:
    if isinstance(structure, PeriodicConfig):
        frac = structure.fractional_offsets()
        shifts = tuple(None if i == j else frac[j] - frac[i]
                       for i in range(len(frac)) for j in range(len(frac)))
        base = structure.base
        return _Geometry(base.basis, shifts, len(frac), base.covolume, cell_radius(base.basis),
                         shortest_vector_length(structure))
    if not isinstance(structure, (LatticeBasis2, LatticeBasis3)):
        raise DomainError(f"not a lattice: {structure!r}")
    return _Geometry(structure.basis, (None,), 1, structure.covolume,
                     cell_radius(structure.basis), shortest_vector_length(structure))


def _ball(d: int, r: float) -> float:
    r = max(r, 0.0)
    return math.pi * r * r if d == 2 else 4.0 * math.pi / 3.0 * r**3


def _sphere(d: int) -> float:
    return 2.0 * math.pi if d == 2 else 4.0 * math.pi


def _power_moment(s: float, a: float, b: float, d: int) -> float:
    """int_a^inf u^{-s} (u + b)^{d-1} du for s > d (b may be negative)."""
    total = 0.0
    for k in range(d):
        total += math.comb(d - 1, k) * b ** (d - 1 - k) * a ** (k + 1 - s) / (s - k - 1)
    return total


def _exp_moment(spec: PotentialSpec, R: float, rho: float, d: int) -> float:
    """int_R^inf M(u) (u + rho)^{d-1} du for the exponential majorant M."""
    if spec.kind in ("morse", "modified_morse", "pure_exponential"):
        if spec.kind == "pure_exponential":
            terms = [(1.0, float(spec.beta))]
        else:
            a = float(spec.alpha)
            terms = [(math.exp(a * (1.0 if spec.kind == "modified_morse" else spec.r0)), 2 * a),
                     (2.0, a)]
        total = 0.0
        for c, a in terms:
            # e^{a rho} Gamma(d, a (R + rho)) / a^d, Gamma(d, x) = (d-1)! e^{-x} sum x^k / k!
            x = a * (R + rho)
            poly = sum(x**k / math.factorial(k) for k in range(d))
            total += c * math.factorial(d - 1) * math.exp(-a * R) * poly / a**d
        return total
    if spec.kind == "gaussian":
        return _gauss_moment(math.pi * float(spec.alpha), R, rho, d)
    return 0.0


def tail_estimate(spec: PotentialSpec, R: float, rho: float, covolume: float, d: int,
                  exp_only: bool = False):
    """(correction, bound) for the terms |p| > R of one lattice (or translate)."""
    S = _sphere(d)
    shell = (_ball(d, R + rho) - _ball(d, R - rho)) / covolume
    corr = 0.0
    bound = 0.0
    if spec.has_exponential_part:
        bound += shell * float(exponential_majorant(spec, R)) + \
            S / covolume * _exp_moment(spec, R, rho, d)
    for c, s in () if exp_only else spec.power_terms:
        if s <= d:
            raise DivergenceError(f"|p|^-{s:g} is not summable in dimension {d}")
        est = S * R ** (d - s) / (covolume * (s - d))
        upper = shell * R ** (-s) + S / covolume * _power_moment(s, R, rho, d)
        lower = S / covolume * _power_moment(s, R + 2 * rho, -rho, d)
        corr += c * est
        bound += abs(c) * max(upper - est, est - lower, 0.0)
    return corr, bound


# ---------------------------------------------------------------------------
# direct summation


def _estimated_points(geo: _Geometry, R: float) -> float:
    return geo.n**2 * _ball(geo.dim, R + geo.rho) / geo.covolume


def _direct(geo: _Geometry, spec: PotentialSpec, R: float, include_origin: bool,
            exp_only: bool = False):
    parts = []
    count = 0
    fn = exponential_part if exp_only else value_sq
    for shift in geo.shifts:
        _, _, q = enumerate_arrays(geo.basis, R, shift, False, sort=False)
        parts.append(np.atleast_1d(fn(spec, q)))
        count += len(q)
    total = math.fsum(np.concatenate(parts)) / geo.n if parts else 0.0
    corr, bound = tail_estimate(spec, R, geo.rho, geo.covolume, geo.dim, exp_only)
    corr *= geo.n
    bound *= geo.n
    if include_origin:
        total += float(value_sq(spec, 0.0))
    return total + corr, bound, count


def lattice_sum(structure: Structure, spec: PotentialSpec, include_origin: bool = False,
                tol: SumTolerance | None = None, radius: float | None = None) -> SumResult:
    """Sum of f(|p|^2) per point with an adaptive, certified truncation radius.

    With an explicit `radius` no adaptation happens and the bound is reported
    as is.
    """
    tol = tol or DEFAULT_TOL
    if include_origin and not spec.finite_at_zero:
        raise DomainError(f"{spec.kind} cannot include the origin term")
    geo = _geometry(structure)
    for _, s in spec.power_terms:
        if s <= geo.dim:
            raise DivergenceError(f"|p|^-{s:g} is not summable in dimension {geo.dim}")
    if radius is not None:
        if not radius > 0:
            raise DomainError("radius must be positive")
        v, b, n = _direct(geo, spec, radius, include_origin)
        return SumResult(v, b, radius, n)
    if not spec.power_terms:
        return _adaptive_direct(geo, spec, include_origin, tol, False)
    # inverse powers via Ewald, each to the absolute tolerance
    k = len(spec.power_terms)
    powers = [(c, *_power_ewald(geo, s, tol.abs_tol / (k * abs(c))))
              for c, s in spec.power_terms]
    pv = sum(c * v for c, v, _, _ in powers)
    if spec.has_exponential_part:
        ex = _adaptive_direct(geo, spec, include_origin, tol, True, offset=pv)
    else:
        ex = SumResult(0.0, 0.0, 0.0, 0)
    value = math.fsum([ex.value] + [c * v for c, v, _, _ in powers])
    bound = ex.tail_bound + sum(abs(c) * b for c, _, b, _ in powers)
    points = ex.points_used + sum(n for _, _, _, n in powers)
    return SumResult(value, bound, ex.radius, points)


def direct_radius(structure: Structure, spec: PotentialSpec, tol: SumTolerance | None = None,
                  value: float | None = None, exp_only: bool = False) -> float:
    """Radius at which the plain truncated sum (with continuum estimate) meets `tol`.

    With `exp_only` only the exponentially decaying part is accounted for.
    """
    tol = tol or DEFAULT_TOL
    geo = _geometry(structure)
    if value is None:
        value = lattice_sum(structure, spec, False, tol).value
    R = tol.start_factor * geo.lam1
    while tail_estimate(spec, R, geo.rho, geo.covolume, geo.dim, exp_only)[1] * geo.n > \
            tol.target(value):
        R *= 1.25
        if _estimated_points(geo, R) > tol.max_points:
            raise NonConvergenceError(f"direct radius exceeds the point cap (R={R:g})")
    return R


def _adaptive_direct(geo: _Geometry, spec: PotentialSpec, include_origin: bool,
                     tol: SumTolerance, exp_only: bool, offset: float = 0.0) -> SumResult:
    R = tol.start_factor * geo.lam1
    v, b, n = _direct(geo, spec, R, include_origin, exp_only)
    while b > tol.target(v + offset):
        # grow the radius using only the (value-independent) bound, then re-sum
        while True:
            R *= 2.0
            if _estimated_points(geo, R) > tol.max_points:
                raise NonConvergenceError(
                    f"tail bound {b:.3g} above target {tol.target(v + offset):.3g} at the "
                    f"radius cap (R={R / 2:g})")
            _, b_next = tail_estimate(spec, R, geo.rho, geo.covolume, geo.dim, exp_only)
            if b_next * geo.n <= tol.target(v + offset):
                break
        v, b, n = _direct(geo, spec, R, include_origin, exp_only)
    return SumResult(v, b, R, n)


# ---------------------------------------------------------------------------
# Ewald splitting of inverse powers


def upper_gamma(a: float, x):
    """Gamma(a, x) for real a and x > 0 (a <= 0 allowed)."""
    x = np.asarray(x, dtype=float)
    if a > 0:
        return special.gammaincc(a, x) * special.gamma(a)
    if float(a).is_integer():
        return x**a * special.expn(int(1 - a), x)
    k = math.ceil(-a) + 1  # step down from a + k > 0
    g = special.gammaincc(a + k, x) * special.gamma(a + k)
    for j in range(k - 1, -1, -1):
        b = a + j
        g = (g - x**b * np.exp(-x)) / b
    return g


def _gauss_moment(k: float, R: float, rho: float, d: int) -> float:
    """int_R^inf exp(-k u^2) (u + rho)^{d-1} du."""
    e = math.exp(-k * R * R)
    erfc = special.erfc(math.sqrt(k) * R)
    m0 = math.sqrt(math.pi / k) / 2.0 * erfc
    m1 = e / (2.0 * k)
    if d == 2:
        return m1 + rho * m0
    m2 = R * e / (2.0 * k) + math.sqrt(math.pi) / (4.0 * k**1.5) * erfc
    return m2 + 2.0 * rho * m1 + rho * rho * m0


def _ewald_tail(a: float, k: float, R: float, rho: float, covolume: float, d: int) -> float:
    """Cell bound for sum_{|p| > R} y^{-a} Gamma(a, y), y = k |p|^2.

    Uses y^{-a} Gamma(a, y) <= e^{-y} / (y - max(a - 1, 0)) for y > max(a - 1, 0).
    """
    y = k * R * R
    c = max(a - 1.0, 0.0)
    if y <= c + 1.0:
        return math.inf
    shell = (_ball(d, R + rho) - _ball(d, R - rho)) / covolume
    return (shell * math.exp(-y) + _sphere(d) / covolume * _gauss_moment(k, R, rho, d)) / (y - c)


def _ewald_radii(geo: _Geometry, s: float, target: float) -> tuple[float, float, float]:
    """Direct and dual radii (R, Rq) with the truncation bound per point below `target`."""
    d = geo.dim
    V = geo.covolume
    t = V ** (-2.0 / d)
    a_dir, a_dual = 0.5 * s, 0.5 * (d - s)
    pref = math.pi ** (0.5 * s) / special.gamma(0.5 * s)
    rho_d = cell_radius(np.linalg.inv(geo.basis).T)
    X = 30.0
    while True:
        R = math.sqrt(X / (math.pi * t))
        Rq = math.sqrt(X * t / math.pi)
        bound = pref * geo.n * (t ** a_dir * _ewald_tail(a_dir, math.pi * t, R, geo.rho, V, d) +
                                t ** (-a_dual) / V *
                                _ewald_tail(a_dual, math.pi / t, Rq, rho_d, 1.0 / V, d))
        if bound <= target or X >= 400:
            return R, Rq, bound
        X += 10.0


def _ewald_sets(geo: _Geometry, R: float, Rq: float):
    """Coefficient sets: [(shift, coefficients + shift)] for the lattice, integers for the dual."""
    direct = []
    for shift in geo.shifts:
        c, _, _ = enumerate_arrays(geo.basis, R, shift, False, sort=False)
        direct.append((shift, c + (0.0 if shift is None else np.asarray(shift))))
    kq, _, _ = enumerate_arrays(np.linalg.inv(geo.basis).T, Rq, None, False, sort=False)
    return direct, kq.astype(float)


def _ewald_value(basis: np.ndarray, s: float, direct, kq: np.ndarray, n: int) -> float:
    """Per-point sum_{p != 0} |p|^-s over fixed coefficient sets.

    |p|^-s = pi^{s/2}/Gamma(s/2) [ int_t^inf + int_0^t ] x^{s/2-1} e^{-pi |p|^2 x} dx,
    the second piece moved to the dual lattice by Poisson summation.
    """
    d = basis.shape[0]
    V = abs(float(np.linalg.det(basis)))
    t = V ** (-2.0 / d)
    a_dir, a_dual = 0.5 * s, 0.5 * (d - s)
    pq = kq @ np.linalg.inv(basis).T
    q2 = np.einsum("ij,ij->i", pq, pq)
    dual_terms = (math.pi * q2) ** (-a_dual) * upper_gamma(a_dual, math.pi * q2 / t) / V
    parts = []
    for shift, coeffs in direct:
        p = coeffs @ basis
        y = math.pi * np.einsum("ij,ij->i", p, p)
        parts.append(y ** (-a_dir) * upper_gamma(a_dir, y * t))
        if shift is None:
            parts.append(dual_terms)
            parts.append(np.array([-(t ** a_dir) / a_dir]))
        else:
            parts.append(dual_terms * np.cos(2 * math.pi * (kq @ np.asarray(shift))))
        parts.append(np.array([t ** (-a_dual) / (-a_dual) / V]))
    return math.pi ** (0.5 * s) / special.gamma(0.5 * s) * math.fsum(np.concatenate(parts)) / n


def _power_ewald(geo: _Geometry, s: float, target: float):
    """(sum_{p != 0} |p|^-s per point, bound, points) for a lattice or configuration."""
    R, Rq, bound = _ewald_radii(geo, s, target)
    direct, kq = _ewald_sets(geo, R, Rq)
    value = _ewald_value(geo.basis, s, direct, kq, geo.n)
    return value, bound, len(kq) + sum(len(c) for _, c in direct)


# ---------------------------------------------------------------------------
# named sums


def energy_morse(lattice: Structure, alpha: float, r0: float, include_origin: bool = True,
                 tol: SumTolerance | None = None) -> SumResult:
    """E_{alpha,r0}[L] = sum_p f(|p|^2), origin term f(0) = e^{alpha r0} - 2 by default.

    For a periodic configuration the value is the energy per point; the
    self term f(0) is added under the same flag.
    """
    return lattice_sum(lattice, PotentialSpec.morse(alpha, r0), include_origin, tol)


def energy_pair(potential: PotentialSpec, lattice: Structure,
                tol: SumTolerance | None = None, include_origin: bool = False) -> SumResult:
    """E_f[L] = sum over p != 0 of f(|p|^2)."""
    return lattice_sum(lattice, potential, include_origin, tol)


def _prefer_dual(lattice: Basis, alpha: float) -> bool:
    l1 = shortest_vector_length(lattice)
    l1d = shortest_vector_length(dual(lattice))
    return alpha * l1 * l1 < l1d * l1d / alpha


def theta(lattice: Structure, alpha: float, route: str = "auto",
          tol: SumTolerance | None = None) -> SumResult:
    """theta_L(alpha) = sum_p exp(-pi alpha |p|^2), origin included.

    ``route="dual"`` uses theta_L(a) = a^{-d/2} theta_{L*}(1/a) / |L|; "auto"
    picks whichever side decays faster.
    """
    if not alpha > 0:
        raise DomainError("theta needs alpha > 0")
    if route not in ("auto", "direct", "dual"):
        raise DomainError(f"unknown theta route {route!r}")
    if isinstance(lattice, PeriodicConfig):
        if route == "dual":
            raise DomainError("the dual route is available for Bravais lattices only")
        route = "direct"
    if route == "auto":
        route = "dual" if _prefer_dual(lattice, alpha) else "direct"
    if route == "direct":
        return lattice_sum(lattice, PotentialSpec.gaussian(alpha), True, tol)
    tol = tol or DEFAULT_TOL
    d = lattice.dim
    factor = alpha ** (-d / 2.0) / lattice.covolume
    inner_tol = SumTolerance(tol.rel_tol, tol.abs_tol / factor, tol.max_points, tol.start_factor)
    r = lattice_sum(dual(lattice), PotentialSpec.gaussian(1.0 / alpha), True, inner_tol)
    return SumResult(factor * r.value, factor * r.tail_bound, r.radius, r.points_used)


def epstein_zeta(lattice: Structure, s: float, tol: SumTolerance | None = None) -> SumResult:
    """zeta_L(s) = sum_{p != 0} |p|^{-s}, s > d.

    The default tolerance is relative 1e-9: power-law tails need R ~ tol^{-1/(s-d)}.
    """
    d = lattice.dim
    if not s > d:
        raise DivergenceError(f"Epstein zeta diverges for s <= d (s={s}, d={d})")
    return lattice_sum(lattice, PotentialSpec.inverse_power(s), False,
                       tol or SumTolerance(rel_tol=1e-9, abs_tol=1e-14))


def exp_sum(lattice: Structure, alpha: float, include_origin: bool = True,
            tol: SumTolerance | None = None) -> SumResult:
    """F_alpha[L] = sum_p exp(-alpha |p|)."""
    return lattice_sum(lattice, PotentialSpec.pure_exponential(alpha), include_origin, tol)


# ---------------------------------------------------------------------------
# dual (Poisson) representation of the Morse energy


def dual_morse_summand(q2, alpha: float, r0: float):
    """h(|q|^2) such that E = (16 pi alpha / |L|) sum_{q in L*} h(|q|^2)."""
    q2 = np.asarray(q2, dtype=float)
    a2 = alpha * alpha
    return math.exp(alpha * r0) / (4 * a2 + KAPPA * q2) ** 2 - 1.0 / (a2 + KAPPA * q2) ** 2


def dual_energy_morse(lattice: LatticeBasis3, alpha: float, r0: float,
                      window: float | None = None) -> SumResult:
    """E_{alpha,r0}[L] (origin included) from the dual-lattice series.

    The series converges like |q|^-4, so it is split with a smooth erfc window
    w: the windowed part is summed over L* and the complement h(1 - w) is
    replaced by its integral, the Poisson error of which decays like
    exp(-(pi sigma lambda_1(L))^2).  `tail_bound` covers the window cutoff and
    quadrature error.
    """
    if not isinstance(lattice, LatticeBasis3):
        raise DomainError("dual_energy_morse is implemented for 3D Bravais lattices")
    if not (alpha > 0 and r0 > 0):
        raise DomainError("alpha and r0 must be positive")
    V = lattice.covolume
    sigma = window if window is not None else 2.0 / shortest_vector_length(lattice)
    Rw = 5.0 * sigma
    cut = Rw + 7.0 * sigma
    _, _, q2 = enumerate_arrays(dual(lattice).basis, cut, include_origin=True, sort=False)
    t = np.sqrt(q2)
    w = 0.5 * special.erfc((t - Rw) / sigma)
    inner = math.fsum(dual_morse_summand(q2, alpha, r0) * w)

    def radial(u):
        return float(dual_morse_summand(u * u, alpha, r0)) * 0.5 * special.erfc((Rw - u) / sigma) * u * u

    I1, e1 = integrate.quad(radial, 0.0, cut, limit=400, epsabs=0.0, epsrel=1e-13)
    I2, e2 = integrate.quad(radial, cut, np.inf, limit=400, epsabs=0.0, epsrel=1e-13)
    outer = 4.0 * math.pi * V * (I1 + I2)
    pref = 16.0 * math.pi * alpha / V
    # beyond the cutoff |h| <= (e^{a r0} + 1) / (kappa |q|^2)^2 and w <= erfc(7) / 2
    est, b4 = tail_estimate(PotentialSpec.inverse_power(4.0), cut,
                            cell_radius(dual(lattice).basis), 1.0 / V, 3)
    omitted = 0.5 * special.erfc(7.0) * (math.exp(alpha * r0) + 1.0) / KAPPA**2 * (est + b4)
    bound = pref * (omitted + 4.0 * math.pi * V * (e1 + e2))
    return SumResult(pref * (inner + outer), bound, cut, len(q2))


def dual_series_nonzero(lattice: LatticeBasis3, alpha: float, r0: float, radius: float) -> float:
    """Plain truncated sum of h(|q|^2) over 0 < |q| <= radius (no window)."""
    _, _, q2 = enumerate_arrays(dual(lattice).basis, radius, sort=False)
    return math.fsum(dual_morse_summand(q2, alpha, r0))


def small_alpha_shape(lattice: LatticeBasis3, alpha: float, r0: float, radius: float) -> float:
    """Leading small-alpha form alpha r0 sum_{0<|q|<=R} 1/(kappa |q|^2)^2 of the same series."""
    _, _, q2 = enumerate_arrays(dual(lattice).basis, radius, sort=False)
    return alpha * r0 * math.fsum(1.0 / (KAPPA * q2) ** 2)


# ---------------------------------------------------------------------------
# integrand functions g_A, u_A


def _mu(y, alpha, r0):
    return alpha * y**-1.5 / math.sqrt(math.pi) * (
        np.exp(alpha * r0 - alpha**2 / y) - np.exp(-alpha**2 / (4.0 * y)))


def g_A(y, alpha: float, r0: float, A: float):
    """g_A(y) = y^{-1} mu_f(pi / (y A)) + mu_f(pi y / A)."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 1) or not A > 0:
        raise DomainError("g_A needs y >= 1 and A > 0")
    out = _mu(math.pi / (y * A), alpha, r0) / y + _mu(math.pi * y / A, alpha, r0)
    return out if out.ndim else float(out)


def u_A(y, alpha: float, r0: float, A: float):
    """u_A with g_A(y) = alpha A^{3/2} / (pi^2 y^{3/2}) * u_A(y)."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or not A > 0:
        raise DomainError("u_A needs y > 0 and A > 0")
    c = alpha * r0
    k = alpha**2 * A / math.pi
    out = (y * y * (np.exp(c - k * y) - np.exp(-k * y / 4.0))
           + np.exp(c - k / y) - np.exp(-k / (4.0 * y)))
    return out if out.ndim else float(out)


def g_u_prefactor(y, alpha: float, A: float):
    return alpha * A**1.5 / (math.pi**2 * np.asarray(y, dtype=float) ** 1.5)


# ---------------------------------------------------------------------------
# frozen-support evaluation for finite differences and scans


class FrozenSum:
    """Per-point energy of lattices near a reference, on a fixed coefficient set.

    Coefficients are enumerated once around the reference basis; evaluating a
    nearby basis reuses them, so the result is a smooth function of the basis
    (no points enter or leave).  Inverse powers use frozen Ewald sets on the
    lattice and its dual.
    """

    def __init__(self, spec: PotentialSpec, reference: Structure, radius: float,
                 include_origin: bool = False):
        geo = _geometry(reference)
        if include_origin and not spec.finite_at_zero:
            raise DomainError(f"{spec.kind} cannot include the origin term")
        self.spec = spec
        self.radius = float(radius)
        self.n = geo.n
        self.dim = geo.dim
        self.basis0 = np.array(geo.basis)
        self.include_origin = include_origin
        coeffs = []
        if spec.has_exponential_part:
            for shift in geo.shifts:
                c, _, _ = enumerate_arrays(geo.basis, radius, shift, False, sort=False)
                coeffs.append(c + (0.0 if shift is None else shift))
        self.coeffs = (np.concatenate(coeffs).astype(float) if coeffs
                       else np.zeros((0, geo.dim)))
        self.origin = float(value_sq(spec, 0.0)) if include_origin else 0.0
        self._ewald = None
        if spec.power_terms:
            # X = 45 leaves ~e^-45 per term; the 1.2 margin covers nearby bases
            t = geo.covolume ** (-2.0 / geo.dim)
            R = 1.2 * math.sqrt(45.0 / (math.pi * t))
            Rq = 1.2 * math.sqrt(45.0 * t / math.pi)
            self._ewald = _ewald_sets(geo, R, Rq)

    @property
    def points(self) -> int:
        extra = 0
        if self._ewald is not None:
            extra = len(self._ewald[1]) + sum(len(c) for _, c in self._ewald[0])
        return len(self.coeffs) + extra

    def norm2(self, basis) -> np.ndarray:
        p = self.coeffs @ np.asarray(basis, dtype=float)
        return np.einsum("ij,ij->i", p, p)

    def __call__(self, basis) -> float:
        basis = np.asarray(basis, dtype=float)
        total = self.origin
        if len(self.coeffs):
            vals = exponential_part(self.spec, self.norm2(basis))
            total += math.fsum(np.atleast_1d(vals)) / self.n
        if self._ewald is not None:
            direct, kq = self._ewald
            total += math.fsum(c * _ewald_value(basis, s, direct, kq, self.n)
                               for c, s in self.spec.power_terms)
        return total


def frozen_radius(spec: PotentialSpec, reference: Structure, tol: SumTolerance | None = None,
                  slack: float = 1.25) -> float:
    """Radius meeting `tol` at the reference, enlarged by `slack` for nearby lattices."""
    return direct_radius(reference, spec, tol, exp_only=True) * slack


def distance_multiset(structure: Structure, radius: float):
    """Squared distances seen from a point (all pairs for configurations) and weight 1/N."""
    geo = _geometry(structure)
    parts = [enumerate_arrays(geo.basis, radius, shift, False, sort=False)[2]
             for shift in geo.shifts]
    return np.concatenate(parts), 1.0 / geo.n


def structure_geometry(structure: Structure) -> dict:
    geo = _geometry(structure)
    return {"dim": geo.dim, "n": geo.n, "covolume": geo.covolume, "rho": geo.rho,
            "lambda1": geo.lam1}
