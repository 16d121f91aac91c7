"""Fixed-density derivatives, critical-point classification and eutaxy.

Charts
------
2D, fixed area A: coordinates (x, y) with basis sqrt(A/y) {(1, 0), (x, y)}.
3D, fixed volume V: Gram coordinates (g11, g22, g12, g13, g23); g33 is the
unique value with det G = V^2 (det G is affine in g33).

Derivatives are central differences on a frozen coefficient set
(`sums.FrozenSum`), Richardson-extrapolated over steps h and h/2.  The origin
term is left out because it does not depend on the shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError
from .lattice import (LatticeBasis2, LatticeBasis3, ReducedParams2, basis_from_xy, cell_radius,
                      enumerate_arrays, named_lattice, shortest_vector_length)
from .potentials import PotentialSpec, value_sq
from .sums import FrozenSum, SumTolerance, direct_radius, _ball, _sphere

CLASSES = ("local_min", "local_max", "saddle", "degenerate")


@dataclass(frozen=True)
class GramParams3:
    """Fixed-volume Gram coordinates of a 3D lattice."""

    g11: float
    g22: float
    g12: float
    g13: float
    g23: float
    V: float

    def __post_init__(self):
        if not self.V > 0:
            raise DomainError("volume must be positive")

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.g11, self.g22, self.g12, self.g13, self.g23], dtype=float)

    @classmethod
    def from_coords(cls, v, V: float) -> "GramParams3":
        return cls(*map(float, v), V)

    @classmethod
    def from_basis(cls, basis) -> "GramParams3":
        b = np.asarray(basis.basis if hasattr(basis, "basis") else basis, dtype=float)
        g = b @ b.T
        return cls(g[0, 0], g[1, 1], g[0, 1], g[0, 2], g[1, 2], abs(float(np.linalg.det(b))))

    @property
    def g33(self) -> float:
        return gram_g33(self.coords, self.V)

    def gram(self) -> np.ndarray:
        return gram_matrix(self.coords, self.V)

    def basis(self) -> LatticeBasis3:
        return LatticeBasis3(gram_to_basis(self.gram()))


def gram_g33(v, V: float) -> float:
    g11, g22, g12, g13, g23 = v
    c = g11 * g22 - g12 * g12
    if not c > 0:
        raise DomainError("leading 2x2 Gram minor must be positive")
    # det G = g33 c + (2 g12 g13 g23 - g11 g23^2 - g22 g13^2)
    rest = 2 * g12 * g13 * g23 - g11 * g23 * g23 - g22 * g13 * g13
    return (V * V - rest) / c


def gram_matrix(v, V: float) -> np.ndarray:
    g11, g22, g12, g13, g23 = v
    g33 = gram_g33(v, V)
    return np.array([[g11, g12, g13], [g12, g22, g23], [g13, g23, g33]])


def gram_to_basis(G: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise DomainError("Gram matrix is not positive definite") from None
    return L


# ---------------------------------------------------------------------------
# charts


class Chart:
    """Coordinates of lattices at fixed area/volume around a centre point."""

    def __init__(self, params):
        if isinstance(params, ReducedParams2):
            self.dim = 2
            self.center = np.array([params.x, params.y], dtype=float)
            self.size = params.A
            self.scale = 1.0
        elif isinstance(params, GramParams3):
            self.dim = 3
            self.center = params.coords
            self.size = params.V
            self.scale = params.V ** (2.0 / 3.0)
        else:
            raise DomainError(f"unsupported parameters {params!r}")

    @property
    def k(self) -> int:
        return len(self.center)

    def basis(self, v) -> np.ndarray:
        if self.dim == 2:
            x, y = v
            if not y > 0:
                raise DomainError("finite-difference stencil left the domain (y <= 0)")
            return basis_from_xy(x, y, self.size)
        G = gram_matrix(v, self.size)
        return gram_to_basis(G)

    def lattice(self, v=None):
        b = self.basis(self.center if v is None else v)
        return LatticeBasis2(b) if self.dim == 2 else LatticeBasis3(b)


def params_of(lattice) -> Union[ReducedParams2, GramParams3]:
    """Chart coordinates of a basis (2D: raw (x, y) of its first two vectors)."""
    if isinstance(lattice, (ReducedParams2, GramParams3)):
        return lattice
    if isinstance(lattice, LatticeBasis3):
        return GramParams3.from_basis(lattice)
    if isinstance(lattice, LatticeBasis2):
        a1, a2 = lattice.a1, lattice.a2
        uu = float(a1 @ a1)
        x = float(a1 @ a2) / uu
        y = lattice.area / uu
        return ReducedParams2(x, y, lattice.area)
    raise DomainError(f"cannot build chart parameters from {lattice!r}")


def default_step(chart: Chart) -> float:
    return 1e-3 * chart.scale


def energy_function(potential: PotentialSpec, params, tol: SumTolerance | None = None,
                    slack: float = 1.3, radius: float | None = None) -> tuple[Callable, Chart]:
    """E_f as a smooth function of chart coordinates near `params`."""
    chart = Chart(params_of(params))
    ref = chart.lattice()
    if radius is None:
        radius = direct_radius(ref, potential, tol, exp_only=True) * slack
    F = FrozenSum(potential, ref, radius, include_origin=False)
    return (lambda v: F(chart.basis(v))), chart


def _check_stencil(chart: Chart, h: float):
    for i in range(chart.k):
        for s in (-2.0, 2.0):
            v = chart.center.copy()
            v[i] += s * h
            chart.basis(v)


def _grad(E, c, h):
    g = np.empty(len(c))
    for i in range(len(c)):
        e = np.zeros(len(c))
        e[i] = h
        g[i] = (E(c + e) - E(c - e)) / (2 * h)
    return g


def _hess(E, c, h, e0=None):
    k = len(c)
    H = np.empty((k, k))
    e0 = E(c) if e0 is None else e0
    I = np.eye(k) * h
    for i in range(k):
        H[i, i] = (E(c + I[i]) - 2 * e0 + E(c - I[i])) / (h * h)
        for j in range(i):
            H[i, j] = H[j, i] = (E(c + I[i] + I[j]) - E(c + I[i] - I[j])
                                 - E(c - I[i] + I[j]) + E(c - I[i] - I[j])) / (4 * h * h)
    return H


def gradient_fixed_density(potential: PotentialSpec, params, step: float | None = None,
                           tol: SumTolerance | None = None) -> np.ndarray:
    """Chart gradient at fixed density (central differences + Richardson)."""
    E, chart = energy_function(potential, params, tol)
    h = step or default_step(chart)
    _check_stencil(chart, h)
    c = chart.center
    g1, g2 = _grad(E, c, h), _grad(E, c, h / 2)
    return (4 * g2 - g1) / 3


def classify(eigenvalues: Sequence[float], rel: float = 1e-7, floor: float = 1e-10) -> str:
    ev = np.asarray(eigenvalues, dtype=float)
    tol = max(rel * float(np.max(np.abs(ev))), floor)
    if np.any(np.abs(ev) <= tol):
        return "degenerate"
    if np.all(ev > tol):
        return "local_min"
    if np.all(ev < -tol):
        return "local_max"
    return "saddle"


@dataclass
class HessianReport:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    gradient_norm: float
    gradient: np.ndarray = field(default_factory=lambda: np.zeros(0))
    relative_gradient: float = 0.0
    energy: float = 0.0

    def to_json(self) -> dict:
        return {"matrix": self.matrix.tolist(), "eigenvalues": self.eigenvalues.tolist(),
                "classification": self.classification, "gradient_norm": self.gradient_norm,
                "relative_gradient": self.relative_gradient}


def _abs_scale(potential: PotentialSpec, lattice, radius: float) -> float:
    _, _, q = enumerate_arrays(lattice.basis, radius, sort=False)
    return math.fsum(np.abs(np.atleast_1d(value_sq(potential, q)))) or 1.0


def hessian_fixed_density(potential: PotentialSpec, params, step: float | None = None,
                          tol: SumTolerance | None = None, eig_rel: float = 1e-7,
                          eig_floor: float = 1e-10, radius: float | None = None) -> HessianReport:
    """Fixed-density Hessian with gradient and classification.

    `relative_gradient` is |grad| * chart scale / sum_p |f(|p|^2)|, a
    dimensionless stationarity measure that works at any density.
    """
    E, chart = energy_function(potential, params, tol, radius=radius)
    h = step or default_step(chart)
    _check_stencil(chart, h)
    c = chart.center
    e0 = E(c)
    H = (4 * _hess(E, c, h / 2, e0) - _hess(E, c, h, e0)) / 3
    H = 0.5 * (H + H.T)
    g = (4 * _grad(E, c, h / 2) - _grad(E, c, h)) / 3
    ev = np.linalg.eigvalsh(H)
    lat = chart.lattice()
    scale = _abs_scale(potential, lat, 3.0 * shortest_vector_length(lat) + 1e-12) \
        if potential.has_exponential_part or potential.power_terms else 1.0
    gn = float(np.linalg.norm(g))
    return HessianReport(H, ev, classify(ev, eig_rel, eig_floor), gn, g,
                         gn * chart.scale / scale, e0)


# ---------------------------------------------------------------------------
# triangular lattice Hessian factor


@dataclass(frozen=True)
class FactorResult:
    value: float
    tail_bound: float
    radius: float
    points_used: int


def triangular_hessian_factor(alpha: float, r0: float, A: float, rel_tol: float = 1e-13) -> FactorResult:
    """T_{alpha,r0}(A) with D^2 E[Lambda_A] = T I_2, from the explicit (m, n) double sum.

    With Q = m^2 + mn + n^2, l = sqrt(2A/sqrt3), e = exp(-alpha l sqrt Q), C = e^{alpha r0}:
        T = (A alpha^2 / sqrt3) sum n^4 e / Q (2 C e - 1)
            + (sqrt(A) alpha / (sqrt2 3^{1/4})) sum n^2 e / sqrt(Q) (4 - n^2/Q) (1 - C e).
    """
    if not (A > 0 and alpha > 0 and r0 > 0):
        raise DomainError("triangular_hessian_factor needs alpha, r0, A > 0")
    ell = math.sqrt(2 * A / math.sqrt(3))
    C = math.exp(alpha * r0)
    c1 = A * alpha**2 / math.sqrt(3)
    c2 = math.sqrt(A) * alpha / (math.sqrt(2) * 3**0.25)
    unit = np.array([[1.0, 0.0], [0.5, math.sqrt(3) / 2]])  # Q(m, n) = |m u + n v|^2
    rho = cell_radius(unit * ell)
    cov = ell * ell * math.sqrt(3) / 2

    def majorant(r):
        # |term| with Q = (r / l)^2, using n^4/Q <= Q and n^2/sqrt(Q) |4 - n^2/Q| <= 4 sqrt(Q)
        e = math.exp(-alpha * r)
        t = r / ell
        return c1 * t * t * e * (2 * C * e + 1) + 4 * c2 * t * e * (1 + C * e)

    # majorant is decreasing beyond r* where alpha r > 2 (both pieces)
    R = max(6.0 * ell, 4.0 / alpha, (alpha * r0 + 10) / alpha)
    while True:
        c, _, q = enumerate_arrays(unit * ell, R, sort=False)
        Q = q / (ell * ell)
        n = c[:, 1].astype(float)
        e = np.exp(-alpha * np.sqrt(q))
        terms = np.concatenate([c1 * n**4 * e / Q * (2 * C * e - 1),
                                c2 * n**2 * e / np.sqrt(Q) * (4 - n * n / Q) * (1 - C * e)])
        value = math.fsum(terms)
        shell = (_ball(2, R + rho) - _ball(2, R - rho)) / cov
        integral, err = integrate.quad(lambda u: majorant(u) * (u + rho), R, np.inf,
                                       epsabs=0.0, epsrel=1e-10, limit=200)
        bound = shell * majorant(R) + _sphere(2) / cov * (integral + err)
        if bound <= max(1e-300, rel_tol * abs(value)) or R > 400 * ell:
            return FactorResult(value, bound, R, len(q))
        R *= 1.5


def triangular_threshold(alpha: float, r0: float, lo: float, hi: float,
                         xtol: float = 1e-10) -> float:
    """Area where T_{alpha,r0}(A) changes sign on [lo, hi] (Brent on the explicit sum)."""
    def T(A):
        return triangular_hessian_factor(alpha, r0, A).value

    if T(lo) * T(hi) > 0:
        raise DomainError(f"T does not change sign on [{lo}, {hi}]")
    return float(optimize.brentq(T, lo, hi, xtol=xtol))


def triangular_hessian_factor_derivative_form(alpha: float, r0: float, A: float,
                                              radius: float | None = None) -> float:
    """Same factor from (4A/sqrt3) sum n^2 f'(Q') + (4A^2/3) sum n^4 f''(Q')."""
    from .potentials import derivatives_sq

    lat = named_lattice("triangular", A)
    spec = PotentialSpec.morse(alpha, r0)
    R = radius or direct_radius(lat, spec) * 1.5
    c, _, q = enumerate_arrays(lat.basis, R, sort=False)
    n = c[:, 1].astype(float)
    d1, d2 = derivatives_sq(spec, q)
    return math.fsum(np.concatenate([4 * A / math.sqrt(3) * n**2 * d1,
                                     4 * A * A / 3 * n**4 * d2]))


# ---------------------------------------------------------------------------
# volume stationarity and eutaxy


@dataclass(frozen=True)
class ScanRow:
    density: float
    gradient_norm: float
    eig_min: float
    eig_max: float
    classification: str
    stationary: bool

    CSV_HEADER = "density,gradient_norm,eig_min,eig_max,classification"

    def csv_row(self) -> str:
        return (f"{self.density:.17g},{self.gradient_norm:.17g},{self.eig_min:.17g},"
                f"{self.eig_max:.17g},{self.classification}")


def shape_params(shape, size: float):
    """Chart parameters of `shape` (name, ReducedParams2, GramParams3 or basis) at `size`."""
    if isinstance(shape, str):
        return params_of(named_lattice(shape, size))
    if isinstance(shape, ReducedParams2):
        return ReducedParams2(shape.x, shape.y, size)
    if isinstance(shape, GramParams3):
        return GramParams3.from_basis(shape.basis().with_covolume(size))
    if isinstance(shape, (LatticeBasis2, LatticeBasis3)):
        return params_of(shape.with_covolume(size))
    raise DomainError(f"unsupported shape {shape!r}")


def volume_stationarity_scan(potential: PotentialSpec, shape, sizes: Sequence[float],
                             grad_tol: float = 1e-8, tol: SumTolerance | None = None) -> list[ScanRow]:
    """Stationarity (relative gradient < grad_tol) of one shape at every area/volume."""
    rows = []
    for s in sizes:
        rep = hessian_fixed_density(potential, shape_params(shape, float(s)), tol=tol)
        rows.append(ScanRow(float(s), rep.relative_gradient, float(rep.eigenvalues[0]),
                            float(rep.eigenvalues[-1]), rep.classification,
                            rep.relative_gradient < grad_tol))
    return rows


@dataclass(frozen=True)
class Threshold:
    size: float
    lower: float
    upper: float
    below: str
    above: str

    def to_json(self) -> dict:
        return {"size": self.size, "lower": self.lower, "upper": self.upper,
                "below": self.below, "above": self.above}


def _negative_count(potential, shape, size, tol) -> tuple[int, str]:
    rep = hessian_fixed_density(potential, shape_params(shape, size), tol=tol)
    return int(np.sum(rep.eigenvalues < 0)), rep.classification


def classification_thresholds(potential: PotentialSpec, shape, lo: float, hi: float,
                              n: int = 9, width: float = 1e-3,
                              tol: SumTolerance | None = None) -> list[Threshold]:
    """Areas/volumes in [lo, hi] where the number of negative Hessian eigenvalues changes.

    A uniform grid of `n` sizes is scanned and each change is bisected to `width`.
    Classification labels are those of the grid neighbours.
    """
    if not (0 < lo < hi) or n < 2:
        raise DomainError("need 0 < lo < hi and n >= 2")
    grid = np.linspace(lo, hi, n)
    info = [_negative_count(potential, shape, float(s), tol) for s in grid]
    out = []
    for (a, b), (ia, ib) in zip(zip(grid[:-1], grid[1:]), zip(info[:-1], info[1:])):
        if ia[0] == ib[0]:
            continue
        a, b = float(a), float(b)
        while b - a > width:
            m = 0.5 * (a + b)
            if _negative_count(potential, shape, m, tol)[0] == ia[0]:
                a = m
            else:
                b = m
        out.append(Threshold(0.5 * (a + b), a, b, ia[1], ib[1]))
    return out


@dataclass(frozen=True)
class LayerReport:
    norm2: float
    size: int
    deviation: float
    passes: bool


def eutaxy_check(lattice, max_radius: float, threshold: float = 1e-10) -> list[LayerReport]:
    """Strong eutaxy of each shell: D(M) = max |sum p p^T/|p|^2 - (|M|/d) I| < threshold."""
    basis = lattice.basis
    d = basis.shape[0]
    if max_radius < shortest_vector_length(lattice) * (1 - 1e-12):
        raise DomainError("max_radius must be at least the shortest vector length")
    _, pos, q = enumerate_arrays(basis, max_radius)
    out = []
    i = 0
    while i < len(q):
        j = i
        while j < len(q) and q[j] <= q[i] * (1 + 1e-9):
            j += 1
        P = pos[i:j]
        M = (P.T * (1.0 / q[i:j])) @ P
        D = float(np.max(np.abs(M - (j - i) / d * np.eye(d))))
        out.append(LayerReport(float(q[i]), j - i, D, D < threshold))
        i = j
    return out
