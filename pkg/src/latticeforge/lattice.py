"""Bravais lattices, periodic configurations and point enumeration in 2D/3D.

Bases are stored as row matrices: row ``i`` is the generator ``a_{i+1}``.
A lattice point with integer coefficient vector ``c`` sits at ``c @ basis``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import CapacityError, DegenerateBasisError, DomainError

DEFAULT_POINT_LIMIT = 10**8
# upper bound on the number of box entries materialized at once
_CHUNK = 4_000_000

SQRT3 = math.sqrt(3.0)


class _Basis:
    dim: int = 0

    def __init__(self, basis):
        b = np.array(basis, dtype=float)
        if b.shape != (self.dim, self.dim):
            raise DomainError(f"expected a {self.dim}x{self.dim} basis, got shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise DomainError("basis vectors must be finite")
        det = float(np.linalg.det(b))
        lengths = np.linalg.norm(b, axis=1)
        if abs(det) < 1e-12 * float(np.prod(lengths)) or det == 0.0:
            raise DegenerateBasisError("basis vectors are (numerically) linearly dependent")
        b.setflags(write=False)
        self._basis = b
        self._covolume = abs(det)
        g = b @ b.T
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        self._gram = g

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def gram(self) -> np.ndarray:
        return self._gram

    @property
    def covolume(self) -> float:
        return self._covolume

    def scaled(self, factor: float):
        return type(self)(self._basis * factor)

    def with_covolume(self, covolume: float):
        """Dilate so that the unit cell has the requested area/volume."""
        if covolume <= 0:
            raise DomainError("covolume must be positive")
        return self.scaled((covolume / self._covolume) ** (1.0 / self.dim))

    def __repr__(self) -> str:
        rows = ", ".join(str(list(np.round(r, 12))) for r in self._basis)
        return f"{type(self).__name__}([{rows}])"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and np.array_equal(self._basis, other._basis)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._basis.tobytes()))


class LatticeBasis2(_Basis):
    dim = 2

    @property
    def a1(self) -> np.ndarray:
        return self._basis[0]

    @property
    def a2(self) -> np.ndarray:
        return self._basis[1]

    @property
    def area(self) -> float:
        return self._covolume


class LatticeBasis3(_Basis):
    dim = 3

    @property
    def a1(self) -> np.ndarray:
        return self._basis[0]

    @property
    def a2(self) -> np.ndarray:
        return self._basis[1]

    @property
    def a3(self) -> np.ndarray:
        return self._basis[2]

    @property
    def volume(self) -> float:
        return self._covolume


Basis = Union[LatticeBasis2, LatticeBasis3]


def make_basis(matrix) -> Basis:
    m = np.asarray(matrix, dtype=float)
    if m.shape == (2, 2):
        return LatticeBasis2(m)
    if m.shape == (3, 3):
        return LatticeBasis3(m)
    raise DomainError(f"only 2D and 3D lattices are supported (got shape {m.shape})")


@dataclass(frozen=True)
class ReducedParams2:
    """Fundamental-domain coordinates (x, y) of a 2D lattice plus its area A."""

    x: float
    y: float
    A: float

    def __post_init__(self):
        if not (self.y > 0 and self.A > 0):
            raise DomainError("reduced parameters need y > 0 and A > 0")

    def in_fundamental_domain(self, tol: float = 1e-12) -> bool:
        return (-tol <= self.x <= 0.5 + tol) and (self.x**2 + self.y**2 >= 1 - tol)


class PeriodicConfig:
    """Union of translated copies ``base + offsets[k]`` of one Bravais lattice."""

    def __init__(self, base: Basis, offsets):
        offs = np.array(offsets, dtype=float).reshape(-1, base.dim)
        if offs.shape[0] == 0 or np.any(offs[0] != 0.0):
            raise DomainError("the first offset of a periodic configuration must be the zero vector")
        frac = np.linalg.solve(base.basis.T, offs.T).T
        for i in range(len(frac)):
            for j in range(i):
                d = frac[i] - frac[j]
                if np.all(np.abs(d - np.round(d)) < 1e-9):
                    raise DomainError(f"offsets {j} and {i} are congruent modulo the base lattice")
        offs.setflags(write=False)
        self.base = base
        self.offsets = offs
        self._frac = frac

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def points_per_cell(self) -> int:
        return len(self.offsets)

    @property
    def density(self) -> float:
        return self.points_per_cell / self.base.covolume

    def scaled(self, factor: float) -> "PeriodicConfig":
        return PeriodicConfig(self.base.scaled(factor), self.offsets * factor)

    def fractional_offsets(self) -> np.ndarray:
        return self._frac

    def __repr__(self) -> str:
        return f"PeriodicConfig(base={self.base!r}, offsets={self.offsets.tolist()})"


Structure = Union[LatticeBasis2, LatticeBasis3, PeriodicConfig]


@dataclass(frozen=True)
class LatticePoint:
    coeffs: tuple
    position: tuple
    norm2: float


# ---------------------------------------------------------------------------
# 2D parametrization


def from_reduced_2d(params: ReducedParams2) -> LatticeBasis2:
    """Basis sqrt(A/y) * {(1, 0), (x, y)}; its unit cell has area A."""
    x, y, A = params.x, params.y, params.A
    if y <= 0 or A <= 0:
        raise DomainError("y and A must be positive")
    s = math.sqrt(A / y)
    return LatticeBasis2([[s, 0.0], [s * x, s * y]])


def basis_from_xy(x: float, y: float, A: float) -> np.ndarray:
    """Raw basis matrix for any (x, y) in the upper half-plane (no domain check)."""
    s = math.sqrt(A / y)
    return np.array([[s, 0.0], [s * x, s * y]])


def gauss_reduce(basis: np.ndarray) -> np.ndarray:
    """Lagrange-Gauss reduction: |u| <= |v| and |u.v| <= |u|^2 / 2."""
    u = np.array(basis[0], dtype=float)
    v = np.array(basis[1], dtype=float)
    for _ in range(10_000):
        if u @ u > v @ v:
            u, v = v, u
        m = round(float(u @ v) / float(u @ u))
        if m == 0:
            break
        v = v - m * u
    else:  # pragma: no cover - reduction always terminates for real bases
        raise DegenerateBasisError("Gauss reduction did not terminate")
    if u @ u > v @ v:
        u, v = v, u
    return np.array([u, v])


def reduce_2d(basis: LatticeBasis2) -> ReducedParams2:
    """Fundamental-domain parameters of a 2D lattice (up to rotation/reflection)."""
    if not isinstance(basis, LatticeBasis2):
        basis = LatticeBasis2(basis)
    u, v = gauss_reduce(basis.basis)
    uu = float(u @ u)
    A = basis.area
    x = abs(float(u @ v)) / uu
    y = A / uu
    x = min(max(x, 0.0), 0.5)
    return ReducedParams2(x, y, A)


# ---------------------------------------------------------------------------
# named structures

_FCC = 2.0 ** (-1.0 / 3.0) * np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 0.0]])
_BCC = 2.0 ** (1.0 / 3.0) * np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 0.5]])
_HCP_BASE = np.array(
    [[1.0, 0.0, 0.0], [0.5, SQRT3 / 2.0, 0.0], [0.0, 0.0, math.sqrt(8.0 / 3.0)]]
)
_HCP_OFFSET = np.array([0.5, 1.0 / math.sqrt(12.0), math.sqrt(2.0 / 3.0)])

NAMES_2D = ("triangular", "square", "rectangular", "rhombic")
NAMES_3D = ("cubic", "fcc", "bcc")


def named_lattice(name: str, size: float = 1.0, *, y: float | None = None,
                  theta: float | None = None) -> Basis:
    """Named lattice with unit-cell area (2D) or volume (3D) equal to `size`.

    `y` selects the rectangular lattice L_y (y >= 1) and `theta` (radians) the
    rhombic lattice with smallest angle theta in [pi/3, pi/2].
    """
    if size <= 0:
        raise DomainError("area/volume must be positive")
    name = name.lower()
    if name == "triangular":
        return from_reduced_2d(ReducedParams2(0.5, SQRT3 / 2.0, size))
    if name == "square":
        return from_reduced_2d(ReducedParams2(0.0, 1.0, size))
    if name == "rectangular":
        if y is None or not y >= 1.0:
            raise DomainError("rectangular lattice needs y >= 1")
        return from_reduced_2d(ReducedParams2(0.0, float(y), size))
    if name == "rhombic":
        if theta is None or not (math.pi / 3 - 1e-12 <= theta <= math.pi / 2 + 1e-12):
            raise DomainError("rhombic lattice needs theta in [pi/3, pi/2]")
        return from_reduced_2d(ReducedParams2(math.cos(theta), math.sin(theta), size))
    s = size ** (1.0 / 3.0)
    if name in ("cubic", "sc", "z3"):
        return LatticeBasis3(np.eye(3) * s)
    if name in ("fcc", "d3"):
        return LatticeBasis3(_FCC * s)
    if name in ("bcc", "d3*"):
        return LatticeBasis3(_BCC * s)
    raise DomainError(f"unknown lattice name {name!r}")


def hcp_config(scale: float = 1.0) -> PeriodicConfig:
    """lambda * hcp: two points per cell of volume lambda^3 * sqrt(2), nearest distance lambda."""
    if not scale > 0:
        raise DomainError("hcp scale must be positive")
    return PeriodicConfig(LatticeBasis3(_HCP_BASE * scale), [np.zeros(3), _HCP_OFFSET * scale])


def named_structure(name: str, size: float = 1.0, **kw) -> Structure:
    """Like `named_lattice` but also accepts 'hcp' (size = volume per point)."""
    if name.lower() == "hcp":
        # hcp at scale 1 carries sqrt(2)/2 volume per point
        return hcp_config((size / (math.sqrt(2.0) / 2.0)) ** (1.0 / 3.0))
    return named_lattice(name, size, **kw)


# ---------------------------------------------------------------------------
# enumeration


def _coeff_ranges(gram_inv_diag: np.ndarray, radius: float, shift: np.ndarray):
    b = radius * np.sqrt(gram_inv_diag)
    lo = np.ceil(-shift - b - 1e-9).astype(np.int64)
    hi = np.floor(-shift + b + 1e-9).astype(np.int64)
    return lo, hi


def enumerate_arrays(basis: np.ndarray, radius: float, shift: np.ndarray | None = None,
                     include_origin: bool = False, limit: int = DEFAULT_POINT_LIMIT,
                     sort: bool = True):
    """All points ``(c + shift) @ basis`` with norm <= radius.

    Returns (coeffs, positions, norm2) sorted by (norm2, lexicographic coeffs).
    `shift` is a fractional coefficient vector; the origin (c = 0, no shift) is
    dropped unless `include_origin`.  With ``sort=False`` the canonical order
    is skipped (callers that only sum with `math.fsum` do not need it).
    """
    basis = np.asarray(basis, dtype=float)
    d = basis.shape[0]
    if not radius > 0:
        raise DomainError("radius must be positive")
    s = np.zeros(d) if shift is None else np.asarray(shift, dtype=float)
    gram = basis @ basis.T
    ginv = np.linalg.inv(gram)
    covol = abs(np.linalg.det(basis))
    unit_ball = math.pi if d == 2 else 4.0 * math.pi / 3.0
    rho = 0.5 * float(np.sum(np.linalg.norm(basis, axis=1)))
    estimate = unit_ball * (radius + rho) ** d / covol
    if estimate > limit:
        raise CapacityError(f"~{estimate:.3g} points within radius {radius:g} exceed limit {limit:g}")
    lo, hi = _coeff_ranges(np.diag(ginv), radius, s)
    r2 = radius * radius * (1 + 1e-13)
    inner = [np.arange(lo[i], hi[i] + 1) for i in range(1, d)]
    inner_grid = np.stack(np.meshgrid(*inner, indexing="ij"), -1).reshape(-1, d - 1)
    per_slab = max(1, _CHUNK // max(1, len(inner_grid)))
    chunks_c, chunks_q = [], []
    first = np.arange(lo[0], hi[0] + 1)
    for start in range(0, len(first), per_slab):
        f0 = first[start:start + per_slab]
        c = np.empty((len(f0) * len(inner_grid), d), dtype=np.int64)
        c[:, 0] = np.repeat(f0, len(inner_grid))
        c[:, 1:] = np.tile(inner_grid, (len(f0), 1))
        p = (c + s) @ basis
        q = np.einsum("ij,ij->i", p, p)
        keep = q <= r2
        if shift is None and not include_origin:
            keep &= np.any(c != 0, axis=1)
        chunks_c.append(c[keep])
        chunks_q.append(q[keep])
    coeffs = np.concatenate(chunks_c) if chunks_c else np.zeros((0, d), dtype=np.int64)
    norm2 = np.concatenate(chunks_q) if chunks_q else np.zeros(0)
    if sort:
        order = np.lexsort(tuple(coeffs[:, k] for k in range(d - 1, -1, -1)) + (norm2,))
        coeffs = coeffs[order]
        norm2 = norm2[order]
    positions = (coeffs + s) @ basis
    return coeffs, positions, norm2


def enumerate_points(lattice: Structure, radius: float, include_origin: bool = False,
                     limit: int = DEFAULT_POINT_LIMIT) -> list[LatticePoint]:
    """Every point with |p| <= radius, sorted by (norm2, coefficients).

    For a periodic configuration the coefficient tuple carries the offset
    index as its last entry.
    """
    if isinstance(lattice, PeriodicConfig):
        rows = []
        for k, frac in enumerate(lattice.fractional_offsets()):
            c, p, q = enumerate_arrays(lattice.base.basis, radius,
                                       None if k == 0 else frac,
                                       include_origin, limit)
            for ci, pi, qi in zip(c, p, q):
                rows.append((float(qi), tuple(int(v) for v in ci) + (k,), tuple(map(float, pi))))
        rows.sort(key=lambda r: (r[0], r[1]))
        return [LatticePoint(cf, pos, q) for q, cf, pos in rows]
    c, p, q = enumerate_arrays(lattice.basis, radius, None, include_origin, limit)
    return [LatticePoint(tuple(int(v) for v in ci), tuple(map(float, pi)), float(qi))
            for ci, pi, qi in zip(c, p, q)]


def dual(lattice: Basis) -> Basis:
    """Dual lattice {q : q.p in Z for all p}; generator matrix inv(B)^T."""
    if isinstance(lattice, PeriodicConfig):
        raise DomainError("the dual is defined for Bravais lattices only")
    return type(lattice)(np.linalg.inv(lattice.basis).T)


def shortest_vector_length(lattice: Structure) -> float:
    if isinstance(lattice, PeriodicConfig):
        r = shortest_vector_length(lattice.base)
        pts = enumerate_points(lattice, r * (1 + 1e-12))
        return math.sqrt(min(p.norm2 for p in pts))
    r = float(np.min(np.linalg.norm(lattice.basis, axis=1)))
    _, _, q = enumerate_arrays(lattice.basis, r * (1 + 1e-12))
    return math.sqrt(float(q.min()))


def cell_radius(basis: np.ndarray) -> float:
    """Max distance from a lattice point to any point of its centred parallelepiped cell."""
    basis = np.asarray(basis, dtype=float)
    d = basis.shape[0]
    best = 0.0
    for signs in np.ndindex(*(2,) * d):
        v = (np.array(signs) * 2 - 1) @ basis
        best = max(best, float(np.linalg.norm(v)))
    return 0.5 * best


def norm2_spectrum(lattice: Structure, radius: float) -> np.ndarray:
    if isinstance(lattice, PeriodicConfig):
        return np.array([p.norm2 for p in enumerate_points(lattice, radius)])
    return enumerate_arrays(lattice.basis, radius)[2]


# ---------------------------------------------------------------------------
# serialization


def lattice_to_json(lattice: Structure) -> dict:
    if isinstance(lattice, PeriodicConfig):
        return {"dim": lattice.dim, "basis": lattice.base.basis.tolist(),
                "offsets": lattice.offsets.tolist()}
    return {"dim": lattice.dim, "basis": lattice.basis.tolist(),
            "offsets": [[0.0] * lattice.dim]}


def lattice_from_json(obj: dict) -> Structure:
    try:
        dim = int(obj["dim"])
        basis = np.array(obj["basis"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed lattice JSON: {exc}") from None
    if dim not in (2, 3) or basis.shape != (dim, dim):
        raise DomainError("lattice JSON: 'dim' must be 2 or 3 and 'basis' dim x dim")
    base = make_basis(basis)
    offsets = np.array(obj.get("offsets", [[0.0] * dim]), dtype=float).reshape(-1, dim)
    if len(offsets) == 1:
        if np.any(offsets[0] != 0):
            raise DomainError("lattice JSON: first offset must be the zero vector")
        return base
    return PeriodicConfig(base, offsets)
