"""Minimizers at fixed density, dilation minimization and the 2D phase diagram."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np
from scipy import optimize as sopt
from scipy.stats import qmc

from .calculus import GramParams3, gram_matrix, gram_to_basis, hessian_fixed_density
from .errors import BracketingError, DomainError, LatticeForgeError
from .lattice import (LatticeBasis2, LatticeBasis3, ReducedParams2, Structure, basis_from_xy,
                      gauss_reduce, named_lattice)
from .potentials import PotentialSpec, derivatives_sq
from .sums import (SumTolerance, direct_radius, distance_multiset,
                   lattice_sum)

SQRT3_2 = math.sqrt(3.0) / 2.0


@dataclass
class MinimizeResult:
    params: object
    value: float
    gradient_norm: float
    evaluations: int
    converged: bool
    info: dict = field(default_factory=dict)


def _origin(potential: PotentialSpec) -> bool:
    # Morse energies follow the E_{alpha,r0} convention (origin included)
    return potential.kind == "morse"


# ---------------------------------------------------------------------------
# dilation


def _dilation_derivative(potential: PotentialSpec, structure: Structure, lam_lo: float,
                         tol: SumTolerance | None):
    """dE/dlambda of lambda -> E[lambda * structure] valid for lambda >= lam_lo.

    Inverse powers scale exactly, so their part is -s lambda^{-s-1} zeta(s)
    with zeta summed once at unit scale.
    """
    zetas = [(c, s, lattice_sum(structure, PotentialSpec.inverse_power(s), False, tol).value)
             for c, s in potential.power_terms]
    q = np.zeros(0)
    w = 0.0
    if potential.has_exponential_part:
        R = direct_radius(structure.scaled(lam_lo), potential, tol, exp_only=True) * 1.3
        q, w = distance_multiset(structure, R / lam_lo)

    def deriv(lam: float) -> float:
        total = 0.0
        if len(q):
            d1, _ = derivatives_sq(potential, lam * lam * q, exp_only=True)
            total = w * 2.0 * lam * float(np.dot(q, d1))
        for c, s, z in zetas:
            total += c * (-s) * lam ** (-s - 1) * z
        return total

    return deriv


def minimize_dilation(structure: Structure, alpha: float | None = None, r0: float | None = None,
                      potential: PotentialSpec | None = None, tol: SumTolerance | None = None,
                      xtol: float = 1e-13) -> MinimizeResult:
    """Optimal scale lambda_0 of lambda -> E[lambda * structure].

    A bracket is grown geometrically from lambda = r0 (unimodality makes any
    sign change of dE/dlambda the minimizer), then the root of the analytic
    derivative is located with Brent's method.  Morse energies have a
    minimum only for alpha r0 > (d + 1) log 2.
    """
    if potential is None:
        if alpha is None or r0 is None:
            raise DomainError("give alpha and r0, or a potential")
        potential = PotentialSpec.morse(alpha, r0)
    start = float(r0 if r0 is not None else (potential.r0 or 1.0))
    if potential.kind == "morse":
        # sum |p| e^{-a lam |p|} ~ lam^{-(d+1)} as lam -> 0, so a minimum needs e^{a r0} > 2^{d+1}
        d = structure.dim
        if potential.alpha * potential.r0 <= (d + 1) * math.log(2.0):
            raise DomainError(f"no dilation minimum: alpha r0 <= {d + 1} log 2 and the energy "
                              "decreases without bound as lambda -> 0")
    evals = 0

    def E(lam):
        nonlocal evals
        evals += 1
        return lattice_sum(structure.scaled(lam), potential, _origin(potential), tol).value

    a, b = start, start * 1.1
    fa, fb = E(a), E(b)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa
    # geometric expansion: steps grow by the golden ratio in log(lambda)
    c = b * (b / a) ** 1.618
    fc = E(c)
    for _ in range(200):
        if fc > fb:
            break
        a, fa, b, fb = b, fb, c, fc
        c = b * (b / a) ** 1.618
        if not 1e-3 * start < c < 1e3 * start:
            raise BracketingError("dilation bracket left [1e-3, 1e3] times the start scale")
        fc = E(c)
    else:
        raise BracketingError("could not bracket the dilation minimum")
    # golden-section shrink so the frozen distance set for the derivative stays small
    lo, hi = sorted((a, c))
    while hi / lo > 1.05:
        if hi - b > b - lo:
            t = b + 0.381966 * (hi - b)
            ft = E(t)
            if ft < fb:
                lo, b, fb = b, t, ft
            else:
                hi = t
        else:
            t = b - 0.381966 * (b - lo)
            ft = E(t)
            if ft < fb:
                hi, b, fb = b, t, ft
            else:
                lo = t
    deriv = _dilation_derivative(potential, structure, lo, tol)
    dlo, dhi = deriv(lo), deriv(hi)
    if not (dlo < 0 < dhi):
        raise BracketingError(f"derivative does not change sign on [{lo:g}, {hi:g}]")
    lam = sopt.brentq(deriv, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = lattice_sum(structure.scaled(lam), potential, _origin(potential), tol)
    g = abs(deriv(lam))
    return MinimizeResult(lam, res.value, g, evals + 1, True,
                          {"tail_bound": res.tail_bound, "bracket": (lo, hi)})


# ---------------------------------------------------------------------------
# one-parameter 2D families


@dataclass
class FamilyScan:
    grid: np.ndarray
    values: np.ndarray
    argmin: float
    min_value: float
    interior: bool

    def csv(self, name: str) -> str:
        lines = [f"{name},energy"]
        lines += [f"{g:.17g},{v:.17g}" for g, v in zip(self.grid, self.values)]
        return "\n".join(lines) + "\n"


def _family_scan(energy, grid: np.ndarray) -> FamilyScan:
    vals = np.array([energy(t) for t in grid])
    i = int(np.argmin(vals))
    if 0 < i < len(grid) - 1:
        res = sopt.minimize_scalar(energy, bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                                   options={"xatol": 1e-12})
        best, val = (res.x, res.fun) if res.fun <= vals[i] else (grid[i], vals[i])
        return FamilyScan(grid, vals, float(best), float(val), True)
    return FamilyScan(grid, vals, float(grid[i]), float(vals[i]), False)


def family_energy(potential: PotentialSpec, A: float, tol: SumTolerance | None = None,
                  kind: str = "rhombic"):
    def energy(t):
        if kind == "rhombic":
            L = named_lattice("rhombic", A, theta=float(t))
        else:
            L = named_lattice("rectangular", A, y=float(t))
        return lattice_sum(L, potential, _origin(potential), tol).value
    return energy


def scan_rhombic(potential: PotentialSpec, A: float, thetas: Sequence[float] | None = None,
                 n: int = 1001, tol: SumTolerance | None = None) -> FamilyScan:
    """Energy of sqrt(A) L_theta over theta in [pi/3, pi/2]; argmin in radians."""
    grid = np.asarray(thetas if thetas is not None else np.linspace(math.pi / 3, math.pi / 2, n))
    return _family_scan(family_energy(potential, A, tol, "rhombic"), grid)


def scan_rectangular(potential: PotentialSpec, A: float, ys: Sequence[float] | None = None,
                     n: int = 1001, y_max: float | None = None,
                     tol: SumTolerance | None = None) -> FamilyScan:
    """Energy of sqrt(A) L_y over y >= 1 (log-spaced up to max(2A, 4) by default)."""
    if ys is None:
        top = y_max or max(2.0 * A, 4.0)
        grid = np.geomspace(1.0, top, n)
    else:
        grid = np.asarray(ys, dtype=float)
        if np.any(grid < 1):
            raise DomainError("rectangular lattices need y >= 1")
    return _family_scan(family_energy(potential, A, tol, "rectangular"), grid)


# ---------------------------------------------------------------------------
# 2D minimization at fixed area


@dataclass(frozen=True)
class MultiStart:
    n_random: int = 8
    seed: int = 0
    include_named: bool = True
    extra: tuple = ()
    grad_tol: float = 1e-8
    restarts: int = 3


def reduce_xy(x: float, y: float) -> tuple[float, float]:
    """Fundamental-domain representative of the (x, y) lattice shape."""
    u, v = gauss_reduce(basis_from_xy(x, y, 1.0))
    uu = float(u @ u)
    xr = min(abs(float(u @ v)) / uu, 0.5)
    return xr, 1.0 / uu


def quasi_random_starts(n: int, seed: int = 0) -> list[tuple[float, float]]:
    """Scrambled Halton points in {0 <= x <= 1/2, 1 <= x^2 + y^2 <= 4, y > 0}."""
    if n <= 0:
        return []
    sampler = qmc.Halton(d=2, scramble=True, seed=seed)
    out = []
    while len(out) < n:
        for ux, ur in sampler.random(4 * n):
            x = 0.5 * ux
            r2 = 1.0 + 3.0 * ur
            y2 = r2 - x * x
            if y2 > 0:
                out.append((float(x), math.sqrt(y2)))
            if len(out) == n:
                break
    return out


def _objective_2d(potential: PotentialSpec, A: float, tol: SumTolerance | None, counter: list):
    def E(v):
        x, y = float(v[0]), float(v[1])
        if not (y > 1e-3) or not math.isfinite(x):
            return math.inf
        xr, yr = reduce_xy(x, y)
        if yr > 1e3:
            return math.inf
        counter[0] += 1
        return lattice_sum(LatticeBasis2(basis_from_xy(xr, yr, A)), potential, False, tol).value
    return E


def _fatol(E, v) -> float:
    # simplex stopping is relative to the energy scale; Newton polish does the rest
    f = E(v)
    return 1e-13 * max(1.0, abs(f)) if math.isfinite(f) else 1e-13


def _polish_2d(potential, A, v, tol, grad_tol, max_iter=20):
    """Newton iterations on the FD gradient/Hessian; returns (x, y, report)."""
    x, y = reduce_xy(*v)
    rep = None
    for _ in range(max_iter):
        rep = hessian_fixed_density(potential, ReducedParams2(x, y, A), tol=tol)
        if rep.gradient_norm < grad_tol * 1e-2:
            break
        try:
            step = np.linalg.solve(rep.matrix, rep.gradient)
        except np.linalg.LinAlgError:
            break
        if rep.classification != "local_min":
            # not convex here: small gradient step instead of Newton
            step = rep.gradient * min(1e-2, 1e-2 / max(np.linalg.norm(rep.gradient), 1e-300))
        nrm = np.linalg.norm(step)
        if nrm > 0.05:
            step *= 0.05 / nrm
        x, y = reduce_xy(x - step[0], y - step[1])
        if nrm < 1e-15:
            break
    rep = hessian_fixed_density(potential, ReducedParams2(x, y, A), tol=tol)
    return x, y, rep


def minimize_2d_fixed_area(potential: PotentialSpec, A: float, config: MultiStart | None = None,
                           tol: SumTolerance | None = None, starts: Sequence | None = None) -> MinimizeResult:
    """Best local minimizer over multi-start Nelder-Mead plus Newton polish."""
    if not A > 0:
        raise DomainError("area must be positive")
    cfg = config or MultiStart()
    if starts is None:
        starts = []
        if cfg.include_named:
            starts += [(0.5, SQRT3_2), (0.0, 1.0)]
        starts += list(cfg.extra)
        starts += quasi_random_starts(cfg.n_random, cfg.seed)
    counter = [0]
    E = _objective_2d(potential, A, tol, counter)
    candidates = []
    for s in starts:
        v0 = np.array(s, dtype=float)
        simplex_scale = 0.05
        best = None
        for _ in range(cfg.restarts):
            init = np.array([v0, v0 + [simplex_scale, 0], v0 + [0, simplex_scale]])
            r = sopt.minimize(E, v0, method="Nelder-Mead",
                              options={"initial_simplex": init, "xatol": 1e-9,
                                       "fatol": _fatol(E, v0), "maxiter": 2000})
            if best is None or r.fun < best.fun:
                best = r
            if r.success:
                break
            v0, simplex_scale = r.x, simplex_scale / 4
        candidates.append((best.fun, tuple(reduce_xy(*best.x))))
    candidates.sort()
    # polish the distinct best candidates (shapes closer than 1e-4 are merged)
    polished = []
    seen = []
    for val, (x, y) in candidates:
        if any(abs(x - a) < 1e-4 and abs(y - b) < 1e-4 for a, b in seen):
            continue
        seen.append((x, y))
        if len(seen) > 3:
            break
        xp, yp, rep = _polish_2d(potential, A, (x, y), tol, cfg.grad_tol)
        if rep.classification == "saddle":
            # escape along the negative direction and try again
            ev, vec = np.linalg.eigh(rep.matrix)
            for sgn in (1.0, -1.0):
                v = np.array([xp, yp]) + sgn * 1e-2 * vec[:, 0]
                r = sopt.minimize(E, v, method="Nelder-Mead",
                                  options={"xatol": 1e-9, "fatol": _fatol(E, v), "maxiter": 2000})
                xq, yq, rq = _polish_2d(potential, A, r.x, tol, cfg.grad_tol)
                polished.append((E((xq, yq)), xq, yq, rq))
        polished.append((E((xp, yp)), xp, yp, rep))
    polished.sort(key=lambda t: t[0])
    val, x, y, rep = polished[0]
    params = ReducedParams2(x, y, A)
    value = lattice_sum(LatticeBasis2(basis_from_xy(x, y, A)), potential, _origin(potential), tol).value
    return MinimizeResult(params, value, rep.gradient_norm, counter[0],
                          rep.gradient_norm < cfg.grad_tol,
                          {"classification": rep.classification,
                           "eigenvalues": rep.eigenvalues.tolist(),
                           "candidates": [(float(v), float(a), float(b)) for v, a, b, _ in polished]})


# ---------------------------------------------------------------------------
# phase diagram


SHAPE_TOL = 1e-5


def classify_shape(x: float, y: float, tol: float = SHAPE_TOL) -> tuple[str, float | None]:
    """Shape label of a reduced (x, y) and its parameter (theta in radians, or y)."""
    if abs(x - 0.5) < tol and abs(y - SQRT3_2) < tol:
        return "triangular", None
    if abs(x) < tol and abs(y - 1.0) < tol:
        return "square", None
    if abs(x) < tol and y > 1.0 + tol:
        return "rectangular", y
    if abs(x * x + y * y - 1.0) < tol:
        return "rhombic", math.atan2(y, x)
    return "other", None


@dataclass
class PhasePoint:
    A: float
    shape: str
    param: float | None
    x: float
    y: float
    value: float

    CSV_HEADER = "A,shape,param,x,y,energy"

    def csv_row(self) -> str:
        p = "" if self.param is None else (
            f"{math.degrees(self.param):.17g}" if self.shape == "rhombic" else f"{self.param:.17g}")
        return f"{self.A:.17g},{self.shape},{p},{self.x:.17g},{self.y:.17g},{self.value:.17g}"


@dataclass
class Transition:
    A: float
    lower: float
    upper: float
    frm: str
    to: str

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_json(self) -> dict:
        return {"A": self.A, "from": self.frm, "to": self.to, "width": self.width,
                "lower": self.lower, "upper": self.upper}


@dataclass
class PhaseDiagram:
    points: list
    transitions: list

    def to_json(self) -> dict:
        return {"transitions": [t.to_json() for t in self.transitions]}


def phase_point(potential: PotentialSpec, A: float, config: MultiStart | None = None,
                tol: SumTolerance | None = None, starts=None) -> PhasePoint:
    r = minimize_2d_fixed_area(potential, A, config, tol, starts)
    shape, param = classify_shape(r.params.x, r.params.y)
    return PhasePoint(A, shape, param, r.params.x, r.params.y, r.value)


def _bisect(potential, lo: PhasePoint, hi: PhasePoint, width: float, tol, config):
    """Shrink [lo.A, hi.A] around a shape change, with continuation starts."""
    while hi.A - lo.A > width:
        mid = 0.5 * (lo.A + hi.A)
        starts = [(lo.x, lo.y), (hi.x, hi.y), (0.5, SQRT3_2), (0.0, 1.0)]
        p = phase_point(potential, mid, config, tol, starts=starts)
        if p.shape == lo.shape:
            lo = p
        else:
            hi = p
    return lo, hi


def phase_diagram_2d(potential: PotentialSpec, a_min: float, a_max: float, resolution: int = 41,
                     width: float = 1e-4, narrow_width: float = 1e-10,
                     config: MultiStart | None = None, tol: SumTolerance | None = None,
                     fine_tol: SumTolerance | None = None,
                     workers: int | None = None) -> PhaseDiagram:
    """Minimizer shapes over an area grid and bisected transition areas.

    Shape changes out of the triangular phase are resolved to `narrow_width`
    with `fine_tol` (the Morse triangular/rhombic window is ~1e-10 wide);
    other transitions to `width`.  Each intermediate shape found while
    bisecting (e.g. a thin rhombic window) is split out as its own
    transition.  `workers` > 1 evaluates the grid in a process pool; the
    result does not depend on it.
    """
    if not 0 < a_min < a_max:
        raise DomainError("need 0 < a_min < a_max")
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    grid = np.linspace(a_min, a_max, resolution)
    if workers and workers > 1:
        job = partial(phase_point, potential, config=config, tol=tol)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(job, [float(A) for A in grid]))
    else:
        points = [phase_point(potential, float(A), config, tol) for A in grid]
    fine_tol = fine_tol or SumTolerance(rel_tol=1e-15, abs_tol=1e-17)
    transitions = []
    for lo, hi in zip(points, points[1:]):
        if lo.shape == hi.shape:
            continue
        narrow = "triangular" in (lo.shape, hi.shape)
        tl = fine_tol if narrow else tol
        w = narrow_width if narrow else width
        pending = [(lo, hi)]
        while pending:
            a, b = pending.pop(0)
            l, h = _bisect(potential, a, b, w, tl, config)
            transitions.append(Transition(0.5 * (l.A + h.A), l.A, h.A, l.shape, h.shape))
            if h.shape != b.shape:
                pending.append((h, b))
    transitions.sort(key=lambda t: t.A)
    return PhaseDiagram(points, transitions)


# ---------------------------------------------------------------------------
# 3D minimization at fixed volume


def _objective_3d(potential, V, tol, counter):
    def E(v):
        try:
            G = gram_matrix(v, V)
            B = gram_to_basis(G)
        except (DomainError, LatticeForgeError, np.linalg.LinAlgError):
            return math.inf
        counter[0] += 1
        try:
            return lattice_sum(LatticeBasis3(B), potential, False, tol).value
        except LatticeForgeError:
            return math.inf
    return E


def minimize_3d_fixed_volume(potential: PotentialSpec, V: float, seeds: Sequence | None = None,
                             n_perturb: int = 3, seed: int = 0, tol: SumTolerance | None = None,
                             grad_tol: float = 1e-8, maxiter: int = 3000) -> MinimizeResult:
    """Seed-local search over fixed-volume Gram coordinates; best result wins."""
    if not V > 0:
        raise DomainError("volume must be positive")
    if seeds is None:
        seeds = ["cubic", "fcc", "bcc"]
    named = [(s, named_lattice(s, V)) if isinstance(s, str) else (f"seed{i}", s.with_covolume(V))
             for i, s in enumerate(seeds)]
    rng = np.random.default_rng(seed)
    for k in range(n_perturb):
        m = np.eye(3) + 0.05 * rng.standard_normal((3, 3))
        base = named[k % len(named)][1]
        named.append((f"{named[k % len(named)][0]}+perturbed{k}",
                      LatticeBasis3(base.basis @ m).with_covolume(V)))
    counter = [0]
    E = _objective_3d(potential, V, tol, counter)
    results = []
    for label, lat in named:
        v0 = GramParams3.from_basis(lat).coords
        scale = V ** (2.0 / 3.0)
        init = np.vstack([v0] + [v0 + 0.02 * scale * e for e in np.eye(5)])
        r = sopt.minimize(E, v0, method="Nelder-Mead",
                          options={"initial_simplex": init, "xatol": 1e-10 * scale,
                                   "fatol": _fatol(E, v0), "maxiter": maxiter,
                                   "maxfev": 4 * maxiter})
        v = r.x
        rep = None
        for _ in range(15):
            try:
                rep = hessian_fixed_density(potential, GramParams3.from_coords(v, V), tol=tol)
            except LatticeForgeError:
                break
            if rep.gradient_norm < grad_tol * 1e-2 or rep.classification != "local_min":
                break
            step = np.linalg.solve(rep.matrix, rep.gradient)
            if np.linalg.norm(step) > 0.05 * scale:
                break
            v = v - step
        if rep is None:
            continue
        results.append((E(v), label, v, rep))
    results.sort(key=lambda t: t[0])
    val, label, v, rep = results[0]
    params = GramParams3.from_coords(v, V)
    value = lattice_sum(params.basis(), potential, _origin(potential), tol).value
    return MinimizeResult(params, value, rep.gradient_norm, counter[0],
                          rep.gradient_norm < grad_tol,
                          {"seed": label, "classification": rep.classification,
                           "ranking": [(lab, float(e)) for e, lab, _, _ in results]})
