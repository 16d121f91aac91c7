"""Condition checkers for the 2D triangular result and 3D structure comparisons.

Conventions: beta = alpha^2 A / pi and C = e^{alpha r0}.  The 2D conditions are
checked on A in (0, pi r0 / alpha); the 3D comparisons use the dilation
minima H, B, F of hcp, bcc and fcc at r0 = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sopt

from .errors import DomainError, TieError
from .lattice import Structure, named_structure
from .optimize import minimize_dilation
from .potentials import PotentialSpec
from .sums import SumTolerance, exp_sum

EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# (C1) / (C2) area intervals


def c1_residual(A: float, alpha: float, r0: float) -> float:
    b = alpha * alpha * A / math.pi
    return math.exp(alpha * r0 - b) - 1.0 - math.exp(-b / 4.0)


def c2_residual(A: float, alpha: float, r0: float) -> float:
    b = alpha * alpha * A / math.pi
    return math.exp(alpha * r0 - b) - 1.0 - 64.0 * math.pi**2 / (math.e**2 * A * A * alpha**4)


def _domains(alpha: float, r0: float):
    upper = math.pi * r0 / alpha
    split = 8.0 * math.pi / alpha**2
    # (C1) on [split, upper), (C2) on (0, min(upper, split))
    return {"C1": (split, upper, c1_residual), "C2": (0.0, min(upper, split), c2_residual)}


def _satisfied_set(fn, lo: float, hi: float, alpha: float, r0: float, resolution: int,
                   xtol: float):
    """Hull of {A in [lo, hi) : fn >= 0}, endpoints refined by bisection."""
    if not hi > lo:
        return None
    a_min = lo if lo > 0 else hi * 1e-6
    grid = np.geomspace(a_min, hi, resolution)
    ok = np.array([fn(float(a), alpha, r0) >= 0 for a in grid])
    if not ok.any():
        return None
    idx = np.flatnonzero(ok)
    i, j = idx[0], idx[-1]

    def edge(a, b):
        # a satisfies, b does not; shrink |b - a| to xtol
        while abs(b - a) > xtol * max(1.0, abs(a)):
            m = 0.5 * (a + b)
            if fn(m, alpha, r0) >= 0:
                a = m
            else:
                b = m
        return a

    left = float(grid[0]) if i == 0 else edge(float(grid[i]), float(grid[i - 1]))
    right = hi if j == len(grid) - 1 else edge(float(grid[j]), float(grid[j + 1]))
    return left, right


@dataclass
class ConditionReport:
    alpha: float
    r0: float
    interval: tuple[float, float] | None
    which: tuple[str, ...]
    parts: dict = field(default_factory=dict)
    a0_corollary: float | None = None
    a_lower_corollary: float | None = None

    @property
    def empty(self) -> bool:
        return self.interval is None

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "r0": self.r0,
                "interval": list(self.interval) if self.interval else None,
                "which": list(self.which),
                "parts": {k: list(v) for k, v in self.parts.items()},
                "a0_corollary": self.a0_corollary, "a_lower_corollary": self.a_lower_corollary}


def c1_c2_interval(alpha: float, r0: float = 1.0, resolution: int = 4000,
                   xtol: float = 1e-12) -> ConditionReport:
    """Areas where (C1) or (C2) holds; the triangular lattice is then the unique minimizer."""
    if not (alpha > 0 and r0 > 0):
        raise DomainError("alpha and r0 must be positive")
    parts = {}
    for name, (lo, hi, fn) in _domains(alpha, r0).items():
        got = _satisfied_set(fn, lo, hi, alpha, r0, resolution, xtol)
        if got is not None:
            parts[name] = got
    interval = None
    if parts:
        interval = (min(v[0] for v in parts.values()), max(v[1] for v in parts.values()))
    cor = corollary_bounds(alpha, r0)
    return ConditionReport(alpha, r0, interval, tuple(sorted(parts)), parts,
                           cor.a0 if cor.applicable else None,
                           cor.a_lower if cor.applicable else None)


def condition_onset(r0: float = 1.0, lo: float = 2.0, hi: float = 5.0,
                    xtol: float = 1e-9) -> float:
    """Smallest alpha for which the (C1)/(C2) interval is nonempty."""
    def nonempty(alpha):
        for name, (a, b, fn) in _domains(alpha, r0).items():
            if not b > a:
                continue
            if name == "C1":
                # the (C1) residual decreases in A wherever it is nonnegative
                if fn(a, alpha, r0) >= 0:
                    return True
                continue
            u = sopt.minimize_scalar(lambda t: -fn(math.exp(t), alpha, r0),
                                     bounds=(math.log(b) - 12, math.log(b)), method="bounded",
                                     options={"xatol": 1e-12})
            if -u.fun >= 0:
                return True
        return False

    if nonempty(lo) or not nonempty(hi):
        raise DomainError(f"onset not bracketed by [{lo}, {hi}]")
    while hi - lo > xtol:
        m = 0.5 * (lo + hi)
        if nonempty(m):
            hi = m
        else:
            lo = m
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class CorollaryBounds:
    applicable: bool
    x0: float | None = None
    a0: float | None = None
    a_lower: float | None = None

    def to_json(self) -> dict:
        return {"applicable": self.applicable, "x0": self.x0, "a0": self.a0,
                "a_lower": self.a_lower}


def corollary_bounds(alpha: float, r0: float = 1.0) -> CorollaryBounds:
    """[A_lower, A0] from the root X0 of e^{alpha r0} X^4 - X - 1 on [e^{-alpha r0/4}, e^{-2}]."""
    if not (alpha > 0 and r0 > 0):
        raise DomainError("alpha and r0 must be positive")
    if alpha * r0 <= 8.0 + math.log(2.0):
        return CorollaryBounds(False)
    C = math.exp(alpha * r0)

    def P(x):
        return C * x**4 - x - 1.0

    x0 = sopt.bisect(P, math.exp(-alpha * r0 / 4.0), math.exp(-2.0), xtol=1e-300, rtol=4 * EPS,
                     maxiter=2000)
    a0 = -4.0 * math.pi / alpha**2 * math.log(x0)
    a_lower = 8.0 * math.pi / (alpha**2 * math.sqrt(math.exp(alpha * r0 - 8.0) - 1.0))
    return CorollaryBounds(True, x0, a0, a_lower)


def modified_morse_bound(alpha: float, beta: float, p: float) -> float:
    """min{pi/alpha, (beta pi^{p+1} / (alpha Gamma(p)))^{1/p}} (r0 = 1), in log space."""
    if not p > 2.5:
        raise DomainError("the modified Morse bound needs p > 5/2")
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")
    log_b = (math.log(beta) + (p + 1) * math.log(math.pi) - math.log(alpha) - math.lgamma(p)) / p
    return min(math.pi / alpha, math.exp(log_b))


# ---------------------------------------------------------------------------
# 3D orderings


STRUCTURES = {"H": "hcp", "B": "bcc", "F": "fcc"}


@dataclass
class Ordering3D:
    alpha: float
    H: float
    B: float
    F: float
    lambda_H: float
    lambda_B: float
    lambda_F: float
    order: str
    tails: dict = field(default_factory=dict)

    def csv_row(self) -> str:
        return f"{self.alpha:.17g},{self.H:.17g},{self.B:.17g},{self.F:.17g},{self.order}"

    CSV_HEADER = "alpha,H,B,F,order"

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "H": self.H, "B": self.B, "F": self.F,
                "lambda_H": self.lambda_H, "lambda_B": self.lambda_B,
                "lambda_F": self.lambda_F, "order": self.order}


def dilation_minimum(name: str, alpha: float, r0: float = 1.0,
                     tol: SumTolerance | None = None):
    """(value, lambda, tail bound) of min over lambda of E_{alpha,r0}[lambda * structure]."""
    red = scaling_reduction(alpha, r0)
    res = minimize_dilation(named_structure(name, 1.0), red.alpha, 1.0, tol=tol)
    return res.value, res.params * red.scale, res.info["tail_bound"]


def _tie_margin(a: float, b: float, ta: float, tb: float) -> float:
    return ta + tb + 4 * EPS * max(abs(a), abs(b))


def compare_3d(alpha: float, r0: float = 1.0, tol: SumTolerance | None = None) -> Ordering3D:
    """Dilation minima of hcp, bcc and fcc and their strict ordering."""
    if not (alpha > 0 and r0 > 0):
        raise DomainError("alpha and r0 must be positive")
    vals = {k: dilation_minimum(v, alpha, r0, tol) for k, v in STRUCTURES.items()}
    keys = sorted(vals, key=lambda k: vals[k][0])
    for a, b in zip(keys, keys[1:]):
        (va, _, ta), (vb, _, tb) = vals[a], vals[b]
        if abs(va - vb) <= _tie_margin(va, vb, ta, tb):
            raise TieError(f"{a} and {b} agree within the summation bounds at alpha={alpha}")
    return Ordering3D(alpha, vals["H"][0], vals["B"][0], vals["F"][0], vals["H"][1],
                      vals["B"][1], vals["F"][1], "<".join(keys),
                      {k: v[2] for k, v in vals.items()})


def _difference(a: str, b: str, alpha: float, tol) -> float:
    va, _, ta = dilation_minimum(STRUCTURES[a], alpha, 1.0, tol)
    vb, _, tb = dilation_minimum(STRUCTURES[b], alpha, 1.0, tol)
    d = va - vb
    if abs(d) <= _tie_margin(va, vb, ta, tb):
        raise TieError(f"{a} - {b} is below the summation bounds at alpha={alpha}")
    return d


def bracket_sign_change(a: str, b: str, lo: float, hi: float, precision: float = 1e-3,
                        tol: SumTolerance | None = None) -> tuple[float, float]:
    """Bracket of width <= precision where (a - b) changes sign, by bisection."""
    if precision < 1e-4:
        raise DomainError("precision must be at least 1e-4")
    dlo, dhi = _difference(a, b, lo, tol), _difference(a, b, hi, tol)
    if dlo * dhi > 0:
        raise DomainError(f"{a}-{b} has the same sign at alpha={lo} and alpha={hi}")
    while hi - lo > precision:
        m = 0.5 * (lo + hi)
        dm = _difference(a, b, m, tol)
        if dm * dlo > 0:
            lo, dlo = m, dm
        else:
            hi, dhi = m, dm
    return lo, hi


@dataclass(frozen=True)
class AlphaThresholds:
    alpha0: tuple[float, float]
    alpha1: tuple[float, float]

    def to_json(self) -> dict:
        return {"alpha0": list(self.alpha0), "alpha1": list(self.alpha1)}


def bracket_alpha_thresholds(precision: float = 1e-3, alpha0_range=(2.8, 3.5),
                             alpha1_range=(3.2, 6.0),
                             tol: SumTolerance | None = None) -> AlphaThresholds:
    """alpha0: sign change of B - F; alpha1: sign change of H - F."""
    return AlphaThresholds(bracket_sign_change("B", "F", *alpha0_range, precision, tol),
                           bracket_sign_change("H", "F", *alpha1_range, precision, tol))


def exp_sum_crossing(volume: float = 1.0, lo: float = 2.0, hi: float = 5.0,
                     precision: float = 1e-8, tol: SumTolerance | None = None) -> float:
    """alpha where F_alpha[fcc] = F_alpha[bcc] at the given volume per point."""
    if precision < 1e-12:
        raise DomainError("precision below 1e-12 is not meaningful here")
    fcc, bcc = named_structure("fcc", volume), named_structure("bcc", volume)

    def diff(a):
        return exp_sum(fcc, a, tol=tol).value - exp_sum(bcc, a, tol=tol).value

    return float(sopt.brentq(diff, lo, hi, xtol=precision))


# ---------------------------------------------------------------------------
# scaling


@dataclass(frozen=True)
class ScalingReduction:
    """E_{alpha,r0}[L] = E_{alpha r0, 1}[L / r0]: minimizers map by the factor `scale`."""
    alpha: float
    scale: float

    def reduce(self, lattice: Structure) -> Structure:
        return lattice.scaled(1.0 / self.scale)

    def restore(self, lattice: Structure) -> Structure:
        return lattice.scaled(self.scale)

    def potential(self) -> PotentialSpec:
        return PotentialSpec.morse(self.alpha, 1.0)


def scaling_reduction(alpha: float, r0: float) -> ScalingReduction:
    if not (alpha > 0 and r0 > 0):
        raise DomainError("alpha and r0 must be positive")
    return ScalingReduction(alpha * r0, r0)


# ---------------------------------------------------------------------------
# labelled 3D report


@dataclass(frozen=True)
class ReportRow:
    alpha: float
    order: str
    label: str
    ordering: Ordering3D

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "order": self.order, "label": self.label,
                "H": self.ordering.H, "B": self.ordering.B, "F": self.ordering.F}


def regime_label(order: str, previous_best: str | None = None) -> str:
    """Name the regime from the best structure.

    HCP-best with a different winner `previous_best` a step below in alpha is
    reported as the FCC/HCP boundary side.
    """
    best = order.split("<")[0]
    if best == "B":
        return "BCC-best"
    if best == "F":
        return "FCC-best"
    if previous_best is not None and previous_best != "H":
        return "FCC/HCP boundary side"
    return "HCP-best"


def conjecture_report(alphas, r0: float = 1.0, step: float = 0.5,
                      tol: SumTolerance | None = None) -> list[ReportRow]:
    """Observed H/B/F regimes at the sampled alpha; a report, not a proof.

    For HCP-best samples the ordering at alpha - step decides whether the
    sample sits next to the FCC/HCP change.
    """
    rows = []
    for a in alphas:
        o = compare_3d(a, r0, tol)
        prev = None
        if o.order.startswith("H"):
            try:
                prev = compare_3d(a - step, r0, tol).order.split("<")[0]
            except TieError:
                prev = "tie"
        rows.append(ReportRow(float(a), o.order, regime_label(o.order, prev), o))
    return rows
