"""Pair potentials written as functions of the squared distance.

Every potential is a `PotentialSpec`; evaluation takes ``r2 = |p|^2`` so that
lattice sums can feed norms straight from the enumerator.  For truncation each
potential splits into an exponentially decaying part (bounded through
`tail_majorant`) and a finite list of inverse powers ``c * r**-s`` whose tail
is integrated in the continuum limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, NonConvergenceError

KINDS = ("morse", "lennard_jones", "modified_morse", "pure_exponential", "gaussian",
         "inverse_power")

_ALIASES = {"lj": "lennard_jones", "modified-morse": "modified_morse", "exp": "pure_exponential",
            "pure-exponential": "pure_exponential", "power": "inverse_power",
            "inverse-power": "inverse_power"}


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    alpha: float | None = None
    r0: float | None = None
    beta: float | None = None
    p: float | None = None
    s: float | None = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        need = {
            "morse": ("alpha", "r0"),
            "lennard_jones": (),
            "modified_morse": ("alpha", "beta", "p"),
            "pure_exponential": ("beta",),
            "gaussian": ("alpha",),
            "inverse_power": ("s",),
        }
        if kind not in need:
            raise DomainError(f"unknown potential kind {self.kind!r}")
        for name in need[kind]:
            v = getattr(self, name)
            if v is None or not math.isfinite(v) or v <= 0:
                raise DomainError(f"{kind}: parameter {name} must be a positive real (got {v})")
        if kind == "modified_morse":
            if self.p <= 2.5:
                raise DomainError("modified_morse requires p > 5/2")
            object.__setattr__(self, "r0", 1.0)

    # constructors -------------------------------------------------------
    @classmethod
    def morse(cls, alpha: float, r0: float = 1.0) -> "PotentialSpec":
        return cls("morse", alpha=alpha, r0=r0)

    @classmethod
    def lennard_jones(cls) -> "PotentialSpec":
        return cls("lennard_jones")

    @classmethod
    def modified_morse(cls, alpha: float, beta: float, p: float) -> "PotentialSpec":
        return cls("modified_morse", alpha=alpha, beta=beta, p=p)

    @classmethod
    def pure_exponential(cls, beta: float) -> "PotentialSpec":
        return cls("pure_exponential", beta=beta)

    @classmethod
    def gaussian(cls, alpha: float) -> "PotentialSpec":
        return cls("gaussian", alpha=alpha)

    @classmethod
    def inverse_power(cls, s: float) -> "PotentialSpec":
        return cls("inverse_power", s=s)

    # metadata -------------------------------------------------------------
    @property
    def finite_at_zero(self) -> bool:
        return self.kind in ("morse", "gaussian", "pure_exponential")

    @property
    def power_terms(self) -> tuple[tuple[float, float], ...]:
        """Inverse-power pieces (coefficient, exponent in r)."""
        if self.kind == "lennard_jones":
            return ((1.0, 12.0), (-2.0, 6.0))
        if self.kind == "inverse_power":
            return ((1.0, float(self.s)),)
        if self.kind == "modified_morse":
            return ((float(self.beta), 2.0 * float(self.p)),)
        return ()

    @property
    def has_exponential_part(self) -> bool:
        return self.kind in ("morse", "modified_morse", "pure_exponential", "gaussian")

    def decay_exponent(self) -> float:
        """Slowest power of 1/r among the inverse-power pieces (inf if none)."""
        terms = self.power_terms
        return min(s for _, s in terms) if terms else math.inf

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        for name in ("alpha", "r0", "beta", "p", "s"):
            v = getattr(self, name)
            if v is not None and not (self.kind == "modified_morse" and name == "r0"):
                out[name] = v
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "PotentialSpec":
        obj = dict(obj)
        try:
            kind = obj.pop("kind")
        except KeyError:
            raise DomainError("potential JSON needs a 'kind'") from None
        unknown = set(obj) - {"alpha", "r0", "beta", "p", "s"}
        if unknown:
            raise DomainError(f"unknown potential fields: {sorted(unknown)}")
        return cls(kind, **{k: float(v) for k, v in obj.items()})

    def label(self) -> str:
        params = ", ".join(f"{k}={v:g}" for k, v in self.to_json().items() if k != "kind")
        return f"{self.kind}({params})"


def _morse_parts(spec: PotentialSpec):
    alpha = float(spec.alpha)
    r0 = 1.0 if spec.kind == "modified_morse" else float(spec.r0)
    return alpha, math.exp(alpha * r0)


def exponential_part(spec: PotentialSpec, r2):
    """The non-power piece of f(r2) (zero for pure power laws)."""
    r2 = np.asarray(r2, dtype=float)
    if spec.kind in ("morse", "modified_morse"):
        alpha, c = _morse_parts(spec)
        r = np.sqrt(r2)
        e = np.exp(-alpha * r)
        return c * e * e - 2.0 * e
    if spec.kind == "pure_exponential":
        return np.exp(-spec.beta * np.sqrt(r2))
    if spec.kind == "gaussian":
        return np.exp(-math.pi * spec.alpha * r2)
    return np.zeros_like(r2)


def power_part(spec: PotentialSpec, r2):
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    for c, s in spec.power_terms:
        out = out + c * r2 ** (-0.5 * s)
    return out


def value_sq(spec: PotentialSpec, r2):
    """f(r2) with r2 the squared distance; vectorized over arrays."""
    arr = np.asarray(r2, dtype=float)
    if np.any(arr < 0):
        raise DomainError("squared distance must be nonnegative")
    if np.any(arr == 0) and not spec.finite_at_zero:
        raise DomainError(f"{spec.kind} is singular at r = 0")
    with np.errstate(divide="ignore"):
        out = exponential_part(spec, arr) + power_part(spec, arr)
    return out if out.ndim else float(out)


def derivatives_sq(spec: PotentialSpec, r2, exp_only: bool = False):
    """(f'(r2), f''(r2)) with respect to the squared distance, r2 > 0.

    `exp_only` drops the inverse-power pieces.
    """
    r2 = np.asarray(r2, dtype=float)
    d1 = np.zeros_like(r2)
    d2 = np.zeros_like(r2)
    if spec.kind in ("morse", "modified_morse"):
        alpha, c = _morse_parts(spec)
        r = np.sqrt(r2)
        e = np.exp(-alpha * r)
        # g(r) = c e^{-2ar} - 2 e^{-ar}; f(r2) = g(sqrt r2)
        g1 = -2.0 * alpha * c * e * e + 2.0 * alpha * e
        g2 = 4.0 * alpha**2 * c * e * e - 2.0 * alpha**2 * e
        d1 = d1 + g1 / (2.0 * r)
        d2 = d2 + (g2 - g1 / r) / (4.0 * r2)
    elif spec.kind == "pure_exponential":
        b = spec.beta
        r = np.sqrt(r2)
        e = np.exp(-b * r)
        g1, g2 = -b * e, b * b * e
        d1 = d1 + g1 / (2.0 * r)
        d2 = d2 + (g2 - g1 / r) / (4.0 * r2)
    elif spec.kind == "gaussian":
        k = math.pi * spec.alpha
        e = np.exp(-k * r2)
        d1 = d1 - k * e
        d2 = d2 + k * k * e
    for c, s in () if exp_only else spec.power_terms:
        h = 0.5 * s
        d1 = d1 - c * h * r2 ** (-h - 1)
        d2 = d2 + c * h * (h + 1) * r2 ** (-h - 2)
    return d1, d2


def exponential_majorant(spec: PotentialSpec, r):
    """Nonincreasing M(r) >= |exponential part at t^2| for every t >= r."""
    r = np.asarray(r, dtype=float)
    if spec.kind in ("morse", "modified_morse"):
        alpha, c = _morse_parts(spec)
        return c * np.exp(-2.0 * alpha * r) + 2.0 * np.exp(-alpha * r)
    if spec.kind == "pure_exponential":
        return np.exp(-spec.beta * r)
    if spec.kind == "gaussian":
        return np.exp(-math.pi * spec.alpha * r * r)
    return np.zeros_like(r)


def tail_majorant(spec: PotentialSpec, r):
    """Nonincreasing M(r) with |f(t^2)| <= M(r) for all t >= r."""
    if np.any(np.asarray(r) <= 0):
        raise DomainError("tail_majorant needs r > 0")
    r = np.asarray(r, dtype=float)
    out = exponential_majorant(spec, r)
    for c, s in spec.power_terms:
        out = out + abs(c) * r ** (-s)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Laplace representation of the Morse potential


def morse_inverse_laplace(y, alpha: float, r0: float):
    """Density mu_f(y) with f(r) = int_0^inf exp(-r y) mu_f(y) dy."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise DomainError("mu_f is defined for y > 0")
    out = alpha * y**-1.5 / math.sqrt(math.pi) * (
        math.exp(alpha * r0) * np.exp(-alpha**2 / y) - np.exp(-alpha**2 / (4.0 * y)))
    return out if out.ndim else float(out)


def morse_laplace_zero(alpha: float, r0: float) -> float:
    """mu_f changes sign exactly at y = 3 alpha / (4 r0)."""
    return 3.0 * alpha / (4.0 * r0)


def laplace_selfcheck(spec: PotentialSpec, r2: float, epsabs: float = 1e-14,
                      epsrel: float = 1e-12) -> float:
    """Integrate exp(-r2 t) mu_f(t) over (0, inf) after t = u / (1 - u)."""
    if spec.kind != "morse":
        raise DomainError("laplace_selfcheck is available for the Morse potential only")
    if not r2 > 0:
        raise DomainError("r2 must be positive")
    alpha, r0 = float(spec.alpha), float(spec.r0)
    k = alpha / math.sqrt(math.pi)

    def integrand(u):
        if u <= 0.0 or u >= 1.0:
            return 0.0
        t = u / (1.0 - u)
        jac = 1.0 / (1.0 - u) ** 2
        # combine exponents to avoid overflow of c * exp(-a^2/t)
        a = math.exp(alpha * r0 - alpha**2 / t - r2 * t)
        b = math.exp(-alpha**2 / (4.0 * t) - r2 * t)
        return k * t**-1.5 * (a - b) * jac

    # the two exponentials peak near t = alpha/sqrt(r2) and alpha/(2 sqrt(r2))
    peaks = sorted({alpha / math.sqrt(r2), alpha / (2 * math.sqrt(r2))})
    pts = [p / (1 + p) for p in peaks]
    val, err = integrate.quad(integrand, 0.0, 1.0, points=pts, limit=500,
                              epsabs=epsabs, epsrel=epsrel)
    if not math.isfinite(val) or err > 1e-6 * max(abs(val), 1e-300):
        raise NonConvergenceError(f"Laplace quadrature did not converge (err={err:g})")
    return float(val)
