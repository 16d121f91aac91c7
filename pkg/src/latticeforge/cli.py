"""Command-line front end (`latticeforge <command> ...`).

Exit status: 0 on success, 2 on bad arguments or domain errors, 3 when a
numerical procedure does not converge.  Errors are written to stderr as one
JSON object.  Settings resolve as flags > JSON config file > defaults.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial

import numpy as np

from . import analysis, calculus, optimize, reproduce
from .errors import DomainError, LatticeForgeError
from .lattice import lattice_from_json, named_structure
from .potentials import PotentialSpec
from .sums import SumTolerance, epstein_zeta, exp_sum, lattice_sum, theta

COMMANDS = ("energy", "theta", "zeta", "expsum", "hessian", "stationarity", "eutaxy",
            "scan-rhombic", "scan-rect", "minimize2d", "phase2d", "minimize3d", "dilate",
            "compare3d", "thresholds", "conditions", "corollary", "modbound", "crossing",
            "reproduce")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    potential: dict = field(default_factory=lambda: {"kind": "morse", "alpha": 6.0, "r0": 1.0})
    a_min: float = 1.0
    a_max: float = 1.5
    resolution: int = 41
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    grad_tol: float = 1e-8
    output: str | None = None
    format: str = "json"
    threads: int = 1
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise DomainError(f"unknown command {self.command!r}")
        for name in ("rel_tol", "abs_tol", "grad_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.resolution < 2:
            raise DomainError("resolution must be at least 2")
        if self.threads < 1:
            raise DomainError("threads must be at least 1")
        if self.format not in ("csv", "json"):
            raise DomainError("format must be csv or json")
        PotentialSpec.from_json(self.potential)
        return self

    @property
    def spec(self) -> PotentialSpec:
        return PotentialSpec.from_json(self.potential)

    @property
    def tol(self) -> SumTolerance:
        return SumTolerance(rel_tol=self.rel_tol, abs_tol=self.abs_tol)

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        return cls(**obj)


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("potential")
    g.add_argument("--potential", help="morse, lj, modified_morse, pure_exponential, gaussian, "
                                       "inverse_power")
    g.add_argument("--alpha", type=float)
    g.add_argument("--r0", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--p", type=float)
    g.add_argument("--s", type=float)
    g = p.add_argument_group("lattice")
    g.add_argument("--lattice", help="named lattice or structure (hcp), or a JSON file")
    g.add_argument("--area", type=float)
    g.add_argument("--volume", type=float)
    g.add_argument("--y", type=float, help="rectangular parameter y >= 1")
    g.add_argument("--theta", type=float, help="rhombic angle in degrees")
    g = p.add_argument_group("run")
    g.add_argument("--a-min", type=float, dest="a_min")
    g.add_argument("--a-max", type=float, dest="a_max")
    g.add_argument("--resolution", type=int)
    g.add_argument("--rel-tol", type=float, dest="rel_tol")
    g.add_argument("--abs-tol", type=float, dest="abs_tol")
    g.add_argument("--grad-tol", type=float, dest="grad_tol")
    g.add_argument("--output", "-o")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--threads", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--dump-config", action="store_true", dest="dump_config",
                   help="print the resolved configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="latticeforge", description="Morse-type lattice energies")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name == "theta":
            p.add_argument("--route", choices=("auto", "direct", "dual"), default="auto")
        if name == "zeta":
            p.add_argument("--exponent", type=float, default=None, help="zeta exponent s > d")
        if name == "eutaxy":
            p.add_argument("--max-radius", type=float, default=4.0, dest="max_radius",
                           help="in units of the shortest vector length")
        if name == "compare3d":
            p.add_argument("--alphas", type=float, nargs="+")
        if name in ("thresholds", "crossing"):
            p.add_argument("--precision", type=float, default=1e-3)
        if name == "reproduce":
            p.add_argument("target", choices=sorted(reproduce.TARGETS))
        if name == "dilate":
            p.add_argument("--structure", default=None)
    return parser


_POTENTIAL_FLAGS = ("alpha", "r0", "beta", "p", "s")


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if ns.config:
        try:
            with open(ns.config) as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config: {exc}") from None
        cfg = RunConfig.from_json({**asdict(cfg), **obj})
    updates = {k: getattr(ns, k) for k in ("a_min", "a_max", "resolution", "rel_tol", "abs_tol",
                                           "grad_tol", "output", "format", "threads", "seed")
               if getattr(ns, k, None) is not None}
    if "threads" not in updates and ns.config is None and os.environ.get("LATTICEFORGE_THREADS"):
        try:
            updates["threads"] = int(os.environ["LATTICEFORGE_THREADS"])
        except ValueError:
            raise DomainError("LATTICEFORGE_THREADS must be an integer") from None
    pot = dict(cfg.potential)
    if ns.potential is not None:
        pot = {"kind": ns.potential}
    for k in _POTENTIAL_FLAGS:
        v = getattr(ns, k, None)
        if v is not None:
            pot[k] = v
    if ns.potential is not None and pot["kind"] == "morse":
        pot.setdefault("r0", 1.0)
    updates["potential"] = PotentialSpec.from_json(pot).to_json()
    updates["command"] = ns.command
    return replace(cfg, **updates).validate()


def _structure(ns, cfg: RunConfig, default_dim: int = 2):
    name = ns.lattice or ("triangular" if default_dim == 2 else "fcc")
    if name.endswith(".json"):
        with open(name) as fh:
            return lattice_from_json(json.load(fh))
    size = ns.area if ns.area is not None else ns.volume
    size = 1.0 if size is None else size
    kw = {}
    if ns.y is not None:
        kw["y"] = ns.y
    if ns.theta is not None:
        kw["theta"] = math.radians(ns.theta)
    return named_structure(name, size, **kw)


# ---------------------------------------------------------------------------
# commands


def _alpha(ns, cfg):
    a = ns.alpha if ns.alpha is not None else cfg.spec.alpha
    if a is None:
        raise DomainError("--alpha is required")
    return a


def _r0(ns):
    return 1.0 if ns.r0 is None else ns.r0


def cmd_energy(ns, cfg):
    st = _structure(ns, cfg)
    spec = cfg.spec
    return lattice_sum(st, spec, spec.kind == "morse", cfg.tol).to_json()


def cmd_theta(ns, cfg):
    return theta(_structure(ns, cfg), _alpha(ns, cfg), ns.route, cfg.tol).to_json()


def cmd_zeta(ns, cfg):
    s = ns.exponent if ns.exponent is not None else ns.s
    if s is None:
        raise DomainError("--exponent is required")
    return epstein_zeta(_structure(ns, cfg), s, cfg.tol).to_json()


def cmd_expsum(ns, cfg):
    return exp_sum(_structure(ns, cfg), _alpha(ns, cfg), tol=cfg.tol).to_json()


def cmd_hessian(ns, cfg):
    st = _structure(ns, cfg)
    return calculus.hessian_fixed_density(cfg.spec, calculus.params_of(st), tol=cfg.tol).to_json()


def _shape(ns):
    if ns.lattice is None:
        return "triangular"
    if ns.lattice in ("rectangular", "rhombic"):
        st = _structure(ns, None)
        return st
    return ns.lattice


def cmd_stationarity(ns, cfg):
    sizes = np.linspace(cfg.a_min, cfg.a_max, cfg.resolution)
    rows = calculus.volume_stationarity_scan(cfg.spec, _shape(ns), sizes, cfg.grad_tol, cfg.tol)
    return _Table(calculus.ScanRow.CSV_HEADER + ",stationary",
                  [r.csv_row() + f",{r.stationary}" for r in rows],
                  {"rows": [r.__dict__ for r in rows]})


def cmd_eutaxy(ns, cfg):
    st = _structure(ns, cfg)
    from .lattice import shortest_vector_length
    layers = calculus.eutaxy_check(st, ns.max_radius * shortest_vector_length(st) * (1 + 1e-9))
    return {"layers": [l.__dict__ for l in layers], "all_pass": all(l.passes for l in layers)}


def cmd_scan_rhombic(ns, cfg):
    A = ns.area if ns.area is not None else 1.0
    sc = optimize.scan_rhombic(cfg.spec, A, n=max(cfg.resolution, 2), tol=cfg.tol)
    return _Table("theta_deg,energy", sc.csv("theta").splitlines()[1:], _scan_json(sc))


def cmd_scan_rect(ns, cfg):
    A = ns.area if ns.area is not None else 1.0
    sc = optimize.scan_rectangular(cfg.spec, A, n=max(cfg.resolution, 2), tol=cfg.tol)
    return _Table("y,energy", sc.csv("y").splitlines()[1:], _scan_json(sc))


def _scan_json(sc):
    return {"argmin": sc.argmin, "min_value": sc.min_value, "interior": sc.interior}


def cmd_minimize2d(ns, cfg):
    A = ns.area if ns.area is not None else 1.0
    r = optimize.minimize_2d_fixed_area(cfg.spec, A, optimize.MultiStart(seed=cfg.seed,
                                                                         grad_tol=cfg.grad_tol),
                                        cfg.tol)
    shape, param = optimize.classify_shape(r.params.x, r.params.y)
    return {"A": A, "x": r.params.x, "y": r.params.y, "shape": shape, "param": param,
            "value": r.value, "gradient_norm": r.gradient_norm, "converged": r.converged,
            "evaluations": r.evaluations}


def cmd_phase2d(ns, cfg):
    pd = optimize.phase_diagram_2d(cfg.spec, cfg.a_min, cfg.a_max, cfg.resolution,
                                   config=optimize.MultiStart(seed=cfg.seed), tol=cfg.tol,
                                   workers=cfg.threads)
    return _Table(optimize.PhasePoint.CSV_HEADER, [p.csv_row() for p in pd.points], pd.to_json())


def cmd_minimize3d(ns, cfg):
    V = ns.volume if ns.volume is not None else 1.0
    r = optimize.minimize_3d_fixed_volume(cfg.spec, V, seed=cfg.seed, tol=cfg.tol,
                                          grad_tol=cfg.grad_tol)
    return {"V": V, "gram": r.params.gram().tolist(), "value": r.value,
            "gradient_norm": r.gradient_norm, "converged": r.converged, **r.info}


def cmd_dilate(ns, cfg):
    st = _structure(ns, cfg, 3) if ns.structure is None else named_structure(ns.structure)
    r = optimize.minimize_dilation(st, potential=cfg.spec, tol=cfg.tol)
    return {"lambda": r.params, "value": r.value, "derivative": r.gradient_norm,
            "tail_bound": r.info["tail_bound"]}


def _compare_one(alpha, r0, tol):
    return analysis.compare_3d(alpha, r0, tol)


def cmd_compare3d(ns, cfg):
    alphas = ns.alphas or [_alpha(ns, cfg)]
    job = partial(_compare_one, r0=_r0(ns), tol=cfg.tol)
    rows = _map(job, alphas, cfg.threads)
    return _Table(analysis.Ordering3D.CSV_HEADER, [r.csv_row() for r in rows],
                  {"orderings": [r.to_json() for r in rows]})


def cmd_thresholds(ns, cfg):
    return analysis.bracket_alpha_thresholds(ns.precision, tol=cfg.tol).to_json()


def cmd_conditions(ns, cfg):
    return analysis.c1_c2_interval(_alpha(ns, cfg), _r0(ns)).to_json()


def cmd_corollary(ns, cfg):
    return analysis.corollary_bounds(_alpha(ns, cfg), _r0(ns)).to_json()


def cmd_modbound(ns, cfg):
    if ns.beta is None or ns.p is None:
        raise DomainError("--beta and --p are required")
    return {"A_max": analysis.modified_morse_bound(_alpha(ns, cfg), ns.beta, ns.p)}


def cmd_crossing(ns, cfg):
    V = ns.volume if ns.volume is not None else 1.0
    return {"volume": V, "alpha_star": analysis.exp_sum_crossing(V, precision=ns.precision)}


def cmd_reproduce(ns, cfg):
    fn = reproduce.TARGETS[ns.target]
    rows = fn(workers=cfg.threads) if ns.target == "table2" else fn()
    return _Table(reproduce.Check.CSV_HEADER, [r.csv_row() for r in rows],
                  {"target": ns.target, "all_pass": all(r.passed for r in rows),
                   "rows": [r.__dict__ for r in rows]}, force_csv=True)


# ---------------------------------------------------------------------------
# output


@dataclass
class _Table:
    header: str
    rows: list
    payload: dict
    force_csv: bool = False


def _map(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _render(result, fmt: str) -> str:
    if isinstance(result, _Table):
        if fmt == "csv" or result.force_csv:
            return "\n".join([result.header] + list(result.rows)) + "\n"
        result = result.payload
    return json.dumps(_jsonable(result), indent=2, sort_keys=True, allow_nan=True) + "\n"


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("a command is required")
        cfg = resolve_config(ns)
        if ns.dump_config:
            sys.stdout.write(json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n")
            return 0
        result = HANDLERS[ns.command](ns, cfg)
        text = _render(result, cfg.format)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except LatticeForgeError as exc:
        return _fail(type(exc).__name__, str(exc), exc.code)
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), 2)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
