"""Command-line front end: ``ellrec eval``, ``ellrec verify`` and ``ellrec list``.

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 numerical guard.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, fay, identities, integrals, lattice, suites
from .errors import EllrecError, NumericalGuard
from .special import DEFAULT_POLICY, elliptic_gamma, pochhammer_inf, psi, theta, triple_gamma

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    target: str | None = None
    params: dict = field(default_factory=dict)
    trials: int | None = None
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    nodes: int | None = None
    long: bool = False
    out: Path | None = None
    workers: int = 1
    identities: list = field(default_factory=list)
    level: str | None = None


# --- parameter decoding ---------------------------------------------------


def as_complex(value) -> complex:
    """A number or a ``[re, im]`` pair."""
    if isinstance(value, bool):
        raise UsageError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise UsageError(f"expected a number or [re, im], got {value!r}")


def as_complex_list(value) -> list[complex]:
    if not isinstance(value, list):
        raise UsageError(f"expected a list of numbers or [re, im] pairs, got {value!r}")
    return [as_complex(v) for v in value]


def parse_assignments(items: list[str]) -> dict:
    """Decode ``key=JSON`` pairs; ``key=other`` copies another key's value."""
    raw, aliases = {}, {}
    for item in items:
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise UsageError(f"expected key=JSON, got {item!r}")
        try:
            raw[key] = json.loads(text)
        except json.JSONDecodeError:
            if text.isidentifier():
                aliases[key] = text
            else:
                raise UsageError(f"value for {key!r} is not valid JSON: {text!r}") from None
    return {"values": raw, "aliases": aliases}


def resolve_params(defaults: dict, file_params: dict, inline: dict) -> dict:
    params = dict(defaults)
    params.update(file_params)
    params.update(inline["values"])
    for key, other in inline["aliases"].items():
        if other not in params:
            raise UsageError(f"{key}={other}: no parameter named {other!r}")
        params[key] = params[other]
    return params


def _kernel(name: str, p) -> fay.PairKernel:
    if name == "psi":
        return fay.PairKernel.theta(p)
    if name == "linear":
        return fay.PairKernel.linear()
    if name == "sincosh":
        return suites.epsilon_kernel()
    raise UsageError(f"unknown kernel {name!r}; choose psi, linear or sincosh")


def _seam(name):
    if name in (None, "none"):
        return None
    if name == "exp_square":
        return suites.seam_function()
    raise UsageError(f"unknown seam function {name!r}; choose exp_square or none")


def _measure(data) -> fay.DiscreteMeasure:
    try:
        return fay.DiscreteMeasure(
            tuple(as_complex(x) for x, _ in data), tuple(as_complex(w) for _, w in data)
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, EllrecError):
            raise
        raise UsageError(f"measure must be a list of [x, w] pairs: {exc}") from None


def _default_measure() -> list:
    return suites.sample_measure(np.random.default_rng(0)).to_json()


def _spec(params) -> integrals.QuadratureSpec:
    return integrals.QuadratureSpec(nodes=int(params["nodes"]),
                                    workers=int(params.get("workers", 1)),
                                    allow_long=bool(params.get("long", False)))


def _series_meta() -> dict:
    return {"target_eps": DEFAULT_POLICY.target_eps}


def _integral_meta(res: integrals.IntegralResult) -> dict:
    return {"dimension": res.n, "nodes": res.nodes_used,
            "convergence_estimate": res.convergence_estimate}


def _eval_theta(a):
    return theta(as_complex(a["x"]), as_complex(a["p"])), _series_meta()


def _eval_gamma(a):
    return elliptic_gamma(as_complex(a["x"]), as_complex(a["p"]), as_complex(a["q"])), \
        _series_meta()


def _eval_gamma_plus(a):
    value = triple_gamma(as_complex(a["x"]), as_complex(a["p"]), as_complex(a["q"]),
                         as_complex(a["t"]))
    return value, _series_meta()


def _eval_psi(a):
    return psi(as_complex(a["x"]), as_complex(a["y"]), as_complex(a["p"])), _series_meta()


def _eval_pochhammer(a):
    return pochhammer_inf(as_complex(a["a"])), _series_meta()


def _eval_integral(a):
    n = int(a["n"])
    if n == 0:
        return 1.0 + 0.0j, {"dimension": 0, "nodes": 0, "convergence_estimate": None}
    res = integrals.integrate_II(n, as_complex_list(a["t_params"]), as_complex(a["p"]),
                                 as_complex(a["q"]), as_complex(a["t"]), _spec(a))
    return res.value, _integral_meta(res)


def _eval_tilde_integral(a):
    if "phi" in a:
        phi = lattice.TorusPoint.from_json(a["phi"])
    else:
        params = lattice.EllipticParams.from_nomes(
            as_complex(a["p"]), as_complex(a["q"]), as_complex(a["t"]))
        phi = lattice.torus_point_at_level(params, as_complex_list(a["free_logs"]),
                                           int(a["level"]))
    res = integrals.tilde_II(phi, _spec(a))
    meta = _integral_meta(res)
    meta["phi"] = phi.to_json()
    return res.value, meta


def _eval_f_n(a):
    z = as_complex_list(a["z"])
    return identities.f_n(as_complex(a["u0"]), z, as_complex(a["p"])), \
        {"n": len(z), **_series_meta()}


def _eval_g_n(a):
    z = as_complex_list(a["z"])
    value = identities.g_n(as_complex_list(a["u"]), z, as_complex(a["p"]), as_complex(a["t"]))
    return value, {"n": len(z), **_series_meta()}


def _eval_tau_det(a):
    p = as_complex(a["p"])
    value = fay.tau_det(int(a["n"]), _measure(a["measure"]), _kernel(a["kernel1"], p),
                        _kernel(a["kernel2"], p), as_complex_list(a["a"]),
                        as_complex_list(a["b"]))
    return value, {"atoms": len(a["measure"])}


def _eval_tau_pf(a):
    p = as_complex(a["p"])
    value = fay.tau_pf(int(a["n"]), _measure(a["measure"]), _kernel(a["eps"], p),
                       _kernel(a["kernel"], p), _seam(a["seam"]), as_complex_list(a["a"]))
    return value, {"atoms": len(a["measure"])}


_NOMES = {"p": [0.3, 0.1], "q": [0.25, -0.05], "t": [0.4, 0.1]}
_T_PARAMS = [[0.5, 0.1], [0.55, -0.1], [0.6, 0.05], [0.45, 0.0],
             [0.5, -0.05], [0.4, 0.2], [0.35, -0.1], [0.3, 0.1]]

_PHASES = [0.3, -0.3, 0.6, -0.6, 0.9, -0.9, 0.0]

FUNCTIONS: dict[str, tuple[Callable, Callable[[], dict]]] = {
    "theta": (_eval_theta, lambda: {"x": [0.5, 0.2], "p": _NOMES["p"]}),
    "gamma": (_eval_gamma, lambda: {"x": [0.5, 0.2], "p": _NOMES["p"], "q": _NOMES["q"]}),
    "gamma_plus": (_eval_gamma_plus, lambda: {"x": [0.5, 0.2], **_NOMES}),
    "psi": (_eval_psi, lambda: {"x": [0.5, 0.2], "y": [1.3, -0.4], "p": _NOMES["p"]}),
    "pochhammer": (_eval_pochhammer, lambda: {"a": [0.5, 0.1]}),
    "integral": (_eval_integral, lambda: {"n": 1, "t_params": _T_PARAMS, "nodes": 64,
                                          **_NOMES}),
    "tilde_integral": (_eval_tilde_integral,
                       lambda: {"level": 1, "free_logs": [[-0.2, ph] for ph in _PHASES],
                                "nodes": 64, **_NOMES}),
    "f_n": (_eval_f_n, lambda: {"u0": [0.9, 0.2], "z": [[0.7, 0.1], [1.2, -0.3]],
                                "p": _NOMES["p"]}),
    "g_n": (_eval_g_n, lambda: {"u": [[0.6, 0.1], [0.8, -0.2], [1.1, 0.3], [0.7, 0.4], [1.3, -0.1]],
                                "z": [[0.7, 0.1], [1.2, -0.3]], "p": _NOMES["p"],
                                "t": _NOMES["t"]}),
    "tau_det": (_eval_tau_det, lambda: {"n": 2, "measure": _default_measure(),
                                        "kernel1": "psi", "kernel2": "linear", "a": [],
                                        "b": [], "p": _NOMES["p"]}),
    "tau_pf": (_eval_tau_pf, lambda: {"n": 2, "measure": _default_measure(), "eps": "sincosh",
                                      "kernel": "psi", "seam": "exp_square", "a": [],
                                      "p": _NOMES["p"]}),
}


# --- commands -------------------------------------------------------------


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        print(text)
    else:
        out.write_text(text + "\n")


def cmd_eval(config: RunConfig, inline: dict) -> int:
    name = config.target
    if name not in FUNCTIONS:
        raise UsageError(f"unknown function {name!r}; known: {', '.join(FUNCTIONS)}")
    fn, defaults = FUNCTIONS[name]
    params = resolve_params(defaults(), config.params, inline)
    try:
        value, meta = fn(params)
    except KeyError as exc:
        if isinstance(exc, EllrecError):
            raise
        raise UsageError(f"{name} needs parameter {exc.args[0]!r}") from None
    report = {"function": name, "value": complex(value), "params": params,
              "metadata": meta, "artifact_version": __version__}
    _emit(suites.dumps(report), config.out)
    return EXIT_PASS


def parse_tolerances(items: list[str]) -> dict[str, float]:
    out = {}
    for item in items:
        key, sep, text = item.rpartition("=")
        key = key if sep else "*"
        try:
            val = float(text)
        except ValueError:
            raise UsageError(f"--tol expects a float or id=float, got {item!r}") from None
        if not val >= 0.0:
            raise UsageError(f"tolerance must be non-negative, got {item!r}")
        if key != "*":
            suites.entry(key)
        out[key] = val
    return out


def _family_tolerance(family: str, level) -> float:
    if family == "linear_ld":
        n = 1 if level is None else int(level)
        return suites.TOLERANCES.get(f"linear_ld_n{n}", suites.TOLERANCES["linear_ld_n3"])
    if family == "gtof_n4":
        return suites.TOLERANCES["gtof_n4"]
    return suites.TOLERANCES[f"bilinear_{family}"]


def cmd_verify_family(config: RunConfig) -> int:
    family = suites.FAMILY_ALIASES.get(config.target, config.target)
    level = config.level
    start = time.perf_counter()
    reports = suites.run_family(family, level, config.seed, config.trials or 1, config.nodes,
                                config.long, config.workers)
    wall = time.perf_counter() - start
    tol = _family_tolerance(family, level)
    override = config.tolerances.get("*")
    if override is not None:
        if override > tol and not config.long:
            raise ValueError(f"tolerance may only be tightened ({override:g} > {tol:g}) "
                             "without --long")
        tol = override
    passed = all(r.exploratory or suites.passes(r.residual, tol) for r in reports)
    body = {
        "artifact_version": __version__,
        "family": family,
        "level": level,
        "seed": config.seed,
        "config": {"trials": config.trials or 1, "nodes": config.nodes, "long": config.long},
        "tolerance": tol,
        "reports": [r.to_json() for r in reports],
        "passed": passed,
        "timing": {"total": wall, "per_report": [r.wall_time for r in reports]},
    }
    _emit(suites.dumps(body), config.out)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_verify(config: RunConfig) -> int:
    if config.identities:
        name, ids = "custom", config.identities
    elif config.target is not None:
        name, ids = config.target, None
    else:
        raise UsageError("verify needs --suite, --identity or --family")
    report = suites.run_suite(name, config.seed, config.trials, config.nodes, config.long,
                              config.workers, ids, config.tolerances)
    _emit(suites.dumps(report.to_json()), config.out)
    failed = [o.entry.identity_id for o in report.outcomes if not o.passed]
    summary = "all pass" if not failed else f"FAILED: {', '.join(failed)}"
    print(f"{name}: {len(report.outcomes)} identities, {summary} "
          f"({report.wall_time:.2f} s)", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_list(as_json: bool) -> int:
    rows = [(e.identity_id, e.anchor, e.long, e.exploratory) for e in suites.CATALOG]
    if as_json:
        print(suites.dumps([{"identity_id": i, "anchor": a, "long": lg, "exploratory": ex}
                            for i, a, lg, ex in rows]))
        return EXIT_PASS
    width = max(len(i) for i, *_ in rows)
    for ident, anchor, lg, ex in rows:
        flags = "".join(f" [{f}]" for f, on in (("long", lg), ("exploratory", ex)) if on)
        print(f"{ident:<{width}}  {anchor}{flags}")
    return EXIT_PASS


# --- argument parsing -----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ellrec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ellrec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="evaluate one function")
    ev.add_argument("function", help=", ".join(FUNCTIONS))
    ev.add_argument("assignments", nargs="*", metavar="key=JSON",
                    help="parameter values; complex numbers as [re, im]")
    ev.add_argument("--params", type=Path, help="JSON object with parameter values")
    ev.add_argument("--out", type=Path)

    ve = sub.add_parser("verify", help="run identity checks")
    what = ve.add_mutually_exclusive_group(required=True)
    what.add_argument("--suite", metavar="SUITE", help=", ".join(sorted(suites.SUITES)))
    what.add_argument("--identity", action="append", metavar="ID")
    what.add_argument("--family", metavar="FAMILY",
                      help="single recurrence family: " + ", ".join(suites.FAMILIES))
    ve.add_argument("--level", help="dimension or center level for --family")
    ve.add_argument("--trials", type=int)
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--tol", action="append", default=[], metavar="[ID=]TOL")
    ve.add_argument("--nodes", type=int)
    ve.add_argument("--long", action="store_true", help="allow high-dimensional quadratures")
    ve.add_argument("--workers", type=int, default=1)
    ve.add_argument("--out", type=Path)

    ls = sub.add_parser("list", help="list catalog identities")
    ls.add_argument("--json", action="store_true")
    return parser


def _structured_error(exc: BaseException) -> str:
    message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    return json.dumps({"error": type(exc).__name__, "message": message})


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    # eval assignments may also follow --params / --out
    if extra and (args.command != "eval" or any(x.startswith("-") for x in extra)):
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    if extra:
        args.assignments = list(args.assignments) + extra
    try:
        if args.command == "list":
            return cmd_list(args.json)
        if args.command == "eval":
            file_params = {}
            if args.params is not None:
                file_params = json.loads(args.params.read_text())
                if not isinstance(file_params, dict):
                    raise UsageError("--params file must hold a JSON object")
            config = RunConfig("eval", args.function, file_params, out=args.out)
            return cmd_eval(config, parse_assignments(args.assignments))
        if args.trials is not None and args.trials < 1:
            raise UsageError("--trials must be >= 1")
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        if args.level is not None and args.family is None:
            raise UsageError("--level only applies to --family")
        config = RunConfig(
            "verify", args.family or args.suite, trials=args.trials, seed=args.seed,
            tolerances=parse_tolerances(args.tol), nodes=args.nodes, long=args.long,
            out=args.out, workers=args.workers, identities=args.identity or [],
            level=args.level,
        )
        if args.family is not None:
            return cmd_verify_family(config)
        return cmd_verify(config)
    except NumericalGuard as exc:
        print(_structured_error(exc), file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, EllrecError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(_structured_error(exc), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
