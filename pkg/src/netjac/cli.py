"""Command-line front end.

Every subcommand prints one JSON report on standard output::

    {"command": ..., "network_digest": ..., "inputs": {...},
     "results": {...}, "version": ..., "wall_time": ...}

Exit codes: 0 success, 1 analysis-negative outcome (no certificate, no
crossing, conditions not met, no oscillation, Newton failure), 2 usage,
file or parse errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .charpoly import (
    coefficient_expansion,
    expansion_summary,
    instability_certificate,
    p0_check,
)
from .dynamics import EquilibriumError, IntegrationError, detect_oscillation, find_equilibrium, integrate
from .kinetics import MMParams, RateFunction, RealizationError, Triple, realize_mm
from .network import Network, NetworkError, autocatalytic_reactions, load_network, positive_kernel
from .selections import (
    SelectionLimitError,
    SymbolError,
    cb_component,
    enumerate_all,
    enumerate_selections,
    parse_selection,
)
from .spectral import (
    HuntError,
    HuntOptions,
    PithmPreconditionError,
    assignment_from_keys,
    eigenvalues,
    hunt_from_integer_conditions,
    hunt_imaginary,
    inertia,
    pithm_conditions,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2

# built-in values for options that a --config file may preset
DEFAULTS: dict[str, Any] = {
    "jobs": 1,
    "max_selections": None,
    "tol_cross": 1e-10,
    "min_omega": 1e-6,
    "eps_min": 2.0**-40,
    "rtol": 1e-8,
    "atol": 1e-10,
    "t_max": 5000.0,
    "safety": 1.0,
    "transient_fraction": 0.5,
    "drift_threshold": 0.05,
}


class UsageError(Exception):
    pass


# -- JSON output ---------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    if x == int(x) and abs(x) < 1e17:
        return f"{x:.1f}"
    return format(x, ".17g")


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, complex):
        obj = {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cplx_list(zs) -> list[dict]:
    return [{"re": float(z.real), "im": float(z.imag)} for z in zs]


# -- argument helpers ------------------------------------------------------------


def _load_json_arg(text: str) -> Any:
    """Inline JSON, or the path of a JSON file."""
    text = text.strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"invalid inline JSON: {e}") from None
    try:
        with open(text) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise UsageError(f"file not found: {text}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"invalid JSON in {text}: {e}") from None


def _vector(net: Network, text: str, what: str) -> list[float]:
    text = text.strip()
    if text.startswith("{"):
        doc = json.loads(text)
        try:
            return [float(doc[s]) for s in net.species]
        except KeyError as e:
            raise UsageError(f"{what} is missing species {e}") from None
    vals = [float(v) for v in text.split(",") if v.strip()]
    if len(vals) != net.M:
        raise UsageError(f"{what} needs {net.M} values, got {len(vals)}")
    return vals


def _subset(net: Network, text: str) -> list[int]:
    out = []
    for name in text.split(","):
        name = name.strip()
        if name not in net.species_index:
            raise UsageError(f"unknown species {name!r}")
        out.append(net.species_index[name])
    return out


def _params(net: Network, args) -> tuple[MMParams, Optional[Triple]]:
    if bool(args.triple) == bool(args.params):
        raise UsageError("give exactly one of --triple or --params")
    if args.triple:
        t = Triple.from_dict(net, _load_json_arg(args.triple))
        return realize_mm(net, t, _opt(args, "safety")), t
    return MMParams.from_dict(net, _load_json_arg(args.params)), None


def _opt(args, name: str):
    """Explicit flag, else --config value, else built-in default."""
    v = getattr(args, name, None)
    if v is not None:
        return v
    return args._config.get(name, DEFAULTS.get(name))


# -- subcommands -----------------------------------------------------------------


def cmd_validate(net: Network, args) -> tuple[int, dict, dict]:
    kern = positive_kernel(net.S)
    res = {
        "species": list(net.species),
        "reactions": [str(r) for r in net.reactions],
        "M": net.M,
        "E": net.E,
        "stoichiometric_matrix": net.S,
        "reactivity_pattern": [net.position_key(p) for p in net.pattern],
        "autocatalytic": [net.position_key(p) for p in autocatalytic_reactions(net)],
        "positive_kernel": None if kern is None else [int(v) for v in kern],
    }
    return EXIT_OK, {}, res


def cmd_selections(net: Network, args) -> tuple[int, dict, dict]:
    limit = _opt(args, "max_selections")
    if args.subset:
        sels = enumerate_selections(net, _subset(net, args.subset), max_selections=limit)
        inputs = {"subset": args.subset}
    elif args.n is not None:
        if not 0 <= args.n <= net.M:
            raise UsageError(f"--n must lie in [0, {net.M}]")
        sels = enumerate_all(net, args.n, max_selections=limit)
        inputs = {"n": args.n}
    else:
        raise UsageError("give --n or --subset")
    if args.text:
        inputs["text"] = True
    rows = []
    for s in sels:
        comp = cb_component(net, s)
        rows.append(
            {
                "selection": s.format(net),
                "alpha": comp.alpha,
                "s_matrix": [list(r) for r in comp.s_matrix],
                "line": comp.format(net),
            }
        )
    return EXIT_OK, inputs, {"count": len(rows), "selections": rows}


def cmd_coeffs(net: Network, args) -> tuple[int, dict, dict]:
    degrees = [args.n] if args.n is not None else list(range(1, net.M + 1))
    if any(not 1 <= n <= net.M for n in degrees):
        raise UsageError(f"--n must lie in [1, {net.M}]")
    jobs, limit = _opt(args, "jobs"), _opt(args, "max_selections")
    out = [expansion_summary(coefficient_expansion(net, n, limit, jobs=jobs)) for n in degrees]
    return EXIT_OK, {"n": args.n, "jobs": jobs}, {"coefficients": out}


def cmd_p0(net: Network, args) -> tuple[int, dict, dict]:
    rep = p0_check(net, _opt(args, "max_selections"))
    return EXIT_OK, {}, rep.to_dict(net)


def cmd_instability(net: Network, args) -> tuple[int, dict, dict]:
    comp = instability_certificate(net, _opt(args, "max_selections"))
    if comp is None:
        return EXIT_NEGATIVE, {}, {"certificate": None}
    cert = {"n": comp.n, "selection": comp.selection.format(net), "alpha": comp.alpha}
    return EXIT_OK, {}, {"certificate": cert}


def _hunt_options(args) -> HuntOptions:
    return HuntOptions(
        tol_cross=_opt(args, "tol_cross"), min_omega=_opt(args, "min_omega"), eps_min=_opt(args, "eps_min")
    )


def cmd_hunt(net: Network, args) -> tuple[int, dict, dict]:
    if not (args.selection and args.stable and args.unstable):
        raise UsageError("hunt needs --selection, --stable and --unstable")
    sel = parse_selection(net, args.selection)
    rs = assignment_from_keys(net, _load_json_arg(args.stable))
    ru = assignment_from_keys(net, _load_json_arg(args.unstable))
    opts = _hunt_options(args)
    inputs = {
        "selection": sel.format(net),
        "r_stable": {net.position_key(p): v for p, v in sorted(rs.items())},
        "r_unstable": {net.position_key(p): v for p, v in sorted(ru.items())},
        "options": vars(opts),
    }
    try:
        res = hunt_imaginary(net, sel, rs, ru, opts)
    except HuntError as e:
        return EXIT_NEGATIVE, inputs, {"found": False, "reason": str(e)}
    return EXIT_OK, inputs, res.to_dict(net)


def cmd_pithm(net: Network, args) -> tuple[int, dict, dict]:
    if not (args.subset and args.j1 and args.j2):
        raise UsageError("pithm-check needs --subset, --j1 and --j2")
    sub = _subset(net, args.subset)
    if args.collection:
        collection = [parse_selection(net, c) for c in args.collection.split(";") if c.strip()]
    else:
        collection = list(enumerate_selections(net, sub, max_selections=_opt(args, "max_selections")))
    j1, j2 = parse_selection(net, args.j1), parse_selection(net, args.j2)
    inputs = {
        "subset": [net.species[m] for m in sorted(sub)],
        "collection": [s.format(net) for s in collection],
        "j1": j1.format(net),
        "j2": j2.format(net),
    }
    try:
        cond = pithm_conditions(net, sub, collection, j1, j2)
    except PithmPreconditionError as e:
        return EXIT_NEGATIVE, inputs, {"holds": False, "problems": e.problems}
    ok = cond["sign_condition"] and cond["j1_stable"] and cond["j2_unstable"]
    res = {
        "holds": ok,
        "sign_condition": cond["sign_condition"],
        "sign_violations": [s.format(net) for s in cond["sign_violations"]],
        "closure_size": cond["closure_size"],
        "j1_stable": cond["j1_stable"],
        "j2_unstable": cond["j2_unstable"],
    }
    if ok and args.hunt:
        opts = _hunt_options(args)
        inputs["options"] = vars(opts)
        try:
            res["hunt"] = hunt_from_integer_conditions(net, sub, collection, j1, j2, opts).to_dict(net)
        except HuntError as e:
            res["hunt"] = {"found": False, "reason": str(e)}
            return EXIT_NEGATIVE, inputs, res
    return (EXIT_OK if ok else EXIT_NEGATIVE), inputs, res


def _param_inputs(net: Network, p: MMParams, t: Optional[Triple]) -> dict:
    out = {"params": p.to_dict(net)}
    if t is not None:
        out["triple"] = t.to_dict(net)
    return out


def cmd_realize(net: Network, args) -> tuple[int, dict, dict]:
    if not args.triple:
        raise UsageError("realize needs --triple")
    t = Triple.from_dict(net, _load_json_arg(args.triple))
    safety = _opt(args, "safety")
    p = realize_mm(net, t, safety)
    rf = RateFunction(net, p)
    x = t.x_bar
    f, D = rf.rates(x), rf.derivatives(x)
    K = p.K
    check = {
        "equilibrium_flux": t.is_equilibrium_flux(net),
        "max_rate_error": float(np.max(np.abs(f - K * t.r_bar) / (K * t.r_bar))),
        "max_derivative_error": max(
            (abs(D[j, m] - t.r_prime[(j, m)]) / t.r_prime[(j, m)] for j, m in net.pattern), default=0.0
        ),
    }
    return EXIT_OK, {"triple": t.to_dict(net), "safety": safety}, {"params": p.to_dict(net), "check": check}


def cmd_equilibrium(net: Network, args) -> tuple[int, dict, dict]:
    p, t = _params(net, args)
    if args.guess:
        guess = _vector(net, args.guess, "--guess")
    elif t is not None:
        guess = t.x_bar.tolist()
    else:
        raise UsageError("equilibrium needs --guess when --params is given")
    inputs = _param_inputs(net, p, t)
    inputs["guess"] = guess
    try:
        x = find_equilibrium(net, p, guess)
    except EquilibriumError as e:
        return EXIT_NEGATIVE, inputs, {"converged": False, "reason": str(e)}
    rf = RateFunction(net, p)
    eigs = eigenvalues(rf.jacobian(x))
    res = {
        "converged": True,
        "x": dict(zip(net.species, x.tolist())),
        "residual": float(np.max(np.abs(rf.rhs(x)))),
        "eigenvalues": _cplx_list(eigs),
        "inertia": list(inertia(eigs).as_tuple()),
    }
    return EXIT_OK, inputs, res


def _simulate(net: Network, args):
    p, t = _params(net, args)
    if not args.x0:
        raise UsageError("--x0 is required")
    x0 = _vector(net, args.x0, "--x0")
    rtol, atol, t_max = _opt(args, "rtol"), _opt(args, "atol"), float(_opt(args, "t_max"))
    inputs = _param_inputs(net, p, t)
    inputs.update({"x0": x0, "t_max": t_max, "rtol": rtol, "atol": atol})
    traj = integrate(net, p, x0, t_max, rtol=rtol, atol=atol)
    if args.csv:
        traj.to_csv(args.csv)
        inputs["csv"] = args.csv
    return traj, inputs


def cmd_simulate(net: Network, args) -> tuple[int, dict, dict]:
    try:
        traj, inputs = _simulate(net, args)
    except IntegrationError as e:
        return EXIT_NEGATIVE, {}, {"completed": False, "reason": str(e), "t": e.t}
    res = {
        "completed": True,
        "final_time": float(traj.times[-1]),
        "final_state": dict(zip(net.species, traj.states[-1].tolist())),
        "samples": len(traj.times),
        "meta": traj.meta,
    }
    return EXIT_OK, inputs, res


def cmd_oscillation(net: Network, args) -> tuple[int, dict, dict]:
    try:
        traj, inputs = _simulate(net, args)
    except IntegrationError as e:
        return EXIT_NEGATIVE, {}, {"oscillating": False, "reason": str(e), "t": e.t}
    coord = args.coord or net.species[0]
    if coord not in net.species_index:
        raise UsageError(f"unknown species {coord!r}")
    tf, dt = _opt(args, "transient_fraction"), _opt(args, "drift_threshold")
    inputs.update({"coord": coord, "transient_fraction": tf, "drift_threshold": dt})
    rep = detect_oscillation(traj, coord, transient_fraction=tf, drift_threshold=dt)
    res = rep.to_dict()
    res["meta"] = traj.meta
    return (EXIT_OK if rep.oscillating else EXIT_NEGATIVE), inputs, res


COMMANDS = {
    "validate": (cmd_validate, "parse a network and report S, the reactivity pattern and structural checks"),
    "selections": (cmd_selections, "enumerate Child-Selections with their behavior coefficients"),
    "coeffs": (cmd_coeffs, "sign classes of the characteristic coefficients a_n"),
    "p0": (cmd_p0, "test P0(-) membership for all symbol values"),
    "instability": (cmd_instability, "find a selection certifying admissible instability"),
    "hunt": (cmd_hunt, "locate a purely imaginary crossing between two symbol assignments"),
    "pithm-check": (cmd_pithm, "check the integer conditions for a purely imaginary crossing"),
    "realize": (cmd_realize, "Michaelis-Menten constants realizing a triple (x, r, r')"),
    "equilibrium": (cmd_equilibrium, "Newton refinement of an equilibrium of a realized system"),
    "simulate": (cmd_simulate, "integrate a realized system"),
    "oscillation": (cmd_oscillation, "integrate and test for sustained oscillation"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file presetting option values; explicit flags win")
    common.add_argument("--jobs", type=int, help="worker processes for enumeration (default 1)")
    common.add_argument("--max-selections", type=int, help="enumeration cap (default 10^6 or NETJAC_MAX_SELECTIONS)")

    hunt = argparse.ArgumentParser(add_help=False)
    hunt.add_argument("--tol-cross", type=float, help="bisection stops when |max Re| is below this (1e-10)")
    hunt.add_argument("--min-omega", type=float, help="smallest |Im| accepted as a complex crossing (1e-6)")
    hunt.add_argument("--eps-min", type=float, help="smallest off-selection scale tried (2^-40)")

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--triple", help="JSON triple {x, r, rprime} (inline or file); realized first")
    params.add_argument("--params", help="JSON Michaelis-Menten parameters {K, a, b, inflow} (inline or file)")
    params.add_argument("--safety", type=float, help="factor >= 1 on the minimal scale K (1.0)")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--x0", help="initial state, comma separated or a JSON species map")
    sim.add_argument("--t-max", type=float, help="integration horizon (5000)")
    sim.add_argument("--rtol", type=float, help="relative tolerance (1e-8)")
    sim.add_argument("--atol", type=float, help="absolute tolerance (1e-10)")
    sim.add_argument("--csv", help="write the trajectory to this CSV file")

    parser = argparse.ArgumentParser(prog="netjac", description="Symbolic Jacobian analysis of reaction networks.")
    parser.add_argument("--version", action="version", version=f"netjac {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    parents = {
        "hunt": [common, hunt],
        "pithm-check": [common, hunt],
        "realize": [common, params],
        "equilibrium": [common, params],
        "simulate": [common, params, sim],
        "oscillation": [common, params, sim],
    }
    ps = {}
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=parents.get(name, [common]), help=helptext, description=helptext)
        p.add_argument("network", help="network file in the .crn format")
        ps[name] = p
    ps["selections"].add_argument("--n", type=int, help="size of the selections")
    ps["selections"].add_argument("--subset", help="comma separated species subset")
    ps["selections"].add_argument(
        "--text", action="store_true", help='print "A->1, B->2 | alpha=-2" lines instead of JSON'
    )
    ps["coeffs"].add_argument("--n", type=int, help="only this coefficient (default: all)")
    ps["hunt"].add_argument("--selection", help='held Child-Selection, e.g. "A->1, B->2"')
    ps["hunt"].add_argument("--stable", help='stabilizing symbols as JSON, e.g. {"1:A": 1}')
    ps["hunt"].add_argument("--unstable", help="destabilizing symbols as JSON")
    ps["pithm-check"].add_argument("--subset", help="comma separated species subset")
    ps["pithm-check"].add_argument("--collection", help='";"-separated selections (default: all on the subset)')
    ps["pithm-check"].add_argument("--j1", help="stable member of the collection")
    ps["pithm-check"].add_argument("--j2", help="unstable selection on a smaller domain")
    ps["pithm-check"].add_argument("--hunt", action="store_true", help="also run the constructed crossing hunt")
    ps["equilibrium"].add_argument("--guess", help="Newton start, comma separated or a JSON species map")
    ps["oscillation"].add_argument("--coord", help="observed species (default: first)")
    ps["oscillation"].add_argument("--transient-fraction", type=float, help="discarded leading fraction (0.5)")
    ps["oscillation"].add_argument("--drift-threshold", type=float, help="largest relative amplitude drift (0.05)")
    return parser


def _error(msg: str) -> int:
    sys.stderr.write(dumps({"error": msg}) + "\n")
    return EXIT_USAGE


def run(argv: Optional[Sequence[str]] = None) -> tuple[int, Optional[dict]]:
    """Parse ``argv``, run the subcommand and return ``(exit_code, report)``."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0), None
    args._config = {}
    if args.config:
        try:
            cfg = _load_json_arg(args.config)
        except UsageError as e:
            return _error(str(e)), None
        if not isinstance(cfg, dict):
            return _error(f"config must be a JSON object: {args.config}"), None
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            return _error(f"unknown config keys: {sorted(unknown)}"), None
        args._config = cfg
    start = time.perf_counter()
    try:
        net = load_network(args.network)
        func = COMMANDS[args.command][0]
        code, inputs, results = func(net, args)
    except FileNotFoundError as e:
        return _error(f"file not found: {e.filename}"), None
    except (UsageError, NetworkError, RealizationError, SymbolError, SelectionLimitError, KeyError, ValueError) as e:
        return _error(str(e.args[0]) if e.args else type(e).__name__), None
    report = {
        "command": args.command,
        "network_digest": net.digest(),
        "inputs": {"network": args.network, **inputs},
        "results": results,
        "version": __version__,
        "wall_time": time.perf_counter() - start,
    }
    return code, report


def main(argv: Optional[Sequence[str]] = None) -> int:
    code, report = run(argv)
    if report is None:
        return code
    if report["command"] == "selections" and report["inputs"].get("text"):
        sys.stdout.write("".join(row["line"] + "\n" for row in report["results"]["selections"]))
    else:
        sys.stdout.write(dumps(report) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
