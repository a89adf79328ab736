"""Command-line entry point: ``nncontrol design | check | simulate``.

Every subcommand also accepts ``--config FILE``, a JSON object whose keys
are the long option names with underscores (``t_final``, ``u_star``...).
Explicit flags override the file. Outputs are written with sorted keys and
``repr`` floats so identical inputs give byte-identical files.

Exit codes: 0 success, 2 invalid input, 3 failed validation or check,
4 non-finite state during simulation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import geometry
from .action_sets import ActionSet, Variant, design_minimal_set, validate
from .controller import (
    FeedbackLaw,
    SectorFeedback,
    check_proposition1,
    check_proposition2,
    largest_delta,
)
from .exceptions import NNControlError, NonFiniteState
from .presets import PRESETS
from .simulator import SimConfig, batch_sweep, convergence_metrics, simulate
from .systems import bregman_storage, get_gain, get_system

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_NONFINITE = 0, 2, 3, 4

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}

ACTION_SET_SCHEMA = {
    "type": "object",
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "base_index": {"type": "integer", "minimum": 0},
        "actions": _MAT,
    },
    "required": ["dim", "base_index", "actions"],
    "additionalProperties": False,
}

LAW_SCHEMA = {
    "type": "object",
    "properties": {
        "variant": {"enum": ["unity", "sector", "incremental_unity", "incremental_sector"]},
        "set": ACTION_SET_SCHEMA,
        "sector": {"type": ["string", "null"]},
        "k1": _NUM, "k2": _NUM, "k3": _NUM,
        "u_star": _VEC,
        "y_star": _VEC,
        "hysteresis": {"type": "number", "minimum": 0},
        "tie_tol": {"type": "number", "minimum": 0},
    },
    "required": ["variant", "set"],
    "additionalProperties": False,
}

# Config value types per subcommand; keys double as the allowed field list.
_STR, _INT, _BOOL = {"type": "string"}, {"type": "integer"}, {"type": "boolean"}
_VEC_OR_STR = {"anyOf": [_VEC, _STR]}
CONFIG_FIELDS = {
    "design": {"m": _INT, "delta": _NUM, "epsilon": _NUM, "gamma": _STR, "k1": _NUM,
               "variant": _STR, "rotation": {"anyOf": [_MAT, _STR]}, "u_star": _VEC_OR_STR,
               "out": _STR, "mu": _BOOL},
    "check": {"set": _STR, "mu": _BOOL, "sector": _VEC_OR_STR, "gamma": _STR, "epsilon": _NUM,
              "k1": _NUM, "out": _STR},
    "simulate": {"preset": _STR, "system": _STR, "law": _STR, "x0": _VEC_OR_STR, "dt": _NUM,
                 "t_final": _NUM, "hold_steps": _INT, "record_stride": _INT, "epsilon": _NUM,
                 "center": _VEC_OR_STR, "x_star": _VEC_OR_STR, "tail_action": _VEC_OR_STR,
                 "csv": _STR, "report": _STR, "sweep": _INT, "seed": {"type": "integer", "minimum": 0},
                 "box": _NUM},
}


def config_schema(command: str) -> dict:
    return {"type": "object", "properties": CONFIG_FIELDS[command], "additionalProperties": False}


class InputError(Exception):
    """Bad flags or malformed input files; maps to exit code 2."""


def _vector(value, name: str) -> np.ndarray:
    if isinstance(value, str):
        try:
            value = [float(v) for v in value.replace(" ", "").split(",") if v]
        except ValueError:
            raise InputError(f"--{name.replace('_', '-')}: expected comma-separated numbers") from None
    v = np.asarray(value, dtype=float).ravel()
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise InputError(f"--{name.replace('_', '-')}: expected finite numbers")
    return v


def _read_json(path: str, schema: dict | None = None, what: str = "file"):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {what} {path}: {exc}") from None
    if schema is not None:
        try:
            jsonschema.validate(doc, schema)
        except jsonschema.ValidationError as exc:
            raise InputError(f"{what} {path}: {exc.message}") from None
    return doc


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(doc, path: str | None):
    text = _dump(doc)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _apply_config(args: argparse.Namespace):
    if not args.config:
        return
    cfg = _read_json(args.config, config_schema(args.command), "config")
    for key, value in cfg.items():
        if getattr(args, key, None) in (None, False):
            setattr(args, key, value)


def _load_set(path: str) -> ActionSet:
    doc = _read_json(path, ACTION_SET_SCHEMA, "action set")
    try:
        return ActionSet.from_dict(doc)
    except (ValueError, IndexError, NNControlError) as exc:
        raise InputError(f"action set {path}: {exc}") from None


# -- design -----------------------------------------------------------------

def cmd_design(args) -> int:
    if args.m is None or args.m < 1:
        raise InputError("--m must be a positive integer")
    if geometry.MAX_DIM < args.m:
        raise InputError(f"--m above {geometry.MAX_DIM} is not supported")
    if (args.delta is None) == (args.epsilon is None):
        raise InputError("give exactly one of --delta or --epsilon")
    k1 = 1.0 if args.k1 is None else float(args.k1)
    if args.epsilon is not None:
        if not args.gamma:
            raise InputError("--epsilon needs --gamma")
        delta = largest_delta(get_gain(args.gamma), float(args.epsilon), k1)
    else:
        delta = float(args.delta)
    if not (delta > 0 and np.isfinite(delta)):
        raise InputError("target delta must be positive and finite")

    rotation = args.rotation or "identity"
    if isinstance(rotation, str):
        R = None if rotation == "identity" else _read_json(rotation, _MAT, "rotation")
    else:
        R = rotation
    u_star = None if args.u_star is None else _vector(args.u_star, "u_star")
    if u_star is not None and u_star.size != args.m:
        raise InputError(f"--u-star must have {args.m} entries")

    U = design_minimal_set(args.m, delta, R, u_star, Variant(args.variant or "centered"))
    report = validate(U, want_mu=bool(args.mu))
    doc = {"design": {"m": args.m, "delta": delta, "variant": (args.variant or "centered"),
                      "epsilon": args.epsilon, "gamma": args.gamma, "k1": k1},
           "set": U.to_dict(), "validation": report.to_dict()}
    if args.out:
        Path(args.out).write_text(_dump(U.to_dict()))
    sys.stdout.write(_dump(doc))
    return EXIT_OK if report.assumption_ok else EXIT_FAILED


# -- check ------------------------------------------------------------------

def cmd_check(args) -> int:
    if not args.set:
        raise InputError("--set is required")
    U = _load_set(args.set)
    sector = None
    if args.sector is not None:
        k = _vector(args.sector, "sector")
        if k.size != 3:
            raise InputError("--sector expects k1,k2,k3")
        try:
            # Only the constants enter the conditions; F = k1 * y is a member of the sector.
            sector = SectorFeedback(lambda y, c=k[0]: c * np.asarray(y), *map(float, k), name="cli")
        except ValueError as exc:
            raise InputError(f"--sector: {exc}") from None
    if (args.gamma is None) != (args.epsilon is None):
        raise InputError("--gamma and --epsilon go together")
    gamma = get_gain(args.gamma) if args.gamma else None

    report = validate(U, want_mu=bool(args.mu) or sector is not None)
    doc = {"validation": report.to_dict()}
    ok = report.assumption_ok
    if ok and gamma is not None:
        if sector is not None:
            verdict = check_proposition2(U, sector, gamma, float(args.epsilon))
            doc["proposition2"] = verdict.to_dict()
        else:
            verdict = check_proposition1(U, gamma, float(args.epsilon))
            doc["proposition1"] = verdict.to_dict()
        ok = verdict.passed
    elif ok and sector is not None:
        value = (sector.k1 / sector.k3) ** 2 + report.mu_min1**2
        doc["sector"] = {"k1": sector.k1, "k2": sector.k2, "k3": sector.k3, "mu_min1": report.mu_min1,
                         "sector_value": value, "sector_ok": value > 1.0}
        ok = value > 1.0
    if args.k1 is not None and gamma is not None and sector is None:
        doc["largest_delta"] = largest_delta(gamma, float(args.epsilon), float(args.k1))
    doc["passed"] = bool(ok)
    _emit(doc, args.out)
    return EXIT_OK if ok else EXIT_FAILED


# -- simulate ---------------------------------------------------------------

def _simulation_setup(args):
    if args.preset:
        if args.preset not in PRESETS:
            raise InputError(f"unknown preset {args.preset!r}; known: {sorted(PRESETS)}")
        p = PRESETS[args.preset]()
        system, law, storage = p.system, p.law, p.storage
        x0, eps, center, tail = p.x0, p.epsilon, p.center, p.tail_action
        cfg = p.config
    else:
        if not args.law:
            raise InputError("--law is required without --preset")
        system = get_system(args.system or "sigma_ex")
        try:
            law = FeedbackLaw.from_dict(_read_json(args.law, LAW_SCHEMA, "law"))
        except (ValueError, IndexError, NNControlError) as exc:
            raise InputError(f"law {args.law}: {exc}") from None
        storage = system.storage
        x0 = center = tail = eps = None
        cfg = SimConfig()
        if args.x_star is not None:
            x_star = _vector(args.x_star, "x_star")
            storage = bregman_storage(system.storage, x_star) if system.storage else None
            center = x_star
    if args.x0 is not None:
        x0 = _vector(args.x0, "x0")
    if args.center is not None:
        center = _vector(args.center, "center")
    if args.epsilon is not None:
        eps = float(args.epsilon)
    if args.tail_action is not None:
        tail = _vector(args.tail_action, "tail_action")
    if center is None:
        center = np.zeros(system.n)
    if tail is None:
        tail = law.u_star if law.u_star is not None else law.action_set.base
    if eps is None or not eps > 0:
        raise InputError("--epsilon must be positive")
    if x0 is None and not args.sweep:
        raise InputError("--x0 is required")
    if center.size != system.n or (x0 is not None and x0.size != system.n):
        raise InputError(f"--x0 and --center need {system.n} entries")
    try:
        cfg = SimConfig(
            dt=cfg.dt if args.dt is None else float(args.dt),
            t_final=cfg.t_final if args.t_final is None else float(args.t_final),
            hold_steps=cfg.hold_steps if args.hold_steps is None else int(args.hold_steps),
            record_stride=cfg.record_stride if args.record_stride is None else int(args.record_stride),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return system, law, storage, x0, eps, center, tail, cfg


def cmd_simulate(args) -> int:
    system, law, storage, x0, eps, center, tail, cfg = _simulation_setup(args)
    if law.action_set.dim != system.m:
        raise InputError("law action dimension does not match the system input dimension")

    if args.sweep:
        if args.sweep < 1:
            raise InputError("--sweep must be positive")
        box = 3.0 if args.box is None else float(args.box)
        rng = np.random.default_rng(0 if args.seed is None else int(args.seed))
        X0 = rng.uniform(-box, box, size=(int(args.sweep), system.n))
        reports = batch_sweep(system, law, X0, cfg, eps, center, tail, storage)
        doc = {"runs": [dict(r.to_dict(), x0=[float(v) for v in x]) for r, x in zip(reports, X0)]}
        _emit(doc, args.report)
        if any(r.error for r in reports):
            return EXIT_NONFINITE
        return EXIT_OK if all(r.entry_time is not None for r in reports) else EXIT_FAILED

    try:
        traj = simulate(system, law, x0, cfg, storage)
    except NonFiniteState as exc:
        doc = {"error": str(exc), "error_time": exc.time, "epsilon": eps,
               "center": [float(v) for v in center], "entry_time": None}
        _emit(doc, args.report)
        return EXIT_NONFINITE
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            traj.to_csv(fh)
    report = convergence_metrics(traj, eps, center, tail)
    _emit(report.to_dict(), args.report)
    return EXIT_OK if report.entry_time is not None else EXIT_FAILED


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nncontrol", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="build a minimal action set for a target radius")
    d.add_argument("--m", type=int)
    d.add_argument("--delta", type=float)
    d.add_argument("--epsilon", type=float)
    d.add_argument("--gamma", help="gain name, e.g. sigma_ex or sigma_ex_incremental:-1")
    d.add_argument("--k1", type=float)
    d.add_argument("--variant", choices=[v.value for v in Variant])
    d.add_argument("--rotation", help="'identity' or a JSON file holding an m x m matrix")
    d.add_argument("--u-star", dest="u_star", help="base action, e.g. '1,0'")
    d.add_argument("--mu", action="store_true", help="also estimate mu_min,1")
    d.add_argument("--out", help="write the action set JSON here")

    c = sub.add_parser("check", help="validate an action set and the design conditions")
    c.add_argument("--set")
    c.add_argument("--mu", action="store_true")
    c.add_argument("--sector", help="k1,k2,k3")
    c.add_argument("--gamma")
    c.add_argument("--epsilon", type=float)
    c.add_argument("--k1", type=float, help="also report largest admissible delta for this k1")
    c.add_argument("--out")

    s = sub.add_parser("simulate", help="sample-and-hold closed-loop simulation")
    s.add_argument("--preset", help=" | ".join(sorted(PRESETS)))
    s.add_argument("--system", help="sigma_ex or linear:<json or file>")
    s.add_argument("--law", help="FeedbackLaw JSON file")
    s.add_argument("--x0")
    s.add_argument("--dt", type=float)
    s.add_argument("--t-final", dest="t_final", type=float)
    s.add_argument("--hold-steps", dest="hold_steps", type=int)
    s.add_argument("--record-stride", dest="record_stride", type=int)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--center")
    s.add_argument("--x-star", dest="x_star", help="equilibrium; switches storage to the shifted form")
    s.add_argument("--tail-action", dest="tail_action")
    s.add_argument("--csv", help="trajectory CSV path")
    s.add_argument("--report", help="report JSON path (default stdout)")
    s.add_argument("--sweep", type=int, help="number of random initial states")
    s.add_argument("--seed", type=int)
    s.add_argument("--box", type=float, help="sweep initial states in [-box, box]^n")

    for sp in (d, c, s):
        sp.add_argument("--config", help="JSON file with option values")
    return p


COMMANDS = {"design": cmd_design, "check": cmd_check, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except (InputError, KeyError, ValueError, NNControlError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"nncontrol {args.command}: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
