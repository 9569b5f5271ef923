"""Command-line surface: scenario runner and one-shot task commands.

Every subcommand funnels through the same scenario machinery, so a
one-shot `warptone tone --b 16` is exactly a single-task scenario and
inherits the determinism and serialization contracts.  Exit codes:
0 = all sub-tasks succeeded, 2 = validation failure (bad flags, bad
config, unparseable profile), 3 = at least one sub-task failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .profiles import DomainError, ExpressionSyntaxError, Profile, to_source
from .report import FORMATS, emit
from .scenarios import (RunRecord, ScenarioSpec, TaskSpec, ValidationError,
                        builtin_names, builtin_scenario, run_scenario,
                        scenario_from_dict)

__all__ = ["main"]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH",
                   help="JSON file providing the model block (and defaults)")
    p.add_argument("--out", metavar="PATH", help="write the report here")
    p.add_argument("--format", choices=FORMATS, default="table")
    p.add_argument("--plot-dir", metavar="DIR",
                   help="render one PNG per task into this directory")


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--n", type=int, default=None, help="base dimension (default 2)")
    p.add_argument("--f", default=None,
                   help="base profile: builtin name or expression in t")
    p.add_argument("--m", type=int, default=None, help="fiber dimension")
    p.add_argument("--psi", default=None,
                   help="fiber profile: builtin name, expression, or constant")
    p.add_argument("--fiber-volume", type=float, default=None,
                   help="volume of the unit fiber (default 2*pi)")
    p.add_argument("--fiber-modes", default=None,
                   help="comma-separated fiber eigenvalues, e.g. 0,1,1,4,4")
    p.add_argument("--grid", type=int, default=None,
                   help="fine grid size N; the coarse companion is N/2")
    p.add_argument("--tol", type=float, default=None, help="eigenvalue tolerance")


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _model_config(args) -> dict:
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        cfg = dict(loaded.get("model", loaded))
    if args.n is not None:
        cfg["n"] = args.n
    if args.f is not None:
        cfg["f"] = args.f
    if args.psi is not None:
        try:
            cfg["psi"] = float(args.psi)
        except ValueError:
            cfg["psi"] = args.psi
    if args.m is not None:
        cfg["m"] = args.m
    if args.fiber_volume is not None:
        cfg["unit_fiber_volume"] = args.fiber_volume
    if args.fiber_modes is not None:
        cfg["fiber_modes"] = _floats(args.fiber_modes)
    cfg.setdefault("f", "euclidean")
    if "psi" in cfg:
        cfg.setdefault("m", 1)
    return cfg


def _grid_params(args, params: dict):
    if args.grid is not None:
        if args.grid < 16:
            raise ValidationError("--grid", "grid must be at least 16")
        params["grids"] = [args.grid // 2, args.grid]
    if args.tol is not None:
        params["tol"] = args.tol


def _finish(args, spec: ScenarioSpec) -> int:
    record = run_scenario(spec)
    text = emit(record, format=args.format, path=args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.plot_dir:
        from .plots import render_figures  # matplotlib import only when needed
        paths = render_figures(record, args.plot_dir)
        if args.format == "table" and args.out is None:
            for p in paths:
                sys.stdout.write(f"figure: {p}\n")
    return 0 if record.ok else 3


def _cmd_tone(args) -> int:
    params = {"a": args.a, "b": args.b, "mode_k": args.mode_k, "mode_j": args.mode_j}
    _grid_params(args, params)
    spec = ScenarioSpec(name="cli-tone", model=_model_config(args),
                        tasks=(TaskSpec("tone", params),))
    return _finish(args, spec)


def _cmd_ess(args) -> int:
    params = {"r_values": _floats(args.r_values)}
    if args.l0 is not None:
        params["l0"] = args.l0
    if args.max_steps is not None:
        params["max_steps"] = args.max_steps
    if args.threshold is not None:
        params["divergence_threshold"] = args.threshold
    if args.use_base:
        params["use_base"] = True
    if args.transfer:
        params["transfer"] = True
    _grid_params(args, params)
    spec = ScenarioSpec(name="cli-ess", model=_model_config(args),
                        tasks=(TaskSpec("ess", params),))
    return _finish(args, spec)


def _cmd_certify(args) -> int:
    params = {"kind": args.kind, "horizon": args.horizon}
    if args.r_star is not None:
        params["r_star"] = args.r_star
    if args.g is not None:
        params["g"] = args.g
    if args.r_max is not None:
        params["r_max"] = args.r_max
    spec = ScenarioSpec(name="cli-certify", model=_model_config(args),
                        tasks=(TaskSpec("certify", params),))
    return _finish(args, spec)


def _cmd_compare(args) -> int:
    params = {"g": args.g, "horizon": args.horizon, "step": args.step,
              "certify": args.certify}
    if args.tol is not None:
        params["tol"] = args.tol
    spec = ScenarioSpec(name="cli-compare", model=_model_config(args),
                        tasks=(TaskSpec("compare", params),))
    return _finish(args, spec)


def _cmd_verify(args) -> int:
    params = {}
    if args.phi is not None:
        params["phi"] = args.phi
    if args.a_field is not None:
        params["a"] = args.a_field
    if args.tol is not None:
        params["tolerance"] = args.tol
    spec = ScenarioSpec(name="cli-verify", model=_model_config(args),
                        tasks=(TaskSpec("verify", params),))
    return _finish(args, spec)


def _cmd_brooks(args) -> int:
    params = {"r_max": args.r_max}
    spec = ScenarioSpec(name="cli-brooks", model=_model_config(args),
                        tasks=(TaskSpec("brooks", params),))
    return _finish(args, spec)


def _cmd_scenario(args) -> int:
    name = args.name
    if name in builtin_names():
        spec = builtin_scenario(name)
    else:
        try:
            with open(name) as fh:
                spec = scenario_from_dict(json.load(fh))
        except FileNotFoundError:
            raise ValidationError("scenario", f"{name!r} is neither a builtin "
                                  f"({', '.join(builtin_names())}) nor a readable file")
        except json.JSONDecodeError as ex:
            raise ValidationError("scenario", f"config is not valid JSON: {ex}")
    return _finish(args, spec)


def _cmd_parse_profile(args) -> int:
    prof = Profile.from_source(args.expr)
    d2 = prof.d2
    sys.stdout.write(f"expression:  {to_source(prof.expr)}\n")
    sys.stdout.write(f"derivative:  {to_source(prof.d1)}\n")
    sys.stdout.write(f"second:      {to_source(d2)}\n")
    if args.at is not None:
        t = args.at
        sys.stdout.write(f"value({t:g})      = {prof.value(t)!r}\n")
        sys.stdout.write(f"derivative({t:g}) = {prof.derivative(t)!r}\n")
        sign, logmag = prof.log_value(t)
        sys.stdout.write(f"log form({t:g})   = (sign {sign:+.0f}, log|.| {logmag!r})\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warptone",
        description="fundamental tones and essential spectra of rotationally "
                    "symmetric manifolds and their warped submersions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tone", help="fundamental tone of a ball or annulus")
    _add_model_flags(p)
    p.add_argument("--a", type=float, default=0.0, help="inner radius (0 = pole)")
    p.add_argument("--b", type=float, required=True, help="outer radius")
    p.add_argument("--mode-k", type=int, default=0, help="base spherical mode")
    p.add_argument("--mode-j", type=int, default=0, help="fiber mode index")
    _add_common(p)
    p.set_defaults(func=_cmd_tone)

    p = sub.add_parser("ess", help="essential-spectrum bottom via exterior tones")
    _add_model_flags(p)
    p.add_argument("--r-values", required=True, help="comma-separated exterior radii")
    p.add_argument("--l0", type=float, default=None, help="first truncation length")
    p.add_argument("--max-steps", type=int, default=None, help="doubling budget")
    p.add_argument("--threshold", type=float, default=None,
                   help="divergence threshold for the discreteness verdict")
    p.add_argument("--use-base", action="store_true",
                   help="sweep the base manifold instead of the total space")
    p.add_argument("--transfer", action="store_true",
                   help="attach the base-to-total transfer report")
    _add_common(p)
    p.set_defaults(func=_cmd_ess)

    p = sub.add_parser("certify", help="tail certificate for discreteness / growth")
    _add_model_flags(p)
    p.add_argument("--kind", choices=("h", "l", "radial-curvature", "brooks"),
                   default="h")
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--r-star", type=float, default=None,
                   help="tail start (default horizon/10)")
    p.add_argument("--g", default=None,
                   help="curvature bound expression (radial-curvature kind)")
    p.add_argument("--r-max", type=float, default=None, help="growth horizon (brooks kind)")
    _add_common(p)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("compare", help="Jacobi comparison check for a curvature bound")
    _add_model_flags(p)
    p.add_argument("--g", required=True, help="curvature bound expression in t")
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--certify", action="store_true",
                   help="attach the radial-curvature certificate")
    _add_common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("verify-identities", help="submersion-calculus residual checks")
    _add_model_flags(p)
    p.add_argument("--phi", default=None, help="test profile for the lift checks")
    p.add_argument("--a-field", default=None, help="test field for the divergence check")
    _add_common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("brooks", help="volume growth exponent and Brooks verdict")
    _add_model_flags(p)
    p.add_argument("--r-max", type=float, default=30.0)
    _add_common(p)
    p.set_defaults(func=_cmd_brooks)

    p = sub.add_parser("scenario", help="run a builtin scenario or a JSON spec file")
    p.add_argument("name", help=f"builtin ({', '.join(builtin_names())}) or path")
    _add_common(p)
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser("parse-profile", help="parse an expression and show derivatives")
    p.add_argument("expr")
    p.add_argument("--at", type=float, default=None, help="also evaluate at this t")
    p.set_defaults(func=_cmd_parse_profile)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ExpressionSyntaxError) as ex:
        sys.stderr.write(f"error: {ex}\n")
        return 2
    except (DomainError, OSError) as ex:
        sys.stderr.write(f"error: {ex}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
