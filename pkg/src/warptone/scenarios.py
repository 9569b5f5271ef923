"""Scenario descriptions and the runner that turns them into records.

A scenario is a plain, JSON-compatible description: one model (base
profile, optional fiber) plus a list of tasks drawn from the module
surface (tone / ess / certify / compare / verify / brooks).  Builtin
scenarios reproduce the study's headline computations; custom ones load
from a JSON file with the same shape.  Everything here is
deterministic — rerunning a spec reproduces every numeric field
bit-for-bit, which the emit layer relies on.
"""

from __future__ import annotations

import math
import platform
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .comparison import comparison_check, radial_discreteness_certificate
from .identities import (check_divergence_identity, check_grad_average,
                         check_laplacian_lift, resolve_sign_convention)
from .models import (BaseModel, FiberModel, ModelValidationError, SubmersionModel)
from .profiles import DomainError, ExpressionSyntaxError, Profile, constant_profile, preset_profile
from .spectrum import (TruncationPolicy, brooks_certificate, brooks_growth,
                       discreteness_certificate, ess_bottom_estimate, submersion_transfer)
from .sturm import ConvergenceError, RadialDomain
from .tone import DEFAULT_GRIDS, mode_tone

__all__ = [
    "ValidationError",
    "TaskSpec",
    "ScenarioSpec",
    "RunRecord",
    "builtin_names",
    "builtin_scenario",
    "scenario_from_dict",
    "build_model",
    "run_scenario",
]

TASK_KINDS = ("tone", "ess", "certify", "compare", "verify", "brooks")
_PRESET_NAMES = ("euclidean", "baider_base", "baider_fiber")


class ValidationError(ValueError):
    """Bad scenario input; path points at the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _resolve_profile(value, path: str) -> Profile:
    if isinstance(value, (int, float)):
        return constant_profile(float(value))
    if not isinstance(value, str):
        raise ValidationError(path, "expected a builtin name, expression, or number")
    if value in _PRESET_NAMES or value.startswith("hyperbolic"):
        try:
            return preset_profile(value)
        except ValueError as ex:
            raise ValidationError(path, str(ex)) from ex
    try:
        return Profile.from_source(value)
    except ExpressionSyntaxError as ex:
        raise ValidationError(path, f"unparseable profile: {ex}") from ex


def build_model(cfg: dict) -> SubmersionModel:
    """Construct the model a scenario describes, with path-tagged errors."""
    if not isinstance(cfg, dict):
        raise ValidationError("model", "expected an object")
    known = {"n", "f", "m", "psi", "unit_fiber_volume", "fiber_modes"}
    for key in cfg:
        if key not in known:
            raise ValidationError(f"model.{key}", "unknown field")
    n = cfg.get("n", 2)
    if not isinstance(n, int) or n < 2:
        raise ValidationError("model.n", "dimension must be an integer >= 2")
    f = _resolve_profile(cfg.get("f", "euclidean"), "model.f")
    try:
        base = BaseModel(n, f)
    except ModelValidationError as ex:
        raise ValidationError("model.f", str(ex)) from ex

    if "psi" not in cfg:
        if "m" in cfg or "fiber_modes" in cfg or "unit_fiber_volume" in cfg:
            raise ValidationError("model.psi", "fiber fields given without psi")
        return SubmersionModel(base)

    psi = _resolve_profile(cfg["psi"], "model.psi")
    m = cfg.get("m", 1)
    if not isinstance(m, int) or m < 1:
        raise ValidationError("model.m", "fiber dimension must be an integer >= 1")
    vol = float(cfg.get("unit_fiber_volume", 2.0 * math.pi))
    modes = tuple(float(x) for x in cfg.get("fiber_modes", (0.0,)))
    try:
        fiber = FiberModel(m, psi, unit_fiber_volume=vol, fiber_mode_eigenvalues=modes)
    except ModelValidationError as ex:
        raise ValidationError("model.psi", str(ex)) from ex
    return SubmersionModel(base, fiber)


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    model: dict
    tasks: tuple

    def to_dict(self) -> dict:
        return {"name": self.name, "model": dict(self.model),
                "tasks": [{"kind": t.kind, "params": dict(t.params)} for t in self.tasks]}


def scenario_from_dict(d: dict) -> ScenarioSpec:
    if not isinstance(d, dict):
        raise ValidationError("", "scenario must be an object")
    name = d.get("name")
    if not isinstance(name, str) or not name:
        raise ValidationError("name", "scenario needs a nonempty name")
    model = d.get("model")
    if not isinstance(model, dict):
        raise ValidationError("model", "expected an object")
    build_model(model)  # validate eagerly so errors carry field paths
    raw_tasks = d.get("tasks")
    if not isinstance(raw_tasks, list) or not raw_tasks:
        raise ValidationError("tasks", "expected a nonempty list")
    tasks = []
    for i, rt in enumerate(raw_tasks):
        if not isinstance(rt, dict) or "kind" not in rt:
            raise ValidationError(f"tasks[{i}]", "expected an object with a kind")
        kind = rt["kind"]
        if kind not in TASK_KINDS:
            raise ValidationError(f"tasks[{i}].kind", f"unknown task kind {kind!r}")
        params = rt.get("params", {})
        if not isinstance(params, dict):
            raise ValidationError(f"tasks[{i}].params", "expected an object")
        tasks.append(TaskSpec(kind=kind, params=dict(params)))
    return ScenarioSpec(name=name, model=dict(model), tasks=tuple(tasks))


@dataclass(frozen=True)
class RunRecord:
    """One scenario run: spec echo, per-task results, environment stamp.

    wall_time is measurement noise by construction and is therefore
    nulled on serialization; every other field reruns bit-for-bit.
    """

    scenario: dict
    results: list
    versions: dict
    wall_time: Optional[float]
    seed: None = None

    @property
    def ok(self) -> bool:
        return all(r.get("ok") for r in self.results)


def _plain(obj):
    """Normalize to JSON-native types so record equality survives a round trip."""
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _take(params: dict, defaults: dict, path: str) -> dict:
    for key in params:
        if key not in defaults:
            raise ValidationError(f"{path}.{key}", "unknown parameter")
    out = dict(defaults)
    out.update(params)
    return out


def _domain_for(a: float, b: float) -> RadialDomain:
    return RadialDomain(a, b, "pole-regular" if a == 0.0 else "dirichlet")


def _run_tone(model: SubmersionModel, params: dict, path: str) -> dict:
    p = _take(params, {"a": 0.0, "b": None, "mode_k": 0, "mode_j": 0,
                       "grids": list(DEFAULT_GRIDS), "tol": 1e-10}, path)
    if p["b"] is None:
        raise ValidationError(f"{path}.b", "outer radius required")
    domain = _domain_for(float(p["a"]), float(p["b"]))
    res = mode_tone(model, domain, mode_k=int(p["mode_k"]), mode_j=int(p["mode_j"]),
                    grids=tuple(int(g) for g in p["grids"]), tol=float(p["tol"]))
    step = max(1, res.nodes.size // 256)
    return _plain({
        "a": domain.a, "b": domain.b,
        "mode_k": p["mode_k"], "mode_j": p["mode_j"],
        "lambda": res.lam, "err": res.error_estimate,
        "grids": list(res.grids),
        "profile_t": res.nodes[::step], "profile_u": res.eigenfunction[::step],
    })


def _run_ess(model: SubmersionModel, params: dict, path: str) -> dict:
    p = _take(params, {"r_values": None, "l0": 15.0, "growth": 2.0,
                       "stop_rtol": 2e-3, "stop_atol": 1e-4, "max_steps": 6,
                       "divergence_threshold": 1e3, "grids": list(DEFAULT_GRIDS),
                       "tol": 1e-10, "use_base": False, "transfer": False,
                       "transfer_window": None}, path)
    if not p["r_values"]:
        raise ValidationError(f"{path}.r_values", "need at least one radius")
    policy = TruncationPolicy(l0=float(p["l0"]), growth=float(p["growth"]),
                              stop_rtol=float(p["stop_rtol"]), stop_atol=float(p["stop_atol"]),
                              max_steps=int(p["max_steps"]),
                              divergence_threshold=float(p["divergence_threshold"]),
                              grids=tuple(int(g) for g in p["grids"]))
    target = SubmersionModel(model.base) if p["use_base"] else model
    est = ess_bottom_estimate(target, [float(r) for r in p["r_values"]],
                              policy=policy, tol=float(p["tol"]))
    out = {
        "use_base": bool(p["use_base"]),
        "r_values": est.r_values, "lam_values": est.lam_values,
        "point_errors": est.point_errors, "converged": est.converged,
        "diverged": est.diverged, "bottom": est.bottom, "bottom_error": est.bottom_error,
        "sweeps": [[[pt.r_cut, pt.lam, pt.err] for pt in sweep] for sweep in est.sweeps],
        "policy": {"l0": policy.l0, "growth": policy.growth,
                   "stop_rtol": policy.stop_rtol, "stop_atol": policy.stop_atol,
                   "max_steps": policy.max_steps,
                   "divergence_threshold": policy.divergence_threshold,
                   "grids": list(policy.grids)},
    }
    if p["transfer"]:
        if not model.has_fiber:
            raise ValidationError(f"{path}.transfer", "transfer requires a fiber")
        window = tuple(float(x) for x in p["transfer_window"]) if p["transfer_window"] else None
        tr = submersion_transfer(est, model, window=window)
        out["transfer"] = {
            "kind": tr.kind, "base_bottom": tr.base_bottom,
            "base_diverged": tr.base_diverged, "value": tr.value,
            "interval": list(tr.interval) if tr.interval else None,
            "inf_volume": tr.inf_volume, "sup_volume": tr.sup_volume,
            "window": list(tr.window), "note": tr.note,
        }
    return _plain(out)


def _certificate_dict(cert) -> dict:
    return _plain({"kind": cert.kind, "verdict": cert.verdict, "bound": cert.bound,
                   "horizon": cert.horizon, "r_star": cert.r_star,
                   "witnesses": cert.witnesses})


def _run_certify(model: SubmersionModel, params: dict, path: str) -> dict:
    p = _take(params, {"kind": "h", "horizon": 20.0, "r_star": None, "g": None,
                       "step": 1e-3, "samples": 4000, "r_max": 30.0,
                       "resolution": 12000}, path)
    kind = p["kind"]
    if kind in ("h", "l"):
        cert = discreteness_certificate(model, horizon=float(p["horizon"]), mode=kind,
                                        r_star=p["r_star"], resolution=int(p["samples"]))
    elif kind == "radial-curvature":
        if p["g"] is None:
            raise ValidationError(f"{path}.g", "curvature bound expression required")
        g = _resolve_profile(p["g"], f"{path}.g")
        cert = radial_discreteness_certificate(model, g, horizon=float(p["horizon"]),
                                               step=float(p["step"]), r_star=p["r_star"],
                                               samples=int(p["samples"]))
    elif kind == "brooks":
        report = brooks_growth(model, r_max=float(p["r_max"]), resolution=int(p["resolution"]))
        cert = brooks_certificate(report)
    else:
        raise ValidationError(f"{path}.kind", f"unknown certificate kind {kind!r}")
    return _certificate_dict(cert)


def _run_compare(model: SubmersionModel, params: dict, path: str) -> dict:
    p = _take(params, {"g": None, "horizon": 20.0, "step": 1e-3, "tol": 1e-6,
                       "samples": 2000, "certify": False, "r_star": None}, path)
    if p["g"] is None:
        raise ValidationError(f"{path}.g", "curvature bound expression required")
    g = _resolve_profile(p["g"], f"{path}.g")
    rep = comparison_check(model.base, g, horizon=float(p["horizon"]),
                           step=float(p["step"]), tol=float(p["tol"]),
                           samples=int(p["samples"]))
    out = {
        "hypothesis_ok": rep.hypothesis_ok, "conclusion_ok": rep.conclusion_ok,
        "horizon": rep.horizon, "tol": rep.tol, "samples": rep.samples,
        "hypothesis_margin": rep.hypothesis_margin,
        "hypothesis_fail_t": rep.hypothesis_fail_t,
        "max_violation": rep.max_violation, "max_abs_gap": rep.max_abs_gap,
        "worst_t": rep.worst_t,
    }
    if p["certify"]:
        cert = radial_discreteness_certificate(model, g, horizon=float(p["horizon"]),
                                               step=float(p["step"]), r_star=p["r_star"])
        out["certificate"] = _certificate_dict(cert)
    return _plain(out)


def _residual_dict(rep) -> dict:
    return {"check": rep.check, "max_residual": rep.max_residual,
            "argmax_t": rep.argmax_t, "samples": rep.samples,
            "tolerance": rep.tolerance, "passed": rep.passed}


def _run_verify(model: SubmersionModel, params: dict, path: str) -> dict:
    p = _take(params, {"phi": "sinh(t)", "a": "1 + t^2", "samples": 200,
                       "window": [0.05, 10.0], "tolerance": 1e-7}, path)
    if not model.has_fiber:
        raise ValidationError(f"{path}", "identity checks need a model with a fiber")
    phi = _resolve_profile(p["phi"], f"{path}.phi")
    a = _resolve_profile(p["a"], f"{path}.a")
    window = tuple(float(x) for x in p["window"])
    tol = float(p["tolerance"])
    n = int(p["samples"])
    reports = [
        check_divergence_identity(model, a, samples=n, window=window, tolerance=tol),
        check_laplacian_lift(model, phi, samples=n, window=window, tolerance=tol),
        check_grad_average(model, phi, samples=n, window=window, tolerance=tol),
    ]
    sign = resolve_sign_convention(model, samples=n, window=window, tolerance=tol)
    return _plain({
        "reports": [_residual_dict(r) for r in reports],
        "sign": {"sign": sign.sign, "degenerate": sign.degenerate,
                 "plus": _residual_dict(sign.plus), "minus": _residual_dict(sign.minus)},
    })


def _run_brooks(model: SubmersionModel, params: dict, path: str) -> dict:
    p = _take(params, {"r_max": 30.0, "resolution": 12000, "keep": 64}, path)
    rep = brooks_growth(model, r_max=float(p["r_max"]), resolution=int(p["resolution"]),
                        keep=int(p["keep"]))
    return _plain({
        "r_max": rep.r_max, "mu_hat": rep.mu_hat,
        "slope_previous": rep.slope_previous,
        "volume_diverges": rep.volume_diverges, "slope_stable": rep.slope_stable,
        "verdict": rep.verdict, "upper_bound": rep.upper_bound,
        "angular_constant": rep.angular_constant,
        "r_grid": rep.r_grid, "log_volumes": rep.log_volumes,
        "mu_series": rep.mu_series,
    })


_RUNNERS = {
    "tone": _run_tone,
    "ess": _run_ess,
    "certify": _run_certify,
    "compare": _run_compare,
    "verify": _run_verify,
    "brooks": _run_brooks,
}


def run_scenario(spec: ScenarioSpec) -> RunRecord:
    """Execute every task of a scenario; task errors are embedded, not raised.

    Only validation problems (bad spec fields) raise, and they do so
    before any computation starts.
    """
    model = build_model(spec.model)
    t0 = time.perf_counter()
    results = []
    for i, task in enumerate(spec.tasks):
        path = f"tasks[{i}]"
        runner = _RUNNERS[task.kind]
        entry = {"task": task.kind, "params": _plain(task.params)}
        try:
            entry["ok"] = True
            entry["result"] = runner(model, task.params, path)
        except ValidationError:
            raise
        except (DomainError, ModelValidationError, ConvergenceError,
                ValueError, RuntimeError) as ex:
            entry["ok"] = False
            entry["result"] = None
            entry["error"] = f"{type(ex).__name__}: {ex}"
        results.append(entry)
    elapsed = time.perf_counter() - t0
    versions = {
        "warptone": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }
    return RunRecord(scenario=spec.to_dict(), results=results,
                     versions=versions, wall_time=elapsed)


# ---------------------------------------------------------------------------
# builtin scenarios


def _builtin_euclidean() -> ScenarioSpec:
    return ScenarioSpec(
        name="euclidean",
        model={"n": 2, "f": "euclidean"},
        tasks=(
            TaskSpec("tone", {"a": 0.0, "b": 1.0}),
            TaskSpec("ess", {"r_values": [8.0, 12.0, 16.0]}),
            TaskSpec("certify", {"kind": "h", "horizon": 20.0}),
            TaskSpec("brooks", {"r_max": 30.0}),
        ),
    )


def _builtin_hyperbolic() -> ScenarioSpec:
    return ScenarioSpec(
        name="hyperbolic",
        model={"n": 2, "f": "hyperbolic"},
        tasks=(
            TaskSpec("tone", {"a": 0.0, "b": 16.0}),
            TaskSpec("ess", {"r_values": [8.0, 12.0, 16.0]}),
            TaskSpec("brooks", {"r_max": 30.0}),
        ),
    )


def _builtin_hyperbolic4() -> ScenarioSpec:
    return ScenarioSpec(
        name="hyperbolic4",
        model={"n": 2, "f": "hyperbolic:-4"},
        tasks=(
            TaskSpec("tone", {"a": 0.0, "b": 8.0}),
            TaskSpec("ess", {"r_values": [6.0, 9.0, 12.0]}),
        ),
    )


def _builtin_sl2r() -> ScenarioSpec:
    # hyperbolic plane base with a unit circle fiber of constant warping:
    # the toy model of a rank-one homogeneous space with minimal fibers
    return ScenarioSpec(
        name="sl2r",
        model={"n": 2, "f": "hyperbolic", "m": 1, "psi": 1.0,
               "fiber_modes": [0.0, 1.0, 1.0]},
        tasks=(
            TaskSpec("ess", {"r_values": [8.0, 12.0, 16.0], "use_base": True,
                             "transfer": True}),
            TaskSpec("tone", {"a": 0.0, "b": 16.0}),
        ),
    )


def _builtin_baider() -> ScenarioSpec:
    return ScenarioSpec(
        name="baider",
        model={"n": 2, "f": "baider_base", "m": 1, "psi": "baider_fiber"},
        tasks=(
            TaskSpec("ess", {"r_values": [32.0, 36.0, 40.0], "use_base": True}),
            TaskSpec("ess", {"r_values": [4.0, 6.0, 8.0], "max_steps": 7,
                             "transfer": True}),
            TaskSpec("certify", {"kind": "h", "horizon": 20.0}),
            TaskSpec("brooks", {"r_max": 30.0}),
            TaskSpec("verify", {}),
        ),
    )


def _builtin_baider_minimal() -> ScenarioSpec:
    return ScenarioSpec(
        name="baider_minimal",
        model={"n": 2, "f": "baider_base", "m": 1, "psi": 1.0},
        tasks=(
            TaskSpec("certify", {"kind": "h", "horizon": 20.0}),
            TaskSpec("certify", {"kind": "radial-curvature", "g": "4*t^2 + 6",
                                 "horizon": 20.0}),
            TaskSpec("compare", {"g": "4*t^2 + 6", "horizon": 10.0}),
            TaskSpec("ess", {"r_values": [2.0, 3.0, 4.0]}),
        ),
    )


_BUILTINS = {
    "euclidean": _builtin_euclidean,
    "hyperbolic": _builtin_hyperbolic,
    "hyperbolic4": _builtin_hyperbolic4,
    "sl2r": _builtin_sl2r,
    "baider": _builtin_baider,
    "baider_minimal": _builtin_baider_minimal,
}


def builtin_names() -> tuple:
    return tuple(sorted(_BUILTINS))


def builtin_scenario(name: str) -> ScenarioSpec:
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ValidationError("name", f"unknown builtin scenario {name!r}; "
                              f"available: {', '.join(builtin_names())}") from None
    return factory()
