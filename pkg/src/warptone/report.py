"""Serialization of run records: table, CSV, JSON.

CSV schemas (one header block per task, tasks separated by a blank line
when a record mixes kinds):

    tone    ->  a,b,mode_k,mode_j,lambda,err
    ess     ->  R,R_cut,lambda,err
    certify ->  R_star,inf_driving,bound,verdict
    verify  ->  check,max_residual,argmax_t,pass
    compare ->  hypothesis_ok,conclusion_ok,max_violation,worst_t
    brooks  ->  r,log_volume,mu

Floats are written with repr (shortest round-trip form), so two runs of
the the same scenario emit byte-identical files.  JSON mirrors the
RunRecord fields with wall_time nulled (it is measurement noise, the
one field that cannot rerun bit-for-bit).
"""

from __future__ import annotations

import json
from typing import Optional

from .scenarios import RunRecord

__all__ = ["emit", "to_table", "to_csv", "to_json", "parse_record"]

FORMATS = ("table", "csv", "json")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv_tone(result: dict) -> list:
    row = [result["a"], result["b"], result["mode_k"], result["mode_j"],
           result["lambda"], result["err"]]
    return ["a,b,mode_k,mode_j,lambda,err", ",".join(_fmt(v) for v in row)]


def _csv_ess(result: dict) -> list:
    lines = ["R,R_cut,lambda,err"]
    for r, sweep in zip(result["r_values"], result["sweeps"]):
        for r_cut, lam, err in sweep:
            lines.append(",".join(_fmt(v) for v in (r, r_cut, lam, err)))
    return lines


def _csv_certify(result: dict) -> list:
    inf_driving = result.get("witnesses", {}).get("tail_inf")
    row = [result.get("r_star"), inf_driving, result.get("bound"), result["verdict"]]
    return ["R_star,inf_driving,bound,verdict", ",".join(_fmt(v) for v in row)]


def _csv_verify(result: dict) -> list:
    lines = ["check,max_residual,argmax_t,pass"]
    reports = list(result["reports"])
    sign = result.get("sign")
    if sign:
        reports.append(dict(sign["plus"], check="sign-plus"))
        reports.append(dict(sign["minus"], check="sign-minus"))
    for rep in reports:
        lines.append(",".join(_fmt(v) for v in (
            rep["check"], rep["max_residual"], rep["argmax_t"], rep["passed"])))
    return lines


def _csv_compare(result: dict) -> list:
    row = [result["hypothesis_ok"], result["conclusion_ok"],
           result["max_violation"], result["worst_t"]]
    return ["hypothesis_ok,conclusion_ok,max_violation,worst_t",
            ",".join(_fmt(v) for v in row)]


def _csv_brooks(result: dict) -> list:
    lines = ["r,log_volume,mu"]
    for r, lv, mu in zip(result["r_grid"], result["log_volumes"], result["mu_series"]):
        lines.append(",".join(_fmt(v) for v in (r, lv, mu)))
    return lines


_CSV = {
    "tone": _csv_tone,
    "ess": _csv_ess,
    "certify": _csv_certify,
    "verify": _csv_verify,
    "compare": _csv_compare,
    "brooks": _csv_brooks,
}


def to_csv(record: RunRecord) -> str:
    blocks = []
    for entry in record.results:
        if not entry.get("ok"):
            blocks.append([f"# task {entry['task']} failed: {entry.get('error', '')}"])
            continue
        blocks.append(_CSV[entry["task"]](entry["result"]))
    return "\n\n".join("\n".join(b) for b in blocks) + "\n"


# ---------------------------------------------------------------------------


def _table_tone(result: dict, out: list):
    out.append(f"  domain [{_fmt(result['a'])}, {_fmt(result['b'])}]"
               f"  mode (k={result['mode_k']}, j={result['mode_j']})")
    out.append(f"  lambda* = {result['lambda']:.10g}   (error estimate {result['err']:.3g},"
               f" grids {result['grids']})")


def _table_ess(result: dict, out: list):
    space = "base" if result.get("use_base") else "total space"
    out.append(f"  exterior tones ({space}):")
    for r, lam, err, conv in zip(result["r_values"], result["lam_values"],
                                 result["point_errors"], result["converged"]):
        tag = "" if conv else "   [budget exhausted]"
        out.append(f"    R = {r:<8g} lambda* = {lam:.8g}   +/- {err:.3g}{tag}")
    if result["diverged"]:
        out.append("  verdict: discrete (exterior tones exceed the divergence threshold)")
    else:
        out.append(f"  essential bottom ~= {result['bottom']:.8g}"
                   f"   +/- {result['bottom_error']:.3g}")
    tr = result.get("transfer")
    if tr:
        out.append(f"  transfer: {tr['kind']}"
                   + (f"  value = {tr['value']:.8g}" if tr.get("value") is not None else "")
                   + (f"  interval = [{tr['interval'][0]:.8g}, {tr['interval'][1]:.8g}]"
                      if tr.get("interval") else ""))
        out.append(f"    fiber volume on window {tr['window']}:"
                   f" inf = {tr['inf_volume']:.6g}, sup = {tr['sup_volume']:.6g}"
                   f"  ({tr['note']})")


def _table_certify(result: dict, out: list):
    out.append(f"  certificate [{result['kind']}]  verdict: {result['verdict']}")
    if result.get("r_star") is not None:
        out.append(f"    tail window [{result['r_star']:g}, {result['horizon']:g}]")
    wit = result.get("witnesses", {})
    if "tail_inf" in wit:
        out.append(f"    driving inf = {wit['tail_inf']:.8g}, sup = {wit['tail_sup']:.8g}")
    if result.get("bound") is not None:
        out.append(f"    certified bound = {result['bound']:.10g}")
    if "hypothesis_fail_t" in wit:
        out.append(f"    hypothesis failed at t = {wit['hypothesis_fail_t']:g}")


def _table_verify(result: dict, out: list):
    for rep in result["reports"]:
        flag = "PASS" if rep["passed"] else "FAIL"
        out.append(f"  [{flag}] {rep['check']:<16} max residual {rep['max_residual']:.3e}"
                   f" at t = {rep['argmax_t']:.4g} (tol {rep['tolerance']:g})")
    sign = result.get("sign")
    if sign:
        deg = " (degenerate)" if sign["degenerate"] else ""
        out.append(f"  mean-curvature sign: {sign['sign']:+d}{deg}"
                   f"  [residuals +{sign['plus']['max_residual']:.2e}"
                   f" / -{sign['minus']['max_residual']:.2e}]")


def _table_compare(result: dict, out: list):
    if not result["hypothesis_ok"]:
        out.append(f"  hypothesis NOT met: margin {result['hypothesis_margin']:.3e}"
                   f" at t = {result['hypothesis_fail_t']:g}")
        return
    flag = "PASS" if result["conclusion_ok"] else "FAIL"
    out.append(f"  [{flag}] curvature hypothesis holds; worst comparison gap"
               f" {result['max_violation']:.3e} at t = {result['worst_t']:.4g}"
               f" (tol {result['tol']:g})")
    cert = result.get("certificate")
    if cert:
        _table_certify(cert, out)


def _table_brooks(result: dict, out: list):
    out.append(f"  volume growth to r = {result['r_max']:g}:"
               f" mu_hat = {result['mu_hat']:.6g}"
               f" (previous decade {result['slope_previous']:.6g})")
    out.append(f"  volume diverges: {result['volume_diverges']},"
               f" slope stable: {result['slope_stable']}  ->  {result['verdict']}")
    if result.get("upper_bound") is not None:
        out.append(f"  essential bottom <= mu_hat^2/4 = {result['upper_bound']:.8g}")


_TABLE = {
    "tone": _table_tone,
    "ess": _table_ess,
    "certify": _table_certify,
    "verify": _table_verify,
    "compare": _table_compare,
    "brooks": _table_brooks,
}


def to_table(record: RunRecord) -> str:
    out = []
    name = record.scenario.get("name", "?")
    out.append(f"scenario: {name}")
    model = record.scenario.get("model", {})
    desc = f"  model: n={model.get('n', 2)}, f={model.get('f', 'euclidean')!r}"
    if "psi" in model:
        desc += f", m={model.get('m', 1)}, psi={model.get('psi')!r}"
    out.append(desc)
    for i, entry in enumerate(record.results):
        out.append(f"task {i + 1}: {entry['task']}")
        if entry.get("ok"):
            _TABLE[entry["task"]](entry["result"], out)
        else:
            out.append(f"  ERROR: {entry.get('error', 'unknown failure')}")
    if record.wall_time is not None:
        out.append(f"wall time: {record.wall_time:.3f} s")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------


def to_json(record: RunRecord) -> str:
    payload = {
        "scenario": record.scenario,
        "results": record.results,
        "versions": record.versions,
        "wall_time": None,  # excluded from the bit-for-bit contract
        "seed": record.seed,
    }
    return json.dumps(payload, indent=2) + "\n"


def parse_record(text: str) -> RunRecord:
    """Inverse of to_json: parse(emit(record)) == record up to wall_time."""
    d = json.loads(text)
    return RunRecord(scenario=d["scenario"], results=d["results"],
                     versions=d["versions"], wall_time=d.get("wall_time"),
                     seed=d.get("seed"))


def emit(record: RunRecord, format: str = "table",
         path: Optional[str] = None) -> str:
    """Render the record; write to path when given, return the text either way."""
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    if format == "table":
        text = to_table(record)
    elif format == "csv":
        text = to_csv(record)
    else:
        text = to_json(record)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
