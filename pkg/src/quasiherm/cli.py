"""Command-line front end.

Usage::

    quasih [COMMAND] --config run.json [--output out.csv] [--format csv|json]

The configuration is a flat JSON object naming the model, its parameters and
the command (the positional COMMAND overrides ``"command"``).  Exit status is
0 on success, 2 when a certification gate or another domain check fails
(the gate is named on stderr) and 3 on malformed or invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from itertools import product

import jsonschema
import numpy as np

from . import brachistochrone, fockmodel, matops, metric, transitions, twolevel
from .errors import CertificationError, ComplexSpectrumRegime, QuasiHermError
from .fockmodel import OscParams
from .twolevel import TwoLevelParams

EXIT_OK, EXIT_GATE, EXIT_SCHEMA = 0, 2, 3
COMMANDS = ("spectrum", "metric-check", "observables", "transition", "ep-scan",
            "brachistochrone", "sweep")
MODELS = ("twolevel", "oscillator", "user-matrix")

_matrix = {
    "type": "object",
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "re": {"type": "array"},
        "im": {"type": "array"},
    },
    "required": ["dim", "re"],
    "additionalProperties": False,
}
_range = {
    "type": "object",
    "properties": {
        "start": {"type": "number"},
        "stop": {"type": "number"},
        "count": {"type": "integer", "minimum": 0},
    },
    "required": ["start", "stop", "count"],
    "additionalProperties": False,
}
_swept = {
    "type": "object",
    "properties": {"param": {"type": "string"}, **_range["properties"]},
    "required": ["param", "start", "stop", "count"],
    "additionalProperties": False,
}
CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model": {"enum": list(MODELS)},
        "command": {"enum": list(COMMANDS)},
        "r": {"type": "number"},
        "s": {"type": "number"},
        "theta": {"type": "number"},
        "gamma": {"type": "number"},
        "omega": {"type": "number", "exclusiveMinimum": 0},
        "alpha": {"type": "number"},
        "beta": {"type": "number"},
        "N": {"type": "integer", "minimum": 2},
        "z": {"type": "number", "minimum": -1, "maximum": 1},
        "H": _matrix,
        "metric": _matrix,
        "observables": {"type": "object", "additionalProperties": _matrix},
        "n": {"type": "integer", "minimum": 0},
        "m": {"type": "integer", "minimum": 0},
        "observable": {"type": "string"},
        "poly_coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "n_max": {"type": "integer", "minimum": 0},
        "theta_grid": _range,
        "sweep": {"type": "array", "items": _swept, "minItems": 1, "maxItems": 2},
        "over": {"enum": [c for c in COMMANDS if c != "sweep"]},
        "output": {"type": "string"},
        "format": {"enum": ["csv", "json"]},
        "tolerances": {
            "type": "object",
            "properties": {"tol": {"type": "number", "exclusiveMinimum": 0}},
            "additionalProperties": False,
        },
    },
    "required": ["model"],
    "additionalProperties": False,
}
MODEL_KEYS = {
    "twolevel": {"r", "s", "theta", "gamma"},
    "oscillator": {"omega", "alpha", "beta", "N", "z"},
    "user-matrix": {"H", "metric", "observables"},
}


class ConfigError(Exception):
    pass


def validate_config(cfg) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message) from exc
    model = cfg["model"]
    foreign = set().union(*(v for k, v in MODEL_KEYS.items() if k != model)) - MODEL_KEYS[model]
    bad = sorted(foreign & set(cfg))
    if bad:
        raise ConfigError(f"keys {bad} do not apply to model {model!r}")
    if model == "user-matrix" and "H" not in cfg:
        raise ConfigError("user-matrix model needs an 'H' matrix")
    if cfg.get("command") == "sweep":
        if "sweep" not in cfg or "over" not in cfg:
            raise ConfigError("sweep needs 'sweep' ranges and an 'over' command")
        for item in cfg["sweep"]:
            if item["param"] not in MODEL_KEYS[model] - {"H", "metric", "observables"}:
                raise ConfigError(f"cannot sweep {item['param']!r} for model {model!r}")


# --------------------------------------------------------------------------- models


def two_params(cfg) -> TwoLevelParams:
    return TwoLevelParams(r=cfg.get("r", 1.0), s=cfg.get("s", 1.0),
                          theta=cfg.get("theta", 0.0), gamma=cfg.get("gamma", 0.0))


def osc_params(cfg) -> OscParams:
    return OscParams(omega=cfg.get("omega", 2.0), alpha=cfg.get("alpha", 0.5),
                     beta=cfg.get("beta", 0.3), truncation=cfg.get("N", 80), z=cfg.get("z", 0.0))


def _tol(cfg, kind="dense") -> float:
    return cfg.get("tolerances", {}).get("tol", matops.default_tol(kind))


def params_label(cfg) -> str:
    keys = sorted(MODEL_KEYS[cfg["model"]] & set(cfg) - {"H", "metric", "observables"})
    return ";".join(f"{k}={_fmt(cfg[k])}" for k in keys)


def _model_setup(cfg):
    """Hamiltonian, certified metric, observable table and block for a config."""
    model = cfg["model"]
    if model == "twolevel":
        p = two_params(cfg)
        tol = _tol(cfg)
        cm = twolevel.certified_metric(p, tol)
        H = twolevel.build_H(p)
        obs = {"H": H, "sigma_x": matops.SIGMA_X, "sigma_y": matops.SIGMA_Y,
               "sigma_z": matops.SIGMA_Z, "Sigma_z": metric.make_observable(matops.SIGMA_Z, cm)}
        return H, cm, obs
    if model == "oscillator":
        p = osc_params(cfg)
        cm = fockmodel.certified_theta_z(p, _tol(cfg, "fock"))
        H = fockmodel.build_oscillator_H(p)
        obs = {"H": H, **fockmodel.operator_table(p)}
        return H, cm, obs
    H = matops.matrix_from_json(cfg["H"])
    if "metric" not in cfg:
        raise ConfigError("user-matrix command needs a 'metric' matrix")
    cand = metric.MetricCandidate(matops.matrix_from_json(cfg["metric"]), label="user-metric")
    cm = metric.certify(cand, H, _tol(cfg))
    obs = {"H": H}
    obs.update({k: matops.matrix_from_json(v) for k, v in cfg.get("observables", {}).items()})
    return H, cm, obs


# ------------------------------------------------------------------------ commands
# Each command returns (columns, rows, document).

SPECTRUM_COLUMNS = {
    "twolevel": ["E_re_minus", "E_im_minus", "E_re_plus", "E_im_plus", "real_spectrum",
                 "numeric_residual"],
    "oscillator": ["n", "E_numeric", "E_exact", "rel_error"],
    "user-matrix": ["k", "E_re", "E_im", "condition"],
}
METRIC_COLUMNS = ["certified", "failed_gate", "hermitian_residual", "min_eigenvalue",
                  "quasi_residual", "condition_number"]
OBS_COLUMNS = ["observable", "admissible", "residual"]
TRANSITION_COLUMNS = ["model", "params", "n", "m", "observable", "P", "metric_id", "flags"]
EP_SCAN_COLUMNS = ["r", "s", "theta", "gamma", "E_re_minus", "E_im_minus", "E_re_plus",
                   "E_im_plus", "discriminant", "alignment_angle", "theta_min_eig", "is_ep"]


def cmd_spectrum(cfg):
    model = cfg["model"]
    if model == "twolevel":
        p = two_params(cfg)
        ex = twolevel.exact_eigensystem(p)
        es = matops.eig_general(twolevel.build_H(p), tol=1e-8)
        diff = float(np.max(np.abs(np.sort_complex(es.eigenvalues)
                                   - np.sort_complex(np.array([ex.E_minus, ex.E_plus])))))
        row = {"E_re_minus": ex.E_minus.real, "E_im_minus": ex.E_minus.imag,
               "E_re_plus": ex.E_plus.real, "E_im_plus": ex.E_plus.imag,
               "real_spectrum": p.real_spectrum, "numeric_residual": diff}
        doc = {"E_minus": ex.E_minus.real, "E_plus": ex.E_plus.real, **row}
        return SPECTRUM_COLUMNS[model], [row], doc
    if model == "oscillator":
        p = osc_params(cfg)
        n_max = cfg.get("n_max", 10)
        num = fockmodel.low_spectrum(p, n_max)
        exact = fockmodel.exact_spectrum(p, n_max)
        rows = [{"n": k, "E_numeric": num[k].real, "E_exact": exact[k],
                 "rel_error": abs(num[k] - exact[k]) / exact[k]} for k in range(n_max + 1)]
        return SPECTRUM_COLUMNS[model], rows, {"levels": rows, "Omega": p.Omega}
    es = matops.eig_general(matops.matrix_from_json(cfg["H"]), _tol(cfg))
    rows = [{"k": k, "E_re": w.real, "E_im": w.imag, "condition": c}
            for k, (w, c) in enumerate(zip(es.eigenvalues, es.condition))]
    return SPECTRUM_COLUMNS[model], rows, {"eigenvalues": rows, "near_defective": es.near_defective}


def _candidate(cfg):
    model = cfg["model"]
    if model == "twolevel":
        p = two_params(cfg)
        cand = metric.MetricCandidate(twolevel.theta_matrix(p.sin_alpha, math.sin(p.gamma)),
                                      source="constructed-from-model", label="twolevel")
        return cand, twolevel.build_H(p), None, _tol(cfg)
    if model == "oscillator":
        p = osc_params(cfg)
        return (fockmodel.build_theta_z(p), fockmodel.build_oscillator_H(p), p.interior,
                _tol(cfg, "fock"))
    if "metric" not in cfg:
        raise ConfigError("metric-check for user-matrix needs a 'metric' matrix")
    cand = metric.MetricCandidate(matops.matrix_from_json(cfg["metric"]), label="user-metric")
    return cand, matops.matrix_from_json(cfg["H"]), None, _tol(cfg)


def cmd_metric_check(cfg):
    cand, H, block, tol = _candidate(cfg)
    rep = metric.certification_report(cand, H, tol, block)
    row = {"certified": rep["certified"], "failed_gate": rep["failed_gate"] or "",
           "hermitian_residual": rep["gates"]["hermitian"]["residual"],
           "min_eigenvalue": rep["min_eigenvalue"],
           "quasi_residual": rep["gates"]["quasi"]["residual"],
           "condition_number": rep["condition_number"]}
    return METRIC_COLUMNS, [row], rep


def cmd_observables(cfg):
    H, cm, obs = _model_setup(cfg)
    rows = []
    for label in sorted(obs):
        ok, res = metric.is_observable(obs[label], cm)
        rows.append({"observable": label, "admissible": ok, "residual": res})
    return OBS_COLUMNS, rows, {"observables": rows, "tol": cm.tol, "block": cm.block}


def cmd_transition(cfg):
    H, cm, obs = _model_setup(cfg)
    label = cfg.get("observable", "Sigma_z" if cfg["model"] == "twolevel" else "H")
    if label not in obs:
        raise ConfigError(f"unknown observable {label!r}; available: {sorted(obs)}")
    n, m = cfg.get("n", 0), cfg.get("m", 1)
    if max(n, m) >= H.shape[0]:
        raise ConfigError(f"state index out of range for dim {H.shape[0]}")
    rep = transitions.transition_probability(n, m, obs[label], H, cm, label=label)
    doc = rep.as_dict()
    if "poly_coeffs" in cfg:
        ind = transitions.metric_independence_check(n, m, obs[label], H, cm, cfg["poly_coeffs"])
        doc["metric_independence"] = {"P_original": ind.P_original, "P_tilde": ind.P_tilde,
                                      "delta": ind.delta, "independent": ind.independent}
    row = {"model": cfg["model"], "params": params_label(cfg), "n": n, "m": m,
           "observable": label, "P": rep.probability, "metric_id": rep.metric_id,
           "flags": ";".join(sorted(rep.caveat_flags))}
    return TRANSITION_COLUMNS, [row], doc


def _grid(rng) -> list[float]:
    if rng["count"] == 0:
        return []
    return [float(v) for v in np.linspace(rng["start"], rng["stop"], rng["count"])]


def _require_twolevel(cfg, what):
    if cfg["model"] != "twolevel":
        raise ConfigError(f"{what} is defined for the twolevel model only")


def _ep_row(p: TwoLevelParams) -> dict:
    rep = twolevel.ep_report(p)
    Em, Ep = rep.eigenvalues
    return {"r": p.r, "s": p.s, "theta": p.theta, "gamma": p.gamma,
            "E_re_minus": Em.real, "E_im_minus": Em.imag, "E_re_plus": Ep.real,
            "E_im_plus": Ep.imag, "discriminant": rep.discriminant,
            "alignment_angle": rep.alignment_angle, "theta_min_eig": rep.theta_min_eigenvalue,
            "is_ep": rep.is_ep, "_near_defective": rep.is_ep or rep.condition > 1e8}


def cmd_ep_scan(cfg):
    _require_twolevel(cfg, "ep-scan")
    base = two_params(cfg)
    thetas = _grid(cfg["theta_grid"]) if "theta_grid" in cfg else [base.theta]
    rows = [_ep_row(base.with_(theta=t)) for t in thetas]
    return EP_SCAN_COLUMNS, rows, {"rows": rows}


def cmd_brachistochrone(cfg):
    _require_twolevel(cfg, "brachistochrone")
    base = two_params(cfg)
    thetas = _grid(cfg["theta_grid"]) if "theta_grid" in cfg else [base.theta]
    rows = brachistochrone.ep_approach_study(base.r, base.s, thetas, base.gamma)
    doc = {"rows": rows}
    if len(thetas) == 1:
        naive = brachistochrone.passage_time(base.with_(theta=thetas[0]), "naive_sigma")
        doc["naive"] = {"tau": naive.tau, "theta_overlap": naive.theta_overlap,
                        "caveat_flags": sorted(naive.caveat_flags),
                        "note": "diagnostic only: the sigma_z states are not orthogonal in the metric"}
    return list(brachistochrone.EP_STUDY_COLUMNS), rows, doc


HANDLERS = {
    "spectrum": cmd_spectrum,
    "metric-check": cmd_metric_check,
    "observables": cmd_observables,
    "transition": cmd_transition,
    "ep-scan": cmd_ep_scan,
    "brachistochrone": cmd_brachistochrone,
}


def _inner_columns(cfg, command) -> list[str]:
    return {
        "spectrum": SPECTRUM_COLUMNS[cfg["model"]],
        "metric-check": METRIC_COLUMNS,
        "observables": OBS_COLUMNS,
        "transition": TRANSITION_COLUMNS,
        "ep-scan": EP_SCAN_COLUMNS,
        "brachistochrone": list(brachistochrone.EP_STUDY_COLUMNS),
    }[command]


def _status(command, row) -> str:
    if command == "metric-check" and not row["certified"]:
        return row["failed_gate"]
    if command == "ep-scan" and row.get("_near_defective"):
        return "near_defective"
    return "ok"


def cmd_sweep(cfg):
    """Grid over one or two parameters; per-point failures become status rows."""
    inner = cfg["over"]
    names = [s["param"] for s in cfg["sweep"]]
    grids = [_grid(s) for s in cfg["sweep"]]
    inner_cols = [c for c in _inner_columns(cfg, inner) if c not in names]
    columns = names + ["status"] + inner_cols
    rows = []
    for combo in product(*grids):
        point = dict(cfg)
        point.pop("sweep"), point.pop("over")
        point["command"] = inner
        point.update(dict(zip(names, combo)))
        if inner in ("ep-scan", "brachistochrone"):
            point.pop("theta_grid", None)
        base = dict(zip(names, combo))
        try:
            _, sub, _ = HANDLERS[inner](point)
        except (QuasiHermError, ConfigError, ValueError) as exc:
            rows.append({**base, "status": type(exc).__name__})
            continue
        for r in sub:
            rows.append({**base, "status": _status(inner, r), **r})
    return columns, rows, {"columns": columns, "rows": rows}


HANDLERS["sweep"] = cmd_sweep


# -------------------------------------------------------------------------- output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(columns, rows, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def render_json(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def run(cfg: dict, output: str | None = None, fmt: str | None = None,
        stdout=None, stderr=None) -> int:
    """Validate ``cfg``, dispatch its command and write the report."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        validate_config(cfg)
        command = cfg.get("command")
        if command is None:
            raise ConfigError("no command given")
        output = output or cfg.get("output")
        fmt = fmt or cfg.get("format") or ("csv" if output and output.endswith(".csv") else "json")
        columns, rows, doc = HANDLERS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_SCHEMA
    except CertificationError as exc:
        print(f"certification failed: gate {exc.gate}: {exc}", file=stderr)
        return EXIT_GATE
    except QuasiHermError as exc:
        print(f"domain error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_GATE

    if command == "transition":
        stdout.write(render_json(doc))
        if fmt == "csv" and output:
            new = not os.path.exists(output) or os.path.getsize(output) == 0
            with open(output, "a", newline="") as fh:
                fh.write(render_csv(columns, rows, header=new))
        elif output:
            with open(output, "w") as fh:
                fh.write(render_json(doc))
    else:
        text = render_csv(columns, rows) if fmt == "csv" else render_json(doc)
        if output:
            with open(output, "w", newline="") as fh:
                fh.write(text)
        else:
            stdout.write(text)

    if command == "metric-check" and not doc["certified"]:
        print(f"certification failed: gate {doc['failed_gate']}", file=stderr)
        return EXIT_GATE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quasih", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="overrides the config's command")
    ap.add_argument("--config", required=True, help="path to the JSON run configuration")
    ap.add_argument("--output", help="report path (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if not isinstance(cfg, dict):
        print("config error: top level must be an object", file=sys.stderr)
        return EXIT_SCHEMA
    if args.command:
        cfg["command"] = args.command
    return run(cfg, args.output, args.format)


if __name__ == "__main__":
    sys.exit(main())
