"""Command line front end.

    kannanlab solve-ivp       --input params.json --out DIR [--override-hypotheses]
    kannanlab check-kannan    --input kannan.json --out DIR [--seed N]
    kannanlab verify-examples --out DIR [--input overrides.json]
    kannanlab mnc-suite       --input mnc.json --out DIR [--seed N]
    kannanlab sweep           --input sweep.json --out DIR

Exit codes: 0 success, 1 a hypothesis or verification check failed,
2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import ivp, kannan, mnc
from .fixpoint import ConvergenceError, SolveConfig
from .operators import KernelParams, kernel_bound_report

log = logging.getLogger("kannanlab")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
SUBCOMMANDS = ("solve-ivp", "check-kannan", "verify-examples", "mnc-suite", "sweep")


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    input_path: Path | None
    output_dir: Path
    seed: int = 0
    override_hypotheses: bool = False


_F_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(ivp.F_KINDS)},
        "lambda": {"type": "number"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_IVP_PROPS = {
    "variant": {"enum": list(ivp.VARIANTS)},
    "omega": {"type": "number", "not": {"const": 0}},
    "gamma": {"type": "number"},
    "a": {"type": "number"},
    "b": {"type": "number"},
    "f": _F_SCHEMA,
    "n": {"type": "integer", "minimum": 3},
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "max_iter": {"type": "integer", "minimum": 1},
    "override_hypotheses": {"type": "boolean"},
}

IVP_SCHEMA = {
    "type": "object",
    "properties": _IVP_PROPS,
    "required": ["variant", "omega"],
    "additionalProperties": False,
}

KANNAN_SCHEMA = {
    "type": "object",
    "properties": {
        "example": {"enum": ["2.3", "lp"]},
        "ivp": IVP_SCHEMA,
        "density": {"type": "integer", "minimum": 2},
        "k": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
    },
    "oneOf": [{"required": ["example"]}, {"required": ["ivp"]}],
    "additionalProperties": False,
}

EXAMPLES_SCHEMA = {
    "type": "object",
    "properties": {"density": {"type": "integer", "minimum": 2}},
    "additionalProperties": False,
}

_CLOUD = {"type": "array", "minItems": 1,
          "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}

MNC_SCHEMA = {
    "type": "object",
    "properties": {
        "S1": _CLOUD,
        "S2": _CLOUD,
        "S1_csv": {"type": "string"},
        "S2_csv": {"type": "string"},
        "c": {"type": "number"},
        "p": {"type": "integer", "minimum": 1},
        "random": {
            "type": "object",
            "properties": {
                "clouds": {"type": "integer", "minimum": 1},
                "max_size": {"type": "integer", "minimum": 2, "maximum": 20},
                "dim": {"type": "integer", "minimum": 1, "maximum": 3},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

SWEEP_SCHEMA = {
    "type": "object",
    "properties": {
        "omegas": {"type": "array", "minItems": 1,
                   "items": {"type": "number", "not": {"const": 0}}},
        "gammas": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "ivp": {
            "type": "object",
            "properties": {k: v for k, v in _IVP_PROPS.items() if k not in ("omega", "gamma")},
            "required": ["variant"],
            "additionalProperties": False,
        },
        "workers": {"type": "integer", "minimum": 1},
    },
    "required": ["omegas", "gammas"],
    "additionalProperties": False,
}


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, obj):
    _write_atomic(path, json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _load_json(path: Path | None, schema: dict, required: bool = True) -> dict:
    if path is None:
        if required:
            raise InputError("--input is required for this subcommand")
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"{path}: field '{where}': {exc.message}") from exc
    return data


def _ivp_params(d: dict) -> ivp.IvpParams:
    f = d.get("f", {"kind": "zero"})
    try:
        return ivp.IvpParams(
            omega=float(d["omega"]),
            gamma=float(d.get("gamma", 0.0)),
            a=float(d.get("a", 0.0)),
            b=float(d.get("b", 0.0)),
            f=ivp.FSpec(f["kind"], float(f.get("lambda", 0.0))),
            variant=d["variant"],
            n=int(d.get("n", 2001)),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _solve_cfg(d: dict) -> SolveConfig:
    return SolveConfig(tol=float(d.get("tol", 1e-10)), max_iter=int(d.get("max_iter", 1000)))


def cmd_solve_ivp(cfg: RunConfig) -> int:
    d = _load_json(cfg.input_path, IVP_SCHEMA)
    params = _ivp_params(d)
    override = cfg.override_hypotheses or bool(d.get("override_hypotheses", False))
    hyp = ivp.check_hypotheses(params, seed=cfg.seed)
    out = cfg.output_dir
    if not hyp.all_pass and not override:
        _write_json(out / "report.json", {"params": params.to_dict(), "hypotheses": hyp.to_dict(),
                                          "solved": False})
        log.error("hypotheses fail: %s", ", ".join(hyp.failing))
        return EXIT_FAIL
    try:
        sol = ivp.solve_ivp(params, _solve_cfg(d), override=override, hypotheses=hyp)
    except ConvergenceError as exc:
        _write_json(out / "report.json", {"params": params.to_dict(), "hypotheses": hyp.to_dict(),
                                          "solved": False, "error": str(exc)})
        log.error("%s", exc)
        return EXIT_FAIL
    report = sol.to_dict()
    report["solved"] = sol.report.converged
    report["residual_ode"] = ivp.residual_ode(sol.u, params)
    _write_atomic(out / "solution.csv", sol.u.to_csv())
    _write_json(out / "report.json", report)
    return EXIT_OK if sol.report.converged and sol.in_unit_ball else EXIT_FAIL


def _kannan_run(T, k: float, density: int, seed: int) -> dict:
    rep = kannan.estimate_kannan_constant(T, density, seed=seed)
    ok, witnesses = kannan.verify_kannan(T, k, density, seed=seed)
    d = rep.to_dict()
    d.update({"map": T.name, "density": density, "k_checked": k, "verified": ok,
              "counterexamples": [[kannan._jsonable(x) for x in w] for w in witnesses]})
    return d


def cmd_check_kannan(cfg: RunConfig) -> int:
    d = _load_json(cfg.input_path, KANNAN_SCHEMA)
    if "example" in d:
        if d["example"] == "2.3":
            T, k_default, density = kannan.build_example_2_3(), 0.4, 2001
        else:
            T, k_default, density = kannan.build_example_lp(), 1.0 / 7.0, 2001
    else:
        params = _ivp_params(d["ivp"])
        T = ivp.build_map(params)
        k_default, density = kernel_bound_report(params.kernel, n=2001).bound, 16
        if not k_default < 0.5:
            raise InputError("contraction bound for these parameters is not below 1/2; pass 'k'")
    k = float(d.get("k", k_default))
    density = int(d.get("density", density))
    result = _kannan_run(T, k, density, cfg.seed)
    _write_json(cfg.output_dir / "kannan_report.json", result)
    return EXIT_OK if result["verified"] and result["satisfied"] else EXIT_FAIL


def cmd_verify_examples(cfg: RunConfig) -> int:
    d = _load_json(cfg.input_path, EXAMPLES_SCHEMA, required=False)
    density = int(d.get("density", 2001))
    results = {
        "example_2_3": _kannan_run(kannan.build_example_2_3(), 0.4, density, cfg.seed),
        "example_lp": _kannan_run(kannan.build_example_lp(), 1.0 / 7.0, density, cfg.seed),
    }
    _write_json(cfg.output_dir / "examples_report.json", results)
    ok = all(r["verified"] and r["satisfied"] for r in results.values())
    return EXIT_OK if ok else EXIT_FAIL


def _random_cloud(rng, size, dim):
    return mnc.PointCloud(rng.uniform(-1.0, 1.0, (size, dim)))


def _cloud(d: dict, key: str) -> mnc.PointCloud | None:
    try:
        if key in d:
            return mnc.PointCloud(np.array(d[key], dtype=float))
        if f"{key}_csv" in d:
            return mnc.PointCloud.from_csv(Path(d[f"{key}_csv"]).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {d[f'{key}_csv']}: {exc.strerror}") from exc
    except ValueError as exc:
        raise InputError(f"field '{key}': {exc}") from exc
    return None


def cmd_mnc_suite(cfg: RunConfig) -> int:
    d = _load_json(cfg.input_path, MNC_SCHEMA)
    rng = np.random.default_rng(cfg.seed)
    c = float(d.get("c", -2.0))
    p = int(d.get("p", 2))
    runs = []
    S1, S2 = _cloud(d, "S1"), _cloud(d, "S2")
    if S1 is not None or S2 is not None:
        if S1 is None or S2 is None:
            raise InputError("both S1 and S2 are required")
        if S1.dim != S2.dim:
            raise InputError("S1 and S2 must share a dimension")
        if p > len(S1) or p > len(S2):
            raise InputError("p exceeds a cloud size")
        runs.append((S1, S2))
    if "random" in d:
        r = d["random"]
        for _ in range(int(r.get("clouds", 10))):
            dim = int(r.get("dim", 2))
            hi = int(r.get("max_size", 10))
            n1, n2 = rng.integers(p, hi + 1, size=2) if p <= hi else (p, p)
            runs.append((_random_cloud(rng, int(n1), dim), _random_cloud(rng, int(n2), dim)))
    if not runs:
        raise InputError("give S1/S2 (inline or *_csv) or a 'random' block")
    reports = []
    for A, B in runs:
        rep = mnc.mnc_property_suite(A, B, c, p)
        reports.append({"sizes": [len(A), len(B)], "dim": A.dim, **rep.to_dict()})
    ok = all(r["all_passed"] for r in reports)
    _write_json(cfg.output_dir / "mnc_report.json", {"c": c, "p": p, "all_passed": ok, "runs": reports})
    return EXIT_OK if ok else EXIT_FAIL


def _sweep_one(args):
    omega, gamma, base = args
    kb = kernel_bound_report(KernelParams(omega, gamma))
    row = kb.to_dict()
    if base is not None:
        d = dict(base, omega=omega, gamma=gamma)
        params = _ivp_params(d)
        hyp = ivp.check_hypotheses(params, cond_i_samples=0)
        row["hypotheses_pass"] = hyp.all_pass
        row["solved"] = False
        row["final_residual"] = None
        if hyp.all_pass:
            try:
                sol = ivp.solve_ivp(params, _solve_cfg(d), hypotheses=hyp)
                row["solved"] = sol.report.converged
                row["final_residual"] = sol.report.final_residual
            except ConvergenceError:
                pass
    return row


def cmd_sweep(cfg: RunConfig) -> int:
    d = _load_json(cfg.input_path, SWEEP_SCHEMA)
    base = d.get("ivp")
    jobs = [(float(w), float(g), base) for w in d["omegas"] for g in d["gammas"]]
    with ThreadPoolExecutor(max_workers=int(d.get("workers", 4))) as pool:
        rows = list(pool.map(_sweep_one, jobs))
    cols = list(rows[0].keys())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([f"{r[c]:.17g}" if isinstance(r[c], float) else r[c] for c in cols])
    _write_atomic(cfg.output_dir / "sweep.csv", buf.getvalue())
    _write_json(cfg.output_dir / "sweep.json", {"rows": rows})
    return EXIT_OK


_DISPATCH = {
    "solve-ivp": cmd_solve_ivp,
    "check-kannan": cmd_check_kannan,
    "verify-examples": cmd_verify_examples,
    "mnc-suite": cmd_mnc_suite,
    "sweep": cmd_sweep,
}


def run(config: RunConfig) -> int:
    try:
        return _DISPATCH[config.subcommand](config)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ivp.HypothesisError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kannanlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", type=Path, default=None, help="parameter file (JSON)")
        sp.add_argument("--out", type=Path, required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--override-hypotheses", action="store_true")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    config = RunConfig(args.subcommand, args.input, args.out, args.seed, args.override_hypotheses)
    code = run(config)
    if code == EXIT_OK:
        print(f"{config.subcommand}: ok ({config.output_dir})")
    elif code == EXIT_FAIL:
        print(f"{config.subcommand}: check failed ({config.output_dir})", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
