"""Command-line front end: parse configs, dispatch experiments, write artifacts.

Every flag has a config-file equivalent (JSON, same key names with
underscores); precedence is built-in defaults, then the config file, then
the FLAGINT_SEED environment variable (seed only), then explicit flags.
Each run writes {experiment}-{seed}.csv and a JSON metadata sidecar into
the output directory and prints a one-line summary. Exit codes: 0 pass,
1 usage or accuracy error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .atoms import (
    atom_from_json,
    make_random_atom,
    noncancelling_counterpart,
    signum_atom_at_scale,
    validate_atom,
)
from .domain import Cube
from .errors import AccuracyError, FlagIntError, UsageError
from .experiments import (
    ScanResult,
    counterexample_growth,
    dilation_scan,
    frontier_map,
    hls_iteration_check,
    shell_decay_profile,
)
from .exponents import (
    ExponentConfig,
    as_rational,
    check_formula_one,
    check_formula_two,
    derive_ab,
)
from .kernel import FlagKernel, kernel_eval, point_pair
from .quadrature import (
    QuadratureSpec,
    TestFunction,
    apply_operator,
    indicator_box,
    smooth_bump,
)

EXPERIMENTS = (
    "check", "kernel", "apply", "atom-validate", "shells", "dilate",
    "counterexample", "frontier", "hls",
)

_COMMON_KEYS = {
    "n", "m", "alpha", "beta", "rho", "p", "q",
    "method", "samples", "points_per_axis", "seed", "target_rel_error",
    "inner_cutoff", "out", "jobs",
}

_EXTRA_KEYS: Dict[str, set] = {
    "check": set(),
    "kernel": {"x", "y"},
    "apply": {"x", "y", "payload", "radius", "box", "L", "atom_seed"},
    "atom-validate": {"atom", "L", "atom_seed", "atom_json", "normalization"},
    "shells": {"k_max", "l_max", "burn_in", "payload", "L", "radius"},
    "dilate": {"deltas", "lams", "payload", "radius", "box"},
    "counterexample": {"radii"},
    "frontier": {"alphas", "betas"},
    "hls": {"payload", "radius", "box"},
}

_COMMON_DEFAULTS = {
    "n": 1,
    "m": 1,
    "rho": "2",
    "method": "grid",
    "samples": 20000,
    "points_per_axis": 4,
    "seed": 0,
    "target_rel_error": 1e-3,
    "inner_cutoff": -20,
    "out": ".",
    "jobs": None,
}

_EXPERIMENT_DEFAULTS: Dict[str, Dict] = {
    "check": {},
    "kernel": {"alpha": "1/2", "beta": "1/2"},
    "apply": {"alpha": "1/2", "beta": "1/2", "payload": "indicator"},
    "atom-validate": {"atom": "signum", "L": 1, "atom_seed": 0},
    "shells": {
        "alpha": "9/10", "beta": "3/10", "q": "2",
        "k_max": 8, "l_max": 6, "burn_in": 3, "payload": "signum", "L": 0,
        "radius": 0.5,
    },
    "dilate": {
        "alpha": "9/10", "beta": "3/10", "p": "1", "q": "2",
        "deltas": "0.25,0.5,1,2,4", "lams": "1,2,4", "payload": "bump",
        "radius": 1.0,
    },
    "counterexample": {"q": "2", "radii": "10,100,1000,10000"},
    "frontier": {
        "q": "2",
        "alphas": "1/10,3/10,1/2,7/10,9/10",
        "betas": "3/10,2/5,1/2,3/5,7/10",
    },
    "hls": {
        "alpha": "9/10", "beta": "3/10", "p": "1", "q": "2",
        "payload": "indicator", "radius": 1.0,
    },
}

_REQUIRED: Dict[str, Tuple[str, ...]] = {
    "check": ("alpha", "beta"),
    "kernel": ("x", "y"),
    "apply": ("x", "y"),
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through UsageError
    # so usage problems map to exit code 1 as documented
    def error(self, message):
        raise UsageError(message)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--out", help="output directory (default .)")
    sub.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    sub.add_argument("--n", type=int, help="x-factor dimension")
    sub.add_argument("--m", type=int, help="y-factor dimension")
    sub.add_argument("--alpha", help="exact rational like 9/10")
    sub.add_argument("--beta", help="exact rational like 3/10")
    sub.add_argument("--rho", help="scaling exponent, rational >= 1")
    sub.add_argument("--p", help="source exponent, rational >= 1")
    sub.add_argument("--q", help="target exponent, rational > 1")
    sub.add_argument("--method", choices=("grid", "monte-carlo"))
    sub.add_argument("--samples", type=int)
    sub.add_argument("--points-per-axis", dest="points_per_axis", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--target-rel-error", dest="target_rel_error", type=float)
    sub.add_argument("--inner-cutoff", dest="inner_cutoff", type=int)


def _build_parser() -> _Parser:
    parser = _Parser(prog="flagint", description=__doc__)
    subs = parser.add_subparsers(dest="experiment", required=True)

    sub = subs.add_parser("check", help="evaluate the exponent conditions")
    _add_common(sub)

    sub = subs.add_parser("kernel", help="evaluate the kernel at a point")
    _add_common(sub)
    sub.add_argument("--x", help="comma-separated coordinates")
    sub.add_argument("--y", help="comma-separated coordinates")

    sub = subs.add_parser("apply", help="apply the operator at a point")
    _add_common(sub)
    sub.add_argument("--x", help="comma-separated coordinates")
    sub.add_argument("--y", help="comma-separated coordinates")
    sub.add_argument("--payload", choices=("indicator", "bump", "signum", "random-atom"))
    sub.add_argument("--radius", type=float)
    sub.add_argument("--box", help="per-axis lo:hi pairs, comma separated")
    sub.add_argument("--L", type=int, dest="L")
    sub.add_argument("--atom-seed", dest="atom_seed", type=int)

    sub = subs.add_parser("atom-validate", help="validate an atom")
    _add_common(sub)
    sub.add_argument("--atom", choices=("signum", "random"))
    sub.add_argument("--L", type=int, dest="L")
    sub.add_argument("--atom-seed", dest="atom_seed", type=int)
    sub.add_argument("--atom-json", dest="atom_json", help="load atom from JSON file")
    sub.add_argument("--normalization", choices=("strict", "relaxed"))

    sub = subs.add_parser("shells", help="shell-by-shell mass profile")
    _add_common(sub)
    sub.add_argument("--k-max", dest="k_max", type=int)
    sub.add_argument("--l-max", dest="l_max", type=int)
    sub.add_argument("--burn-in", dest="burn_in", type=int)
    sub.add_argument("--payload", choices=("signum", "indicator", "bump"))
    sub.add_argument("--L", type=int, dest="L")
    sub.add_argument("--radius", type=float)

    sub = subs.add_parser("dilate", help="dilation scaling scan")
    _add_common(sub)
    sub.add_argument("--deltas", help="comma-separated dilation factors")
    sub.add_argument("--lams", help="comma-separated y-only factors")
    sub.add_argument("--payload", choices=("bump", "indicator"))
    sub.add_argument("--radius", type=float)
    sub.add_argument("--box", help="per-axis lo:hi pairs, comma separated")

    sub = subs.add_parser("counterexample", help="truncated mass growth scan")
    _add_common(sub)
    sub.add_argument("--radii", help="comma-separated truncation radii")

    sub = subs.add_parser("frontier", help="theorem-vs-measurement map")
    _add_common(sub)
    sub.add_argument("--alphas", help="comma-separated rationals")
    sub.add_argument("--betas", help="comma-separated rationals")

    sub = subs.add_parser("hls", help="product-kernel domination check")
    _add_common(sub)
    sub.add_argument("--payload", choices=("indicator", "bump"))
    sub.add_argument("--radius", type=float)
    sub.add_argument("--box", help="per-axis lo:hi pairs, comma separated")

    return parser


# ---------------------------------------------------------------------------
# config merging


def _load_config_file(path: str, experiment: str) -> Dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    allowed = _COMMON_KEYS | _EXTRA_KEYS[experiment] | {"experiment"}
    for key in data:
        if key not in allowed:
            raise UsageError(
                f"unknown config key {key!r} for experiment {experiment!r}"
            )
    declared = data.get("experiment")
    if declared is not None and declared != experiment:
        raise UsageError(
            f"config file declares experiment {declared!r}, command line says {experiment!r}"
        )
    return {k: v for k, v in data.items() if k != "experiment"}


def _merge_config(args: argparse.Namespace) -> Dict:
    experiment = args.experiment
    merged = dict(_COMMON_DEFAULTS)
    merged.update(_EXPERIMENT_DEFAULTS[experiment])

    if args.config:
        merged.update(_load_config_file(args.config, experiment))

    env_seed = os.environ.get("FLAGINT_SEED")
    if env_seed is not None:
        try:
            merged["seed"] = int(env_seed)
        except ValueError as exc:
            raise UsageError(f"FLAGINT_SEED must be an integer, got {env_seed!r}") from exc

    keys = _COMMON_KEYS | _EXTRA_KEYS[experiment]
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value

    for key in _REQUIRED.get(experiment, ()):
        if merged.get(key) is None:
            raise UsageError(f"missing required field {key!r} for {experiment!r}")
    merged["experiment"] = experiment
    return merged


def _float_list(value, name: str) -> List[float]:
    if value is None:
        raise UsageError(f"missing list field {name!r}")
    if isinstance(value, str):
        tokens = [t.strip() for t in value.split(",") if t.strip()]
    elif isinstance(value, (list, tuple)):
        tokens = list(value)
    else:
        raise UsageError(f"{name!r} must be a comma string or a JSON array")
    try:
        out = [float(Fraction(str(t))) for t in tokens]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad value in {name!r}: {exc}") from exc
    if not out:
        raise UsageError(f"{name!r} is empty")
    return out


def _rational_list(value, name: str) -> List[Fraction]:
    if value is None:
        raise UsageError(f"missing list field {name!r}")
    if isinstance(value, str):
        tokens = [t.strip() for t in value.split(",") if t.strip()]
    elif isinstance(value, (list, tuple)):
        tokens = list(value)
    else:
        raise UsageError(f"{name!r} must be a comma string or a JSON array")
    if not tokens:
        raise UsageError(f"{name!r} is empty")
    return [as_rational(t, name) for t in tokens]


def _parse_box(value, dim: int, name: str = "box"):
    if value is None:
        return tuple((-1.0, 1.0) for _ in range(dim))
    if isinstance(value, str):
        pairs = [t.strip() for t in value.split(",") if t.strip()]
        try:
            box = tuple(
                (float(lo), float(hi))
                for lo, hi in (pair.split(":") for pair in pairs)
            )
        except ValueError as exc:
            raise UsageError(f"bad {name}: expected lo:hi pairs, got {value!r}") from exc
    elif isinstance(value, (list, tuple)):
        box = tuple((float(lo), float(hi)) for lo, hi in value)
    else:
        raise UsageError(f"{name!r} must be a comma string or a JSON array")
    if len(box) != dim:
        raise UsageError(f"{name!r} needs {dim} axes, got {len(box)}")
    return box


def _exponent_config(merged: Dict, need_p: bool = False, need_q: bool = False) -> ExponentConfig:
    for key in ("alpha", "beta"):
        if merged.get(key) is None:
            raise UsageError(f"missing required field {key!r}")
    if need_p and merged.get("p") is None:
        raise UsageError("missing required field 'p'")
    if need_q and merged.get("q") is None:
        raise UsageError("missing required field 'q'")
    return ExponentConfig(
        n=int(merged["n"]),
        m=int(merged["m"]),
        alpha=as_rational(merged["alpha"], "alpha"),
        beta=as_rational(merged["beta"], "beta"),
        rho=as_rational(merged["rho"], "rho"),
        p=None if merged.get("p") is None else as_rational(merged["p"], "p"),
        q=None if merged.get("q") is None else as_rational(merged["q"], "q"),
    )


def _quadrature_spec(merged: Dict) -> QuadratureSpec:
    return QuadratureSpec(
        method=str(merged["method"]),
        points_per_axis=int(merged["points_per_axis"]),
        samples=int(merged["samples"]),
        seed=int(merged["seed"]),
        inner_cutoff=int(merged["inner_cutoff"]),
        target_rel_error=float(merged["target_rel_error"]),
    )


def _jobs(merged: Dict) -> int:
    if merged.get("jobs") is None:
        return os.cpu_count() or 1
    jobs = int(merged["jobs"])
    if jobs < 1:
        raise UsageError("jobs must be >= 1")
    return jobs


def _config_echo(merged: Dict) -> Dict:
    echo = {}
    for key, value in sorted(merged.items()):
        if key in ("alpha", "beta", "rho", "p", "q") and value is not None:
            echo[key] = str(as_rational(value, key))
        elif key in ("alphas", "betas") and value is not None:
            echo[key] = [str(r) for r in _rational_list(value, key)]
        else:
            echo[key] = value
    return echo


# ---------------------------------------------------------------------------
# payload helpers


def _payload_for(merged: Dict, n: int, m: int) -> TestFunction:
    kind = merged.get("payload", "indicator")
    if kind == "indicator":
        box = _parse_box(merged.get("box"), n + m)
        return indicator_box(n, m, box)
    if kind == "bump":
        radius = float(merged.get("radius") or 1.0)
        return smooth_bump(n, m, tuple(0.0 for _ in range(n + m)), radius, 1.0)
    if kind == "signum":
        return signum_atom_at_scale(n, m, int(merged.get("L") or 0)).payload
    if kind == "random-atom":
        cube = Cube(n=n, m=m, L=int(merged.get("L") or 0))
        return make_random_atom(cube, int(merged.get("atom_seed") or 0)).payload
    raise UsageError(f"unknown payload kind {kind!r}")


# ---------------------------------------------------------------------------
# per-experiment runners; each returns (result, summary, status)


def _run_check(merged: Dict, spec: QuadratureSpec):
    cfg = _exponent_config(merged)
    rows = []
    parts = []
    if cfg.p is not None and cfg.q is not None:
        ok1 = check_formula_one(cfg)
        rows.append({
            "formula": "formula-one", "value": ok1, "err": None,
            "label": "SATISFIED" if ok1 else "VIOLATED", "case": "",
        })
        parts.append(f"formula-one: {'SATISFIED' if ok1 else 'VIOLATED'}")
    if cfg.q is not None:
        ok2 = check_formula_two(cfg)
        rows.append({
            "formula": "formula-two", "value": ok2, "err": None,
            "label": "SATISFIED" if ok2 else "VIOLATED", "case": "",
        })
        parts.append(f"formula-two: {'SATISFIED' if ok2 else 'VIOLATED'}")
    if not rows:
        raise UsageError("check needs q (and optionally p)")
    metadata = {"seed": spec.seed, "summary": "; ".join(parts)}
    if cfg.alpha * cfg.m >= cfg.beta * cfg.n:
        ab = derive_ab(cfg)
        metadata["derived"] = {"a": str(ab.a), "b": str(ab.b)}
    result = ScanResult(
        experiment="check",
        columns=("formula", "value", "err", "label", "case"),
        rows=rows,
        metadata=metadata,
    )
    status = 0 if all(r["value"] for r in rows) else 2
    return result, "; ".join(parts), status


def _run_kernel(merged: Dict, spec: QuadratureSpec):
    cfg = _exponent_config(merged)
    x = _float_list(merged.get("x"), "x")
    y = _float_list(merged.get("y"), "y")
    if len(x) != cfg.n or len(y) != cfg.m:
        raise UsageError(f"need {cfg.n} x-coordinates and {cfg.m} y-coordinates")
    value = kernel_eval(FlagKernel(cfg), point_pair(x, y))
    row = {
        "x": ";".join(repr(v) for v in x),
        "y": ";".join(repr(v) for v in y),
        "value": value, "err": 0.0, "label": "kernel", "case": "",
    }
    result = ScanResult(
        experiment="kernel",
        columns=("x", "y", "value", "err", "label", "case"),
        rows=[row],
        metadata={"seed": spec.seed},
    )
    return result, f"kernel value {value!r}", 0


def _run_apply(merged: Dict, spec: QuadratureSpec):
    cfg = _exponent_config(merged)
    x = _float_list(merged.get("x"), "x")
    y = _float_list(merged.get("y"), "y")
    if len(x) != cfg.n or len(y) != cfg.m:
        raise UsageError(f"need {cfg.n} x-coordinates and {cfg.m} y-coordinates")
    f = _payload_for(merged, cfg.n, cfg.m)
    pt = point_pair(x, y)
    status = 0
    try:
        value, err = apply_operator(cfg, f, pt, spec)
        label, case = "apply", ""
    except AccuracyError as exc:
        value, err, label, case = exc.value, exc.err, "UNRESOLVED", "accuracy-error"
        status = 1
    row = {
        "x": ";".join(repr(v) for v in x),
        "y": ";".join(repr(v) for v in y),
        "value": float(value), "err": float(err), "label": label, "case": case,
    }
    result = ScanResult(
        experiment="apply",
        columns=("x", "y", "value", "err", "label", "case"),
        rows=[row],
        metadata={"seed": spec.seed},
    )
    summary = f"operator value {value!r} +/- {err!r}" + (
        " UNRESOLVED" if status else ""
    )
    return result, summary, status


def _run_atom_validate(merged: Dict, spec: QuadratureSpec):
    n, m = int(merged["n"]), int(merged["m"])
    if merged.get("atom_json"):
        try:
            with open(merged["atom_json"], "r", encoding="utf-8") as fh:
                atom = atom_from_json(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read atom file: {exc}") from exc
    elif merged.get("atom", "signum") == "signum":
        atom = signum_atom_at_scale(n, m, int(merged.get("L") or 1))
    else:
        cube = Cube(n=n, m=m, L=int(merged.get("L") or 0))
        atom = make_random_atom(cube, int(merged.get("atom_seed") or 0))
    report = validate_atom(atom, normalization=merged.get("normalization"))
    rows = [
        {"property": name, "value": getattr(report, name), "err": None,
         "label": "atom-validate", "case": report.normalization}
        for name in ("support_ok", "bound_ok", "mean_ok")
    ]
    rows.append({"property": "mean", "value": report.mean, "err": None,
                 "label": "atom-validate", "case": report.normalization})
    rows.append({"property": "sup", "value": report.sup, "err": None,
                 "label": "atom-validate", "case": report.normalization})
    result = ScanResult(
        experiment="atom-validate",
        columns=("property", "value", "err", "label", "case"),
        rows=rows,
        metadata={"seed": spec.seed, "report": {
            "support_ok": report.support_ok, "bound_ok": report.bound_ok,
            "mean_ok": report.mean_ok, "mean": report.mean, "sup": report.sup,
            "normalization": report.normalization,
        }},
    )
    verdict = "VALID" if report.ok else "INVALID"
    summary = (
        f"atom {verdict} (support {report.support_ok}, bound {report.bound_ok}, "
        f"mean {report.mean_ok})"
    )
    return result, summary, 0 if report.ok else 2


def _run_shells(merged: Dict, spec: QuadratureSpec):
    cfg = _exponent_config(merged, need_q=True)
    L = int(merged.get("L") or 0)
    kind = merged.get("payload", "signum")
    if kind == "signum":
        subject = signum_atom_at_scale(cfg.n, cfg.m, L)
    elif kind == "indicator":
        subject = noncancelling_counterpart(signum_atom_at_scale(cfg.n, cfg.m, L))
    elif kind == "bump":
        radius = float(merged.get("radius") or 2.0 ** (L - 1))
        subject = smooth_bump(
            cfg.n, cfg.m, tuple(0.0 for _ in range(cfg.n + cfg.m)), radius, 1.0
        )
    else:
        raise UsageError(f"unknown payload kind {kind!r}")
    result = shell_decay_profile(
        cfg, subject, int(merged["k_max"]), int(merged["l_max"]), spec,
        burn_in=int(merged["burn_in"]), jobs=_jobs(merged),
    )
    fit = result.metadata.get("k_fit")
    tail = result.metadata.get("tail_fraction")
    target = -float(cfg.q) + 0.5
    ok = (
        fit is not None and fit["slope"] <= target
        and tail is not None and tail < 0.01
    )
    if fit is None:
        slope_txt = "unavailable (k window too small for a fit)"
    else:
        slope_txt = repr(fit["slope"])
    summary = (
        f"shells: k-slope {slope_txt} (target <= {target!r}), "
        f"tail {tail!r} ({'PASS' if ok else 'FAIL'})"
    )
    return result, summary, 0 if ok else 2


def _run_dilate(merged: Dict, spec: QuadratureSpec):
    cfg = _exponent_config(merged, need_p=True, need_q=True)
    f = _payload_for({**merged, "payload": merged.get("payload", "bump")},
                     cfg.n, cfg.m)
    deltas = _float_list(merged["deltas"], "deltas")
    lams = _float_list(merged["lams"], "lams")
    result = dilation_scan(cfg, f, deltas, lams, spec, jobs=_jobs(merged))
    meta = result.metadata
    ok = meta["unresolved_rows"] == 0
    secant = meta["delta_secant"]
    if secant is not None:
        ok = ok and abs(secant - meta["predicted_delta_slope"]) <= 0.05
    for value in meta["lambda_secants"].values():
        ok = ok and value >= meta["predicted_lambda_slope_lower"] - 0.05
    status = 1 if meta["unresolved_rows"] else (0 if ok else 2)
    summary = (
        f"dilate: delta secant {secant!r} vs predicted "
        f"{meta['predicted_delta_slope']!r} ({'PASS' if status == 0 else 'FAIL'})"
    )
    return result, summary, status


def _run_counterexample(merged: Dict, spec: QuadratureSpec):
    result = counterexample_growth(
        int(merged["n"]), int(merged["m"]), merged["rho"], merged["q"],
        _float_list(merged["radii"], "radii"), spec,
        alpha=merged.get("alpha"), beta=merged.get("beta"),
        jobs=_jobs(merged),
    )
    meta = result.metadata
    if meta["case"] == "critical":
        ok = meta["increasing"] and meta["decade_fit_ok"] is not False
        what = f"increasing {meta['increasing']}, decade fit ok {meta['decade_fit_ok']}"
    else:
        frac = meta["last_increment_fraction"]
        ok = frac is not None and frac < 0.05
        what = f"last-decade increment fraction {frac!r}"
    summary = f"counterexample ({meta['case']}): {what} ({'PASS' if ok else 'FAIL'})"
    return result, summary, 0 if ok else 2


def _run_frontier(merged: Dict, spec: QuadratureSpec):
    result = frontier_map(
        int(merged["n"]), int(merged["m"]), merged["rho"], merged["q"],
        _rational_list(merged["alphas"], "alphas"),
        _rational_list(merged["betas"], "betas"),
        spec, jobs=_jobs(merged),
    )
    meta = result.metadata
    accuracy_failures = sum(1 for r in result.rows if r["case"] == "accuracy-error")
    if accuracy_failures:
        status = 1
    elif meta["off_diagonal"] > 0:
        status = 2
    else:
        status = 0
    summary = f"frontier: {meta['summary']} ({'PASS' if status == 0 else 'FAIL'})"
    return result, summary, status


def _run_hls(merged: Dict, spec: QuadratureSpec):
    cfg = _exponent_config(merged, need_p=True, need_q=True)
    f = _payload_for(merged, cfg.n, cfg.m)
    report = hls_iteration_check(cfg, f, spec)
    row = {
        "left": report.left, "left_err": report.left_err,
        "right": report.right, "right_err": report.right_err,
        "a": report.a, "b": report.b,
        "value": report.gap, "err": report.left_err + report.right_err,
        "label": "DOMINATED" if report.ok else "VIOLATION", "case": "",
    }
    result = ScanResult(
        experiment="hls",
        columns=("left", "left_err", "right", "right_err", "a", "b",
                 "value", "err", "label", "case"),
        rows=[row],
        metadata={"seed": spec.seed, "report": report.as_dict()},
    )
    summary = (
        f"hls: left {report.left!r} <= right {report.right!r} "
        f"({'PASS' if report.ok else 'FAIL'})"
    )
    return result, summary, 0 if report.ok else 2


_RUNNERS = {
    "check": _run_check,
    "kernel": _run_kernel,
    "apply": _run_apply,
    "atom-validate": _run_atom_validate,
    "shells": _run_shells,
    "dilate": _run_dilate,
    "counterexample": _run_counterexample,
    "frontier": _run_frontier,
    "hls": _run_hls,
}


def _write_artifacts(result: ScanResult, merged: Dict, spec: QuadratureSpec) -> Tuple[str, str]:
    out_dir = str(merged.get("out") or ".")
    os.makedirs(out_dir, exist_ok=True)
    result.metadata["run_config"] = _config_echo(merged)
    base = os.path.join(out_dir, f"{result.experiment}-{spec.seed}")
    csv_path = base + ".csv"
    json_path = base + ".json"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(result.to_csv_text())
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(result.to_json_text(
            written_at=datetime.now(timezone.utc).isoformat()
        ))
    return csv_path, json_path


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        merged = _merge_config(args)
        spec = _quadrature_spec(merged)
        runner = _RUNNERS[merged["experiment"]]
        t0 = time.perf_counter()
        result, summary, status = runner(merged, spec)
        if result.wall_time_s == 0.0:
            result.wall_time_s = time.perf_counter() - t0
        csv_path, json_path = _write_artifacts(result, merged, spec)
        print(summary)
        print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
        return status
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return 1
    except (FlagIntError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
