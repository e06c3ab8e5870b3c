"""Command-line interface: ``dppsw <subcommand> [flags]``.

Settings are layered as defaults < ``--preset`` < ``--config`` JSON file <
explicit flags.  Exit codes: 0 ok, 1 validation failure, 2 usage error,
3 numeric-range error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from typing import Any

import numpy as np

from . import __version__
from .figures import (
    BOUNDARY_TOL,
    FIT_MIN_N,
    PRESETS,
    WIDTH_CASES,
    WIDTH_NS,
    default_range,
    density_profile,
    width_study,
)
from .kernel import ModelParams, density, make_kernel, mapped_matrix
from .montecarlo import AcceptanceError, SimConfig, l1_to_density, sample
from .numerics import count_local_maxima
from .process import partition_function, partition_function_quadrature
from .svg import line_chart
from .swpoly import ParameterRangeError
from .validate import run_validation

__all__ = ["main", "build_parser", "resolve_config", "EXIT_OK", "EXIT_VALIDATION", "EXIT_USAGE", "EXIT_RANGE"]

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_RANGE = 0, 1, 2, 3

SUBCOMMANDS = ("density", "width", "sample", "partition", "kernel-eval", "validate")

DEFAULTS: dict[str, Any] = {
    "n": [3], "a": 1.0, "sigma": 1.0, "t": 1.0,
    "xmin": None, "xmax": None, "points": 401,
    "eps": 1e-3, "seed": 0, "paths": 10000, "method": "sde",
    "format": "csv", "out": None, "dt": None, "horizon": None,
    "companions": False,
}


class UsageError(ValueError):
    pass


class RangeFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# argument handling


def _n_list(text) -> list[int]:
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid N list {text!r}") from exc
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("N values must be positive integers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dppsw", description="Noncolliding Brownian motion with drift: "
                                     "densities, kernels, widths, sampling and validation.")
    parser.add_argument("--version", action="version", version=f"dppsw {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    S = argparse.SUPPRESS
    parser.add_argument("--n", type=_n_list, default=S, help="particle number, or a comma list (width, density)")
    parser.add_argument("--a", type=float, default=S, help="spacing of the initial points")
    parser.add_argument("--sigma", type=float, default=S, help="spacing of the drifts")
    parser.add_argument("--t", type=float, default=S, help="observation time")
    parser.add_argument("--xmin", type=float, default=S)
    parser.add_argument("--xmax", type=float, default=S)
    parser.add_argument("--points", type=int, default=S, help="grid points")
    parser.add_argument("--eps", type=float, default=S, help="width threshold")
    parser.add_argument("--seed", type=int, default=S)
    parser.add_argument("--paths", type=int, default=S, help="Monte Carlo sample count")
    parser.add_argument("--method", choices=("sde", "rejection"), default=S)
    parser.add_argument("--dt", type=float, default=S, help="sampler time step (default 1e-3 t)")
    parser.add_argument("--horizon", type=float, default=S, help="rejection horizon T (default t + 5 a/sigma)")
    parser.add_argument("--companions", action="store_true", default=S,
                        help="add driftless and semicircle columns to density output")
    parser.add_argument("--preset", choices=sorted(PRESETS), default=S)
    parser.add_argument("--format", choices=("csv", "json", "svg"), default=S)
    parser.add_argument("--out", default=S, help="output path (default stdout)")
    parser.add_argument("--config", default=S, help="JSON file with any of the flag names as keys")
    parser.add_argument("--inject-tn-scale", type=float, default=S, help=S)
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    """Merge defaults, preset, config file and flags (in increasing priority)."""
    flags = vars(ns).copy()
    sub = flags.pop("subcommand")
    cfg = dict(DEFAULTS)
    explicit: set[str] = set()
    file_cfg: dict = {}
    if "config" in flags:
        try:
            with open(flags.pop("config")) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
    preset = flags.get("preset", file_cfg.get("preset"))
    if preset is not None:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}")
        pre = dict(PRESETS[preset])
        if pre.pop("subcommand") != sub:
            raise UsageError(f"preset {preset} belongs to the '{PRESETS[preset]['subcommand']}' subcommand")
        if "n_list" in pre:
            pre["n"] = pre.pop("n_list")
        cfg.update(pre)
        explicit.update(pre)
        cfg["preset"] = preset
    for key, val in file_cfg.items():
        key = key.replace("-", "_")
        if key in ("preset", "subcommand"):
            continue
        if key not in DEFAULTS and key != "inject_tn_scale":
            raise UsageError(f"unknown config key {key!r}")
        cfg[key] = val
        explicit.add(key)
    cfg.update(flags)
    explicit.update(flags)
    try:
        cfg["n"] = _n_list(cfg["n"])
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc)) from exc
    cfg["subcommand"] = sub
    cfg["_explicit"] = explicit
    if cfg["format"] not in ("csv", "json", "svg"):
        raise UsageError(f"unknown format {cfg['format']!r}")
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def _g(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_g(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _json(params: dict, data, checks: dict) -> str:
    doc = {"schema": "dppsw.output/1", "params": params, "data": data, "checks": checks}
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def _params_out(cfg: dict, keys) -> dict:
    return {k: cfg[k] for k in keys if k in cfg}


def _emit(text: str, cfg: dict) -> None:
    out = cfg.get("out")
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from exc


def _grid(cfg: dict, N: int) -> np.ndarray:
    lo, hi = cfg["xmin"], cfg["xmax"]
    if lo is None or hi is None:
        dlo, dhi = default_range(N, cfg["a"], cfg["sigma"], cfg["t"])
        lo = dlo if lo is None else lo
        hi = dhi if hi is None else hi
    if not hi > lo:
        raise UsageError("need xmin < xmax")
    if cfg["points"] < 2:
        raise UsageError("need at least two grid points")
    return np.linspace(float(lo), float(hi), int(cfg["points"]))


def _params(cfg: dict, N: int) -> ModelParams:
    try:
        return ModelParams(N, cfg["a"], cfg["sigma"], cfg["t"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_density(cfg: dict) -> int:
    ns = cfg["n"]
    a, s, t = cfg["a"], cfg["sigma"], cfg["t"]
    if t <= 0 or a < 0 or s < 0 or (a == 0) != (s == 0):
        raise UsageError("need t > 0 and either a, sigma > 0 or a = sigma = 0")
    xs = _grid(cfg, max(ns))
    cols = {"x": xs}
    checks: dict[str, Any] = {}
    for N in ns:
        prof = density_profile(N, a, s, t, xs, companions=cfg["companions"])
        suffix = "" if len(ns) == 1 else f"_N{N}"
        for key, val in prof.items():
            if key != "x":
                cols[key + suffix] = val
        d = prof["density"]
        checks[f"N{N}"] = {
            "integral_trapezoid": float(np.trapezoid(d, xs)),
            "expected_integral": N,
            "local_maxima": count_local_maxima(d),
            "boundary_max": float(max(d[0], d[-1])),
        }
        if cfg.get("preset") and max(d[0], d[-1]) >= BOUNDARY_TOL:
            raise RangeFailure(f"preset range too narrow for N={N}: boundary density {max(d[0], d[-1]):.3g}")
    keys = ("preset", "n", "a", "sigma", "t", "points")
    params = _params_out(cfg, keys) | {"xmin": float(xs[0]), "xmax": float(xs[-1])}
    fmt = cfg["format"]
    if fmt == "csv":
        text = _csv(list(cols), zip(*cols.values()))
    elif fmt == "json":
        text = _json(params, cols, checks)
    else:
        series = [(k, xs, v) for k, v in cols.items() if k != "x"]
        text = line_chart(series, title=f"particle density, t={t:g}", xlabel="x", ylabel="density")
    _emit(text, cfg)
    return EXIT_OK


def cmd_width(cfg: dict) -> int:
    explicit = cfg["_explicit"]
    ns = cfg["n"] if "n" in explicit else list(WIDTH_NS)
    t = cfg["t"] if "t" in explicit else 1.5
    cases = ((cfg["a"], cfg["sigma"]),) if explicit & {"a", "sigma"} else WIDTH_CASES
    try:
        study = width_study(cases=cases, ns=ns, t=t, eps=cfg["eps"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = []
    for (a, s), ws in study.widths.items():
        c1, c2 = study.fits.get((a, s), (None, None))
        label = "zero-drift" if a == 0 and s == 0 else f"a={a:g} sigma={s:g}"
        for n, w in zip(study.ns, ws):
            rows.append([label, a, s, n, w, c1, c2])
    zero = study.widths.get((0.0, 0.0))
    checks: dict[str, Any] = {
        "fit_min_N": FIT_MIN_N,
        "fits": {f"a={a:g},sigma={s:g}": {"c1": c[0], "c2": c[1]} for (a, s), c in study.fits.items()},
    }
    if zero is not None:
        checks["zero_drift_ratio_to_4sqrt_tN"] = {
            str(n): w / (4 * math.sqrt(t * n)) for n, w in zip(study.ns, zero)}
    params = {"preset": cfg.get("preset"), "n": list(study.ns), "t": t, "eps": cfg["eps"],
              "cases": [list(c) for c in cases]}
    fmt = cfg["format"]
    if fmt == "csv":
        text = _csv(["case", "a", "sigma", "N", "width", "c1", "c2"], rows)
    elif fmt == "json":
        data = [dict(zip(["case", "a", "sigma", "N", "width", "c1", "c2"], r)) for r in rows]
        text = _json(params, data, checks)
    else:
        series = [("zero-drift" if k == (0.0, 0.0) else f"a=sigma={k[0]:g}", study.ns, ws)
                  for k, ws in study.widths.items()]
        text = line_chart(series, title=f"profile width, t={t:g}, eps={cfg['eps']:g}", xlabel="N",
                          ylabel="width", markers=True)
    _emit(text, cfg)
    return EXIT_OK


def cmd_sample(cfg: dict) -> int:
    if len(cfg["n"]) != 1:
        raise UsageError("sample takes a single N")
    p = _params(cfg, cfg["n"][0])
    try:
        sim = SimConfig(p, cfg["method"], dt=cfg["dt"], horizon_T=cfg["horizon"], num_paths=int(cfg["paths"]),
                        seed=int(cfg["seed"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        ens = sample(sim, p.t)
    except AcceptanceError as exc:
        raise RangeFailure(str(exc)) from exc
    h = make_kernel(p)
    lo, hi = default_range(p.N, p.a, p.sigma, p.t)
    l1 = l1_to_density(ens, lambda x: density(h, x), lo, hi)
    checks = {"l1_to_analytic": l1, "bandwidth": 0.25, "accepted": ens.accepted, "proposed": ens.proposed,
              "acceptance_ratio": ens.acceptance_ratio, "aborted": ens.aborted, "halvings": ens.halvings,
              "mean_position": float(ens.samples.mean()) if len(ens) else math.nan}
    params = _params_out(cfg, ("n", "a", "sigma", "t", "method", "seed", "paths")) | {
        "dt": ens.dt, "horizon": ens.horizon_T}
    fmt = cfg["format"]
    header = ["path"] + [f"x{j + 1}" for j in range(p.N)]
    rows = ([i] + list(r) for i, r in enumerate(ens.samples))
    if fmt == "csv":
        text = _csv(header, rows)
    elif fmt == "json":
        text = _json(params, {"samples": ens.samples}, checks)
    else:
        edges = np.linspace(lo, hi, int(round((hi - lo) / 0.25)) + 1)
        counts, _ = np.histogram(ens.samples.ravel(), bins=edges)
        mids = (edges[1:] + edges[:-1]) / 2
        emp = counts / (len(ens) * np.diff(edges))
        text = line_chart([("empirical", mids, emp), ("analytic", mids, density(h, mids))],
                          title=f"{cfg['method']} sampler, L1 = {l1:.4f}", xlabel="x", ylabel="density")
    _emit(text, cfg)
    return EXIT_OK


def cmd_partition(cfg: dict) -> int:
    if len(cfg["n"]) != 1:
        raise UsageError("partition takes a single N")
    p = _params(cfg, cfg["n"][0])
    lnZ = partition_function(p).logmag
    checks: dict[str, Any] = {"ln_Z_closed_form": lnZ}
    if p.N <= 3:
        oracle = partition_function_quadrature(p)
        checks["ln_Z_quadrature"] = oracle.logmag
        checks["relative_deviation"] = abs(math.expm1(oracle.logmag - lnZ))
    params = _params_out(cfg, ("n", "a", "sigma", "t"))
    fmt = cfg["format"]
    if fmt == "json":
        text = _json(params, {"ln_Z": lnZ}, checks)
    elif fmt == "csv":
        text = _csv(["quantity", "value"], list(checks.items()))
    else:
        raise UsageError("partition supports csv and json output")
    _emit(text, cfg)
    return EXIT_OK


def cmd_kernel_eval(cfg: dict) -> int:
    if len(cfg["n"]) != 1:
        raise UsageError("kernel-eval takes a single N")
    p = _params(cfg, cfg["n"][0])
    xs = _grid(cfg, p.N)
    K = mapped_matrix(make_kernel(p), xs)
    params = _params_out(cfg, ("n", "a", "sigma", "t", "points")) | {"xmin": float(xs[0]), "xmax": float(xs[-1])}
    fmt = cfg["format"]
    if fmt == "csv":
        text = _csv(["x", "y", "K"], ((xs[i], xs[j], K[i, j]) for i in range(xs.size) for j in range(xs.size)))
    elif fmt == "json":
        text = _json(params, {"x": xs, "K": K}, {"trace_trapezoid": float(np.trapezoid(np.diag(K), xs))})
    else:
        text = line_chart([("K(x,x)", xs, np.diag(K))], title="kernel diagonal", xlabel="x", ylabel="K")
    _emit(text, cfg)
    return EXIT_OK


def cmd_validate(cfg: dict) -> int:
    faults = {}
    if cfg.get("inject_tn_scale") is not None:
        faults["t_n_scale"] = float(cfg["inject_tn_scale"])
    report = run_validation(faults)
    _emit(json.dumps(_jsonable(report), indent=2) + "\n", cfg)
    for name in report["failures"]:
        print(f"FAILED: {name}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


COMMANDS = {
    "density": cmd_density,
    "width": cmd_width,
    "sample": cmd_sample,
    "partition": cmd_partition,
    "kernel-eval": cmd_kernel_eval,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve_config(ns)
        return COMMANDS[cfg["subcommand"]](cfg)
    except UsageError as exc:
        print(f"dppsw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RangeFailure, ParameterRangeError, FloatingPointError, OverflowError) as exc:
        print(f"dppsw: numeric range error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except BrokenPipeError:
        # downstream reader closed early (e.g. ``| head``); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
