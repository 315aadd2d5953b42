"""Command-line entry point: classify | wkb | oracle | compare | stokes | migrate | verify.

A run is described by a JSON config file (potential, mu0, window, h list,
box, ...) with a handful of flag overrides.  All outputs are deterministic
JSON: the same config produces bit-identical bytes.  Exit codes: 0 ok,
1 verification failed, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .action import ActionError
from .numerics import NewtonError, QuadratureError, StepSizeError, WindingError
from .oracle import OracleError, find_eigenvalues
from .potential import Potential, PotentialError, detect_parity, from_config, sup_abs
from .quantize import QuantizeError, enumerate_indices, predict_splitting, solve_bs_double, solve_bs_single
from .stokes import StokesError, build_graph, z_profile
from .turning import TurningPointError, classify, migration_path

NUMERICAL_ERRORS = (
    ActionError,
    NewtonError,
    OracleError,
    PotentialError,
    QuadratureError,
    QuantizeError,
    StepSizeError,
    StokesError,
    TurningPointError,
    WindingError,
)


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def load_config(args) -> dict:
    config = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            config = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
    if args.mu0 is not None:
        config["mu0"] = args.mu0
    if args.eps is not None:
        config["epsilon"] = args.eps
    if args.h is not None:
        config["h"] = [float(tok) for tok in args.h.split(",") if tok]
    if args.box is not None:
        parts = [float(tok) for tok in args.box.split(",")]
        if len(parts) != 4:
            raise UsageError("--box needs four comma-separated numbers a,b,c,d")
        config["box"] = parts
    if args.parity is not None:
        config["parity"] = args.parity
    if args.seed_k is not None:
        config["seed_k"] = args.seed_k
    if args.out is not None:
        config["out"] = args.out
    return config


def _potential(config: dict) -> Potential:
    if "potential" not in config:
        raise UsageError("config needs a 'potential' entry ({'expr': ...} or {'builtin': ...})")
    V = from_config(config["potential"])
    parity = config.get("parity")
    if parity:
        if parity not in ("even", "odd", "none"):
            raise UsageError(f"parity must be even|odd|none, not {parity!r}")
        V.parity = parity
    elif V.parity == "none":
        V.parity = detect_parity(V)
    return V


def _window(config: dict, V: Potential) -> tuple[float, float]:
    if "window" in config:
        lo, hi = config["window"]
        return float(lo), float(hi)
    if "mu0" not in config:
        raise UsageError("config needs 'mu0' (or an explicit 'window')")
    mu0 = float(config["mu0"])
    eps = float(config.get("epsilon", 0.05 * mu0))
    return mu0 - eps, mu0 + eps


def _box(config: dict, window: tuple[float, float]) -> tuple[float, float, float, float]:
    if "box" in config:
        a, b, c, d = (float(t) for t in config["box"])
        return a, b, c, d
    return (-0.05, 0.05, window[0], window[1])


def cmd_classify(config: dict) -> int:
    V = _potential(config)
    if "mu0" not in config:
        raise UsageError("classify needs 'mu0'")
    cfg = classify(V, float(config["mu0"]))
    report = {
        "mu0": float(config["mu0"]),
        "v0": sup_abs(V),
        "kind": cfg.kind,
        "points": [[p.real, p.imag] for p in cfg.points],
        "derivative_signs": list(cfg.derivative_signs),
        "middle_sign": cfg.middle_sign,
        "parity": V.parity,
    }
    _emit(_dump(report), config.get("out"))
    return 0


def _wkb_predictions(config: dict, V: Potential, window) -> list:
    hs = config.get("h")
    if not hs:
        raise UsageError("config needs a nonempty 'h' list")
    kind = classify(V, 0.5 * (window[0] + window[1])).kind
    preds = []
    for h in hs:
        for k in enumerate_indices(V, window, float(h)):
            if kind == "single":
                preds.append(solve_bs_single(V, window, float(h), k))
            else:
                preds.append(solve_bs_double(V, window, float(h), k))
                if V.parity in ("even", "odd"):
                    preds.append(predict_splitting(V, window, float(h), k))
    preds.sort(key=lambda p: (p.k, p.h, p.method))
    return preds


def cmd_wkb(config: dict) -> int:
    V = _potential(config)
    window = _window(config, V)
    preds = _wkb_predictions(config, V, window)
    lines = "\n".join(_dump(p.to_json()) for p in preds)
    _emit(lines, config.get("out"))
    return 0


def cmd_oracle(config: dict) -> int:
    V = _potential(config)
    window = _window(config, V)
    box = _box(config, window)
    hs = config.get("h")
    if not hs:
        raise UsageError("config needs a nonempty 'h' list")
    results = []
    for h in hs:
        try:
            seeds = [
                lam
                for p in _wkb_predictions({**config, "h": [h]}, V, window)
                for lam in p.lambdas
            ]
        except NUMERICAL_ERRORS:
            seeds = None  # oracle still works unseeded via subdivision
        res = find_eigenvalues(V, float(h), box, seeds=seeds)
        results.append(res.to_json())
    _emit("\n".join(_dump(r) for r in results), config.get("out"))
    return 0


def cmd_compare(config: dict) -> int:
    V = _potential(config)
    window = _window(config, V)
    box = _box(config, window)
    hs = config.get("h")
    if not hs:
        raise UsageError("config needs a nonempty 'h' list")
    rows, failures = [], []
    for h in hs:
        preds = _wkb_predictions({**config, "h": [h]}, V, window)
        seeds = [lam for p in preds for lam in p.lambdas]
        res = find_eigenvalues(V, float(h), box, seeds=seeds)
        oracle = [z for z, _ in res.eigenvalues]
        wkb = [
            (p, lam)
            for p in preds
            if p.method in ("SL-BS", "DL-SPLIT-EVEN", "DL-SPLIT-ODD")
            for lam in p.lambdas
        ]
        if len(wkb) != len(oracle):
            failures.append(
                {"h": h, "wkb_count": len(wkb), "oracle_count": len(oracle)}
            )
        for p, lam in wkb:
            if not oracle:
                continue
            nearest = min(oracle, key=lambda z: abs(z - lam))
            delta = abs(nearest - lam)
            rows.append(
                {
                    "k": p.k,
                    "h": p.h,
                    "method": p.method,
                    "lambda_wkb": [lam.real, lam.imag],
                    "lambda_oracle": [nearest.real, nearest.imag],
                    "abs_delta": delta,
                    "delta_over_h2": delta / p.h**2,
                }
            )
    rows.sort(key=lambda r: (r["k"], r["h"], r["method"], r["lambda_wkb"]))
    _emit(_dump({"rows": rows, "pairing_failures": failures}), config.get("out"))
    return 0


def _field_grid(V: Potential, mu: complex, graph) -> dict:
    """Re z sampled on a rectangle around the turning points for shading."""
    pts = graph.turning_points
    x_lo = min(p.real for p in pts) - 2.0
    x_hi = max(p.real for p in pts) + 2.0
    y_hi = 0.95 * V.strip_halfwidth
    xs = np.linspace(x_lo, x_hi, 161)
    ys = np.linspace(-y_hi, y_hi, 81)
    top_row = xs + 1j * ys[-1]
    z_top = z_profile(V, mu, top_row)
    re_z = np.empty((len(ys), len(xs)))
    for j, x in enumerate(xs):
        column = x + 1j * ys[::-1]
        z_col = z_profile(V, mu, column)
        re_z[::-1, j] = (z_top[j] + z_col).real
    return {
        "x": [float(v) for v in xs],
        "y": [float(v) for v in ys],
        "re_z": [[float(v) for v in row] for row in re_z],
    }


def cmd_stokes(config: dict) -> int:
    V = _potential(config)
    if "mu0" not in config:
        raise UsageError("stokes needs 'mu0'")
    mu = complex(float(config["mu0"]), float(config.get("mu_imag", 0.0)))
    graph = build_graph(V, mu)
    blob = graph.to_json()
    if config.get("field"):
        blob["field"] = _field_grid(V, mu, graph)
    _emit(_dump(blob), config.get("out"))
    return 0


def cmd_migrate(config: dict) -> int:
    V = _potential(config)
    if "mu0" not in config:
        raise UsageError("migrate needs 'mu0'")
    frames = migration_path(
        V,
        float(config["mu0"]),
        float(config.get("angle", math.pi)),
        int(config.get("frames", 64)),
    )
    blob = [
        {"mu": [mu.real, mu.imag], "points": [[p.real, p.imag] for p in pts]}
        for mu, pts in frames
    ]
    _emit(_dump(blob), config.get("out"))
    return 0


def cmd_verify(config: dict) -> int:
    scale = config.get("scale", "full")
    tolerances = config.get("tolerances")
    try:
        results = verify_mod.run_suite(scale, tolerances)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for res in results:
        print(res.line())
    report = {
        "criteria": [
            {"name": r.name, "passed": r.passed, "details": r.details} for r in results
        ],
    }
    for r in results:
        if r.data.get("kind") == "gapscaling":
            report["gap_scaling"] = r.data
    if config.get("out"):
        Path(config["out"]).write_text(_dump(report) + "\n", encoding="utf-8")
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "classify": cmd_classify,
    "wkb": cmd_wkb,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
    "stokes": cmd_stokes,
    "migrate": cmd_migrate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zss",
        description="Semiclassical eigenvalues of the Zakharov-Shabat operator: "
        "quantization conditions, tunneling splitting, and a direct ODE oracle.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--h", help="comma-separated list of h values")
    parser.add_argument("--mu0", type=float, help="spectral anchor mu0")
    parser.add_argument("--eps", type=float, help="window radius around mu0")
    parser.add_argument("--box", help="search box re_lo,re_hi,im_lo,im_hi")
    parser.add_argument("--parity", choices=["even", "odd", "none"])
    parser.add_argument("--seed-k", dest="seed_k", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        return COMMANDS[args.command](config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
