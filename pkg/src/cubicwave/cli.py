"""Command-line entry point: ``cubicwave <subcommand> ...``.

Every run validates its configuration before computing, writes
``config.echo.json`` (resolved configuration plus content hash) and
``manifest.json`` (the artifacts produced) into the output directory, and
keeps timestamps in a separate ``run.log``.  Exit status is 0 on success,
1 on a compute failure and 2 on a usage or configuration error.  Artifacts
of a failed run are renamed with a ``.partial`` suffix.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from . import io
from .dynamics import BlowUpError, EvolutionAborted, SubInterval, WaveState, evolve, stability_bound
from .functionals import energy_trajectory, nonlinear_gain_norm, z_norm
from .imethod import (
    choose_N,
    increment_slope,
    run_gwp_experiment,
    sweep_cutoffs,
)
from .spectral import Grid3, MultiplierProfile, recipe_from_dict
from .symbol import commutator_check, increment_shell_breakdown, verify_symbol_bounds

log = logging.getLogger("cubicwave")

SUBCOMMANDS = ("simulate", "diagnose", "almost-conservation", "gwp", "verify-symbol", "breakdown")
AUTO = "auto"
ECHO = "config.echo.json"
LOG = "run.log"

DEFAULTS: dict[str, Any] = {
    "s": 0.75,
    "T": 1.0,
    "grid": {"n": 32, "L": AUTO},
    "dt": AUTO,
    "stride": AUTO,
    "recipe": {"name": "gaussian-bump", "amplitude": 0.1, "width": 1.0},
    "seed": 0,
    "N": AUTO,
    "epsilon": AUTO,
    "C": 1.0,
    "C0": AUTO,
}
SUPPORT_FACTOR = 16.0


class ConfigError(ValueError):
    """Invalid configuration; the message holds one violation per line."""


class RunFailed(RuntimeError):
    """Compute failure after some artifacts may have been written."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _is_auto(value) -> bool:
    return isinstance(value, str) and value.lower() == AUTO


def _set_path(config: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = config
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {dotted!r}: {key!r} is not a mapping")
    node[keys[-1]] = value


def _flatten(config: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in config.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict) and key != "recipe":
            out.update(_flatten(value, path + "."))
        else:
            out[path] = value
    return out


def load_config(path: Optional[str], overrides: Sequence[str] = ()) -> dict:
    """Defaults, then the file (YAML, JSON, or a config echo), then ``key=value`` overrides."""
    config = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            loaded = yaml.safe_load(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from None
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a mapping at the top level")
        if {"subcommand", "config", "hash"} <= loaded.keys():
            loaded = loaded["config"]
        for key, value in _flatten(loaded).items():
            _set_path(config, key, value)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        _set_path(config, key.strip(), yaml.safe_load(raw))
    return config


def _number(errors: list, key: str, value, *, auto: bool = False, integer: bool = False):
    if auto and _is_auto(value):
        return AUTO
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        kind = "an integer" if integer else "a number"
        errors.append(f"{key}: expected {kind}{' or auto' if auto else ''}, got {value!r}")
        return None
    if integer and int(value) != value:
        errors.append(f"{key}: expected an integer, got {value!r}")
        return None
    return int(value) if integer else float(value)


def validate_config(config: dict) -> dict:
    """Check keys and ranges; raise ``ConfigError`` listing every violation."""
    errors: list[str] = []
    allowed = set(_flatten(DEFAULTS))
    flat = _flatten(config)
    for key in sorted(flat):
        if key not in allowed:
            errors.append(f"unknown key {key!r}; allowed keys: {', '.join(sorted(allowed))}")
    s = _number(errors, "s", config.get("s"))
    if s is not None and not 0.5 < s < 1:
        errors.append(f"s: must lie in the open interval (1/2, 1), got {s}")
    T = _number(errors, "T", config.get("T"))
    if T is not None and not T > 0:
        errors.append(f"T: must be positive, got {T}")
    grid = config.get("grid") if isinstance(config.get("grid"), dict) else {}
    n = _number(errors, "grid.n", grid.get("n"), integer=True)
    if n is not None and (n < 8 or n & (n - 1)):
        errors.append(f"grid.n: must be a power of two >= 8, got {n}")
    L = _number(errors, "grid.L", grid.get("L"), auto=True)
    if isinstance(L, float) and not L > 0:
        errors.append(f"grid.L: must be positive, got {L}")
    recipe = None
    if not isinstance(config.get("recipe"), dict):
        errors.append(f"recipe: expected a mapping with a 'name' key, got {config.get('recipe')!r}")
    else:
        try:
            recipe = recipe_from_dict(config["recipe"])
        except (ValueError, TypeError) as exc:
            errors.append(f"recipe: {exc}")
    if L == AUTO and recipe is not None and not math.isfinite(getattr(recipe, "support_radius", math.inf)):
        errors.append(f"grid.L: auto needs a compactly supported recipe; {recipe.name} requires an explicit box length")
    dt = _number(errors, "dt", config.get("dt"), auto=True)
    if isinstance(dt, float):
        if not dt > 0:
            errors.append(f"dt: must be positive, got {dt}")
        else:
            box = L
            if L == AUTO and recipe is not None:
                box = SUPPORT_FACTOR * recipe.support_radius
            if n is not None and n >= 8 and not n & (n - 1) and isinstance(box, float) and 0 < box < math.inf:
                bound = stability_bound(Grid3(n, box))
                if dt > bound:
                    errors.append(f"dt: {dt} exceeds the stability bound {bound:.6g} for n={n}, L={box:g}")
    stride = _number(errors, "stride", config.get("stride"), auto=True, integer=True)
    if isinstance(stride, int) and stride < 1:
        errors.append(f"stride: must be >= 1, got {stride}")
    seed = _number(errors, "seed", config.get("seed"), integer=True)
    if seed is not None and seed < 0:
        errors.append(f"seed: must be >= 0, got {seed}")
    N = _number(errors, "N", config.get("N"), auto=True)
    if isinstance(N, float) and not (N >= 1 and math.log2(N).is_integer()):
        errors.append(f"N: must be a dyadic number >= 1 or auto, got {N}")
    eps = _number(errors, "epsilon", config.get("epsilon"), auto=True)
    if isinstance(eps, float) and not eps > 0:
        errors.append(f"epsilon: must be positive or auto, got {eps}")
    C = _number(errors, "C", config.get("C"))
    if C is not None and not C > 0:
        errors.append(f"C: must be positive, got {C}")
    C0 = _number(errors, "C0", config.get("C0"), auto=True)
    if isinstance(C0, float) and not C0 > 0:
        errors.append(f"C0: must be positive or auto, got {C0}")
    if errors:
        raise ConfigError("\n".join(errors))
    return {
        "s": s,
        "T": T,
        "n": n,
        "L": L,
        "dt": dt,
        "stride": stride,
        "recipe": recipe,
        "seed": seed,
        "N": N,
        "epsilon": eps,
        "C": C,
        "C0": C0,
    }


def _opt(value):
    return None if value == AUTO else value


def _grid(params: dict) -> Grid3:
    L = params["L"]
    if L == AUTO:
        L = SUPPORT_FACTOR * params["recipe"].support_radius
    return Grid3(params["n"], L)


# ---------------------------------------------------------------------------
# output bookkeeping
# ---------------------------------------------------------------------------


class Outputs:
    """Tracks the artifacts of one run inside its output directory.

    The config echo is written before any compute and is never renamed, so a
    failed run can be reproduced from it.
    """

    def __init__(self, directory: Path) -> None:
        self.directory = directory
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        target = self.directory / name
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def json(self, name: str, payload) -> None:
        self.path(name).write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")

    def csv(self, name: str, header, rows, comments=()) -> None:
        io.write_csv(self.path(name), header, rows, comments)

    def finish(self, ok: bool) -> None:
        if not ok:
            renamed = []
            for name in self.files:
                src = self.directory / name
                if src.exists():
                    src.rename(src.with_name(src.name + ".partial"))
                    renamed.append(name + ".partial")
            self.files = renamed
        manifest = {"files": sorted([ECHO, *self.files]), "complete": ok, "log": LOG}
        (self.directory / io.MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _header_comments(config_digest: str, s: float, N, grid: Grid3, dt: float) -> list[str]:
    return [
        f"config_hash={config_digest}",
        f"s={s!r}",
        f"N={N!r}",
        f"L={grid.box_length!r}",
        f"n={grid.n}",
        f"dt={dt!r}",
    ]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _resolve_N(params: dict, grid: Grid3) -> float:
    if params["N"] != AUTO:
        return params["N"]
    return choose_N(params["s"], params["T"], params["C"], _opt(params["C0"]), params["recipe"], grid, params["seed"]).N


def cmd_simulate(params: dict, out: Outputs, digest: str) -> dict:
    grid = _grid(params)
    N = _resolve_N(params, grid)
    prof = MultiplierProfile(params["s"], N)
    state = WaveState.from_recipe(grid, params["recipe"], params["seed"])
    traj = evolve(state, params["T"], _opt(params["dt"]), _opt(params["stride"]) or 1)
    io.write_trajectory(out.path("trajectory"), traj, {"hash": digest}, prof)
    et = energy_trajectory(traj.states, prof)
    comments = _header_comments(digest, params["s"], N, grid, traj.dt)
    out.csv("energy.csv", et.HEADER, et.rows(), comments)
    return {"N": N, "L": grid.box_length, "dt": traj.dt, "snapshots": len(traj)}


def _profile_for(params: dict, stored: Optional[MultiplierProfile], grid: Grid3) -> MultiplierProfile:
    if params["N"] == AUTO and stored is not None:
        return stored
    return MultiplierProfile(params["s"], _resolve_N(params, grid))


def _interval(text: str, traj) -> SubInterval:
    if text is None:
        return SubInterval(float(traj.times[0]), float(traj.times[-1]))
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--interval: expected 'a,b', got {text!r}") from None
    return SubInterval(a, b)


def _load_traj(directory: str):
    traj = io.read_trajectory(directory)
    _, stored = io.read_snapshot(Path(directory) / io.snapshot_name(0))
    return traj, stored


def cmd_diagnose(params: dict, out: Outputs, digest: str, traj_dir: str, interval: Optional[str]) -> dict:
    traj, stored = _load_traj(traj_dir)
    J = _interval(interval, traj)
    prof = _profile_for(params, stored, traj.grid)
    et = energy_trajectory(traj.states, prof, traj.coupling)
    out.csv("energy.csv", et.HEADER, et.rows(), _header_comments(digest, prof.s, prof.N, traj.grid, traj.dt))
    zn = z_norm(traj, J, prof)
    gain = nonlinear_gain_norm(traj, J, prof)
    check = commutator_check(traj, J, prof)
    summary = {
        "interval": [J.a, J.b],
        "s": prof.s,
        "N": prof.N,
        "z_norm": zn.value,
        "z_norm_pair": [str(zn.pair.q), str(zn.pair.r)],
        "gain_norm": gain.value,
        "gain_predicted": gain.predicted,
        "gain_reduced_order": gain.reduced_order,
        "commutator": check.commutator,
        "delta_E_Iu": check.delta_E,
        "commutator_mismatch": check.mismatch,
    }
    out.json("diagnostics.json", _finite(summary))
    return summary


def _finite(x):
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _write_report(out: Outputs, stem: str, report, digest: str, grid: Grid3) -> None:
    out.json(f"{stem}.json", report.summary())
    dt = float(report.times[1] - report.times[0]) if len(report.times) > 1 else math.nan
    comments = _header_comments(digest, report.choice.s, report.choice.N, grid, dt)
    out.csv(f"{stem}_energy.csv", ("time", "E_u", "E_Iu", "Hs_norm", "Hs1_norm"), report.energy_rows(), comments)
    out.csv(f"{stem}_intervals.csv", report.INTERVAL_HEADER, report.interval_rows(), comments)


def cmd_almost_conservation(params: dict, out: Outputs, digest: str, sweep: Optional[str]) -> dict:
    grid = _grid(params)
    if sweep:
        try:
            cutoffs = [float(x) for x in sweep.split(",")]
        except ValueError:
            raise ConfigError(f"--sweep-N: expected comma-separated numbers, got {sweep!r}") from None
        bad = [N for N in cutoffs if not (N >= 1 and math.log2(N).is_integer())]
        if bad:
            raise ConfigError("\n".join(f"--sweep-N: {N} is not a dyadic number >= 1" for N in bad))
    else:
        cutoffs = [_resolve_N(params, grid)]
    reports = sweep_cutoffs(
        params["recipe"], params["s"], cutoffs, _opt(params["epsilon"]), params["T"], grid,
        _opt(params["dt"]), _opt(params["stride"]), params["seed"],
    )
    rows = []
    for N, rep in reports.items():
        _write_report(out, f"almost_conservation_N{N:g}", rep, digest, grid)
        rows.append([N, rep.max_increment, rep.commutator_mismatch, rep.cutoff_resolved])
    out.csv("increments.csv", ("N", "max_increment", "commutator_mismatch", "cutoff_resolved"), rows,
            [f"config_hash={digest}"])
    slope = increment_slope(reports) if len(reports) > 1 else math.nan
    summary = {"cutoffs": cutoffs, "slope": slope, "aborted": any(r.aborted for r in reports.values())}
    out.json("sweep.json", _finite(summary))
    if summary["aborted"]:
        raise RunFailed(next(r.abort_message for r in reports.values() if r.aborted))
    return summary


def cmd_gwp(params: dict, out: Outputs, digest: str) -> dict:
    grid = _grid(params)
    rep = run_gwp_experiment(
        params["recipe"], params["s"], params["T"], grid, _opt(params["dt"]), params["C"], _opt(params["C0"]),
        _opt(params["N"]), _opt(params["epsilon"]), _opt(params["stride"]), params["seed"],
    )
    _write_report(out, "gwp", rep, digest, grid.scaled(rep.choice.lam))
    if rep.aborted:
        raise RunFailed(rep.abort_message)
    return {"verdict": rep.verdict, "N": rep.choice.N, "lambda": rep.choice.lam}


def cmd_verify_symbol(args, out: Outputs) -> dict:
    prof = MultiplierProfile(args.s, args.N)
    rep = verify_symbol_bounds(prof, samples=args.samples, seed=args.seed)
    out.csv("symbol_report.csv", rep.HEADER, rep.rows(), [f"s={args.s!r}", f"N={args.N!r}", f"seed={args.seed}"])
    summary = {"passed": rep.passed, "fitted_constants": rep.fitted_constants, "samples": args.samples}
    out.json("symbol_summary.json", _finite(summary))
    if not rep.passed:
        raise RunFailed("symbol bound verification failed; see symbol_report.csv")
    return summary


def cmd_breakdown(params: dict, out: Outputs, traj_dir: str, interval: Optional[str]) -> dict:
    traj, stored = _load_traj(traj_dir)
    J = _interval(interval, traj)
    prof = _profile_for(params, stored, traj.grid)
    rows, total = increment_shell_breakdown(traj, J, prof)
    out.csv(
        "breakdown.csv",
        ("N1", "N2", "N3", "N4", "case", "contribution", "cumulative_fraction"),
        ([*r.shells.as_tuple(), r.case, r.contribution, r.cumulative_fraction] for r in rows),
        [f"interval={J.a!r},{J.b!r}", f"s={prof.s!r}", f"N={prof.N!r}", f"total={total!r}"],
    )
    row_sum = sum(r.contribution for r in rows)
    summary = {"total": total, "row_sum": row_sum, "rows": len(rows)}
    out.json("breakdown_summary.json", _finite(summary))
    return summary


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cubicwave", description="Cubic wave equation experiments on a 3-torus.")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    def common(p, needs_config: bool = True):
        p.add_argument("--config", required=needs_config, help="YAML/JSON config file or a config echo")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config value, e.g. --set grid.n=64 (repeatable)")

    common(sub.add_parser("simulate", help="evolve a datum and store snapshots plus an energy table"))
    p = sub.add_parser("diagnose", help="norms and increment checks on a stored trajectory")
    common(p, needs_config=False)
    p.add_argument("--traj", required=True, help="trajectory directory written by simulate")
    p.add_argument("--interval", help="subinterval a,b (default: whole trajectory)")
    p = sub.add_parser("almost-conservation", help="E(Iu) increments over subintervals, optionally for several N")
    common(p)
    p.add_argument("--sweep-N", dest="sweep_N", help="comma-separated dyadic cutoffs, e.g. 4,8,16,32")
    common(sub.add_parser("gwp", help="full scaling pipeline and Sobolev growth verdict"))
    p = sub.add_parser("verify-symbol", help="sample the increment symbol against its case bounds")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p = sub.add_parser("breakdown", help="split a commutator integral over Littlewood-Paley shells")
    common(p, needs_config=False)
    p.add_argument("--traj", required=True, help="trajectory directory written by simulate")
    p.add_argument("--interval", help="subinterval a,b (default: whole trajectory)")
    return parser


def _echo_config(args) -> tuple[dict, dict]:
    """(raw config for the echo, validated parameters)."""
    if args.subcommand == "verify-symbol":
        raw = {"s": args.s, "N": args.N, "samples": args.samples, "seed": args.seed}
        errors = []
        if not 0.5 < args.s < 1:
            errors.append(f"--s: must lie in the open interval (1/2, 1), got {args.s}")
        if not (args.N >= 1 and math.log2(args.N).is_integer()):
            errors.append(f"--N: must be a dyadic number >= 1, got {args.N}")
        if args.samples < 1:
            errors.append(f"--samples: must be >= 1, got {args.samples}")
        if args.seed < 0:
            errors.append(f"--seed: must be >= 0, got {args.seed}")
        if errors:
            raise ConfigError("\n".join(errors))
        return raw, raw
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    raw = load_config(args.config, overrides)
    return raw, validate_config(raw)


def _setup_log(directory: Path) -> logging.Handler:
    handler = logging.FileHandler(directory / LOG, mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        raw, params = _echo_config(args)
    except ConfigError as exc:
        print(f"cubicwave {args.subcommand}: configuration error", file=sys.stderr)
        print(str(exc), file=sys.stderr)
        return 2

    directory = Path(args.out)
    directory.mkdir(parents=True, exist_ok=True)
    handler = _setup_log(directory)
    out = Outputs(directory)
    digest = io.config_hash(raw)
    echo = {"subcommand": args.subcommand, "config": raw, "hash": digest}
    (directory / ECHO).write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")
    log.info("start %s hash=%s", args.subcommand, digest)
    ok = False
    try:
        if args.subcommand == "simulate":
            result = cmd_simulate(params, out, digest)
        elif args.subcommand == "diagnose":
            result = cmd_diagnose(params, out, digest, args.traj, args.interval)
        elif args.subcommand == "almost-conservation":
            result = cmd_almost_conservation(params, out, digest, args.sweep_N)
        elif args.subcommand == "gwp":
            result = cmd_gwp(params, out, digest)
        elif args.subcommand == "verify-symbol":
            result = cmd_verify_symbol(args, out)
        else:
            result = cmd_breakdown(params, out, args.traj, args.interval)
        ok = True
        log.info("done %s", json.dumps(_finite(result), sort_keys=True, default=str))
        print(json.dumps(_finite(result), sort_keys=True, default=str))
        return 0
    except ConfigError as exc:
        print(f"cubicwave {args.subcommand}: configuration error", file=sys.stderr)
        print(str(exc), file=sys.stderr)
        log.error("configuration error: %s", exc)
        return 2
    except (RunFailed, BlowUpError, EvolutionAborted, ValueError, ArithmeticError, OSError) as exc:
        print(f"cubicwave {args.subcommand}: {exc}", file=sys.stderr)
        log.error("failed: %s", exc)
        return 1
    finally:
        out.finish(ok)
        log.removeHandler(handler)
        handler.close()


if __name__ == "__main__":
    sys.exit(main())
