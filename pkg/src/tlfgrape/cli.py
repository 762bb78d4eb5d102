"""Command-line interface.

Subcommands: ``optimize`` (one pulse: JSON result, pulse CSV, trajectory
CSV), ``rabi`` (baseline evaluation), ``sweep-tg`` / ``sweep-gamma`` /
``sweep-temp`` (CSV table plus JSON summary), ``check`` (invariant
suite).  Options come from an optional flat TOML config file, overridden
by command-line flags.  Exit codes: 0 success, 1 invalid usage or
config, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import checks, experiments, grape, propagation, redfield
from .experiments import SweepSpec
from .grape import OptimizerConfig, PenaltyParams
from .redfield import ModelParams


class NumericalFailure(RuntimeError):
    """Raised when a computation produces non-finite results."""


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1, not argparse's default 2 (2 means numerical failure here)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_MODEL_KEYS = {
    "e2": float,
    "lambda": float,
    "kappa": float,
    "temperature": float,
    "omega_c": float,
    "lamb_shift": bool,
}
_RUN_KEYS = {
    "tg": float,
    "dt": float,
    "seed": int,
    "restarts": int,
    "max_iterations": int,
    "gradient_mode": str,
    "penalty": bool,
    "alpha0": float,
    "t0": float,
    "threads": int,
    "gate": str,
    "warm_start": bool,
    "grid_start": float,
    "grid_stop": float,
    "grid_count": int,
    "grid_spacing": str,
    "gamma_start": float,
    "gamma_stop": float,
    "gamma_count": int,
    "gamma_spacing": str,
    "temperatures": list,
}

_MODEL_DEFAULTS = {
    "e2": 0.1,
    "lambda": 0.1,
    "kappa": 0.005,
    "temperature": 0.2,
    "omega_c": 100.0,
    "lamb_shift": False,
}
_RUN_DEFAULTS = {
    "tg": 5.0,
    "dt": 0.025,
    "seed": 0,
    "restarts": 8,
    "max_iterations": 10000,
    "gradient_mode": "exact_directional",
    "penalty": False,
    "alpha0": 2.0,
    "t0": 0.02,
    "threads": 1,
    "gate": "Z",
    "warm_start": True,
}


def _load_config(path) -> dict:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    known = set(_MODEL_KEYS) | set(_RUN_KEYS)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in raw.items():
        want = _MODEL_KEYS.get(key) or _RUN_KEYS[key]
        if want is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            continue
        if want is int and isinstance(value, int) and not isinstance(value, bool):
            continue
        if not isinstance(value, want):
            raise ValueError(f"config key {key!r} must be {want.__name__}")
    return raw


def _merge(cfg: dict, args) -> dict:
    merged = dict(_MODEL_DEFAULTS)
    merged.update(_RUN_DEFAULTS)
    merged.update(cfg)
    for flag, key in (
        ("seed", "seed"),
        ("threads", "threads"),
        ("gradient_mode", "gradient_mode"),
        ("lamb_shift", "lamb_shift"),
        ("penalty", "penalty"),
        ("tg", "tg"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            merged[key] = value
    return merged


def _model_params(merged: dict) -> ModelParams:
    return ModelParams(
        e2=merged["e2"],
        lam=merged["lambda"],
        kappa=merged["kappa"],
        temperature=merged["temperature"],
        omega_c=merged["omega_c"],
        lamb_shift=merged["lamb_shift"],
    )


def _optimizer_config(merged: dict) -> OptimizerConfig:
    return OptimizerConfig(
        dt=merged["dt"],
        restarts=merged["restarts"],
        max_iterations=merged["max_iterations"],
        gradient_mode=merged["gradient_mode"],
        rng_seed=merged["seed"],
    )


def _penalty(merged: dict) -> PenaltyParams:
    return PenaltyParams(
        alpha0=merged["alpha0"], t0=merged["t0"], enabled=merged["penalty"]
    )


def _require_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise NumericalFailure("non-finite value in results")


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _grid_from(merged: dict, prefix: str, default: tuple) -> tuple:
    keys = [f"{prefix}_start", f"{prefix}_stop", f"{prefix}_count", f"{prefix}_spacing"]
    if not any(k in merged for k in keys):
        return default
    start = merged.get(keys[0])
    stop = merged.get(keys[1])
    count = merged.get(keys[2])
    spacing = merged.get(keys[3], "linear")
    if start is None or stop is None or count is None:
        raise ValueError(f"{prefix}_start, {prefix}_stop, {prefix}_count must be given together")
    return experiments.make_grid(start, stop, count, spacing)


def _sweep_spec(variable: str, grid, merged: dict) -> SweepSpec:
    return SweepSpec(
        variable=variable,
        grid=grid,
        base_params=_model_params(merged),
        gate=merged["gate"],
        optimizer=_optimizer_config(merged),
        penalty=_penalty(merged),
        warm_start=merged["warm_start"],
        tg=merged["tg"],
        threads=merged["threads"],
    )


def _cmd_optimize(args, merged) -> int:
    params = _model_params(merged)
    result = grape.optimize(
        params, merged["tg"], merged["gate"], _optimizer_config(merged), _penalty(merged)
    )
    _require_finite(result.fidelity, result.pulse.amplitudes)
    path = _out_path(args, "result.json")
    with open(path, "w") as fh:
        json.dump(result.to_dict(params), fh, indent=2)
        fh.write("\n")
    grape.write_pulse_csv(result.pulse, _out_path(args, "pulse.csv"))
    plus = 0.5 * np.ones((2, 2), dtype=complex)
    rho0 = np.kron(plus, propagation.thermal_tlf_state(params))
    traj = propagation.evolve_state(params, result.pulse, rho0, samples_per_slice=4)
    propagation.write_trajectory_csv(traj, _out_path(args, "trajectory.csv"))
    print(
        f"gate error {result.gate_error:.6e} (fidelity {result.fidelity:.8f}, "
        f"{result.iterations} iterations, restart {result.restart_index}); wrote {path}"
    )
    return 0


def _cmd_rabi(args, merged) -> int:
    params = _model_params(merged)
    pulse = grape.rabi_baseline(params, merged["tg"], merged["dt"])
    fid, _ = grape.evaluate_pulse(params, pulse, merged["gate"])
    _require_finite(fid)
    payload = {
        "t_g": pulse.t_g,
        "dt": pulse.dt,
        "fidelity": fid,
        "gate_error": 1.0 - fid,
        "build": experiments.build_info(),
    }
    path = _out_path(args, "rabi.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    grape.write_pulse_csv(pulse, _out_path(args, "rabi_pulse.csv"))
    print(f"rabi gate error {1.0 - fid:.6e}; wrote {path}")
    return 0


def _cmd_sweep_tg(args, merged) -> int:
    grid = _grid_from(merged, "grid", experiments.DEFAULT_TG_GRID)
    spec = _sweep_spec("t_g", grid, merged)
    table = experiments.sweep_tg(spec)
    _require_finite(table["gate_error_grape"])
    csv_path = _out_path(args, "sweep_tg.csv")
    experiments.write_sweep_csv(table, csv_path)
    experiments.write_summary_json(_out_path(args, "sweep_tg.json"), spec, table)
    print(f"wrote {csv_path} ({len(spec.grid)} points)")
    return 0


def _cmd_sweep_gamma(args, merged) -> int:
    grid = _grid_from(merged, "grid", experiments.DEFAULT_GAMMA_GRID)
    spec = _sweep_spec("gamma", grid, merged)
    table = experiments.sweep_gamma(spec)
    _require_finite(table["gate_error"])
    fits = {}
    for name, model, window in (
        ("low_gamma", "linear", (1e-3, 2e-2)),
        ("high_gamma", "hyperbolic", (2.0, 10.0)),
    ):
        try:
            fits[name] = experiments.fit_curve(table, model, window)
        except ValueError:
            pass  # grid does not cover that window
    gamma_max, _ = experiments.quadratic_peak(table["gamma"], table["gate_error"])
    csv_path = _out_path(args, "sweep_gamma.csv")
    experiments.write_sweep_csv(table, csv_path)
    experiments.write_summary_json(
        _out_path(args, "sweep_gamma.json"), spec, table, fits=fits, gamma_max=gamma_max
    )
    print(f"wrote {csv_path} ({len(spec.grid)} points, gamma_max {gamma_max:.4f})")
    return 0


def _cmd_sweep_temp(args, merged) -> int:
    temperatures = merged.get("temperatures") or [0.1, 0.2, 0.4]
    gamma_grid = _grid_from(merged, "gamma", experiments.DEFAULT_GAMMA_GRID)
    spec = SweepSpec(
        variable="temperature",
        grid=tuple(float(t) for t in temperatures),
        base_params=_model_params(merged),
        gate=merged["gate"],
        optimizer=_optimizer_config(merged),
        penalty=_penalty(merged),
        warm_start=merged["warm_start"],
        tg=merged["tg"],
        gamma_grid=gamma_grid,
        threads=merged["threads"],
    )
    table = experiments.sweep_temperature(spec)
    _require_finite(table["gamma_max"], table["error_at_gamma_max"])
    csv_path = _out_path(args, "sweep_temperature.csv")
    experiments.write_sweep_csv(table, csv_path)
    experiments.write_summary_json(_out_path(args, "sweep_temperature.json"), spec, table)
    print(f"wrote {csv_path} ({len(spec.grid)} temperatures)")
    return 0


def _cmd_check(args, merged) -> int:
    results = checks.run_all()
    for r in results:
        print(r)
    if not all(r.passed for r in results):
        raise NumericalFailure("invariant suite failed")
    return 0


_COMMANDS = {
    "optimize": _cmd_optimize,
    "rabi": _cmd_rabi,
    "sweep-tg": _cmd_sweep_tg,
    "sweep-gamma": _cmd_sweep_gamma,
    "sweep-temp": _cmd_sweep_temp,
    "check": _cmd_check,
}


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat TOML config file")
    common.add_argument("--seed", type=int, default=None, help="master RNG seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=None, help="sweep worker processes")
    common.add_argument(
        "--gradient-mode",
        dest="gradient_mode",
        choices=("exact_directional", "first_order"),
        default=None,
    )
    common.add_argument(
        "--lamb-shift",
        dest="lamb_shift",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="include the principal-value level shifts",
    )
    common.add_argument(
        "--penalty",
        dest="penalty",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="enable the boundary-amplitude penalty",
    )
    parser = _Parser(prog="tlfgrape", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("optimize", "rabi"):
            p.add_argument("--tg", type=float, default=None, help="gate time")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config) if args.config else {}
        merged = _merge(cfg, args)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"tlfgrape: invalid config: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args, merged)
    except (ValueError, TypeError) as exc:
        print(f"tlfgrape: invalid config: {exc}", file=sys.stderr)
        return 1
    except (NumericalFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"tlfgrape: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
