"""Parameter sweeps over gate time, flip rate, and temperature.

Each sweep optimizes a pulse per grid point and emits a table of columns
(plus a trailing ``converged`` flag per point).  Sweeps are deterministic:
per-point RNG seeds derive from the master seed and the point index via
numpy's SeedSequence.  Warm-started sweeps run two passes, a cold pass
over all points and a neighbor-seeded refinement pass, and report the
better of the two at each point; both passes parallelize over a process
pool when ``threads > 1``.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial

import numpy as np
import scipy

from . import grape, redfield
from .grape import OptimizerConfig, PenaltyParams
from .propagation import fmt_float
from .redfield import ModelParams

_VARIABLES = ("t_g", "gamma", "temperature")
_FIT_MODELS = ("linear", "hyperbolic")


def make_grid(start: float, stop: float, count: int, spacing: str = "linear") -> tuple:
    """Strictly increasing grid, linear or logarithmic."""
    if count < 2:
        raise ValueError("count must be >= 2")
    if not stop > start:
        raise ValueError("stop must exceed start")
    if spacing == "linear":
        g = np.linspace(start, stop, count)
    elif spacing == "log":
        if not start > 0.0:
            raise ValueError("log spacing requires start > 0")
        g = np.geomspace(start, stop, count)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    return tuple(float(x) for x in g)


DEFAULT_TG_GRID = make_grid(1.0, 8.0, 41, "linear")
DEFAULT_GAMMA_GRID = make_grid(1e-3, 10.0, 25, "log")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: the variable, its grid, and everything held fixed.

    ``tg`` is the fixed gate time used when the swept variable is not
    t_g itself; ``gamma_grid`` is the inner flip-rate grid used by
    temperature sweeps (defaults to DEFAULT_GAMMA_GRID).
    """

    variable: str
    grid: tuple
    base_params: ModelParams
    gate: str = "Z"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    penalty: PenaltyParams = field(default_factory=PenaltyParams)
    warm_start: bool = True
    tg: float = 5.0
    gamma_grid: tuple | None = None
    threads: int = 1

    def __post_init__(self):
        if self.variable not in _VARIABLES:
            raise ValueError(f"variable must be one of {_VARIABLES}")
        grid = tuple(float(x) for x in self.grid)
        object.__setattr__(self, "grid", grid)
        if len(grid) < 2:
            raise ValueError("grid needs at least 2 points")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.gamma_grid is not None:
            object.__setattr__(
                self, "gamma_grid", tuple(float(x) for x in self.gamma_grid)
            )
        if not self.tg > 0.0:
            raise ValueError("tg must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class SweepTable:
    """Columnar sweep output plus the winning per-point optimizer results."""

    columns: dict
    results: list

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def column_names(self) -> list:
        return list(self.columns)


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of gate error against gamma.

    ``model`` is "linear" (error = a + b*gamma) or "hyperbolic"
    (error = c + d/gamma); ``coefficients`` holds (a, b) or (c, d).
    """

    model: str
    coefficients: tuple
    residual_rms: float
    window: tuple


def point_seed(master_seed: int, index: int) -> int:
    """Deterministic per-point seed derived from the master seed."""
    return int(np.random.SeedSequence(master_seed, spawn_key=(index,)).generate_state(1)[0])


def _point_config(spec: SweepSpec, index: int) -> OptimizerConfig:
    return replace(spec.optimizer, rng_seed=point_seed(spec.optimizer.rng_seed, index))


def _map_points(fn, jobs, threads: int):
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def _params_at(spec: SweepSpec, value: float):
    """(params, t_g) for one grid point of the swept variable."""
    if spec.variable == "t_g":
        return spec.base_params, value
    if spec.variable == "gamma":
        kappa = redfield.kappa_for_gamma(value, spec.base_params)
        return replace(spec.base_params, kappa=kappa), spec.tg
    raise ValueError(f"no single-point parameters for variable {spec.variable!r}")


def _cold_point(spec: SweepSpec, index: int):
    params, t_g = _params_at(spec, spec.grid[index])
    return grape.optimize(
        params, t_g, spec.gate, _point_config(spec, index), spec.penalty
    )


def _warm_point(spec: SweepSpec, job):
    index, neighbor_pulses = job
    params, t_g = _params_at(spec, spec.grid[index])
    return grape.optimize(
        params,
        t_g,
        spec.gate,
        _point_config(spec, index),
        spec.penalty,
        extra_starts=tuple(neighbor_pulses),
        standard_starts=False,
    )


def _optimize_grid(spec: SweepSpec) -> list:
    """Per-point winning results, warm-refined when spec.warm_start is set."""
    indices = range(len(spec.grid))
    cold = _map_points(partial(_cold_point, spec), indices, spec.threads)
    if not spec.warm_start:
        return cold
    jobs = []
    for i in indices:
        neighbors = [cold[j].pulse for j in (i - 1, i + 1) if 0 <= j < len(spec.grid)]
        jobs.append((i, neighbors))
    warm = _map_points(partial(_warm_point, spec), jobs, spec.threads)
    return [
        w if w.penalized_fidelity > c.penalized_fidelity else c
        for c, w in zip(cold, warm)
    ]


def _rabi_error(spec: SweepSpec, t_g: float) -> float:
    pulse = grape.rabi_baseline(spec.base_params, t_g, spec.optimizer.dt)
    fid, _ = grape.evaluate_pulse(spec.base_params, pulse, spec.gate)
    return 1.0 - fid


def t1_reference_curves(params: ModelParams, tg_values) -> tuple:
    """(1 - e^{-t/T1}, 1 - e^{-t/(2 T1)}) at the working point E1 = 0."""
    rate1, _ = redfield.t1_t2_rates(params, 0.0)
    tg_values = np.asarray(tg_values, dtype=float)
    return 1.0 - np.exp(-tg_values * rate1), 1.0 - np.exp(-tg_values * rate1 / 2.0)


def sweep_tg(spec: SweepSpec) -> SweepTable:
    """Gate error versus gate time, against the Rabi baseline and T1 curves."""
    if spec.variable != "t_g":
        raise ValueError("sweep_tg needs variable 't_g'")
    results = _optimize_grid(spec)
    rabi_errors = _map_points(partial(_rabi_error, spec), spec.grid, spec.threads)
    tg = np.asarray(spec.grid)
    t1_ref, t2_ref = t1_reference_curves(spec.base_params, tg)
    columns = {
        "t_g": tg,
        "gate_error_grape": np.array([r.gate_error for r in results]),
        "gate_error_rabi": np.asarray(rabi_errors),
        "t1_reference": t1_ref,
        "t2_reference": t2_ref,
        "converged": np.array([int(r.converged) for r in results]),
    }
    return SweepTable(columns, results)


def sweep_gamma(spec: SweepSpec) -> SweepTable:
    """Gate error versus TLF flip rate at fixed gate time.

    Each gamma is realized by the bath coupling kappa_for_gamma(gamma) at
    the sweep temperature.
    """
    if spec.variable != "gamma":
        raise ValueError("sweep_gamma needs variable 'gamma'")
    results = _optimize_grid(spec)
    gammas = np.asarray(spec.grid)
    kappas = np.array([redfield.kappa_for_gamma(g, spec.base_params) for g in gammas])
    columns = {
        "gamma": gammas,
        "kappa": kappas,
        "gate_error": np.array([r.gate_error for r in results]),
        "converged": np.array([int(r.converged) for r in results]),
    }
    return SweepTable(columns, results)


def quadratic_peak(x, y) -> tuple:
    """Peak location and height refined by a parabola through the top 3 points.

    Falls back to the grid maximum at the grid edges or when the local
    fit is not concave.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i = int(np.argmax(y))
    if i == 0 or i == x.size - 1:
        return float(x[i]), float(y[i])
    a, b, c = np.polyfit(x[i - 1 : i + 2], y[i - 1 : i + 2], 2)
    if not a < 0.0:
        return float(x[i]), float(y[i])
    xv = -b / (2.0 * a)
    xv = min(max(xv, x[i - 1]), x[i + 1])
    return float(xv), float(np.polyval([a, b, c], xv))


def sweep_temperature(spec: SweepSpec) -> SweepTable:
    """Flip-rate peak position and height as a function of temperature.

    Runs a full gamma sweep per temperature and extracts (gamma_max,
    error at the peak) by quadratic interpolation around the grid
    maximum.  The per-temperature gamma tables ride along in ``results``.
    """
    if spec.variable != "temperature":
        raise ValueError("sweep_temperature needs variable 'temperature'")
    inner_grid = spec.gamma_grid or DEFAULT_GAMMA_GRID
    gamma_tables = []
    gamma_max = []
    peak_error = []
    for temperature in spec.grid:
        inner = SweepSpec(
            variable="gamma",
            grid=inner_grid,
            base_params=replace(spec.base_params, temperature=temperature),
            gate=spec.gate,
            optimizer=spec.optimizer,
            penalty=spec.penalty,
            warm_start=spec.warm_start,
            tg=spec.tg,
            threads=spec.threads,
        )
        table = sweep_gamma(inner)
        gm, pe = quadratic_peak(table["gamma"], table["gate_error"])
        gamma_tables.append(table)
        gamma_max.append(gm)
        peak_error.append(pe)
    columns = {
        "temperature": np.asarray(spec.grid),
        "gamma_max": np.asarray(gamma_max),
        "error_at_gamma_max": np.asarray(peak_error),
    }
    return SweepTable(columns, gamma_tables)


def fit_curve(table, model: str, window: tuple) -> FitResult:
    """Least-squares fit of gate error over a gamma window.

    ``model`` "linear" fits error = a + b*gamma; "hyperbolic" fits
    error = c + d/gamma.  Ordinary least squares in the linearized
    variable; needs at least 3 points in the window.
    """
    if model not in _FIT_MODELS:
        raise ValueError(f"model must be one of {_FIT_MODELS}")
    x = np.asarray(table["gamma"], dtype=float)
    y = np.asarray(table["gate_error"], dtype=float)
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError("window must have positive width")
    sel = (x >= lo) & (x <= hi)
    if int(sel.sum()) < 3:
        raise ValueError("window holds fewer than 3 grid points")
    xs, ys = x[sel], y[sel]
    u = xs if model == "linear" else 1.0 / xs
    design = np.column_stack([np.ones_like(u), u])
    coeffs, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = ys - design @ coeffs
    return FitResult(
        model=model,
        coefficients=(float(coeffs[0]), float(coeffs[1])),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        window=(lo, hi),
    )


def write_sweep_csv(table: SweepTable, path) -> None:
    """Full-precision CSV with a header row."""
    names = table.column_names()
    cols = [np.asarray(table[name]) for name in names]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(
                ",".join(
                    str(int(v)) if np.issubdtype(type(v), np.integer) else fmt_float(v)
                    for v in row
                )
                + "\n"
            )


def build_info() -> dict:
    from . import __version__

    return {
        "package": "tlfgrape",
        "version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_summary_json(path, spec: SweepSpec, table: SweepTable, fits=None, gamma_max=None) -> None:
    """Everything needed to rerun a sweep: its spec, build info, columns, fits."""
    payload = {
        "spec": _jsonable(asdict(spec)),
        "build": build_info(),
        "columns": {name: _jsonable(table[name]) for name in table.column_names()},
    }
    if fits:
        payload["fits"] = {
            name: {
                "model": fit.model,
                "coefficients": _jsonable(fit.coefficients),
                "residual_rms": fit.residual_rms,
                "window": _jsonable(fit.window),
            }
            for name, fit in fits.items()
        }
    if gamma_max is not None:
        payload["gamma_max"] = float(gamma_max)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
