"""End-to-end acceptance suite: one test per headline criterion.

Each test prints a single PASS/FAIL line (visible with ``pytest -s``; the
line is also embedded in the assertion message). The heavy sweeps are
shared module-scoped fixtures; the whole file takes a bit under two
hours on one core. Grids and iteration caps here are run-length knobs
sized for a single-CPU box; tolerances are never loosened.

Known model limitations (measured, deliberate, see the failing
assertions' messages for the numbers):

* criterion 1, baseline clause: the pinned cosine-drive construction
  calibrated on the closed system cannot reach the 1e-3 error scale at
  t_g = 2 pi. Its closed-system optimum (A = pi/t_g after rotating-wave
  reduction) already carries a 4.1e-3 counter-rotating error, and the
  two closed-degenerate phase branches evaluate to 9.4e-3 / 1.8e-2 on
  the open system.
* criterion 3, upper clause: the optimized plateau error (~1e-4..1e-3)
  sits above the strict T1-decay curve (~3e-5 over the window), an order
  below the error level criterion 1 itself accepts at the same gate
  time.
* criterion 4, location clause: the dissipative floor of the generator
  peaks at gamma ~ 2 (bath emission at the dressed qubit gap, weight
  J(2 delta - 2 e2) times the lambda hybridization squared; measured
  optimizer-free pair rate 2.3e-3 at gamma = 0.32 vs 6.7e-3 at 2.0), so
  the optimized-error maximum lands near gamma ~ 2, not 1/pi. The gap,
  not the fluctuator thermodynamics, fixes the peak, but the maximum is
  broad: the temperature-dependent kappa(gamma) map plus fit noise over
  a flat top move the fitted location by more than the 0.05 shift
  clause allows (measured 1.66 / 1.67 / 1.79 at T = 0.1 / 0.2 / 0.4).
"""

import time

import numpy as np
import pytest

from tlfgrape import checks, experiments, grape, propagation, redfield
from tlfgrape.experiments import SweepSpec, SweepTable, fit_curve, point_seed, quadratic_peak
from tlfgrape.grape import OptimizerConfig, PenaltyParams
from tlfgrape.redfield import ModelParams

pytestmark = pytest.mark.filterwarnings(
    "ignore::tlfgrape.redfield.MotionalNarrowingWarning"
)

BASE = ModelParams(e2=0.1, lam=0.1, kappa=0.005, temperature=0.2)
TG = 5.0
DT = 0.025


def report(num: int, clauses: list[tuple[bool, str]]) -> None:
    ok = all(c[0] for c in clauses)
    detail = "; ".join(("ok " if c[0] else "VIOLATED ") + c[1] for c in clauses)
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    print("\n" + line)
    assert ok, line


def params_at_gamma(gamma, temperature=0.2):
    probe = ModelParams(e2=0.1, lam=0.1, kappa=1.0, temperature=temperature)
    return ModelParams(
        e2=0.1, lam=0.1, kappa=redfield.kappa_for_gamma(gamma, probe),
        temperature=temperature,
    )


def cfg(max_iterations, restarts=2, seed=0):
    return OptimizerConfig(
        dt=DT, restarts=restarts, max_iterations=max_iterations, rng_seed=seed
    )


# ---- shared sweeps ----------------------------------------------------------


@pytest.fixture(scope="module")
def tg_table():
    """Gate-time sweep at the base working point (criteria 2, 3, 7).

    After the sweep, a uniform polish pass re-ascends every grid point
    from its own winner plus the already polished left neighbor (same
    cap everywhere, no point-specific treatment), so deep basins
    propagate along the grid and curve structure reflects the model
    rather than leftover optimizer slack.
    """
    grid = sorted(set(np.round(np.arange(2.2, 7.4001, 0.2), 10)) | {np.pi, 2 * np.pi})
    spec = SweepSpec(
        variable="t_g", grid=tuple(grid), base_params=BASE,
        optimizer=cfg(250), warm_start=True,
    )
    start = time.monotonic()
    table = experiments.sweep_tg(spec)
    res = list(table.results)
    polished = []
    for i, t_g in enumerate(grid):
        extras = [res[i].pulse]
        if i > 0:
            extras.append(polished[i - 1].pulse)
        r = grape.optimize(
            BASE, t_g, "Z", cfg(600, seed=point_seed(9, i)),
            extra_starts=tuple(extras), standard_starts=False,
        )
        polished.append(r if r.gate_error < res[i].gate_error else res[i])
    table.results[:] = polished
    table.columns["gate_error_grape"] = np.array([r.gate_error for r in polished])
    table.columns["converged"] = np.array([int(r.converged) for r in polished])
    table.columns["elapsed"] = np.full(len(grid), time.monotonic() - start)
    return table


def chained_gamma_run(gammas, caps, temperature=0.2, anchor=None, seed_base=0):
    """Optimize along a gamma grid, each point warm-started from the last."""
    results = []
    prev = anchor
    for k, (gamma, cap) in enumerate(zip(gammas, caps)):
        p = params_at_gamma(gamma, temperature)
        extras = (prev.pulse,) if prev is not None else ()
        r = grape.optimize(
            p, TG, "Z",
            cfg(cap, restarts=2, seed=point_seed(seed_base, k)),
            extra_starts=extras,
        )
        results.append(r)
        prev = r
    return results


@pytest.fixture(scope="module")
def gamma_data():
    """Flip-rate sweeps at T = 0.2 plus peak minis at T = 0.1, 0.4 (criteria 4, 6).

    The low window is chained from one deeply converged anchor so that
    the linear-fit intercept reflects physics rather than optimizer
    residue; the rest chains upward with standard starts in play.
    """
    low = np.geomspace(1e-3, 2e-2, 6)
    anchor = grape.optimize(
        params_at_gamma(low[0]), TG, "Z",
        OptimizerConfig(dt=DT, restarts=3, max_iterations=2500, rng_seed=1),
    )
    low_results = [anchor]
    prev = anchor
    for k, gamma in enumerate(low[1:]):
        r = grape.optimize(
            params_at_gamma(gamma), TG, "Z",
            cfg(800, restarts=1, seed=point_seed(1, k + 1)),
            extra_starts=(prev.pulse,), standard_starts=False,
        )
        low_results.append(r)
        prev = r

    mid = [0.05, 0.1, 0.17, 0.27, 0.4, 0.6, 0.9, 1.3, 1.8, 2.4, 3.2, 4.2, 5.5, 7.2, 10.0]
    mid_results = chained_gamma_run(mid, [400] * len(mid), anchor=prev, seed_base=2)

    gammas = np.concatenate([low, mid])
    results = low_results + mid_results
    table = SweepTable(
        columns={
            "gamma": gammas,
            "kappa": np.array([params_at_gamma(g).kappa for g in gammas]),
            "gate_error": np.array([r.gate_error for r in results]),
            "converged": np.array([int(r.converged) for r in results]),
        },
        results=results,
    )

    # peak minis: same subgrid and budget for each temperature
    peak_grid = [0.9, 1.3, 1.8, 2.4, 3.2]
    by_gamma = {g: r for g, r in zip(mid, mid_results)}
    minis = {0.2: np.array([by_gamma[g].gate_error for g in peak_grid])}
    for tt in (0.1, 0.4):
        errs = []
        for k, gamma in enumerate(peak_grid):
            r = grape.optimize(
                params_at_gamma(gamma, tt), TG, "Z",
                cfg(400, restarts=2, seed=point_seed(int(tt * 100), k)),
                extra_starts=(by_gamma[gamma].pulse,),
            )
            errs.append(r.gate_error)
        minis[tt] = np.array(errs)
    return table, np.array(peak_grid), minis


# ---- criteria ---------------------------------------------------------------


def test_criterion_1_headline_errors_at_2pi():
    start = time.monotonic()
    result = grape.optimize(BASE, 2 * np.pi, "Z", cfg(250, restarts=4))
    rabi = grape.rabi_baseline(BASE, 2 * np.pi, DT)
    rabi_err = 1.0 - grape.evaluate_pulse(BASE, rabi)[0]
    elapsed = time.monotonic() - start
    report(1, [
        (result.gate_error <= 2e-3, f"optimized error {result.gate_error:.4e} <= 2e-3"),
        (0.75e-3 <= rabi_err <= 3e-3, f"baseline error {rabi_err:.4e} in [7.5e-4, 3e-3]"),
        (elapsed <= 300.0, f"runtime {elapsed:.0f}s <= 300s"),
    ])


def _local_minima(tg, err):
    out = []
    for i in range(1, len(tg) - 1):
        if err[i] < err[i - 1] and err[i] <= err[i + 1]:
            out.append(tg[i])
    return np.array(out)


def test_criterion_2_gate_time_structure(tg_table):
    tg = tg_table["t_g"]
    err = tg_table["gate_error_grape"]
    rabi = tg_table["gate_error_rabi"]
    minima = _local_minima(tg, err)
    near_pi = minima[np.abs(minima - np.pi) <= 0.2]
    near_2pi = minima[np.abs(minima - 2 * np.pi) <= 0.2]
    off = [
        i for i, t in enumerate(tg)
        if t >= 4.0 and min(abs(t - np.pi), abs(t - 2 * np.pi)) > 0.3
    ]
    ratios = rabi[off] / err[off]
    elapsed = tg_table["elapsed"][0]
    report(2, [
        (near_pi.size > 0, f"local minimum near pi (minima at {np.round(minima, 3)})"),
        (near_2pi.size > 0, "local minimum near 2 pi"),
        (np.min(ratios) >= 5.0,
         f"plateau advantage: min baseline/optimized ratio {np.min(ratios):.1f} >= 5"),
        (elapsed <= 3600.0, f"sweep runtime {elapsed:.0f}s <= 1h"),
    ])


def test_criterion_3_t1_window(tg_table):
    tg = tg_table["t_g"]
    err = tg_table["gate_error_grape"]
    rate1, _ = redfield.t1_t2_rates(BASE, 0.0)
    sel = (tg >= 4.0) & (tg <= 8.0)
    upper = 1.0 - np.exp(-tg[sel] * rate1)
    lower = 0.1 * (1.0 - np.exp(-tg[sel] * rate1 / 2.0))
    e = err[sel]
    report(3, [
        (np.all(e <= upper),
         f"error below the T1 curve: max err {np.max(e):.3e} vs bound {np.min(upper):.3e}"),
        (np.all(e >= lower),
         f"error above 0.1x the 2T1 curve: min err {np.min(e):.3e} vs bound {np.max(lower):.3e}"),
    ])


def test_criterion_4_flip_rate_peak(gamma_data):
    table, peak_grid, minis = gamma_data
    gmax, _ = quadratic_peak(table["gamma"], table["gate_error"])
    locs = {tt: quadratic_peak(peak_grid, minis[tt])[0] for tt in (0.1, 0.2, 0.4)}
    shift = max(locs.values()) - min(locs.values())
    report(4, [
        (abs(gmax - 0.32) <= 0.05, f"error peak at gamma {gmax:.3f} = 0.32 +- 0.05"),
        (shift <= 0.05,
         "peak location shift over T in {0.1, 0.2, 0.4}: "
         + f"{shift:.3f} <= 0.05 (locations {sorted(round(v, 3) for v in locs.values())})"),
    ])


def test_criterion_5_static_fluctuator_compensation():
    params = ModelParams(e2=0.1, lam=0.1, kappa=0.0, temperature=0.2)
    result = grape.optimize(params, TG, "Z", cfg(800))
    plus = 0.5 * np.ones((2, 2), dtype=complex)
    rho0 = np.kron(plus, propagation.thermal_tlf_state(params))
    traj = propagation.evolve_state(params, result.pulse, rho0)
    entropy = traj.entropy_nats[-1]
    report(5, [
        (result.gate_error <= 1e-4, f"static-TLF error {result.gate_error:.3e} <= 1e-4"),
        (entropy <= 1e-3, f"final qubit entropy {entropy:.3e} <= 1e-3 nats"),
    ])


def test_criterion_6_gamma_asymptotics(gamma_data):
    table, _, _ = gamma_data
    lin = fit_curve(table, "linear", (1e-3, 2e-2))
    a, b = lin.coefficients
    hyp = fit_curve(table, "hyperbolic", (2.0, 10.0))
    sel = (table["gamma"] >= 2.0) & (table["gamma"] <= 10.0)
    rel = hyp.residual_rms / np.mean(table["gate_error"][sel])
    report(6, [
        (abs(a) <= 0.1 * b * 2e-2,
         f"linear fit intercept |{a:.2e}| <= 0.1 * slope {b:.2e} * 2e-2"),
        (rel <= 0.10, f"hyperbolic fit residual {100 * rel:.1f}% of mean <= 10%"),
    ])


def test_criterion_7_boundary_penalty(tg_table):
    tg = tg_table["t_g"]
    clauses = []
    for t_g in (4.0, 5.0):
        idx = int(np.argmin(np.abs(tg - t_g)))
        base_err = tg_table["gate_error_grape"][idx]
        pen = PenaltyParams(alpha0=2.0, t0=0.02, enabled=True)
        result = grape.optimize(
            BASE, t_g, "Z", cfg(600), pen=pen,
            extra_starts=(tg_table.results[idx].pulse,),
        )
        amps = np.abs(result.pulse.amplitudes)
        edge = max(amps[0], amps[-1])
        clauses.append((
            result.gate_error <= 2.0 * base_err,
            f"t_g={t_g}: penalized error {result.gate_error:.3e} <= 2x {base_err:.3e}",
        ))
        clauses.append((
            edge <= 0.1 * np.max(amps),
            f"t_g={t_g}: edge amplitude {edge:.3e} <= 0.1 * max {np.max(amps):.3e}",
        ))
    report(7, clauses)


def test_criterion_8_invariant_suite():
    start = time.monotonic()
    results = checks.run_all()
    elapsed = time.monotonic() - start
    clauses = [(r.passed, str(r)) for r in results]
    clauses.append((elapsed <= 60.0, f"suite runtime {elapsed:.0f}s <= 60s"))
    report(8, clauses)
