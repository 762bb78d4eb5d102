"""Numerical invariant suite.

Fast self-contained checks of the physical and numerical contracts:
trace and Hermiticity preservation of the propagated maps, unitarity of
the closed-system limit, gradient-versus-finite-difference agreement,
TLF thermalization at the analytic flip rate, and second-order
convergence of the piecewise-constant discretization for smooth pulses.
The whole suite runs in well under a minute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grape, hilbert, propagation, redfield
from .propagation import ControlPulse
from .redfield import ModelParams

_BASE = ModelParams(e2=0.1, lam=0.1, kappa=0.005, temperature=0.2)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        out = f"[{status}] {self.name}: {self.value:.3e} (threshold {self.threshold:.1e})"
        return out + (f"  {self.detail}" if self.detail else "")


def _random_slice_maps(params, rng, count=6):
    amps = rng.uniform(-2.0, 2.0, count)
    dts = rng.uniform(0.01, 0.2, count)
    return [propagation.slice_propagator(params, a, dt) for a, dt in zip(amps, dts)]


def check_trace_preservation(params: ModelParams = _BASE, tol: float = 1e-10) -> CheckResult:
    """vec(I)^dag is a left fixed point of every slice map."""
    rng = np.random.default_rng(11)
    tvec = hilbert.vec(np.eye(4, dtype=complex)).conj()
    worst = 0.0
    for f in _random_slice_maps(params, rng):
        worst = max(worst, float(np.max(np.abs(tvec @ f - tvec))))
    return CheckResult("trace preservation", worst <= tol, worst, tol)


def check_hermiticity_preservation(params: ModelParams = _BASE, tol: float = 1e-10) -> CheckResult:
    """Slice maps send Hermitian density matrices to Hermitian matrices."""
    rng = np.random.default_rng(12)
    worst = 0.0
    for f in _random_slice_maps(params, rng):
        for _ in range(4):
            m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            rho = m + m.conj().T
            out = hilbert.unvec(f @ hilbert.vec(rho))
            worst = max(worst, float(np.max(np.abs(out - out.conj().T))))
    return CheckResult("hermiticity preservation", worst <= tol, worst, tol)


def check_closed_unitarity(params: ModelParams = _BASE, tol: float = 1e-10) -> CheckResult:
    """kappa = 0 slice maps are unitary superoperators."""
    closed = ModelParams(
        e2=params.e2,
        lam=params.lam,
        kappa=0.0,
        temperature=params.temperature,
        delta=params.delta,
        omega_c=params.omega_c,
    )
    rng = np.random.default_rng(13)
    eye = np.eye(16)
    worst = 0.0
    for f in _random_slice_maps(closed, rng):
        worst = max(worst, float(np.max(np.abs(f.conj().T @ f - eye))))
    return CheckResult("closed-system unitarity", worst <= tol, worst, tol)


def check_gradient_fd(
    mode: str = "exact_directional",
    tol: float | None = None,
    pulses: int = 20,
    fd_step: float = 1e-6,
) -> CheckResult:
    """Analytic gradient against central finite differences.

    Twenty random short pulses spread over kappa in {0, 0.005, 0.05};
    the reported value is the worst infinity-norm relative error.
    """
    if tol is None:
        tol = 1e-5 if mode == "exact_directional" else 2e-2
    rng = np.random.default_rng(14)
    kappas = [0.0, 0.005, 0.05]
    t_g, dt = 0.6, 0.025
    n = propagation.slice_count(t_g, dt)
    worst = 0.0
    for k in range(pulses):
        params = ModelParams(e2=0.1, lam=0.1, kappa=kappas[k % 3], temperature=0.2)
        amps = rng.uniform(-1.5, 1.5, n)
        pulse = ControlPulse(amps, t_g / n)
        g = grape.gradient(params, pulse, mode=mode)
        f_target = grape.target_superop("Z")
        r, e = grape._reduction_operators(params, f_target)
        g_fd = np.empty(n)
        for j in range(n):
            up, dn = amps.copy(), amps.copy()
            up[j] += fd_step
            dn[j] -= fd_step
            _, fu = grape._objective(up, pulse.dt, params, r, e, None, t_g)
            _, fd_ = grape._objective(dn, pulse.dt, params, r, e, None, t_g)
            g_fd[j] = (fu - fd_) / (2.0 * fd_step)
        rel = float(np.max(np.abs(g - g_fd)) / np.max(np.abs(g_fd)))
        worst = max(worst, rel)
    return CheckResult(f"gradient vs finite differences ({mode})", worst <= tol, worst, tol)


def check_thermalization(tol: float = 0.10) -> CheckResult:
    """Decoupled TLF relaxes toward equilibrium at the analytic flip rate."""
    params = ModelParams(e2=0.1, lam=0.0, kappa=0.005, temperature=0.2)
    gamma = redfield.rtn_gamma(params)
    gen = redfield.generator(params, 0.0)
    z_eq = -np.tanh(params.e2 / params.temperature)
    rho0 = np.kron(np.diag([1.0, 0.0]), np.diag([1.0, 0.0])).astype(complex)
    times = np.linspace(0.2 / gamma, 1.6 / gamma, 8)
    logs = []
    for t in times:
        rho = hilbert.unvec(hilbert.expm(t * gen) @ hilbert.vec(rho0))
        tlf = np.einsum("qtqs->ts", rho.reshape(2, 2, 2, 2))
        z = float((tlf[0, 0] - tlf[1, 1]).real)
        logs.append(np.log((z - z_eq) / (1.0 - z_eq)))
    slope = np.polyfit(times, logs, 1)[0]
    rel = abs(-slope / gamma - 1.0)
    return CheckResult(
        "TLF thermalization rate", rel <= tol, rel, tol, f"fitted/analytic-1 at gamma={gamma:.3e}"
    )


def check_dt_convergence(lo: float = 1.7, hi: float = 2.3) -> CheckResult:
    """Slicing error of a smooth pulse shrinks as ~dt^2."""
    params = _BASE
    t_g = 2.0

    def composite(dt):
        n = propagation.slice_count(t_g, dt)
        t_mid = (np.arange(n) + 0.5) * (t_g / n)
        amps = 0.8 * np.cos(2.0 * t_mid) + 0.3 * np.sin(t_mid)
        return propagation.full_map(params, ControlPulse(amps, t_g / n)).final

    ref = composite(t_g / 640)
    dts = np.array([0.1, 0.05, 0.025])
    errs = np.array([np.max(np.abs(composite(dt) - ref)) for dt in dts])
    slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    passed = lo <= slope <= hi
    value = slope
    return CheckResult("dt-refinement slope", passed, value, hi, f"want [{lo}, {hi}]")


def run_all(fast: bool = False) -> list:
    """Run the whole invariant suite; ``fast`` trims the FD pulse count."""
    pulses = 6 if fast else 20
    return [
        check_trace_preservation(),
        check_hermiticity_preservation(),
        check_closed_unitarity(),
        check_gradient_fd("exact_directional", pulses=pulses),
        check_gradient_fd("first_order", pulses=pulses),
        check_thermalization(),
        check_dt_convergence(),
    ]
