"""Dissipative generator for the driven qubit-fluctuator system.

The system Hamiltonian is

    H(E1) = E1 sigma_z + Delta sigma_x + E2 tau_z + Lambda sigma_z tau_z

(hbar = k_B = 1, energies in units of Delta).  The fluctuator exchanges
energy with an Ohmic bath, J(omega) = kappa * omega below a hard cutoff
omega_c, through its ladder operators.  Tracing the bath at second order
gives a Bloch-Redfield equation

    drho/dt = -i [H, rho] + [tau+, S1m rho] + [tau-, S0p rho]
              - [tau-, rho S1p] - [tau+, rho S0m]

whose rate tensors are built here in the instantaneous eigenbasis of
H(E1).  Each ladder-operator block connecting eigenstates with Bohr
frequency omega_ab > 0 carries the dissipative weight
J(omega_ab)(n(omega_ab) + s)/2, where n is the Bose function and s is 0
for absorption-type and 1 for emission-type tensors; at a degenerate
Bohr frequency the weight takes its analytic omega -> 0 limit
kappa * T / 2.  This normalization makes the fluctuator thermalize at
exactly the telegraph-noise flip rate gamma = 2 kappa E2 coth(E2 / T)
(see :func:`rtn_gamma`), which the tests pin down.

The principal-value (Lamb-shift) partner integrals are optional
(``ModelParams.lamb_shift``) and are excluded from the default
configuration.  The whole equation is assembled as a 16x16 generator L
with drho/dt = L vec(rho), L = -(i H_comm + Gamma).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from . import hilbert
from .hilbert import DIM, kron_stack

_DEG_TOL = 1e-9  # Bohr frequencies below this (times delta) use the omega->0 limit

_SIGMA_Z = hilbert.pauli("z", "qubit")
_SIGMA_X = hilbert.pauli("x", "qubit")
_TAU_Z = hilbert.pauli("z", "tlf")
_SZ_TZ = hilbert.pauli("z", "qubit") @ hilbert.pauli("z", "tlf")
_TAU_P = hilbert.tau_ladder(+1)
_TAU_M = hilbert.tau_ladder(-1)
_EYE4 = np.eye(DIM, dtype=complex)


class MotionalNarrowingWarning(UserWarning):
    """Raised when kappa * E2 exceeds the temperature.

    The weak-coupling treatment of the fluctuator-bath contact assumes the
    motional-narrowing regime T > kappa * E2; outside it the generator is
    still well defined but its physical accuracy degrades.
    """


@dataclass(frozen=True)
class ModelParams:
    """Static model parameters, all in units of delta (and delta itself).

    ``lam`` is the sigma_z tau_z coupling strength.  ``omega_c`` must
    dominate every other energy scale (enforced as >= 10x their maximum).
    """

    e2: float
    lam: float
    kappa: float
    temperature: float
    delta: float = 1.0
    omega_c: float = 100.0
    lamb_shift: bool = False

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.e2 <= 0.0:
            raise ValueError("e2 must be positive")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if self.kappa < 0.0:
            raise ValueError("kappa must be non-negative")
        scale = max(self.delta, self.e2, abs(self.lam), self.temperature)
        if self.omega_c < 10.0 * scale:
            raise ValueError("omega_c must be at least 10x the largest energy scale")
        if self.kappa > 0.0 and self.temperature <= self.kappa * self.e2:
            warnings.warn(
                f"temperature {self.temperature} <= kappa*e2 {self.kappa * self.e2}: "
                "outside the motional-narrowing regime",
                MotionalNarrowingWarning,
                stacklevel=2,
            )


def hamiltonian(params: ModelParams, e1) -> np.ndarray:
    """System Hamiltonian at control amplitude ``e1`` (scalar or stack)."""
    e1 = np.asarray(e1, dtype=float)
    drift = params.delta * _SIGMA_X + params.e2 * _TAU_Z + params.lam * _SZ_TZ
    return e1[..., None, None] * _SIGMA_Z + drift


def control_operator() -> np.ndarray:
    """Derivative of the Hamiltonian with respect to the control, sigma_z."""
    return _SIGMA_Z.copy()


def bose(omega, temperature: float):
    """Bose occupation 1/(exp(omega/T) - 1) for omega > 0."""
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(np.asarray(omega, dtype=float) / temperature)


def spectral_density(omega, params: ModelParams):
    """Ohmic bath spectral density kappa*omega with a hard cutoff at omega_c."""
    omega = np.asarray(omega, dtype=float)
    return np.where((omega > 0.0) & (omega <= params.omega_c), params.kappa * omega, 0.0)


def _pv_integral(nu: float, s: int, params: ModelParams) -> float:
    """Principal value of int_0^wc J(w)(n(w)+s)/(w - nu) dw."""

    def f(w):
        return float(spectral_density(w, params) * (bose(w, params.temperature) + s))

    if abs(nu) <= _DEG_TOL * params.delta:
        # log-divergent for an Ohmic bath (integrand ~ kappa*T/w); only level
        # crossings land here, where the dissipative weight dominates anyway
        return 0.0
    if 0.0 < nu < params.omega_c:
        val, _ = scipy.integrate.quad(f, 0.0, params.omega_c, weight="cauchy", wvar=nu, limit=200)
        return val
    val, _ = scipy.integrate.quad(lambda w: f(w) / (w - nu), 0.0, params.omega_c, limit=200)
    return val


def bath_weight(nu, s: int, params: ModelParams):
    """Weight of an eigenoperator block with Bohr frequency ``nu``.

    Real part J(nu)(n(nu)+s)/2 on upward transitions within the cutoff,
    kappa*T/2 at degeneracy, zero otherwise; with ``params.lamb_shift`` an
    imaginary principal-value part is added.  Vectorized over ``nu``.
    """
    if s not in (0, 1):
        raise ValueError("s must be 0 or 1")
    nu = np.asarray(nu, dtype=float)
    tol = _DEG_TOL * params.delta
    w = np.zeros(nu.shape, dtype=float)
    pos = nu > tol
    if np.any(pos):
        om = nu[pos]
        with np.errstate(over="ignore"):
            occ = 1.0 / np.expm1(om / params.temperature)
        w[pos] = 0.5 * spectral_density(om, params) * (occ + s)
    w[np.abs(nu) <= tol] = 0.5 * params.kappa * params.temperature
    if not params.lamb_shift:
        return w if w.ndim else float(w)
    out = w.astype(complex)
    flat = out.reshape(-1)
    for i, x in enumerate(np.asarray(nu, dtype=float).reshape(-1)):
        flat[i] += 1j / (2.0 * np.pi) * _pv_integral(float(x), s, params)
    return out if out.ndim else complex(out)


def _sigma_plus_stack(params: ModelParams, v: np.ndarray, eps: np.ndarray, s: int) -> np.ndarray:
    """Sigma tensor of sign +1 for a stack of eigendecompositions."""
    ttp = np.einsum("kia,ij,kjb->kab", v.conj(), _TAU_P, v)
    omega = eps[..., :, None] - eps[..., None, :]
    wgt = bath_weight(omega, s, params)
    return -np.einsum("kia,kab,kjb->kij", v, wgt * ttp, v.conj())


def sigma_tensor(params: ModelParams, e1: float, s: int, sign: int) -> np.ndarray:
    """Redfield rate tensor Sigma_s^sign at control amplitude ``e1``.

    ``sign`` +1 tensors collect the tau+ eigenoperator blocks; -1 tensors
    are their adjoints (the pairing that preserves Hermiticity of rho).
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    eps, v = hilbert.eig_hermitian(hamiltonian(params, [e1]))
    sp = _sigma_plus_stack(params, v, eps, s)[0]
    return sp if sign == +1 else sp.conj().T


def _gamma_from_sigma(sp0, sp1):
    """Assemble Gamma (stacked) from the two sign=+1 tensors."""
    sm0 = np.swapaxes(sp0, -1, -2).conj()
    sm1 = np.swapaxes(sp1, -1, -2).conj()
    tp, tm, eye = _TAU_P, _TAU_M, _EYE4

    def t(x):  # stack transpose
        return np.swapaxes(x, -1, -2)

    d = (
        kron_stack(eye, tp @ sm1)
        - kron_stack(np.broadcast_to(tp.T, sm1.shape), sm1)
        + kron_stack(eye, tm @ sp0)
        - kron_stack(np.broadcast_to(tm.T, sp0.shape), sp0)
        - kron_stack(t(sp1), np.broadcast_to(tm, sp1.shape))
        + kron_stack(t(sp1 @ tm), eye)
        - kron_stack(t(sm0), np.broadcast_to(tp, sm0.shape))
        + kron_stack(t(sm0 @ tp), eye)
    )
    return -d


def relaxation_superop(params: ModelParams, e1) -> np.ndarray:
    """Dissipative part Gamma of the generator, drho/dt = -i[H,rho] - Gamma rho.

    Accepts a scalar or a stack of control amplitudes; distinct amplitudes
    are computed once and broadcast back (the common case of repeated
    values in a pulse costs a single build).
    """
    e1 = np.asarray(e1, dtype=float)
    scalar = e1.ndim == 0
    amps = np.atleast_1d(e1)
    uniq, inverse = np.unique(amps, return_inverse=True)
    eps, v = hilbert.eig_hermitian(hamiltonian(params, uniq))
    sp0 = _sigma_plus_stack(params, v, eps, 0)
    sp1 = _sigma_plus_stack(params, v, eps, 1)
    gam = _gamma_from_sigma(sp0, sp1)[inverse]
    return gam[0] if scalar else gam.reshape(e1.shape + (DIM * DIM, DIM * DIM))


def generator(params: ModelParams, e1) -> np.ndarray:
    """Full generator L(e1) = -(i H_comm + Gamma), scalar or stacked ``e1``."""
    e1 = np.asarray(e1, dtype=float)
    h = hamiltonian(params, np.atleast_1d(e1))
    ht = np.swapaxes(h, -1, -2)
    hcomm = kron_stack(np.broadcast_to(_EYE4, h.shape), h) - kron_stack(ht, np.broadcast_to(_EYE4, h.shape))
    ell = -(1j * hcomm + relaxation_superop(params, np.atleast_1d(e1)))
    return ell[0] if e1.ndim == 0 else ell


# --- telegraph-noise analytics ---------------------------------------------


def rtn_gamma(params: ModelParams) -> float:
    """Fluctuator flip rate gamma = 2 kappa E2 coth(E2/T)."""
    return 2.0 * params.kappa * params.e2 / np.tanh(params.e2 / params.temperature)


def kappa_for_gamma(gamma: float, params: ModelParams) -> float:
    """Inverse of :func:`rtn_gamma`: the kappa producing flip rate ``gamma``."""
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    return gamma * np.tanh(params.e2 / params.temperature) / (2.0 * params.e2)


def rtn_spectrum(omega, params: ModelParams):
    """Lorentzian telegraph-noise spectrum S(omega) = lam^2 gamma / (omega^2 + gamma^2)."""
    g = rtn_gamma(params)
    if g <= 0.0:
        raise ValueError("spectrum undefined at kappa = 0")
    omega = np.asarray(omega, dtype=float)
    out = params.lam**2 * g / (omega**2 + g**2)
    return float(out) if out.ndim == 0 else out


def t1_t2_rates(params: ModelParams, e1: float = 0.0) -> tuple[float, float]:
    """Analytic qubit rates (1/T1, 1/T2) in the telegraph-noise picture.

    1/T1 = (Delta^2/E^2) S(2E) and 1/T2 = 1/(2 T1) + (e1^2/E^2) S(0) with
    E = sqrt(Delta^2 + e1^2), evaluated at the working point ``e1``.
    """
    esq = params.delta**2 + e1**2
    r1 = (params.delta**2 / esq) * rtn_spectrum(2.0 * np.sqrt(esq), params)
    r2 = 0.5 * r1 + (e1**2 / esq) * rtn_spectrum(0.0, params)
    return float(r1), float(r2)


@dataclass(frozen=True)
class RtnAnalytics:
    """Bundle of the telegraph-noise reference quantities at a working point."""

    gamma: float
    s_zero: float
    t1_rate: float
    t2_rate: float


def rtn_analytics(params: ModelParams, e1: float = 0.0) -> RtnAnalytics:
    r1, r2 = t1_t2_rates(params, e1)
    return RtnAnalytics(rtn_gamma(params), float(rtn_spectrum(0.0, params)), r1, r2)
