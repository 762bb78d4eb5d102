"""Piecewise-constant propagation of the dissipative map.

A control pulse is a list of slice amplitudes E1(j) held constant over
uniform slices of length dt.  Each slice contributes the map
F_j = exp(dt * L(E1(j))) and the full gate map is the ordered product
F = F_N ... F_1 (later slices act from the left).  The reduced qubit map
traces the fluctuator out of the composite map after embedding it in its
thermal state, F_red = P F E with P E = identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hilbert, redfield
from .hilbert import DIM
from .redfield import ModelParams


def fmt_float(x: float) -> str:
    """Format a float with 17 significant digits (CSV round-trip safe)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ControlPulse:
    """Uniform piecewise-constant control, ``amplitudes[j]`` on slice j."""

    amplitudes: np.ndarray
    dt: float

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("amplitudes must be a non-empty 1-d array")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_slices(self) -> int:
        return self.amplitudes.size

    @property
    def t_g(self) -> float:
        return self.n_slices * self.dt

    def midpoints(self) -> np.ndarray:
        """Slice midpoint times (j + 1/2) dt."""
        return (np.arange(self.n_slices) + 0.5) * self.dt

    @classmethod
    def zeros(cls, n_slices: int, dt: float) -> "ControlPulse":
        return cls(np.zeros(n_slices), dt)

    def resample(self, n_slices: int) -> "ControlPulse":
        """Linear interpolation onto a new slice count at equal gate time."""
        if n_slices == self.n_slices:
            return self
        dt_new = self.t_g / n_slices
        t_new = (np.arange(n_slices) + 0.5) * dt_new
        return ControlPulse(np.interp(t_new, self.midpoints(), self.amplitudes), dt_new)


def slice_count(t_g: float, dt: float) -> int:
    """Number of uniform slices covering ``t_g`` at nominal width ``dt``."""
    if t_g <= 0.0:
        raise ValueError("gate time must be positive")
    return max(1, math.ceil(t_g / dt - 1e-12))


def thermal_tlf_state(params: ModelParams) -> np.ndarray:
    """Gibbs state of the bare fluctuator, exp(-E2 tau_z / T) normalized."""
    p_up = 1.0 / (1.0 + np.exp(2.0 * params.e2 / params.temperature))
    return np.diag([p_up, 1.0 - p_up]).astype(complex)


def slice_propagator(params: ModelParams, e1: float, dt: float) -> np.ndarray:
    """Single-slice map exp(dt * L(e1))."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    return hilbert.expm(dt * redfield.generator(params, e1))


def slice_propagators(params: ModelParams, pulse: ControlPulse) -> np.ndarray:
    """All slice maps of a pulse, shape (n_slices, 16, 16).

    Distinct amplitudes are exponentiated once and broadcast back.
    """
    uniq, inverse = np.unique(pulse.amplitudes, return_inverse=True)
    f_uniq = hilbert.expm(pulse.dt * redfield.generator(params, uniq))
    return f_uniq[inverse]


@dataclass
class MapTrajectory:
    """Slice maps of a pulse plus their ordered products.

    ``prefixes[j]`` is F_{j-1} ... F_0 (prefixes[0] is the identity) and
    ``suffixes[j]`` is F_{N-1} ... F_{j+1} (suffixes[N-1] likewise), so
    ``suffixes[j] @ slice_maps[j] @ prefixes[j]`` equals ``final`` for
    every j.  Cumulative products are filled only on request.
    """

    slice_maps: np.ndarray
    final: np.ndarray
    prefixes: np.ndarray | None = field(default=None)
    suffixes: np.ndarray | None = field(default=None)


def full_map(params: ModelParams, pulse: ControlPulse, with_cumulative: bool = False) -> MapTrajectory:
    """Composite map of the whole pulse, optionally with cumulative products."""
    fs = slice_propagators(params, pulse)
    n = fs.shape[0]
    if not with_cumulative:
        final = np.eye(DIM * DIM, dtype=complex)
        for j in range(n):
            final = fs[j] @ final
        return MapTrajectory(fs, final)
    prefixes = np.empty_like(fs)
    suffixes = np.empty_like(fs)
    acc = np.eye(DIM * DIM, dtype=complex)
    for j in range(n):
        prefixes[j] = acc
        acc = fs[j] @ acc
    final = acc
    acc = np.eye(DIM * DIM, dtype=complex)
    for j in range(n - 1, -1, -1):
        suffixes[j] = acc
        acc = acc @ fs[j]
    return MapTrajectory(fs, final, prefixes, suffixes)


def reduced_map(composite: np.ndarray | MapTrajectory, params: ModelParams) -> np.ndarray:
    """Qubit map P F E with the fluctuator embedded thermally and traced out."""
    f = composite.final if isinstance(composite, MapTrajectory) else np.asarray(composite)
    p = hilbert.partial_trace_superop()
    e = hilbert.embed_superop(thermal_tlf_state(params))
    return p @ f @ e


@dataclass
class StateTrajectory:
    """Sampled state evolution under a pulse.

    ``states`` holds the composite 4x4 density matrices; ``bloch`` and
    ``entropy_nats`` refer to the reduced qubit state; ``e1`` is the
    control amplitude of the slice each sample falls in.
    """

    times: np.ndarray
    states: np.ndarray
    bloch: np.ndarray
    entropy_nats: np.ndarray
    e1: np.ndarray


def evolve_state(
    params: ModelParams,
    pulse: ControlPulse,
    rho0: np.ndarray,
    samples_per_slice: int = 1,
) -> StateTrajectory:
    """Evolve a composite initial state, sampling within slices.

    Returns ``samples_per_slice * n_slices + 1`` samples including t = 0.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (DIM, DIM):
        raise ValueError("rho0 must be 4x4")
    if abs(np.trace(rho0) - 1.0) > 1e-10 or np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10:
        raise ValueError("rho0 is not a valid state")
    m = int(samples_per_slice)
    if m < 1:
        raise ValueError("samples_per_slice must be >= 1")
    uniq, inverse = np.unique(pulse.amplitudes, return_inverse=True)
    g_uniq = hilbert.expm((pulse.dt / m) * redfield.generator(params, uniq))
    n = pulse.n_slices
    times = np.empty(n * m + 1)
    states = np.empty((n * m + 1, DIM, DIM), dtype=complex)
    e1s = np.empty(n * m + 1)
    v = hilbert.vec(rho0)
    times[0], states[0], e1s[0] = 0.0, rho0, pulse.amplitudes[0]
    k = 1
    for j in range(n):
        g = g_uniq[inverse[j]]
        for i in range(m):
            v = g @ v
            times[k] = (j + (i + 1) / m) * pulse.dt
            states[k] = hilbert.unvec(v)
            e1s[k] = pulse.amplitudes[j]
            k += 1
    reduced = hilbert.partial_trace_tlf(states)
    bloch = np.stack([hilbert.bloch_vector(r) for r in reduced])
    ent = np.array([hilbert.entropy(r / np.trace(r).real) for r in reduced])
    return StateTrajectory(times, states, bloch, ent, e1s)


def write_trajectory_csv(traj: StateTrajectory, path) -> None:
    """Trajectory table: t, bloch_x, bloch_y, bloch_z, entropy_nats, E1."""
    with open(path, "w") as fh:
        fh.write("t,bloch_x,bloch_y,bloch_z,entropy_nats,E1\n")
        for i in range(traj.times.size):
            row = [traj.times[i], *traj.bloch[i], traj.entropy_nats[i], traj.e1[i]]
            fh.write(",".join(fmt_float(x) for x in row) + "\n")
