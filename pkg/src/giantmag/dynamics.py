"""Population dynamics of the giant emitter at three levels of fidelity.

* ``markov``: closed-form exponential decay at the Markovian rate.
* ``dde``: the retarded single-excitation amplitude equation, integrated with
  a fixed-step RK4 whose step divides the inter-leg delay.
* ``exact``: unitary evolution of the emitter plus a discretised waveguide.

The DDE works in the frame rotating at ``Omega``; the exact engine works in
the lab frame.  Only populations are compared between engines.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import (
    ConfigError,
    EmitterConfig,
    NumericalError,
    TimeGrid,
    WaveguideGrid,
    make_grid,
)
from .spectral import decay_rate, find_optimal

POPULATION_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    """Emitter amplitude on a time grid, plus mode amplitudes when recorded.

    For the ``small`` engine ``alpha`` has one column per emitter and
    ``population`` is the total excited population.
    """

    times: np.ndarray
    alpha: np.ndarray
    engine: str
    config: EmitterConfig
    beta: np.ndarray | None = None

    @property
    def population(self) -> np.ndarray:
        p = np.abs(self.alpha) ** 2
        return p.sum(axis=1) if p.ndim == 2 else p

    @property
    def norm(self) -> np.ndarray | None:
        if self.beta is None:
            return None
        return self.population + (np.abs(self.beta) ** 2).sum(axis=1)

    def to_csv(self, path) -> Path:
        path = Path(path)
        alpha = self.alpha if self.alpha.ndim == 1 else self.alpha.sum(axis=1) / math.sqrt(self.alpha.shape[1])
        header = ["t", "Pe", "Re_alpha", "Im_alpha"]
        cols = [self.times, self.population, alpha.real, alpha.imag]
        if self.beta is not None:
            header.append("norm")
            cols.append(self.norm)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in zip(*cols):
                writer.writerow([repr(float(x)) for x in row])
        return path


@dataclass(frozen=True, eq=False)
class EffectiveDecay:
    times: np.ndarray
    R_eff: np.ndarray


def default_time_grid(config: EmitterConfig, samples: int = 500) -> TimeGrid:
    """Run window ``[0, 5/R(Omega_opt)]``."""
    if config.M >= 2:
        rate = decay_rate(config, find_optimal(config).Omega_opt)
    else:
        rate = decay_rate(config)
    return TimeGrid.from_samples(5.0 / rate, samples)


def _as_times(time_grid) -> np.ndarray:
    if isinstance(time_grid, TimeGrid):
        return time_grid.times()
    return np.asarray(time_grid, dtype=float)


def markov_population(config: EmitterConfig, time_grid) -> AmplitudeTrajectory:
    t = _as_times(time_grid)
    rate = decay_rate(config)
    return AmplitudeTrajectory(
        times=t, alpha=np.exp(-0.5 * rate * t).astype(complex), engine="markov", config=config
    )


def dde_evolve(config: EmitterConfig, time_grid: TimeGrid, min_steps_per_delay: int = 20) -> AmplitudeTrajectory:
    """Integrate the retarded amplitude equation from ``alpha(0) = 1``.

    ``alpha'(t) = -(G^2/(M v)) alpha(t)
                  - (2 G^2/(M^2 v)) sum_l (M-l) e^{i Omega l tau} alpha(t - l tau) Theta(t - l tau)``

    The step is shrunk until it divides ``tau``, so delayed arguments at the
    start and end of a step are stored grid values.  The half-step stages
    read the delayed amplitude from the cubic Hermite interpolant built on
    stored values and one-sided derivatives, which is fourth-order accurate
    like the RK4 step itself.
    """
    if min_steps_per_delay < 20:
        raise ConfigError("step-incompatible-with-delay: need at least 20 steps per delay")
    grid = time_grid.aligned(config.tau, min_steps_per_delay)
    dt = grid.dt
    q = config.tau / dt
    if abs(q - round(q)) > 1e-9:
        raise ConfigError(f"step-incompatible-with-delay: tau/dt = {q!r}")
    q = int(round(q))
    n = grid.samples - 1

    M, G, v = config.M, config.G, config.v
    local = G**2 / (M * v)
    lags = np.arange(1, M)
    coeff = (2 * G**2 / (M**2 * v)) * (M - lags) * np.exp(1j * config.Omega * lags * config.tau)
    offsets = q * lags

    alpha = np.zeros(n + 1, dtype=complex)
    d_right = np.zeros(n + 1, dtype=complex)  # derivative at t_i from the step starting there
    d_left = np.zeros(n + 1, dtype=complex)  # derivative at t_i from the step ending there
    alpha[0] = 1.0
    half = dt / 2
    for i in range(n):
        n_active = min(M - 1, i // q)
        if n_active:
            j = i - offsets[:n_active]
            c = coeff[:n_active]
            h0 = c @ alpha[j]
            h1 = c @ alpha[j + 1]
            mid = 0.5 * (alpha[j] + alpha[j + 1]) + (dt / 8) * (d_right[j] - d_left[j + 1])
            hm = c @ mid
        else:
            h0 = hm = h1 = 0.0
        y = alpha[i]
        k1 = -local * y - h0
        k2 = -local * (y + half * k1) - hm
        k3 = -local * (y + half * k2) - hm
        k4 = -local * (y + dt * k3) - h1
        alpha[i + 1] = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        d_right[i] = k1
        d_left[i + 1] = -local * alpha[i + 1] - h1
    return AmplitudeTrajectory(times=grid.times(), alpha=alpha, engine="dde", config=config)


def _check_grid(config: EmitterConfig, grid: WaveguideGrid) -> None:
    gc = grid.config
    if (gc.M, gc.G, gc.d, gc.v) != (config.M, config.G, config.d, config.v):
        raise ConfigError("grid-config-mismatch: grid was built for a different emitter geometry")


def build_hamiltonian(config: EmitterConfig, grid: WaveguideGrid) -> np.ndarray:
    """Single-excitation Hamiltonian on {|e, vac>, |g, 1_j>}."""
    _check_grid(config, grid)
    n = grid.n_modes
    H = np.zeros((n + 1, n + 1), dtype=complex)
    H[0, 0] = config.Omega
    H[np.arange(1, n + 1), np.arange(1, n + 1)] = grid.omega
    H[0, 1:] = grid.leg_sum
    H[1:, 0] = grid.leg_sum.conj()
    return H


@lru_cache(maxsize=4)
def _eigensystem(kind: str, config: EmitterConfig, grid_key: tuple):
    grid_config, n_modes, k_window = grid_key
    window = (k_window[0] * grid_config.d, k_window[1] * grid_config.d)
    grid = make_grid(grid_config, n_modes, window)
    if kind == "giant":
        H = build_hamiltonian(config, grid)
    else:
        from .ensemble import build_small_hamiltonian

        H = build_small_hamiltonian(config, grid)
    energies, vectors = np.linalg.eigh(H)
    energies.flags.writeable = False
    vectors.flags.writeable = False
    return energies, vectors


def eigensystem(kind: str, config: EmitterConfig, grid: WaveguideGrid):
    """Cached ``eigh`` of the giant (``kind='giant'``) or small-emitter Hamiltonian."""
    _check_grid(config, grid)
    return _eigensystem(kind, config, grid.key())


def evolve_state(
    energies: np.ndarray,
    vectors: np.ndarray,
    psi0: np.ndarray,
    times: np.ndarray,
    observed: int,
    store_all: bool = False,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Amplitudes of ``exp(-iHt) psi0`` on the first ``observed`` basis states.

    Returns ``(observed_amplitudes, remaining_amplitudes or None)``.
    """
    coeffs = vectors.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times, energies)) * coeffs
    head = phases @ vectors[:observed].T
    tail = phases @ vectors[observed:].T if store_all else None
    return head, tail


def exact_evolve(
    config: EmitterConfig,
    grid: WaveguideGrid,
    time_grid,
    initial: np.ndarray | None = None,
    store_modes: bool = False,
) -> AmplitudeTrajectory:
    """Evolve by one dense eigendecomposition; default start is ``|e, vac>``."""
    n = grid.n_modes + 1
    if initial is None:
        psi0 = np.zeros(n, dtype=complex)
        psi0[0] = 1.0
    else:
        psi0 = np.asarray(initial, dtype=complex)
        if psi0.shape != (n,):
            raise ConfigError(f"initial state must have shape ({n},), got {psi0.shape}")
        if abs(np.linalg.norm(psi0) - 1) > 1e-9:
            raise ConfigError("non-normalized-initial-state")
    times = _as_times(time_grid)
    energies, vectors = eigensystem("giant", config, grid)
    head, tail = evolve_state(energies, vectors, psi0, times, 1, store_modes)
    return AmplitudeTrajectory(times=times, alpha=head[:, 0], engine="exact", config=config, beta=tail)


def effective_decay(traj: AmplitudeTrajectory, floor: float = POPULATION_FLOOR) -> EffectiveDecay:
    """``R_eff(t) = -ln P_e(t) / t`` for ``t > 0``."""
    keep = traj.times > 0
    t = traj.times[keep]
    p = traj.population[keep]
    if np.any(p <= floor):
        first = t[np.argmax(p <= floor)]
        raise NumericalError(f"population-underflow: P_e below {floor:g} from t = {first:.6g}")
    return EffectiveDecay(times=t, R_eff=-np.log(p) / t)
