"""Small-emitter benchmark: M point-like emitters at the former coupling points."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, EmitterConfig, WaveguideGrid
from .dynamics import AmplitudeTrajectory, _as_times, _check_grid, eigensystem, evolve_state


@dataclass(frozen=True, eq=False)
class EnsembleState:
    emitter_amplitudes: np.ndarray
    mode_amplitudes: np.ndarray

    @property
    def norm(self) -> float:
        return float(
            np.sum(np.abs(self.emitter_amplitudes) ** 2) + np.sum(np.abs(self.mode_amplitudes) ** 2)
        )

    def vector(self) -> np.ndarray:
        return np.concatenate([self.emitter_amplitudes, self.mode_amplitudes]).astype(complex)


def dicke_state(M: int, n_modes: int = 0) -> EnsembleState:
    """Symmetric single excitation shared by ``M`` emitters, waveguide in vacuum."""
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")
    return EnsembleState(
        emitter_amplitudes=np.full(M, 1 / np.sqrt(M), dtype=complex),
        mode_amplitudes=np.zeros(n_modes, dtype=complex),
    )


def build_small_hamiltonian(config: EmitterConfig, grid: WaveguideGrid) -> np.ndarray:
    """(M+N)-dimensional single-excitation Hamiltonian.

    Emitter ``n`` sits at ``n d`` and couples to mode ``j`` with
    ``g sqrt(dk/2pi) e^{i k_j n d}``; emitters interact only through the
    waveguide.
    """
    _check_grid(config, grid)
    M, N = config.M, grid.n_modes
    H = np.zeros((M + N, M + N), dtype=complex)
    H[np.arange(M), np.arange(M)] = config.Omega
    H[np.arange(M, M + N), np.arange(M, M + N)] = grid.omega
    H[:M, M:] = grid.coupling.T
    H[M:, :M] = grid.coupling.conj()
    return H


def exact_evolve_small(
    config: EmitterConfig,
    grid: WaveguideGrid,
    time_grid,
    initial: EnsembleState | None = None,
    store_modes: bool = False,
) -> AmplitudeTrajectory:
    """Evolve the array from the Dicke state; ``alpha`` holds one column per emitter."""
    M, N = config.M, grid.n_modes
    state = dicke_state(M, N) if initial is None else initial
    psi0 = state.vector()
    if psi0.shape != (M + N,):
        raise ConfigError(f"initial state must have {M} emitter and {N} mode amplitudes")
    if abs(state.norm - 1) > 1e-9:
        raise ConfigError("non-normalized-initial-state")
    times = _as_times(time_grid)
    energies, vectors = eigensystem("small", config, grid)
    head, tail = evolve_state(energies, vectors, psi0, times, M, store_modes)
    return AmplitudeTrajectory(times=times, alpha=head, engine="small", config=config, beta=tail)
