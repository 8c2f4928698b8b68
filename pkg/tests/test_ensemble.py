import math

import numpy as np
import pytest

from giantmag import (
    ConfigError,
    EmitterConfig,
    TimeGrid,
    build_hamiltonian,
    build_small_hamiltonian,
    default_time_grid,
    dicke_state,
    exact_evolve,
    exact_evolve_small,
    grid_for_run,
    make_grid,
)
from giantmag.ensemble import EnsembleState


def test_small_hamiltonian_structure(opt30):
    grid = make_grid(opt30, 160)
    H = build_small_hamiltonian(opt30, grid)
    M = opt30.M
    assert H.shape == (M + 160, M + 160)
    assert np.max(np.abs(H - H.conj().T)) < 1e-14
    block = H[:M, :M]
    np.testing.assert_array_equal(block, np.diag(np.full(M, opt30.Omega)))
    col_norms = np.linalg.norm(H[:M, M:], axis=1)
    np.testing.assert_allclose(col_norms, col_norms[0], rtol=1e-13)


def test_small_equals_giant_for_single_emitter():
    cfg = EmitterConfig(M=1, G=0.2)
    grid = make_grid(cfg, 80)
    np.testing.assert_array_equal(build_small_hamiltonian(cfg, grid), build_hamiltonian(cfg, grid))
    tg = TimeGrid.from_samples(60, 120)
    a = exact_evolve_small(cfg, grid, tg).population
    b = exact_evolve(cfg, grid, tg).population
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_small_grid_mismatch():
    with pytest.raises(ConfigError, match="grid-config-mismatch"):
        build_small_hamiltonian(EmitterConfig(M=2), make_grid(EmitterConfig(M=3), 20))


def test_dicke_state():
    one = dicke_state(1)
    assert one.emitter_amplitudes.tolist() == [1.0]
    four = dicke_state(4, 10)
    np.testing.assert_array_equal(four.emitter_amplitudes, 0.5)
    assert four.mode_amplitudes.shape == (10,)
    assert dicke_state(7).norm == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConfigError):
        dicke_state(0)


def test_small_norm_and_start(opt30):
    tg = default_time_grid(opt30)
    traj = exact_evolve_small(opt30, grid_for_run(opt30, tg.t_max), tg, store_modes=True)
    assert traj.alpha.shape == (tg.samples, 30)
    assert traj.engine == "small"
    assert traj.population[0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(traj.norm - 1)) < 1e-9


def test_small_initial_state_checks(opt2):
    grid = make_grid(opt2, 20)
    bad = EnsembleState(np.array([1.0, 1.0], dtype=complex), np.zeros(20, dtype=complex))
    with pytest.raises(ConfigError, match="non-normalized"):
        exact_evolve_small(opt2, grid, [0.0], initial=bad)
    with pytest.raises(ConfigError):
        exact_evolve_small(opt2, grid, [0.0], initial=dicke_state(2, 5))


def test_small_decoupled():
    cfg = EmitterConfig(M=6, G=1e-8).with_phase(2.3 * math.pi)
    traj = exact_evolve_small(cfg, make_grid(cfg), np.linspace(0, 500, 51))
    assert np.max(np.abs(traj.population - 1)) < 1e-6


def test_position_reversal_symmetry():
    # the Dicke state is invariant under n -> M+1-n, so per-emitter populations
    # mirror each other and the total is unchanged by the relabelling
    cfg = EmitterConfig(M=5, G=0.1).with_phase(2.25 * math.pi)
    traj = exact_evolve_small(cfg, make_grid(cfg, 300), np.linspace(0, 200, 81))
    per = np.abs(traj.alpha) ** 2
    assert np.max(np.abs(per[:, 0] - per[:, 2])) > 1e-4
    np.testing.assert_allclose(per, per[:, ::-1], atol=1e-9)
    np.testing.assert_allclose(per.sum(axis=1), per[:, ::-1].sum(axis=1), atol=1e-12)


def test_small_array_slower_than_giant():
    from giantmag import optimal_config

    cfg = optimal_config(EmitterConfig(M=20, G=0.1))
    tg = default_time_grid(cfg)
    grid = grid_for_run(cfg, tg.t_max)
    giant = exact_evolve(cfg, grid, tg).population
    small = exact_evolve_small(cfg, grid, tg).population
    mid = tg.samples // 5
    assert small[mid] > giant[mid]
