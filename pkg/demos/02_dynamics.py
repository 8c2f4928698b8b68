"""
Markovian, retarded and exact decay
===================================

Three engines follow the excited-state population P_e(t):

* the Markovian exponential exp(-R t)
* the retarded amplitude equation, where each leg feels the field the other
  legs emitted one or more delays ago
* exact unitary evolution of the emitter plus a discretised waveguide

For two legs the delay is short compared with the lifetime and all three
agree.  For thirty legs the field needs 29 delays to cross the emitter, and
the exponential stops being a good description.
"""
import numpy as np

import giantmag as gm

for M in (2, 30):
    cfg = gm.optimal_config(gm.EmitterConfig(M=M, G=0.1))
    tg = gm.default_time_grid(cfg)          # t in [0, 5/R], 500 samples
    dde = gm.dde_evolve(cfg, tg)            # step shrunk to divide the delay
    t = dde.times[:: max(1, (dde.times.size - 1) // 500)]
    p_dde = dde.population[:: max(1, (dde.times.size - 1) // 500)]

    # The mode grid grows until its revival time clears the run.
    grid = gm.grid_for_run(cfg, t[-1])
    p_exact = gm.exact_evolve(cfg, grid, t).population
    p_markov = gm.markov_population(cfg, t).population

    print(f"M={M}: R = {gm.decay_rate(cfg):.5f}, {grid.n_modes} modes, t_max = {t[-1]:.1f}")
    print(f"   max |markov - exact| = {np.max(np.abs(p_markov - p_exact)):.4f}")
    print(f"   max |dde    - exact| = {np.max(np.abs(p_dde - p_exact)):.5f}")

    # The effective rate -ln(P_e)/t is flat for a true exponential.
    eff = gm.effective_decay(gm.exact_evolve(cfg, grid, t))
    print(f"   R_eff ranges over [{eff.R_eff.min():.5f}, {eff.R_eff.max():.5f}]")
