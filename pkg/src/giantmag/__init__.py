"""Giant-emitter waveguide-QED magnetometer: spectra, dynamics and Fisher information."""
from .core import (
    ConfigError,
    EmitterConfig,
    NumericalError,
    PhysicalScale,
    TimeGrid,
    WaveguideGrid,
    derive,
    grid_for_run,
    load_settings,
    make_grid,
)
from .dynamics import (
    AmplitudeTrajectory,
    build_hamiltonian,
    dde_evolve,
    default_time_grid,
    effective_decay,
    exact_evolve,
    markov_population,
)
from .ensemble import build_small_hamiltonian, dicke_state, exact_evolve_small
from .metrology import (
    cfi_map,
    cfi_per_time_dynamic,
    cfi_per_time_markov,
    compare_small,
    sensitivity,
    sensitivity_vs_M,
    variance_from_population,
)
from .spectral import (
    decay_rate,
    decay_slope,
    find_optimal,
    fit_optimal_scaling,
    lamb_shift,
    optimal_config,
    sweep,
)

__version__ = "0.1.0"
