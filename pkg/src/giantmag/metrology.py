"""Frequency variance, Fisher information per unit time and field sensitivity.

Dimensionless inputs (frequencies in v/d, times in d/v) are converted with a
:class:`~giantmag.core.PhysicalScale`: the CFI per unit time picks up a factor
``gamma^2 / omega_ref`` and comes out in Hz/T^2.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DEFAULT_WINDOW,
    ConfigError,
    EmitterConfig,
    NumericalError,
    PhysicalScale,
    TimeGrid,
    WaveguideGrid,
    grid_for_run,
)
from .dynamics import default_time_grid, effective_decay, exact_evolve
from .ensemble import exact_evolve_small
from .spectral import decay_rate, decay_slope, find_optimal

DEFAULT_SCALE = PhysicalScale()
DEFAULT_DELTA = 1e-4


@dataclass(frozen=True)
class MetrologyPoint:
    """One (t, M) record in SI units under the scale it was computed with.

    ``t`` in seconds, ``f_H`` in Hz/T^2, ``S_H`` in T/sqrt(Hz),
    ``var_Omega`` in (rad/s)^2 and ``var_H`` in T^2.
    """

    t: float
    M: int
    f_H: float
    S_H: float
    var_Omega: float
    var_H: float
    engine: str


def variance_from_population(P_e, dPe_dOmega):
    """Error-transfer variance ``P(1-P) / (dP/dOmega)^2``.

    A vanishing slope gives ``+inf``; populations at 0 or 1 are rejected.
    """
    P = np.asarray(P_e, dtype=float)
    slope = np.asarray(dPe_dOmega, dtype=float)
    if np.any((P <= 0) | (P >= 1)):
        raise ValueError("boundary-population: P_e must lie strictly inside (0, 1)")
    with np.errstate(divide="ignore"):
        out = np.where(slope == 0, np.inf, P * (1 - P) / np.where(slope == 0, 1.0, slope) ** 2)
    return float(out) if out.ndim == 0 else out


def markov_variance(R, t, dR_dOmega):
    """``(e^{Rt} - 1) / (t^2 (dR/dOmega)^2)``: the error transfer for ``P = e^{-Rt}``."""
    R, t, s = (np.asarray(x, dtype=float) for x in (R, t, dR_dOmega))
    with np.errstate(divide="ignore"):
        out = np.where(s == 0, np.inf, np.expm1(R * t) / (t**2 * np.where(s == 0, 1.0, s) ** 2))
    return float(out) if out.ndim == 0 else out


def _t_over_expm1(R: np.ndarray, t: np.ndarray) -> np.ndarray:
    x = R * t
    small = np.abs(x) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        regular = t / np.expm1(x)
        series = 1.0 / (R * (1 + 0.5 * x))
    return np.where(small, series, regular)


def cfi_per_time_markov(config: EmitterConfig, Omega=None, t=1.0, scale: PhysicalScale = DEFAULT_SCALE):
    """``gamma^2 t (dR/dOmega)^2 / (e^{Rt} - 1)`` with the analytic slope.

    Dark points, where R vanishes to rounding, are reported as 0: both R and
    the slope are then pure rounding noise and their ratio carries no
    information.
    """
    Omega = config.Omega if Omega is None else Omega
    R = np.asarray(decay_rate(config, Omega), dtype=float)
    slope = np.asarray(decay_slope(config, Omega), dtype=float)
    t = np.asarray(t, dtype=float)
    dark = R <= 1e-14 * 2 * config.g**2 * config.M**2 / config.v
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        f = np.where(dark | (slope == 0), 0.0, slope**2 * _t_over_expm1(R, t))
    f = scale.cfi_factor * f
    return float(f) if f.ndim == 0 else f


def sensitivity(f_H):
    """``S_H = 1/sqrt(f_H)``."""
    f = np.asarray(f_H, dtype=float)
    if np.any(~(f > 0)):
        raise ValueError("nonpositive-cfi: sensitivity needs f_H > 0")
    out = f**-0.5
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CFICurve:
    """CFI per unit time along one trajectory triple.

    ``t`` is dimensionless; ``f_H``/``S_H`` are in the units of ``scale``.
    ``f_H_direct`` evaluates the error-transfer formula on the populations
    themselves instead of substituting ``R_eff`` into the exponential form.
    """

    config: EmitterConfig
    engine: str
    scale: PhysicalScale
    t: np.ndarray
    population: np.ndarray
    R_eff: np.ndarray
    dR_dOmega: np.ndarray
    f_H: np.ndarray
    f_H_direct: np.ndarray
    delta_Omega: float
    richardson_error: float

    @property
    def t_seconds(self) -> np.ndarray:
        return self.t / self.scale.omega_ref

    @property
    def S_H(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.f_H > 0, 1 / np.sqrt(np.where(self.f_H > 0, self.f_H, 1.0)), np.inf)

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.f_H))

    @property
    def t_opt(self) -> float:
        return float(self.t[self.peak_index])

    @property
    def f_max(self) -> float:
        return float(self.f_H[self.peak_index])

    @property
    def has_interior_max(self) -> bool:
        return 0 < self.peak_index < self.t.size - 1

    def points(self) -> list[MetrologyPoint]:
        var_H = 1.0 / (self.f_H * self.t_seconds)
        var_H = np.where(self.f_H > 0, var_H, np.inf)
        return [
            MetrologyPoint(
                t=float(ts), M=self.config.M, f_H=float(f), S_H=float(s),
                var_Omega=float(vh * self.scale.gamma**2), var_H=float(vh), engine=self.engine,
            )
            for ts, f, s, vh in zip(self.t_seconds, self.f_H, self.S_H, var_H)
        ]


def _evolve(engine: str, config: EmitterConfig, grid: WaveguideGrid, t: np.ndarray):
    if engine == "exact":
        return exact_evolve(config, grid, t)
    if engine == "small":
        return exact_evolve_small(config, grid, t)
    raise ValueError(f"unknown engine {engine!r}; expected 'exact' or 'small'")


def cfi_per_time_dynamic(
    config: EmitterConfig,
    grid: WaveguideGrid,
    Omega: float | None = None,
    time_grid: TimeGrid | None = None,
    delta_Omega: float = DEFAULT_DELTA,
    scale: PhysicalScale = DEFAULT_SCALE,
    engine: str = "exact",
    richardson_tol: float = 0.01,
) -> CFICurve:
    """CFI per unit time from exact evolutions at ``Omega - delta``, ``Omega``, ``Omega + delta``.

    The slope of ``R_eff(t) = -ln P_e(t)/t`` is taken by central difference
    and cross-checked against the step ``delta/2``; a relative disagreement
    above ``richardson_tol`` (sup norm over the curve) raises
    :class:`NumericalError`.
    """
    Omega = config.Omega if Omega is None else float(Omega)
    lo, hi = grid.frequency_window
    if not (lo < Omega - delta_Omega and Omega + delta_Omega < hi):
        raise ConfigError(f"Omega +/- delta outside the grid window ({lo:.6g}, {hi:.6g})")
    time_grid = default_time_grid(config.with_omega(Omega)) if time_grid is None else time_grid
    t = time_grid.times()
    t = t[t > 0]

    def rate(om):
        traj = _evolve(engine, config.with_omega(om), grid, t)
        return traj.population, effective_decay(traj).R_eff

    pop0, R0 = rate(Omega)
    slopes = []
    pops = []
    for h in (delta_Omega, delta_Omega / 2):
        (p_minus, r_minus), (p_plus, r_plus) = rate(Omega - h), rate(Omega + h)
        slopes.append((r_plus - r_minus) / (2 * h))
        pops.append((p_plus - p_minus) / (2 * h))

    f_coarse, f_fine = (s**2 * _t_over_expm1(R0, t) for s in slopes)
    ref = np.max(np.abs(f_coarse))
    err = float(np.max(np.abs(f_coarse - f_fine)) / ref) if ref > 0 else 0.0
    if err > richardson_tol:
        raise NumericalError(
            f"finite-difference-unstable: delta and delta/2 disagree by {err:.3g} (> {richardson_tol})"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = pops[0] ** 2 / (pop0 * (1 - pop0) * t)
    direct = np.where(np.isfinite(direct), direct, 0.0)
    return CFICurve(
        config=config.with_omega(Omega),
        engine=engine,
        scale=scale,
        t=t,
        population=pop0,
        R_eff=R0,
        dR_dOmega=slopes[0],
        f_H=scale.cfi_factor * f_coarse,
        f_H_direct=scale.cfi_factor * direct,
        delta_Omega=delta_Omega,
        richardson_error=err,
    )


# -- maps over M, t and G ------------------------------------------------------


def _working_config(base: EmitterConfig, M: int, G: float | None = None) -> EmitterConfig:
    cfg = EmitterConfig(M=M, G=base.G if G is None else G, d=base.d, v=base.v, Omega=base.Omega)
    return cfg.with_omega(find_optimal(cfg).Omega_opt)


def common_time_grid(base: EmitterConfig, M_list: Iterable[int], samples: int = 500) -> TimeGrid:
    """Window long enough for every M: the largest ``5/R(Omega_opt)``."""
    t_max = max(default_time_grid(_working_config(base, M)).t_max for M in M_list)
    return TimeGrid.from_samples(t_max, samples)


def _run_cell(args) -> CFICurve:
    cfg, time_grid, delta, scale, engine, n_min, window = args
    grid = grid_for_run(cfg, time_grid.t_max, n_min=n_min, window=window)
    return cfi_per_time_dynamic(cfg, grid, cfg.Omega, time_grid, delta, scale, engine)


def _map_cells(cells: Sequence, jobs: int) -> list[CFICurve]:
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_cell, cells))
    return [_run_cell(c) for c in cells]


@dataclass(frozen=True, eq=False)
class CFIMap:
    M: np.ndarray
    t: np.ndarray
    f_H: np.ndarray
    curves: list[CFICurve] = field(repr=False)

    @property
    def S_H(self) -> np.ndarray:
        return np.stack([c.S_H for c in self.curves])

    def ridge(self) -> list[tuple[int, float, float, float]]:
        """Per-M ``(M, t_opt, f_max, S_H at f_max)``."""
        return [(c.config.M, c.t_opt, c.f_max, 1 / math.sqrt(c.f_max)) for c in self.curves]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["M", "t", "fH", "SH"])
            for c in self.curves:
                for t, f, s in zip(c.t, c.f_H, c.S_H):
                    w.writerow([c.config.M, repr(float(t)), repr(float(f)), repr(float(s))])
        return path

    def ridge_to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["M", "t_opt", "fH_max", "SH"])
            for M, t, f, s in self.ridge():
                w.writerow([M, repr(t), repr(f), repr(s)])
        return path


def cfi_map(
    config_base: EmitterConfig,
    M_list: Iterable[int],
    time_grid: TimeGrid | None = None,
    scale: PhysicalScale = DEFAULT_SCALE,
    delta_Omega: float = DEFAULT_DELTA,
    engine: str = "exact",
    jobs: int = 1,
    n_min: int = 400,
    window: tuple[float, float] | None = None,
) -> CFIMap:
    """f_H over (M, t), each M at its own optimal working point, on one time grid."""
    Ms = [int(m) for m in M_list]
    time_grid = common_time_grid(config_base, Ms) if time_grid is None else time_grid
    window = DEFAULT_WINDOW if window is None else window
    cells = [
        (_working_config(config_base, M), time_grid, delta_Omega, scale, engine, n_min, window)
        for M in Ms
    ]
    curves = _map_cells(cells, jobs)
    return CFIMap(
        M=np.array(Ms),
        t=curves[0].t,
        f_H=np.stack([c.f_H for c in curves]),
        curves=curves,
    )


@dataclass(frozen=True)
class SensitivityRow:
    setup: str
    M: int
    G: float
    t_opt: float
    fH_max: float
    SH: float


def write_sensitivity_csv(rows: Sequence[SensitivityRow], path, with_setup: bool = False) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["M", "G", "t_opt", "fH_max", "SH"]
        w.writerow((["setup"] if with_setup else []) + head)
        for r in rows:
            vals = [r.M, repr(r.G), repr(r.t_opt), repr(r.fH_max), repr(r.SH)]
            w.writerow(([r.setup] if with_setup else []) + vals)
    return path


def sensitivity_vs_M(
    config_base: EmitterConfig,
    M_list: Iterable[int],
    G_list: Iterable[float],
    time_grid: TimeGrid | None = None,
    scale: PhysicalScale = DEFAULT_SCALE,
    delta_Omega: float = DEFAULT_DELTA,
    engine: str = "exact",
    jobs: int = 1,
    n_min: int = 400,
) -> list[SensitivityRow]:
    """Time-optimal sensitivity per (M, G).

    ``engine='small'`` runs the small-emitter array at the giant emitter's
    optimal frequency for the same M and G.
    """
    Ms = [int(m) for m in M_list]
    Gs = [float(g) for g in G_list]
    cells, keys = [], []
    for G in Gs:
        base = EmitterConfig(M=1, G=G, d=config_base.d, v=config_base.v, Omega=config_base.Omega)
        tg = common_time_grid(base, Ms) if time_grid is None else time_grid
        for M in Ms:
            cells.append((_working_config(base, M), tg, delta_Omega, scale, engine, n_min, DEFAULT_WINDOW))
            keys.append((M, G))
    setup = "small" if engine == "small" else "giant"
    return [
        SensitivityRow(setup, M, G, c.t_opt, c.f_max, 1 / math.sqrt(c.f_max))
        for (M, G), c in zip(keys, _map_cells(cells, jobs))
    ]


@dataclass(frozen=True, eq=False)
class Comparison:
    giant: CFICurve
    small: CFICurve

    @property
    def ratio(self) -> float:
        return self.giant.f_max / self.small.f_max

    def rows(self) -> list[SensitivityRow]:
        return [
            SensitivityRow(name, c.config.M, c.config.G, c.t_opt, c.f_max, 1 / math.sqrt(c.f_max))
            for name, c in (("giant", self.giant), ("small", self.small))
        ]


def compare_small(
    config: EmitterConfig,
    time_grid: TimeGrid | None = None,
    scale: PhysicalScale = DEFAULT_SCALE,
    delta_Omega: float = DEFAULT_DELTA,
    n_min: int = 400,
) -> Comparison:
    """Giant emitter and small-emitter array with identical Omega, g, d, grid and times."""
    cfg = _working_config(config, config.M)
    time_grid = default_time_grid(cfg) if time_grid is None else time_grid
    grid = grid_for_run(cfg, time_grid.t_max, n_min=n_min, window=DEFAULT_WINDOW)
    giant = cfi_per_time_dynamic(cfg, grid, cfg.Omega, time_grid, delta_Omega, scale, "exact")
    small = cfi_per_time_dynamic(cfg, grid, cfg.Omega, time_grid, delta_Omega, scale, "small")
    return Comparison(giant=giant, small=small)
