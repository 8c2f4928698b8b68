"""Configuration types, derived quantities and the discretised waveguide.

All internal computation is dimensionless: frequencies are measured in units
of ``v/d`` and times in units of ``d/v``.  :class:`PhysicalScale` is only
applied when figures of merit are reported in Hz/T^2 and T/sqrt(Hz).
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

#: Gyromagnetic ratio of the Kittel mode, rad s^-1 T^-1 (quoted as 175 GHz/T).
GAMMA_KITTEL = 175e9

#: Mode count of the discretised waveguide (200 per propagation branch).
DEFAULT_N_MODES = 400

#: Frequency cut-off window in units of |k| d.
DEFAULT_WINDOW = (4 * math.pi / 3, 8 * math.pi / 3)

ENV_PREFIX = "WQED_"


class ConfigError(ValueError):
    """Invalid configuration, grid or time-grid parameters."""


class NumericalError(RuntimeError):
    """A numerical procedure could not produce a trustworthy result."""


@dataclass(frozen=True)
class PhysicalScale:
    """Conversion from the dimensionless core to SI reporting units.

    ``omega_ref`` is the angular frequency (rad/s) assigned to ``v/d`` and
    ``gamma`` the gyromagnetic ratio relating field and emitter frequency,
    ``Omega = gamma * H``.
    """

    omega_ref: float = 1e6
    gamma: float = GAMMA_KITTEL

    def __post_init__(self):
        if not (self.omega_ref > 0 and self.gamma > 0):
            raise ConfigError(f"scale parameters must be positive: {self}")

    @classmethod
    def dimensionless(cls) -> "PhysicalScale":
        return cls(omega_ref=1.0, gamma=1.0)

    @classmethod
    def kittel_7ghz(cls) -> "PhysicalScale":
        """Scale that puts the window centre ``Omega d/v = 2 pi`` at 2 pi x 7 GHz."""
        return cls(omega_ref=7e9)

    @property
    def cfi_factor(self) -> float:
        """Multiplier taking dimensionless CFI per unit time to Hz/T^2."""
        return self.gamma**2 / self.omega_ref


@dataclass(frozen=True)
class EmitterConfig:
    """Giant emitter with ``M`` legs spaced by ``d`` on a waveguide of group velocity ``v``.

    ``G`` is the total coupling; each leg couples with ``g = G/M``.
    """

    M: int
    G: float = 0.1
    d: float = 1.0
    v: float = 1.0
    Omega: float = 2 * math.pi

    def __post_init__(self):
        if isinstance(self.M, bool) or int(self.M) != self.M or self.M < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        for name in ("G", "d", "v", "Omega"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")

    @property
    def g(self) -> float:
        return self.G / self.M

    @property
    def phi(self) -> float:
        return self.Omega * self.d / self.v

    @property
    def tau(self) -> float:
        return self.d / self.v

    def with_omega(self, Omega: float) -> "EmitterConfig":
        return replace(self, Omega=float(Omega))

    def with_phase(self, phi: float) -> "EmitterConfig":
        return replace(self, Omega=float(phi) * self.v / self.d)


@dataclass(frozen=True)
class DerivedQuantities:
    g: float
    phi: float
    tau: float


def derive(config: EmitterConfig) -> DerivedQuantities:
    """Per-leg coupling, inter-leg phase and inter-leg delay."""
    return DerivedQuantities(g=config.g, phi=config.phi, tau=config.tau)


@dataclass(frozen=True, eq=False)
class WaveguideGrid:
    """Discretised single-photon mode set inside a |k| window.

    ``k`` holds signed wavenumbers (negative branch first, mirrored),
    ``omega = v |k|`` and ``coupling[j, n]`` is the amplitude with which
    leg ``n`` (position ``(n+1) d``) couples to mode ``j``.
    """

    k: np.ndarray
    omega: np.ndarray
    coupling: np.ndarray
    dk: float
    k_window: tuple[float, float]
    config: EmitterConfig = field(repr=False)

    def __len__(self) -> int:
        return self.k.size

    @property
    def n_modes(self) -> int:
        return self.k.size

    @property
    def leg_sum(self) -> np.ndarray:
        """Total emitter-mode coupling of a giant emitter, summed over legs."""
        return self.coupling.sum(axis=1)

    @property
    def frequency_window(self) -> tuple[float, float]:
        v = self.config.v
        return v * self.k_window[0], v * self.k_window[1]

    @property
    def recurrence_time(self) -> float:
        """Revival time ``2 pi / (v dk)`` of the discretised continuum."""
        return 2 * math.pi / (self.config.v * self.dk)

    def key(self) -> tuple:
        return (self.config, self.n_modes, self.k_window)


def make_grid(
    config: EmitterConfig,
    n_modes: int = DEFAULT_N_MODES,
    window: tuple[float, float] = DEFAULT_WINDOW,
) -> WaveguideGrid:
    """Mode grid with ``n_modes/2`` cell-centred |k| values per direction.

    ``window`` is given in units of ``|k| d``; the emitter phase
    ``Omega d / v`` must fall strictly inside it.
    """
    n_modes = int(n_modes)
    if n_modes < 2 or n_modes % 2:
        raise ConfigError(f"n_modes must be a positive even integer, got {n_modes}")
    lo, hi = (float(w) for w in window)
    if not 0 <= lo < hi:
        raise ConfigError(f"invalid window {window!r}")
    if not lo < config.phi < hi:
        raise ConfigError(
            f"window-excludes-emitter: Omega d/v = {config.phi:.6g} outside ({lo:.6g}, {hi:.6g})"
        )
    half = n_modes // 2
    k_lo, k_hi = lo / config.d, hi / config.d
    dk = (k_hi - k_lo) / half
    k_pos = k_lo + (np.arange(half) + 0.5) * dk
    k = np.concatenate([-k_pos[::-1], k_pos])
    positions = np.arange(1, config.M + 1) * config.d
    coupling = config.g * math.sqrt(dk / (2 * math.pi)) * np.exp(1j * np.outer(k, positions))
    return WaveguideGrid(
        k=k,
        omega=config.v * np.abs(k),
        coupling=coupling,
        dk=dk,
        k_window=(k_lo, k_hi),
        config=config,
    )


def grid_for_run(
    config: EmitterConfig,
    t_max: float,
    n_min: int = DEFAULT_N_MODES,
    window: tuple[float, float] = DEFAULT_WINDOW,
    margin: float = 1.25,
) -> WaveguideGrid:
    """Smallest grid (at least ``n_min`` modes) free of revivals up to ``t_max``.

    A uniform mode ladder with spacing ``dk`` re-emits the radiated field
    after ``2 pi/(v dk)``; the longest retarded path adds ``(M-1) tau``.
    """
    width = (window[1] - window[0]) / config.d
    horizon = margin * (t_max + (config.M - 1) * config.tau)
    half = max(n_min // 2, math.ceil(width * config.v * horizon / (2 * math.pi)))
    return make_grid(config, 2 * half, window)


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    dt: float

    def __post_init__(self):
        if not (self.t_max > 0 and self.dt > 0):
            raise ConfigError(f"t_max and dt must be positive: {self}")

    @classmethod
    def from_samples(cls, t_max: float, samples: int = 500) -> "TimeGrid":
        return cls(t_max=float(t_max), dt=float(t_max) / samples)

    @property
    def samples(self) -> int:
        return int(round(self.t_max / self.dt)) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.samples) * self.dt

    def aligned(self, tau: float, min_per_delay: int = 20) -> "TimeGrid":
        """Copy whose step divides ``tau`` exactly (step only ever shrinks)."""
        q = max(min_per_delay, math.ceil(tau / self.dt - 1e-9))
        dt = tau / q
        n = math.ceil(self.t_max / dt - 1e-9)
        return TimeGrid(t_max=n * dt, dt=dt)


# -- structured configuration file -------------------------------------------

_SCHEMA = {
    "emitter": {"M": int, "G": float, "d": float, "v": float, "Omega": str},
    "grid": {"n_modes": int, "k_lo": float, "k_hi": float, "auto_extend": str},
    "time": {"t_max": str, "samples": int},
    "scale": {"omega_ref": float, "gamma": float},
}

_DEFAULTS = {
    "emitter": {"M": "2", "G": "0.1", "d": "1.0", "v": "1.0", "Omega": "opt"},
    "grid": {
        "n_modes": str(DEFAULT_N_MODES),
        "k_lo": repr(DEFAULT_WINDOW[0]),
        "k_hi": repr(DEFAULT_WINDOW[1]),
        "auto_extend": "yes",
    },
    "time": {"t_max": "auto", "samples": "500"},
    "scale": {"omega_ref": "1e6", "gamma": repr(GAMMA_KITTEL)},
}


@dataclass(frozen=True)
class RunSettings:
    """Everything read from a configuration file, before Omega is resolved.

    ``Omega`` is ``None`` when the file asks for the optimal working point;
    ``t_max`` is ``None`` for the default ``5/R(Omega_opt)`` window.
    """

    M: int = 2
    G: float = 0.1
    d: float = 1.0
    v: float = 1.0
    Omega: float | None = None
    n_modes: int = DEFAULT_N_MODES
    window: tuple[float, float] = DEFAULT_WINDOW
    auto_extend: bool = True
    t_max: float | None = None
    samples: int = 500
    scale: PhysicalScale = PhysicalScale()

    def as_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        return out


def load_settings(path: str | os.PathLike | None = None, environ=None) -> RunSettings:
    """Read an INI-style configuration file and ``WQED_<SECTION>_<KEY>`` overrides.

    Missing keys take the documented defaults; unknown sections or keys
    raise :class:`ConfigError`.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_dict(_DEFAULTS)
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        user = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        user.optionxform = str
        try:
            user.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        for section in user.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in user[section].items():
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                parser[section][key] = value

    environ = os.environ if environ is None else environ
    for section, keys in _SCHEMA.items():
        for key in keys:
            env_key = f"{ENV_PREFIX}{section.upper()}_{key.upper()}"
            if env_key in environ:
                parser[section][key] = environ[env_key]

    try:
        em, gr, tm, sc = (parser[s] for s in ("emitter", "grid", "time", "scale"))
        omega = em["Omega"].strip().lower()
        t_max = tm["t_max"].strip().lower()
        settings = RunSettings(
            M=em.getint("M"),
            G=em.getfloat("G"),
            d=em.getfloat("d"),
            v=em.getfloat("v"),
            Omega=None if omega in ("opt", "auto", "") else float(omega),
            n_modes=gr.getint("n_modes"),
            window=(gr.getfloat("k_lo"), gr.getfloat("k_hi")),
            auto_extend=gr.getboolean("auto_extend"),
            t_max=None if t_max in ("auto", "") else float(t_max),
            samples=tm.getint("samples"),
            scale=PhysicalScale(sc.getfloat("omega_ref"), sc.getfloat("gamma")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    # validate eagerly so a bad file fails before any computation
    EmitterConfig(M=settings.M, G=settings.G, d=settings.d, v=settings.v,
                  Omega=settings.Omega or 2 * math.pi * settings.v / settings.d)
    if settings.samples < 2:
        raise ConfigError("samples must be at least 2")
    if settings.t_max is not None and settings.t_max <= 0:
        raise ConfigError("t_max must be positive")
    return settings
