"""Markovian decay rate, Lamb shift and the optimal working point of a giant emitter."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import ConfigError, EmitterConfig, NumericalError

_SINGULAR = 1e-8
_INV_PHI = (math.sqrt(5) - 1) / 2


def _phases(config: EmitterConfig, Omega) -> np.ndarray:
    Omega = np.asarray(Omega, dtype=float)
    return Omega * (config.d / config.v)


def _split(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Veltkamp split: hi carries 26 significant bits, so M*hi is exact for M < 2**27
    c = 134217729.0 * x
    hi = c - (c - x)
    return hi, x - hi


def _sin_half_multiple(M: int, phi: np.ndarray) -> np.ndarray:
    """sin(M phi / 2) without the rounding error of forming M*phi."""
    hi, lo = _split(phi)
    a, b = 0.5 * M * hi, 0.5 * M * lo
    return np.sin(a) * np.cos(b) + np.cos(a) * np.sin(b)


def _weighted_sum(M: int, phi: np.ndarray, weight, trig) -> np.ndarray:
    # sum over n, l of f(|n-l|) == sum over m of (M-m) * (2 - [m == 0]) * f(m)
    m = np.arange(1, M)
    return (trig(np.multiply.outer(phi, m)) * (weight(m) * (M - m))).sum(axis=-1)


def decay_rate(config: EmitterConfig, Omega=None):
    """Markovian decay rate ``R(Omega)`` of the giant emitter.

    Uses the Dirichlet closed form ``(2 g^2/v) sin^2(M phi/2) / sin^2(phi/2)``;
    within 1e-8 of the removable singularity at ``phi = 2 pi k`` the double
    sum is evaluated directly.
    """
    Omega = config.Omega if Omega is None else Omega
    phi = _phases(config, Omega)
    M, pref = config.M, 2 * config.g**2 / config.v
    s_half = np.sin(0.5 * phi)
    near = np.abs(s_half) < _SINGULAR
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = (_sin_half_multiple(M, phi) / s_half) ** 2
    if np.any(near):
        direct = M + 2 * _weighted_sum(M, phi, np.ones_like, np.cos)
        kernel = np.where(near, direct, kernel)
    out = pref * kernel
    return float(out) if np.ndim(out) == 0 else out


def lamb_shift(config: EmitterConfig, Omega=None):
    """Lamb shift ``L = (g^2/v) sum_{n,l} sin(|n-l| phi)``."""
    Omega = config.Omega if Omega is None else Omega
    phi = _phases(config, Omega)
    out = (2 * config.g**2 / config.v) * _weighted_sum(config.M, phi, np.ones_like, np.sin)
    return float(out) if np.ndim(out) == 0 else out


def decay_slope(config: EmitterConfig, Omega=None):
    """Analytic ``dR/dOmega = -(2 g^2 d/v^2) sum_{n,l} |n-l| sin(|n-l| phi)``."""
    Omega = config.Omega if Omega is None else Omega
    phi = _phases(config, Omega)
    pref = -4 * config.g**2 * config.d / config.v**2
    out = pref * _weighted_sum(config.M, phi, lambda m: m, np.sin)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    omega: np.ndarray
    phi: np.ndarray
    R: np.ndarray
    L: np.ndarray
    dR_dOmega: np.ndarray
    config: EmitterConfig

    def __len__(self) -> int:
        return self.omega.size

    def rows(self):
        return zip(self.omega, self.phi, self.R, self.L, self.dR_dOmega)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["omega", "phi", "R", "L", "dRdOmega"])
            for row in self.rows():
                writer.writerow([repr(float(x)) for x in row])
        return path


def sweep(
    config: EmitterConfig,
    Omega_range: tuple[float, float] | None = None,
    n_points: int = 2001,
) -> SpectrumTable:
    """Sample R, L and dR/dOmega on an even frequency grid.

    The default range is the principal window ``pi < phi < 3 pi``.
    """
    if Omega_range is None:
        Omega_range = (math.pi * config.v / config.d, 3 * math.pi * config.v / config.d)
    lo, hi = (float(x) for x in Omega_range)
    if not (n_points >= 2 and 0 < lo < hi):
        raise ConfigError(f"empty-range: Omega_range={Omega_range!r}, n_points={n_points}")
    omega = np.linspace(lo, hi, int(n_points))
    return SpectrumTable(
        omega=omega,
        phi=_phases(config, omega),
        R=decay_rate(config, omega),
        L=lamb_shift(config, omega),
        dR_dOmega=decay_slope(config, omega),
        config=config,
    )


@dataclass(frozen=True)
class OptimalPoint:
    Omega_opt: float
    phi_opt: float
    slope_max: float
    branch: str

    @property
    def phi_over_pi(self) -> float:
        return self.phi_opt / math.pi


def golden_section_max(f, a: float, b: float, tol: float = 1e-10) -> float:
    """Maximiser of a unimodal ``f`` on ``[a, b]`` to bracket width ``tol``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def find_optimal(config: EmitterConfig, branch: str = "right", n_scan: int = 4096) -> OptimalPoint:
    """Working point maximising ``|dR/dOmega|`` inside the principal window.

    The right branch searches ``2 pi < phi < 2 pi + 2 pi/M``, the left branch
    its mirror image.  A dense scan picks the global maximum among the
    many side lobes; golden-section search then refines it.  Because the
    maximum is flat, ``phi_opt`` is reliable to about 1e-8 while
    ``slope_max`` is reliable to machine precision.
    """
    if config.M < 2:
        raise NumericalError("degenerate-spectrum: R does not depend on Omega for M = 1")
    if branch not in ("right", "left"):
        raise ValueError(f"branch must be 'right' or 'left', got {branch!r}")
    n_scan = max(int(n_scan), 2048)
    width = 2 * math.pi / config.M
    lo = 2 * math.pi if branch == "right" else 2 * math.pi - width
    phi = np.linspace(lo, lo + width, n_scan + 2)[1:-1]
    scale = config.v / config.d
    slopes = np.abs(decay_slope(config, phi * scale))
    i = int(np.argmax(slopes))
    a = phi[max(i - 1, 0)]
    b = phi[min(i + 1, phi.size - 1)]
    best = golden_section_max(lambda p: abs(decay_slope(config, p * scale)), a, b)
    return OptimalPoint(
        Omega_opt=float(best * scale),
        phi_opt=float(best),
        slope_max=abs(decay_slope(config, best * scale)),
        branch=branch,
    )


def optimal_config(config: EmitterConfig, branch: str = "right") -> EmitterConfig:
    """Copy of ``config`` moved to its optimal working frequency."""
    return config.with_omega(find_optimal(config, branch).Omega_opt)


@dataclass(frozen=True, eq=False)
class ScalingFit:
    """Least-squares fits of the optimal point against M.

    ``c`` fits ``phi_opt/pi = 2 + c/M``; ``slope_per_M`` and ``intercept``
    fit ``slope_max = slope_per_M * M + intercept``.
    """

    M: np.ndarray
    phi_over_pi: np.ndarray
    slope_max: np.ndarray
    c: float
    phi_residuals: np.ndarray
    slope_per_M: float
    intercept: float
    slope_residuals: np.ndarray
    r_squared: float


def fit_optimal_scaling(
    M_list: Iterable[int], G: float = 0.1, d: float = 1.0, v: float = 1.0
) -> ScalingFit:
    Ms = np.array(sorted({int(m) for m in M_list}))
    if Ms.size < 3 or Ms.min() < 2:
        raise ConfigError("insufficient-points: need at least 3 distinct M values, all >= 2")
    points = [find_optimal(EmitterConfig(M=int(m), G=G, d=d, v=v)) for m in Ms]
    phi_over_pi = np.array([p.phi_over_pi for p in points])
    slope_max = np.array([p.slope_max for p in points])

    x = (1.0 / Ms)[:, None]
    (c,), *_ = np.linalg.lstsq(x, phi_over_pi - 2, rcond=None)
    A = np.column_stack([Ms, np.ones(Ms.size)])
    (a, b), *_ = np.linalg.lstsq(A, slope_max, rcond=None)
    resid = slope_max - (a * Ms + b)
    ss_tot = ((slope_max - slope_max.mean()) ** 2).sum()
    return ScalingFit(
        M=Ms,
        phi_over_pi=phi_over_pi,
        slope_max=slope_max,
        c=float(c),
        phi_residuals=phi_over_pi - 2 - c / Ms,
        slope_per_M=float(a),
        intercept=float(b),
        slope_residuals=resid,
        r_squared=float(1 - (resid**2).sum() / ss_tot),
    )
