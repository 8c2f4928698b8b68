"""Batch front-end: ``giantmag {spectrum,dynamics,cfi,sensitivity,compare-small}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    ConfigError,
    EmitterConfig,
    NumericalError,
    RunSettings,
    TimeGrid,
    grid_for_run,
    load_settings,
    make_grid,
)
from .dynamics import dde_evolve, default_time_grid, exact_evolve, markov_population
from .ensemble import exact_evolve_small
from .metrology import (
    DEFAULT_DELTA,
    cfi_map,
    common_time_grid,
    compare_small,
    sensitivity_vs_M,
    write_sensitivity_csv,
)
from .spectral import find_optimal, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def parse_m_list(text: str) -> list[int]:
    """``"10..100:10"``, ``"2,4,8"`` or ``"5"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            span, _, step = part.partition(":")
            a, b = span.split("..")
            out.extend(range(int(a), int(b) + 1, int(step or 1)))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError(f"invalid M list {text!r}")
    return out


def _m_values(args, settings: RunSettings) -> list[int]:
    chunks = getattr(args, "M", None)
    if not chunks:
        return [settings.M]
    seen = []
    for chunk in chunks:
        for m in chunk:
            if m not in seen:
                seen.append(m)
    return seen


def _config(settings: RunSettings, M: int, G: float | None = None, Omega: float | None = None) -> EmitterConfig:
    base = EmitterConfig(M=M, G=settings.G if G is None else G, d=settings.d, v=settings.v,
                         Omega=2 * math.pi * settings.v / settings.d)
    Omega = Omega if Omega is not None else settings.Omega
    if Omega is None:
        Omega = find_optimal(base).Omega_opt if M >= 2 else base.Omega
    return base.with_omega(Omega)


def _time_grid(settings: RunSettings, cfg: EmitterConfig) -> TimeGrid:
    if settings.t_max is not None:
        return TimeGrid.from_samples(settings.t_max, settings.samples)
    return default_time_grid(cfg, settings.samples)


def _grid(settings: RunSettings, cfg: EmitterConfig, t_max: float):
    if settings.auto_extend:
        return grid_for_run(cfg, t_max, n_min=settings.n_modes, window=settings.window)
    return make_grid(cfg, settings.n_modes, settings.window)


# -- subcommands ---------------------------------------------------------------


def cmd_spectrum(args, settings, out: Path) -> tuple[list[Path], dict]:
    if not args.phi_min > 0:
        raise ConfigError(f"--phi-min must be positive, got {args.phi_min}")
    if not args.phi_max > args.phi_min:
        raise ConfigError(f"--phi-max ({args.phi_max}) must exceed --phi-min ({args.phi_min})")
    if args.points < 2:
        raise ConfigError(f"--points must be at least 2, got {args.points}")
    if args.dry_run:
        return [], {}
    files = []
    for M in _m_values(args, settings):
        cfg = _config(settings, M, Omega=2 * math.pi * settings.v / settings.d)
        scale = math.pi * cfg.v / cfg.d
        table = sweep(cfg, (args.phi_min * scale, args.phi_max * scale), args.points)
        files.append(table.to_csv(out / f"spectrum_M{M}.csv"))
    return files, {"phi_range_over_pi": [args.phi_min, args.phi_max], "points": args.points}


def _run_engine(engine, cfg, settings, tg):
    if engine == "markov":
        return markov_population(cfg, tg)
    if engine == "dde":
        return dde_evolve(cfg, tg)
    grid = _grid(settings, cfg, tg.t_max)
    if engine == "exact":
        return exact_evolve(cfg, grid, tg, store_modes=True)
    return exact_evolve_small(cfg, grid, tg, store_modes=True)


def cmd_dynamics(args, settings, out: Path):
    Ms = _m_values(args, settings)
    if args.dry_run:
        return [], {}
    files, meta = [], {"engine": args.engine, "runs": []}
    for M in Ms:
        cfg = _config(settings, M, Omega=args.omega)
        tg = _time_grid(settings, cfg)
        if args.engine != "all":
            traj = _run_engine(args.engine, cfg, settings, tg)
            files.append(traj.to_csv(out / f"dynamics_M{M}_{args.engine}.csv"))
            meta["runs"].append({"M": M, "Omega": cfg.Omega})
            continue
        dde = dde_evolve(cfg, tg)
        stride = max(1, (dde.times.size - 1) // (settings.samples - 1))
        times = dde.times[::stride]
        grid = _grid(settings, cfg, float(times[-1]))
        cols = {
            "Pe_markov": markov_population(cfg, times).population,
            "Pe_dde": dde.population[::stride],
            "Pe_exact": exact_evolve(cfg, grid, times).population,
        }
        path = out / f"dynamics_M{M}_all.csv"
        with path.open("w") as fh:
            fh.write("t," + ",".join(cols) + "\n")
            for i, t in enumerate(times):
                fh.write(",".join([repr(float(t))] + [repr(float(c[i])) for c in cols.values()]) + "\n")
        files.append(path)
        meta["runs"].append({"M": M, "Omega": cfg.Omega, "n_modes": grid.n_modes, "dde_dt": float(dde.times[1])})
    return files, meta


def _map_time_grid(settings, Ms, G=None):
    if settings.t_max is not None:
        return TimeGrid.from_samples(settings.t_max, settings.samples)
    return common_time_grid(_config(settings, 1, G=G), Ms, settings.samples)


def cmd_cfi(args, settings, out: Path):
    Ms = _m_values(args, settings)
    if args.dry_run:
        return [], {}
    tg = _map_time_grid(settings, Ms)
    result = cfi_map(_config(settings, 1), Ms, tg, settings.scale, args.delta,
                     jobs=args.jobs, n_min=settings.n_modes, window=settings.window)
    files = [result.to_csv(out / "cfi_map.csv"), result.ridge_to_csv(out / "cfi_ridge.csv")]
    return files, {"M": Ms, "t_max": tg.t_max, "samples": tg.samples, "delta_Omega": args.delta}


def cmd_sensitivity(args, settings, out: Path):
    Ms = _m_values(args, settings)
    Gs = getattr(args, "G", None) or [settings.G]
    if args.dry_run:
        return [], {}
    rows = []
    for G in Gs:
        tg = _map_time_grid(settings, Ms, G) if settings.t_max is not None else None
        rows += sensitivity_vs_M(_config(settings, 1, G=G), Ms, [G], tg, settings.scale, args.delta,
                                 engine=args.engine, jobs=args.jobs, n_min=settings.n_modes)
    files = [write_sensitivity_csv(rows, out / "sensitivity.csv")]
    return files, {"M": Ms, "G": Gs, "engine": args.engine, "delta_Omega": args.delta}


def cmd_compare_small(args, settings, out: Path):
    Ms = _m_values(args, settings)
    if args.dry_run:
        return [], {}
    rows, ratios = [], {}
    for M in Ms:
        cfg = _config(settings, M)
        tg = _time_grid(settings, cfg)
        cmp_ = compare_small(cfg, tg, settings.scale, args.delta, n_min=settings.n_modes)
        rows += cmp_.rows()
        ratios[M] = cmp_.ratio
        print(f"M={M}: giant/small CFI ratio = {cmp_.ratio:.4g}")
    files = [write_sensitivity_csv(rows, out / "compare_small.csv", with_setup=True)]
    return files, {"M": Ms, "cfi_ratio": ratios, "delta_Omega": args.delta}


COMMANDS = {
    "spectrum": cmd_spectrum,
    "dynamics": cmd_dynamics,
    "cfi": cmd_cfi,
    "sensitivity": cmd_sensitivity,
    "compare-small": cmd_compare_small,
}


def _global_flags() -> argparse.ArgumentParser:
    # a fresh parent per parser: argparse shares action objects with children
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="INI file with [emitter] [grid] [time] [scale]")
    common.add_argument("--out", type=Path, help="output directory (default: current directory)")
    common.add_argument("--jobs", type=int, help="worker processes for map cells")
    common.add_argument("--seed", type=int, help="reserved; all computation is deterministic")
    common.add_argument("--dry-run", action="store_true", help="validate and exit")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="giantmag", description=__doc__.splitlines()[0], parents=[_global_flags()]
    )
    parser.set_defaults(config=None, out=Path("."), jobs=1, seed=None, dry_run=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def subparser(name, help_):
        p = sub.add_parser(name, help=help_, parents=[_global_flags()])
        p.add_argument("--M", type=parse_m_list, action="append", help="M value(s); a..b:step allowed")
        return p

    p = subparser("spectrum", "decay rate, Lamb shift and slope over a phase window")
    p.add_argument("--phi-min", type=float, default=1.0, help="window start in units of pi")
    p.add_argument("--phi-max", type=float, default=3.0, help="window end in units of pi")
    p.add_argument("--points", type=int, default=2001)

    p = subparser("dynamics", "excited-state population trajectories")
    p.add_argument("--engine", choices=["markov", "dde", "exact", "small", "all"], default="all")
    p.add_argument("--omega", type=float, default=None, help="emitter frequency (default: optimum)")

    for name, help_ in (("cfi", "CFI-per-time map over (M, t)"),
                        ("sensitivity", "time-optimal sensitivity per (M, G)"),
                        ("compare-small", "giant emitter versus small-emitter array")):
        p = subparser(name, help_)
        p.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="finite-difference step in Omega")
        if name == "sensitivity":
            p.add_argument("--G", type=float, action="append", help="total coupling (repeatable)")
            p.add_argument("--engine", choices=["exact", "small"], default="exact")
    return parser


def _manifest(args, settings, files, meta, started) -> dict:
    return {
        "tool": "giantmag",
        "version": __version__,
        "command": args.command,
        "argv": sys.argv[1:],
        "config_file": str(args.config) if args.config else None,
        "settings": settings.as_dict(),
        "scale": asdict(settings.scale),
        "grid": {"n_modes_min": settings.n_modes, "window_kd": list(settings.window),
                 "auto_extend": settings.auto_extend},
        "dry_run": bool(args.dry_run),
        "outputs": [p.name for p in files],
        "details": meta,
        "wall_clock_s": round(time.perf_counter() - started, 3),
        "environment": {"python": platform.python_version(), "numpy": np.__version__},
    }


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        settings = load_settings(args.config)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        files, meta = COMMANDS[args.command](args, settings, out)
    except ConfigError as exc:
        print(f"giantmag: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"giantmag: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = _manifest(args, settings, files, meta, started)
    name = f"manifest_{args.command.replace('-', '_')}.json"
    (out / name).write_text(json.dumps(manifest, indent=2, default=float) + "\n")
    if args.dry_run:
        print(json.dumps(settings.as_dict(), indent=2, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
