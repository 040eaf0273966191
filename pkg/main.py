"""
hspinor: closed-form spinor waves on the exponential barrier, as data files.

    hspinor eval       profile of one solution on a z grid
    hspinor reflection R(eps) scan of the scalar barrier
    hspinor table7     asymptotic classification of the cylinder-function rows
    hspinor flatlimit  local wavenumber against the flat value for growing R
    hspinor verify     residual / identity / oracle suites, exit 1 on failure

Data goes to --out (stdout by default); logs and summaries go to stderr.
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml
from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

from solvers import bessel_repr, dirac, scalar, suites, weyl
from solvers.base_solver import (
    EQUATIONS,
    MIN_POINTS,
    REPRESENTATIONS,
    SOLUTION_TYPES,
    BaseSolver,
    SolutionSelector,
    WaveParams,
    make_grid,
)
from tools import formats
from tools import special_functions as sf
from tools.errors import ConfigError, HSpinorError, VerificationFailure, exit_code_for
from tools import log_context
from tools.log_context import Timer, bind, new_run_id, slog
from tools.result_cache import cached

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent
DEFAULT_CONFIG = BASE_DIR / "config" / "config.yaml"
COMMANDS: tuple[str, ...] = ("eval", "reflection", "table7", "flatlimit", "verify")

_console = Console(stderr=True)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------
def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: Optional[str] = None) -> dict[str, Any]:
    """Built-in defaults, overlaid with ``path`` when given."""
    with DEFAULT_CONFIG.open("r", encoding="utf-8") as f:
        config = yaml.safe_load(f) or {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                extra = yaml.safe_load(f) or {}
        except OSError as exc:
            raise ConfigError("cannot read config file", parameter="config", value=path, reason=str(exc)) from None
        if not isinstance(extra, dict):
            raise ConfigError("config file must hold a mapping", parameter="config", value=path)
        config = _deep_merge(config, extra)
    return config


def parse_helicity(value: Any) -> int:
    text = str(value).strip()
    if text in ("+", "+1", "1"):
        return 1
    if text in ("-", "-1"):
        return -1
    raise ConfigError("helicity must be + or -", parameter="helicity", value=value)


def _float_list(value: Any, parameter: str) -> list[float]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError("expected a list of numbers", parameter=parameter, value=value) from None


@dataclass(frozen=True)
class RunConfig:
    """Effective parameters of one command after config, env and flags are applied."""

    command: str
    equation: str = "dirac"
    epsilon: float = 5.0
    mass: float = 3.0
    k1: float = 3.0
    k2: float = 4.0
    helicity: int = 1
    type: str = "I"
    rep: str = "kummer"
    variant: str = "F5"
    zmin: float = -6.0
    zmax: float = 2.0
    points: int = 512
    format: str = "csv"
    tol: float = 1e-8
    suite: str = "all"
    epsilons: tuple[float, ...] = (1.01, 2.0, 5.0, 100.0)
    E: float = 5.0
    M: float = 3.0
    P1: float = 0.1
    P2: float = 0.1
    radii: tuple[float, ...] = (10.0, 50.0, 250.0)
    x3_min: float = -1.0
    x3_max: float = 1.0
    x3_points: int = 41
    perturbation: float = 0.0
    out: Optional[str] = field(default=None, compare=False)
    use_cache: bool = field(default=True, compare=False)
    cache_dir: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError("unknown command", parameter="command", value=self.command)
        for name in ("epsilon", "mass", "k1", "k2", "zmin", "zmax", "tol", "E", "M", "P1", "P2"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError("parameter must be finite", parameter=name, value=getattr(self, name))
        if self.points < MIN_POINTS:
            raise ConfigError("grid needs at least 16 points", parameter="points", value=self.points)
        if not self.zmin < self.zmax:
            raise ConfigError("grid needs zmin < zmax", parameter="zmin", value=self.zmin, zmax=self.zmax)
        if not self.tol > 0:
            raise ConfigError("tolerance must be positive", parameter="tol", value=self.tol)
        if self.format not in formats.FORMATS:
            raise ConfigError("format must be csv or json", parameter="format", value=self.format)
        if self.helicity not in (1, -1):
            raise ConfigError("helicity must be + or -", parameter="helicity", value=self.helicity)
        if self.type not in SOLUTION_TYPES:
            raise ConfigError("type must be I or II", parameter="type", value=self.type)
        if self.rep not in REPRESENTATIONS:
            raise ConfigError("unknown representation", parameter="rep", value=self.rep)
        if self.equation not in EQUATIONS:
            raise ConfigError("unknown equation", parameter="equation", value=self.equation)
        if self.equation == "scalar" and self.variant not in scalar.VARIANTS:
            raise ConfigError("unknown scalar variant", parameter="variant", value=self.variant)
        if self.x3_points < 2 or not self.x3_min < self.x3_max:
            raise ConfigError("bad x3 grid", parameter="x3_min", value=self.x3_min, x3_max=self.x3_max)

    @classmethod
    def from_sources(cls, command: str, config: dict[str, Any], flags: dict[str, Any]) -> "RunConfig":
        """Flags > ``run`` section of a --config file > config sections > dataclass defaults."""
        values: dict[str, Any] = {}
        values.update(config.get("defaults", {}) or {})
        grid = config.get("grid", {}) or {}
        values.update({k: grid[k] for k in ("zmin", "zmax", "points") if k in grid})
        verify = config.get("verify", {}) or {}
        if "tolerance" in verify:
            values["tol"] = verify["tolerance"]
        if "suite" in verify:
            values["suite"] = verify["suite"]
        values.update(config.get("flatlimit", {}) or {})
        reflection = config.get("reflection", {}) or {}
        if "epsilons" in reflection:
            values["epsilons"] = reflection["epsilons"]
        cache = config.get("cache", {}) or {}
        if "enabled" in cache:
            values["use_cache"] = bool(cache["enabled"])
        if "dir" in cache:
            values["cache_dir"] = cache["dir"]
        values.update(config.get("run", {}) or {})
        env_tol = os.getenv("HSPINOR_TOL")
        if env_tol:
            values["tol"] = env_tol
        values.update({k: v for k, v in flags.items() if v is not None})
        values.pop("command", None)
        unknown = set(values) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError("unknown configuration keys", parameter=sorted(unknown)[0], keys=sorted(unknown))
        try:
            if "helicity" in values:
                values["helicity"] = parse_helicity(values["helicity"])
            for name in ("epsilon", "mass", "k1", "k2", "zmin", "zmax", "tol", "E", "M", "P1", "P2",
                         "x3_min", "x3_max", "perturbation"):
                if name in values:
                    values[name] = float(values[name])
            for name in ("points", "x3_points"):
                if name in values:
                    values[name] = int(values[name])
        except (TypeError, ValueError) as exc:
            raise ConfigError("invalid numeric value", parameter="config", reason=str(exc)) from None
        for name in ("epsilons", "radii"):
            if name in values:
                values[name] = tuple(_float_list(values[name], name))
        return cls(command=command, **values)

    def echo(self) -> dict[str, Any]:
        """Effective parameters for output metadata; feeding them back as ``run:`` reproduces the data."""
        out = asdict(self)
        for name in ("command", "out", "use_cache", "cache_dir"):
            out.pop(name)
        out["helicity"] = "+" if self.helicity > 0 else "-"
        out["epsilons"] = list(self.epsilons)
        out["radii"] = list(self.radii)
        return out

    def wave(self, helicity: Optional[int] = None) -> WaveParams:
        return WaveParams(self.epsilon, self.k1, self.k2, self.mass, self.helicity if helicity is None else helicity)


def configure_logging(config: dict[str, Any], verbose: bool = False) -> None:
    level_name = os.getenv("HSPINOR_LOG_LEVEL") or (config.get("logging", {}) or {}).get("level", "WARNING")
    log_context.configure(logging.DEBUG if verbose else str(level_name))


def _metadata(cfg: RunConfig, **extra: Any) -> dict[str, Any]:
    system = {"name": "hspinor", "version": _version()}
    return {"command": cfg.command, "tool": system, "config": cfg.echo(), **extra}


def _version() -> str:
    try:
        from importlib.metadata import version

        return version("hspinor")
    except Exception:
        return "0.1.0"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def make_eval_solver(cfg: RunConfig) -> BaseSolver:
    SolutionSelector(equation=cfg.equation, type=cfg.type, representation=cfg.rep)
    if cfg.equation == "scalar":
        return scalar.make_solver(scalar.ScalarParams(cfg.epsilon, cfg.k1, cfg.k2), cfg.variant, cfg.helicity)
    if cfg.rep != "kummer":
        mass = cfg.mass if cfg.equation == "dirac" else 0.0
        return bessel_repr.BesselSolver(
            WaveParams(cfg.epsilon, cfg.k1, cfg.k2, mass, cfg.helicity), cfg.rep, cfg.type
        )
    if cfg.equation == "weyl":
        return weyl.WeylSolver(weyl.WeylParams(cfg.epsilon, cfg.k1, cfg.k2, cfg.helicity), cfg.type)
    return dirac.make_solver(cfg.wave(), cfg.type)


def cmd_eval(cfg: RunConfig) -> str:
    solver = make_eval_solver(cfg)
    profile = solver.profile(make_grid(cfg.zmin, cfg.zmax, cfg.points))
    columns, rows = formats.profile_rows(profile)
    meta = _metadata(cfg, params=profile.meta, labels=list(profile.labels))
    return formats.render(cfg.format, columns, rows, meta)


def cmd_reflection(cfg: RunConfig) -> str:
    columns = ["epsilon", "R", "abs_R_minus_1"]
    rows = []
    for eps in cfg.epsilons:
        result = cached(
            "reflection",
            {"epsilon": eps},
            lambda eps=eps: scalar.reflection_coefficient(eps).as_dict(),
            enabled=cfg.use_cache,
            directory=cfg.cache_dir,
        )
        rows.append({"epsilon": eps, "R": result["R"], "abs_R_minus_1": result["deviation"]})
    worst = max(r["abs_R_minus_1"] for r in rows)
    _summary("reflection", [("points", len(rows)), ("max |R - 1|", f"{worst:.3e}")])
    return formats.render(cfg.format, columns, rows, _metadata(cfg, max_deviation=worst))


def cmd_table7(cfg: RunConfig) -> str:
    params = cfg.wave()
    table = bessel_repr.asymptotic_table(params)
    columns = list(table.rows[0].as_dict()) if table.rows else []
    z0 = params.turning_point()
    flip = bessel_repr.helicity_flip_check(params, np.linspace(z0 - 3.0, z0 + 1.0, 16))
    view = Table(title=f"asymptotic classification (helicity {table.helicity:+d})")
    for name in ("rep", "type", "component", "small", "large", "matches"):
        view.add_column(name)
    for row in table.rows:
        view.add_row(row.rep, row.type, row.component, row.small_label, row.large_label, "yes" if row.matches else "NO")
    _console.print(view)
    meta = _metadata(
        cfg, helicity_tabulated=table.helicity, z_minus=table.z_minus, z_plus=table.z_plus, helicity_flip_residual=flip
    )
    text = formats.render(cfg.format, columns, table.as_dicts(), meta)
    if not table.all_match:
        formats.write_output(text, cfg.out)
        mismatched = [f"{r.rep}:{r.type}:{r.component}" for r in table.rows if not r.matches]
        raise VerificationFailure("classification differs from the expected table", rows=mismatched)
    return text


def cmd_flatlimit(cfg: RunConfig) -> str:
    x3 = np.linspace(cfg.x3_min, cfg.x3_max, cfg.x3_points)
    table = dirac.flat_limit_study(cfg.E, cfg.M, cfg.P1, cfg.P2, cfg.radii, x3, helicity=cfg.helicity)
    for t in ("I", "II"):
        if not table.monotone(t):
            slog.warning("cli.flatlimit.not_monotone", type=t, errors=table.errors(t))
    rows = table.as_dicts()
    columns = list(rows[0]) if rows else []
    _summary("flatlimit", [(f"type {t} errors", ", ".join(f"{e:.2e}" for e in table.errors(t))) for t in ("I", "II")])
    meta = _metadata(
        cfg,
        p0=table.p0,
        k3=table.k3,
        reference="k3",
        secondary_reference="p0",
        note="monotone decrease is checked on error (vs signed k3); error_vs_p0 compares against signed p0 and is informational",
    )
    return formats.render(cfg.format, columns, rows, meta)


def cmd_verify(cfg: RunConfig) -> str:
    ctx = suites.VerifyContext(
        epsilon=cfg.epsilon,
        m=cfg.mass,
        k1=cfg.k1,
        k2=cfg.k2,
        points=cfg.points,
        tol=cfg.tol,
        perturbation=cfg.perturbation,
        use_cache=cfg.use_cache,
        cache_dir=cfg.cache_dir,
    )
    results = suites.run_suite(cfg.suite, ctx)
    columns = ["name", "value", "threshold", "passed", "error"]
    rows = [r.as_dict() for r in results]
    view = Table(title=f"verify {cfg.suite}")
    for name in ("check", "value", "threshold", "status"):
        view.add_column(name)
    for r in results:
        view.add_row(r.name, f"{r.value:.3e}", f"{r.threshold:.1e}", "ok" if r.passed else "FAIL")
    _console.print(view)
    failed = [r.name for r in results if not r.passed]
    text = formats.render(cfg.format, columns, rows, _metadata(cfg, checks=len(results), failed=failed))
    if failed:
        formats.write_output(text, cfg.out)
        raise VerificationFailure("verification failed", failed=failed)
    return text


HANDLERS = {
    "eval": cmd_eval,
    "reflection": cmd_reflection,
    "table7": cmd_table7,
    "flatlimit": cmd_flatlimit,
    "verify": cmd_verify,
}


def _summary(title: str, items: Sequence[tuple[str, Any]]) -> None:
    view = Table(title=title, show_header=False)
    view.add_column("key")
    view.add_column("value")
    for key, value in items:
        view.add_row(str(key), str(value))
    _console.print(view)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------
def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML file overlaid on the built-in defaults")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--mass", type=float)
    parser.add_argument("--k1", type=float)
    parser.add_argument("--k2", type=float)
    parser.add_argument("--helicity", help="+ or -")
    parser.add_argument("--type", choices=SOLUTION_TYPES)
    parser.add_argument("--zmin", type=float)
    parser.add_argument("--zmax", type=float)
    parser.add_argument("--points", type=int)
    parser.add_argument("--format", choices=formats.FORMATS)
    parser.add_argument("--out", help="output path (stdout when omitted)")
    parser.add_argument("--tol", type=float, help="verification tolerance (beats HSPINOR_TOL)")
    parser.add_argument("--no-cache", dest="no_cache", action="store_true")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logs on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hspinor", description="Spinor waves on the exponential barrier.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="profile of one solution")
    _common(p_eval)
    p_eval.add_argument("--equation", choices=EQUATIONS)
    p_eval.add_argument("--rep", choices=REPRESENTATIONS)
    p_eval.add_argument("--variant", choices=scalar.VARIANTS, help="scalar solution variant")

    p_refl = sub.add_parser("reflection", help="reflection coefficient scan")
    _common(p_refl)
    p_refl.add_argument("--epsilons", help="comma-separated energies, all > 1")
    p_refl.add_argument("--scan", nargs=3, metavar=("EMIN", "EMAX", "N"), help="log-spaced energies")

    p_table = sub.add_parser("table7", help="asymptotic classification table")
    _common(p_table)

    p_flat = sub.add_parser("flatlimit", help="flat-limit convergence study")
    _common(p_flat)
    for name in ("E", "M", "P1", "P2"):
        p_flat.add_argument(f"--{name}", dest=name, type=float)
    p_flat.add_argument("--radii", help="comma-separated increasing radii")
    p_flat.add_argument("--x3-points", dest="x3_points", type=int)

    p_verify = sub.add_parser("verify", help="run verification suites")
    _common(p_verify)
    p_verify.add_argument("suite", nargs="?", choices=("all",) + suites.SUITES)
    p_verify.add_argument("--list", action="store_true", help="print the registered checks and exit")
    p_verify.add_argument("--perturb-factor", dest="perturbation", type=float, help=argparse.SUPPRESS)
    return parser


_NON_CONFIG = {"config", "no_cache", "verbose", "list", "scan"}


def _flags(args: argparse.Namespace) -> dict[str, Any]:
    flags = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    if getattr(args, "no_cache", False):
        flags["use_cache"] = False
    scan = getattr(args, "scan", None)
    if scan:
        try:
            lo, hi, n = float(scan[0]), float(scan[1]), int(scan[2])
        except ValueError:
            raise ConfigError("scan needs EMIN EMAX N", parameter="scan", value=scan) from None
        if n < 1 or not lo > 0 or not hi > 0:
            raise ConfigError("scan needs positive bounds and N >= 1", parameter="scan", value=scan)
        flags["epsilons"] = tuple(float(e) for e in np.geomspace(lo, hi, n))
    return flags


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    with bind(run_id=new_run_id(), command=args.command):
        return _dispatch(args)


def _dispatch(args: argparse.Namespace) -> int:
    timer = Timer()
    try:
        config = load_config(args.config)
        configure_logging(config, args.verbose)
        sf.configure(**(config.get("kernel", {}) or {}))
        if args.command == "verify" and args.list:
            for name in suites.AVAILABLE_CHECKS:
                sys.stdout.write(name + "\n")
            return 0
        cfg = RunConfig.from_sources(args.command, config, _flags(args))
        slog.info("cli.command.start", **{k: v for k, v in cfg.echo().items() if k in ("epsilon", "k1", "k2")})
        with timer:
            text = HANDLERS[args.command](cfg)
        formats.write_output(text, cfg.out)
        slog.info("cli.command.ok", latency_ms=timer.elapsed_ms)
        return 0
    except HSpinorError as exc:
        timer.stop()
        code = exit_code_for(exc)
        slog.error("cli.command.error", error=str(exc), exit_code=code, latency_ms=timer.elapsed_ms, context=exc.context)
        _console.print(f"[bold red]error[/bold red] {exc}", markup=True, highlight=False)
        return code


if __name__ == "__main__":
    sys.exit(main())
