import argparse
import json
import logging
import re
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from greenfield.arith.homopoly import HomoForm, PolyMap, ProjPoint
from greenfield.arith.macaulay import RConvention
from greenfield.arith.pf_field import ARCHIMEDEAN, Place, format_rational, parse_rational
from greenfield.config import config
from greenfield.dynamics.basis import special_basis
from greenfield.dynamics.dynsys import DynSystem, escape_rate, julia_membership
from greenfield.dynamics.green import fekete_search, green_value
from greenfield.dynamics.heights import canonical_height, weil_height
from greenfield.dynamics.lattes import LattesSystem, lattes_orbit
from greenfield.errors import ConfigError, DimensionMismatch, DomainError, GreenfieldError
from greenfield.experiments.adelic import adelic_report
from greenfield.experiments.lehmer import lehmer_scan
from greenfield.experiments.multiples import multiples_search, required_bound
from greenfield.experiments.trend import transfin_trend
from greenfield.reports.selftest import run_selftest
from greenfield.reports.tables import dump_json, place_stats, to_csv, with_schema

_TOML_POSITION = re.compile(r"line (\d+), column (\d+)")

KNOWN_KEYS = {"N", "d", "forms", "hypersurface", "r_convention", "tol", "seed"}


@dataclass(frozen=True)
class SystemConfig:
    N: int
    d: int
    forms: list[str]
    hypersurface: str | None = None
    r_convention: str = RConvention.INVARIANT.value
    tol: float = 1e-9
    seed: int = 7
    source: str = field(default="", repr=False, compare=False)

    def build(self) -> DynSystem:
        forms = []
        for i, text in enumerate(self.forms):
            try:
                forms.append(HomoForm.parse(text, self.N + 1, self.d))
            except ConfigError as e:
                line, column = _locate(self.source, text, e.column)
                raise ConfigError(f"form {i}: {e.message}", line, column) from e
        try:
            fmap = PolyMap(forms)
        except (DomainError, DimensionMismatch) as e:
            raise ConfigError(str(e), *_key_position(self.source, "forms")) from e
        G = None
        if self.hypersurface is not None:
            try:
                G = HomoForm.parse(self.hypersurface, self.N + 1)
            except ConfigError as e:
                line, column = _locate(self.source, self.hypersurface, e.column)
                raise ConfigError(f"hypersurface: {e.message}", line, column) from e
        return DynSystem(fmap, G, self.r_convention)


def _locate(source: str, needle: str, offset: int | None = None) -> tuple[int, int]:
    pos = source.find(f'"{needle}"')
    pos = pos + 1 if pos >= 0 else source.find(needle)
    if pos < 0:
        return 1, 1
    line = source.count("\n", 0, pos) + 1
    column = pos - (source.rfind("\n", 0, pos) + 1) + 1
    return line, column + (offset - 1 if offset else 0)


def _key_position(source: str, key: str) -> tuple[int, int]:
    found = re.search(rf"(?m)(?:^|[\s{{,])(\"?{re.escape(key)}\"?)\s*[:=]", source)
    if not found:
        return 1, 1
    pos = found.start(1)
    return source.count("\n", 0, pos) + 1, pos - (source.rfind("\n", 0, pos) + 1) + 1


def _decode(text: str, toml: bool) -> dict:
    if toml:
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            found = _TOML_POSITION.search(str(e))
            line, column = (int(found.group(1)), int(found.group(2))) if found else (None, None)
            raise ConfigError(f"invalid TOML: {e}", line, column) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from e


def parse_system_config(text: str, toml: bool = False) -> SystemConfig:
    data = _decode(text, toml)
    if not isinstance(data, dict):
        raise ConfigError("system config must be an object", 1, 1)
    unknown = set(data) - KNOWN_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", *_key_position(text, key))
    for key in ("N", "d", "forms"):
        if key not in data:
            raise ConfigError(f"missing key {key!r}", 1, 1)

    def invalid(key: str, expected: str) -> ConfigError:
        return ConfigError(f"{key!r} must be {expected}, got {data[key]!r}", *_key_position(text, key))

    def is_int(value) -> bool:
        return isinstance(value, int) and not isinstance(value, bool)

    if not is_int(data["N"]) or data["N"] < 1:
        raise invalid("N", "an integer >= 1")
    if not is_int(data["d"]) or data["d"] < 2:
        raise invalid("d", "an integer >= 2")
    forms = data["forms"]
    if not isinstance(forms, list) or not all(isinstance(f, str) for f in forms):
        raise invalid("forms", "a list of strings")
    if len(forms) != data["N"] + 1:
        raise ConfigError(f"{len(forms)} forms for N = {data['N']}", *_key_position(text, "forms"))
    if data.get("hypersurface") is not None and not isinstance(data["hypersurface"], str):
        raise invalid("hypersurface", "a form written as a string")
    convention = data.get("r_convention", RConvention.INVARIANT.value)
    if not isinstance(convention, str):
        raise invalid("r_convention", "a string")
    if convention not in {c.value for c in RConvention}:
        raise ConfigError(f"unknown r_convention {convention!r}", *_locate(text, convention))
    tol = data.get("tol", 1e-9)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not 0 < tol < 1:
        raise invalid("tol", "a number in (0, 1)")
    seed = data.get("seed", 7)
    if not is_int(seed) or seed < 0:
        raise invalid("seed", "a nonnegative integer")
    return SystemConfig(
        N=data["N"],
        d=data["d"],
        forms=forms,
        hypersurface=data.get("hypersurface"),
        r_convention=convention,
        tol=float(tol),
        seed=seed,
        source=text,
    )


def load_system_config(path: str) -> SystemConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from e
    return parse_system_config(text, toml=path.endswith(".toml"))


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"bad integer list {text!r}") from e


def _rational_pair(text: str) -> tuple[Fraction, Fraction]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"expected two comma-separated rationals, got {text!r}")
    return parse_rational(parts[0]), parse_rational(parts[1])


def _points(text: str) -> list[ProjPoint]:
    return [ProjPoint.parse(part) for part in text.split(";") if part.strip()]


def _system(args) -> tuple[DynSystem, SystemConfig]:
    cfg = load_system_config(args.system)
    system = cfg.build()
    if args.convention:
        system.convention = RConvention(args.convention)
    return system, cfg


def _tol(args, cfg: SystemConfig | None = None) -> float:
    if args.tol is not None:
        return args.tol
    return cfg.tol if cfg else 1e-9


def _seed(args, cfg: SystemConfig | None = None) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.seed if cfg else 7


def _lattes(args) -> LattesSystem:
    if not args.curve or not args.point:
        raise ConfigError("--curve a,b and --point x0,y0 are required")
    a, b = _rational_pair(args.curve)
    x0, y0 = _rational_pair(args.point)
    return LattesSystem.from_coefficients(a, b, x0, y0)


def cmd_resultant(args) -> tuple[str, object, list]:
    system, _ = _system(args)
    return "resultant", system.resultant, []


def cmd_height(args):
    system, cfg = _system(args)
    point = ProjPoint.parse(args.point)
    hat = canonical_height(system, point, _tol(args, cfg))
    return "height", {"canonical": hat, "weil": weil_height(point)}, []


def cmd_escape(args):
    system, cfg = _system(args)
    place = Place.parse(args.place)
    point = ProjPoint.parse(args.point)
    tol = _tol(args, cfg)
    rate = escape_rate(system, place, point, tol)
    return "escape", {"rate": rate, "membership": julia_membership(system, place, point, tol)}, []


def cmd_basis(args):
    system, _ = _system(args)
    return "basis", special_basis(system, args.n), []


def cmd_green(args):
    system, cfg = _system(args)
    basis = special_basis(system, args.n)
    value = green_value(system, basis, _points(args.points), Place.parse(args.place), tol=_tol(args, cfg))
    return "green", value, []


def cmd_fekete(args):
    system, cfg = _system(args)
    basis = special_basis(system, args.n)
    result = fekete_search(system, basis, budget=args.budget, seed=_seed(args, cfg), restarts=args.restarts)
    return "fekete", result, []


def cmd_adelic_report(args):
    system, cfg = _system(args)
    report = adelic_report(system, _int_list(args.n_list), args.budget, _seed(args, cfg), _tol(args, cfg))
    payload = report.to_dict()
    payload["place_stats"] = place_stats(report.places)
    return "adelic-report", payload, report.places


def cmd_trend(args):
    system, cfg = _system(args)
    table = transfin_trend(system, _int_list(args.n_list), Place.parse(args.place), _tol(args, cfg))
    return "trend", table, table.rows


def cmd_multiples(args):
    lattes = _lattes(args)
    system = _system(args)[0] if args.system else lattes.system
    probe = special_basis(system, args.n)
    orbit = lattes_orbit(lattes, required_bound(system, args.n, probe.c))
    return "multiples", multiples_search(system, orbit, args.n), []


def cmd_lehmer_scan(args):
    table = lehmer_scan(_lattes(args), _int_list(args.depths), _tol(args))
    return "lehmer-scan", table, table.rows


def cmd_selftest(args):
    results = run_selftest()
    return "selftest", {"passed": all(r["passed"] for r in results), "checks": results}, results


COMMANDS = {
    "resultant": cmd_resultant,
    "height": cmd_height,
    "escape": cmd_escape,
    "basis": cmd_basis,
    "green": cmd_green,
    "fekete": cmd_fekete,
    "adelic-report": cmd_adelic_report,
    "trend": cmd_trend,
    "multiples": cmd_multiples,
    "lehmer-scan": cmd_lehmer_scan,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=config.app_name)
    parser.add_argument("--log-level", default=config.log_level)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, system: str | None = "required") -> argparse.ArgumentParser:
        p = sub.add_parser(name)
        if system == "required":
            p.add_argument("system")
        elif system == "optional":
            p.add_argument("system", nargs="?")
        p.add_argument("--tol", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--csv")
        p.add_argument("--convention", choices=[c.value for c in RConvention])
        return p

    command("resultant")
    command("height").add_argument("--point", required=True)
    p = command("escape")
    p.add_argument("--point", required=True)
    p.add_argument("--place", default=str(ARCHIMEDEAN))
    command("basis").add_argument("--n", type=int, required=True)
    p = command("green")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--place", default=str(ARCHIMEDEAN))
    p = command("fekete")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--restarts", type=int, default=1)
    p = command("adelic-report")
    p.add_argument("--n", dest="n_list", default="4,8,16,32")
    p.add_argument("--budget", type=int, default=20000)
    p = command("trend")
    p.add_argument("--n", dest="n_list", default="2,4,8,16")
    p.add_argument("--place", default=str(ARCHIMEDEAN))
    p = command("multiples", system="optional")
    p.add_argument("--curve")
    p.add_argument("--point")
    p.add_argument("--n", type=int, required=True)
    p = command("lehmer-scan", system=None)
    p.add_argument("--curve")
    p.add_argument("--point")
    p.add_argument("--depths", default="0,1,2")
    command("selftest", system=None)
    return parser


def _emit(args, kind: str, result, rows: list) -> None:
    if kind == "resultant":
        text = format_rational(result) + "\n"
    else:
        text = dump_json(with_schema(kind, result)) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        Path(args.csv).write_text(to_csv(rows))


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(message)s")
    try:
        kind, result, rows = COMMANDS[args.command](args)
        _emit(args, kind, result, rows)
    except ConfigError as e:
        logging.error(f"{e}")
        return 2
    except GreenfieldError as e:
        logging.error(f"{e}")
        return 1
    if kind == "selftest" and not result["passed"]:
        return 1
    return 0
