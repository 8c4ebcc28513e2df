"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 outside the model domain,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .cylinder import DEFAULT_COMBUSTION, MapGenerationError, load_mean_value_maps, mean_value_filename
from .engine import DEFAULT_ENGINE, OperatingPoint
from .engine_maps import WillansParams, load_maps, synth_maps
from .errors import DomainError, ExergyModelError, NumericalError, ValidationError
from .exergy import percentages
from .mixture import Composition, IntakeState, ReferenceState
from .model import EngineModel, balance
from .sweep import (
    SweepGrid,
    cycle_stats,
    cycle_totals,
    load_cycles,
    load_trace,
    model_provenance,
    run_sweep,
    trend_report,
)
from .thermo import DIESEL

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 2, 3, 4
FUEL_MAP, TEXH_MAP = "fuel_rate.csv", "t_exhaust.csv"


def _override(obj, values: dict, label: str):
    if not isinstance(values, dict):
        raise ValidationError(f"config section {label!r} must be an object")
    names = {f.name for f in fields(obj)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise ValidationError(f"unknown key(s) {unknown} in config section {label!r}")
    try:
        return replace(obj, **{k: tuple(v) if isinstance(v, list) else v for k, v in values.items()})
    except TypeError as exc:
        raise ValidationError(f"config section {label!r}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs besides its own flags."""

    engine: object = DEFAULT_ENGINE
    fuel: object = DIESEL
    intake: IntakeState = IntakeState()
    reference: ReferenceState = ReferenceState()
    combustion: object = DEFAULT_COMBUSTION
    willans: WillansParams = WillansParams()
    maps_dir: Path | None = None
    mean_value_dir: Path | None = None
    cycles_dir: Path | None = None
    output_dir: Path | None = None
    grid: dict = field(default_factory=dict)


_SECTIONS = {"schema_version", "engine", "fuel", "intake", "reference", "combustion",
             "willans", "maps_dir", "mean_value_dir", "cycles_dir", "output_dir", "grid"}


def load_config(path) -> RunConfig:
    """Read a JSON run configuration; relative paths resolve against its directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw, base=path.parent)


def config_from_dict(raw: dict, base: Path = Path(".")) -> RunConfig:
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"config schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    unknown = sorted(set(raw) - _SECTIONS)
    if unknown:
        raise ValidationError(f"unknown config section(s) {unknown}")
    cfg = RunConfig()
    updates = {}
    if "engine" in raw:
        eng = dict(raw["engine"])
        geom = eng.pop("geometry", None)
        engine = cfg.engine
        if geom is not None:
            engine = replace(engine, geometry=_override(engine.geometry, geom, "engine.geometry"))
        updates["engine"] = _override(engine, eng, "engine")
    for key in ("fuel", "intake", "combustion", "willans"):
        if key in raw:
            updates[key] = _override(getattr(cfg, key), raw[key], key)
    if "reference" in raw:
        ref = dict(raw["reference"])
        comp = ref.pop("composition", None)
        reference = cfg.reference
        if comp is not None:
            try:
                reference = replace(reference, composition=Composition(**comp))
            except TypeError as exc:
                raise ValidationError(f"reference.composition: {exc}") from None
        updates["reference"] = _override(reference, ref, "reference")
    for key in ("maps_dir", "mean_value_dir", "cycles_dir", "output_dir"):
        if raw.get(key) is not None:
            p = Path(raw[key])
            updates[key] = p if p.is_absolute() else base / p
    for key in ("maps_dir", "cycles_dir"):
        if key in updates and not updates[key].is_dir():
            raise ValidationError(f"config {key} {updates[key]} does not exist")
    if "grid" in raw:
        g = raw["grid"]
        if not isinstance(g, dict) or set(g) - {"t0", "x_egr"}:
            raise ValidationError("config grid must be an object with keys t0 and x_egr")
        updates["grid"] = g
    return replace(cfg, **updates)


def build_model(cfg: RunConfig, egr_rates=(), jobs: int = 1) -> EngineModel:
    """Engine maps from ``maps_dir`` (or synthesised) plus mean-value maps.

    Mean-value maps are read from ``mean_value_dir`` when the files exist
    there and generated otherwise.
    """
    sources = []
    if cfg.maps_dir is not None:
        fuel_csv, texh_csv = cfg.maps_dir / FUEL_MAP, cfg.maps_dir / TEXH_MAP
        engine_maps = load_maps(fuel_csv, texh_csv)
        sources += [str(fuel_csv), str(texh_csv)]
        willans = None
    else:
        engine_maps = synth_maps(cfg.engine, cfg.fuel, cfg.willans)
        willans = cfg.willans
    model = EngineModel(engine_maps, engine=cfg.engine, fuel=cfg.fuel, intake=cfg.intake,
                        combustion=cfg.combustion, willans=willans)
    mv = {}
    for x in egr_rates:
        x = float(x)
        if cfg.mean_value_dir is not None and (cfg.mean_value_dir / mean_value_filename("p_cyl", x)).exists():
            mv[x] = load_mean_value_maps(cfg.mean_value_dir, x)
            sources += [str(cfg.mean_value_dir / mean_value_filename(q, x)) for q in mv[x].QUANTITIES]
    model = replace(model, mean_value=mv, sources=tuple(sources))
    return model.with_egr(egr_rates, env=cfg.reference, jobs=jobs)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _out_dir(args, cfg: RunConfig) -> Path:
    d = Path(args.out) if args.out else cfg.output_dir
    if d is None:
        raise ValidationError("no output directory: pass --out or set output_dir in the config")
    d.mkdir(parents=True, exist_ok=True)
    return d


# -- commands --------------------------------------------------------------------

def cmd_synth_maps(args, cfg: RunConfig) -> int:
    maps = synth_maps(cfg.engine, cfg.fuel, cfg.willans)
    out = _out_dir(args, cfg)
    maps.save(out / FUEL_MAP, out / TEXH_MAP)
    print(f"wrote {out / FUEL_MAP} and {out / TEXH_MAP}")
    return EXIT_OK


def cmd_gen_maps(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    # always regenerate: ignore maps already present in mean_value_dir
    model = build_model(replace(cfg, mean_value_dir=None), args.egr, jobs=args.jobs)
    for x in args.egr:
        for p in model.maps_for(x).save(out):
            print(f"wrote {p}")
    return EXIT_OK


def cmd_balance(args, cfg: RunConfig) -> int:
    model = build_model(cfg, [args.egr])
    env = cfg.reference.with_T0(args.t0)
    op = OperatingPoint.from_rpm(args.speed, args.torque)
    rates = balance(op, args.egr, env, model)
    pct = percentages(rates)
    payload = {
        "inputs": {"speed_rpm": args.speed, "torque_Nm": args.torque, "T0_K": args.t0, "x_egr": args.egr},
        "rates_W": rates.to_dict(),
        "percent": pct.as_dict(),
        "percent_signed": pct.signed,
        "closure": rates.closure(),
        "provenance": model_provenance(model),
    }
    _emit(_dump(payload), args.json_out)
    return EXIT_OK


def cmd_cycle(args, cfg: RunConfig) -> int:
    trace = load_trace(args.trace)
    model = build_model(cfg, [args.egr])
    totals = cycle_totals(trace, args.t0, args.egr, model, cfg.reference)
    pct = percentages(totals)
    payload = {
        "cycle": trace.name,
        "T0_K": args.t0,
        "x_egr": args.egr,
        "totals_J": totals.to_dict(),
        "percent": pct.as_dict(),
        "percent_signed": pct.signed,
        "provenance": model_provenance(model),
    }
    _emit(_dump(payload), args.json_out)
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    t0 = args.t0_list or cfg.grid.get("t0")
    x = args.egr_list or cfg.grid.get("x_egr")
    if not t0 or not x:
        raise ValidationError("sweep needs --t0-list and --egr-list (or a grid in the config)")
    grid = SweepGrid(tuple(t0), tuple(x))
    cycles_dir = Path(args.cycles) if args.cycles else cfg.cycles_dir
    if cycles_dir is None:
        from .sweep import demo_cycle_dir

        cycles_dir = demo_cycle_dir()
    cycles = load_cycles(cycles_dir)
    model = build_model(cfg, grid.x_egr, jobs=args.jobs)
    result = run_sweep(cycles, grid, model, cfg.reference, jobs=args.jobs)
    out = Path(args.out)
    result.to_csv(out)
    meta = {"grid": {"t0": list(grid.t0), "x_egr": list(grid.x_egr)},
            "cycles": list(result.cycles), **result.provenance}
    report = None
    if len(grid.t0) > 1 and len(grid.x_egr) > 1:
        report = trend_report(result)
        meta["trends"] = report.to_dict()
    if len(cycles) > 1:
        stats = [cycle_stats(result, t, xx) for t, xx in grid.combos()]
        meta["cycle_stats"] = [{"T0_K": s.T0, "x_egr": s.x_egr, "mean": s.mean, "sd": s.sd} for s in stats]
    meta_path = out.with_name(out.stem + ".meta.json")
    meta_path.write_text(_dump(meta), encoding="utf-8")
    print(f"wrote {out} ({len(grid)} combinations x {len(cycles)} cycles) and {meta_path}")
    if report is not None:
        print(report.to_text())
    return EXIT_OK


def _floats(text: str):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvexergy", description="Mean-value exergy analysis of a diesel engine.")
    p.add_argument("--config", help="JSON run configuration")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth-maps", help="write synthetic fuel-rate and exhaust-temperature maps")
    s.add_argument("--out", help="output directory")
    s.set_defaults(func=cmd_synth_maps)

    s = sub.add_parser("gen-maps", help="generate mean-value cylinder maps")
    s.add_argument("--egr", type=float, nargs="+", required=True, help="EGR rates")
    s.add_argument("--out", help="output directory")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_gen_maps)

    s = sub.add_parser("balance", help="exergy balance at one operating point")
    s.add_argument("--speed", type=float, required=True, help="engine speed [rpm]")
    s.add_argument("--torque", type=float, required=True, help="engine torque [Nm]")
    s.add_argument("--t0", type=float, default=293.15, help="reference temperature [K]")
    s.add_argument("--egr", type=float, default=0.2, help="EGR rate")
    s.add_argument("--json-out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_balance)

    s = sub.add_parser("cycle", help="exergy breakdown over a drive-cycle trace")
    s.add_argument("--trace", required=True, help="CSV with t_s,omega_radps,torque_Nm")
    s.add_argument("--t0", type=float, default=293.15)
    s.add_argument("--egr", type=float, default=0.2)
    s.add_argument("--json-out")
    s.set_defaults(func=cmd_cycle)

    s = sub.add_parser("sweep", help="T0 x EGR sweep over a directory of cycles")
    s.add_argument("--t0-list", type=_floats, help='e.g. "263.15,273.15"')
    s.add_argument("--egr-list", type=_floats, help='e.g. "0,0.1,0.2"')
    s.add_argument("--cycles", help="directory of trace CSVs (default: shipped demo cycles)")
    s.add_argument("--out", required=True, help="long-format CSV")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=0, help="reserved; the sweep is deterministic")
    s.set_defaults(func=cmd_sweep)
    return p


def _exit_code(exc: ExergyModelError) -> int:
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    if isinstance(exc, (NumericalError, MapGenerationError)):
        return EXIT_NUMERICAL
    return EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "jobs", 1) < 1:
            raise ValidationError("--jobs must be at least 1")
        cfg = load_config(args.config) if args.config else RunConfig()
        return args.func(args, cfg)
    except ExergyModelError as exc:
        print(f"mvexergy: error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
