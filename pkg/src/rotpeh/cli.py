"""Command-line front end: frequency maps, sweeps, magnet force tables and batches.

Subcommands::

    rotpeh modes    --config FILE --out DIR
    rotpeh sweep    --config FILE --out DIR [--sweep up|down|both] [--df HZ]
                    [--settle-cycles N] [--modes-only] [--strict]
    rotpeh magforce --config FILE --out DIR
    rotpeh batch    --config FILE --out DIR [--jobs N]

A run writes only inside its output directory.  On failure an
``error.json`` record is written there and the exit code is nonzero.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .forces import magnet_force
from .geometry import ConfigError, build_sections
from .modal import ModalError, frequency_map
from .scenario import (Scenario, ScenarioError, load_scenario, read_yaml, scenario_from_dict,
                       scenario_to_dict)
from .simulate import (BandwidthError, IntegrationError, ModelFamily, bandwidth, config_hash, power_area,
                       sweep)

log = logging.getLogger("rotpeh")

SUMMARY_HEADER = ["scenario", "sweep", "power_area_mwhz", "efficiency_pct_vs_baseline"]
PEAK_HEADER = ["scenario", "sweep", "peak", "f_peak_hz", "v_peak", "f_low_hz", "f_high_hz", "bandwidth_hz"]
EXIT_CONFIG, EXIT_MODEL, EXIT_INTERNAL = 2, 3, 4


def _versions() -> dict:
    import numba
    import scipy
    import yaml
    return {"rotpeh": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "pyyaml": yaml.__version__}


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        out.writerows(rows)


def _fmt(x) -> str:
    return "" if x is None else f"{x:.10e}"


def write_frequency_map(scenario: Scenario, out: Path):
    r = scenario.fmap
    drive = np.arange(r.f_start, r.f_end + r.df / 2, r.df)
    fmap = frequency_map(build_sections(scenario.config), 2 * np.pi * drive, truncate=True)
    fmap.write_csv(out / "frequency_map.csv")
    return fmap


def write_magforce(scenario: Scenario, out: Path) -> Path:
    """Coaxial force table for each configured magnet (or the default pair)."""
    from .forces import MagnetConfig
    magnets = scenario.magnets or (MagnetConfig(),)
    r = scenario.magforce
    rows = []
    for k, cfg in enumerate(magnets):
        lo = max(r.gap_start, (cfg.c1 + cfg.c2) / 2 * (1 + 1e-9))
        for gap in np.linspace(lo, r.gap_end, r.points):
            fx, fy, fz = magnet_force(cfg, 0.0, 0.0, gap)
            rows.append([k, cfg.target, cfg.polarity, f"{gap:.6e}", _fmt(fx), _fmt(fy), _fmt(fz)])
    path = out / "magforce.csv"
    _write_csv(path, ["magnet", "target", "polarity", "gap_m", "fx_n", "fy_n", "fz_n"], rows)
    return path


def run(scenario: Scenario, out_dir, *, modes_only: bool = False) -> dict:
    """Run one scenario end to end and write its bundle into ``out_dir``.

    Returns a summary record with the power area of each sweep direction.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmap = write_frequency_map(scenario, out)
    record = {"scenario": scenario.name, "areas": {}, "peaks": {},
              "unstable_from_hz": None if fmap.unstable_from is None else fmap.unstable_from / (2 * np.pi)}
    if not modes_only:
        family = ModelFamily(scenario.config, scenario.stoppers, scenario.magnets)
        peak_rows = []
        for direction in scenario.directions:
            curve = sweep(family, scenario.plan.replace(direction=direction), rtol=scenario.rtol,
                          atol=scenario.atol, samples_per_period=scenario.samples_per_period)
            curve.write_csv(out / f"sweep_{direction}.csv")
            # a single-frequency run has no band to integrate
            record["areas"][direction] = power_area(curve) if curve.f.size > 1 else None
            try:
                bands = bandwidth(curve)
            except BandwidthError as exc:
                log.info("%s %s: %s", scenario.name, direction, exc)
                bands = []
            record["peaks"][direction] = [b.__dict__ | {"width": b.width} for b in bands]
            for j, b in enumerate(bands, 1):
                peak_rows.append([scenario.name, direction, j, f"{b.f_peak:.6f}", _fmt(b.v_peak),
                                  f"{b.f_low:.6f}", f"{b.f_high:.6f}", f"{b.width:.6f}"])
        _write_csv(out / "peaks.csv", PEAK_HEADER, peak_rows)
        _write_csv(out / "summary.csv", SUMMARY_HEADER,
                   [[scenario.name, d, "" if a is None else _fmt(a), "" if a is None else "100.00"]
                    for d, a in record["areas"].items()])
    manifest = {
        "manifest_version": 1,
        "config_hash": config_hash(scenario.config, scenario.stoppers, scenario.magnets),
        "versions": _versions(),
        "tolerances": {"rtol": scenario.rtol, "atol": scenario.atol,
                       "samples_per_period": scenario.samples_per_period},
        "modes_only": modes_only,
        "scenario": scenario_to_dict(scenario),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return record


def _error_record(out: Path, exc: BaseException) -> int:
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(exc, ConfigError):
        code, kind = EXIT_CONFIG, "config"
    elif isinstance(exc, (ModalError, IntegrationError, FloatingPointError)):
        code, kind = EXIT_MODEL, "model"
    else:
        code, kind = EXIT_INTERNAL, "internal"
    rec = {"kind": kind, "type": type(exc).__name__, "message": str(exc),
           "field": getattr(exc, "field", None), "line": getattr(exc, "line", None),
           "drive_hz": getattr(exc, "drive_hz", None), "exit_code": code}
    if kind == "internal":
        rec["traceback"] = traceback.format_exception(type(exc), exc, exc.__traceback__)
    with open(out / "error.json", "w", encoding="utf-8") as fh:
        json.dump(rec, fh, indent=2)
    print(f"error: {exc}", file=sys.stderr)
    return code


# --------------------------------------------------------------------------- batch


def load_batch(path, *, strict: bool = False) -> tuple[list[Scenario], str | None]:
    """Batch file: ``baseline`` name, optional shared ``defaults`` and a ``scenarios`` list.

    List items are either inline scenario mappings (merged over the defaults)
    or paths to scenario files relative to the batch file.
    """
    data, lines = read_yaml(path)
    if not isinstance(data, dict) or not isinstance(data.get("scenarios"), list):
        raise ScenarioError("scenarios", "batch file needs a 'scenarios' list", lines.get("scenarios"),
                            str(path))
    defaults = data.get("defaults") or {}
    scenarios = []
    for k, item in enumerate(data["scenarios"]):
        if isinstance(item, str):
            scenarios.append(load_scenario(Path(path).parent / item, strict=strict))
            continue
        merged = _merge(defaults, item)
        sub = {key[len(f"scenarios[{k}]."):]: v for key, v in lines.items()
               if key.startswith(f"scenarios[{k}].")}
        scenarios.append(scenario_from_dict(merged, lines=sub, source=str(path), strict=strict))
    names = [s.name for s in scenarios]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ScenarioError("scenarios", f"duplicate scenario names {sorted(dupes)}", lines.get("scenarios"),
                            str(path))
    baseline = data.get("baseline")
    if baseline is not None and baseline not in names:
        raise ScenarioError("baseline", f"no scenario named {baseline!r}", lines.get("baseline"), str(path))
    return scenarios, baseline


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _batch_worker(args):
    scenario, out_dir, modes_only = args
    try:
        return run(scenario, out_dir, modes_only=modes_only), None
    except Exception as exc:  # each failure is reported per scenario
        _error_record(Path(out_dir), exc)
        return None, f"{type(exc).__name__}: {exc}"


def run_batch(scenarios, out_dir, *, baseline: str | None = None, jobs: int = 1,
              modes_only: bool = False) -> tuple[list[dict], list[str]]:
    """Run every scenario into ``out_dir/<name>`` and write the comparison summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(s, out / s.name, modes_only) for s in scenarios]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_worker, tasks))
    else:
        results = [_batch_worker(t) for t in tasks]
    records = [r for r, _ in results if r is not None]
    errors = [f"{s.name}: {e}" for s, (_, e) in zip(scenarios, results) if e is not None]
    base = next((r for r in records if r["scenario"] == baseline), None)
    rows = []
    for r in records:
        for direction, area in r["areas"].items():
            ref = base["areas"].get(direction) if base else None
            eff = f"{100 * area / ref:.2f}" if ref and area is not None else ""
            rows.append([r["scenario"], direction, "" if area is None else _fmt(area), eff])
    _write_csv(out / "summary.csv", SUMMARY_HEADER, rows)
    return records, errors


# --------------------------------------------------------------------------- argparse


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotpeh", description="Rotational two-mode piezoelectric harvester")
    p.add_argument("--version", action="version", version=f"rotpeh {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, type=Path, help="scenario YAML file")
        sp.add_argument("--out", required=True, type=Path, help="output directory")
        sp.add_argument("--strict", action="store_true", help="treat unknown keys as errors")
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("modes", help="natural-frequency map against drive frequency"))
    sp = sub.add_parser("sweep", help="up/down voltage response sweeps")
    common(sp)
    sp.add_argument("--sweep", choices=("up", "down", "both"), help="override sweep direction")
    sp.add_argument("--df", type=float, help="frequency step, Hz")
    sp.add_argument("--settle-cycles", type=int, help="settling cycles per frequency step")
    sp.add_argument("--modes-only", action="store_true", help="write only the frequency map")
    common(sub.add_parser("magforce", help="magnet force against coaxial gap"))
    sp = sub.add_parser("batch", help="run a study matrix")
    common(sp)
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--sweep", choices=("up", "down", "both"))
    sp.add_argument("--df", type=float)
    sp.add_argument("--settle-cycles", type=int)
    sp.add_argument("--modes-only", action="store_true")
    return p


def _overrides(scenario: Scenario, args) -> Scenario:
    plan = scenario.plan
    if getattr(args, "df", None) is not None:
        plan = plan.replace(df=args.df)
    if getattr(args, "settle_cycles", None) is not None:
        plan = plan.replace(settle_cycles=args.settle_cycles)
    directions = scenario.directions
    if getattr(args, "sweep", None):
        directions = ("up", "down") if args.sweep == "both" else (args.sweep,)
    return scenario.replace(plan=plan.replace(direction=directions[0]), directions=directions)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    out = args.out
    try:
        if args.command == "batch":
            scenarios, baseline = load_batch(args.config, strict=args.strict)
            scenarios = [_overrides(s, args) for s in scenarios]
            _, errors = run_batch(scenarios, out, baseline=baseline, jobs=max(1, args.jobs),
                                  modes_only=args.modes_only)
            for e in errors:
                print(f"error: {e}", file=sys.stderr)
            return EXIT_MODEL if errors else 0
        scenario = load_scenario(args.config, strict=args.strict)
        if args.command == "modes":
            out.mkdir(parents=True, exist_ok=True)
            write_frequency_map(scenario, out)
        elif args.command == "magforce":
            out.mkdir(parents=True, exist_ok=True)
            write_magforce(scenario, out)
        else:
            scenario = _overrides(scenario, args)
            run(scenario, out, modes_only=args.modes_only)
        return 0
    except Exception as exc:
        return _error_record(out, exc)


if __name__ == "__main__":
    sys.exit(main())
