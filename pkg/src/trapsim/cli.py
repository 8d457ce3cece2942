"""Command-line interface.

Subcommands: depth | profile | simulate | analyze | fit-loading | sweep.
Global flags: --config PATH (plain config or a provenance sidecar), --seed N,
--out DIR, --set KEY=VALUE (repeatable, any config key).

Exit codes: 0 success, 1 usage or configuration error, 2 malformed or
insufficient input data, 3 numerical failure.

Every command writes a provenance JSON holding the fully resolved config and
seed; feeding that file back through --config reproduces the run, and for
the stochastic commands the rewritten CSV output is byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import analysis, fileio, loading, potential
from .config import ConfigError, dynamics_from, kappa_from, resolve_config, trap_from
from .dynamics import concat_traces, simulate_cycles
from .sweep import SweepSpec, run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_set(items) -> dict:
    overrides = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config or provenance sidecar")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--out", metavar="DIR", help="output directory (default: config 'out' key)")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        dest="sets",
        help="override any config key (repeatable)",
    )


def _flag_overrides(args, mapping: dict) -> dict:
    overrides = {}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _resolve(args, flag_map: dict | None = None) -> dict:
    overrides = _parse_set(args.sets)
    overrides.update(_flag_overrides(args, flag_map or {}))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return resolve_config(args.config, overrides)


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(report: dict) -> None:
    print(json.dumps(report, indent=2, sort_keys=True))


def _cmd_depth(args) -> int:
    cfg = _resolve(
        args,
        {
            "pp_mw": "primary.power_mw",
            "panc_mw": "ancillary.power_mw",
            "zeta": "primary.zeta",
            "kappa": "trap.kappa",
        },
    )
    trap = trap_from(cfg)
    depth = potential.trap_depth(trap)
    report = {
        "depth_mK": depth,
        "enhancement_exact": potential.enhancement_ratio_exact(trap),
        "enhancement_approx": potential.enhancement_ratio_approx(
            cfg["primary.power_mw"],
            cfg["ancillary.power_mw"],
            cfg["primary.waist_um"],
            cfg["ancillary.waist_um"],
            cfg["primary.zeta"],
            cfg["trap.zeta_applies_to_ancillary"],
        ),
        "stark_shift_MHz": potential.stark_shift(depth),
        "kappa": trap.kappa,
    }
    out = _out_dir(cfg)
    fileio.write_provenance(out / "depth_provenance.json", "depth", cfg["seed"], cfg)
    _emit(report)
    return EXIT_OK


def _cmd_profile(args) -> int:
    cfg = _resolve(
        args,
        {
            "pp_mw": "primary.power_mw",
            "panc_mw": "ancillary.power_mw",
            "kappa": "trap.kappa",
            "z_min": "profile.z_min_um",
            "z_max": "profile.z_max_um",
            "n_points": "profile.n_points",
        },
    )
    profile = potential.potential_profile(
        trap_from(cfg),
        cfg["profile.z_min_um"],
        cfg["profile.z_max_um"],
        cfg["profile.n_points"],
    )
    out = _out_dir(cfg)
    csv_path = out / "profile.csv"
    fileio.write_profile_csv(csv_path, profile)
    fileio.write_provenance(out / "profile_provenance.json", "profile", cfg["seed"], cfg)
    _emit({"path": str(csv_path), "rows": len(profile.z_um)})
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _resolve(
        args,
        {
            "cycles": "simulate.n_cycles",
            "bin_ms": "simulate.bin_width_ms",
        },
    )
    params = dynamics_from(cfg)
    traces = simulate_cycles(
        params,
        n_cycles=cfg["simulate.n_cycles"],
        seed=cfg["seed"],
        bin_width_ms=cfg["simulate.bin_width_ms"],
        mot_seconds=cfg["simulate.mot_seconds"],
        probe_seconds=cfg["simulate.probe_seconds"],
        off_seconds=cfg["simulate.off_seconds"],
    )
    trace = concat_traces(traces)
    out = _out_dir(cfg)
    csv_path = out / "trace.csv"
    fileio.write_trace_csv(csv_path, trace)
    fileio.write_provenance(out / "trace.json", "simulate", cfg["seed"], cfg)
    _emit(
        {
            "path": str(csv_path),
            "sidecar": str(out / "trace.json"),
            "n_cycles": cfg["simulate.n_cycles"],
            "n_bins": trace.n_bins,
        }
    )
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = _resolve(
        args,
        {
            "model": "analyze.model",
            "n_components": "analyze.n_components",
        },
    )
    trace = fileio.read_trace_csv(args.trace)
    n_comp = cfg["analyze.n_components"] or "auto"
    report = analysis.analyze_trace(trace, model=cfg["analyze.model"], n_components=n_comp)
    out = _out_dir(cfg)
    with open(out / "analysis.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    fileio.write_provenance(
        out / "analysis_provenance.json",
        "analyze",
        cfg["seed"],
        cfg,
        extra={"input": str(args.trace)},
    )
    _emit(report)
    return EXIT_OK


def _cmd_fit_loading(args) -> int:
    cfg = _resolve(args)
    points = fileio.read_loading_csv(args.points)
    result = loading.fit_loading_curve(points)
    report = {
        "eta0": result.params.eta0,
        "alpha_per_mW": result.params.alpha_per_mw,
        "p_half_mW": result.params.p_half_mw,
        "rms_residual": result.rms_residual,
    }
    out = _out_dir(cfg)
    with open(out / "loading_fit.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    fileio.write_provenance(
        out / "loading_fit_provenance.json",
        "fit-loading",
        cfg["seed"],
        cfg,
        extra={"input": str(args.points)},
    )
    _emit(report)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    overrides = _parse_set(args.sets)
    if args.param:
        overrides["sweep.parameter"] = args.param
    if args.values:
        overrides["sweep.values"] = [float(v) for v in args.values.split(",")]
    if args.outputs:
        overrides["sweep.outputs"] = [s.strip() for s in args.outputs.split(",")]
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    cfg = resolve_config(args.config, overrides)
    if not cfg["sweep.parameter"]:
        raise ConfigError("sweep.parameter is not set (use --param or the config file)")
    try:
        spec = SweepSpec(
            parameter=cfg["sweep.parameter"],
            values=tuple(float(v) for v in cfg["sweep.values"]),
            outputs=tuple(cfg["sweep.outputs"]),
            config=cfg,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    result = run_sweep(spec, cfg["seed"])
    out = _out_dir(cfg)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
    base = f"sweep_{spec.parameter.replace('.', '_')}_{stamp}"
    csv_path = out / f"{base}.csv"
    fileio.write_table_csv(csv_path, result.columns, result.rows)
    fileio.write_provenance(
        out / f"{base}.json", "sweep", cfg["seed"], cfg, extra=result.provenance
    )
    n_failed = sum(1 for row in result.rows if row.get("error"))
    _emit({"path": str(csv_path), "rows": len(result.rows), "failed_points": n_failed})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trapsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("depth", help="trap depth and enhancement report")
    _common_flags(p)
    p.add_argument("--pp-mw", dest="pp_mw", type=float, help="primary beam power in mW")
    p.add_argument("--panc-mw", dest="panc_mw", type=float, help="ancillary beam power in mW")
    p.add_argument("--zeta", type=float, help="effective power fraction of the primary")
    p.add_argument("--kappa", type=float, help="interference visibility in [0, 1]")
    p.set_defaults(func=_cmd_depth)

    p = sub.add_parser("profile", help="axial depth profile CSV")
    _common_flags(p)
    p.add_argument("--pp-mw", dest="pp_mw", type=float)
    p.add_argument("--panc-mw", dest="panc_mw", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--z-min", dest="z_min", type=float, help="grid start in um")
    p.add_argument("--z-max", dest="z_max", type=float, help="grid end in um")
    p.add_argument("--n-points", dest="n_points", type=int)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("simulate", help="synthesize telegraph traces")
    _common_flags(p)
    p.add_argument("--cycles", type=int, help="number of 6 s measurement cycles")
    p.add_argument("--bin-ms", dest="bin_ms", type=float, help="counting bin width in ms")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="fit a recorded trace CSV")
    _common_flags(p)
    p.add_argument("trace", help="trace CSV (t_ms,counts[,phase])")
    p.add_argument("--model", choices=["poisson", "gaussian"], help="mixture kind")
    p.add_argument(
        "--n-components",
        dest="n_components",
        type=int,
        help="component count (0 = automatic by BIC)",
    )
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("fit-loading", help="fit the loading curve model")
    _common_flags(p)
    p.add_argument("points", help="CSV with power_mW,probability[,stderr]")
    p.set_defaults(func=_cmd_fit_loading)

    p = sub.add_parser("sweep", help="evaluate outputs over a grid")
    _common_flags(p)
    p.add_argument("--param", help="config key to sweep, e.g. ancillary.power_mw")
    p.add_argument("--values", help="comma-separated grid values")
    p.add_argument("--outputs", help="comma-separated outputs per point")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"trapsim: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (fileio.DataFormatError, analysis.InsufficientDataError) as exc:
        print(f"trapsim: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"trapsim: i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ArithmeticError, ValueError) as exc:
        print(f"trapsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
