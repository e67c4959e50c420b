"""Command line: ``econres <command> ...``.

Commands::

    run CONFIG                     every step below, plus manifest.json
    ingest CONFIG                  read/fetch sources into OUT/data
    compute CONFIG                 OUT/data -> OUT/panel.csv, OUT/panel.json
    analyze class-errorbars        component and covariate error bars by class
    analyze fixed-commute          trajectories, choropleth join, class shares
    analyze shifts                 shift pyramid table
    analyze continents             error bars by continent
    render                         SVG charts from the error-bar tables
    validate PANEL                 invariant checks; exit 4 on violations

Exit codes: 0 success, 2 invalid configuration, 3 data error, 4 invariant
violation (or any unexpected failure). Errors are reported as JSON on stderr
and, when an output directory is known, in OUT/error.json.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, ResilienceError
from .panel import read_panel, write_panel

logger = logging.getLogger("econres")

ANALYSES = ("class-errorbars", "fixed-commute", "shifts", "continents")


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="JSON run configuration")
    p.add_argument("--out", help="output directory (default: output_dir from the config)")
    p.add_argument("--level", type=float, help="confidence level: 0.90, 0.95 or 0.99")
    p.add_argument("--sign-convention", choices=("corrected", "as_printed"))
    p.add_argument("--min-ref", type=int, help="minimum reference-period length")
    p.add_argument("--min-perf", type=int, help="minimum performance-period length")
    p.add_argument("--level-mode", choices=("max", "mean"))
    p.add_argument("--alignment", choices=("shock-year", "performance-mean"),
                   help="covariate alignment policy")
    p.add_argument("--levene", action="store_true", default=None, help="also write Levene tables")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="econres", description="Economic resilience index pipeline.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (("run", "run the full pipeline"),
                       ("ingest", "read or fetch the configured sources"),
                       ("compute", "build the country x shock panel")):
        _add_overrides(sub.add_parser(name, help=text))

    an = sub.add_parser("analyze", help="downstream analyses of a panel")
    an.add_argument("analysis", choices=ANALYSES)
    an.add_argument("--out", default="out", help="output directory (default: out)")
    an.add_argument("--panel", help="panel file or directory (default: OUT/panel.json)")
    an.add_argument("--level", type=float, help="confidence level (default: the panel's)")
    an.add_argument("--levene", action="store_true", default=None)
    an.add_argument("--boundaries", help="GeoJSON FeatureCollection to join (fixed-commute)")
    an.add_argument("--key", help="feature property holding ISO3 codes")

    rd = sub.add_parser("render", help="SVG charts from the error-bar tables")
    rd.add_argument("--out", default="out")

    va = sub.add_parser("validate", help="check panel invariants")
    va.add_argument("panel", help="panel CSV/JSON file or output directory")
    return parser


def _config(args) -> tuple[RunConfig, Path]:
    overrides = {
        "confidence_level": args.level,
        "sign_convention": args.sign_convention,
        "split.min_ref": args.min_ref,
        "split.min_perf": args.min_perf,
        "split.level_mode": args.level_mode,
        "covariate_alignment": args.alignment,
        "levene": args.levene,
    }
    cfg = load_config(args.config, overrides)
    out = Path(args.out) if args.out else cfg.out_path
    return cfg, out


def _check_level(level: float | None) -> None:
    from .config import CONFIDENCE_LEVELS

    if level is not None and level not in CONFIDENCE_LEVELS:
        raise ConfigError(f"confidence level must be one of {CONFIDENCE_LEVELS}")


def _report(paths) -> None:
    for p in paths:
        print(p)


def cmd_run(args) -> int:
    cfg, out = _config(args)
    args._out = out
    pipeline.run_pipeline(cfg, out)
    print(out / "manifest.json")
    return 0


def cmd_ingest(args) -> int:
    cfg, out = _config(args)
    args._out = out
    result = pipeline.ingest(cfg)
    _report(pipeline.write_ingest(result, cfg, out))
    return 0


def cmd_compute(args) -> int:
    cfg, out = _config(args)
    args._out = out
    if not (out / "data" / "sources.json").exists():
        pipeline.write_ingest(pipeline.ingest(cfg), cfg, out)
    panel = pipeline.compute(cfg, pipeline.read_ingest(out))
    pipeline.check_panel(panel)
    _report(write_panel(panel, out))
    return 0


def cmd_analyze(args) -> int:
    out = Path(args.out)
    args._out = out
    _check_level(args.level)
    src = Path(args.panel) if args.panel else out / "panel.json"
    if not src.exists():
        raise DataError(f"panel {src} not found; run 'compute' first")
    panel = read_panel(src)
    if args.analysis == "class-errorbars":
        paths = pipeline.analyze_class_errorbars(panel, out, args.level, args.levene)
    elif args.analysis == "fixed-commute":
        paths = pipeline.analyze_fixed_commute(panel, out, Path(args.boundaries) if args.boundaries else None, args.key)
    elif args.analysis == "shifts":
        paths = pipeline.analyze_shifts(panel, out)
    else:
        paths = pipeline.analyze_continents(panel, out, args.level)
    _report(paths)
    return 0


def cmd_render(args) -> int:
    out = Path(args.out)
    args._out = out
    _report(pipeline.render(out))
    return 0


def cmd_validate(args) -> int:
    src = Path(args.panel)
    if not src.exists():
        raise DataError(f"panel {src} not found")
    panel = read_panel(src)
    violations = pipeline.validate_panel(panel)
    print(json.dumps({"rows": len(panel.rows), "violations": [v.to_dict() for v in violations]}, indent=1))
    return 4 if violations else 0


COMMANDS = {
    "run": cmd_run,
    "ingest": cmd_ingest,
    "compute": cmd_compute,
    "analyze": cmd_analyze,
    "render": cmd_render,
    "validate": cmd_validate,
}


def _fail(report: dict, code: int, out: Path | None) -> int:
    text = json.dumps(report, indent=1)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args._out = Path(args.out) if getattr(args, "out", None) else None
    try:
        return COMMANDS[args.command](args)
    except ResilienceError as exc:
        return _fail(exc.to_report(), exc.exit_code, args._out)
    except FileNotFoundError as exc:
        return _fail({"error": "DataError", "message": str(exc)}, 3, args._out)
    except Exception as exc:  # noqa: BLE001 - last-resort report
        logger.debug("unexpected failure", exc_info=True)
        return _fail({"error": "InternalError", "message": f"{type(exc).__name__}: {exc}"}, 4, args._out)


if __name__ == "__main__":
    sys.exit(main())
