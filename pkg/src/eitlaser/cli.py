"""Command-line front end.

Subcommands:
  simulate   closed-form dataset for one scenario (CSV)
  figure     plot-ready CSV presets fig2 .. fig5
  critical   critical radius and photon numbers at 2 r_c
  validate   brute-force oracle checks; exit 1 on any failure
  sweep      summary row per (r, Omega12/delta)

Exit codes: 0 ok, 1 validation failure, 2 config error, 3 convergence error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments
from .config import ScenarioConfig, load_config
from .errors import ConfigError, ConvergenceError

log = logging.getLogger("eitlaser")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3
DEFAULT_R, DEFAULT_RATIO = 0.5, 50.0


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario file (key = value lines)")
    common.add_argument("--out", type=Path, help="output directory (default: stdout / cwd)")
    common.add_argument("--r", type=float, help="displacement radius r = Omega23/g")
    common.add_argument("--ratio", type=float, help="Omega12/delta")
    common.add_argument("--ordering", choices=("with", "without", "both"))
    common.add_argument("--branch", choices=("plus", "minus", "both"))
    common.add_argument("--dim", type=int, help="Fock truncation override")
    common.add_argument("--steps", type=int, help="oracle integrator steps (per t0 for simulate)")
    common.add_argument("--quiet", action="store_true", help="only warnings and errors")

    parser = argparse.ArgumentParser(
        prog="eitlaser",
        description="Cavity-field states of an EIT one-atom laser from the exact Magnus solution.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="examples:\n"
               "  eitlaser simulate --r 0.25 --ratio 8 --branch both --out data/\n"
               "  eitlaser figure fig4 --out figures/\n"
               "  eitlaser critical\n"
               "  eitlaser validate\n"
               "  eitlaser sweep --r-values 0.25,0.5,1 --ratio-values 8,50 --jobs 4",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="dataset for one scenario")
    fig = sub.add_parser("figure", parents=[common], help="figure presets")
    fig.add_argument("which", choices=("fig2", "fig3", "fig4", "fig5", "all"))
    crit = sub.add_parser("critical", parents=[common], help="critical radius report")
    crit.add_argument("--fraction", type=float, default=0.1,
                      help="ordering phase at t0/2 as a fraction of the period pi (default 0.1)")
    sub.add_parser("validate", parents=[common], help="oracle suite")
    sw = sub.add_parser("sweep", parents=[common], help="parameter sweep summary")
    sw.add_argument("--r-values", type=_float_list, default=[0.25, 0.5, 1.0])
    sw.add_argument("--ratio-values", type=_float_list, default=[8.0, 50.0])
    sw.add_argument("--jobs", type=int, default=1, help="worker processes (output order is fixed)")
    return parser


def scenario_from_args(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else None
    overrides = {k: getattr(args, k) for k in ("r", "ratio", "ordering", "branch", "dim")
                 if getattr(args, k) is not None}
    if args.steps is not None:
        overrides["oracle_steps"] = args.steps
    if cfg is None:
        overrides.setdefault("r", DEFAULT_R)
        overrides.setdefault("ratio", DEFAULT_RATIO)
        return ScenarioConfig(**overrides)
    if cfg.physical and ({"r", "ratio"} & overrides.keys()):
        raise ConfigError("--r/--ratio cannot override a physical-units config")
    try:
        return cfg.replace(**overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _emit(rows, columns, out_dir, name, header="") -> None:
    if out_dir is None:
        sys.stdout.write(experiments.csv_text(rows, columns))
        return
    path = experiments.write_csv(rows, columns, Path(out_dir) / f"{name}.csv")
    experiments.write_legend(columns, Path(out_dir) / f"{name}.columns.txt", header)
    log.info("wrote %s", path)


def cmd_simulate(args) -> int:
    cfg = scenario_from_args(args)
    rows = experiments.simulate(cfg)
    out = args.out
    if out is None and cfg.output_path:
        path = experiments.write_csv(rows, experiments.columns_for(cfg), cfg.output_path)
        log.info("wrote %s", path)
        return EXIT_OK
    _emit(rows, experiments.columns_for(cfg), out, "simulate")
    return EXIT_OK


def cmd_figure(args) -> int:
    which = ("fig2", "fig3", "fig4", "fig5") if args.which == "all" else (args.which,)
    for w in which:
        for path in experiments.write_figure(w, args.out or Path(".")):
            log.info("wrote %s", path)
    return EXIT_OK


def cmd_critical(args) -> int:
    report = experiments.critical_report(args.fraction, args.ratio or DEFAULT_RATIO)
    print("\n".join(report.lines()))
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        if not cfg.oracle:
            log.warning("config has oracle = off; running the oracle suite anyway")
    checks = experiments.run_validation(
        dim=args.dim, steps=args.steps, r_values=[args.r] if args.r is not None else None
    )
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


def cmd_sweep(args) -> int:
    rows = experiments.sweep_rows(args.r_values, args.ratio_values, jobs=args.jobs)
    _emit(rows, experiments.SWEEP_COLUMNS, args.out, "sweep")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "figure": cmd_figure,
    "critical": cmd_critical,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        log.error("convergence error: %s (raise --dim or --steps)", exc)
        return EXIT_CONVERGENCE
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
