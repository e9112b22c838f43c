#!/usr/bin/env python3
"""
Relay selection with network coding in two-way relay channels: BER sweeps,
closed-form analysis, figure presets and an oracle validation suite.

Usage:
./relay_selection_nc.py -h

./relay_selection_nc.py sweep --scheme d-rs-nc --relays 2 --snr-db 0:30:5 --trials 100000 --seed 7
./relay_selection_nc.py sweep --scheme all --relays 4 --fidelity bit --workers 4 -v
./relay_selection_nc.py figure fig7 --trials 1000000 --open
./relay_selection_nc.py figure fig5
./relay_selection_nc.py table1 --relays 16
./relay_selection_nc.py analytic --scheme s-rs-nc,nc-no-rs --relays 2,4,8 --snr-db 0:40:10
./relay_selection_nc.py validate --quick -v # To log INFO messages
./relay_selection_nc.py validate -vv # To log DEBUG messages

Settings are read from command-line flags first, then from --config (key=value
lines such as `trials=200000`), then from the environment (.env) defaults.

Exit codes: 0 success, 1 I/O error, 2 usage error, 3 validation failure.
"""
import logging
import sys
from argparse import ArgumentParser
from argparse import Namespace
from argparse import RawDescriptionHelpFormatter

from rich.console import Console
from rich.table import Table
from rich.text import Text

from common import parse_snr_grid
from common.analytic import has_closed_form
from common.channel import MAX_SEED
from common.environment import load_config_file
from common.environment import resolve_settings
from common.experiments import GAIN_MAX_RELAYS
from common.experiments import SCHEME_LABELS
from common.experiments import gain_frame
from common.experiments import get_preset
from common.experiments import parse_relays
from common.experiments import parse_schemes
from common.experiments import read_csv
from common.experiments import sweep_frame
from common.experiments import write_csv
from common.filesystem import default_output_path
from common.filesystem import ensure_parent
from common.filesystem import svg_path_for
from common.logger import setup_logging
from common.montecarlo import Fidelity
from common.montecarlo import SweepSpec
from common.montecarlo import sweep
from common.plotting import render_ber_svg
from common.plotting import render_gain_svg
from common.validation import run_validation

EXIT_OK = 0
EXIT_IO_ERROR = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

SETTING_FLAGS = [
    "seed",
    "trials",
    "fidelity",
    "relays",
    "snr_db",
    "scheme",
    "out",
    "svg",
    "workers",
    "min_errors",
]


def common_flags():
    parser = ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, help="Master seed (64-bit unsigned)")
    parser.add_argument(
        "--trials", type=int, help="Monte Carlo trials per point (0 = analysis only)"
    )
    parser.add_argument(
        "--fidelity",
        choices=[f.value for f in Fidelity],
        help="bit = baseband bit-level chain, semi = averaged conditional BER",
    )
    parser.add_argument("--out", type=str, help="CSV output path")
    parser.add_argument("--svg", type=str, help="SVG output path")
    parser.add_argument("--relays", type=str, help="Comma separated relay counts")
    parser.add_argument(
        "--snr-db", dest="snr_db", type=str, help="Inclusive dB grid start:stop:step"
    )
    parser.add_argument(
        "--scheme", type=str, help="Comma separated scheme names or 'all'"
    )
    parser.add_argument("--workers", type=int, help="Worker threads per point")
    parser.add_argument(
        "--min-errors",
        dest="min_errors",
        type=int,
        help="Stop a bit-level point after this many bit errors (0 = off)",
    )
    parser.add_argument("--config", type=str, help="key=value settings file")
    parser.add_argument(
        "--open",
        action="store_true",
        default=False,
        help="Open the rendered SVG",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        dest="verbose",
        help="Increase verbosity of logging output",
    )
    return parser


def parse_args(argv=None):
    parent = common_flags()
    parser = ArgumentParser(
        description=__doc__, formatter_class=RawDescriptionHelpFormatter
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("sweep", parents=[parent], help="Simulate and analyse a grid")
    figure = commands.add_parser(
        "figure", parents=[parent], help="Reproduce a figure preset"
    )
    figure.add_argument("preset", type=str, help="fig2, fig4-fig10 or table1")
    commands.add_parser("table1", parents=[parent], help="Gains relative to NC-No-RS")
    commands.add_parser("analytic", parents=[parent], help="Evaluate closed forms")
    validate = commands.add_parser(
        "validate", parents=[parent], help="Run the oracle suite"
    )
    validate.add_argument(
        "--quick", action="store_true", default=False, help="Smaller sample sizes"
    )
    return parser.parse_args(argv)


def load_settings(args):
    config_values = load_config_file(args.config) if args.config else {}
    flag_values = {key: getattr(args, key) for key in SETTING_FLAGS}
    settings = resolve_settings(flag_values, config_values)
    settings["explicit"] = {
        key
        for key in SETTING_FLAGS
        if flag_values.get(key) is not None or config_values.get(key)
    }
    settings["fidelity"] = Fidelity(settings["fidelity"])
    settings["relays"] = parse_relays(settings["relays"])
    settings["snr_grid"] = tuple(parse_snr_grid(settings["snr_db"]))
    settings["schemes"] = parse_schemes(settings["scheme"])
    if settings["trials"] < 0:
        raise ValueError(f"trials cannot be negative, got {settings['trials']}")
    if not 0 <= settings["seed"] <= MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64 - 1], got {settings['seed']}")
    if settings["workers"] < 1:
        raise ValueError(f"workers must be at least 1, got {settings['workers']}")
    if settings["min_errors"] < 0:
        raise ValueError(f"min-errors cannot be negative, got {settings['min_errors']}")
    return settings


def _sweep_spec(settings, schemes, relays, snr_grid, trials, verbose):
    return SweepSpec(
        schemes=tuple(schemes),
        relays=tuple(relays),
        snr_db=tuple(snr_grid),
        trials=trials,
        fidelity=settings["fidelity"],
        master_seed=settings["seed"],
        min_errors=settings["min_errors"],
        workers=settings["workers"],
        progress=verbose > 0,
    )


def _output_path(settings, default_name):
    if settings["out"]:
        return ensure_parent(settings["out"])
    return default_output_path(default_name)


def _svg_path(settings, csv_path):
    return ensure_parent(settings["svg"]) if settings["svg"] else svg_path_for(csv_path)


def _fmt(value):
    if value is None or value != value:
        return ""
    return f"{value:.4e}"


def print_ber_table(frame, title):
    table = Table(title=title)
    table.add_column("Scheme", style="cyan", no_wrap=True)
    table.add_column("N", justify="right")
    table.add_column("SNR (dB)", justify="right")
    table.add_column("Simulated", justify="right", style="magenta")
    table.add_column("Exact", justify="right", style="green")
    table.add_column("Asymptotic", justify="right")
    table.add_column("Method")
    for row in frame.itertuples(index=False):
        table.add_row(
            row.scheme,
            str(row.n_relays),
            f"{row.snr_db:g}",
            _fmt(row.ber_sim),
            _fmt(row.ber_exact),
            _fmt(row.ber_asymptotic),
            row.eval_method if isinstance(row.eval_method, str) else "",
        )
    Console().print(table)


def print_gain_table(frame):
    table = Table(title="BER relative to NC-No-RS (high SNR)")
    table.add_column("N", justify="right", style="cyan")
    for column in ("S-RS-NC", "D-RS-NC", "RS-No-NC", "D over S"):
        table.add_column(column, justify="right")
    for row in frame.itertuples(index=False):
        table.add_row(
            str(row.n_relays),
            f"{row.gain_s_rs_nc:.4f}",
            f"{row.gain_d_rs_nc:.4f}",
            f"{row.gain_rs_no_nc:.4f}",
            f"{row.gain_d_over_s:.4f}",
        )
    Console().print(table)


def cmd_sweep(args, settings):
    spec = _sweep_spec(
        settings,
        settings["schemes"],
        settings["relays"],
        settings["snr_grid"],
        settings["trials"],
        args.verbose,
    )
    csv_path = write_csv(sweep_frame(sweep(spec)), _output_path(settings, "sweep.csv"))
    if settings["svg"] or args.open:
        render_ber_svg(
            read_csv(csv_path), _svg_path(settings, csv_path), "BER sweep", args.open
        )
    return EXIT_OK


def _write_gains(args, settings, n_max, name, title):
    frame = gain_frame(n_max)
    print_gain_table(frame)
    csv_path = write_csv(frame, _output_path(settings, f"{name}.csv"))
    if name == "fig5" or settings["svg"] or args.open:
        render_gain_svg(
            read_csv(csv_path), _svg_path(settings, csv_path), title, args.open
        )
    return EXIT_OK


def _max_relays(settings):
    if "relays" in settings["explicit"]:
        return max(settings["relays"])
    return GAIN_MAX_RELAYS


def cmd_table1(args, settings):
    return _write_gains(
        args, settings, _max_relays(settings), "table1", "Gain relative to NC-No-RS"
    )


def cmd_figure(args, settings):
    preset = get_preset(args.preset)
    if preset.gains:
        return _write_gains(args, settings, _max_relays(settings), preset.name, preset.title)
    explicit = settings["explicit"]
    preset = preset.with_overrides(
        relays=settings["relays"] if "relays" in explicit else None,
        snr_db=settings["snr_db"] if "snr_db" in explicit else None,
    )
    trials = settings["trials"] if preset.simulate else 0
    spec = _sweep_spec(
        settings, preset.schemes, preset.relays, preset.snr_grid, trials, args.verbose
    )
    csv_path = write_csv(
        sweep_frame(sweep(spec)), _output_path(settings, f"{preset.name}.csv")
    )
    svg_path = render_ber_svg(
        read_csv(csv_path), _svg_path(settings, csv_path), preset.title, args.open
    )
    print(f"Wrote {csv_path} and {svg_path}")
    return EXIT_OK


def cmd_analytic(args, settings):
    schemes = [kind for kind in settings["schemes"] if has_closed_form(kind)]
    for kind in settings["schemes"]:
        if not has_closed_form(kind):
            logging.warning(f"{SCHEME_LABELS[kind]} has no closed form, skipping")
    spec = _sweep_spec(
        settings, schemes, settings["relays"], settings["snr_grid"], 0, args.verbose
    )
    frame = sweep_frame(sweep(spec))
    print_ber_table(frame, "Closed-form average sum BER")
    if settings["out"]:
        write_csv(frame, ensure_parent(settings["out"]))
    return EXIT_OK


def cmd_validate(args, settings):
    validation_args = Namespace(
        quick=args.quick, seed=settings["seed"], workers=settings["workers"]
    )
    results = run_validation(validation_args)
    table = Table(title="Validation suite")
    table.add_column("Step", style="cyan", no_wrap=True)
    table.add_column("Result", justify="center")
    table.add_column("Detail")
    for result in results:
        status = Text("PASS", style="green") if result.passed else Text("FAIL", style="red")
        table.add_row(result.name, status, result.detail)
    Console().print(table)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


COMMANDS = {
    "sweep": cmd_sweep,
    "figure": cmd_figure,
    "table1": cmd_table1,
    "analytic": cmd_analytic,
    "validate": cmd_validate,
}


def main(argv=None):
    args = parse_args(argv)
    setup_logging(args.verbose)
    try:
        settings = load_settings(args)
        if args.command == "figure":
            get_preset(args.preset)
    except (ValueError, OSError) as e:
        logging.error(f"Invalid settings: {e}")
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args, settings)
    except OSError as e:
        logging.error(f"I/O failure: {e}")
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
