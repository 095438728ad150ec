"""Command-line entry point: ``roisac <command> [--scenario FILE] [--seed N] ...``.

Exit codes: 0 success, 2 configuration error, 3 runtime or convergence error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import defaultdict
from pathlib import Path

from . import experiments as ex
from .localization import ConvergenceError
from .scenario import PRESETS, ConfigError, load_scenario
from .svg import Panel, line_chart

log = logging.getLogger("roisac")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _svg_sweep_ratio(t: ex.Table) -> str:
    a = t.column("alpha").tolist()
    return line_chart(
        [
            Panel("BER vs superposition ratio", "alpha (MLS power share)", "BER", {"BER": (a, t.column("ber").tolist())}, log_y=True),
            Panel("Ranging RMSE vs superposition ratio", "alpha (MLS power share)", "RMSE (m)", {"RMSE": (a, t.column("rmse_m").tolist())}),
        ]
    )


def _svg_retro(t: ex.Table) -> str:
    series = defaultdict(lambda: ([], []))
    for off, name, gain in t.rows:
        series[name][0].append(off)
        series[name][1].append(gain)
    return line_chart([Panel("Retroreflected gain vs lateral offset", "lateral offset (m)", "gain", dict(series))])


def _svg_ber(t: ex.Table) -> str:
    e = t.column("ebn0_db").tolist()
    return line_chart(
        [Panel("4-QAM OFDM over AWGN", "Eb/N0 (dB)", "BER", {"simulated": (e, t.column("ber").tolist()), "Q(sqrt(2Eb/N0))": (e, t.column("theory_ber").tolist())}, log_y=True)]
    )


def _svg_wdd(t: ex.Table) -> str:
    e = t.column("epsilon").tolist()
    return line_chart([Panel("WDD uplink BER vs crosstalk", "epsilon", "BER", {"uplink": (e, t.column("ul_ber").tolist())})])


COMMANDS = {
    "link-budget": (ex.link_budget, None),
    "retro-sweep": (ex.retro_sweep, _svg_retro),
    "sweep-ratio": (ex.sweep_ratio, _svg_sweep_ratio),
    "range": (ex.range_trials, None),
    "multi-target": (ex.multi_target, None),
    "tdd": (ex.tdd, None),
    "wdd": (ex.wdd, _svg_wdd),
    "localize": (ex.localize, None),
    "ber-validate": (ex.ber_validate, _svg_ber),
    "multi-access": (ex.multiaccess, None),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roisac", description="Retroreflective optical ISAC link simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (fn, _) in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0])
        p.add_argument("--scenario", type=Path, help="scenario JSON file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="parameter preset (overrides the file's)")
        p.add_argument("--seed", type=int, help="root seed (u64)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a dotted scenario key")
        p.add_argument("--no-svg", action="store_true", help="skip the SVG plot")
    return parser


def run(command: str, sc: dict, out: Path, svg: bool = True) -> list[Path]:
    fn, plot = COMMANDS[command]
    table = fn(sc)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{command}.csv"
    csv_path.write_text(table.to_csv())
    written = [csv_path]
    if svg and plot is not None and table.rows:
        svg_path = out / f"{command}.svg"
        svg_path.write_text(plot(table))
        written.append(svg_path)
    return written


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"experiment.trials={args.trials}")
    try:
        sc = load_scenario(args.scenario, overrides, args.preset)
    except (ConfigError, OSError) as exc:
        print(f"roisac: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        for path in run(args.command, sc, args.out, not args.no_svg):
            log.info("wrote %s", path)
    except ConfigError as exc:
        print(f"roisac: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"roisac: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError) as exc:
        print(f"roisac: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
