"""Command-line entry point: run experiments, print link budgets and traffic dimensioning, dump the layout."""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from . import channel, metrics, topology, traffic
from .config import ConfigError, ConfigParseError, SimConfig, load_config, parse_value
from .engine import SimulationError, Simulator

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

# short names accepted next to the config keys themselves
ALIASES = {
    "num_terminals": ["--terminals"],
    "num_ttis": ["--ttis"],
    "rng_seed": ["--seed"],
    "edrx_enabled": ["--edrx"],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _config_flags():
    """Parent parser with one flag per config key (``--key`` and ``--key-with-dashes``)."""
    p = _Parser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("configuration overrides (flag > file > default)")
    for f in fields(SimConfig):
        names = [f"--{f.name}"]
        if "_" in f.name:
            names.append(f"--{f.name.replace('_', '-')}")
        names += ALIASES.get(f.name, [])
        g.add_argument(*names, dest=f.name, metavar=f.type.__name__.upper(), default=argparse.SUPPRESS,
                       help=f"default {getattr(SimConfig, f.name)!r}")
    p.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="key = value config file")
    return p


def build_parser():
    common = _config_flags()
    parser = _Parser(prog="nbiot-sls", description="NB-IoT system-level simulator", parents=[common],
                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", metavar="{run,mcl,traffic,dump-layout}")

    run = sub.add_parser("run", parents=[common], allow_abbrev=False, help="run a simulation and write result CSVs")
    run.add_argument("--out", metavar="DIR", default="results", help="output directory (default results)")
    run.add_argument("--replicas", type=int, default=1, help="independent drops with seeds seed, seed+1, ...")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes for replicas")

    mcl = sub.add_parser("mcl", parents=[common], allow_abbrev=False, help="print the downlink and uplink link budgets")
    mcl.add_argument("--bandwidth", type=float, default=None, metavar="HZ",
                     help="uplink occupied bandwidth override in Hz")
    mcl.add_argument("--out", metavar="DIR", default=None, help="also write link_budget.csv here")

    sub.add_parser("traffic", parents=[common], allow_abbrev=False, help="print per-terminal and aggregate report rates")

    lay = sub.add_parser("dump-layout", parents=[common], allow_abbrev=False, help="write site and terminal positions")
    lay.add_argument("--out", metavar="DIR", default="layout", help="output directory (default layout)")
    return parser


def make_config(args):
    """Build the validated config: defaults, then the file, then flags."""
    overrides = {}
    for f in fields(SimConfig):
        if hasattr(args, f.name):
            raw = getattr(args, f.name)
            try:
                overrides[f.name] = parse_value(f.name, raw)
            except ValueError as exc:
                raise ConfigError(f.name, str(exc)) from None
    path = getattr(args, "config", None)
    if path is None:
        return SimConfig(**overrides)
    return load_config(path, **overrides)


# --- subcommands -----------------------------------------------------------------


def _run_one(cfg):
    return Simulator(cfg).run()


def _print_table(rows):
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        if isinstance(v, float):
            v = f"{v:.6g}"
        print(f"{k:<{width}}  {v}")


def cmd_run(args, cfg):
    if args.replicas < 1 or args.jobs < 1:
        raise UsageError("--replicas and --jobs must be >= 1")
    cfgs = [cfg.replace(rng_seed=cfg.rng_seed + r) for r in range(args.replicas)]
    if args.jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, cfgs))
    else:
        results = [_run_one(c) for c in cfgs]
    merged = metrics.merge_results(results)
    summary = metrics.write_run_outputs(args.out, merged, replicas=len(results))
    _print_table(list(summary.items()))
    return EXIT_OK


def cmd_mcl(args, cfg):
    budgets = [metrics.link_budget("DL", cfg), metrics.link_budget("UL", cfg, args.bandwidth)]
    labels = [label for label, _ in budgets[0].rows()]
    width = max(len(x) for x in labels)
    print(f"{'':<{width}}  {'DL':>12}  {'UL':>12}")
    for k, label in enumerate(labels):
        dl, ul = budgets[0].rows()[k][1], budgets[1].rows()[k][1]
        print(f"{label:<{width}}  {dl:>12.2f}  {ul:>12.2f}")
    if args.out is not None:
        metrics.write_link_budget(Path(args.out) / "link_budget.csv", budgets)
    return EXIT_OK


def cmd_traffic(args, cfg):
    rate = traffic.average_report_rate()
    bits = traffic.average_bit_rate(cfg.mean_packet_bytes)
    total = traffic.total_bit_rate(cfg.num_terminals, cfg.mean_packet_bytes)
    model = traffic.PacketSizeModel(cfg.pareto_min, cfg.pareto_shape, cfg.pareto_cap)
    _print_table([
        ("report_rate_packets_per_s_per_terminal", rate),
        ("bit_rate_bps_per_terminal", bits),
        ("terminals_per_sector", cfg.num_terminals),
        ("bit_rate_bps_per_sector", total),
        ("nominal_packet_bytes", cfg.mean_packet_bytes),
        ("payload_model_mean_bytes", model.mean()),
    ])
    return EXIT_OK


def cmd_dump_layout(args, cfg):
    sim = Simulator(cfg, layout_only=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    topology.write_layout_csv(sim.sites, sim.terminals, out / "sites.csv", out / "terminals.csv")
    print(f"wrote {out / 'sites.csv'} and {out / 'terminals.csv'}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "mcl": cmd_mcl, "traffic": cmd_traffic, "dump-layout": cmd_dump_layout}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("nbiot-sls: a subcommand is required (run, mcl, traffic, dump-layout)")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = make_config(args)
    except (ConfigError, ConfigParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot read {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (topology.DropError, channel.ShadowingError) as exc:
        # the configuration cannot be realized (too many terminals, grid too large)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, metrics.MetricsError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
