"""Command-line entry point.

    graphbandit run --config cfg.json [--out DIR] [--jobs N]
    graphbandit bounds --config cfg.json
    graphbandit graph --spec star:5 [--out graph.json]

Exit status: 0 on success, 2 for configuration/usage errors, 1 for failures
while running.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bounds import POLICY_BOUNDS, BoundInputs
from .config import ConfigError, load_config
from .environment import gap_profile
from .graph import greedy_clique_cover_size, parse_graph_spec
from .harness import resolve_jobs, run_experiment, summarize, write_outputs

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphbandit", description="Bandits with graph feedback: simulations and bounds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment and write CSV/JSON outputs")
    run.add_argument("--config", required=True, help="experiment config (JSON)")
    run.add_argument("--out", help="output directory (overrides output_dir in the config)")
    run.add_argument("--jobs", type=int, help="worker processes (default: $GRAPHBANDIT_JOBS or 1)")

    bounds = sub.add_parser("bounds", help="print the regret bounds that apply to a config")
    bounds.add_argument("--config", required=True)

    graph = sub.add_parser("graph", help="generate a graph and print or write it as JSON")
    graph.add_argument("--spec", required=True, help='e.g. "star:5", "gnp:20:0.3:42"')
    graph.add_argument("--out", help="write here instead of standard output")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    try:
        jobs = resolve_jobs(args.jobs)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if gap_profile(config.reward_model()).multiple_optimal:
        print("warning: several arms share the best mean; the lowest index is treated as optimal",
              file=sys.stderr)
    result = run_experiment(config, jobs)
    out = Path(args.out or config.output_dir)
    write_outputs(result, out)
    final = [s for s in summarize(result.records) if s.t == config.horizon]
    for s in final:
        print(f"{s.policy:<28} T={s.t:<9} mean regret {s.mean:12.3f}  (sd {s.std:.3f}, n={s.replications})")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    config = load_config(args.config)
    graph = config.feedback_graph()
    profile = gap_profile(config.reward_model())
    specs = config.policy_specs()
    base = BoundInputs(config.horizon, specs[0].resolved_delta(config.horizon), profile.gaps, graph, config.c_ts)
    print(f"k = {graph.k}   T = {config.horizon}")
    print(f"alpha (independence number)    {base.alpha}")
    print(f"W (max gap-weighted ind. sum)  {base.W:.6g}")
    print(f"greedy clique cover size       {greedy_clique_cover_size(graph)}")
    print(f"delta_min                      {f'{profile.delta_min:.6g}' if profile.delta_min is not None else 'absent'}")
    print()
    print(f"{'policy':<28} {'bound':<22} {'value':>14}")
    for spec in specs:
        b = BoundInputs(config.horizon, spec.resolved_delta(config.horizon), profile.gaps, graph, config.c_ts)
        for name, fn in POLICY_BOUNDS[spec.kind].items():
            note = "  (up to the hidden constant c_ts)" if spec.kind == "ts_n" else ""
            print(f"{spec.label:<28} {name:<22} {fn(b):>14.6g}{note}")
    return EXIT_OK


def _cmd_graph(args) -> int:
    try:
        g = parse_graph_spec(args.spec)
    except ValueError as err:
        raise ConfigError(f"--spec: {err}") from None
    text = g.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = {"run": _cmd_run, "bounds": _cmd_bounds, "graph": _cmd_graph}[args.command]
    try:
        return handler(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as err:  # noqa: BLE001 - top-level boundary
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
