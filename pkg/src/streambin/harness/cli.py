"""`bench` CLI: run scenarios, replay them for profiling effects, and plot."""

from __future__ import annotations

import argparse
import json
import sys

from streambin.harness.plots import KINDS, plot
from streambin.harness.runner import replay_runs, run_scenario_file
from streambin.harness.scenario import load_scenario


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bench", description="experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out", required=True)

    p_replay = sub.add_parser("replay", help="repeated runs with shared profiles")
    p_replay.add_argument("--scenario", required=True)
    p_replay.add_argument("--runs", type=int, default=10)
    p_replay.add_argument("--out", required=True)

    p_plot = sub.add_parser("plot", help="chart a finished run")
    p_plot.add_argument("--run-dir", required=True)
    p_plot.add_argument("--kind", required=True, choices=KINDS)
    p_plot.add_argument("--out")

    args = parser.parse_args(argv)
    if args.command == "run":
        result = run_scenario_file(args.scenario, args.out)
        print(json.dumps(result.summary, indent=2))
        return 0
    if args.command == "replay":
        summaries = replay_runs(load_scenario(args.scenario), args.runs, args.out)
        for s in summaries:
            print(f"run {s['run']}: makespan {s['makespan_s']:.1f}s "
                  f"mean|error| {s['mean_abs_error_pp']:.2f}pp")
        return 0
    if args.command == "plot":
        path = plot(args.run_dir, args.kind, args.out)
        print(path)
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
