"""Command-line entry point.

    xcsniche run <config>
    xcsniche niches <config> [--composition]
    xcsniche oracle optimal-pop <problem>
    xcsniche oracle grid-steps <map>
    xcsniche plotdata <dir>

Exit status is 0 on success, 1 on configuration errors and 2 on runtime errors.
"""

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .core import Classifier, Population
from .envs import BooleanProblem, load_grid, optimal_population_oracle, optimal_steps_oracle
from .harness import aggregate_csv, plot_series, read_run_csv, run_batch, run_csv, run_single


def _prepare_output(loaded, override):
    out = Path(override) if override else loaded.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(loaded.text)
    manifest = {
        "tool": "xcsniche",
        "version": __version__,
        "seed": loaded.experiment.base_seed,
        "config": dict(sorted(loaded.raw.items())),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return out


def cmd_run(args):
    loaded = load_config(args.config)
    out = _prepare_output(loaded, args.output)
    agg = run_batch(loaded.experiment, n_jobs=args.jobs or loaded.jobs)
    (out / "aggregate.csv").write_text(aggregate_csv(agg))
    for stats in agg.runs:
        (out / f"run_{stats.run_index:03d}.csv").write_text(run_csv(stats))
    first = agg.runs[0]
    (out / "population_bc.txt").write_text(first.population_bc)
    (out / "population_ac.txt").write_text(first.population_ac)
    s = agg.summary
    print(f"{agg.problem} N={agg.n} n_lp={agg.n_learning} runs={len(agg.runs)}")
    for phase in ("bc", "ac"):
        print(f"  {phase}: |P|={s[f'pop_{phase}_mean']:.1f}±{s[f'pop_{phase}_std']:.1f} "
              f"|CAN|={s[f'can_{phase}_mean']:.1f}±{s[f'can_{phase}_std']:.1f} "
              f"|MAN|={s[f'man_{phase}_mean']:.1f}±{s[f'man_{phase}_std']:.1f}")
    print(f"results written to {out}")
    return 0


def cmd_niches(args):
    loaded = load_config(args.config)
    out = _prepare_output(loaded, args.output)
    stats = run_single(loaded.experiment, 0, timeline=True, composition=args.composition)
    path = out / "niches.jsonl"
    path.write_text("".join(entry.to_json() + "\n" for entry in stats.timeline))
    print(f"{len(stats.timeline)} checkpoints written to {path}")
    return 0


def parse_problem(spec):
    """``MP6``/``MAJ4`` or ``multiplexer:6``/``majority:4``."""
    m = re.fullmatch(r"(?i)(mp|maj|multiplexer|majority)[:]?(\d+)", spec.strip())
    if not m:
        raise ConfigError(f"cannot parse problem {spec!r}; use e.g. MP6 or MAJ4")
    kind = "multiplexer" if m.group(1).lower() in ("mp", "multiplexer") else "majority"
    try:
        return BooleanProblem(kind, int(m.group(2)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_oracle(args):
    if args.kind == "grid-steps":
        print(optimal_steps_oracle(load_grid(args.target)))
        return 0
    problem = parse_problem(args.target)
    rules = optimal_population_oracle(problem)
    pop = Population(problem.n_bits, problem.n_actions)
    for cond, action in sorted(rules):
        p = problem.reward(cond.replace("#", "0"), action)
        pop.add(Classifier(cond, action, p=float(p), epsilon=0.0, F=1.0))
    out = Path(args.output or f"optimal_{problem.name.lower()}.txt")
    out.write_text(pop.dumps())
    print(len(rules))
    return 0


def cmd_plotdata(args):
    folder = Path(args.dir)
    files = sorted(folder.glob("run_*.csv"))
    if not files:
        raise ValueError(f"no run_*.csv files in {folder}")
    runs = [read_run_csv(f.read_text()) for f in files]
    rows = plot_series(runs, names=[f.name for f in files])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    out = Path(args.output) if args.output else folder / "plotdata.csv"
    out.write_text(buf.getvalue())
    print(f"{len(rows)} checkpoints from {len(files)} runs written to {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="xcsniche", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"xcsniche {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a batch of experiments")
    p.add_argument("config")
    p.add_argument("--output", help="override output.dir")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("niches", help="export the niche timeline of one run")
    p.add_argument("config")
    p.add_argument("--composition", action="store_true", help="include niche members")
    p.add_argument("--output", help="override output.dir")
    p.set_defaults(func=cmd_niches)

    p = sub.add_parser("oracle", help="validation oracles")
    p.add_argument("kind", choices=["optimal-pop", "grid-steps"])
    p.add_argument("target", help="problem (e.g. MP6) or map name/path")
    p.add_argument("--output", help="population dump path for optimal-pop")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plotdata", help="aggregate per-run CSVs into mean/std series")
    p.add_argument("dir")
    p.add_argument("--output")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
