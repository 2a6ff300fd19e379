"""Experiment protocol: learning problems alternating with test problems,
a condensation phase, checkpointed metrics and multi-run aggregation."""

import csv
import io
import random
import statistics
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .core import Parameters
from .engine import EXPLOIT, EXPLORE, XCS, compute_target
from .envs import REWARD, BooleanProblem, Grid
from .niche import niche_stats, timeline_checkpoint

RUN_COLUMNS = ["checkpoint", "performance", "error", "pop_macro", "can", "man_mean", "man_std"]
SUMMARY_KEYS = ["pop", "can", "man"]
AGGREGATE_COLUMNS = ["problem", "N", "n_lp"] + [
    f"{metric}_{phase}_{stat}"
    for phase in ("bc", "ac") for metric in SUMMARY_KEYS for stat in ("mean", "std")
]


@dataclass
class ExperimentConfig:
    problem: object
    params: Parameters = field(default_factory=Parameters)
    n_learning: int = 10000
    n_condensation: int = 10000
    n_runs: int = 1
    base_seed: int = 0
    checkpoint_interval: int = 1000
    exploration: str = EXPLORE
    window: int = 50
    final_window: int = 1000

    def __post_init__(self):
        if self.n_learning < 0 or self.n_condensation < 0:
            raise ValueError("problem counts must be non-negative")
        if self.n_runs < 1 or self.checkpoint_interval < 1 or self.window < 1:
            raise ValueError("runs, checkpoint interval and window must be >= 1")
        if self.exploration not in (EXPLORE, "biased"):
            raise ValueError(f"unknown exploration mode {self.exploration!r}")

    @property
    def multi_step(self):
        return isinstance(self.problem, Grid)

    @property
    def problem_name(self):
        if isinstance(self.problem, BooleanProblem):
            return self.problem.name
        return self.problem.name or "grid"


@dataclass
class RunStats:
    run_index: int
    seed: int
    checkpoints: list = field(default_factory=list)
    before: dict = field(default_factory=dict)
    after: dict = field(default_factory=dict)
    final_performance: float = 0.0
    population_bc: str = ""
    population_ac: str = ""
    timeline: list = field(default_factory=list)


@dataclass
class AggregateStats:
    problem: str
    n: int
    n_learning: int
    runs: list
    summary: dict

    def row(self):
        out = {"problem": self.problem, "N": self.n, "n_lp": self.n_learning}
        out.update(self.summary)
        return out


class RunError(RuntimeError):
    pass


def multi_step_episode(engine, grid, mode, params=None, rng=None, learn=True):
    """Run one episode from a random empty cell. Returns ``(steps, reached_goal, error)``.

    Each action set is reinforced one step late with the discounted value of
    the next state; the final action set gets the goal reward directly. The
    GA only runs when ``mode`` is not exploit.
    """
    params = params or engine.params
    rng = rng or engine.rng
    ga = mode != EXPLOIT
    pos = rng.choice(grid.empty_cells)
    prev_set, prev_reward, prev_x, prev_pred = None, 0, None, 0.0
    errors = []
    for step in range(1, params.max_steps + 1):
        x, match_set, pa = engine.perceive(grid.sense(pos))
        action = engine.choose(pa, mode)
        action_set = engine.act(match_set, action)
        pos, reward, done = grid.act(pos, action)
        if prev_set is not None:
            target = compute_target(prev_reward, pa, params.gamma)
            errors.append(abs(target - prev_pred))
            if learn:
                engine.reinforce(prev_set, target, prev_x, ga=ga)
        if done:
            errors.append(abs(reward - pa[action]))
            if learn:
                engine.reinforce(action_set, reward, x, ga=ga)
            return step, True, statistics.fmean(errors)
        prev_set, prev_reward, prev_x, prev_pred = action_set, reward, x, pa[action]
    return params.max_steps, False, statistics.fmean(errors) if errors else 0.0


def _summary(population):
    can_size, man_mean, man_std = niche_stats(population)
    return {"pop": len(population), "can": can_size, "man": man_mean, "man_std": man_std}


def run_single(config, run_index, timeline=False, composition=False):
    """Execute one seeded run (learning, then condensation) and return its stats."""
    seed = config.base_seed + run_index
    rng = random.Random(seed)
    problem = config.problem
    params = config.params
    engine = XCS(problem.n_bits, problem.n_actions, params, rng)
    stats = RunStats(run_index, seed)
    perf = deque(maxlen=config.window)
    err = deque(maxlen=config.window)
    final = deque(maxlen=config.final_window)
    learn_mode = config.exploration
    n_bits = problem.n_bits

    def test():
        if config.multi_step:
            steps, _, error = multi_step_episode(engine, problem, EXPLOIT)
            return steps, error
        x = rng.getrandbits(n_bits)
        action, reward, pa = engine.single_step(
            x, lambda a: problem.reward(x, a), mode=EXPLOIT, learn=False)
        return float(reward == REWARD), abs(reward - pa[action])

    def learn():
        if config.multi_step:
            multi_step_episode(engine, problem, learn_mode)
            return
        x = rng.getrandbits(n_bits)
        engine.single_step(x, lambda a: problem.reward(x, a), mode=learn_mode, learn=True)

    def checkpoint(count):
        if stats.checkpoints and stats.checkpoints[-1]["checkpoint"] == count:
            return
        can_size, man_mean, man_std = niche_stats(engine.population)
        stats.checkpoints.append({
            "checkpoint": count,
            "performance": statistics.fmean(perf) if perf else 0.0,
            "error": statistics.fmean(err) if err else 0.0,
            "pop_macro": len(engine.population),
            "can": can_size,
            "man_mean": man_mean,
            "man_std": man_std,
        })
        if timeline:
            stats.timeline.append(timeline_checkpoint(engine.population, count, composition))

    total = config.n_learning + config.n_condensation
    if config.n_learning == 0:
        checkpoint(0)
        stats.before = _summary(engine.population)
        stats.population_bc = engine.population.dumps()
    for count in range(1, total + 1):
        if count == config.n_learning + 1:
            engine.condensing = True
        learn()
        outcome, error = test()
        perf.append(outcome)
        err.append(error)
        final.append(outcome)
        if count % config.checkpoint_interval == 0:
            checkpoint(count)
        if count == config.n_learning:
            checkpoint(count)
            stats.before = _summary(engine.population)
            stats.population_bc = engine.population.dumps()
    checkpoint(total)
    stats.after = _summary(engine.population)
    stats.population_ac = engine.population.dumps()
    stats.final_performance = statistics.fmean(final) if final else 0.0
    return stats


def _run_indexed(args):
    config, index, timeline, composition = args
    try:
        return run_single(config, index, timeline, composition)
    except Exception as exc:
        raise RunError(f"run {index} failed: {exc}") from exc


def aggregate(config, runs):
    summary = {}
    for phase, attr in (("bc", "before"), ("ac", "after")):
        for metric in SUMMARY_KEYS:
            values = [getattr(r, attr)[metric] for r in runs]
            summary[f"{metric}_{phase}_mean"] = statistics.fmean(values)
            summary[f"{metric}_{phase}_std"] = statistics.pstdev(values)
    return AggregateStats(config.problem_name, config.params.n, config.n_learning, list(runs), summary)


def run_batch(config, n_jobs=1):
    """Run ``config.n_runs`` independent seeded runs and aggregate mean and std per metric."""
    jobs = [(config, i, False, False) for i in range(config.n_runs)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            runs = list(pool.map(_run_indexed, jobs))
    else:
        runs = [_run_indexed(job) for job in jobs]
    return aggregate(config, runs)


def run_csv(stats):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RUN_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(stats.checkpoints)
    return buf.getvalue()


def aggregate_csv(agg):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=AGGREGATE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerow(agg.row())
    return buf.getvalue()


def read_run_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and list(rows[0]) != RUN_COLUMNS:
        raise ValueError(f"unexpected columns {list(rows[0])}")
    return [{k: float(v) for k, v in row.items()} for row in rows]


def plot_series(runs_rows, names=None):
    """Mean and standard deviation of every metric per checkpoint across runs.

    ``runs_rows`` holds one list of rows per run, all on the same checkpoint grid.
    """
    if not runs_rows:
        raise ValueError("no runs")
    grids = [tuple(row["checkpoint"] for row in rows) for rows in runs_rows]
    bad = [names[i] if names else str(i) for i, g in enumerate(grids) if g != grids[0]]
    if bad:
        raise ValueError(f"checkpoint grids differ from the first run in: {', '.join(bad)}")
    metrics = RUN_COLUMNS[1:]
    out = []
    for i, cp in enumerate(grids[0]):
        row = {"checkpoint": cp}
        for m in metrics:
            values = [rows[i][m] for rows in runs_rows]
            row[f"{m}_mean"] = statistics.fmean(values)
            row[f"{m}_std"] = statistics.pstdev(values)
        out.append(row)
    return out
