import pytest

from xcsniche.core import Classifier, Parameters, Population
from xcsniche.engine import EXPLOIT, XCS
from xcsniche.envs import BooleanProblem, load_grid, parse_grid
from xcsniche.harness import (
    AGGREGATE_COLUMNS, RUN_COLUMNS, ExperimentConfig, RunError, aggregate, aggregate_csv,
    multi_step_episode, plot_series, read_run_csv, run_batch, run_csv, run_single,
)


def small_config(**kw):
    base = dict(problem=BooleanProblem("multiplexer", 6), params=Parameters(n=400),
                n_learning=2000, n_condensation=1000, checkpoint_interval=500, final_window=200)
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_is_deterministic():
    a = run_single(small_config(), 3)
    b = run_single(small_config(), 3)
    assert a == b
    assert run_csv(a) == run_csv(b)
    assert a.seed == 3
    assert run_single(small_config(), 4).population_ac != a.population_ac


def test_checkpoints_strictly_increasing():
    stats = run_single(small_config(checkpoint_interval=700), 0)
    points = [row["checkpoint"] for row in stats.checkpoints]
    assert points == [700, 1400, 2000, 2100, 2800, 3000]
    assert list(stats.checkpoints[0]) == RUN_COLUMNS


def test_condensation_shrinks_population():
    stats = run_single(small_config(n_learning=4000, n_condensation=4000), 1)
    assert stats.after["pop"] <= stats.before["pop"]
    assert stats.final_performance == 1.0


def test_zero_learning_problems():
    stats = run_single(small_config(n_learning=0, n_condensation=100), 0)
    assert stats.before == {"pop": 0, "can": 0, "man": 0.0, "man_std": 0.0}
    assert stats.checkpoints[0]["checkpoint"] == 0
    assert len(Population.loads(stats.population_bc, l_max=40)) == 0
    # with no learning phase the rule base is seeded by covering during condensation
    assert len(Population.loads(stats.population_ac, l_max=40)) > 0


def test_single_run_batch_has_zero_std():
    agg = run_batch(small_config(n_runs=1))
    assert all(v == 0 for k, v in agg.summary.items() if k.endswith("_std"))
    header, row = aggregate_csv(agg).splitlines()
    assert header.split(",") == AGGREGATE_COLUMNS
    assert row.startswith("MP6,400,2000,")


def test_aggregate_invariant_under_run_order():
    config = small_config(n_runs=3, n_learning=500, n_condensation=100)
    runs = [run_single(config, i) for i in range(3)]
    a = aggregate(config, runs).summary
    b = aggregate(config, runs[::-1]).summary
    assert a == pytest.approx(b)


def test_parallel_batch_matches_serial():
    config = small_config(n_runs=2, n_learning=300, n_condensation=100)
    serial = run_batch(config)
    parallel = run_batch(config, n_jobs=2)
    assert serial.summary == parallel.summary
    assert [r.population_ac for r in serial.runs] == [r.population_ac for r in parallel.runs]


def test_failed_run_reports_index():
    class Broken(BooleanProblem):
        def reward(self, inp, action):
            raise ValueError("boom")
    config = small_config(problem=Broken("multiplexer", 6), n_runs=2)
    with pytest.raises(RunError, match="run 0"):
        run_batch(config)


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(n_runs=0)
    with pytest.raises(ValueError):
        small_config(exploration="greedy")


def test_run_csv_roundtrip():
    stats = run_single(small_config(n_learning=500, n_condensation=0), 0)
    rows = read_run_csv(run_csv(stats))
    assert [r["checkpoint"] for r in rows] == [500.0]
    assert rows[0]["pop_macro"] == stats.checkpoints[0]["pop_macro"]


def test_plot_series():
    a = [{"checkpoint": 1.0, **{c: 1.0 for c in RUN_COLUMNS[1:]}}]
    b = [{"checkpoint": 1.0, **{c: 3.0 for c in RUN_COLUMNS[1:]}}]
    out = plot_series([a, b])
    assert out[0]["can_mean"] == 2.0 and out[0]["can_std"] == 1.0
    c = [{"checkpoint": 2.0, **{col: 3.0 for col in RUN_COLUMNS[1:]}}]
    with pytest.raises(ValueError, match="run_c.csv"):
        plot_series([a, c], names=["run_a.csv", "run_c.csv"])


def goal_adjacent_engine(grid):
    """Hand-built converged policy: from every cell, step onto the goal."""
    engine = XCS(grid.n_bits, 8, Parameters(n=400), random_state=0)
    for pos in grid.empty_cells:
        goal_moves = {a for a in range(8) if grid.cell(grid.neighbor(pos, a)) == "F"}
        for a in range(8):
            engine.population.add(Classifier(grid.sense(pos), a, p=1000.0 if a in goal_moves else 0.0,
                                              F=1.0, exp=50, l_max=40))
    return engine


def test_episode_next_to_goal_takes_one_step():
    grid = parse_grid("F..\n...\n...\n")
    engine = goal_adjacent_engine(grid)
    for _ in range(20):
        steps, reached, _ = multi_step_episode(engine, grid, EXPLOIT, learn=False)
        assert (steps, reached) == (1, True)


def test_episode_step_cap():
    grid = load_grid("woods1")
    params = Parameters(n=400, max_steps=1)
    engine = XCS(grid.n_bits, 8, params, random_state=0)
    outcomes = [multi_step_episode(engine, grid, EXPLOIT)[:2] for _ in range(200)]
    assert all(steps == 1 for steps, _ in outcomes)
    assert any(not reached for _, reached in outcomes)


def test_short_grid_run():
    config = ExperimentConfig(load_grid("woods1"), Parameters(n=800), n_learning=200,
                              n_condensation=50, checkpoint_interval=100, final_window=50)
    stats = run_single(config, 0)
    assert [r["checkpoint"] for r in stats.checkpoints] == [100, 200, 250]
    assert all(1 <= r["performance"] <= 100 for r in stats.checkpoints)
