"""End-to-end acceptance checks. The long reproductions load the shipped configs
so the settings under test are the ones users run."""

import itertools
import random
import statistics
from pathlib import Path

import pytest

from xcsniche.cli import main
from xcsniche.config import load_config
from xcsniche.core import Classifier, Parameters, Population, condition_matches, is_more_general
from xcsniche.engine import XCS, generate_match_set, run_ga
from xcsniche.envs import BooleanProblem, optimal_population_oracle, optimal_steps_oracle
from xcsniche.harness import run_batch
from xcsniche.niche import can, can_t, man, stamp_action_set

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def experiment(name):
    return load_config(CONFIGS / f"{name}.cfg").experiment


def test_oracle_sizes(acceptance):
    expected = {("multiplexer", 6): 16, ("multiplexer", 11): 32, ("majority", 3): 12,
                ("majority", 4): 20, ("majority", 5): 40, ("majority", 6): 70}
    got = {key: len(optimal_population_oracle(BooleanProblem(*key))) for key in expected}
    ok = got == expected
    acceptance("1 oracle |O|", ok, ", ".join(f"{BooleanProblem(*k).name}={v}" for k, v in got.items()))
    assert ok


@pytest.mark.slow
def test_mp6_end_to_end(acceptance):
    config = experiment("mp6")
    assert (config.params.n, config.n_learning, config.n_runs) == (400, 10000, 20)
    agg = run_batch(config)
    exact = sum(r.after["pop"] == r.after["can"] == r.after["man"] == 16 for r in agg.runs)
    perfect = sum(r.final_performance == 1.0 for r in agg.runs)
    ok = exact >= 18 and perfect == 20
    acceptance("2 MP6", ok, f"|P|=|CAN|=MAN=16 in {exact}/20 runs, 100% final performance in {perfect}/20")
    assert ok


@pytest.mark.slow
def test_mp11_end_to_end(acceptance):
    config = experiment("mp11")
    assert (config.params.n, config.n_learning, config.n_runs) == (1000, 20000, 20)
    agg = run_batch(config)
    mean, std = agg.summary["can_ac_mean"], agg.summary["can_ac_std"]
    ok = round(mean, 1) == 32.0 and std <= 0.5
    acceptance("3 MP11", ok, f"|CAN|_ac = {mean:.2f} ± {std:.2f}")
    assert ok


@pytest.mark.slow
def test_maj3_end_to_end(acceptance):
    config = experiment("maj3")
    assert (config.params.n, config.n_learning, config.n_runs) == (500, 10000, 20)
    agg = run_batch(config)
    can_mean, man_mean = agg.summary["can_ac_mean"], agg.summary["man_ac_mean"]
    overlap = sum(r.after["man"] > r.after["can"] for r in agg.runs)
    ok = abs(can_mean - 12.9) <= 2.5 and abs(man_mean - 15.9) <= 5.0 and overlap >= 18
    acceptance("4 MAJ3", ok, f"|CAN|_ac = {can_mean:.2f}, MAN_ac = {man_mean:.2f}, "
                             f"MAN > CAN in {overlap}/20 runs")
    assert ok


@pytest.mark.slow
def test_woods1_end_to_end(acceptance):
    config = experiment("woods1")
    assert (config.params.n, config.n_learning, config.n_runs) == (800, 5000, 20)
    agg = run_batch(config)
    pop, can_ac = agg.summary["pop_ac_mean"], agg.summary["can_ac_mean"]
    steps = statistics.fmean(r.final_performance for r in agg.runs)
    oracle = optimal_steps_oracle(config.problem)
    ok = abs(pop - 32) <= 2 and abs(can_ac - 31.8) <= 2 and abs(steps - oracle) <= 0.05 * oracle
    acceptance("5 Woods1", ok, f"|P|_ac = {pop:.2f}, |CAN|_ac = {can_ac:.2f}, "
                               f"steps = {steps:.3f} vs optimum {oracle}")
    assert ok


def test_two_rule_niche_scenario(acceptance):
    pop = Population(3, 2)
    pop.add(Classifier("11#", 1, exp=1, ats=405, L=[405, 400], l_max=4))
    pop.add(Classifier("1#1", 1, exp=1, ats=403, L=[403, 400], l_max=4))
    got = (len(can(pop)), can_t(pop, 1), man(pop)[0])
    ok = got == (2, {400}, 1.5)
    acceptance("6 two-rule niche scenario", ok, f"|CAN|={got[0]}, can_1={got[1]}, MAN={got[2]}")
    assert ok


def _implication_exhaustive(n):
    conds = ["".join(c) for c in itertools.product("01#", repeat=n)]
    inputs = ["".join(b) for b in itertools.product("01", repeat=n)]
    matched = {c: frozenset(i for i in inputs if condition_matches(c, i)) for c in conds}
    return all(is_more_general(g, s) == (matched[s] < matched[g]) for g in conds for s in conds)


def _budget_fuzz(cycles):
    rng = random.Random(11)
    params = Parameters(n=60, theta_ga=0, theta_del=5)
    pop = Population(8, 3)
    for t in range(1, cycles + 1):
        x = rng.getrandbits(8)
        m = generate_match_set(pop, x, t, params, rng)
        a = rng.randrange(3)
        aset = [cl for cl in m if cl.action == a]
        for cl in aset:
            cl.exp += 1
            cl.epsilon = rng.random() * 20
            cl.F = rng.random()
        run_ga(aset, pop, x, t, params, rng)
        if pop.numerosity > params.n or pop.numerosity != sum(cl.num for cl in pop):
            return False
    return True


def _stamping_fuzz(trials):
    rng = random.Random(5)
    for _ in range(trials):
        l_max = rng.randint(1, 6)
        rules = [Classifier("1#", 0, l_max=l_max) for _ in range(5)]
        t = 0
        for _ in range(50):
            t += rng.randint(1, 4)
            stamp_action_set([r for r in rules if rng.random() < 0.5], t)
            for r in rules:
                hist = list(r.L)
                if len(hist) > l_max or any(a <= b for a, b in zip(hist, hist[1:])):
                    return False
                if hist and hist[0] != r.ats:
                    return False
    return True


def _outputs_identical(tmp_path):
    cfg = tmp_path / "det.cfg"
    cfg.write_text("problem.size = 6\nrun.learningProblems = 1000\nrun.condensationProblems = 500\n"
                   "run.runs = 2\nrun.checkpointInterval = 250\n")
    for out in ("a", "b"):
        if main(["run", str(cfg), "--output", str(tmp_path / out)]) != 0:
            return False
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    return all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)


def _condensation_monotone():
    problem = BooleanProblem("multiplexer", 6)
    for seed in range(3):
        xcs = XCS(6, 2, Parameters(n=400), random_state=seed)
        rng = xcs.rng
        for step in range(8000):
            if step == 5000:
                xcs.condensing = True
                rules = xcs.population.distinct_rules()
            x = rng.getrandbits(6)
            xcs.single_step(x, lambda a: problem.reward(x, a))
            if xcs.condensing:
                now = xcs.population.distinct_rules()
                if not now <= rules:
                    return False
                rules = now
    return True


def test_property_suites(acceptance, tmp_path):
    results = {
        "generality/matching implication exhaustive to n=6": all(
            _implication_exhaustive(n) for n in range(1, 7)),
        "sum num <= N over 1e5 GA/deletion cycles": _budget_fuzz(100_000),
        "L monotone and bounded under fuzzed stamping": _stamping_fuzz(2000),
        "byte-identical seeded outputs": _outputs_identical(tmp_path),
        "condensation never adds rules": _condensation_monotone(),
    }
    ok = all(results.values())
    acceptance("7 property suites", ok,
               "; ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in results.items()))
    assert ok
