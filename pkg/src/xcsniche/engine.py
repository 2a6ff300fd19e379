"""XCS performance, reinforcement and discovery components.

Follows the usual algorithmic description of XCS (macroclassifiers, MAM
updates, accuracy-based fitness, niche GA in the action set, vote-based
deletion, GA and action-set subsumption). Action-set formation additionally
stamps each member for niche tracking.
"""

import random

from .core import Classifier, Parameters, Population, create_covering_classifier
from .niche import stamp_action_set

EXPLORE, EXPLOIT, BIASED = "explore", "exploit", "biased"


def _as_int(inp, n_bits=None):
    if isinstance(inp, str):
        if n_bits is not None and len(inp) != n_bits:
            raise ValueError(f"input length {len(inp)} != {n_bits}")
        return int(inp, 2)
    return inp


def generate_match_set(population, inp, t, params, rng, cover=True):
    """Return all matching rules, covering every unadvocated action first.

    With ``cover=False`` covering happens only when nothing matches at all.
    """
    n = population.n_bits
    x = _as_int(inp, n)
    while True:
        match_set = [cl for cl in population if x & cl.care == cl.bits]
        present = {cl.action for cl in match_set}
        if len(present) == population.n_actions or (match_set and not cover):
            return match_set
        for action in range(population.n_actions):
            if action not in present:
                population.add(create_covering_classifier((x, n), action, t, params, rng))
        if population.numerosity <= params.n:
            # nothing could have been deleted, no need to rescan
            return [cl for cl in population if x & cl.care == cl.bits]
        delete_from_population(population, params, rng)


def compute_prediction_array(match_set, n_actions):
    """Fitness-weighted mean prediction per action; ``None`` for unadvocated actions."""
    if not match_set:
        raise ValueError("empty match set")
    num = [0.0] * n_actions
    den = [0.0] * n_actions
    seen = [False] * n_actions
    for cl in match_set:
        num[cl.action] += cl.p * cl.F
        den[cl.action] += cl.F
        seen[cl.action] = True
    out = []
    for a in range(n_actions):
        if not seen[a]:
            out.append(None)
        elif den[a] > 0:
            out.append(num[a] / den[a])
        else:
            out.append(0.0)
    return out


def select_action(prediction_array, mode, p_explore, rng):
    present = [a for a, v in enumerate(prediction_array) if v is not None]
    if not present:
        raise ValueError("prediction array has no advocated action")
    if mode == EXPLORE or (mode == BIASED and rng.random() < p_explore):
        return rng.choice(present)
    if mode not in (EXPLOIT, BIASED):
        raise ValueError(f"unknown selection mode {mode!r}")
    best = max(prediction_array[a] for a in present)
    ties = [a for a in present if prediction_array[a] == best]
    return ties[0] if len(ties) == 1 else rng.choice(ties)


def best_action(prediction_array):
    """Deterministic argmax (lowest action on ties); used for scoring only."""
    best, arg = None, None
    for a, v in enumerate(prediction_array):
        if v is not None and (best is None or v > best):
            best, arg = v, a
    return arg


def generate_action_set(match_set, action, t, l_max=None):
    action_set = [cl for cl in match_set if cl.action == action]
    if not action_set:
        raise ValueError(f"no rule in the match set advocates action {action}")
    stamp_action_set(action_set, t, l_max)
    return action_set


def compute_target(reward, next_prediction_array=None, gamma=0.71):
    if next_prediction_array is None:
        return reward
    values = [v for v in next_prediction_array if v is not None]
    if not values:
        return reward
    return reward + gamma * max(values)


def accuracy(cl, params):
    if cl.epsilon < params.epsilon0:
        return 1.0
    return params.alpha * (cl.epsilon / params.epsilon0) ** -params.nu


def update_action_set(action_set, payoff, params):
    """Reinforce every member of the action set towards ``payoff``."""
    set_size = sum(cl.num for cl in action_set)
    if params.use_gradient:
        total_fitness = sum(cl.F for cl in action_set)
    beta = params.beta
    for cl in action_set:
        cl.exp += 1
        rate = 1.0 / cl.exp if cl.exp < 1.0 / beta else beta
        cl.epsilon += (abs(payoff - cl.p) - cl.epsilon) * rate
        p_rate = rate
        if params.use_gradient and total_fitness > 0:
            p_rate *= cl.F / total_fitness
        cl.p += (payoff - cl.p) * p_rate
        cl.as_size += (set_size - cl.as_size) * rate
    update_fitness(action_set, params)


def update_fitness(action_set, params):
    kappas = [accuracy(cl, params) * cl.num for cl in action_set]
    total = sum(kappas)
    for cl, k in zip(action_set, kappas):
        cl.F += params.beta * (k / total - cl.F)


def delete_from_population(population, params, rng):
    """Roulette-delete single copies until the numerosity budget holds."""
    while population.numerosity > params.n:
        members = list(population)
        total_f = sum(cl.F for cl in members)
        avg_f = total_f / population.numerosity
        threshold_f = params.delta * avg_f
        votes = []
        for cl in members:
            vote = cl.as_size * cl.num
            micro_f = cl.F / cl.num
            if cl.exp > params.theta_del and micro_f < threshold_f:
                vote *= avg_f / micro_f
            votes.append(vote)
        choice = rng.random() * sum(votes)
        victim = members[-1]
        for cl, vote in zip(members, votes):
            choice -= vote
            if choice <= 0:
                victim = cl
                break
        population.decrement(victim)


def action_set_subsumption(action_set, population, params):
    """Let the most general accurate, experienced member absorb the rules it covers.

    Returns the action set with absorbed rules removed.
    """
    best = None
    for cl in action_set:
        if cl.could_subsume(params):
            if best is None or cl.generality > best.generality:
                best = cl
    if best is None:
        return action_set
    kept = []
    for cl in action_set:
        if cl is not best and best.is_more_general(cl):
            k = cl.num
            population.remove(cl)
            population.increment(best, k)
        else:
            kept.append(cl)
    return kept


def _roulette(action_set, rng):
    total = sum(cl.F for cl in action_set)
    choice = rng.random() * total
    for cl in action_set:
        choice -= cl.F
        if choice <= 0:
            return cl
    return action_set[-1]


def _crossover(c1, c2, n, rng):
    """Two-point crossover on (care, bits) pairs."""
    i = int(rng.random() * (n + 1))
    j = int(rng.random() * (n + 1))
    if i > j:
        i, j = j, i
    if i == j:
        return c1, c2
    # bit mask covering string positions i .. j-1
    mask = ((1 << (n - i)) - 1) ^ ((1 << (n - j)) - 1)
    (a_care, a_bits), (b_care, b_bits) = c1, c2
    return (
        ((a_care & ~mask) | (b_care & mask), (a_bits & ~mask) | (b_bits & mask)),
        ((b_care & ~mask) | (a_care & mask), (b_bits & ~mask) | (a_bits & mask)),
    )


def _mutate(care, bits, x, n, mu, rng):
    """Niche mutation: a mutated position flips between ``#`` and the input bit."""
    for pos in range(n):
        if rng.random() < mu:
            m = 1 << (n - 1 - pos)
            if care & m:
                care &= ~m
                bits &= ~m
            else:
                care |= m
                bits |= x & m
    return care, bits


def run_ga(action_set, population, inp, t, params, rng):
    """Apply the steady-state niche GA to ``action_set`` if it is due.

    Returns True when the GA fired.
    """
    action_set = [cl for cl in action_set if cl.num > 0]
    if not action_set:
        return False
    set_size = sum(cl.num for cl in action_set)
    avg_ts = sum(cl.ts * cl.num for cl in action_set) / set_size
    if t - avg_ts <= params.theta_ga:
        return False
    for cl in action_set:
        cl.ts = t
    n = population.n_bits
    x = _as_int(inp, n)

    parent1 = _roulette(action_set, rng)
    parent2 = _roulette(action_set, rng)
    conds = [(parent1.care, parent1.bits), (parent2.care, parent2.bits)]
    if params.chi > 0 and rng.random() < params.chi:
        conds = list(_crossover(conds[0], conds[1], n, rng))
    if params.mu > 0:
        conds = [_mutate(c, b, x, n, params.mu, rng) for c, b in conds]

    p = (parent1.p + parent2.p) / 2
    eps = (parent1.epsilon + parent2.epsilon) / 2
    f = 0.1 * (parent1.F + parent2.F) / 2
    for care, bits in conds:
        child = Classifier(
            (care, bits, n), parent1.action, p=p, epsilon=eps, F=f, exp=0, ts=t,
            as_size=(parent1.as_size + parent2.as_size) / 2, num=1, ats=0, l_max=params.l_max,
        )
        if params.do_ga_subsumption:
            subsumer = next(
                (par for par in (parent1, parent2)
                 if par.num > 0 and par.does_subsume(child, params)),
                None,
            )
            if subsumer is not None:
                population.increment(subsumer)
                continue
        population.add(child)
    delete_from_population(population, params, rng)
    return True


class XCS:
    """A single XCS learner over ``n_bits`` inputs and ``n_actions`` actions.

    The clock advances once per action-set formation and drives both the GA
    time stamps and the niche stamps. ``condensing`` switches crossover and
    mutation off and restricts covering to empty match sets.
    """

    def __init__(self, n_bits, n_actions, params=None, random_state=None):
        self.params = params if params is not None else Parameters()
        self.population = Population(n_bits, n_actions)
        self.rng = random_state if isinstance(random_state, random.Random) else random.Random(random_state)
        self.time = 0
        self._condense_params = None

    @property
    def n_bits(self):
        return self.population.n_bits

    @property
    def n_actions(self):
        return self.population.n_actions

    @property
    def condensing(self):
        return self._condense_params is not None

    @condensing.setter
    def condensing(self, flag):
        self._condense_params = (
            self.params.replace(chi=0.0, mu=0.0, l_max=self.params.l_max) if flag else None)

    def _ga_params(self):
        return self._condense_params or self.params

    def perceive(self, inp):
        """Advance the clock and build the match set and prediction array for ``inp``."""
        self.time += 1
        x = _as_int(inp, self.n_bits)
        match_set = generate_match_set(
            self.population, x, self.time, self.params, self.rng, cover=not self.condensing)
        return x, match_set, compute_prediction_array(match_set, self.n_actions)

    def act(self, match_set, action):
        return generate_action_set(match_set, action, self.time)

    def choose(self, prediction_array, mode):
        return select_action(prediction_array, mode, self.params.p_explore, self.rng)

    def reinforce(self, action_set, payoff, x=None, ga=False):
        action_set = [cl for cl in action_set if cl.num > 0]
        if not action_set:
            return
        update_action_set(action_set, payoff, self.params)
        if self.params.do_as_subsumption:
            action_set = action_set_subsumption(action_set, self.population, self.params)
        if ga:
            run_ga(action_set, self.population, x, self.time, self._ga_params(), self.rng)

    def single_step(self, inp, reward_fn, mode=EXPLORE, learn=True):
        """One classification problem. Returns ``(action, reward, prediction_array)``.

        With ``learn=False`` the action set is formed (and stamped) but neither
        reinforced nor evolved.
        """
        x, match_set, pa = self.perceive(inp)
        action = self.choose(pa, mode)
        action_set = self.act(match_set, action)
        reward = reward_fn(action)
        if learn:
            self.reinforce(action_set, reward, x, ga=True)
        return action, reward, pa
