"""Benchmark problems: Boolean multiplexer / majority-on and Woods-style grids.

Also holds two validation oracles: the shortest-path average for a grid and
the optimal (accurate, maximally general) ternary population of a small
Boolean function.
"""

from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

REWARD = 1000

EMPTY = "."
GOALS = frozenset("FG")
OBSTACLES = frozenset("TQO")
CELLS = GOALS | OBSTACLES | {EMPTY}

# north first, then clockwise
DIRECTIONS = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]

CODES_2BIT = {EMPTY: "00", "T": "10", "F": "11"}
CODES_3BIT = {EMPTY: "000", "O": "010", "T": "010", "Q": "011", "F": "110", "G": "111"}

ORACLE_MAX_BITS = 13


def _check_bits(inp):
    if not inp or not set(inp) <= {"0", "1"}:
        raise ValueError(f"invalid bitstring {inp!r}")


def multiplexer_address_bits(n):
    k = 0
    while k + 2 ** k < n:
        k += 1
    if k + 2 ** k != n:
        raise ValueError(f"{n} is not a multiplexer size k + 2**k")
    return k


def multiplexer_eval(inp):
    """Value of the data bit addressed by the leading address bits."""
    _check_bits(inp)
    k = multiplexer_address_bits(len(inp))
    address = int(inp[:k], 2) if k else 0
    return int(inp[k + address])


def majority_eval(inp):
    """1 iff strictly more than half the bits are set (an exact tie gives 0)."""
    if not inp:
        raise ValueError("empty input")
    _check_bits(inp)
    return int(2 * inp.count("1") > len(inp))


@dataclass(frozen=True)
class BooleanProblem:
    kind: str
    n_bits: int

    n_actions = 2

    def __post_init__(self):
        if self.kind == "multiplexer":
            multiplexer_address_bits(self.n_bits)
        elif self.kind == "majority":
            if self.n_bits < 1:
                raise ValueError("majority needs at least one bit")
        else:
            raise ValueError(f"unknown Boolean problem kind {self.kind!r}")

    @property
    def name(self):
        return f"{'MP' if self.kind == 'multiplexer' else 'MAJ'}{self.n_bits}"

    def evaluate(self, inp):
        if len(inp) != self.n_bits:
            raise ValueError(f"{self.name} expects {self.n_bits} bits, got {len(inp)}")
        return multiplexer_eval(inp) if self.kind == "multiplexer" else majority_eval(inp)

    def evaluate_int(self, x):
        n = self.n_bits
        if self.kind == "majority":
            return int(2 * bin(x).count("1") > n)
        k = multiplexer_address_bits(n)
        data_len = n - k
        address = x >> data_len
        return (x >> (data_len - 1 - address)) & 1

    def reward(self, inp, action):
        value = self.evaluate_int(inp) if isinstance(inp, int) else self.evaluate(inp)
        return REWARD if action == value else 0

    def truth_table(self):
        """Function value for every input, indexed by the input's integer value."""
        return np.array([self.evaluate_int(x) for x in range(2 ** self.n_bits)], dtype=np.int8)


def boolean_step(problem, inp, action):
    return problem.reward(inp, action)


class GridError(ValueError):
    pass


class Grid:
    """A rectangular cell map. Cells use ``.`` for empty, ``T``/``Q``/``O`` obstacles, ``F``/``G`` goals."""

    def __init__(self, rows, toroidal=True, sensor_bits=2, name=None):
        self.rows = tuple(rows)
        self.height = len(self.rows)
        self.width = len(self.rows[0]) if self.rows else 0
        self.toroidal = toroidal
        self.sensor_bits = sensor_bits
        self.name = name
        self.n_actions = 8
        self._validate()
        self.empty_cells = [
            (r, c) for r in range(self.height) for c in range(self.width) if self.rows[r][c] == EMPTY
        ]
        self._senses = {pos: self._sense(pos) for pos in self.empty_cells}

    @property
    def n_bits(self):
        return 8 * self.sensor_bits

    def _validate(self):
        if self.sensor_bits not in (2, 3):
            raise GridError(f"sensors must be 2 or 3, got {self.sensor_bits}")
        if not self.rows or not self.width:
            raise GridError("empty map")
        codes = CODES_2BIT if self.sensor_bits == 2 else CODES_3BIT
        for r, row in enumerate(self.rows):
            if len(row) != self.width:
                raise GridError(f"ragged map: row {r} has {len(row)} cells, expected {self.width}")
            for c, ch in enumerate(row):
                if ch not in CELLS:
                    raise GridError(f"unknown cell {ch!r} at row {r}, column {c}")
                if ch not in codes:
                    raise GridError(
                        f"cell {ch!r} at row {r}, column {c} has no {self.sensor_bits}-bit sensor code")
        if not any(ch in GOALS for row in self.rows for ch in row):
            raise GridError("map has no goal")
        if not any(ch == EMPTY for row in self.rows for ch in row):
            raise GridError("map has no empty cell")
        dist = self._distances()
        unreachable = [
            (r, c) for r in range(self.height) for c in range(self.width)
            if self.rows[r][c] == EMPTY and (r, c) not in dist
        ]
        if unreachable:
            raise GridError(f"cells with no path to a goal: {unreachable}")

    def cell(self, pos):
        r, c = pos
        return self.rows[r][c]

    def neighbor(self, pos, action):
        """Cell reached by moving in direction ``action``; None when off a bounded map."""
        dr, dc = DIRECTIONS[action]
        r, c = pos[0] + dr, pos[1] + dc
        if self.toroidal:
            return r % self.height, c % self.width
        if 0 <= r < self.height and 0 <= c < self.width:
            return r, c
        return None

    def _sense(self, pos):
        codes = CODES_2BIT if self.sensor_bits == 2 else CODES_3BIT
        obstacle = codes["T"]
        out = []
        for action in range(8):
            nb = self.neighbor(pos, action)
            out.append(obstacle if nb is None else codes[self.cell(nb)])
        return "".join(out)

    def sense(self, pos):
        if self.cell(pos) != EMPTY:
            raise GridError(f"position {pos} is not an empty cell")
        return self._senses[pos]

    def act(self, pos, action):
        """Returns ``(new_pos, reward, done)``; obstacles leave the agent in place."""
        if self.cell(pos) != EMPTY:
            raise GridError(f"position {pos} is not an empty cell")
        target = self.neighbor(pos, action)
        if target is None or self.cell(target) in OBSTACLES:
            return pos, 0, False
        if self.cell(target) in GOALS:
            return target, REWARD, True
        return target, 0, False

    def _distances(self):
        """Steps-to-goal for every empty cell, by breadth-first search from the goals."""
        dist = {}
        frontier = deque()
        for r in range(self.height):
            for c in range(self.width):
                if self.rows[r][c] in GOALS:
                    dist[(r, c)] = 0
                    frontier.append((r, c))
        while frontier:
            pos = frontier.popleft()
            for action in range(8):
                # moves are reversible, so predecessors are the neighbours
                nb = self.neighbor(pos, action)
                if nb is None or nb in dist or self.cell(nb) != EMPTY:
                    continue
                dist[nb] = dist[pos] + 1
                frontier.append(nb)
        return {pos: d for pos, d in dist.items() if self.cell(pos) == EMPTY}

    def optimal_steps(self):
        dist = self._distances()
        return sum(dist[pos] for pos in self.empty_cells) / len(self.empty_cells)

    def to_text(self):
        header = f"toroidal={'true' if self.toroidal else 'false'} sensors={self.sensor_bits}"
        return "\n".join([header, *self.rows]) + "\n"


def parse_grid(text, name=None):
    """Parse a map: optional ``toroidal=... sensors=...`` header, ``;`` comment lines, then rows."""
    toroidal, sensors = True, 2
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith(";"):
            continue
        if "=" in line:
            if rows:
                raise GridError(f"line {lineno}: header after map rows")
            for tok in line.split():
                key, _, value = tok.partition("=")
                if key == "toroidal" and value in ("true", "false"):
                    toroidal = value == "true"
                elif key == "sensors" and value in ("2", "3"):
                    sensors = int(value)
                else:
                    raise GridError(f"line {lineno}: bad header token {tok!r}")
            continue
        rows.append(line.strip())
    return Grid(rows, toroidal=toroidal, sensor_bits=sensors, name=name)


def builtin_maps():
    return sorted(p.name[:-4] for p in resources.files("xcsniche.maps").iterdir()
                  if p.name.endswith(".txt"))


def load_grid(name_or_path):
    """Load a shipped map by name (e.g. ``woods1``) or a map file by path."""
    path = Path(name_or_path)
    if path.suffix or path.exists():
        return parse_grid(path.read_text(), name=path.stem)
    res = resources.files("xcsniche.maps").joinpath(f"{name_or_path.lower()}.txt")
    if not res.is_file():
        raise GridError(f"no built-in map {name_or_path!r}; available: {', '.join(builtin_maps())}")
    return parse_grid(res.read_text(), name=name_or_path.lower())


def sense(grid, pos):
    return grid.sense(pos)


def act(grid, pos, action):
    return grid.act(pos, action)


def optimal_steps_oracle(grid):
    return grid.optimal_steps()


def _constant_value_table(truth, n):
    """Value of ``truth`` on every ternary subcube; -1 where it is not constant.

    The result has shape ``(3,) * n`` with digit 2 standing for ``#``.
    """
    arr = truth.reshape((2,) * n) if n else truth
    for axis in range(n):
        lo = np.take(arr, [0], axis=axis)
        hi = np.take(arr, [1], axis=axis)
        hash_ = np.where(lo == hi, lo, -1).astype(np.int8)
        arr = np.concatenate([lo, hi, hash_], axis=axis)
    return arr


def maximally_general_rules(problem):
    """Every accurate condition with no accurate strict generalisation.

    A condition is accurate when the function is constant on the inputs it
    matches (so each action gets a constant reward there). It is maximally
    general when no single fixed bit can become ``#`` keeping it accurate,
    which is equivalent to having no accurate strict generalisation.
    Returns ``{condition: function value}``.
    """
    n = problem.n_bits
    if n > ORACLE_MAX_BITS:
        raise ValueError(f"oracle enumerates 3**n conditions; n={n} exceeds {ORACLE_MAX_BITS}")
    table = _constant_value_table(problem.truth_table(), n)
    accurate = table >= 0
    dominated = np.zeros_like(accurate)
    for axis in range(n):
        gen = np.take(accurate, [2], axis=axis)
        dominated |= np.concatenate([gen, gen, np.zeros_like(gen)], axis=axis)
    maximal = accurate & ~dominated
    symbols = "01#"
    return {
        "".join(symbols[d] for d in digits): int(table[tuple(digits)])
        for digits in np.argwhere(maximal)
    }


def _min_cover(universe, candidates):
    """Exact minimum set cover over int bitsets; returns a list of candidate keys."""
    best = None

    def search(uncovered, cands, chosen):
        nonlocal best
        chosen = list(chosen)
        while uncovered:
            cands = {k: m & uncovered for k, m in cands.items() if m & uncovered}
            # drop candidates whose coverage is contained in another's
            ordered = sorted(cands.items(), key=lambda kv: (-bin(kv[1]).count("1"), kv[0]))
            kept = {}
            for k, m in ordered:
                if not any(m | other == other for other in kept.values()):
                    kept[k] = m
            cands = kept
            essential = None
            rest = uncovered
            while rest:
                low = rest & -rest
                owners = [k for k, m in cands.items() if m & low]
                if not owners:
                    return
                if len(owners) == 1:
                    essential = owners[0]
                    break
                rest ^= low
            if essential is None:
                break
            chosen.append(essential)
            uncovered &= ~cands.pop(essential)
        if best is not None and len(chosen) >= len(best):
            return
        if not uncovered:
            best = chosen
            return
        # branch on the element with the fewest candidates
        rest, pick, pick_owners = uncovered, None, None
        while rest:
            low = rest & -rest
            owners = [k for k, m in cands.items() if m & low]
            if pick_owners is None or len(owners) < len(pick_owners):
                pick, pick_owners = low, owners
            rest ^= low
        for k in pick_owners:
            remaining = dict(cands)
            m = remaining.pop(k)
            search(uncovered & ~m, remaining, chosen + [k])

    search(universe, dict(candidates), [])
    return best or []


def optimal_population_oracle(problem):
    """The optimal population ``[O]``: a minimum set of accurate, maximally general rules
    that together cover every input, each paired with every action.

    Returns a set of ``(condition, action)`` pairs.
    """
    n = problem.n_bits
    rules = maximally_general_rules(problem)
    truth = problem.truth_table()
    chosen = []
    for value in (0, 1):
        universe = 0
        for x in np.flatnonzero(truth == value):
            universe |= 1 << int(x)
        cands = {}
        for cond, v in rules.items():
            if v != value:
                continue
            care = int(cond.replace("0", "1").replace("#", "0"), 2)
            bits = int(cond.replace("#", "0"), 2)
            xs = np.arange(2 ** n)
            mask = 0
            for x in np.flatnonzero((xs & care) == bits):
                mask |= 1 << int(x)
            cands[cond] = mask
        chosen.extend(_min_cover(universe, cands))
    return {(cond, a) for cond in chosen for a in range(problem.n_actions)}


def optimal_population_values(problem, rules):
    """Reward each oracle rule predicts, keyed like ``rules``."""
    values = {}
    for cond, action in rules:
        witness = cond.replace("#", "0")
        values[(cond, action)] = problem.reward(witness, action)
    return values
