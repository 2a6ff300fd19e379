"""Ternary rules, macroclassifiers, populations and the XCS parameter set.

Conditions are strings over ``0``, ``1`` and ``#``. Internally each condition is
also held as two integers, a *care* mask with a 1 on every specified position
and the *bits* value on those positions, so that matching an input ``x`` is
``x & care == bits``. Position 0 of a string is the most significant bit.
"""

import math
from collections import deque
from dataclasses import dataclass, fields, replace

ALPHABET = frozenset("01#")


def _check_condition(cond):
    if not cond or not set(cond) <= ALPHABET:
        raise ValueError(f"invalid ternary condition {cond!r}")


def _check_bits(bits):
    if not bits or not set(bits) <= {"0", "1"}:
        raise ValueError(f"invalid bitstring {bits!r}")


def encode_condition(cond):
    """Return the ``(care, bits)`` integer pair for a ternary string."""
    _check_condition(cond)
    care = int(cond.replace("0", "1").replace("#", "0"), 2)
    bits = int(cond.replace("#", "0"), 2)
    return care, bits


def decode_condition(care, bits, length):
    out = []
    for pos in range(length):
        mask = 1 << (length - 1 - pos)
        if care & mask:
            out.append("1" if bits & mask else "0")
        else:
            out.append("#")
    return "".join(out)


def condition_matches(cond, inp):
    """True iff every position of ``cond`` is ``#`` or equals the input bit."""
    _check_condition(cond)
    _check_bits(inp)
    if len(cond) != len(inp):
        raise ValueError(f"length mismatch: condition {len(cond)} vs input {len(inp)}")
    return all(c == "#" or c == b for c, b in zip(cond, inp))


def is_more_general(general, specific):
    """True iff ``general`` has strictly more ``#`` and covers ``specific``."""
    _check_condition(general)
    _check_condition(specific)
    if len(general) != len(specific):
        raise ValueError(f"length mismatch: {len(general)} vs {len(specific)}")
    if general.count("#") <= specific.count("#"):
        return False
    return all(g == "#" or g == s for g, s in zip(general, specific))


def _more_general_int(g_care, g_bits, s_care, s_bits):
    # g's specified positions must be a strict subset of s's, agreeing on values
    return (g_care & s_care) == g_care and g_care != s_care and (s_bits & g_care) == g_bits


@dataclass
class Parameters:
    """XCS settings. ``l_max`` defaults to 10% of ``n`` (rounded up)."""

    n: int = 400
    beta: float = 0.2
    alpha: float = 0.1
    epsilon0: float = 10.0
    nu: float = 5.0
    gamma: float = 0.71
    theta_ga: float = 25
    chi: float = 0.8
    mu: float = 0.04
    theta_del: int = 20
    delta: float = 0.1
    theta_sub: int = 20
    p_hash: float = 0.33
    p_i: float = 10.0
    epsilon_i: float = 0.0
    f_i: float = 0.01
    p_explore: float = 0.5
    do_ga_subsumption: bool = True
    do_as_subsumption: bool = False
    use_gradient: bool = False
    l_max: int | None = None
    max_steps: int = 100

    def __post_init__(self):
        if self.l_max is None:
            self.l_max = max(1, math.ceil(0.10 * self.n))
        self.validate()

    def validate(self):
        for name in ("beta", "alpha", "gamma", "chi", "mu", "delta", "p_hash", "p_explore"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.epsilon0 <= 0:
            raise ValueError("epsilon0 must be > 0")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        return self

    def replace(self, **changes):
        # l_max is derived from n unless it was given explicitly
        if "n" in changes and "l_max" not in changes:
            changes["l_max"] = None
        return replace(self, **changes)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


class Classifier:
    """A macroclassifier: one rule standing for ``num`` identical copies."""

    __slots__ = (
        "care", "bits", "length", "action", "p", "epsilon", "F", "exp",
        "ts", "as_size", "num", "ats", "L",
    )

    def __init__(self, condition, action, *, p=10.0, epsilon=0.0, F=0.01, exp=0,
                 ts=0, as_size=1.0, num=1, ats=0, L=(), l_max=1):
        if isinstance(condition, tuple):
            self.care, self.bits, self.length = condition
        else:
            self.care, self.bits = encode_condition(condition)
            self.length = len(condition)
        self.action = action
        self.p = p
        self.epsilon = epsilon
        self.F = F
        self.exp = exp
        self.ts = ts
        self.as_size = as_size
        self.num = num
        self.ats = ats
        self.L = deque(L, maxlen=l_max)

    @property
    def condition(self):
        return decode_condition(self.care, self.bits, self.length)

    @property
    def key(self):
        return self.care, self.bits, self.action

    @property
    def generality(self):
        """Number of ``#`` symbols in the condition."""
        return self.length - bin(self.care).count("1")

    def matches(self, x):
        return x & self.care == self.bits

    def is_more_general(self, other):
        return _more_general_int(self.care, self.bits, other.care, other.bits)

    def could_subsume(self, params):
        return self.exp > params.theta_sub and self.epsilon < params.epsilon0

    def does_subsume(self, other, params):
        return (self.action == other.action and self.could_subsume(params)
                and self.is_more_general(other))

    def copy(self):
        clone = Classifier((self.care, self.bits, self.length), self.action, l_max=self.L.maxlen)
        for name in ("p", "epsilon", "F", "exp", "ts", "as_size", "num", "ats"):
            setattr(clone, name, getattr(self, name))
        clone.L.extend(self.L)
        return clone

    def to_line(self):
        hist = ",".join(str(v) for v in self.L)
        return (f"{self.condition} {self.action} {self.p!r} {self.epsilon!r} {self.F!r} "
                f"{self.exp} {self.ts} {self.as_size!r} {self.num} {self.ats} L=[{hist}]")

    @classmethod
    def from_line(cls, line, l_max):
        parts = line.split()
        if len(parts) != 11 or not parts[10].startswith("L=[") or not parts[10].endswith("]"):
            raise ValueError(f"malformed classifier line: {line!r}")
        hist = parts[10][3:-1]
        L = [int(v) for v in hist.split(",")] if hist else []
        if len(L) > l_max:
            raise ValueError(f"history longer than l_max={l_max}: {line!r}")
        return cls(
            parts[0], int(parts[1]), p=float(parts[2]), epsilon=float(parts[3]),
            F=float(parts[4]), exp=int(parts[5]), ts=int(parts[6]), as_size=float(parts[7]),
            num=int(parts[8]), ats=int(parts[9]), L=L, l_max=l_max,
        )

    def __repr__(self):
        return f"Classifier({self.condition}:{self.action}, num={self.num}, exp={self.exp})"


def create_covering_classifier(inp, action, t, params, rng):
    """Build a classifier matching ``inp`` with each bit generalised w.p. ``p_hash``.

    ``inp`` may be a bitstring or an ``(int, length)`` pair.
    """
    if isinstance(inp, str):
        _check_bits(inp)
        x, n = int(inp, 2), len(inp)
    else:
        x, n = inp
    care = 0
    for pos in range(n):
        if rng.random() >= params.p_hash:
            care |= 1 << (n - 1 - pos)
    return Classifier(
        (care, x & care, n), action, p=params.p_i, epsilon=params.epsilon_i,
        F=params.f_i, exp=0, ts=t, as_size=1.0, num=1, ats=0, l_max=params.l_max,
    )


class Population:
    """Macroclassifiers keyed by (condition, action), with the total numerosity tracked."""

    def __init__(self, n_bits, n_actions, classifiers=()):
        self.n_bits = n_bits
        self.n_actions = n_actions
        self._members = {}
        self.numerosity = 0
        for cl in classifiers:
            self.add(cl)

    def __iter__(self):
        return iter(self._members.values())

    def __len__(self):
        return len(self._members)

    def __contains__(self, cl):
        return self._members.get(cl.key) is cl

    def get(self, condition, action):
        care, bits = encode_condition(condition)
        return self._members.get((care, bits, action))

    def add(self, cl):
        """Insert ``cl``, merging into an identical rule if one exists. Returns the rule kept."""
        if cl.length != self.n_bits:
            raise ValueError(f"condition length {cl.length} != {self.n_bits}")
        existing = self._members.get(cl.key)
        self.numerosity += cl.num
        if existing is not None:
            existing.num += cl.num
            return existing
        self._members[cl.key] = cl
        return cl

    def remove(self, cl):
        del self._members[cl.key]
        self.numerosity -= cl.num
        cl.num = 0

    def decrement(self, cl):
        cl.num -= 1
        self.numerosity -= 1
        if cl.num == 0:
            del self._members[cl.key]

    def increment(self, cl, k=1):
        cl.num += k
        self.numerosity += k

    def distinct_rules(self):
        return set(self._members)

    def dumps(self):
        lines = [f"# xcs-pop v1 n={self.n_bits} actions={self.n_actions}"]
        lines.extend(cl.to_line() for cl in self)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text, l_max):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# xcs-pop v1"):
            raise ValueError("missing '# xcs-pop v1' header")
        header = dict(tok.split("=", 1) for tok in lines[0].split()[3:])
        pop = cls(int(header["n"]), int(header["actions"]))
        for line in lines[1:]:
            pop.add(Classifier.from_line(line, l_max))
        return pop
