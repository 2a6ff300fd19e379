"""Niche tracking through action-set time stamps.

Every time a rule enters an action set it receives the current time as its
``ats`` and the same value is pushed on the front of its bounded history ``L``.
Rules that were activated together share stamps, so distinct stamp values
identify niches. Only experienced rules (``exp > 0``) are counted, and each
macroclassifier counts once regardless of numerosity.
"""

import json
import statistics
from dataclasses import asdict, dataclass, field


@dataclass
class NicheMember:
    condition: str
    action: int
    p: float
    F: float
    num: int


@dataclass
class NicheSnapshot:
    ats_value: int
    members: list = field(default_factory=list)
    total_numerosity: int = 0


@dataclass
class NicheTimelineEntry:
    checkpoint_time: int
    can_size: int
    man_mean: float
    man_std: float
    niches: list = field(default_factory=list)

    def to_json(self):
        return json.dumps({
            "checkpointTime": self.checkpoint_time,
            "canSize": self.can_size,
            "manMean": self.man_mean,
            "manStd": self.man_std,
            "niches": [
                {
                    "atsValue": snap.ats_value,
                    "memberCount": len(snap.members),
                    "totalNumerosity": snap.total_numerosity,
                    "members": [asdict(m) for m in snap.members],
                }
                for snap in self.niches
            ],
        }, sort_keys=False)

    @classmethod
    def from_json(cls, line):
        rec = json.loads(line)
        niches = [
            NicheSnapshot(
                n["atsValue"], [NicheMember(**m) for m in n["members"]], n["totalNumerosity"]
            )
            for n in rec["niches"]
        ]
        return cls(rec["checkpointTime"], rec["canSize"], rec["manMean"], rec["manStd"], niches)


class NoActiveNichesError(ValueError):
    pass


def stamp_action_set(action_set, t, l_max=None):
    """Set ``ats = t`` on every member and push ``t`` on the front of its history.

    Histories are deques bounded at ``l_max`` (their ``maxlen``), so the oldest
    stamp drops off once a history is full. The clock must be monotone.
    """
    for cl in action_set:
        if cl.L and t <= cl.L[0] or t <= cl.ats:
            raise ValueError(f"non-monotone stamp {t} for {cl!r} (ats={cl.ats})")
    for cl in action_set:
        if l_max is not None and cl.L.maxlen != l_max:
            raise ValueError(f"history bound {cl.L.maxlen} != l_max {l_max}")
        cl.ats = t
        cl.L.appendleft(t)


def _experienced(population):
    return [cl for cl in population if cl.exp > 0]


def can(population):
    """Currently active niches: distinct ``ats`` of experienced rules."""
    return {cl.ats for cl in population if cl.exp > 0}


def can_t(population, t):
    """Niche identifiers ``t`` stamps back: ``{cl.L[t]}`` over rules with long enough histories."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return {cl.L[t] for cl in population if cl.exp > 0 and len(cl.L) > t}


def can_sizes(population):
    """``|can_t|`` for t = 0 .. T-1, where T is the longest experienced history."""
    layers = []
    for cl in _experienced(population):
        for i, v in enumerate(cl.L):
            if i == len(layers):
                layers.append(set())
            layers[i].add(v)
    return [len(layer) for layer in layers]


def man(population):
    """Mean and population standard deviation of the ``|can_t|`` series."""
    sizes = can_sizes(population)
    if not sizes:
        raise NoActiveNichesError("no active niches")
    return statistics.fmean(sizes), statistics.pstdev(sizes)


def niche_stats(population):
    """``(|CAN|, MAN mean, MAN std)``, with zeros when nothing is active yet."""
    try:
        mean, std = man(population)
    except NoActiveNichesError:
        mean, std = 0.0, 0.0
    return len(can(population)), mean, std


def niche_members(population, ats_value):
    members = [cl for cl in population if ats_value in cl.L]
    return NicheSnapshot(
        ats_value,
        [NicheMember(cl.condition, cl.action, cl.p, cl.F, cl.num) for cl in members],
        sum(cl.num for cl in members),
    )


def timeline_checkpoint(population, t, export_composition=False):
    size, mean, std = niche_stats(population)
    niches = []
    if export_composition:
        niches = [niche_members(population, v) for v in sorted(can(population))]
    return NicheTimelineEntry(t, size, mean, std, niches)
