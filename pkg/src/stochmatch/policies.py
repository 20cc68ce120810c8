"""Online allocation policies.

Three policies share one stepping contract: given the arriving ball's
type and the current bin occupancy, return the bin to fill or drop the
ball.  Policy objects are single-use state machines; a fresh one is
built per trial from an immutable per-instance setup.

* greedy: uniformly random empty neighbor.
* two-matching (non-adaptive): two matchings sampled from a matching
  distribution give each type a first- and second-arrival target;
  later arrivals are dropped.
* interval partition (adaptive): each type owns two partitions of
  [0, r_y] into one subinterval per edge (plus a dummy remainder); a
  uniform draw selects a first- and second-priority bin, the second
  partition being the first shifted cyclically by the largest edge
  weight so that the two choices rarely coincide.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .decompose import MatchingDistribution, sample_matching
from .instance import ArrivalSequence, Instance, arrival_indices
from .offline_stats import FractionalMatching

__all__ = [
    "DUMMY",
    "TypePartition",
    "IntervalPartitions",
    "build_partitions",
    "pair_distribution",
    "overlap_measure",
    "NonAdaptivePlan",
    "build_nonadaptive",
    "nonadaptive_step",
    "adaptive_step",
    "greedy_step",
    "GreedySetup",
    "NonAdaptiveSetup",
    "AdaptiveSetup",
    "PolicyRun",
    "run_policy",
]

DUMMY = None  # stands for the dummy bin in pair distributions
F_TOL = 1e-9


@dataclass(frozen=True)
class TypePartition:
    """Interval layout for one type: real edges sorted by weight, then dummy.

    ``bins[k]`` is the bin index of the k-th subinterval (-1 for the dummy),
    ``cuts[k]`` its right endpoint.  Intervals are half-open, the final one
    closed.  The second-priority partition is this one shifted left
    cyclically by ``f1``, the largest edge weight.
    """

    rate: float
    bins: tuple[int, ...]
    bin_ids: tuple[str | None, ...]
    weights: tuple[float, ...]
    cuts: tuple[float, ...]
    f1: float

    def locate(self, x: float) -> int:
        k = bisect_right(self.cuts, x)
        return min(k, len(self.cuts) - 1)

    def first_second(self, x: float) -> tuple[int, int]:
        """Bin indices (or -1 for dummy) of the first and second choice at x."""
        k1 = self.locate(x)
        shifted = x + self.f1
        if shifted >= self.rate:
            shifted -= self.rate
        k2 = self.locate(shifted)
        return self.bins[k1], self.bins[k2]

    def intervals(self) -> list[tuple[float, float]]:
        out = []
        lo = 0.0
        for hi in self.cuts:
            out.append((lo, hi))
            lo = hi
        return out

    def shifted_intervals(self) -> list[tuple[float, float]]:
        """Second-priority subintervals, index-aligned with intervals()."""
        out = []
        for k, (lo, hi) in enumerate(self.intervals()):
            if k == 0:
                out.append((self.rate - self.f1, self.rate))
            else:
                out.append((lo - self.f1, hi - self.f1))
        return out


@dataclass(frozen=True)
class IntervalPartitions:
    """One TypePartition per ball type, in instance type order."""

    parts: tuple[TypePartition, ...]
    index: dict[str, int] = field(compare=False, default_factory=dict)

    def for_type(self, type_id: str) -> TypePartition:
        return self.parts[self.index[type_id]]


def build_partitions(inst: Instance, fm: FractionalMatching) -> IntervalPartitions:
    """Lay out both partitions for every type from its edge weights."""
    parts = []
    for t in inst.ball_types:
        edges = [(z, fm.values.get((t.id, z), 0.0)) for z in t.neighbors]
        fy = sum(f for _, f in edges)
        if fy > t.rate + F_TOL:
            raise ValueError(
                f"type {t.id!r} has f_y = {fy} above its rate {t.rate}; repair first"
            )
        edges.sort(key=lambda e: (-e[1], e[0]))
        bins = [inst.bin_index[z] for z, _ in edges] + [-1]
        bin_ids: list[str | None] = [z for z, _ in edges] + [DUMMY]
        weights = [f for _, f in edges] + [max(t.rate - fy, 0.0)]
        cuts = []
        acc = 0.0
        for w in weights:
            acc += w
            cuts.append(acc)
        cuts[-1] = t.rate  # absorb float drift so the layout spans [0, r_y]
        f1 = edges[0][1] if edges else 0.0
        parts.append(TypePartition(rate=t.rate, bins=tuple(bins), bin_ids=tuple(bin_ids),
                                   weights=tuple(weights), cuts=tuple(cuts), f1=f1))
    return IntervalPartitions(parts=tuple(parts), index=dict(inst.type_index))


def _overlap(a: tuple[float, float], b: tuple[float, float]) -> float:
    return max(0.0, min(a[1], b[1]) - max(b[0], a[0]))


def pair_distribution(parts: IntervalPartitions, inst: Instance,
                      type_id: str) -> dict[tuple[str | None, str | None], float]:
    """Joint law of (first, second) priority for one type's uniform draw."""
    part = parts.for_type(type_id)
    first = part.intervals()
    second = part.shifted_intervals()
    out: dict[tuple[str | None, str | None], float] = {}
    for k1, iv1 in enumerate(first):
        for k2, iv2 in enumerate(second):
            m = _overlap(iv1, iv2)
            if m > 0.0:
                key = (part.bin_ids[k1], part.bin_ids[k2])
                out[key] = out.get(key, 0.0) + m / part.rate
    return out


def overlap_measure(part: TypePartition) -> float:
    """Measure of draws whose two priorities coincide on the largest edge."""
    if not part.weights or part.bins[0] == -1:
        return 0.0
    return _overlap(part.intervals()[0], part.shifted_intervals()[0])


# -- stepping primitives ------------------------------------------------------

def greedy_step(neighbors: Sequence[int], occupied: Sequence[bool],
                rng: np.random.Generator) -> int:
    empty = [z for z in neighbors if not occupied[z]]
    if not empty:
        return -1
    return empty[int(rng.integers(len(empty)))]


def adaptive_step(part: TypePartition, x: float, occupied: Sequence[bool],
                  dummy_always_full: bool) -> int:
    """Resolve one adaptive arrival at draw position x.

    The first-priority bin is tried, then the second.  A dummy first
    choice either passes the ball through (dummy treated as always
    full) or absorbs it (dummy treated as always empty).
    """
    z1, z2 = part.first_second(x)
    if z1 >= 0:
        if not occupied[z1]:
            return z1
    elif not dummy_always_full:
        return -1
    if z2 >= 0 and not occupied[z2]:
        return z2
    return -1


@dataclass
class NonAdaptivePlan:
    """Per-type first/second arrival targets plus arrival counters."""

    m1: tuple[int, ...]
    m2: tuple[int, ...]
    seen: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.seen:
            self.seen = [0] * len(self.m1)


def build_nonadaptive(mu: MatchingDistribution, inst: Instance,
                      rng: np.random.Generator) -> NonAdaptivePlan:
    """Sample the two priority matchings independently from mu."""
    def as_array(matching: dict[str, str]) -> tuple[int, ...]:
        arr = [-1] * inst.n_types
        for y, z in matching.items():
            arr[inst.type_index[y]] = inst.bin_index[z]
        return tuple(arr)

    m1 = as_array(sample_matching(mu, rng))
    m2 = as_array(sample_matching(mu, rng))
    return NonAdaptivePlan(m1=m1, m2=m2)


def nonadaptive_step(plan: NonAdaptivePlan, type_idx: int,
                     occupied: Sequence[bool]) -> int:
    """First arrival goes to M1(y), second to M2(y), later ones are dropped."""
    k = plan.seen[type_idx]
    plan.seen[type_idx] = k + 1
    if k == 0:
        z = plan.m1[type_idx]
    elif k == 1:
        z = plan.m2[type_idx]
    else:
        return -1
    if z >= 0 and not occupied[z]:
        return z
    return -1


# -- per-instance setups and single-use policy machines -----------------------

class _GreedyPolicy:
    __slots__ = ("neighbors",)

    def __init__(self, neighbors):
        self.neighbors = neighbors

    def step(self, type_idx: int, occupied, rng: np.random.Generator) -> int:
        return greedy_step(self.neighbors[type_idx], occupied, rng)


class _NonAdaptivePolicy:
    __slots__ = ("plan",)

    def __init__(self, plan: NonAdaptivePlan):
        self.plan = plan

    def step(self, type_idx: int, occupied, rng: np.random.Generator) -> int:
        return nonadaptive_step(self.plan, type_idx, occupied)


class _AdaptivePolicy:
    __slots__ = ("parts", "dummy_always_full")

    def __init__(self, parts, dummy_always_full: bool):
        self.parts = parts
        self.dummy_always_full = dummy_always_full

    def step(self, type_idx: int, occupied, rng: np.random.Generator) -> int:
        part = self.parts[type_idx]
        x = rng.random() * part.rate
        return adaptive_step(part, x, occupied, self.dummy_always_full)


@dataclass(frozen=True)
class GreedySetup:
    inst: Instance
    name: str = "greedy"

    def new_policy(self, rng: np.random.Generator) -> _GreedyPolicy:
        return _GreedyPolicy(self.inst.neighbors_idx)


@dataclass(frozen=True)
class NonAdaptiveSetup:
    inst: Instance
    mu: MatchingDistribution
    name: str = "nonadaptive"

    def new_policy(self, rng: np.random.Generator) -> _NonAdaptivePolicy:
        return _NonAdaptivePolicy(build_nonadaptive(self.mu, self.inst, rng))


@dataclass(frozen=True)
class AdaptiveSetup:
    inst: Instance
    partitions: IntervalPartitions
    dummy_always_full: bool = True
    name: str = "adaptive"

    def new_policy(self, rng: np.random.Generator) -> _AdaptivePolicy:
        return _AdaptivePolicy(self.partitions.parts, self.dummy_always_full)


@dataclass(frozen=True)
class PolicyRun:
    """One trial's allocations: bin id per arrival (None = dropped)."""

    assignments: tuple[str | None, ...]
    matched: int


def run_policy(setup, inst: Instance, seq: ArrivalSequence,
               rng: np.random.Generator) -> PolicyRun:
    """Run a fresh policy over one arrival sequence, checking feasibility."""
    policy = setup.new_policy(rng)
    occupied = [False] * inst.n_bins
    neighbor_sets = inst.neighbor_sets
    out: list[str | None] = []
    matched = 0
    for t in arrival_indices(inst, seq):
        t = int(t)
        z = policy.step(t, occupied, rng)
        if z < 0:
            out.append(None)
            continue
        if occupied[z] or z not in neighbor_sets[t]:
            raise AssertionError(
                f"policy {setup.name} chose invalid bin {z} for type index {t}"
            )
        occupied[z] = True
        matched += 1
        out.append(inst.bins[z])
    return PolicyRun(assignments=tuple(out), matched=matched)
