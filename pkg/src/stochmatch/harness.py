"""Paired simulation harness and exact policy-value evaluators.

Every trial replays one arrival sequence through both the policy under
test and the offline matching oracle, so ratio estimates share noise
across the numerator and denominator.  All randomness is derived from a
single master seed through tagged streams; rerunning with the same seed
reproduces output byte for byte, and splitting trials across worker
processes does not change it.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .decompose import MatchingDistribution, decompose
from .hardness import ProceduralCuckoo
from .instance import ArrivalSequence, Instance, arrival_indices, sample_arrivals
from .matching import MatchingWorkspace, matching_kernel
from .offline_stats import FractionalMatching, estimate_f, repair_f
from .policies import (
    AdaptiveSetup,
    GreedySetup,
    IntervalPartitions,
    NonAdaptiveSetup,
    build_partitions,
    greedy_step,
    pair_distribution,
    run_policy,
)
from .seeds import derived_rng, stream_entropy

__all__ = [
    "TrialRow",
    "RatioEstimate",
    "SimulationResult",
    "make_setup",
    "simulate",
    "bootstrap_ci",
    "exact_value_adaptive",
    "exact_value_nonadaptive",
    "rows_to_csv",
    "summary_dict",
]

DEFAULT_F_SAMPLES = 20_000
DEFAULT_RESAMPLES = 10_000
BOOTSTRAP_CHUNK = 256
ADAPTIVE_EXACT_BIN_CAP = 14
NONADAPTIVE_PAIR_CAP = 2_000_000

POLICY_NAMES = ("greedy", "nonadaptive", "adaptive")


@dataclass(frozen=True)
class TrialRow:
    trial: int
    policy: str
    matched: int
    opt: int
    seed: int


@dataclass(frozen=True)
class RatioEstimate:
    policy: str
    trials: int
    mean_alg: float
    mean_opt: float
    ratio: float
    ci_low: float
    ci_high: float
    master_seed: int


@dataclass(frozen=True)
class SimulationResult:
    rows: tuple[TrialRow, ...]
    estimate: RatioEstimate


def _sub_seed(seed: int, tag: str) -> int:
    """A derived integer seed for components that take their own master seed."""
    ss = np.random.SeedSequence(stream_entropy(seed, tag))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


_MASK64 = (1 << 64) - 1


def _trial_seed(seed: int, trial: int) -> int:
    """Stable per-trial identifier recorded in the output rows.

    A splitmix64 finalizer over (seed, trial); cheap enough to call once per
    trial and stable across platforms and thread counts.
    """
    x = (int(seed) * 0x9E3779B97F4A7C15 + trial * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x >> 1


def make_setup(inst: Instance, policy: str, seed: int,
               samples: int = DEFAULT_F_SAMPLES,
               dummy_always_full: bool = True,
               fm: FractionalMatching | None = None,
               mu: MatchingDistribution | None = None,
               partitions: IntervalPartitions | None = None):
    """Build a policy setup, running the offline estimation pipeline as needed.

    The fractional matching is Monte-Carlo estimated (unless supplied),
    repaired, and then either decomposed into a matching distribution or
    carved into interval partitions, depending on the policy.
    """
    if policy == "greedy":
        return GreedySetup(inst=inst)
    if policy not in POLICY_NAMES:
        raise ValueError(f"unknown policy {policy!r}")
    if policy == "nonadaptive" and mu is not None:
        return NonAdaptiveSetup(inst=inst, mu=mu)
    if policy == "adaptive" and partitions is not None:
        return AdaptiveSetup(inst=inst, partitions=partitions,
                             dummy_always_full=dummy_always_full)
    if fm is None:
        fm = estimate_f(inst, samples=samples, seed=_sub_seed(seed, "offline"))
        fm = repair_f(fm, inst)
    if policy == "nonadaptive":
        return NonAdaptiveSetup(inst=inst, mu=decompose(fm))
    return AdaptiveSetup(inst=inst, partitions=build_partitions(inst, fm),
                         dummy_always_full=dummy_always_full)


def _run_trials_materialized(inst: Instance, setup, policy_name: str,
                             seed: int, lo: int, hi: int) -> list[TrialRow]:
    ws = MatchingWorkspace.for_sizes(inst.horizon, inst.n_bins)
    indptr = inst.adj_csr[0]
    indices = inst.adj_csr[1]
    rows = []
    for t in range(lo, hi):
        arrival_rng = derived_rng(seed, "arrivals", t)
        policy_rng = derived_rng(seed, "policy", t)
        seq = sample_arrivals(inst, arrival_rng)
        run = run_policy(setup, inst, seq, policy_rng)
        draws = arrival_indices(inst, seq)
        opt = matching_kernel(indptr, indices, draws, ws)
        if run.matched > opt:
            raise AssertionError(
                f"trial {t}: policy matched {run.matched} > offline optimum {opt}"
            )
        rows.append(TrialRow(trial=t, policy=policy_name, matched=run.matched,
                             opt=opt, seed=_trial_seed(seed, t)))
    return rows


def _procedural_csr(arrivals: list[tuple[int, ...]]):
    indptr = np.zeros(len(arrivals) + 1, dtype=np.int64)
    for i, nb in enumerate(arrivals):
        indptr[i + 1] = indptr[i] + len(nb)
    indices = np.empty(indptr[-1], dtype=np.int32)
    pos = 0
    for nb in arrivals:
        indices[pos:pos + len(nb)] = nb
        pos += len(nb)
    return indptr, indices


def _run_trials_procedural(family: ProceduralCuckoo, policy_name: str,
                           seed: int, lo: int, hi: int) -> list[TrialRow]:
    if policy_name == "nonadaptive":
        raise ValueError(
            "the non-adaptive policy needs an explicit matching distribution; "
            "procedural families support greedy and adaptive only"
        )
    n = family.n_bins
    ws = MatchingWorkspace.for_sizes(family.horizon, n)
    all_draws = np.arange(family.horizon, dtype=np.int64)
    adaptive = policy_name == "adaptive"
    rows = []
    for t in range(lo, hi):
        arrival_rng = derived_rng(seed, "arrivals", t)
        policy_rng = derived_rng(seed, "policy", t)
        arrivals = family.sample_trial(arrival_rng)
        occupied = np.zeros(n, dtype=bool)
        matched = 0
        for nb in arrivals:
            if adaptive:
                # All edges of a class carry equal offline weight here, so the
                # interval policy reduces to a uniform first choice with the
                # cyclic successor as backup.
                k = len(nb)
                i = min(int(policy_rng.random() * k), k - 1)
                z = nb[i]
                if occupied[z]:
                    z2 = nb[(i + 1) % k]
                    z = -1 if occupied[z2] else z2
            else:
                z = greedy_step(nb, occupied, policy_rng)
            if z >= 0:
                occupied[z] = True
                matched += 1
        indptr, indices = _procedural_csr(arrivals)
        opt = matching_kernel(indptr, indices, all_draws, ws)
        if matched > opt:
            raise AssertionError(
                f"trial {t}: policy matched {matched} > offline optimum {opt}"
            )
        rows.append(TrialRow(trial=t, policy=policy_name, matched=matched,
                             opt=opt, seed=_trial_seed(seed, t)))
    return rows


def _worker(args) -> list[TrialRow]:
    source, setup, policy_name, seed, lo, hi = args
    if isinstance(source, ProceduralCuckoo):
        return _run_trials_procedural(source, policy_name, seed, lo, hi)
    return _run_trials_materialized(source, setup, policy_name, seed, lo, hi)


def simulate(source: Instance | ProceduralCuckoo, policy, trials: int, seed: int,
             samples: int = DEFAULT_F_SAMPLES,
             dummy_always_full: bool = True,
             resamples: int = DEFAULT_RESAMPLES,
             level: float = 0.95,
             threads: int = 1,
             fm: FractionalMatching | None = None,
             mu: MatchingDistribution | None = None,
             partitions: IntervalPartitions | None = None) -> SimulationResult:
    """Run paired policy-vs-offline trials and estimate the ratio of means.

    `policy` is a name from POLICY_NAMES or a prebuilt setup object.  The
    trial index alone determines each trial's random streams, so any
    thread count yields identical rows.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    procedural = isinstance(source, ProceduralCuckoo)
    if isinstance(policy, str):
        policy_name = policy
        if procedural:
            if policy_name not in ("greedy", "adaptive"):
                raise ValueError(
                    "procedural families support greedy and adaptive policies only"
                )
            setup = None
        else:
            setup = make_setup(source, policy, seed, samples=samples,
                               dummy_always_full=dummy_always_full,
                               fm=fm, mu=mu, partitions=partitions)
    else:
        setup = policy
        policy_name = setup.name
        if procedural:
            raise ValueError("procedural families take a policy name, not a setup")

    if threads <= 1 or trials < 2 * threads:
        rows = _worker((source, setup, policy_name, seed, 0, trials))
    else:
        bounds = np.linspace(0, trials, threads + 1).astype(int)
        jobs = [(source, setup, policy_name, seed, int(bounds[i]), int(bounds[i + 1]))
                for i in range(threads) if bounds[i] < bounds[i + 1]]
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            rows = []
            for part in pool.map(_worker, jobs):
                rows.extend(part)

    alg = np.array([r.matched for r in rows], dtype=np.float64)
    opt = np.array([r.opt for r in rows], dtype=np.float64)
    mean_alg = float(alg.mean())
    mean_opt = float(opt.mean())
    ratio = mean_alg / mean_opt if mean_opt > 0 else 1.0
    ci_low, ci_high = bootstrap_ci(alg, opt, resamples=resamples,
                                   rng=derived_rng(seed, "bootstrap"),
                                   level=level)
    est = RatioEstimate(policy=policy_name, trials=trials, mean_alg=mean_alg,
                        mean_opt=mean_opt, ratio=ratio, ci_low=ci_low,
                        ci_high=ci_high, master_seed=seed)
    return SimulationResult(rows=tuple(rows), estimate=est)


def bootstrap_ci(alg: np.ndarray, opt: np.ndarray, resamples: int,
                 rng: np.random.Generator, level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap interval for the ratio of means.

    Rows take few distinct (matched, opt) values, so instead of drawing n
    indices per resample we draw multinomial counts over the distinct pairs;
    the resampled sums have exactly the i.i.d.-rows bootstrap law at a cost
    proportional to the number of distinct pairs.
    """
    n = len(alg)
    if n != len(opt) or n == 0:
        raise ValueError("alg and opt must be equal-length nonempty arrays")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    pairs, counts = np.unique(np.stack([alg, opt], axis=1), axis=0,
                              return_counts=True)
    pvals = counts / n
    a_vals = pairs[:, 0]
    o_vals = pairs[:, 1]
    ratios = np.empty(resamples, dtype=np.float64)
    done = 0
    while done < resamples:
        chunk = min(BOOTSTRAP_CHUNK, resamples - done)
        cnt = rng.multinomial(n, pvals, size=chunk)
        a = cnt @ a_vals
        o = cnt @ o_vals
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(o > 0, a / np.where(o > 0, o, 1.0),
                         np.where(a == 0, 1.0, 0.0))
        ratios[done:done + chunk] = r
        done += chunk
    lo = (1.0 - level) / 2.0
    return (float(np.quantile(ratios, lo)), float(np.quantile(ratios, 1.0 - lo)))


def exact_value_adaptive(inst: Instance, partitions: IntervalPartitions,
                         dummy_always_full: bool = True) -> float:
    """Exact expected matches of the interval policy by dynamic programming
    over subsets of full bins.  Exponential in the bin count, so capped at
    ADAPTIVE_EXACT_BIN_CAP bins.
    """
    nz = inst.n_bins
    if nz > ADAPTIVE_EXACT_BIN_CAP:
        raise ValueError(
            f"exact adaptive evaluation is capped at {ADAPTIVE_EXACT_BIN_CAP} bins"
        )
    b = inst.horizon
    bin_index = inst.bin_index
    # Aggregate arrival probability over types by (first, second) bin pair;
    # the policy's action depends on the arrival only through that pair.
    trans: dict[tuple[int, int], float] = {}
    for bt in inst.ball_types:
        arrival_p = bt.rate / b
        for (s1, s2), p in pair_distribution(partitions, inst, bt.id).items():
            c1 = -1 if s1 is None else bin_index[s1]
            c2 = -1 if s2 is None else bin_index[s2]
            key = (c1, c2)
            trans[key] = trans.get(key, 0.0) + arrival_p * p
    states = np.arange(1 << nz, dtype=np.int64)
    # target[s] per transition: resolved bin occupancy after one arrival
    maps = []
    for (c1, c2), p in sorted(trans.items()):
        if c1 >= 0:
            bit1 = 1 << c1
            first_free = (states & bit1) == 0
            if c2 >= 0:
                bit2 = 1 << c2
                second_free = (states & bit2) == 0
                target = np.where(first_free, states | bit1,
                                  np.where(second_free, states | bit2, states))
            else:
                target = np.where(first_free, states | bit1, states)
        else:
            # dummy drawn first
            if dummy_always_full and c2 >= 0:
                bit2 = 1 << c2
                second_free = (states & bit2) == 0
                target = np.where(second_free, states | bit2, states)
            else:
                target = states
        maps.append((target, p))
    prob = np.zeros(1 << nz, dtype=np.float64)
    prob[0] = 1.0
    total_p = sum(p for _, p in maps)
    stay = 1.0 - total_p
    if stay < -1e-9:
        raise AssertionError(f"transition probabilities sum to {total_p} > 1")
    stay = max(stay, 0.0)
    for _ in range(b):
        new = prob * stay
        for target, p in maps:
            np.add.at(new, target, p * prob)
        prob = new
    counts = np.array([bin(s).count("1") for s in range(1 << nz)], dtype=np.float64)
    return float(prob @ counts)


def _log_pow(base: float, k: int) -> float:
    """base**k via logs, safe for large k and base in (0, 1]."""
    if base <= 0.0:
        return 0.0 if k > 0 else 1.0
    return math.exp(k * math.log(base))


def exact_value_nonadaptive(inst: Instance, mu: MatchingDistribution,
                            pair_cap: int = NONADAPTIVE_PAIR_CAP) -> float:
    """Exact expected matches of the two-matching policy.

    Each bin's occupancy depends only on which type its two sampled
    matchings assign to it and on the arrival counts of those types, so
    the expectation factors over bins into a sum over support pairs
    weighted by the matching-distribution marginals.
    """
    b = inst.horizon
    marg = mu.marginals()
    by_bin: dict[str, dict[str, float]] = {}
    for (y, z), w in marg.items():
        by_bin.setdefault(z, {})[y] = w
    work = sum((len(d) + 1) ** 2 for d in by_bin.values())
    if work > pair_cap:
        raise ValueError(f"support pair count {work} exceeds cap {pair_cap}")
    rates = {bt.id: bt.rate for bt in inst.ball_types}
    total = 0.0
    for z, d in by_bin.items():
        none_mass = max(0.0, 1.0 - sum(d.values()))
        entries = [*d.items(), (None, none_mass)]
        ez = 0.0
        for y1, p1 in entries:
            if p1 <= 0.0:
                continue
            for y2, p2 in entries:
                if p2 <= 0.0:
                    continue
                ez += p1 * p2 * _hit_probability(y1, y2, rates, b)
        total += ez
    return total


def _hit_probability(y1: str | None, y2: str | None,
                     rates: dict[str, float], b: int) -> float:
    """P(at least one ball lands in a bin whose slots are y1 then y2).

    The first slot takes the first arrival of y1, the second slot the
    second arrival of y1 (if the slots agree) or the first arrival of y2
    arriving after it has already appeared once.  Complements of small
    multinomial counts give every case exactly.
    """
    if y1 is None and y2 is None:
        return 0.0
    if y1 is not None and (y2 is None or y2 == y1):
        # needs one arrival of y1
        q = 1.0 - rates[y1] / b
        return 1.0 - _log_pow(q, b)
    if y1 is None:
        # needs two arrivals of y2
        r = rates[y2] / b
        q = 1.0 - r
        return 1.0 - _log_pow(q, b) - b * r * _log_pow(q, b - 1)
    # distinct types: fails iff y1 never arrives and y2 arrives at most once
    r1 = rates[y1] / b
    r2 = rates[y2] / b
    s = 1.0 - r1 - r2
    p_fail = _log_pow(s, b) + b * r2 * _log_pow(s, b - 1)
    return 1.0 - p_fail


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("trial,policy,matched,opt,seed\n")
    for r in rows:
        buf.write(f"{r.trial},{r.policy},{r.matched},{r.opt},{r.seed}\n")
    return buf.getvalue()


def summary_dict(est: RatioEstimate) -> dict:
    return dataclasses.asdict(est)
