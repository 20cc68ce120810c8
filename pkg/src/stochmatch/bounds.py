"""Worst-case competitive-ratio expressions and their minimization.

Per-bin lower bounds for both policies are closed-form expressions in
the bin marginal f_z (and, for the adaptive policy, the second-priority
mass q_z).  Minimizing them over a grid of f_z values certifies the
guarantee constants: 0.684 for the two-matching policy and 0.702 / 0.705
(general / integral rates) for the interval-partition policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .instance import Instance
from .offline_stats import FractionalMatching
from .policies import IntervalPartitions, _overlap

__all__ = [
    "BoundReport",
    "worst_edge_profile",
    "nonadaptive_ratio",
    "min_nonadaptive_ratio",
    "adaptive_ratio",
    "qz_lower_bound",
    "min_adaptive_ratio",
    "compute_qz",
    "qz_closed_form",
    "verify_edge_caps",
]

_E1 = math.exp(-1.0)
_E2 = math.exp(-2.0)
DEFAULT_GRID_STEP = 1e-3


@dataclass(frozen=True)
class BoundReport:
    """Result of minimizing a ratio expression over an f_z grid."""

    expression: str
    mode: str | None
    grid_step: float
    minimizer: float
    minimum: float
    branches: dict[str, tuple[float, float]] = field(default_factory=dict, compare=False)


def worst_edge_profile(f_z: float, tol: float = 1e-15) -> list[float]:
    """Edge weights at a bin maximizing the squared sum, given f_z.

    Any k largest edges may sum to at most 1 - e^{-k}, so the worst
    profile fills each cap greedily: the k-th edge takes up to
    e^{-(k-1)} - e^{-k} of whatever remains.
    """
    if not 0.0 < f_z <= 1.0:
        raise ValueError(f"f_z must lie in (0, 1], got {f_z}")
    profile = []
    remainder = f_z
    k = 1
    while remainder > tol:
        cap = math.exp(-(k - 1)) - math.exp(-k)
        take = min(remainder, cap)
        profile.append(take)
        remainder -= take
        k += 1
        if k > 80:  # remainder is below any representable weight
            break
    return profile


def nonadaptive_ratio(f_z: float, sum_sq: float) -> float:
    """Per-bin ratio bound of the two-matching policy.

    sum_sq is the sum of squared edge weights at the bin.
    """
    if f_z <= 0.0:
        raise ValueError("f_z must be positive")
    return (2.0 - 3.0 * _E1) - (1.0 + 2.0 * _E2 - 3.0 * _E1) * f_z \
        - (_E1 - 2.0 * _E2) * sum_sq / f_z


def min_nonadaptive_ratio(grid_step: float = DEFAULT_GRID_STEP) -> BoundReport:
    """Minimize the two-matching bound over f_z with worst-case profiles."""
    n = round(1.0 / grid_step)
    best_f, best_v = 0.0, math.inf
    for k in range(1, n + 1):
        f_z = k / n
        profile = worst_edge_profile(f_z)
        v = nonadaptive_ratio(f_z, sum(w * w for w in profile))
        if v < best_v:
            best_f, best_v = f_z, v
    return BoundReport(expression="nonadaptive", mode=None, grid_step=1.0 / n,
                       minimizer=best_f, minimum=best_v)


def adaptive_ratio(f_z: float, q_z: float) -> float:
    """Per-bin ratio bound of the interval-partition policy."""
    if f_z <= 0.0:
        raise ValueError("f_z must be positive")
    num = (1.0 - math.exp(-f_z)) + q_z * _E2 \
        - q_z * q_z * _E1 * (0.5 - _E1) - _E2 * f_z * (1.0 - f_z)
    return num / f_z


def qz_lower_bound(f_z: float, mode: str = "general") -> float:
    """Guaranteed second-priority mass at a bin with marginal f_z."""
    if mode == "general":
        return max(0.0, math.log(2.0) + f_z - 1.0)
    if mode == "integral":
        return f_z + 2.0 * _E1 - 1.0
    raise ValueError(f"unknown mode {mode!r}")


def min_adaptive_ratio(mode: str = "general",
                       grid_step: float = DEFAULT_GRID_STEP) -> BoundReport:
    """Minimize the adaptive bound over f_z.

    Bins with f_z <= 1/2 get no useful q_z guarantee, so that branch
    uses q = 0; above 1/2 the mode's q_z lower bound applies.
    """
    if mode not in ("general", "integral"):
        raise ValueError(f"unknown mode {mode!r}")
    n = round(1.0 / grid_step)
    branches: dict[str, tuple[float, float]] = {}
    best_f, best_v = 0.0, math.inf
    lo_f, lo_v = 0.0, math.inf
    hi_f, hi_v = 0.0, math.inf
    for k in range(1, n + 1):
        f_z = k / n
        if f_z <= 0.5:
            v = adaptive_ratio(f_z, 0.0)
            if v < lo_v:
                lo_f, lo_v = f_z, v
        else:
            v = adaptive_ratio(f_z, qz_lower_bound(f_z, mode))
            if v < hi_v:
                hi_f, hi_v = f_z, v
        if v < best_v:
            best_f, best_v = f_z, v
    if lo_v < math.inf:
        branches["low"] = (lo_f, lo_v)
    if hi_v < math.inf:
        branches["high"] = (hi_f, hi_v)
    return BoundReport(expression="adaptive", mode=mode, grid_step=1.0 / n,
                       minimizer=best_f, minimum=best_v, branches=branches)


def compute_qz(parts: IntervalPartitions, inst: Instance, bin_id: str) -> float:
    """Exact second-priority-only mass of a bin under the built partitions.

    Sums, over the bin's neighbor types, the measure of draws that pick
    the bin second but not first.
    """
    z_idx = inst.bin_index[bin_id]
    total = 0.0
    for t_idx, t in enumerate(inst.ball_types):
        if z_idx not in inst.neighbor_sets[t_idx]:
            continue
        part = parts.parts[t_idx]
        k = part.bins.index(z_idx)
        iv = part.intervals()[k]
        jv = part.shifted_intervals()[k]
        total += (jv[1] - jv[0]) - _overlap(iv, jv)
    return total


def qz_closed_form(inst: Instance, fm: FractionalMatching, bin_id: str) -> float:
    """q_z from edge weights alone: f^n_z + r^o_z - f^o_z.

    An edge is overlapping when its weight exceeds half its type's rate
    (only the largest edge of a type can); overlapping edges contribute
    r_y - f_e, all others contribute f_e.
    """
    total = 0.0
    for t in inst.ball_types:
        if bin_id not in t.neighbors:
            continue
        f_e = fm.values.get((t.id, bin_id), 0.0)
        if f_e > t.rate / 2.0:
            total += t.rate - f_e
        else:
            total += f_e
    return total


def verify_edge_caps(fm: FractionalMatching, inst: Instance,
                     min_horizon: int = 50) -> list[tuple[str, str, float]] | None:
    """Check f_e <= 1 - e^{-r_y} plus finite-horizon slack on every edge.

    The cap is asymptotic, so instances below ``min_horizon`` return None
    (not applicable).  Otherwise returns the list of violating edges with
    their excess.
    """
    if inst.horizon < min_horizon:
        return None
    b = inst.horizon
    violations = []
    for t in inst.ball_types:
        # finite-b cap 1 - (1 - r/b)^b, plus sampling slack when estimated
        cap = 1.0 - (1.0 - t.rate / b) ** b
        for z in t.neighbors:
            v = fm.values.get((t.id, z), 0.0)
            slack = 4.0 * fm.stderr[(t.id, z)] if fm.stderr else 1e-9
            if v > cap + slack:
                violations.append((t.id, z, v - cap))
    return violations
