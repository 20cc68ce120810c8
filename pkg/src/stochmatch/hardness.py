"""Hard instance families and the recurrences bounding any online policy.

Three families certify separations: tiny uniform rates cap every
non-adaptive policy near 1 - 1/e; a perfect-matching class plus an
oversubscribed complete class caps all online policies at 1 - e^{-2};
and sparse random 2- and 3-subset classes at the cuckoo-hashing load
threshold cap them near 0.823.  The caps themselves come from scalar
occupancy recurrences evaluated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import BallType, Instance

__all__ = [
    "C_STAR_DEFAULT",
    "MATERIALIZED_CUCKOO_CAP",
    "ProceduralCuckoo",
    "gen_small_rates",
    "gen_integral_hard",
    "gen_cuckoo_hard",
    "recurrence_integral",
    "recurrence_cuckoo",
]

# load threshold of cuckoo hashing with mixed 2- and 3-choice balls
C_STAR_DEFAULT = 0.81034
MATERIALIZED_CUCKOO_CAP = 60


def gen_small_rates(n: int) -> Instance:
    """n^2 complete-bipartite types of rate 1/n over n bins, horizon n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bins = tuple(f"z{i}" for i in range(n))
    rate = 1.0 / n
    types = tuple(BallType(f"y{i}", rate, bins) for i in range(n * n))
    return Instance(bins=bins, ball_types=types, horizon=n)


def gen_integral_hard(n: int) -> Instance:
    """A perfect-matching class plus round(n/e) complete rate-1 types."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bins = tuple(f"z{i}" for i in range(n))
    types = [BallType(f"y1_{i}", 1.0, (bins[i],)) for i in range(n)]
    n2 = round(n / math.e)
    types.extend(BallType(f"y2_{j}", 1.0, bins) for j in range(n2))
    return Instance(bins=bins, ball_types=tuple(types), horizon=n + n2)


@dataclass(frozen=True)
class ProceduralCuckoo:
    """Lazy sampler for the cuckoo family: arrivals draw a class, then a
    uniform random distinct subset of bins, without materializing the
    combinatorially many types.
    """

    n: int
    c_star: float = C_STAR_DEFAULT

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if not 0.0 <= self.c_star <= 1.0:
            raise ValueError(f"c_star {self.c_star} leaves a negative complete class")

    @property
    def m(self) -> float:
        return self.c_star * self.n / 2.0

    @property
    def horizon(self) -> int:
        return self.n

    @property
    def n_bins(self) -> int:
        return self.n

    def sample_trial(self, rng: np.random.Generator) -> list[tuple[int, ...]]:
        """Neighbor index tuples for one sequence of n arrivals."""
        n = self.n
        p = self.m / n
        all_bins = tuple(range(n))
        arrivals: list[tuple[int, ...]] = []
        for _ in range(n):
            u = rng.random()
            if u < p:
                i = int(rng.integers(n))
                j = int(rng.integers(n - 1))
                if j >= i:
                    j += 1
                arrivals.append((i, j) if i < j else (j, i))
            elif u < 2.0 * p:
                i = int(rng.integers(n))
                j = int(rng.integers(n - 1))
                if j >= i:
                    j += 1
                k = int(rng.integers(n - 2))
                for taken in sorted((i, j)):
                    if k >= taken:
                        k += 1
                trio = sorted((i, j, k))
                arrivals.append(tuple(trio))
            else:
                arrivals.append(all_bins)
        return arrivals

    def to_json(self) -> dict:
        return {"family": "prop-cuckoo", "n": self.n, "c_star": self.c_star}


def gen_cuckoo_hard(n: int, c_star: float = C_STAR_DEFAULT,
                    mode: str = "materialized") -> Instance | ProceduralCuckoo:
    """Cuckoo-threshold family: m 2-subset and m 3-subset expected balls
    (m = c_star * n / 2) plus a complete class filling the horizon to n.
    """
    if mode == "procedural":
        return ProceduralCuckoo(n=n, c_star=c_star)
    if mode != "materialized":
        raise ValueError(f"unknown mode {mode!r}")
    if n > MATERIALIZED_CUCKOO_CAP:
        raise ValueError(
            f"materialized mode is capped at n = {MATERIALIZED_CUCKOO_CAP}; "
            "use mode='procedural'"
        )
    if n < 3:
        raise ValueError("n must be >= 3")
    if not 0.0 <= c_star <= 1.0:
        raise ValueError(f"c_star {c_star} leaves a negative complete class")
    bins = tuple(f"z{i}" for i in range(n))
    m = c_star * n / 2.0
    types: list[BallType] = []
    r2 = m / math.comb(n, 2)
    for i in range(n):
        for j in range(i + 1, n):
            types.append(BallType(f"y2_{i}_{j}", r2, (bins[i], bins[j])))
    r3 = m / math.comb(n, 3)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                types.append(BallType(f"y3_{i}_{j}_{k}", r3, (bins[i], bins[j], bins[k])))
    w = n - 2.0 * m
    if w > 1e-12:
        whole = math.ceil(w - 1e-12)
        for k in range(whole):
            rate = 1.0 if k < whole - 1 else w - (whole - 1)
            types.append(BallType(f"yn_{k}", rate, bins))
    return Instance(bins=bins, ball_types=tuple(types), horizon=n)


def recurrence_integral(n: int, trajectory: bool = False) -> float | list[float]:
    """Occupancy cap for the integral-rates family, as a fraction of n.

    One ball per step fills an empty bin unless it collides; the expected
    fill follows psi(t+1) = psi(t) + 1 - psi(t)/M over M = n(1 + 1/e)
    steps, giving 1 - e^{-2} in the limit.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    M = n * (1.0 + math.exp(-1.0))
    b = round(M)
    psi = 0.0
    traj = [0.0]
    for _ in range(b):
        psi = psi + 1.0 - psi / M
        if trajectory:
            traj.append(psi)
    return traj if trajectory else psi / n


def _binom_real(x: float, k: int) -> float:
    v = 1.0
    for i in range(k):
        v *= x - i
    return v / math.factorial(k)


def recurrence_cuckoo(n: int, c_star: float = C_STAR_DEFAULT,
                      trajectory: bool = False) -> float | list[float]:
    """Occupancy cap for the cuckoo family, as a fraction of n.

    A subset-class ball is wasted only when all its bins are already
    full, which for a uniform k-subset has probability C(psi, k)/C(n, k);
    real-argument binomials let psi stay continuous.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    if not 0.0 <= c_star <= 1.0:
        raise ValueError(f"c_star {c_star} leaves a negative complete class")
    m = c_star * n / 2.0
    c2 = _binom_real(float(n), 2)
    c3 = _binom_real(float(n), 3)
    psi = 0.0
    traj = [0.0]
    for _ in range(n):
        psi = psi + 1.0 - (m / n) * (_binom_real(psi, 2) / c2 + _binom_real(psi, 3) / c3)
        if trajectory:
            traj.append(psi)
    return traj if trajectory else psi / n
