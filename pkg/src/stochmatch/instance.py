"""Problem instances: weighted ball types, unit-capacity bins, i.i.d. arrivals.

An instance fixes bins Z, ball types Y with arrival rates r_y, and a
horizon b.  Rates satisfy 0 < r_y <= 1 and sum to b, so each of the b
arrivals is an independent draw of type y with probability r_y / b.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BallType",
    "RawInstance",
    "Instance",
    "ArrivalSequence",
    "load_instance",
    "save_instance",
    "normalize_instance",
    "sample_arrivals",
    "generate_random_instance",
]

RATE_SUM_TOL = 1e-9
# A rescale correcting more than this is treated as a malformed input
# rather than floating-point drift.
MAX_RESCALE_DEVIATION = 0.5


@dataclass(frozen=True)
class BallType:
    """One ball type: stable id, arrival rate, neighbor bins in instance order."""

    id: str
    rate: float
    neighbors: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "neighbors", tuple(self.neighbors))


@dataclass(frozen=True)
class RawInstance:
    """Unvalidated input: arbitrary positive rates, optional horizon."""

    bins: tuple[str, ...]
    ball_types: tuple[BallType, ...]
    horizon: int | None = None


@dataclass(frozen=True)
class Instance:
    """A validated instance.  Construction enforces all invariants."""

    bins: tuple[str, ...]
    ball_types: tuple[BallType, ...]
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(self.bins))
        object.__setattr__(self, "ball_types", tuple(self.ball_types))
        if len(set(self.bins)) != len(self.bins):
            raise ValueError("duplicate bin ids")
        if self.horizon < 1 or self.horizon != int(self.horizon):
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")
        seen = set()
        bin_set = set(self.bins)
        for t in self.ball_types:
            if t.id in seen:
                raise ValueError(f"duplicate ball type id {t.id!r}")
            seen.add(t.id)
            if not (0.0 < t.rate <= 1.0 + 1e-12):
                raise ValueError(f"type {t.id!r} has rate {t.rate}, expected 0 < rate <= 1")
            if len(set(t.neighbors)) != len(t.neighbors):
                raise ValueError(f"type {t.id!r} has duplicate neighbor entries")
            unknown = [z for z in t.neighbors if z not in bin_set]
            if unknown:
                raise ValueError(f"type {t.id!r} references unknown bins {unknown}")
        total = sum(t.rate for t in self.ball_types)
        if abs(total - self.horizon) > RATE_SUM_TOL:
            raise ValueError(
                f"rates sum to {total!r} but horizon is {self.horizon}; "
                "run normalize_instance to rescale"
            )

    # -- derived index structures (bins and types by dense integer index) --

    @cached_property
    def bin_index(self) -> dict[str, int]:
        return {z: i for i, z in enumerate(self.bins)}

    @cached_property
    def type_index(self) -> dict[str, int]:
        return {t.id: i for i, t in enumerate(self.ball_types)}

    @cached_property
    def rates(self) -> np.ndarray:
        return np.array([t.rate for t in self.ball_types], dtype=np.float64)

    @cached_property
    def neighbors_idx(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.bin_index[z] for z in t.neighbors) for t in self.ball_types)

    @cached_property
    def neighbor_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(nb) for nb in self.neighbors_idx)

    @cached_property
    def adj_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Type adjacency as (indptr int64, indices int32) for the matching kernel."""
        indptr = np.zeros(len(self.ball_types) + 1, np.int64)
        for i, nb in enumerate(self.neighbors_idx):
            indptr[i + 1] = indptr[i] + len(nb)
        indices = np.fromiter((z for nb in self.neighbors_idx for z in nb), np.int32,
                              count=int(indptr[-1]))
        return indptr, indices

    @cached_property
    def _prob_cumsum(self) -> np.ndarray:
        return np.cumsum(self.rates / self.horizon)

    @property
    def n_bins(self) -> int:
        return len(self.bins)

    @property
    def n_types(self) -> int:
        return len(self.ball_types)

    def edges(self) -> list[tuple[str, str]]:
        return [(t.id, z) for t in self.ball_types for z in t.neighbors]


@dataclass(frozen=True)
class ArrivalSequence:
    """One realized arrival sequence omega: b type draws in order."""

    draws: tuple[str, ...]
    counts: dict[str, int] = field(compare=False)
    indices: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if Counter(self.draws) != self.counts:
            raise ValueError("counts inconsistent with draws")


def arrival_indices(inst: Instance, seq: ArrivalSequence) -> np.ndarray:
    """Type-index view of a sequence, int32, suitable for the matching kernel."""
    if seq.indices is not None:
        return seq.indices
    tix = inst.type_index
    return np.fromiter((tix[y] for y in seq.draws), np.int32, count=len(seq.draws))


def sample_arrivals(inst: Instance, rng: np.random.Generator) -> ArrivalSequence:
    """Draw b i.i.d. arrivals, each type with probability r_y / b."""
    u = rng.random(inst.horizon)
    idx = np.searchsorted(inst._prob_cumsum, u, side="right").astype(np.int32)
    # guard the measure-zero edge where u lands beyond the final cumsum
    np.clip(idx, 0, inst.n_types - 1, out=idx)
    ids = tuple(inst.ball_types[i].id for i in idx)
    return ArrivalSequence(draws=ids, counts=dict(Counter(ids)), indices=idx)


def _split_type(t: BallType, existing: set[str]) -> list[BallType]:
    """Split a rate > 1 type into ceil(rate) copies with rates <= 1."""
    if t.rate <= 1.0 + 1e-12:
        return [BallType(t.id, min(t.rate, 1.0), t.neighbors)]
    whole = math.ceil(t.rate - 1e-12)
    remainder = t.rate - (whole - 1)
    copies = []
    for k in range(whole):
        cid = f"{t.id}#{k + 1}"
        if cid in existing:
            raise ValueError(f"cannot split type {t.id!r}: id {cid!r} already taken")
        rate = 1.0 if k < whole - 1 else remainder
        copies.append(BallType(cid, rate, t.neighbors))
    return copies


def normalize_instance(raw: RawInstance | Instance, horizon: int | None = None) -> Instance:
    """Rescale and split arbitrary positive rates into a valid instance.

    Rates are uniformly rescaled so they sum to the horizon (given, or
    round(sum rates)), then any rate above 1 is split into ceil(rate)
    copies.  A rescale factor more than 50% away from 1 is rejected.
    """
    types = tuple(raw.ball_types)
    if not types:
        raise ValueError("instance needs at least one ball type")
    for t in types:
        if t.rate <= 0:
            raise ValueError(f"type {t.id!r} has nonpositive rate {t.rate}")
    total = sum(t.rate for t in types)
    b = horizon if horizon is not None else raw.horizon
    if b is None:
        b = round(total)
    if b < 1:
        raise ValueError(f"horizon must be >= 1, got {b} (rates sum to {total})")
    factor = b / total
    if abs(factor - 1.0) > MAX_RESCALE_DEVIATION:
        raise ValueError(
            f"rates sum to {total} but horizon is {b}; rescale factor {factor:.3f} "
            "is more than 50% away from 1"
        )
    if abs(total - b) <= RATE_SUM_TOL:
        scaled = types  # already consistent; keep rates bit-exact for idempotence
    else:
        scaled = tuple(BallType(t.id, t.rate * factor, t.neighbors) for t in types)
    existing = {t.id for t in scaled}
    out: list[BallType] = []
    for t in scaled:
        out.extend(_split_type(t, existing))
    return Instance(bins=tuple(raw.bins), ball_types=tuple(out), horizon=int(b))


def load_instance(path: str | Path) -> Instance:
    """Read an instance from JSON, enforcing all invariants strictly."""
    with open(path) as fh:
        data = json.load(fh)
    try:
        bins = tuple(str(z) for z in data["bins"])
        types = tuple(
            BallType(str(t["id"]), float(t["rate"]), tuple(str(z) for z in t["neighbors"]))
            for t in data["ball_types"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance file {path}: {exc}") from exc
    horizon = data.get("horizon")
    if horizon is None:
        horizon = round(sum(t.rate for t in types))
    return Instance(bins=bins, ball_types=types, horizon=int(horizon))


def save_instance(inst: Instance, path: str | Path) -> None:
    data = {
        "bins": list(inst.bins),
        "ball_types": [
            {"id": t.id, "rate": t.rate, "neighbors": list(t.neighbors)}
            for t in inst.ball_types
        ],
        "horizon": inst.horizon,
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def generate_random_instance(n_types: int, n_bins: int, degree: int,
                             rate_mode: str, seed: int,
                             horizon: int | None = None) -> Instance:
    """Random instance with fixed degree and integral or fractional rates."""
    from .seeds import derived_rng

    if degree < 1 or degree > n_bins:
        raise ValueError(f"degree {degree} out of range for {n_bins} bins")
    if rate_mode not in ("integral", "fractional"):
        raise ValueError(f"unknown rate_mode {rate_mode!r}")
    rng = derived_rng(seed, "gen-random", n_types, n_bins, degree, rate_mode)
    bins = tuple(f"z{i}" for i in range(n_bins))
    types = []
    for i in range(n_types):
        nb = tuple(f"z{int(j)}" for j in rng.choice(n_bins, size=degree, replace=False))
        if rate_mode == "integral":
            rate = 1.0
        else:
            rate = 1.0 - rng.random()  # uniform on (0, 1]
        types.append(BallType(f"y{i}", rate, nb))
    if rate_mode == "integral" and horizon is None:
        return Instance(bins=bins, ball_types=tuple(types), horizon=n_types)
    return normalize_instance(RawInstance(bins, tuple(types), None), horizon=horizon)
