"""Offline statistics: the fractional matching induced by OPT.

f_e is the probability that the canonical offline optimum uses edge e
for a random arrival sequence.  It is estimated by Monte-Carlo sampling
or computed exactly by enumerating all |Y|^b sequences, and repaired so
the estimated type marginals respect f_y <= min(r_y, 1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .instance import Instance
from .matching import MatchingWorkspace, _hk_kernel, njit
from .seeds import derived_rng

__all__ = [
    "FractionalMatching",
    "estimate_f",
    "exact_f",
    "repair_f",
    "save_fractional",
    "load_fractional",
]

EXACT_SEQUENCE_CAP = 10**6


@dataclass(frozen=True)
class FractionalMatching:
    """Edge weights f_e in instance edge order, with provenance metadata."""

    values: dict[tuple[str, str], float]
    meta: dict = field(default_factory=dict, compare=False)
    stderr: dict[tuple[str, str], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        for e, v in self.values.items():
            if v < 0:
                raise ValueError(f"negative weight {v} on edge {e}")

    @cached_property
    def f_of_type(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for (y, _), v in self.values.items():
            out[y] = out.get(y, 0.0) + v
        return out

    @cached_property
    def f_of_bin(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for (_, z), v in self.values.items():
            out[z] = out.get(z, 0.0) + v
        return out

    def total(self) -> float:
        return sum(self.values.values())


@njit(cache=True)
def _batch_edge_counts(type_indptr, type_indices, draws_mat, weights, acc,
                       match_ball, match_bin, dist, queue, stack_ball, stack_ptr):
    """Accumulate weight-summed edge indicators of OPT over many sequences.

    Returns the weighted sum of matching sizes.  acc has shape (n_types, n_bins).
    """
    n_groups = draws_mat.shape[0]
    b = draws_mat.shape[1]
    opt_mass = 0.0
    for s in range(n_groups):
        draws = draws_mat[s]
        size = _hk_kernel(type_indptr, type_indices, draws, match_ball, match_bin,
                          dist, queue, stack_ball, stack_ptr)
        w = weights[s]
        opt_mass += w * size
        for i in range(b):
            z = match_ball[i]
            if z >= 0:
                acc[draws[i], z] += w
    return opt_mass


def _run_batch(inst: Instance, draws_mat: np.ndarray, weights: np.ndarray,
               acc: np.ndarray) -> float:
    indptr, indices = inst.adj_csr
    ws = MatchingWorkspace.for_sizes(inst.horizon, inst.n_bins)
    return float(_batch_edge_counts(indptr, indices, draws_mat, weights, acc,
                                    ws.match_ball, ws.match_bin, ws.dist, ws.queue,
                                    ws.stack_ball, ws.stack_ptr))


def _acc_to_fm(inst: Instance, acc: np.ndarray, meta: dict,
               stderr_scale: float | None) -> FractionalMatching:
    values: dict[tuple[str, str], float] = {}
    stderr: dict[tuple[str, str], float] | None = {} if stderr_scale else None
    for t in inst.ball_types:
        ti = inst.type_index[t.id]
        for z in t.neighbors:
            v = float(acc[ti, inst.bin_index[z]])
            values[(t.id, z)] = v
            if stderr is not None:
                stderr[(t.id, z)] = float(np.sqrt(max(v * (1.0 - v), 0.0) * stderr_scale))
    return FractionalMatching(values=values, meta=meta, stderr=stderr)


def estimate_f(inst: Instance, samples: int, seed: int) -> FractionalMatching:
    """Monte-Carlo estimate of f over ``samples`` independent sequences.

    Identical sampled sequences are grouped before solving, which changes
    nothing about the estimator but makes tiny instances cheap.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = derived_rng(seed, "estimate-f")
    u = rng.random((samples, inst.horizon))
    draws = np.searchsorted(inst._prob_cumsum, u, side="right").astype(np.int32)
    np.clip(draws, 0, inst.n_types - 1, out=draws)
    uniq, counts = np.unique(draws, axis=0, return_counts=True)
    acc = np.zeros((inst.n_types, inst.n_bins), np.float64)
    opt_mass = _run_batch(inst, np.ascontiguousarray(uniq), counts.astype(np.float64), acc)
    acc /= samples
    meta = {"source": "estimate", "samples": int(samples), "seed": int(seed),
            "mean_opt": opt_mass / samples}
    return _acc_to_fm(inst, acc, meta, stderr_scale=1.0 / samples)


def exact_f(inst: Instance, cap: int = EXACT_SEQUENCE_CAP) -> FractionalMatching:
    """Exact f by enumerating every sequence, weighted by its probability."""
    n, b = inst.n_types, inst.horizon
    total = n**b
    if total > cap:
        raise ValueError(f"enumeration needs {total} sequences, above the cap of {cap}")
    probs = inst.rates / b
    place = n ** np.arange(b - 1, -1, -1, dtype=np.int64)
    acc = np.zeros((n, inst.n_bins), np.float64)
    opt_mass = 0.0
    chunk = 1 << 16
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        draws = ((codes[:, None] // place) % n).astype(np.int32)
        weights = np.prod(probs[draws], axis=1)
        opt_mass += _run_batch(inst, np.ascontiguousarray(draws), weights, acc)
    meta = {"source": "exact", "samples": None, "seed": None, "mean_opt": opt_mass}
    return _acc_to_fm(inst, acc, meta, stderr_scale=None)


def repair_f(fm: FractionalMatching, inst: Instance) -> FractionalMatching:
    """Scale down any type whose estimated marginal exceeds min(r_y, 1).

    Exact marginals already satisfy the cap; sampling noise can break it.
    The repair is proportional per type and idempotent.
    """
    scale: dict[str, float] = {}
    for t in inst.ball_types:
        fy = fm.f_of_type.get(t.id, 0.0)
        cap = min(t.rate, 1.0)
        if fy > cap:
            scale[t.id] = cap / fy
    if not scale:
        return fm
    values = {e: v * scale.get(e[0], 1.0) for e, v in fm.values.items()}
    meta = dict(fm.meta)
    meta["repaired_types"] = sorted(scale)
    return FractionalMatching(values=values, meta=meta, stderr=fm.stderr)


def save_fractional(fm: FractionalMatching, path: str | Path) -> None:
    edges = []
    for (y, z), v in fm.values.items():
        entry = {"y": y, "z": z, "f": v}
        if fm.stderr is not None:
            entry["stderr"] = fm.stderr[(y, z)]
        edges.append(entry)
    meta = {k: v for k, v in fm.meta.items() if k in ("source", "samples", "seed")}
    with open(path, "w") as fh:
        json.dump({"edges": edges, "meta": meta}, fh, indent=2)
        fh.write("\n")


def load_fractional(path: str | Path) -> FractionalMatching:
    with open(path) as fh:
        data = json.load(fh)
    values: dict[tuple[str, str], float] = {}
    stderr: dict[tuple[str, str], float] = {}
    for e in data["edges"]:
        values[(str(e["y"]), str(e["z"]))] = float(e["f"])
        if "stderr" in e:
            stderr[(str(e["y"]), str(e["z"]))] = float(e["stderr"])
    return FractionalMatching(values=values, meta=dict(data.get("meta", {})),
                              stderr=stderr or None)
