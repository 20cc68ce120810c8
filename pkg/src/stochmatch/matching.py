"""Maximum bipartite matching with a fixed canonical tie-breaking rule.

The matching found for a realized arrival sequence doubles as the offline
optimum OPT(omega), and its per-edge usage feeds the offline statistics.
Ties between equally good matchings are broken deterministically: ball
nodes are scanned in arrival order, adjacency lists in instance order,
and BFS layers in index order, so repeated calls yield byte-identical
results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

__all__ = ["MatchingResult", "MatchingWorkspace", "max_matching", "matching_kernel",
           "opt_value"]

_INF = np.int32(2**31 - 1)


@njit(cache=True)
def _hk_kernel(type_indptr, type_indices, draws, match_ball, match_bin,
               dist, queue, stack_ball, stack_ptr):
    """Hopcroft-Karp on the realized graph where ball i has the adjacency
    of type draws[i].  Returns the matching size; fills match_ball/match_bin.
    """
    n_balls = draws.shape[0]
    n_bins = match_bin.shape[0]
    for i in range(n_balls):
        match_ball[i] = -1
    for z in range(n_bins):
        match_bin[z] = -1
    size = 0
    while True:
        # BFS from free balls, layering the alternating-path graph
        head = 0
        tail = 0
        for i in range(n_balls):
            if match_ball[i] == -1:
                dist[i] = 0
                queue[tail] = i
                tail += 1
            else:
                dist[i] = _INF
        found = _INF
        while head < tail:
            i = queue[head]
            head += 1
            if dist[i] >= found:
                continue
            t = draws[i]
            for p in range(type_indptr[t], type_indptr[t + 1]):
                j = match_bin[type_indices[p]]
                if j == -1:
                    if dist[i] + 1 < found:
                        found = dist[i] + 1
                elif dist[j] == _INF:
                    dist[j] = dist[i] + 1
                    queue[tail] = j
                    tail += 1
        if found == _INF:
            return size
        # DFS along the level graph from each free ball, in arrival order
        for s in range(n_balls):
            if match_ball[s] != -1:
                continue
            top = 0
            stack_ball[0] = s
            stack_ptr[0] = type_indptr[draws[s]]
            while top >= 0:
                i = stack_ball[top]
                p = stack_ptr[top]
                t = draws[i]
                advanced = False
                while p < type_indptr[t + 1]:
                    z = type_indices[p]
                    j = match_bin[z]
                    if j == -1 and dist[i] + 1 == found:
                        stack_ptr[top] = p
                        for q in range(top, -1, -1):
                            bz = type_indices[stack_ptr[q]]
                            match_ball[stack_ball[q]] = bz
                            match_bin[bz] = stack_ball[q]
                        size += 1
                        top = -1
                        advanced = True
                        break
                    elif j != -1 and dist[j] == dist[i] + 1:
                        stack_ptr[top] = p
                        top += 1
                        stack_ball[top] = j
                        stack_ptr[top] = type_indptr[draws[j]]
                        advanced = True
                        break
                    else:
                        p += 1
                if not advanced:
                    # dead end: close this ball off for the current phase
                    dist[i] = _INF
                    top -= 1
                    if top >= 0:
                        stack_ptr[top] += 1
    return size


@dataclass
class MatchingWorkspace:
    """Reusable scratch buffers for repeated kernel calls on one instance."""

    match_ball: np.ndarray
    match_bin: np.ndarray
    dist: np.ndarray
    queue: np.ndarray
    stack_ball: np.ndarray
    stack_ptr: np.ndarray

    @classmethod
    def for_sizes(cls, max_balls: int, n_bins: int) -> "MatchingWorkspace":
        return cls(
            match_ball=np.empty(max_balls, np.int32),
            match_bin=np.empty(n_bins, np.int32),
            dist=np.empty(max_balls, np.int32),
            queue=np.empty(max_balls, np.int32),
            stack_ball=np.empty(max_balls + 1, np.int32),
            stack_ptr=np.empty(max_balls + 1, np.int64),
        )


def matching_kernel(type_indptr: np.ndarray, type_indices: np.ndarray,
                    draws: np.ndarray, ws: MatchingWorkspace) -> int:
    """Run the canonical matching kernel in-place on ``ws`` and return the size."""
    return int(_hk_kernel(type_indptr, type_indices, draws,
                          ws.match_ball, ws.match_bin, ws.dist, ws.queue,
                          ws.stack_ball, ws.stack_ptr))


@dataclass(frozen=True)
class MatchingResult:
    """A maximum matching of a realized graph, in ball-index form."""

    size: int
    ball_to_bin: tuple[int, ...]

    def pairs(self) -> list[tuple[int, int]]:
        return [(i, z) for i, z in enumerate(self.ball_to_bin) if z >= 0]


def max_matching(ball_adj: Sequence[Sequence[int]], n_bins: int) -> MatchingResult:
    """Canonical maximum matching for explicit per-ball adjacency lists.

    ``ball_adj[i]`` lists the bin indices ball i may use, in instance order.
    """
    n_balls = len(ball_adj)
    if n_balls == 0 or n_bins == 0:
        return MatchingResult(size=0, ball_to_bin=(-1,) * n_balls)
    indptr = np.zeros(n_balls + 1, np.int64)
    for i, adj in enumerate(ball_adj):
        for z in adj:
            if not 0 <= z < n_bins:
                raise ValueError(f"bin index {z} out of range for {n_bins} bins")
        indptr[i + 1] = indptr[i] + len(adj)
    indices = np.fromiter((z for adj in ball_adj for z in adj), np.int32,
                          count=int(indptr[-1]))
    draws = np.arange(n_balls, dtype=np.int32)
    ws = MatchingWorkspace.for_sizes(n_balls, n_bins)
    size = matching_kernel(indptr, indices, draws, ws)
    return MatchingResult(size=size, ball_to_bin=tuple(int(v) for v in ws.match_ball))


def opt_value(inst, seq) -> tuple[int, dict[tuple[str, str], int]]:
    """OPT(omega): size of the canonical maximum matching for one sequence,
    plus how many balls of each type were matched across each edge.

    Balls of the same type are distinct nodes, so a type with several
    arrivals can have several of its edges used at once.
    """
    from .instance import arrival_indices

    draws = arrival_indices(inst, seq)
    indptr, indices = inst.adj_csr
    ws = MatchingWorkspace.for_sizes(len(draws), inst.n_bins)
    size = matching_kernel(indptr, indices, draws, ws)
    counts: dict[tuple[str, str], int] = {}
    for i, z in enumerate(ws.match_ball):
        if z >= 0:
            e = (inst.ball_types[int(draws[i])].id, inst.bins[int(z)])
            counts[e] = counts.get(e, 0) + 1
    return size, counts
