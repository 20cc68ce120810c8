"""Decomposing a fractional matching into a distribution over matchings.

The edge weights are padded to a doubly stochastic system by giving
every type and bin a dummy partner plus a dummy-dummy slack block, then
peeled into perfect matchings: repeatedly take a perfect matching on the
positive support, subtract its minimum entry, and drop zeroed entries.
Restricted to real edges this yields atoms (matchings of the original
graph, possibly empty) whose weights sum to one and whose marginals
reproduce every f_e.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .matching import njit
from .offline_stats import FractionalMatching

__all__ = [
    "MatchingDistribution",
    "decompose",
    "sample_matching",
    "save_distribution",
    "load_distribution",
]

MARGIN_TOL = 1e-9
CLEAR_EPS = 1e-12  # relative to the largest remaining entry
DEFAULT_MAX_NODES = 3000


@njit(cache=True)
def _augment(A, n, m_row, m_col, start, visited, stack_r, stack_c):
    """Augmenting-path search from unmatched row ``start`` over support A > 0."""
    for r in range(n):
        visited[r] = False
    top = 0
    stack_r[0] = start
    stack_c[0] = 0
    visited[start] = True
    while top >= 0:
        r = stack_r[top]
        c = stack_c[top]
        advanced = False
        while c < n:
            if A[r, c] > 0.0:
                rr = m_col[c]
                if rr == -1:
                    stack_c[top] = c
                    for q in range(top, -1, -1):
                        m_row[stack_r[q]] = stack_c[q]
                        m_col[stack_c[q]] = stack_r[q]
                    return True
                elif not visited[rr]:
                    visited[rr] = True
                    stack_c[top] = c
                    top += 1
                    stack_r[top] = rr
                    stack_c[top] = 0
                    advanced = True
                    break
            c += 1
        if not advanced:
            top -= 1
            if top >= 0:
                stack_c[top] += 1
    return False


@njit(cache=True)
def _peel(A, nY, nZ, weights, atom_indptr, atom_rows, atom_cols):
    """Peel perfect matchings off the padded system in place.

    Returns (status, n_atoms, leftover_mass).  status: 0 ok, -1 no initial
    perfect matching, -2 capacity exhausted.
    """
    n = nY + nZ
    m_row = np.full(n, -1, np.int32)
    m_col = np.full(n, -1, np.int32)
    visited = np.empty(n, np.bool_)
    stack_r = np.empty(n + 1, np.int32)
    stack_c = np.empty(n + 1, np.int32)
    removed_r = np.empty(n, np.int32)
    removed_c = np.empty(n, np.int32)
    for r in range(n):
        if not _augment(A, n, m_row, m_col, r, visited, stack_r, stack_c):
            return -1, 0, 0.0
    max_entry = 0.0
    for r in range(n):
        for c in range(n):
            if A[r, c] > max_entry:
                max_entry = A[r, c]
    n_atoms = 0
    edge_pos = 0
    atom_indptr[0] = 0
    since_rescan = 0
    while True:
        lam = 2.0
        for r in range(n):
            w = A[r, m_row[r]]
            if w < lam:
                lam = w
        if lam <= 0.0:
            break
        if n_atoms >= weights.shape[0]:
            return -2, n_atoms, 0.0
        weights[n_atoms] = lam
        for r in range(nY):
            c = m_row[r]
            if c < nZ:
                atom_rows[edge_pos] = r
                atom_cols[edge_pos] = c
                edge_pos += 1
        n_atoms += 1
        atom_indptr[n_atoms] = edge_pos
        # subtract along the matching; drop entries at or below the clear level
        thresh = CLEAR_EPS * max_entry
        n_removed = 0
        for r in range(n):
            c = m_row[r]
            w = A[r, c] - lam
            if w <= thresh:
                A[r, c] = 0.0
                removed_r[n_removed] = r
                removed_c[n_removed] = c
                n_removed += 1
            else:
                A[r, c] = w
        since_rescan += 1
        if since_rescan >= 256:
            # entries only decrease, so a stale maximum stays an upper bound;
            # refresh it occasionally to keep the clear level proportionate
            since_rescan = 0
            max_entry = 0.0
            for r in range(n):
                for c in range(n):
                    if A[r, c] > max_entry:
                        max_entry = A[r, c]
        exhausted = False
        for k in range(n_removed):
            r = removed_r[k]
            if m_row[r] != removed_c[k]:
                continue  # an earlier repair in this batch re-matched it
            m_col[m_row[r]] = -1
            m_row[r] = -1
            if not _augment(A, n, m_row, m_col, r, visited, stack_r, stack_c):
                exhausted = True
        if exhausted:
            break
    leftover = 0.0
    for r in range(n):
        for c in range(n):
            leftover += A[r, c]
    return 0, n_atoms, leftover / n


@dataclass(frozen=True)
class MatchingDistribution:
    """Atoms (weight, matching) with weights summing to one."""

    atoms: tuple[tuple[float, tuple[tuple[str, str], ...]], ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        total = sum(w for w, _ in self.atoms)
        if abs(total - 1.0) > MARGIN_TOL:
            raise ValueError(f"atom weights sum to {total!r}, expected 1")
        for w, edges in self.atoms:
            if w <= 0:
                raise ValueError(f"nonpositive atom weight {w}")
            ys = [y for y, _ in edges]
            zs = [z for _, z in edges]
            if len(set(ys)) != len(ys) or len(set(zs)) != len(zs):
                raise ValueError(f"atom {edges} is not a matching")

    @cached_property
    def _cum_weights(self) -> np.ndarray:
        return np.cumsum([w for w, _ in self.atoms])

    def marginals(self) -> dict[tuple[str, str], float]:
        out: dict[tuple[str, str], float] = {}
        for w, edges in self.atoms:
            for e in edges:
                out[e] = out.get(e, 0.0) + w
        return out


def decompose(fm: FractionalMatching, max_nodes: int = DEFAULT_MAX_NODES) -> MatchingDistribution:
    """Decompose a fractional matching into a matching distribution."""
    if not any(v > 0.0 for v in fm.values.values()):
        return MatchingDistribution(atoms=((1.0, ()),), meta={"source_meta": dict(fm.meta)})
    types: list[str] = []
    bins: list[str] = []
    tix: dict[str, int] = {}
    zix: dict[str, int] = {}
    for (y, z) in fm.values:
        if y not in tix:
            tix[y] = len(types)
            types.append(y)
        if z not in zix:
            zix[z] = len(bins)
            bins.append(z)
    nY, nZ = len(types), len(bins)
    if nY + nZ > max_nodes:
        raise ValueError(f"{nY + nZ} nodes exceeds the decomposition cap {max_nodes}")
    for y, fy in fm.f_of_type.items():
        if fy > 1.0 + MARGIN_TOL:
            raise ValueError(f"type marginal f_y({y}) = {fy} exceeds 1; repair first")
    for z, fz in fm.f_of_bin.items():
        if fz > 1.0 + MARGIN_TOL:
            raise ValueError(f"bin marginal f_z({z}) = {fz} exceeds 1")

    n = nY + nZ
    A = np.zeros((n, n), np.float64)
    for (y, z), v in fm.values.items():
        if v > 0.0:
            A[tix[y], zix[z]] = v
    fy = np.array([fm.f_of_type[y] for y in types])
    fz = np.array([fm.f_of_bin[z] for z in bins])
    for i in range(nY):
        A[i, nZ + i] = max(1.0 - fy[i], 0.0)
    for j in range(nZ):
        A[nY + j, j] = max(1.0 - fz[j], 0.0)
    # northwest-corner transport through the dummy-dummy block: dummy-bin row
    # j still needs fz[j], dummy-type column i still needs fy[i]
    ri, ci = 0, 0
    rneed = fz.copy()
    cneed = fy.copy()
    while ri < nZ and ci < nY:
        t = min(rneed[ri], cneed[ci])
        if t > 0.0:
            A[nY + ri, nZ + ci] = t
            rneed[ri] -= t
            cneed[ci] -= t
        if rneed[ri] <= 1e-15:
            ri += 1
        else:
            ci += 1

    max_atoms = int(np.count_nonzero(A)) + n + 2
    weights = np.zeros(max_atoms, np.float64)
    atom_indptr = np.zeros(max_atoms + 1, np.int64)
    cap_edges = max_atoms * min(nY, nZ) + 1
    atom_rows = np.zeros(cap_edges, np.int32)
    atom_cols = np.zeros(cap_edges, np.int32)
    status, n_atoms, leftover = _peel(A, nY, nZ, weights, atom_indptr, atom_rows, atom_cols)
    if status == -1:
        raise ValueError("padded system admits no perfect matching; weights are inconsistent")
    if status == -2:
        raise ValueError("decomposition exceeded its atom capacity")

    merged: dict[tuple[tuple[str, str], ...], float] = {}
    for a in range(n_atoms):
        edges = tuple(
            (types[atom_rows[p]], bins[atom_cols[p]])
            for p in range(atom_indptr[a], atom_indptr[a + 1])
        )
        merged[edges] = merged.get(edges, 0.0) + float(weights[a])
    deficit = 1.0 - sum(merged.values())
    if abs(deficit) > MARGIN_TOL:
        raise ValueError(f"extracted weight misses 1 by {deficit}")
    if deficit > 0.0 or () in merged:
        merged[()] = merged.get((), 0.0) + max(deficit, 0.0)
    atoms = tuple(sorted(((w, e) for e, w in merged.items() if w > 0.0),
                         key=lambda a: (-a[0], a[1])))
    meta = {"leftover": leftover, "source_meta": dict(fm.meta)}
    return MatchingDistribution(atoms=atoms, meta=meta)


def sample_matching(mu: MatchingDistribution, rng: np.random.Generator) -> dict[str, str]:
    """Draw one matching from the distribution, as a type -> bin map."""
    u = rng.random()
    idx = int(np.searchsorted(mu._cum_weights, u, side="right"))
    idx = min(idx, len(mu.atoms) - 1)
    return dict(mu.atoms[idx][1])


def save_distribution(mu: MatchingDistribution, path: str | Path) -> None:
    data = {"atoms": [{"weight": w, "edges": [[y, z] for y, z in edges]}
                      for w, edges in mu.atoms]}
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def load_distribution(path: str | Path) -> MatchingDistribution:
    with open(path) as fh:
        data = json.load(fh)
    atoms = tuple(
        (float(a["weight"]), tuple((str(y), str(z)) for y, z in a["edges"]))
        for a in data["atoms"]
    )
    return MatchingDistribution(atoms=atoms)