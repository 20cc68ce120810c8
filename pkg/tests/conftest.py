import itertools

import numpy as np
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("ci")


def brute_force_matching(ball_adj, n_bins: int) -> int:
    """Reference maximum matching by exhaustive assignment search."""
    best = 0
    n = len(ball_adj)

    def rec(i, used, size):
        nonlocal best
        remaining = n - i
        if size + remaining <= best:
            return
        if i == n:
            best = max(best, size)
            return
        rec(i + 1, used, size)
        for z in ball_adj[i]:
            if z not in used:
                rec(i + 1, used | {z}, size + 1)

    rec(0, frozenset(), 0)
    return best


def kuhn_matching(ball_adj, n_bins: int) -> int:
    """Independent reference implementation: simple augmenting paths."""
    match_bin = [-1] * n_bins

    def try_ball(i, seen):
        for z in ball_adj[i]:
            if z in seen:
                continue
            seen.add(z)
            if match_bin[z] == -1 or try_ball(match_bin[z], seen):
                match_bin[z] = i
                return True
        return False

    size = 0
    for i in range(len(ball_adj)):
        if try_ball(i, set()):
            size += 1
    return size


def random_ball_adj(rng: np.random.Generator, n_balls: int, n_bins: int,
                    p: float):
    adj = []
    for _ in range(n_balls):
        nb = [z for z in range(n_bins) if rng.random() < p]
        adj.append(tuple(nb))
    return adj


def all_sequences(n_types: int, length: int):
    return itertools.product(range(n_types), repeat=length)
