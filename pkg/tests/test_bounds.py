"""Closed-form ratio bounds, worst-case profiles, and second-priority mass."""

import math

import numpy as np
import pytest

from stochmatch.bounds import (
    adaptive_ratio,
    compute_qz,
    min_adaptive_ratio,
    min_nonadaptive_ratio,
    nonadaptive_ratio,
    qz_closed_form,
    qz_lower_bound,
    verify_edge_caps,
    worst_edge_profile,
)
from stochmatch.instance import BallType, Instance
from stochmatch.offline_stats import FractionalMatching
from stochmatch.policies import build_partitions

E1 = math.exp(-1.0)


def test_nonadaptive_minimum_frozen():
    rep = min_nonadaptive_ratio()
    assert rep.minimum == pytest.approx(0.6844075446907901, abs=1e-9)
    assert rep.minimizer == pytest.approx(1.0)


def test_nonadaptive_ratio_point_values():
    # equal pair of half-weight edges
    assert nonadaptive_ratio(1.0, 0.5) == pytest.approx(0.6807249961776661, abs=1e-12)
    # concentration maximizes the square sum and minimizes the ratio
    prof = worst_edge_profile(1.0)
    sq = sum(v * v for v in prof)
    assert sq == pytest.approx((1 - E1) / (1 + E1), abs=1e-9)
    assert nonadaptive_ratio(1.0, sq) == pytest.approx(0.6844075446907901, abs=1e-9)


def test_worst_edge_profile_structure():
    prof = worst_edge_profile(1.0)
    assert prof[0] == pytest.approx(1 - E1, abs=1e-12)
    assert prof[1] == pytest.approx(E1 - E1 ** 2, abs=1e-12)
    assert sum(prof) == pytest.approx(1.0, abs=1e-9)
    # prefix caps: the top k edges never exceed 1 - e^{-k}
    acc = 0.0
    for k, v in enumerate(prof, start=1):
        acc += v
        assert acc <= 1 - math.exp(-k) + 1e-9


def test_worst_profile_dominates_random_feasible():
    # scaled-down cascade weights keep every k-subset within 1 - e^{-k},
    # so their square sum can never beat the full cascade at the same mass
    rng = np.random.default_rng(2)
    for _ in range(300):
        k = int(rng.integers(1, 25))
        caps = np.array([math.exp(-j) - math.exp(-(j + 1)) for j in range(k)])
        vals = rng.uniform(0.0, 1.0, size=k) * caps
        f_z = float(vals.sum())
        if not 0.0 < f_z <= 1.0:
            continue
        best_sq = sum(v * v for v in worst_edge_profile(f_z))
        assert float((vals * vals).sum()) <= best_sq + 1e-9


def test_adaptive_ratio_frozen_points():
    assert adaptive_ratio(1.0, math.log(2.0)) == pytest.approx(
        0.7025756804201199, abs=1e-12)
    assert adaptive_ratio(1.0, 2.0 * E1) == pytest.approx(
        0.7053831143834944, abs=1e-12)
    assert adaptive_ratio(0.5, math.log(2.0) - 0.5) == pytest.approx(
        0.7679238376508584, abs=1e-12)
    assert adaptive_ratio(0.5, 0.0) == pytest.approx(0.7192710389564267, abs=1e-12)


def test_adaptive_minima_frozen():
    gen = min_adaptive_ratio(mode="general")
    assert gen.minimum == pytest.approx(0.7025756804201199, abs=5e-4)
    assert gen.minimizer == pytest.approx(1.0)
    low_f, low_v = gen.branches["low"]
    assert low_f == pytest.approx(0.5)
    assert low_v == pytest.approx(0.7192710389564267, abs=5e-4)
    integ = min_adaptive_ratio(mode="integral")
    assert integ.minimum == pytest.approx(0.7053831143834944, abs=5e-4)
    assert integ.minimizer == pytest.approx(1.0)


def test_qz_lower_bound_endpoints():
    assert qz_lower_bound(1.0, "general") == pytest.approx(math.log(2.0), abs=1e-12)
    assert qz_lower_bound(0.3, "general") == 0.0
    assert qz_lower_bound(1.0, "integral") == pytest.approx(2.0 * E1, abs=1e-12)
    with pytest.raises(ValueError):
        qz_lower_bound(0.5, "bogus")


def three_neighbor_example():
    """Bin z fed by rates (0.5, 0.5, 1) with f (0.3, 0.3, 0.4)."""
    bins = ("z", "w1", "w2", "w3")
    inst = Instance(bins=bins,
                    ball_types=(BallType("y1", 0.5, ("z", "w1")),
                                BallType("y2", 0.5, ("z", "w2")),
                                BallType("y3", 1.0, ("z", "w3")),),
                    horizon=2)
    fm = FractionalMatching(values={
        ("y1", "z"): 0.3, ("y1", "w1"): 0.2,
        ("y2", "z"): 0.3, ("y2", "w2"): 0.2,
        ("y3", "z"): 0.4, ("y3", "w3"): 0.5,
    }, meta={"source": "synthetic"})
    return inst, fm


def test_qz_three_neighbor_example():
    inst, fm = three_neighbor_example()
    parts = build_partitions(inst, fm)
    # overlapping edges contribute r - f, the rest contribute f:
    # 0.2 + 0.2 + 0.4 = 0.8
    assert compute_qz(parts, inst, "z") == pytest.approx(0.8, abs=1e-12)
    assert qz_closed_form(inst, fm, "z") == pytest.approx(0.8, abs=1e-12)


def test_qz_interval_and_closed_form_agree_randomly():
    rng = np.random.default_rng(77)
    for trial in range(40):
        n_types = int(rng.integers(1, 5))
        bins = ("z",) + tuple(f"w{i}" for i in range(n_types))
        types = []
        values = {}
        total = 0.0
        for i in range(n_types):
            r = float(rng.uniform(0.1, 1.0))
            fz = float(rng.uniform(0.0, r)) * 0.5
            fw = float(rng.uniform(0.0, r - fz))
            types.append(BallType(f"y{i}", r, ("z", f"w{i}")))
            values[(f"y{i}", "z")] = fz
            values[(f"y{i}", f"w{i}")] = fw
            total += r
        fill = math.ceil(total + 0.01) - total
        types.append(BallType("fill", fill, (bins[-1],) if n_types else bins))
        inst = Instance(bins=bins, ball_types=tuple(types),
                        horizon=math.ceil(total + 0.01))
        fm = FractionalMatching(values=values, meta={})
        if sum(v for (y, z), v in values.items() if z == "z") > 1.0:
            continue
        parts = build_partitions(inst, fm)
        assert compute_qz(parts, inst, "z") == pytest.approx(
            qz_closed_form(inst, fm, "z"), abs=1e-9)


def test_qz_dominates_lower_bound_under_caps():
    """Profiles obeying the concave prefix caps respect the closed-form
    lower bound on the second-priority mass."""
    rng = np.random.default_rng(123)
    for _ in range(400):
        k = int(rng.integers(1, 30))
        rates = rng.uniform(0.02, 1.0, size=k)
        caps = []
        acc_r = 0.0
        for r in rates:
            caps.append((1 - math.exp(-(acc_r + r))) - (1 - math.exp(-acc_r)))
            acc_r += r
        u = rng.uniform(0.0, 1.0, size=k)
        f = u * np.array(caps)
        f_z = float(f.sum())
        if f_z > 1.0:
            continue
        q = float(sum(min(fe, r - fe) for fe, r in zip(f, rates)))
        assert q >= qz_lower_bound(f_z, "general") - 1e-9

    # integral rates against the stronger bound
    for _ in range(400):
        k = int(rng.integers(1, 10))
        caps = [(1 - math.exp(-(j + 1))) - (1 - math.exp(-j)) for j in range(k)]
        u = rng.uniform(0.0, 1.0, size=k)
        f = u * np.array(caps)
        f_z = float(f.sum())
        q = float(sum(min(fe, 1.0 - fe) for fe in f))
        assert q >= qz_lower_bound(f_z, "integral") - 1e-9


def test_verify_edge_caps_flags_violations():
    bins = tuple(f"z{i}" for i in range(3))
    types = tuple(BallType(f"y{i}", 1.0, bins) for i in range(60))
    inst = Instance(bins=bins, ball_types=types, horizon=60)
    good = FractionalMatching(values={("y0", "z0"): 0.5}, meta={})
    assert verify_edge_caps(good, inst) == []
    # cap for rate 1 at b = 60 is 1 - (1 - 1/60)^60 ~ 0.6351
    bad = FractionalMatching(values={("y0", "z0"): 0.9}, meta={})
    flagged = verify_edge_caps(bad, inst)
    assert len(flagged) == 1 and flagged[0][:2] == ("y0", "z0")


def test_verify_edge_caps_skips_short_horizons():
    inst = Instance(bins=("u",), ball_types=(BallType("a", 1.0, ("u",)),),
                    horizon=1)
    fm = FractionalMatching(values={("a", "u"): 1.0}, meta={})
    assert verify_edge_caps(fm, inst) is None


def test_bound_argument_validation():
    with pytest.raises(ValueError):
        nonadaptive_ratio(0.0, 0.0)
    with pytest.raises(ValueError):
        worst_edge_profile(1.5)
    with pytest.raises(ValueError):
        adaptive_ratio(-0.2, 0.1)
