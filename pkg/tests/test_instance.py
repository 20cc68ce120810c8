"""Instance model: validation, normalization, serialization, sampling."""

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochmatch.instance import (
    BallType,
    Instance,
    RawInstance,
    arrival_indices,
    generate_random_instance,
    load_instance,
    normalize_instance,
    sample_arrivals,
    save_instance,
)


def mk(bins, types, horizon):
    return Instance(bins=tuple(bins),
                    ball_types=tuple(BallType(i, r, tuple(nb)) for i, r, nb in types),
                    horizon=horizon)


def test_basic_construction():
    inst = mk(["u", "v"], [("a", 1.0, ["u"]), ("c", 1.0, ["u", "v"])], 2)
    assert inst.n_types == 2 and inst.n_bins == 2
    assert inst.rates.tolist() == [1.0, 1.0]
    assert inst.neighbors_idx == ((0,), (0, 1))
    assert set(inst.edges()) == {("a", "u"), ("c", "u"), ("c", "v")}


@pytest.mark.parametrize("types,horizon,msg", [
    ([("a", 1.5, ["u"])], 2, "rate"),
    ([("a", 1.0, ["u"]), ("a", 1.0, ["u"])], 2, "duplicate"),
    ([("a", 1.0, ["w"])], 1, "unknown"),
    ([("a", 1.0, ["u", "u"])], 1, "duplicate"),
    ([("a", 1.0, ["u"])], 2, "sum"),
    ([("a", -0.2, ["u"])], 1, "rate"),
])
def test_validation_errors(types, horizon, msg):
    with pytest.raises(ValueError, match=msg):
        mk(["u", "v"], types, horizon)


def test_duplicate_bins_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        mk(["u", "u"], [("a", 1.0, ["u"])], 1)


def test_normalize_splits_large_rates():
    raw = RawInstance(bins=("u", "v", "w"),
                      ball_types=(BallType("a", 2.5, ("u", "v")),
                                  BallType("c", 0.5, ("w",))),
                      horizon=3)
    inst = normalize_instance(raw)
    ids = [t.id for t in inst.ball_types]
    assert ids == ["a#1", "a#2", "a#3", "c"]
    rates = [t.rate for t in inst.ball_types]
    assert rates[:2] == [1.0, 1.0]
    assert rates[2] == pytest.approx(0.5)
    for t in inst.ball_types[:3]:
        assert t.neighbors == ("u", "v")


def test_normalize_rescales_to_horizon():
    raw = RawInstance(bins=("u",), ball_types=(BallType("a", 0.8, ("u",)),),
                      horizon=1)
    inst = normalize_instance(raw)
    assert inst.ball_types[0].rate == pytest.approx(1.0)
    assert inst.horizon == 1


def test_normalize_infers_horizon_by_rounding():
    raw = RawInstance(bins=("u", "v"),
                      ball_types=(BallType("a", 1.02, ("u",)),
                                  BallType("c", 0.96, ("v",))),
                      horizon=None)
    inst = normalize_instance(raw)
    assert inst.horizon == 2
    assert float(inst.rates.sum()) == pytest.approx(2.0)


def test_normalize_idempotent_bit_exact():
    raw = RawInstance(bins=("u", "v"),
                      ball_types=(BallType("a", 0.7, ("u",)),
                                  BallType("c", 1.3, ("u", "v"))),
                      horizon=2)
    once = normalize_instance(raw)
    again = normalize_instance(RawInstance(bins=once.bins,
                                           ball_types=once.ball_types,
                                           horizon=once.horizon))
    assert once == again


def test_normalize_rejects_extreme_rescale():
    raw = RawInstance(bins=("u",), ball_types=(BallType("a", 0.2, ("u",)),),
                      horizon=1)
    with pytest.raises(ValueError, match="rescal"):
        normalize_instance(raw)


def test_save_load_round_trip(tmp_path):
    inst = generate_random_instance(6, 5, 3, rate_mode="fractional", seed=4)
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    back = load_instance(path)
    assert back == inst
    data = json.loads(path.read_text())
    assert set(data) == {"bins", "ball_types", "horizon"}


def test_load_is_strict(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "bins": ["u"],
        "ball_types": [{"id": "a", "rate": 0.5, "neighbors": ["u"]}],
        "horizon": 1,
    }))
    with pytest.raises(ValueError, match="normalize"):
        load_instance(path)


def test_generate_integral_mode():
    inst = generate_random_instance(5, 4, 2, rate_mode="integral", seed=0)
    assert all(t.rate == 1.0 for t in inst.ball_types)
    assert inst.horizon == 5


def test_generate_deterministic():
    a = generate_random_instance(7, 5, 3, rate_mode="fractional", seed=12)
    b = generate_random_instance(7, 5, 3, rate_mode="fractional", seed=12)
    assert a == b
    c = generate_random_instance(7, 5, 3, rate_mode="fractional", seed=13)
    assert a != c


def test_sample_arrivals_shape_and_counts():
    inst = generate_random_instance(4, 4, 2, rate_mode="fractional", seed=3)
    rng = np.random.default_rng(0)
    seq = sample_arrivals(inst, rng)
    assert len(seq.draws) == inst.horizon
    assert sum(seq.counts.values()) == inst.horizon
    idx = arrival_indices(inst, seq)
    assert [inst.ball_types[i].id for i in idx] == list(seq.draws)


def test_sample_arrivals_law_of_large_numbers():
    inst = generate_random_instance(5, 4, 2, rate_mode="fractional", seed=8)
    rng = np.random.default_rng(42)
    counts = np.zeros(inst.n_types)
    trials = 4000
    for _ in range(trials):
        seq = sample_arrivals(inst, rng)
        for t, c in seq.counts.items():
            counts[inst.type_index[t]] += c
    emp = counts / trials
    for k in range(inst.n_types):
        r = inst.rates[k]
        sigma = np.sqrt(r * max(1.0 - r / inst.horizon, 1e-12) / trials)
        assert abs(emp[k] - r) < 5 * sigma + 1e-9


@given(st.lists(st.floats(0.05, 2.8), min_size=1, max_size=6),
       st.integers(1, 5))
def test_property_normalize_valid(rates, n_bins):
    bins = tuple(f"z{i}" for i in range(n_bins))
    types = tuple(BallType(f"y{i}", r, bins) for i, r in enumerate(rates))
    raw = RawInstance(bins=bins, ball_types=types, horizon=None)
    total = sum(rates)
    if round(total) < 1 or not 0.5 <= round(total) / total <= 1.5:
        with pytest.raises(ValueError):
            normalize_instance(raw)
        return
    inst = normalize_instance(raw)
    assert abs(float(inst.rates.sum()) - inst.horizon) < 1e-9
    assert all(0 < t.rate <= 1.0 + 1e-12 for t in inst.ball_types)
    # splitting preserves neighbor sets
    for t in inst.ball_types:
        assert t.neighbors == bins
