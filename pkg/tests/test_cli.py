"""Command-line interface: subcommand behavior, files, exit codes."""

import json

import pytest

from stochmatch.cli import main


def run(args):
    return main(args)


def test_gen_random_and_simulate(tmp_path):
    inst = tmp_path / "inst.json"
    assert run(["gen", "--family", "random", "--n-types", "5", "--n-bins", "4",
                "--degree", "2", "--seed", "3", "--out", str(inst)]) == 0
    assert inst.exists()
    csv = tmp_path / "rows.csv"
    summary = tmp_path / "summary.json"
    assert run(["simulate", "--instance", str(inst), "--policy", "greedy",
                "--trials", "40", "--seed", "1", "--out", str(csv),
                "--summary-out", str(summary)]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "trial,policy,matched,opt,seed"
    assert len(lines) == 41
    data = json.loads(summary.read_text())
    assert data["policy"] == "greedy" and data["trials"] == 40
    assert 0.0 < data["ratio"] <= 1.0


def test_estimate_then_decompose(tmp_path):
    inst = tmp_path / "inst.json"
    run(["gen", "--family", "random", "--n-types", "4", "--n-bins", "3",
         "--degree", "2", "--seed", "5", "--out", str(inst)])
    f = tmp_path / "f.json"
    assert run(["estimate-f", "--instance", str(inst), "--samples", "3000",
                "--seed", "2", "--out", str(f)]) == 0
    mu = tmp_path / "mu.json"
    assert run(["decompose", "--f", str(f), "--out", str(mu)]) == 0
    atoms = json.loads(mu.read_text())["atoms"]
    assert sum(a["weight"] for a in atoms) == pytest.approx(1.0, abs=1e-9)


def test_exact_method_estimate_f(tmp_path):
    inst = tmp_path / "inst.json"
    run(["gen", "--family", "small-rates", "--n", "2", "--out", str(inst)])
    f = tmp_path / "f.json"
    assert run(["estimate-f", "--instance", str(inst), "--method", "exact",
                "--out", str(f)]) == 0
    data = json.loads(f.read_text())
    assert data["meta"]["source"] == "exact"


def test_gen_families(tmp_path):
    for fam, n in [("small-rates", 4), ("integral-hard", 6), ("cuckoo-hard", 8)]:
        out = tmp_path / f"{fam}.json"
        assert run(["gen", "--family", fam, "--n", str(n), "--out", str(out)]) == 0
        assert out.exists()
    pc = tmp_path / "pc.json"
    assert run(["gen", "--family", "cuckoo-hard", "--n", "300",
                "--mode", "procedural", "--out", str(pc)]) == 0
    assert json.loads(pc.read_text())["family"] == "prop-cuckoo"
    csv = tmp_path / "pc_rows.csv"
    assert run(["simulate", "--instance", str(pc), "--policy", "greedy",
                "--trials", "5", "--seed", "0", "--out", str(csv)]) == 0


def test_simulate_from_family_flag(tmp_path):
    assert run(["simulate", "--family", "small-rates", "--n", "4",
                "--policy", "greedy", "--trials", "20", "--seed", "0"]) == 0


def test_exact_subcommand(tmp_path):
    inst = tmp_path / "inst.json"
    run(["gen", "--family", "small-rates", "--n", "3", "--out", str(inst)])
    out = tmp_path / "exact.json"
    assert run(["exact", "--instance", str(inst), "--policy", "adaptive",
                "--samples", "4000", "--seed", "1", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["opt_method"] == "exact"
    assert 0.0 < data["ratio"] <= 1.0 + 1e-9


def test_verify_bounds_subcommand(tmp_path):
    out = tmp_path / "bounds.json"
    assert run(["verify-bounds", "--which", "nonadaptive", "--grid", "0.002",
                "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["nonadaptive"]["minimum"] == pytest.approx(0.6844, abs=5e-4)
    assert run(["verify-bounds", "--which", "adaptive", "--mode", "integral",
                "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["adaptive_integral"]["minimum"] == pytest.approx(0.7054, abs=5e-4)


def test_recurrence_subcommand(tmp_path):
    out = tmp_path / "rec.json"
    assert run(["recurrence", "--family", "prop-integral", "--n", "5000",
                "--out", str(out)]) == 0
    v = json.loads(out.read_text())["value"]
    assert v == pytest.approx(1 - 2.718281828459045 ** -2, abs=1e-2)


def test_exit_code_one_on_bad_input(tmp_path):
    missing = tmp_path / "missing.json"
    assert run(["simulate", "--instance", str(missing), "--policy", "greedy",
                "--trials", "5", "--seed", "0"]) == 1
    assert run(["simulate", "--policy", "greedy", "--trials", "5",
                "--seed", "0"]) == 1
    assert run(["gen", "--family", "cuckoo-hard", "--n", "100",
                "--out", str(tmp_path / "x.json")]) == 1


def test_exit_code_two_on_bad_flags():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--policy", "nope", "--trials", "1"])
    assert exc.value.code == 2


def test_simulate_determinism_across_runs(tmp_path):
    inst = tmp_path / "inst.json"
    run(["gen", "--family", "integral-hard", "--n", "6", "--out", str(inst)])
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["simulate", "--instance", str(inst), "--policy", "nonadaptive",
            "--trials", "80", "--seed", "9"]
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
