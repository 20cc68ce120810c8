"""Command-line front end.

Subcommands cover the full pipeline: generate instances (including the
hard families), estimate or exactly compute fractional matchings,
decompose them into matching distributions, simulate policies against
the offline oracle, evaluate policy values exactly on small instances,
scan the closed-form ratio bounds, and evaluate the hardness recurrences.

Exit codes: 0 on success, 1 when a computation or invariant fails,
2 for command-line usage errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bounds as bounds_mod
from . import harness
from .decompose import decompose, load_distribution, save_distribution
from .hardness import (
    C_STAR_DEFAULT,
    ProceduralCuckoo,
    gen_cuckoo_hard,
    gen_integral_hard,
    gen_small_rates,
    recurrence_cuckoo,
    recurrence_integral,
)
from .instance import (
    Instance,
    generate_random_instance,
    load_instance,
    save_instance,
)
from .offline_stats import (
    EXACT_SEQUENCE_CAP,
    estimate_f,
    exact_f,
    load_fractional,
    repair_f,
    save_fractional,
)
from .policies import build_partitions

__all__ = ["main"]


def _load_source(path: str) -> Instance | ProceduralCuckoo:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict) and data.get("family") == "prop-cuckoo":
        return ProceduralCuckoo(n=int(data["n"]), c_star=float(data["c_star"]))
    return load_instance(path)


def _resolve_source(args) -> Instance | ProceduralCuckoo:
    if getattr(args, "instance", None):
        return _load_source(args.instance)
    fam = getattr(args, "family", None)
    if not fam:
        raise ValueError("provide --instance or --family")
    if args.n is None:
        raise ValueError("--family requires --n")
    if fam == "small-rates":
        return gen_small_rates(args.n)
    if fam == "integral-hard":
        return gen_integral_hard(args.n)
    if fam == "cuckoo-hard":
        return gen_cuckoo_hard(args.n, c_star=args.c_star, mode=args.mode)
    raise ValueError(f"unknown family {fam!r}")


def _add_source_args(p: argparse.ArgumentParser, with_mode: bool = True):
    p.add_argument("--instance", help="instance JSON (or procedural family descriptor)")
    p.add_argument("--family", choices=["small-rates", "integral-hard", "cuckoo-hard"],
                   help="generate a hard family instead of loading a file")
    p.add_argument("--n", type=int, help="family size parameter")
    p.add_argument("--c-star", type=float, default=C_STAR_DEFAULT,
                   help="cuckoo load parameter")
    if with_mode:
        p.add_argument("--mode", choices=["materialized", "procedural"],
                       default="materialized", help="cuckoo family realization")


def _write_or_print(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_gen(args) -> int:
    if args.family == "random":
        inst = generate_random_instance(args.n_types, args.n_bins, args.degree,
                                        rate_mode=args.rate_mode, seed=args.seed)
        save_instance(inst, args.out)
        print(f"wrote {args.out}: {inst.n_types} types, {inst.n_bins} bins, "
              f"horizon {inst.horizon}")
        return 0
    src = _resolve_source(args)
    if isinstance(src, ProceduralCuckoo):
        Path(args.out).write_text(json.dumps(src.to_json(), indent=2) + "\n",
                                  encoding="utf-8")
        print(f"wrote {args.out}: procedural cuckoo family, n={src.n}")
        return 0
    save_instance(src, args.out)
    print(f"wrote {args.out}: {src.n_types} types, {src.n_bins} bins, "
          f"horizon {src.horizon}")
    return 0


def _cmd_estimate_f(args) -> int:
    inst = load_instance(args.instance)
    if args.method == "exact":
        fm = exact_f(inst, cap=EXACT_SEQUENCE_CAP)
    else:
        fm = estimate_f(inst, samples=args.samples, seed=args.seed)
    if not args.no_repair:
        fm = repair_f(fm, inst)
    save_fractional(fm, args.out)
    print(f"wrote {args.out}: {len(fm.values)} edges, total weight {fm.total():.6f}")
    return 0


def _cmd_decompose(args) -> int:
    fm = load_fractional(args.f)
    mu = decompose(fm)
    save_distribution(mu, args.out)
    print(f"wrote {args.out}: {len(mu.atoms)} atoms")
    return 0


def _cmd_simulate(args) -> int:
    src = _resolve_source(args)
    result = harness.simulate(
        src, args.policy, trials=args.trials, seed=args.seed,
        samples=args.samples,
        dummy_always_full=(args.dummy == "always-full"),
        resamples=args.resamples, threads=args.threads,
    )
    if args.out:
        Path(args.out).write_text(harness.rows_to_csv(result.rows),
                                  encoding="utf-8")
    if args.summary_out:
        Path(args.summary_out).write_text(
            json.dumps(harness.summary_dict(result.estimate), indent=2) + "\n",
            encoding="utf-8")
    e = result.estimate
    print(f"{e.policy}: ratio {e.ratio:.6f} "
          f"[{e.ci_low:.6f}, {e.ci_high:.6f}] over {e.trials} trials "
          f"(alg {e.mean_alg:.4f}, opt {e.mean_opt:.4f})")
    return 0


def _cmd_exact(args) -> int:
    inst = load_instance(args.instance)
    fm = estimate_f(inst, samples=args.samples, seed=args.seed)
    fm = repair_f(fm, inst)
    if args.policy == "adaptive":
        parts = build_partitions(inst, fm)
        alg = harness.exact_value_adaptive(
            inst, parts, dummy_always_full=(args.dummy == "always-full"))
    else:
        alg = harness.exact_value_nonadaptive(inst, decompose(fm))
    enumerable = inst.n_types ** inst.horizon <= EXACT_SEQUENCE_CAP
    if enumerable:
        opt = exact_f(inst, cap=EXACT_SEQUENCE_CAP).meta["mean_opt"]
        method = "exact"
    else:
        opt = fm.meta["mean_opt"]
        method = "monte-carlo"
    payload = {"policy": args.policy, "exact_alg": alg, "opt_value": opt,
               "opt_method": method, "ratio": alg / opt if opt > 0 else 1.0}
    _write_or_print(json.dumps(payload, indent=2), args.out)
    return 0


def _bound_payload(report) -> dict:
    out = {"expression": report.expression, "mode": report.mode,
           "minimum": report.minimum, "minimizer": report.minimizer}
    if report.branches:
        out["branches"] = report.branches
    return out


def _cmd_verify_bounds(args) -> int:
    payload = {"grid_step": args.grid}
    if args.which in ("nonadaptive", "all"):
        payload["nonadaptive"] = _bound_payload(
            bounds_mod.min_nonadaptive_ratio(grid_step=args.grid))
    if args.which in ("adaptive", "all"):
        modes = [args.mode] if args.which == "adaptive" else ["general", "integral"]
        for mode in modes:
            payload[f"adaptive_{mode}"] = _bound_payload(
                bounds_mod.min_adaptive_ratio(mode=mode, grid_step=args.grid))
    _write_or_print(json.dumps(payload, indent=2), args.out)
    return 0


def _cmd_recurrence(args) -> int:
    if args.family == "prop-integral":
        value = recurrence_integral(args.n)
    else:
        value = recurrence_cuckoo(args.n, c_star=args.c_star)
    payload = {"family": args.family, "n": args.n, "value": value}
    if args.family == "prop-cuckoo":
        payload["c_star"] = args.c_star
    _write_or_print(json.dumps(payload, indent=2), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stochmatch",
                                 description="online stochastic matching toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--family",
                   choices=["small-rates", "integral-hard", "cuckoo-hard", "random"],
                   required=True)
    g.add_argument("--n", type=int, help="family size parameter")
    g.add_argument("--c-star", type=float, default=C_STAR_DEFAULT)
    g.add_argument("--mode", choices=["materialized", "procedural"],
                   default="materialized")
    g.add_argument("--n-types", type=int, default=8)
    g.add_argument("--n-bins", type=int, default=6)
    g.add_argument("--degree", type=int, default=3)
    g.add_argument("--rate-mode", choices=["integral", "fractional"],
                   default="fractional")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    e = sub.add_parser("estimate-f", help="estimate the fractional matching")
    e.add_argument("--instance", required=True)
    e.add_argument("--method", choices=["mc", "exact"], default="mc")
    e.add_argument("--samples", type=int, default=harness.DEFAULT_F_SAMPLES)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--no-repair", action="store_true",
                   help="skip scaling types whose mass exceeds their cap")
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_estimate_f)

    d = sub.add_parser("decompose", help="decompose a fractional matching")
    d.add_argument("--f", required=True, help="fractional matching JSON")
    d.add_argument("--out", required=True)
    d.set_defaults(func=_cmd_decompose)

    s = sub.add_parser("simulate", help="simulate a policy against the offline oracle")
    _add_source_args(s)
    s.add_argument("--policy", choices=list(harness.POLICY_NAMES), required=True)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=harness.DEFAULT_F_SAMPLES)
    s.add_argument("--dummy", choices=["always-full", "always-empty"],
                   default="always-full")
    s.add_argument("--resamples", type=int, default=harness.DEFAULT_RESAMPLES)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", help="trial rows CSV")
    s.add_argument("--summary-out", help="summary JSON")
    s.set_defaults(func=_cmd_simulate)

    x = sub.add_parser("exact", help="exact policy value on a small instance")
    x.add_argument("--instance", required=True)
    x.add_argument("--policy", choices=["adaptive", "nonadaptive"], required=True)
    x.add_argument("--samples", type=int, default=harness.DEFAULT_F_SAMPLES)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--dummy", choices=["always-full", "always-empty"],
                   default="always-full")
    x.add_argument("--out")
    x.set_defaults(func=_cmd_exact)

    v = sub.add_parser("verify-bounds", help="scan the closed-form ratio bounds")
    v.add_argument("--which", choices=["nonadaptive", "adaptive", "all"],
                   default="all")
    v.add_argument("--mode", choices=["general", "integral"], default="general",
                   help="rate regime for the adaptive bound")
    v.add_argument("--grid", type=float, default=bounds_mod.DEFAULT_GRID_STEP)
    v.add_argument("--out")
    v.set_defaults(func=_cmd_verify_bounds)

    r = sub.add_parser("recurrence", help="evaluate a hardness recurrence")
    r.add_argument("--family", choices=["prop-integral", "prop-cuckoo"],
                   required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--c-star", type=float, default=C_STAR_DEFAULT)
    r.add_argument("--out")
    r.set_defaults(func=_cmd_recurrence)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, AssertionError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
