"""Command line entry points.

    agvshop generate --seed 7 --count 3 --out instances/
    agvshop build milp --instance inst.json --out model.lp
    agvshop build qubo --instance inst.json --out model.qubo.json
    agvshop validate --instance inst.json --schedule sched.json
    agvshop solve --instance inst.json --method anneal --budget 10 --seed 7 --out result.json
    agvshop bench run --suite suite.json --out results/
    agvshop bench report --records results/ --out results/report/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from agvshop import bench as bench_mod
from agvshop.instance_gen import GenConfig, generate, read_instance, write_instance
from agvshop.milp import build_milp, export_lp
from agvshop.qcbo import build_qcbo, qubo_to_json, to_qubo
from agvshop.solve import solve_instance
from agvshop.validate import (
    makespan,
    read_schedule,
    validate_schedule,
    write_schedule,
)


def _add_generate(subparsers) -> None:
    p = subparsers.add_parser("generate", help="sample random instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    for name, default in (
        ("na", (3, 11)),
        ("nb", (3, 11)),
        ("agvs", (1, 5)),
        ("a1", (3, 9)),
        ("a2", (2, 8)),
        ("b1", (2, 9)),
        ("b2", (3, 8)),
        ("b3", (2, 7)),
    ):
        p.add_argument(f"--{name}-min", type=int, default=default[0])
        p.add_argument(f"--{name}-max", type=int, default=default[1])
    p.add_argument("--delta", type=int, default=1)
    p.add_argument(
        "--horizon-policy", choices=("trivial_bound", "fixed"), default="trivial_bound"
    )
    p.add_argument("--horizon-value", type=int, default=None)


def _run_generate(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        config = GenConfig(
            seed=args.seed + i,
            n_a=(args.na_min, args.na_max),
            n_b=(args.nb_min, args.nb_max),
            num_agvs=(args.agvs_min, args.agvs_max),
            p_a1=(args.a1_min, args.a1_max),
            p_a2=(args.a2_min, args.a2_max),
            p_b1=(args.b1_min, args.b1_max),
            p_b2=(args.b2_min, args.b2_max),
            p_b3=(args.b3_min, args.b3_max),
            delta=args.delta,
            horizon_policy=args.horizon_policy,
            horizon_value=args.horizon_value,
        )
        instance = generate(config)
        path = args.out / f"instance_{args.seed + i:06d}.json"
        path.write_text(write_instance(instance))
        print(path)
    return 0


def _run_build(args) -> int:
    instance = read_instance(Path(args.instance).read_text())
    if args.model == "milp":
        model = build_milp(instance, strict_handoff=args.strict_handoff)
        Path(args.out).write_text(export_lp(model))
    else:
        model = build_qcbo(instance)
        qubo = to_qubo(model, args.penalty)
        Path(args.out).write_text(qubo_to_json(qubo))
    print(args.out)
    return 0


def _run_validate(args) -> int:
    instance = read_instance(Path(args.instance).read_text())
    schedule = read_schedule(Path(args.schedule).read_text())
    violations = validate_schedule(instance, schedule)
    for violation in violations:
        print(violation)
    if not violations:
        print(f"feasible, makespan {makespan(instance, schedule)}")
    return 0 if not violations else 1


def _run_solve(args) -> int:
    instance = read_instance(Path(args.instance).read_text())
    result = solve_instance(
        instance, method=args.method, budget=args.budget, seed=args.seed
    )
    doc = {
        "objective": result.objective,
        "feasible": result.feasible,
        "proven_optimal": result.proven_optimal,
        "runtime": result.runtime,
        "iterations": result.iterations,
        "seed": result.seed,
        "trace": [[t, o] for t, o in result.trace],
        "schedule": (
            json.loads(write_schedule(result.schedule)) if result.schedule else None
        ),
    }
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(args.out)
    else:
        print(text, end="")
    return 0 if result.feasible else 1


def _run_bench(args) -> int:
    if args.bench_command == "run":
        suite = bench_mod.suite_from_json(Path(args.suite).read_text())
        out = Path(args.out)
        records = bench_mod.run_experiment(suite, out / "records.jsonl")
        print(f"{len(records)} records in {out / 'records.jsonl'}")
        return 0
    records = bench_mod.read_records(Path(args.records))
    if not records:
        print("no records found", file=sys.stderr)
        return 1
    reference = None
    if args.reference_model and args.reference_method:
        reference = (args.reference_model, args.reference_method)
    written = bench_mod.render_report(records, Path(args.out), reference_arm=reference)
    for path in sorted(written.values()):
        print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="agvshop")
    subparsers = parser.add_subparsers(dest="command", required=True)

    _add_generate(subparsers)

    build = subparsers.add_parser("build", help="export solver models")
    build_sub = build.add_subparsers(dest="model", required=True)
    milp = build_sub.add_parser("milp", help="write the LP text model")
    milp.add_argument("--instance", required=True)
    milp.add_argument("--out", required=True)
    milp.add_argument("--strict-handoff", action="store_true")
    qubo = build_sub.add_parser("qubo", help="write the penalty QUBO as JSON")
    qubo.add_argument("--instance", required=True)
    qubo.add_argument("--penalty", type=int, default=None)
    qubo.add_argument("--out", required=True)

    val = subparsers.add_parser("validate", help="check a schedule file")
    val.add_argument("--instance", required=True)
    val.add_argument("--schedule", required=True)

    solve = subparsers.add_parser("solve", help="run a native solver")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--method", choices=("brute", "greedy", "anneal"), required=True)
    solve.add_argument("--budget", type=float, default=5.0)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--out", default=None)

    bench = subparsers.add_parser("bench", help="benchmark suites and reports")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    run = bench_sub.add_parser("run", help="execute a suite")
    run.add_argument("--suite", required=True)
    run.add_argument("--out", required=True)
    report = bench_sub.add_parser("report", help="render tables and figures")
    report.add_argument("--records", required=True)
    report.add_argument("--out", required=True)
    report.add_argument("--reference-model", default=None)
    report.add_argument("--reference-method", default=None)

    args = parser.parse_args(argv)
    if args.command == "generate":
        return _run_generate(args)
    if args.command == "build":
        return _run_build(args)
    if args.command == "validate":
        return _run_validate(args)
    if args.command == "solve":
        return _run_solve(args)
    return _run_bench(args)


if __name__ == "__main__":
    sys.exit(main())
