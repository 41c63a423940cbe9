import json

from agvshop.cli import main
from agvshop.instance_gen import read_instance, write_instance
from agvshop.milp import parse_lp
from agvshop.qcbo import qubo_from_json
from agvshop.solve import greedy_schedule
from agvshop.validate import write_schedule

from helpers import TINY


def write_tiny(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(write_instance(TINY))
    return path


def test_generate(tmp_path, capsys):
    out = tmp_path / "instances"
    code = main(
        [
            "generate",
            "--seed",
            "3",
            "--count",
            "2",
            "--out",
            str(out),
            "--na-min",
            "1",
            "--na-max",
            "1",
            "--nb-min",
            "0",
            "--nb-max",
            "1",
        ]
    )
    assert code == 0
    files = sorted(out.glob("*.json"))
    assert len(files) == 2
    read_instance(files[0].read_text())


def test_build_milp_and_qubo(tmp_path):
    instance = write_tiny(tmp_path)
    lp_path = tmp_path / "model.lp"
    assert main(["build", "milp", "--instance", str(instance), "--out", str(lp_path)]) == 0
    parsed = parse_lp(lp_path.read_text())
    assert parsed.objective == {"c": 1.0}

    qubo_path = tmp_path / "model.qubo.json"
    assert (
        main(
            [
                "build",
                "qubo",
                "--instance",
                str(instance),
                "--penalty",
                "20",
                "--out",
                str(qubo_path),
            ]
        )
        == 0
    )
    qubo = qubo_from_json(qubo_path.read_text())
    assert qubo.n == 127


def test_validate_exit_codes(tmp_path, capsys):
    instance = write_tiny(tmp_path)
    good = greedy_schedule(TINY).schedule
    schedule_path = tmp_path / "sched.json"
    schedule_path.write_text(write_schedule(good))
    assert (
        main(["validate", "--instance", str(instance), "--schedule", str(schedule_path)])
        == 0
    )
    assert "feasible" in capsys.readouterr().out

    bad = good.placements.copy()
    first = next(iter(bad))
    bad[first] = bad[first]._replace(start=1)
    from agvshop.core import Schedule

    schedule_path.write_text(write_schedule(Schedule(bad, good.a1_pickups)))
    assert (
        main(["validate", "--instance", str(instance), "--schedule", str(schedule_path)])
        == 1
    )
    assert capsys.readouterr().out.strip()


def test_solve_writes_result(tmp_path):
    instance = write_tiny(tmp_path)
    out = tmp_path / "result.json"
    code = main(
        [
            "solve",
            "--instance",
            str(instance),
            "--method",
            "greedy",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["feasible"] is True
    assert doc["schedule"]["tasks"]


def test_bench_run_and_report(tmp_path, capsys):
    instance = write_tiny(tmp_path)
    suite = {
        "instances": [str(instance)],
        "arms": [{"model": "qcbo", "method": "greedy"}],
        "base_budget_seconds": 0.1,
        "multipliers": [1],
        "runs": 2,
        "seed": 9,
        "workers": 1,
    }
    suite_path = tmp_path / "suite.json"
    suite_path.write_text(json.dumps(suite))
    out = tmp_path / "results"
    assert main(["bench", "run", "--suite", str(suite_path), "--out", str(out)]) == 0
    assert (out / "records.jsonl").exists()
    report = tmp_path / "report"
    assert main(["bench", "report", "--records", str(out), "--out", str(report)]) == 0
    assert (report / "tables" / "gap_stats.csv").exists()
    assert (report / "figures" / "gap_scatter_1x.svg").exists()
