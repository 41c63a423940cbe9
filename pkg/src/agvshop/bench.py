"""Benchmark protocol: repeated budgeted runs, gaps, wins, time to target.

Every (instance, arm, budget multiplier) cell is run five times with
distinct derived seeds.  Records append to a JSONL file as runs finish,
so an interrupted suite resumes where it stopped and a rerun of a
completed suite recomputes nothing.

Reporting mirrors the usual solver-comparison tables: runs of a cell are
sorted by objective and compared rank against rank (best vs best, second
vs second, ...).  The primal gap is measured against the best objective
any arm achieved on the instance.  Time-to-solution ratios compare the
reference arm's best run against each rank of the other arms, where the
target is the reference arm's best objective for that instance and
multiplier; ratios aggregate with geometric mean / geometric standard
deviation so reciprocal speedups cancel.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

from agvshop.core import movable_tasks
from agvshop.instance_gen import read_instance
from agvshop.solve import solve_instance

RANK_LABELS = {5: ("best", "second_best", "median", "second_worst", "worst")}


def primal_gap(objective: float, best_known: float) -> float:
    """Percent excess over the best known objective; 0 means matching it."""
    if best_known < 1:
        raise ValueError("best_known must be >= 1")
    if objective < best_known:
        raise ValueError(
            f"objective {objective} below best_known {best_known}; "
            "best_known must be the incumbent minimum"
        )
    return 100.0 * (objective - best_known) / best_known


def wins(objectives_a: list, objectives_b: list) -> tuple[int, int, int]:
    """Element-wise win/loss/tie tallies of two equally long run lists.

    Callers sort both lists ascending first so ranks are compared.
    """
    if len(objectives_a) != len(objectives_b):
        raise ValueError("objective lists must have equal length")
    wins_a = sum(1 for a, b in zip(objectives_a, objectives_b) if a < b)
    wins_b = sum(1 for a, b in zip(objectives_a, objectives_b) if b < a)
    return wins_a, wins_b, len(objectives_a) - wins_a - wins_b


def tts_ratio(t_a: float, t_b: float) -> float:
    """t_a / t_b; above 1 means side a was slower by that factor."""
    if t_b <= 0:
        raise ValueError("t_b must be positive")
    return t_a / t_b


def geo_stats(values: list) -> tuple[float, float]:
    """Geometric mean and geometric standard deviation (population logs)."""
    if not values:
        raise ValueError("values must be nonempty")
    logs = []
    for v in values:
        if v <= 0:
            raise ValueError(f"values must be positive, got {v}")
        logs.append(math.log(v))
    mean = math.fsum(logs) / len(logs)
    variance = math.fsum((x - mean) ** 2 for x in logs) / len(logs)
    return math.exp(mean), math.exp(math.sqrt(variance))


@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    model: str
    method: str
    multiplier: int
    run: int  # 1-based, 1..runs
    seed: int
    objective: int
    feasible: bool
    runtime: float
    size_proxy: int  # binary count of the quadratic model, orders plots
    trace: tuple[tuple[float, float], ...] = ()
    time_to_target: float | None = None

    def key(self) -> tuple:
        return (self.instance_id, self.model, self.method, self.multiplier, self.run)

    def arm(self) -> tuple[str, str]:
        return (self.model, self.method)


def record_to_dict(record: RunRecord) -> dict:
    doc = {
        "instance_id": record.instance_id,
        "model": record.model,
        "method": record.method,
        "multiplier": record.multiplier,
        "run": record.run,
        "seed": record.seed,
        "objective": record.objective,
        "feasible": record.feasible,
        "runtime": record.runtime,
        "size_proxy": record.size_proxy,
        "trace": [[t, o] for t, o in record.trace],
        "time_to_target": record.time_to_target,
    }
    return doc


def record_from_dict(doc: dict) -> RunRecord:
    return RunRecord(
        instance_id=doc["instance_id"],
        model=doc["model"],
        method=doc["method"],
        multiplier=doc["multiplier"],
        run=doc["run"],
        seed=doc["seed"],
        objective=doc["objective"],
        feasible=doc["feasible"],
        runtime=doc["runtime"],
        size_proxy=doc["size_proxy"],
        trace=tuple((t, o) for t, o in doc.get("trace", [])),
        time_to_target=doc.get("time_to_target"),
    )


@dataclass(frozen=True)
class SuiteConfig:
    """What to run: instance files, arms, budgets, seeds, workers."""

    instances: tuple[str, ...]
    arms: tuple[tuple[str, str], ...]  # (model, method)
    base_budget_seconds: float = 5.0
    multipliers: tuple[int, ...] = (1, 2, 5)
    runs: int = 5
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.instances:
            raise ValueError("suite needs at least one instance")
        if not self.arms:
            raise ValueError("suite needs at least one arm")
        for model, method in self.arms:
            if model not in ("milp", "qcbo"):
                raise ValueError(f"unknown arm model {model!r}")
            if method not in ("anneal", "greedy", "brute"):
                raise ValueError(f"unknown arm method {method!r}")
            if method == "anneal" and model != "qcbo":
                raise ValueError("the anneal method runs on the qcbo model")
        if self.base_budget_seconds <= 0:
            raise ValueError("base_budget_seconds must be positive")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


def suite_from_json(text: str) -> SuiteConfig:
    doc = json.loads(text)
    return SuiteConfig(
        instances=tuple(doc["instances"]),
        arms=tuple((a["model"], a["method"]) for a in doc["arms"]),
        base_budget_seconds=doc.get("base_budget_seconds", 5.0),
        multipliers=tuple(doc.get("multipliers", (1, 2, 5))),
        runs=doc.get("runs", 5),
        seed=doc.get("seed", 0),
        workers=doc.get("workers", 1),
    )


def _derive_seed(suite_seed: int, key: tuple) -> int:
    text = f"{suite_seed}|" + "|".join(str(part) for part in key)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _size_proxy(instance) -> int:
    n_tasks = len(movable_tasks(instance))
    return (
        2 * n_tasks * instance.horizon * instance.num_agvs
        + len(instance.a_jobs) * instance.num_agvs
        + instance.horizon
    )


def _execute_run(task: dict) -> dict:
    instance = read_instance(Path(task["path"]).read_text())
    result = solve_instance(
        instance,
        method=task["method"],
        budget=task["budget"],
        seed=task["seed"],
    )
    record = RunRecord(
        instance_id=task["instance_id"],
        model=task["model"],
        method=task["method"],
        multiplier=task["multiplier"],
        run=task["run"],
        seed=task["seed"],
        objective=result.objective,
        feasible=result.feasible,
        runtime=result.runtime,
        size_proxy=_size_proxy(instance),
        trace=tuple((float(t), float(o)) for t, o in result.trace),
    )
    return record_to_dict(record)


def read_records(path: Path | str) -> list[RunRecord]:
    path = Path(path)
    if path.is_dir():
        path = path / "records.jsonl"
    records = []
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                records.append(record_from_dict(json.loads(line)))
    return records


def run_experiment(suite: SuiteConfig, records_path: Path | str) -> list[RunRecord]:
    """Execute all missing runs of the suite, appending records as they end.

    Raises FileNotFoundError before any run if an instance file is absent.
    Completed (instance, arm, multiplier, run) cells found in the records
    file are kept as they are.
    """
    records_path = Path(records_path)
    paths = {}
    for entry in suite.instances:
        p = Path(entry)
        if not p.exists():
            raise FileNotFoundError(f"instance file {entry!r} does not exist")
        paths[p.stem] = p

    existing = {r.key(): r for r in read_records(records_path)}
    pending: list[dict] = []
    for instance_id, p in sorted(paths.items()):
        for model, method in suite.arms:
            for multiplier in suite.multipliers:
                for run in range(1, suite.runs + 1):
                    key = (instance_id, model, method, multiplier, run)
                    if key in existing:
                        continue
                    pending.append(
                        {
                            "instance_id": instance_id,
                            "path": str(p),
                            "model": model,
                            "method": method,
                            "multiplier": multiplier,
                            "run": run,
                            "budget": suite.base_budget_seconds * multiplier,
                            "seed": _derive_seed(suite.seed, key),
                        }
                    )

    records_path.parent.mkdir(parents=True, exist_ok=True)
    with open(records_path, "a") as sink:
        if suite.workers > 1 and len(pending) > 1:
            with ProcessPoolExecutor(max_workers=suite.workers) as pool:
                futures = [pool.submit(_execute_run, task) for task in pending]
                for future in as_completed(futures):
                    doc = future.result()
                    sink.write(json.dumps(doc, sort_keys=True) + "\n")
                    sink.flush()
                    record = record_from_dict(doc)
                    existing[record.key()] = record
        else:
            for task in pending:
                doc = _execute_run(task)
                sink.write(json.dumps(doc, sort_keys=True) + "\n")
                sink.flush()
                record = record_from_dict(doc)
                existing[record.key()] = record
    return [existing[k] for k in sorted(existing)]


# -- reporting ----------------------------------------------------------------


def _rank_label(rank: int, runs: int) -> str:
    labels = RANK_LABELS.get(runs)
    return labels[rank] if labels else f"rank{rank}"


def _first_hit(record: RunRecord, target: float) -> float | None:
    """Wall-clock moment the run's incumbent first reached the target."""
    for t, objective in record.trace:
        if objective <= target:
            return max(t, 1e-9)
    if record.objective <= target:
        return max(record.runtime, 1e-9)
    return None


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def best_known_objectives(records: list[RunRecord]) -> dict[str, int]:
    best: dict[str, int] = {}
    for r in records:
        if r.instance_id not in best or r.objective < best[r.instance_id]:
            best[r.instance_id] = r.objective
    return best


def render_report(
    records: list[RunRecord],
    out_dir: Path | str,
    reference_arm: tuple[str, str] | None = None,
) -> dict[str, Path]:
    """Write the gap / wins / time-to-solution tables and the gap plots.

    Byte-deterministic given the records.  Returns the written paths.
    """
    if not records:
        raise ValueError("no records to report")
    out_dir = Path(out_dir)
    tables = out_dir / "tables"
    figures = out_dir / "figures"
    tables.mkdir(parents=True, exist_ok=True)
    figures.mkdir(parents=True, exist_ok=True)

    best_known = best_known_objectives(records)
    arms = sorted({r.arm() for r in records})
    multipliers = sorted({r.multiplier for r in records})
    instances = sorted({r.instance_id for r in records})
    runs = max(r.run for r in records)
    if reference_arm is None:
        reference_arm = arms[0]

    cells: dict[tuple, list[RunRecord]] = {}
    for r in records:
        cells.setdefault((r.instance_id, r.arm(), r.multiplier), []).append(r)
    for cell in cells.values():
        cell.sort(key=lambda r: (r.objective, r.run))

    written: dict[str, Path] = {}

    notes_path = out_dir / "notes.txt"
    notes_path.write_text(
        "best-known objectives are the minimum over all recorded runs per instance.\n"
        "the 'anneal' method is the native simulated-annealing stand-in for the\n"
        "proprietary hybrid metaheuristic arm; absolute numbers are not comparable\n"
        "to that solver.\n"
        "instances in figures are ordered by the binary-model variable count.\n"
    )
    written["notes"] = notes_path

    # gap statistics per arm, multiplier and rank
    gap_path = tables / "gap_stats.csv"
    with open(gap_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["model", "method", "multiplier", "rank", "mean_gap", "std_gap", "n"]
        )
        for arm in arms:
            for multiplier in multipliers:
                for rank in range(runs):
                    gaps = []
                    for instance_id in instances:
                        cell = cells.get((instance_id, arm, multiplier))
                        if cell is None or rank >= len(cell):
                            continue
                        gaps.append(
                            primal_gap(cell[rank].objective, best_known[instance_id])
                        )
                    if not gaps:
                        continue
                    mean = sum(gaps) / len(gaps)
                    std = math.sqrt(sum((g - mean) ** 2 for g in gaps) / len(gaps))
                    writer.writerow(
                        [
                            arm[0],
                            arm[1],
                            f"{multiplier}x",
                            _rank_label(rank, runs),
                            _fmt(mean),
                            _fmt(std),
                            len(gaps),
                        ]
                    )
    written["gap_stats"] = gap_path

    # rank-vs-rank wins per arm pair
    wins_path = tables / "wins.csv"
    with open(wins_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            [
                "multiplier",
                "rank",
                "model_a",
                "method_a",
                "model_b",
                "method_b",
                "wins_a",
                "wins_b",
                "ties",
            ]
        )
        for pos, arm_a in enumerate(arms):
            for arm_b in arms[pos + 1 :]:
                for multiplier in multipliers:
                    totals = [0, 0, 0]
                    per_rank: list[tuple[str, int, int, int]] = []
                    for rank in range(runs):
                        a_list = []
                        b_list = []
                        for instance_id in instances:
                            cell_a = cells.get((instance_id, arm_a, multiplier))
                            cell_b = cells.get((instance_id, arm_b, multiplier))
                            if not cell_a or not cell_b:
                                continue
                            if rank >= len(cell_a) or rank >= len(cell_b):
                                continue
                            a_list.append(cell_a[rank].objective)
                            b_list.append(cell_b[rank].objective)
                        w_a, w_b, tie = wins(a_list, b_list)
                        totals = [totals[0] + w_a, totals[1] + w_b, totals[2] + tie]
                        per_rank.append((_rank_label(rank, runs), w_a, w_b, tie))
                    for label, w_a, w_b, tie in per_rank:
                        writer.writerow(
                            [f"{multiplier}x", label, *arm_a, *arm_b, w_a, w_b, tie]
                        )
                    writer.writerow(
                        [f"{multiplier}x", "all", *arm_a, *arm_b, *totals]
                    )
    written["wins"] = wins_path

    # time-to-solution ratios of the reference arm's best run vs the others
    tts_path = tables / "tts_geo.csv"
    with open(tts_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            [
                "multiplier",
                "rank",
                "model",
                "method",
                "geo_mean",
                "geo_std",
                "n_reached",
                "n_total",
            ]
        )
        for arm in arms:
            if arm == reference_arm:
                continue
            for multiplier in multipliers:
                for rank in range(runs):
                    ratios = []
                    total = 0
                    for instance_id in instances:
                        ref_cell = cells.get((instance_id, reference_arm, multiplier))
                        cmp_cell = cells.get((instance_id, arm, multiplier))
                        if not ref_cell or not cmp_cell or rank >= len(cmp_cell):
                            continue
                        target = ref_cell[0].objective
                        t_ref = _first_hit(ref_cell[0], target)
                        t_cmp = _first_hit(cmp_cell[rank], target)
                        total += 1
                        if t_ref is not None and t_cmp is not None:
                            ratios.append(tts_ratio(t_ref, t_cmp))
                    if total == 0:
                        continue
                    if ratios:
                        mean, std = geo_stats(ratios)
                        writer.writerow(
                            [
                                f"{multiplier}x",
                                _rank_label(rank, runs),
                                *arm,
                                _fmt(mean),
                                _fmt(std),
                                len(ratios),
                                total,
                            ]
                        )
                    else:
                        writer.writerow(
                            [
                                f"{multiplier}x",
                                _rank_label(rank, runs),
                                *arm,
                                "",
                                "",
                                0,
                                total,
                            ]
                        )
    written["tts_geo"] = tts_path

    # per-multiplier scatter plots: instance (ordered by model size) vs gap
    size_by_instance = {}
    for r in records:
        size_by_instance[r.instance_id] = r.size_proxy
    ordered_instances = sorted(instances, key=lambda i: (size_by_instance[i], i))
    for multiplier in multipliers:
        series = []
        for arm in arms:
            best_points = []
            other_points = []
            for x, instance_id in enumerate(ordered_instances):
                cell = cells.get((instance_id, arm, multiplier))
                if not cell:
                    continue
                for rank, record in enumerate(cell):
                    gap = primal_gap(record.objective, best_known[instance_id])
                    (best_points if rank == 0 else other_points).append((x, gap))
            series.append((arm, best_points, other_points))
        svg = _gap_scatter_svg(series, len(ordered_instances), multiplier)
        path = figures / f"gap_scatter_{multiplier}x.svg"
        path.write_text(svg)
        written[f"scatter_{multiplier}x"] = path
    return written


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _gap_scatter_svg(series, n_instances: int, multiplier: int) -> str:
    width, height = 640, 400
    left, right, top, bottom = 60, 20, 40, 50
    plot_w = width - left - right
    plot_h = height - top - bottom
    max_gap = 1.0
    for _, best_points, other_points in series:
        for _, gap in best_points + other_points:
            max_gap = max(max_gap, gap)
    max_gap = math.ceil(max_gap * 1.05)

    def sx(x: float) -> float:
        span = max(n_instances - 1, 1)
        return left + plot_w * (x / span)

    def sy(gap: float) -> float:
        return top + plot_h * (1.0 - gap / max_gap)

    out = io.StringIO()
    out.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
    )
    out.write(f'<rect width="{width}" height="{height}" fill="white"/>\n')
    out.write(
        f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">primal gap per instance, {multiplier}x budget</text>\n'
    )
    # axes
    out.write(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>\n'
    )
    out.write(
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" '
        'stroke="black"/>\n'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        gap = max_gap * frac
        y = sy(gap)
        out.write(
            f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>\n'
        )
        out.write(
            f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{gap:.1f}</text>\n'
        )
    for x in range(n_instances):
        px = sx(x)
        out.write(
            f'<line x1="{px:.2f}" y1="{top + plot_h}" x2="{px:.2f}" '
            f'y2="{top + plot_h + 4}" stroke="black"/>\n'
        )
        out.write(
            f'<text x="{px:.2f}" y="{top + plot_h + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{x}</text>\n'
        )
    out.write(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 12}" text-anchor="middle" '
        'font-family="sans-serif" font-size="12">instance (ordered by model size)</text>\n'
    )
    out.write(
        f'<text x="16" y="{top + plot_h / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {top + plot_h / 2:.2f})">gap [%]</text>\n'
    )
    for index, (arm, best_points, other_points) in enumerate(series):
        color = _PALETTE[index % len(_PALETTE)]
        for x, gap in other_points:
            out.write(
                f'<circle cx="{sx(x):.2f}" cy="{sy(gap):.2f}" r="3" fill="none" '
                f'stroke="{color}"/>\n'
            )
        for x, gap in best_points:
            out.write(
                f'<circle cx="{sx(x):.2f}" cy="{sy(gap):.2f}" r="4" fill="{color}"/>\n'
            )
        label = f"{arm[0]}+{arm[1]}"
        ly = top + 14 + 16 * index
        out.write(
            f'<circle cx="{left + plot_w - 120:.2f}" cy="{ly - 4}" r="4" fill="{color}"/>\n'
        )
        out.write(
            f'<text x="{left + plot_w - 110:.2f}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{label} (filled = best run)</text>\n'
        )
    out.write("</svg>\n")
    return out.getvalue()
