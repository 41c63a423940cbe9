"""Job-shop scheduling with AGV transport.

Two model builders (time-indexed MILP and a quadratic-constrained binary
program with penalty-based QUBO compilation), a schedule validator, native
exact/heuristic/annealing solvers, a seeded instance generator and a
benchmark harness with primal-gap / wins / time-to-solution reporting.
"""

from agvshop.core import (
    A1Timetable,
    Instance,
    Placement,
    Schedule,
    TaskId,
    TaskSets,
    a1_tasks,
    a1_timetable,
    machine_of,
    movable_tasks,
    relation_set,
    trivial_makespan,
)
from agvshop.instance_gen import GenConfig, generate, read_instance, write_instance
from agvshop.validate import Violation, makespan, validate_schedule
from agvshop.qcbo import (
    QcboModel,
    Qubo,
    build_qcbo,
    decode_qcbo_solution,
    encode_schedule_qcbo,
    qubo_energy,
    to_qubo,
    violation_count,
)
from agvshop.milp import (
    MilpModel,
    build_milp,
    check_milp_feasibility,
    decode_milp_solution,
    encode_schedule_milp,
    export_lp,
    linearize_qcbo,
    parse_lp,
)
from agvshop.solve import (
    AnnealParams,
    SolveResult,
    anneal_qubo,
    brute_force,
    greedy_schedule,
    solve_instance,
)
from agvshop.bench import (
    RunRecord,
    geo_stats,
    primal_gap,
    render_report,
    run_experiment,
    tts_ratio,
    wins,
)

__version__ = "0.1.0"

__all__ = [
    "A1Timetable",
    "AnnealParams",
    "GenConfig",
    "Instance",
    "MilpModel",
    "Placement",
    "QcboModel",
    "Qubo",
    "RunRecord",
    "Schedule",
    "SolveResult",
    "TaskId",
    "TaskSets",
    "Violation",
    "a1_tasks",
    "a1_timetable",
    "anneal_qubo",
    "brute_force",
    "build_milp",
    "build_qcbo",
    "check_milp_feasibility",
    "decode_milp_solution",
    "decode_qcbo_solution",
    "encode_schedule_milp",
    "encode_schedule_qcbo",
    "export_lp",
    "generate",
    "geo_stats",
    "greedy_schedule",
    "linearize_qcbo",
    "machine_of",
    "makespan",
    "movable_tasks",
    "parse_lp",
    "primal_gap",
    "qubo_energy",
    "read_instance",
    "relation_set",
    "render_report",
    "run_experiment",
    "solve_instance",
    "to_qubo",
    "trivial_makespan",
    "tts_ratio",
    "validate_schedule",
    "violation_count",
    "wins",
    "write_instance",
]
