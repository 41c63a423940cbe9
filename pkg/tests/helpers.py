"""Shared fixtures: tiny instances, exhaustive enumeration oracles."""

from __future__ import annotations

import itertools

import numpy as np

from agvshop.core import Instance, Placement, Schedule, movable_tasks
from agvshop.validate import makespan, validate_schedule

TINY = Instance(delta=1, num_agvs=1, horizon=14, a_jobs=((1, 1),), b_jobs=((1, 1, 1),))

A_ONLY = Instance(delta=1, num_agvs=1, horizon=10, a_jobs=((1, 1),), b_jobs=())

B_ONLY = Instance(delta=1, num_agvs=1, horizon=14, a_jobs=(), b_jobs=((1, 1, 1),))


def enumerate_schedules(instance: Instance, all_agvs: bool = True):
    """Every well-formed schedule: starts keep ends within the horizon;
    AGV choices exhaustive (or pinned to 0 with all_agvs=False)."""
    tasks = movable_tasks(instance)
    agvs = range(instance.num_agvs) if all_agvs else (0,)
    task_options = []
    for task in tasks:
        duration = instance.processing_time(task)
        task_options.append(
            [
                Placement(start, k1, k2)
                for start in range(1, instance.horizon - duration + 1)
                for k1 in agvs
                for k2 in agvs
            ]
        )
    pickup_options = itertools.product(agvs, repeat=len(instance.a_jobs))
    for pickups in pickup_options:
        for combo in itertools.product(*task_options):
            yield Schedule(
                placements=dict(zip(tasks, combo)), a1_pickups=tuple(pickups)
            )


def exhaustive_optimum(instance: Instance) -> tuple[int | None, Schedule | None]:
    """Minimum makespan by scanning every well-formed schedule; no pruning."""
    best: tuple[int, Schedule] | None = None
    for schedule in enumerate_schedules(instance):
        if validate_schedule(instance, schedule):
            continue
        value = makespan(instance, schedule)
        if best is None or value < best[0]:
            best = (value, schedule)
    if best is None:
        return None, None
    return best


def milp_feasible_batch(model, assignments: np.ndarray) -> np.ndarray:
    """Row-check a matrix of assignment vectors against every model row."""
    cache = model._row_matrix()
    lhs = cache["matrix"] @ assignments.T
    ok = np.ones(assignments.shape[0], dtype=bool)
    for i, row in enumerate(model.rows):
        if row.sense == "<=":
            ok &= lhs[i] <= row.rhs + 1e-9
        elif row.sense == ">=":
            ok &= lhs[i] >= row.rhs - 1e-9
        else:
            ok &= np.abs(lhs[i] - row.rhs) <= 1e-9
    return ok


def assignment_vector(model, assignment: dict[str, float]) -> np.ndarray:
    index = model.name_index()
    vec = np.zeros(model.num_vars)
    for name, value in assignment.items():
        vec[index[name]] = value
    return vec
