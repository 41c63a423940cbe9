"""Domain model for the two-job-type shop with AGV transport.

Jobs of kind A have two tasks; the first runs on machine 0 in input order
and is fixed, the second runs on machine 1.  Jobs of kind B have three
tasks on machines 1, 2, 1.  Every movable task needs an AGV trip for
delivery and one for pickup; each trip takes ``delta`` time steps.

Time steps run 1..horizon.  A task starting at t with processing time p
is busy during t..t+p-1 and ends at t+p.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

MACHINE_FIXED = 0
MACHINE_ONE = 1
MACHINE_TWO = 2


@dataclass(frozen=True, order=True)
class TaskId:
    """Identifies one task: job kind 'A' or 'B', job index, stage (1-based)."""

    kind: str
    job: int
    stage: int

    def __post_init__(self) -> None:
        if self.kind not in ("A", "B"):
            raise ValueError(f"unknown job kind {self.kind!r}")
        max_stage = 2 if self.kind == "A" else 3
        if not 1 <= self.stage <= max_stage:
            raise ValueError(f"stage {self.stage} out of range for kind {self.kind}")
        if self.job < 0:
            raise ValueError("job index must be nonnegative")

    def token(self) -> str:
        """Short name used in model variable names, e.g. ``B2s3``."""
        return f"{self.kind}{self.job}s{self.stage}"


@dataclass(frozen=True)
class Instance:
    """Problem parameters.

    a_jobs holds (p1, p2) processing times per A-job, b_jobs holds
    (p1, p2, p3) per B-job.  The constructor only checks positivity;
    whether a feasible schedule fits the horizon is a solver concern.
    """

    delta: int
    num_agvs: int
    horizon: int
    a_jobs: tuple[tuple[int, int], ...]
    b_jobs: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "a_jobs", tuple(tuple(j) for j in self.a_jobs))
        object.__setattr__(self, "b_jobs", tuple(tuple(j) for j in self.b_jobs))
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.num_agvs < 1:
            raise ValueError("num_agvs must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for times in self.a_jobs:
            if len(times) != 2 or any(p < 1 for p in times):
                raise ValueError(f"bad A-job processing times {times}")
        for times in self.b_jobs:
            if len(times) != 3 or any(p < 1 for p in times):
                raise ValueError(f"bad B-job processing times {times}")

    def processing_time(self, task: TaskId) -> int:
        jobs = self.a_jobs if task.kind == "A" else self.b_jobs
        return jobs[task.job][task.stage - 1]


def machine_of(task: TaskId) -> int:
    """Machine hosting a task: A1 -> 0, A2/B1/B3 -> 1, B2 -> 2."""
    if task.kind == "A":
        return MACHINE_FIXED if task.stage == 1 else MACHINE_ONE
    return MACHINE_TWO if task.stage == 2 else MACHINE_ONE


@lru_cache(maxsize=256)
def a1_tasks(instance: Instance) -> tuple[TaskId, ...]:
    """The fixed first tasks of the A-jobs, in input order."""
    return tuple(TaskId("A", i, 1) for i in range(len(instance.a_jobs)))


@lru_cache(maxsize=256)
def movable_tasks(instance: Instance) -> tuple[TaskId, ...]:
    """All schedulable tasks (A2, B1, B2, B3) in canonical job-major order."""
    tasks: list[TaskId] = [TaskId("A", i, 2) for i in range(len(instance.a_jobs))]
    for i in range(len(instance.b_jobs)):
        tasks.extend(TaskId("B", i, s) for s in (1, 2, 3))
    return tuple(tasks)


@lru_cache(maxsize=256)
def final_tasks(instance: Instance) -> tuple[TaskId, ...]:
    """Tasks without successors (A2 and B3); their ends drive the makespan."""
    tasks = [TaskId("A", i, 2) for i in range(len(instance.a_jobs))]
    tasks.extend(TaskId("B", i, 3) for i in range(len(instance.b_jobs)))
    return tuple(tasks)


@dataclass(frozen=True)
class TaskSets:
    """Partition of the schedulable tasks plus the precedence relation."""

    schedulable: tuple[TaskId, ...]
    machine1: tuple[TaskId, ...]
    machine2: tuple[TaskId, ...]
    fixed: tuple[TaskId, ...]
    pairs: tuple[tuple[TaskId, TaskId], ...]


@lru_cache(maxsize=256)
def relation_set(instance: Instance) -> TaskSets:
    """Task sets and the predecessor-successor pairs.

    One pair per A-job (A1 -> A2) and two per B-job (B1 -> B2 -> B3).
    """
    movable = movable_tasks(instance)
    machine1 = tuple(t for t in movable if machine_of(t) == MACHINE_ONE)
    machine2 = tuple(t for t in movable if machine_of(t) == MACHINE_TWO)
    pairs: list[tuple[TaskId, TaskId]] = []
    for i in range(len(instance.a_jobs)):
        pairs.append((TaskId("A", i, 1), TaskId("A", i, 2)))
    for i in range(len(instance.b_jobs)):
        pairs.append((TaskId("B", i, 1), TaskId("B", i, 2)))
        pairs.append((TaskId("B", i, 2), TaskId("B", i, 3)))
    return TaskSets(
        schedulable=movable,
        machine1=machine1,
        machine2=machine2,
        fixed=a1_tasks(instance),
        pairs=tuple(pairs),
    )


@dataclass(frozen=True)
class A1Timetable:
    """Fixed machine-0 schedule: task i runs start[i]..tau[i]-1, ends at tau[i]."""

    starts: tuple[int, ...]
    taus: tuple[int, ...]

    def start(self, job: int) -> int:
        return self.starts[job]

    def tau(self, job: int) -> int:
        return self.taus[job]


@lru_cache(maxsize=256)
def a1_timetable(instance: Instance) -> A1Timetable:
    """Back-to-back machine-0 timetable; the first task starts at time 1."""
    starts: list[int] = []
    taus: list[int] = []
    t = 1
    for p1, _ in instance.a_jobs:
        starts.append(t)
        t += p1
        taus.append(t)
    return A1Timetable(starts=tuple(starts), taus=tuple(taus))


class Placement(NamedTuple):
    start: int
    delivery_agv: int
    pickup_agv: int


@dataclass(frozen=True)
class Schedule:
    """Start times and AGV choices for all movable tasks plus A1 pickup AGVs.

    ``a1_pickups[i]`` is the AGV fetching A-job i from machine 0 at its
    fixed end time.  Ends are derived: start + processing time.
    """

    placements: dict[TaskId, Placement]
    a1_pickups: tuple[int, ...]

    def start(self, task: TaskId) -> int:
        return self.placements[task].start

    def end(self, instance: Instance, task: TaskId) -> int:
        return self.placements[task].start + instance.processing_time(task)


def check_schedule_shape(instance: Instance, schedule: Schedule) -> None:
    """Raise ValueError unless the schedule covers exactly the movable tasks
    with starts >= 1 and AGV indices in range.  Feasibility is not checked."""
    expected = set(movable_tasks(instance))
    got = set(schedule.placements)
    if got != expected:
        missing = sorted(t.token() for t in expected - got)
        extra = sorted(t.token() for t in got - expected)
        raise ValueError(f"schedule task mismatch: missing={missing} extra={extra}")
    if len(schedule.a1_pickups) != len(instance.a_jobs):
        raise ValueError("a1_pickups length must equal the number of A-jobs")
    for task, place in schedule.placements.items():
        if place.start < 1:
            raise ValueError(f"start of {task.token()} must be >= 1")
        for agv in (place.delivery_agv, place.pickup_agv):
            if not 0 <= agv < instance.num_agvs:
                raise ValueError(f"AGV index {agv} of {task.token()} out of range")
    for i, agv in enumerate(schedule.a1_pickups):
        if not 0 <= agv < instance.num_agvs:
            raise ValueError(f"A1 pickup AGV {agv} of job {i} out of range")


def trivial_makespan(instance: Instance) -> int:
    """Makespan of running every job alone, one after another.

    Sum of all processing times plus 3*delta transport trips per A-job
    and 6*delta per B-job.  Used as the objective fallback when a solver
    finds nothing feasible.
    """
    total = sum(p for times in instance.a_jobs for p in times)
    total += sum(p for times in instance.b_jobs for p in times)
    total += len(instance.a_jobs) * 3 * instance.delta
    total += len(instance.b_jobs) * 6 * instance.delta
    return total


def chain_tasks(instance: Instance, job_kind: str, job: int) -> Iterator[TaskId]:
    stages = 2 if job_kind == "A" else 3
    for s in range(1, stages + 1):
        yield TaskId(job_kind, job, s)
