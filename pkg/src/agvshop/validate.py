"""Schedule feasibility rules and the makespan.

The rules are the binary model's semantics restated directly over a
Schedule, so cross-model tests have a single referee:

* horizon          -- every task ends by the horizon.
* machine_overlap  -- busy intervals [start, end) on machines 1 and 2 are
                      pairwise disjoint.
* precedence       -- a successor starts no earlier than its predecessor's
                      end plus one trip.
* agv_start_start  -- deliveries on one AGV are >= 2*delta apart.
* agv_end_end      -- pickups on one AGV (A1 ends included) are >= 2*delta
                      apart.
* agv_start_end    -- an AGV delivering task j at t cannot pick up another
                      task during t..t+2*delta-1.
* agv_end_start    -- an AGV picking up task i at t cannot deliver another
                      task during t..t+2*delta-1; for the direct successor
                      the exclusion shrinks to t..t+delta-1 (direct
                      machine-to-machine transfer).
* handoff_margin   -- when a successor is delivered by a different AGV
                      than picked up its predecessor, the margin is
                      2*delta (two depot legs instead of one transfer).

Intervals are half-open; two same-AGV starts exactly 2*delta apart are
legal.  Trips implied before time 1 are legal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from agvshop.core import (
    Instance,
    Placement,
    Schedule,
    TaskId,
    a1_tasks,
    a1_timetable,
    check_schedule_shape,
    final_tasks,
    machine_of,
    movable_tasks,
    relation_set,
)

RULES = (
    "horizon",
    "machine_overlap",
    "precedence",
    "agv_start_start",
    "agv_end_end",
    "agv_start_end",
    "agv_end_start",
    "handoff_margin",
)


class ScheduleFormatError(ValueError):
    """Raised for malformed schedule documents."""


@dataclass(frozen=True)
class Violation:
    rule: str
    tasks: tuple[TaskId, ...]
    times: tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        names = ",".join(t.token() for t in self.tasks)
        return f"{self.rule}[{names}]: {self.detail}"


def validate_schedule(instance: Instance, schedule: Schedule) -> list[Violation]:
    """All rule violations of a schedule; empty list means feasible.

    Raises ValueError for structurally bad input (wrong task set,
    out-of-range AGV indices, starts < 1); those are not Violations.
    """
    check_schedule_shape(instance, schedule)
    sets = relation_set(instance)
    timetable = a1_timetable(instance)
    two_delta = 2 * instance.delta
    out: list[Violation] = []

    ends = {t: schedule.end(instance, t) for t in sets.schedulable}

    for task in sets.schedulable:
        if ends[task] > instance.horizon:
            out.append(
                Violation(
                    "horizon",
                    (task,),
                    (ends[task],),
                    f"ends at {ends[task]} after horizon {instance.horizon}",
                )
            )

    for group in (sets.machine1, sets.machine2):
        for pos, a in enumerate(group):
            for b in group[pos + 1 :]:
                if schedule.start(a) < ends[b] and schedule.start(b) < ends[a]:
                    out.append(
                        Violation(
                            "machine_overlap",
                            (a, b),
                            (schedule.start(a), schedule.start(b)),
                            f"both busy on machine {machine_of(a)}",
                        )
                    )

    pair_set = set(sets.pairs)
    for pred, succ in sets.pairs:
        pred_end = timetable.tau(pred.job) if pred.stage == 1 and pred.kind == "A" else ends[pred]
        gap = schedule.start(succ) - pred_end
        if gap < instance.delta:
            out.append(
                Violation(
                    "precedence",
                    (pred, succ),
                    (pred_end, schedule.start(succ)),
                    f"successor starts {gap} after predecessor end, needs >= {instance.delta}",
                )
            )

    # Delivery events exist for movable tasks only; pickup events also
    # cover the fixed A1 ends.
    starts = [(t, schedule.start(t), schedule.placements[t].delivery_agv) for t in sets.schedulable]
    pickups = [(t, ends[t], schedule.placements[t].pickup_agv) for t in sets.schedulable]
    pickups += [
        (t, timetable.tau(t.job), schedule.a1_pickups[t.job]) for t in sets.fixed
    ]

    for pos, (a, ta, ka) in enumerate(starts):
        for b, tb, kb in starts[pos + 1 :]:
            if ka == kb and abs(ta - tb) < two_delta:
                out.append(
                    Violation(
                        "agv_start_start",
                        (a, b),
                        (ta, tb),
                        f"deliveries on AGV {ka} only {abs(ta - tb)} apart",
                    )
                )

    for pos, (a, ta, ka) in enumerate(pickups):
        for b, tb, kb in pickups[pos + 1 :]:
            if ka == kb and abs(ta - tb) < two_delta:
                out.append(
                    Violation(
                        "agv_end_end",
                        (a, b),
                        (ta, tb),
                        f"pickups on AGV {ka} only {abs(ta - tb)} apart",
                    )
                )

    for ender, end_t, pickup_agv in pickups:
        for starter, start_t, delivery_agv in starts:
            if ender == starter or pickup_agv != delivery_agv:
                continue
            if 0 <= end_t - start_t < two_delta:
                out.append(
                    Violation(
                        "agv_start_end",
                        (ender, starter),
                        (end_t, start_t),
                        f"AGV {pickup_agv} picks up {end_t - start_t} after delivering",
                    )
                )
            gap = start_t - end_t
            margin = instance.delta if (ender, starter) in pair_set else two_delta
            if 0 <= gap < margin:
                out.append(
                    Violation(
                        "agv_end_start",
                        (ender, starter),
                        (end_t, start_t),
                        f"AGV {pickup_agv} delivers {gap} after picking up, needs >= {margin}",
                    )
                )

    a1_end = {t: timetable.tau(t.job) for t in sets.fixed}
    for pred, succ in sets.pairs:
        pred_pickup = (
            schedule.a1_pickups[pred.job] if pred in a1_end else schedule.placements[pred].pickup_agv
        )
        if pred_pickup == schedule.placements[succ].delivery_agv:
            continue
        pred_end = a1_end.get(pred, ends.get(pred))
        gap = schedule.start(succ) - pred_end
        if 0 <= gap < two_delta:
            out.append(
                Violation(
                    "handoff_margin",
                    (pred, succ),
                    (pred_end, schedule.start(succ)),
                    f"different AGVs hand over with margin {gap}, needs >= {two_delta}",
                )
            )

    return out


def makespan(instance: Instance, schedule: Schedule) -> int:
    """Latest end among the final tasks (A2, B3) plus the last trip."""
    finals = final_tasks(instance)
    if not finals:
        return 0
    return max(schedule.end(instance, t) for t in finals) + instance.delta


# Schedule file format: {"tasks": [{"job": "A"|"B", "index": i, "stage": s,
# "start": t, "delivery_agv": k1, "pickup_agv": k2}, ...], "a1_pickups": [k, ...]}

_TASK_FIELDS = ("delivery_agv", "index", "job", "pickup_agv", "stage", "start")


def write_schedule(schedule: Schedule) -> str:
    entries = []
    for task in sorted(schedule.placements):
        place = schedule.placements[task]
        entries.append(
            {
                "delivery_agv": place.delivery_agv,
                "index": task.job,
                "job": task.kind,
                "pickup_agv": place.pickup_agv,
                "stage": task.stage,
                "start": place.start,
            }
        )
    doc = {"a1_pickups": list(schedule.a1_pickups), "tasks": entries}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def read_schedule(text: str) -> Schedule:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScheduleFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"tasks", "a1_pickups"}:
        raise ScheduleFormatError("document must have exactly 'tasks' and 'a1_pickups'")
    placements: dict[TaskId, Placement] = {}
    for entry in doc["tasks"]:
        if not isinstance(entry, dict) or set(entry) != set(_TASK_FIELDS):
            raise ScheduleFormatError(f"task entries need fields {_TASK_FIELDS}")
        try:
            task = TaskId(entry["job"], entry["index"], entry["stage"])
        except ValueError as exc:
            raise ScheduleFormatError(str(exc)) from exc
        if task in placements:
            raise ScheduleFormatError(f"duplicate task {task.token()}")
        placements[task] = Placement(
            start=entry["start"],
            delivery_agv=entry["delivery_agv"],
            pickup_agv=entry["pickup_agv"],
        )
    pickups = doc["a1_pickups"]
    if not isinstance(pickups, list) or not all(isinstance(k, int) for k in pickups):
        raise ScheduleFormatError("a1_pickups must be a list of AGV indices")
    return Schedule(placements=placements, a1_pickups=tuple(pickups))
