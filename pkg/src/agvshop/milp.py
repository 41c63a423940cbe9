"""Time-indexed mixed-integer linear model, LP text export and a reader.

One binary per (time, task, delivery AGV, pickup AGV) combination plus one
pickup binary per (A1 task, AGV) and a single continuous makespan variable
that the objective minimizes.  Windows that leave the 1..horizon range are
clipped at both ends.

Constraint families:

* assign_x / assign_y     -- every task scheduled exactly once.
* machine_cap             -- one task per machine per time step.
* precedence              -- successor starts after predecessor end + trip.
* at_most_one_start       -- one start per (time, delivery AGV).
* start_window            -- one delivery per AGV in any 2*delta window.
* end_window              -- one pickup per AGV in any 2*delta window
                             (fixed A1 ends included).
* start_end_window        -- a delivery at t excludes non-predecessor
                             pickups on the same AGV during the preceding
                             2*delta steps.
* single_run              -- an AGV cannot deliver at t and pick another
                             task up at exactly t.
* makespan                -- every final task's end + trip bounds the
                             makespan variable.
* handoff (optional)      -- 2*delta margin when a successor's delivery
                             AGV differs from its predecessor's pickup
                             AGV; off by default, enable to match the
                             quadratic model exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from agvshop.core import (
    Instance,
    Placement,
    Schedule,
    TaskId,
    a1_timetable,
    check_schedule_shape,
    final_tasks,
    movable_tasks,
    relation_set,
)
from agvshop.qcbo import QcboModel
from agvshop.validate import makespan

MILP_FAMILIES = (
    "assign_x",
    "assign_y",
    "machine_cap",
    "precedence",
    "at_most_one_start",
    "start_window",
    "end_window",
    "start_end_window",
    "single_run",
    "makespan",
)

_EPS = 1e-9
_BINARY_TOL = 1e-6


class MilpEncodingError(ValueError):
    """Raised when a schedule does not fit the declared variable ranges."""


class MilpDecodeError(ValueError):
    """Raised when an assignment has malformed one-hot groups."""

    def __init__(self, groups: list[str]):
        self.groups = groups
        super().__init__("malformed one-hot groups: " + ", ".join(groups))


class LpFormatError(ValueError):
    """Raised by the LP reader on text it cannot parse."""


@dataclass(frozen=True)
class MilpRow:
    family: str
    idx: np.ndarray
    coeff: np.ndarray
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass(frozen=True)
class MilpViolation:
    family: str
    row: int
    lhs: float
    sense: str
    rhs: float
    slack: float


@dataclass
class MilpModel:
    var_names: tuple[str, ...]
    binary_count: int  # binaries come first; continuous variables follow
    rows: tuple[MilpRow, ...]
    objective_terms: tuple[tuple[int, float], ...]
    objective_offset: float
    instance: Instance | None = None
    _matrix: dict | None = field(default=None, repr=False, compare=False)

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    def name_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.var_names)}

    def _row_matrix(self) -> dict:
        if self._matrix is None:
            n = self.num_vars
            indptr = [0]
            indices: list[np.ndarray] = []
            data: list[np.ndarray] = []
            for row in self.rows:
                indices.append(row.idx)
                data.append(row.coeff)
                indptr.append(indptr[-1] + len(row.idx))
            matrix = sp.csr_matrix(
                (
                    np.concatenate(data) if data else np.zeros(0),
                    np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
                    np.asarray(indptr, dtype=np.int64),
                ),
                shape=(len(self.rows), n),
            )
            self._matrix = {
                "matrix": matrix,
                "rhs": np.asarray([r.rhs for r in self.rows], dtype=np.float64),
            }
        return self._matrix


def _x_name(t: int, task: TaskId, k1: int, k2: int) -> str:
    return f"x_{t}_{task.token()}_{k1}_{k2}"


def _y_name(task: TaskId, k: int) -> str:
    return f"y_{task.token()}_{k}"


def build_milp(instance: Instance, strict_handoff: bool = False) -> MilpModel:
    """Build the time-indexed model for an instance.

    With ``strict_handoff`` the different-AGV predecessor margin rows of
    the quadratic formulation are added (family ``handoff``); the default
    leaves them out, where the two formulations are allowed to disagree.
    """
    tasks = movable_tasks(instance)
    sets = relation_set(instance)
    timetable = a1_timetable(instance)
    horizon, agvs, delta = instance.horizon, instance.num_agvs, instance.delta
    n_a = len(instance.a_jobs)
    pos = {task: i for i, task in enumerate(tasks)}

    def x_i(task: TaskId, t: int, k1: int, k2: int) -> int:
        return pos[task] * horizon * agvs * agvs + (t - 1) * agvs * agvs + k1 * agvs + k2

    def y_i(job: int, k: int) -> int:
        return len(tasks) * horizon * agvs * agvs + job * agvs + k

    c_i = len(tasks) * horizon * agvs * agvs + n_a * agvs

    names: list[str] = []
    for task in tasks:
        for t in range(1, horizon + 1):
            for k1 in range(agvs):
                names.extend(_x_name(t, task, k1, k2) for k2 in range(agvs))
    for job in range(n_a):
        names.extend(_y_name(TaskId("A", job, 1), k) for k in range(agvs))
    names.append("c")

    rows: list[MilpRow] = []

    def add(family: str, idx: list[int], coeff: list[float], sense: str, rhs: float) -> None:
        rows.append(
            MilpRow(
                family,
                np.asarray(idx, dtype=np.int64),
                np.asarray(coeff, dtype=np.float64),
                sense,
                rhs,
            )
        )

    def all_x(task: TaskId, t_range) -> list[int]:
        return [
            x_i(task, t, k1, k2)
            for t in t_range
            for k1 in range(agvs)
            for k2 in range(agvs)
        ]

    # (a) every task exactly once
    for task in tasks:
        idx = all_x(task, range(1, horizon + 1))
        add("assign_x", idx, [1.0] * len(idx), "=", 1.0)
    for job in range(n_a):
        idx = [y_i(job, k) for k in range(agvs)]
        add("assign_y", idx, [1.0] * agvs, "=", 1.0)

    # (b) machine capacity with busy-window truncation
    for machine_tasks in (sets.machine1, sets.machine2):
        for t in range(1, horizon + 1):
            idx: list[int] = []
            for task in machine_tasks:
                dur = instance.processing_time(task)
                idx.extend(all_x(task, range(max(t - dur + 1, 1), t + 1)))
            if idx:
                add("machine_cap", idx, [1.0] * len(idx), "<=", 1.0)

    # (c) precedence; fixed A1 predecessors contribute the constant tau + delta
    for pred, succ in sets.pairs:
        succ_terms = [
            (x_i(succ, t, k1, k2), float(t))
            for t in range(1, horizon + 1)
            for k1 in range(agvs)
            for k2 in range(agvs)
        ]
        if pred.kind == "A" and pred.stage == 1:
            idx = [i for i, _ in succ_terms]
            coeff = [c for _, c in succ_terms]
            add("precedence", idx, coeff, ">=", float(timetable.tau(pred.job) + delta))
        else:
            dur = instance.processing_time(pred)
            idx = []
            coeff = []
            for t in range(1, horizon + 1):
                for k1 in range(agvs):
                    for k2 in range(agvs):
                        idx.append(x_i(pred, t, k1, k2))
                        coeff.append(float(t + dur + delta))
            idx.extend(i for i, _ in succ_terms)
            coeff.extend(-c for _, c in succ_terms)
            add("precedence", idx, coeff, "<=", 0.0)

    # (d) at most one start per (time, delivery AGV)
    for t in range(1, horizon + 1):
        for k1 in range(agvs):
            idx = [
                x_i(task, t, k1, k2) for task in tasks for k2 in range(agvs)
            ]
            add("at_most_one_start", idx, [1.0] * len(idx), "<=", 1.0)

    # (e) one delivery per AGV within any 2*delta window
    for t in range(1, horizon + 1):
        for k in range(agvs):
            idx = [
                x_i(task, s, k, k2)
                for s in range(max(t - delta + 1, 1), min(t + delta, horizon) + 1)
                for task in tasks
                for k2 in range(agvs)
            ]
            add("start_window", idx, [1.0] * len(idx), "<=", 1.0)

    # (f) one pickup per AGV within any 2*delta window, fixed A1 ends included
    for t in range(1, horizon + 1):
        for k in range(agvs):
            idx = []
            for task in tasks:
                dur = instance.processing_time(task)
                idx.extend(
                    x_i(task, s, k1, k)
                    for s in range(
                        max(t - dur - delta + 1, 1), min(t - dur + delta, horizon) + 1
                    )
                    for k1 in range(agvs)
                )
            for job in range(n_a):
                if t - delta + 1 <= timetable.tau(job) <= t + delta:
                    idx.append(y_i(job, k))
            if idx:
                add("end_window", idx, [1.0] * len(idx), "<=", 1.0)

    # (g) a delivery at t excludes non-predecessor pickups on the same AGV
    # during the preceding 2*delta steps
    pair_set = set(sets.pairs)
    for t in range(1, horizon + 1):
        for anchor in tasks:
            for k in range(agvs):
                idx = []
                for job in range(n_a):
                    fixed = TaskId("A", job, 1)
                    if (fixed, anchor) in pair_set:
                        continue
                    if t - 2 * delta + 1 <= timetable.tau(job) <= t:
                        idx.append(y_i(job, k))
                for other in tasks:
                    if other == anchor or (other, anchor) in pair_set:
                        continue
                    dur = instance.processing_time(other)
                    idx.extend(
                        x_i(other, s, k1, k)
                        for s in range(
                            max(t - dur - 2 * delta + 1, 1),
                            min(t - dur, horizon) + 1,
                        )
                        for k1 in range(agvs)
                    )
                idx.extend(x_i(anchor, t, k, k2) for k2 in range(agvs))
                add("start_end_window", idx, [1.0] * len(idx), "<=", 1.0)

    # (h) no pickup at exactly the time of a delivery on the same AGV
    for t in range(1, horizon + 1):
        for k in range(agvs):
            idx = []
            for task in tasks:
                dur = instance.processing_time(task)
                if t - dur >= 1:
                    idx.extend(x_i(task, t - dur, k1, k) for k1 in range(agvs))
            idx.extend(
                x_i(task, t, k, k2) for task in tasks for k2 in range(agvs)
            )
            add("single_run", idx, [1.0] * len(idx), "<=", 1.0)

    # (i) makespan: end + trip bounds c, only for tasks without successors
    for task in final_tasks(instance):
        dur = instance.processing_time(task)
        idx = []
        coeff = []
        for t in range(1, horizon + 1):
            for k1 in range(agvs):
                for k2 in range(agvs):
                    idx.append(x_i(task, t, k1, k2))
                    coeff.append(float(t + dur))
        idx.append(c_i)
        coeff.append(-1.0)
        add("makespan", idx, coeff, "<=", -float(delta))

    if strict_handoff:
        for pred, succ in sets.pairs:
            for k in range(agvs):
                if pred.kind == "A" and pred.stage == 1:
                    anchors = [([y_i(pred.job, k)], timetable.tau(pred.job))]
                else:
                    dur = instance.processing_time(pred)
                    anchors = [
                        (
                            [x_i(pred, t - dur, k1, k) for k1 in range(agvs)],
                            t,
                        )
                        for t in range(dur + 1, horizon + 1)
                    ]
                for end_idx, t in anchors:
                    succ_idx = [
                        x_i(succ, s, l, k2)
                        for s in range(max(t, 1), min(t + 2 * delta - 1, horizon) + 1)
                        for l in range(agvs)
                        if l != k
                        for k2 in range(agvs)
                    ]
                    if end_idx and succ_idx:
                        idx = end_idx + succ_idx
                        add("handoff", idx, [1.0] * len(idx), "<=", 1.0)

    return MilpModel(
        var_names=tuple(names),
        binary_count=len(names) - 1,
        rows=tuple(rows),
        objective_terms=((c_i, 1.0),),
        objective_offset=0.0,
        instance=instance,
    )


def encode_schedule_milp(instance: Instance, schedule: Schedule) -> dict[str, float]:
    """Complete variable assignment (zeros included) for a schedule."""
    check_schedule_shape(instance, schedule)
    for task, place in schedule.placements.items():
        if place.start > instance.horizon:
            raise MilpEncodingError(
                f"{task.token()} starts at {place.start}, beyond horizon {instance.horizon}"
            )
    model_names = build_milp_names(instance)
    assignment = {name: 0.0 for name in model_names}
    for task, place in schedule.placements.items():
        assignment[_x_name(place.start, task, place.delivery_agv, place.pickup_agv)] = 1.0
    for job, agv in enumerate(schedule.a1_pickups):
        assignment[_y_name(TaskId("A", job, 1), agv)] = 1.0
    assignment["c"] = float(makespan(instance, schedule))
    return assignment


def build_milp_names(instance: Instance) -> tuple[str, ...]:
    """Variable names of the model without building its rows."""
    names: list[str] = []
    for task in movable_tasks(instance):
        for t in range(1, instance.horizon + 1):
            for k1 in range(instance.num_agvs):
                names.extend(
                    _x_name(t, task, k1, k2) for k2 in range(instance.num_agvs)
                )
    for job in range(len(instance.a_jobs)):
        names.extend(
            _y_name(TaskId("A", job, 1), k) for k in range(instance.num_agvs)
        )
    names.append("c")
    return tuple(names)


def decode_milp_solution(instance: Instance, assignment: Mapping[str, float]) -> Schedule:
    """Read the schedule off the one-hot groups of an assignment.

    Binary values may deviate from 0/1 by up to 1e-6 (relaxed solver
    output) and are rounded; groups with any other cardinality than one
    raise, listing every offending group.
    """
    starts: dict[TaskId, list[tuple[int, int, int]]] = {
        task: [] for task in movable_tasks(instance)
    }
    pickups: dict[int, list[int]] = {i: [] for i in range(len(instance.a_jobs))}
    for name, value in assignment.items():
        if name == "c":
            continue
        rounded = round(value)
        if abs(value - rounded) > _BINARY_TOL or rounded not in (0, 1):
            raise ValueError(f"variable {name} has non-binary value {value!r}")
        if not rounded:
            continue
        parts = name.split("_")
        if parts[0] == "x" and len(parts) == 5:
            task = _parse_token(parts[2])
            starts[task].append((int(parts[1]), int(parts[3]), int(parts[4])))
        elif parts[0] == "y" and len(parts) == 3:
            task = _parse_token(parts[1])
            pickups[task.job].append(int(parts[2]))
        else:
            raise ValueError(f"unknown variable {name!r}")
    bad = [
        f"x[{task.token()}]x{len(hits)}"
        for task, hits in starts.items()
        if len(hits) != 1
    ]
    bad += [f"y[A{job}s1]x{len(hits)}" for job, hits in pickups.items() if len(hits) != 1]
    if bad:
        raise MilpDecodeError(sorted(bad))
    placements = {
        task: Placement(start=hits[0][0], delivery_agv=hits[0][1], pickup_agv=hits[0][2])
        for task, hits in starts.items()
    }
    return Schedule(
        placements=placements,
        a1_pickups=tuple(pickups[i][0] for i in range(len(instance.a_jobs))),
    )


def _parse_token(token: str) -> TaskId:
    match = re.fullmatch(r"([AB])(\d+)s(\d+)", token)
    if not match:
        raise ValueError(f"bad task token {token!r}")
    return TaskId(match.group(1), int(match.group(2)), int(match.group(3)))


def check_milp_feasibility(
    model: MilpModel, assignment: Mapping[str, float]
) -> list[MilpViolation]:
    """Every violated row of the model; empty list iff feasible.

    The assignment must cover all declared variables.
    """
    vec = np.zeros(model.num_vars, dtype=np.float64)
    index = model.name_index()
    missing = [name for name in model.var_names if name not in assignment]
    if missing:
        raise ValueError(f"assignment is missing variable {missing[0]!r}")
    for name, value in assignment.items():
        if name not in index:
            raise ValueError(f"assignment has undeclared variable {name!r}")
        vec[index[name]] = value
    cache = model._row_matrix()
    lhs = cache["matrix"] @ vec
    rhs = cache["rhs"]
    out: list[MilpViolation] = []
    for i, row in enumerate(model.rows):
        value = float(lhs[i])
        if row.sense == "<=":
            slack = row.rhs - value
            violated = value > row.rhs + _EPS
        elif row.sense == ">=":
            slack = value - row.rhs
            violated = value < row.rhs - _EPS
        else:
            slack = -abs(value - row.rhs)
            violated = abs(value - row.rhs) > _EPS
        if violated:
            out.append(
                MilpViolation(
                    family=row.family,
                    row=i,
                    lhs=value,
                    sense=row.sense,
                    rhs=row.rhs,
                    slack=slack,
                )
            )
    return out


# -- LP text format ----------------------------------------------------------


def _format_number(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def _format_terms(terms: Sequence[tuple[str, float]], offset: float = 0.0) -> str:
    parts: list[str] = []
    for name, coeff in terms:
        magnitude = abs(coeff)
        piece = name if magnitude == 1 else f"{_format_number(magnitude)} {name}"
        if not parts:
            parts.append(piece if coeff >= 0 else f"- {piece}")
        else:
            parts.append(f"+ {piece}" if coeff >= 0 else f"- {piece}")
    if offset:
        sign = "+" if offset > 0 else "-"
        if parts:
            parts.append(f"{sign} {_format_number(abs(offset))}")
        else:
            parts.append(_format_number(offset))
    return " ".join(parts) if parts else "0"


def export_lp(model: MilpModel) -> str:
    """Standard LP text (Minimize / Subject To / Bounds / Binaries / End).

    Byte-deterministic given the model.
    """
    lines = ["Minimize"]
    terms = [(model.var_names[i], c) for i, c in model.objective_terms]
    lines.append(f" obj: {_format_terms(terms, model.objective_offset)}")
    lines.append("Subject To")
    counters: dict[str, int] = {}
    for row in model.rows:
        n = counters.get(row.family, 0)
        counters[row.family] = n + 1
        row_terms = [
            (model.var_names[int(i)], float(c)) for i, c in zip(row.idx, row.coeff)
        ]
        lines.append(
            f" {row.family}_{n}: {_format_terms(row_terms)} {row.sense} {_format_number(row.rhs)}"
        )
    lines.append("Bounds")
    for i in range(model.binary_count, model.num_vars):
        lines.append(f" {model.var_names[i]} >= 0")
    lines.append("Binaries")
    current = " "
    for name in model.var_names[: model.binary_count]:
        if len(current) + len(name) + 1 > 78 and current.strip():
            lines.append(current)
            current = " "
        current += name + " "
    if current.strip():
        lines.append(current.rstrip())
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ParsedLp:
    sense: str
    objective_name: str
    objective: dict[str, float]
    objective_offset: float
    constraints: tuple[tuple[str, dict[str, float], str, float], ...]
    bounds: tuple[tuple[str, str, float], ...]
    binaries: tuple[str, ...]


_NAME_RE = re.compile(r"[A-Za-z!\"#$%&()/,;?@_`'{}|~][A-Za-z0-9!\"#$%&()/.,;?@_`'{}|~]*")


def _tokenize_lp(text: str) -> list[str]:
    tokens: list[str] = []
    for raw_line in text.splitlines():
        line = raw_line.split("\\", 1)[0]
        for piece in line.replace("<=", " <= ").replace(">=", " >= ").split():
            if piece in ("<=", ">=", "=", "+", "-"):
                tokens.append(piece)
            elif piece.endswith(":"):
                tokens.append(piece)
            else:
                tokens.append(piece)
    return tokens


_SECTION_WORDS = {
    "minimize": "Minimize",
    "maximize": "Maximize",
    "subject": None,
    "st": "Subject To",
    "bounds": "Bounds",
    "binaries": "Binaries",
    "binary": "Binaries",
    "general": "General",
    "generals": "General",
    "end": "End",
}


def parse_lp(text: str) -> ParsedLp:
    """Strict reader for the LP dialect written by :func:`export_lp`.

    Raises LpFormatError on anything it does not understand, so a clean
    parse certifies the export round-trips.
    """
    tokens = _tokenize_lp(text)
    if not tokens:
        raise LpFormatError("empty document")
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def section_at(i: int) -> str | None:
        if i >= len(tokens):
            return None
        word = tokens[i].lower()
        if word == "subject" and i + 1 < len(tokens) and tokens[i + 1].lower() == "to":
            return "Subject To"
        if word in _SECTION_WORDS and _SECTION_WORDS[word]:
            return _SECTION_WORDS[word]
        return None

    def parse_expression(stop_at_sense: bool) -> tuple[dict[str, float], float, int]:
        nonlocal pos
        coeffs: dict[str, float] = {}
        offset = 0.0
        sign = 1.0
        pending: float | None = None
        while pos < len(tokens):
            token = tokens[pos]
            if token in ("<=", ">=", "="):
                break
            if section_at(pos):
                break
            if token == "+":
                if pending is not None:
                    offset += sign * pending
                    pending = None
                sign = 1.0
                pos += 1
                continue
            if token == "-":
                if pending is not None:
                    offset += sign * pending
                    pending = None
                sign = -1.0
                pos += 1
                continue
            try:
                value = float(token)
            except ValueError:
                value = None
            if value is not None:
                if pending is not None:
                    raise LpFormatError(f"two numbers in a row near {token!r}")
                pending = value
                pos += 1
                continue
            if not _NAME_RE.fullmatch(token):
                raise LpFormatError(f"bad variable name {token!r}")
            coeff = sign * (pending if pending is not None else 1.0)
            coeffs[token] = coeffs.get(token, 0.0) + coeff
            pending = None
            sign = 1.0
            pos += 1
        if pending is not None:
            offset += sign * pending
        return coeffs, offset, pos

    sense = section_at(pos)
    if sense not in ("Minimize", "Maximize"):
        raise LpFormatError("document must start with Minimize or Maximize")
    pos += 2 if tokens[pos].lower() == "subject" else 1
    obj_name = "obj"
    if peek() and peek().endswith(":"):
        obj_name = tokens[pos][:-1]
        pos += 1
    objective, obj_offset, pos = parse_expression(False)

    if section_at(pos) != "Subject To":
        raise LpFormatError("expected Subject To section")
    pos += 2 if tokens[pos].lower() == "subject" else 1

    constraints: list[tuple[str, dict[str, float], str, float]] = []
    row_counter = 0
    while pos < len(tokens) and section_at(pos) is None:
        name = f"r{row_counter}"
        if tokens[pos].endswith(":"):
            name = tokens[pos][:-1]
            pos += 1
        coeffs, extra, pos = parse_expression(True)
        if pos >= len(tokens) or tokens[pos] not in ("<=", ">=", "="):
            raise LpFormatError(f"constraint {name!r} has no comparator")
        row_sense = tokens[pos]
        pos += 1
        try:
            rhs = float(tokens[pos])
        except (IndexError, ValueError):
            raise LpFormatError(f"constraint {name!r} has no numeric right side")
        pos += 1
        constraints.append((name, coeffs, row_sense, rhs - extra))
        row_counter += 1

    bounds: list[tuple[str, str, float]] = []
    binaries: list[str] = []
    while pos < len(tokens):
        section = section_at(pos)
        if section == "End":
            pos += 1
            break
        if section == "Bounds":
            pos += 1
            while pos < len(tokens) and section_at(pos) is None:
                name = tokens[pos]
                if not _NAME_RE.fullmatch(name):
                    raise LpFormatError(f"bad bound variable {name!r}")
                if pos + 2 >= len(tokens) or tokens[pos + 1] not in ("<=", ">=", "="):
                    raise LpFormatError(f"bad bound for {name!r}")
                bounds.append((name, tokens[pos + 1], float(tokens[pos + 2])))
                pos += 3
            continue
        if section == "Binaries" or section == "General":
            pos += 1
            while pos < len(tokens) and section_at(pos) is None:
                if not _NAME_RE.fullmatch(tokens[pos]):
                    raise LpFormatError(f"bad binary name {tokens[pos]!r}")
                binaries.append(tokens[pos])
                pos += 1
            continue
        raise LpFormatError(f"unexpected token {tokens[pos]!r}")
    if pos != len(tokens):
        raise LpFormatError("content after End")

    return ParsedLp(
        sense=sense,
        objective_name=obj_name,
        objective=objective,
        objective_offset=obj_offset,
        constraints=tuple(constraints),
        bounds=tuple(bounds),
        binaries=tuple(binaries),
    )


# -- linearization of the quadratic model -------------------------------------


def linearize_qcbo(qcbo: QcboModel) -> MilpModel:
    """Replace every quadratic product by a fresh binary with three links.

    Each distinct monomial a*b gets one binary w with w >= a + b - 1,
    w <= a and w <= b, so w equals the product for every bit vector.
    Linear rows and the objective carry over verbatim; quadratic rows
    become linear rows over the product binaries.
    """
    base_names = [qcbo.var_name(i) for i in range(qcbo.num_vars)]
    monomials: dict[tuple[int, int], int] = {}
    for rule in qcbo.quadratic_rules:
        for a in rule.left_idx:
            for b in rule.right_idx:
                if a == b:
                    continue
                key = (int(a), int(b)) if a < b else (int(b), int(a))
                if key not in monomials:
                    monomials[key] = qcbo.num_vars + len(monomials)
    names = base_names + [f"w_{a}_{b}" for a, b in monomials]

    rows: list[MilpRow] = []

    def add(family: str, idx: list[int], coeff: list[float], sense: str, rhs: float) -> None:
        rows.append(
            MilpRow(
                family,
                np.asarray(idx, dtype=np.int64),
                np.asarray(coeff, dtype=np.float64),
                sense,
                rhs,
            )
        )

    for rule in qcbo.linear_rules:
        add(
            rule.family,
            [int(i) for i in rule.idx],
            [float(c) for c in rule.coeff],
            "=",
            float(rule.rhs),
        )

    for rule in qcbo.quadratic_rules:
        acc: dict[int, float] = {}
        for a, ca in zip(rule.left_idx, rule.left_coeff):
            for b, cb in zip(rule.right_idx, rule.right_coeff):
                if a == b:
                    var = int(a)
                else:
                    key = (int(a), int(b)) if a < b else (int(b), int(a))
                    var = monomials[key]
                acc[var] = acc.get(var, 0.0) + float(ca) * float(cb)
        add(f"lin_{rule.family}", list(acc), list(acc.values()), "=", 0.0)

    for (a, b), w in monomials.items():
        add("product_link", [w, a, b], [1.0, -1.0, -1.0], ">=", -1.0)
        add("product_link", [w, a], [1.0, -1.0], "<=", 0.0)
        add("product_link", [w, b], [1.0, -1.0], "<=", 0.0)

    objective_terms = tuple(
        (i, float(c)) for i, c in sorted(qcbo.objective_linear.items())
    )
    return MilpModel(
        var_names=tuple(names),
        binary_count=len(names),
        rows=tuple(rows),
        objective_terms=objective_terms,
        objective_offset=float(qcbo.objective_offset),
        instance=qcbo.instance,
    )
