"""Binary optimization model with linear and quadratic constraints.

Variables (all binary): a start indicator per (task, time, delivery AGV),
an end indicator per (task, time, pickup AGV), a pickup indicator per
(A1 task, AGV), and a makespan one-hot over time steps.  The objective is
the makespan time plus one trip.

Linear rows are equalities; quadratic rows are products of two linear
forms with nonnegative coefficients that must equal zero.  Because every
factor is nonnegative, adding penalty * (squared linear residuals + raw
quadratic products) to the objective yields an exact penalty QUBO: with
penalty > horizon + delta (any objective value), every QUBO minimizer is
constraint-feasible whenever a feasible schedule exists.

Quadratic families mirror the validator rules one-to-one.  Double sums
over task pairs are expanded into one row per anchor task; a pair both
starting (or ending) at the same time step is emitted in only one of the
two anchors' rows, so each product appears once per family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

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

QUADRATIC_FAMILIES = (
    "precedence",
    "machine",
    "agv_start_start",
    "agv_end_end",
    "agv_start_end",
    "agv_end_start",
    "successor_same_agv",
    "successor_diff_agv",
    "makespan_coupling",
)

LINEAR_FAMILIES = (
    "pickup_assign",
    "start_assign",
    "end_assign",
    "linkage",
    "makespan_onehot",
    "domain_zero",
    "precedence",
)


class QcboEncodingError(ValueError):
    """Raised when a schedule cannot be represented as a bit vector."""


class QcboDecodeError(ValueError):
    """Raised when bits do not decode to a schedule; lists the bad groups."""

    def __init__(self, groups: list[str]):
        self.groups = groups
        super().__init__("malformed one-hot groups: " + ", ".join(groups))


@dataclass(frozen=True)
class LinearRule:
    """Equality row: sum(coeff * var) == rhs."""

    family: str
    idx: np.ndarray
    coeff: np.ndarray
    rhs: int


@dataclass(frozen=True)
class QuadRule:
    """Product row: (sum left) * (sum right) == 0, both factors nonnegative."""

    family: str
    left_idx: np.ndarray
    left_coeff: np.ndarray
    right_idx: np.ndarray
    right_coeff: np.ndarray


@dataclass
class QcboModel:
    instance: Instance
    num_vars: int
    linear_rules: tuple[LinearRule, ...]
    quadratic_rules: tuple[QuadRule, ...]
    objective_linear: dict[int, int]
    objective_offset: int
    _stacks: dict | None = field(default=None, repr=False, compare=False)

    # -- variable indexing ------------------------------------------------

    def __post_init__(self) -> None:
        inst = self.instance
        object.__setattr__(
            self,
            "_cached_dims",
            (len(movable_tasks(inst)), inst.horizon, inst.num_agvs, len(inst.a_jobs)),
        )

    def _dims(self) -> tuple[int, int, int, int]:
        return self._cached_dims

    def x_index(self, task_pos: int, t: int, k: int) -> int:
        _, horizon, agvs, _ = self._dims()
        return task_pos * horizon * agvs + (t - 1) * agvs + k

    def y_index(self, task_pos: int, t: int, k: int) -> int:
        n_tasks, horizon, agvs, _ = self._dims()
        return n_tasks * horizon * agvs + self.x_index(task_pos, t, k)

    def z_index(self, a_job: int, k: int) -> int:
        n_tasks, horizon, agvs, _ = self._dims()
        return 2 * n_tasks * horizon * agvs + a_job * agvs + k

    def u_index(self, t: int) -> int:
        n_tasks, horizon, agvs, n_a = self._dims()
        return 2 * n_tasks * horizon * agvs + n_a * agvs + (t - 1)

    def var_name(self, index: int) -> str:
        n_tasks, horizon, agvs, n_a = self._dims()
        tasks = movable_tasks(self.instance)
        block = n_tasks * horizon * agvs
        if index < 2 * block:
            kind = "x" if index < block else "y"
            rest = index % block
            pos, rest = divmod(rest, horizon * agvs)
            t, k = divmod(rest, agvs)
            return f"{kind}_{tasks[pos].token()}_{t + 1}_{k}"
        index -= 2 * block
        if index < n_a * agvs:
            job, k = divmod(index, agvs)
            return f"z_A{job}s1_{k}"
        return f"u_{index - n_a * agvs + 1}"

    # -- evaluation --------------------------------------------------------

    def _evaluation_stacks(self) -> dict:
        if self._stacks is None:
            n = self.num_vars

            def stack(rows: Iterable[tuple[np.ndarray, np.ndarray]], count: int):
                indptr = [0]
                indices: list[np.ndarray] = []
                data: list[np.ndarray] = []
                for idx, coeff in rows:
                    indices.append(idx)
                    data.append(coeff)
                    indptr.append(indptr[-1] + len(idx))
                if count == 0:
                    return sp.csr_matrix((0, n), dtype=np.int64)
                return sp.csr_matrix(
                    (
                        np.concatenate(data) if data else np.zeros(0, dtype=np.int64),
                        np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
                        np.asarray(indptr, dtype=np.int64),
                    ),
                    shape=(count, n),
                    dtype=np.int64,
                )

            lin = stack(
                ((r.idx, r.coeff) for r in self.linear_rules), len(self.linear_rules)
            )
            left = stack(
                ((r.left_idx, r.left_coeff) for r in self.quadratic_rules),
                len(self.quadratic_rules),
            )
            right = stack(
                ((r.right_idx, r.right_coeff) for r in self.quadratic_rules),
                len(self.quadratic_rules),
            )
            self._stacks = {
                "lin": lin,
                "lin_rhs": np.asarray([r.rhs for r in self.linear_rules], dtype=np.int64),
                "lin_family": [r.family for r in self.linear_rules],
                "left": left,
                "right": right,
                "quad_family": [r.family for r in self.quadratic_rules],
            }
        return self._stacks

    def families(self) -> tuple[str, ...]:
        seen: list[str] = []
        for rule in (*self.linear_rules, *self.quadratic_rules):
            if rule.family not in seen:
                seen.append(rule.family)
        return tuple(sorted(seen))


def build_qcbo(instance: Instance) -> QcboModel:
    """Construct the full constraint system for an instance.

    A1 tasks contribute no start/end variables; the A-job precedence is
    realized by zero-fixing every successor start earlier than the fixed
    end plus one trip.  Start variables that would push a task past the
    horizon (and the matching impossible early ends) are zero-fixed as
    well, so start/end one-hots and the linkage rows pin ends to
    start + processing time for every representable assignment.
    """
    tasks = movable_tasks(instance)
    pos = {task: i for i, task in enumerate(tasks)}
    sets = relation_set(instance)
    timetable = a1_timetable(instance)
    horizon = instance.horizon
    agvs = instance.num_agvs
    delta = instance.delta
    n_a = len(instance.a_jobs)
    n_vars = 2 * len(tasks) * horizon * agvs + n_a * agvs + horizon

    model = QcboModel(
        instance=instance,
        num_vars=n_vars,
        linear_rules=(),
        quadratic_rules=(),
        objective_linear={},
        objective_offset=0,
    )
    x_i, y_i, z_i, u_i = model.x_index, model.y_index, model.z_index, model.u_index

    def arr(values: Sequence[int]) -> np.ndarray:
        return np.asarray(values, dtype=np.int64)

    def ones(count: int) -> np.ndarray:
        return np.ones(count, dtype=np.int64)

    linear: list[LinearRule] = []
    quad: list[QuadRule] = []

    def add_linear(family: str, idx: list[int], coeff: list[int], rhs: int) -> None:
        linear.append(LinearRule(family, arr(idx), arr(coeff), rhs))

    def add_quad(family: str, left: list[int], right: list[int]) -> None:
        quad.append(
            QuadRule(family, arr(left), ones(len(left)), arr(right), ones(len(right)))
        )

    # Linear: one pickup AGV per A1 task, one start and one end per task.
    for job in range(n_a):
        add_linear("pickup_assign", [z_i(job, k) for k in range(agvs)], [1] * agvs, 1)
    for task in tasks:
        p = pos[task]
        add_linear(
            "start_assign",
            [x_i(p, t, k) for t in range(1, horizon + 1) for k in range(agvs)],
            [1] * (horizon * agvs),
            1,
        )
        add_linear(
            "end_assign",
            [y_i(p, t, k) for t in range(1, horizon + 1) for k in range(agvs)],
            [1] * (horizon * agvs),
            1,
        )

    # Linear: a start at t forces the end at t + p.
    for task in tasks:
        p = pos[task]
        dur = instance.processing_time(task)
        for t in range(1, horizon - dur + 1):
            idx = [x_i(p, t, k) for k in range(agvs)]
            idx += [y_i(p, t + dur, k) for k in range(agvs)]
            add_linear("linkage", idx, [1] * agvs + [-1] * agvs, 0)

    # Linear: zero-fix starts that cannot end within the horizon and ends
    # that would precede any possible start.
    for task in tasks:
        p = pos[task]
        dur = instance.processing_time(task)
        tail = [
            x_i(p, t, k)
            for t in range(max(horizon - dur + 1, 1), horizon + 1)
            for k in range(agvs)
        ]
        head = [
            y_i(p, t, k)
            for t in range(1, min(dur, horizon) + 1)
            for k in range(agvs)
        ]
        if tail:
            add_linear("domain_zero", tail, [1] * len(tail), 0)
        if head:
            add_linear("domain_zero", head, [1] * len(head), 0)

    add_linear(
        "makespan_onehot",
        [u_i(t) for t in range(1, horizon + 1)],
        [1] * horizon,
        1,
    )

    # Precedence.  Movable predecessors: the successor start at t forbids
    # predecessor ends from t - delta + 1 onward.  Fixed A1 predecessors
    # have no end variables, so the successor start window is zero-fixed.
    for pred, succ in sets.pairs:
        sp_ = pos[succ]
        if pred.kind == "A" and pred.stage == 1:
            cutoff = min(timetable.tau(pred.job) + delta - 1, horizon)
            idx = [x_i(sp_, t, k) for t in range(1, cutoff + 1) for k in range(agvs)]
            if idx:
                add_linear("precedence", idx, [1] * len(idx), 0)
            continue
        pp = pos[pred]
        for t in range(1, horizon + 1):
            left = [x_i(sp_, t, k) for k in range(agvs)]
            right = [
                y_i(pp, s, k)
                for s in range(max(t - delta + 1, 1), horizon + 1)
                for k in range(agvs)
            ]
            add_quad("precedence", left, right)

    # Machine exclusivity: a task starting at t blocks same-machine starts
    # during its busy window.  The simultaneous-start product of a pair is
    # kept only in the anchor with the smaller canonical position.
    for group in (sets.machine1, sets.machine2):
        for anchor in group:
            ap = pos[anchor]
            dur = instance.processing_time(anchor)
            for t in range(1, horizon + 1):
                left = [x_i(ap, t, k) for k in range(agvs)]
                right = []
                for other in group:
                    if other == anchor:
                        continue
                    eff_lo = t if pos[other] > ap else t + 1
                    for s in range(eff_lo, min(t + dur - 1, horizon) + 1):
                        right.extend(x_i(pos[other], s, k) for k in range(agvs))
                if right:
                    add_quad("machine", left, right)

    two_delta = 2 * delta

    # AGV margin, start vs start.
    for k in range(agvs):
        for anchor in tasks:
            ap = pos[anchor]
            for t in range(1, horizon + 1):
                right = []
                for other in tasks:
                    if other == anchor:
                        continue
                    eff_lo = t if pos[other] > ap else t + 1
                    right.extend(
                        x_i(pos[other], s, k)
                        for s in range(eff_lo, min(t + two_delta - 1, horizon) + 1)
                    )
                if right:
                    add_quad("agv_start_start", [x_i(ap, t, k)], right)

    # End events: movable ends are y variables over time; A1 ends sit at
    # the fixed tau with the pickup indicator as the event variable.
    end_order: dict[TaskId, int] = {t: pos[t] for t in tasks}
    for job in range(n_a):
        end_order[TaskId("A", job, 1)] = len(tasks) + job

    def end_window_vars(anchor: TaskId, t: int, k: int, lo: int, hi: int) -> list[int]:
        # End-event variables of all non-anchor tasks in time window lo..hi,
        # keeping same-time pairs only for canonically later tasks.
        out: list[int] = []
        rank = end_order[anchor]
        for other in tasks:
            if other == anchor:
                continue
            eff_lo = lo if end_order[other] > rank else lo + 1
            out.extend(
                y_i(pos[other], s, k)
                for s in range(max(eff_lo, 1), min(hi, horizon) + 1)
            )
        for job in range(n_a):
            fixed = TaskId("A", job, 1)
            if fixed == anchor:
                continue
            tau = timetable.tau(job)
            eff_lo = lo if end_order[fixed] > rank else lo + 1
            if eff_lo <= tau <= hi:
                out.append(z_i(job, k))
        return out

    # AGV margin, end vs end.
    for k in range(agvs):
        for anchor in tasks:
            for t in range(1, horizon + 1):
                right = end_window_vars(anchor, t, k, t, t + two_delta - 1)
                if right:
                    add_quad("agv_end_end", [y_i(pos[anchor], t, k)], right)
        for job in range(n_a):
            fixed = TaskId("A", job, 1)
            tau = timetable.tau(job)
            right = end_window_vars(fixed, tau, k, tau, tau + two_delta - 1)
            if right:
                add_quad("agv_end_end", [z_i(job, k)], right)

    # AGV margin, start anchor vs ends in window (no same-task pairs, no
    # successor carve-out; start and end variables never coincide so each
    # product already appears exactly once).
    def plain_end_window(anchor: TaskId, k: int, lo: int, hi: int) -> list[int]:
        out: list[int] = []
        for other in tasks:
            if other == anchor:
                continue
            out.extend(
                y_i(pos[other], s, k) for s in range(max(lo, 1), min(hi, horizon) + 1)
            )
        for job in range(n_a):
            fixed = TaskId("A", job, 1)
            if fixed == anchor:
                continue
            if lo <= timetable.tau(job) <= hi:
                out.append(z_i(job, k))
        return out

    for k in range(agvs):
        for anchor in tasks:
            ap = pos[anchor]
            for t in range(1, horizon + 1):
                right = plain_end_window(anchor, k, t, t + two_delta - 1)
                if right:
                    add_quad("agv_start_end", [x_i(ap, t, k)], right)

    # AGV margin, end anchor vs starts in window; the direct successor is
    # carved out here and handled by the delta-margin family below.
    pair_set = set(sets.pairs)

    def start_window_after_end(
        ender: TaskId, k: int, lo: int, hi: int, margin_pairs: bool
    ) -> list[int]:
        out: list[int] = []
        for other in tasks:
            if other == ender:
                continue
            if margin_pairs and (ender, other) in pair_set:
                continue
            out.extend(
                x_i(pos[other], s, k) for s in range(max(lo, 1), min(hi, horizon) + 1)
            )
        return out

    for k in range(agvs):
        for anchor in tasks:
            for t in range(1, horizon + 1):
                right = start_window_after_end(anchor, k, t, t + two_delta - 1, True)
                if right:
                    add_quad("agv_end_start", [y_i(pos[anchor], t, k)], right)
        for job in range(n_a):
            fixed = TaskId("A", job, 1)
            tau = timetable.tau(job)
            right = start_window_after_end(fixed, k, tau, tau + two_delta - 1, True)
            if right:
                add_quad("agv_end_start", [z_i(job, k)], right)

    # Direct successor margins: delta when the same AGV hands the job over,
    # 2*delta when pickup and delivery use different AGVs.
    for pred, succ in sets.pairs:
        sp_ = pos[succ]
        fixed_pred = pred.kind == "A" and pred.stage == 1
        for k in range(agvs):
            if fixed_pred:
                tau = timetable.tau(pred.job)
                anchors = [(z_i(pred.job, k), tau)]
            else:
                anchors = [
                    (y_i(pos[pred], t, k), t) for t in range(1, horizon + 1)
                ]
            for left_var, t in anchors:
                same = [
                    x_i(sp_, s, k)
                    for s in range(max(t, 1), min(t + delta - 1, horizon) + 1)
                ]
                if same:
                    add_quad("successor_same_agv", [left_var], same)
                diff = [
                    x_i(sp_, s, l)
                    for s in range(max(t, 1), min(t + two_delta - 1, horizon) + 1)
                    for l in range(agvs)
                    if l != k
                ]
                if diff:
                    add_quad("successor_diff_agv", [left_var], diff)

    # The makespan one-hot cannot precede any final task's end.
    for task in final_tasks(instance):
        p = pos[task]
        for t in range(2, horizon + 1):
            left = [y_i(p, t, k) for k in range(agvs)]
            right = [u_i(s) for s in range(1, t)]
            add_quad("makespan_coupling", left, right)

    objective = {u_i(t): t for t in range(1, horizon + 1)}

    model.linear_rules = tuple(linear)
    model.quadratic_rules = tuple(quad)
    model.objective_linear = objective
    model.objective_offset = delta
    return model


def objective_value(model: QcboModel, bits: np.ndarray) -> int:
    """Objective of a bit vector: makespan one-hot time plus one trip."""
    total = model.objective_offset
    for idx, coeff in model.objective_linear.items():
        total += coeff * int(bits[idx])
    return total


def violation_totals_many(model: QcboModel, bits_matrix: np.ndarray) -> dict[str, np.ndarray]:
    """Per-family violation totals for a batch of bit vectors (rows)."""
    stacks = model._evaluation_stacks()
    x = np.asarray(bits_matrix, dtype=np.int64).T
    if x.shape[0] != model.num_vars:
        raise ValueError(f"bit vectors must have length {model.num_vars}")
    families = model.families()
    totals = {f: np.zeros(x.shape[1], dtype=np.int64) for f in families}
    if stacks["lin"].shape[0]:
        residual = stacks["lin"] @ x - stacks["lin_rhs"][:, None]
        squared = residual * residual
        for row, fam in enumerate(stacks["lin_family"]):
            totals[fam] += squared[row]
    if stacks["left"].shape[0]:
        products = (stacks["left"] @ x) * (stacks["right"] @ x)
        for row, fam in enumerate(stacks["quad_family"]):
            totals[fam] += products[row]
    return totals


def violation_count(model: QcboModel, bits: Sequence[int] | np.ndarray) -> dict[str, int]:
    """Violation totals per family; all zeros iff the bits are feasible.

    Linear rows contribute the squared residual, quadratic rows the raw
    product value.
    """
    vec = np.asarray(bits, dtype=np.int64)
    if vec.ndim != 1 or vec.shape[0] != model.num_vars:
        raise ValueError(f"bit vector must have length {model.num_vars}")
    totals = violation_totals_many(model, vec[None, :])
    return {fam: int(values[0]) for fam, values in totals.items()}


def violation_measure(model: QcboModel, bits: Sequence[int] | np.ndarray) -> int:
    return sum(violation_count(model, bits).values())


# -- QUBO compilation -------------------------------------------------------


@dataclass(frozen=True)
class Qubo:
    """Upper-triangular QUBO: offset + sum linear + sum pairwise quadratic."""

    n: int
    linear: dict[int, int]
    quadratic: dict[tuple[int, int], int]
    offset: int


def default_penalty(instance: Instance) -> int:
    """Smallest integer penalty strictly above any objective value."""
    return instance.horizon + instance.delta + 1


def to_qubo(model: QcboModel, penalty: int | float | None = None) -> Qubo:
    """Penalty aggregation of all constraints into the objective.

    energy(bits) = objective(bits) + penalty * (sum over linear rows of
    (lhs - rhs)^2 + sum over quadratic rows of the product value), exactly.
    """
    if penalty is None:
        penalty = default_penalty(model.instance)
    if penalty <= 0:
        raise ValueError("penalty must be positive")

    exact = isinstance(penalty, int)
    dtype = np.int64 if exact else np.float64
    n = model.num_vars
    linear_acc = np.zeros(n, dtype=dtype)
    for i, c in model.objective_linear.items():
        linear_acc[i] += c
    offset = model.objective_offset
    pair_i: list[np.ndarray] = []
    pair_j: list[np.ndarray] = []
    pair_v: list[np.ndarray] = []

    for rule in model.linear_rules:
        offset += penalty * rule.rhs * rule.rhs
        coeff = rule.coeff.astype(dtype)
        np.add.at(linear_acc, rule.idx, penalty * coeff * (coeff - 2 * rule.rhs))
        if len(rule.idx) > 1:
            iu, ju = np.triu_indices(len(rule.idx), 1)
            pair_i.append(rule.idx[iu])
            pair_j.append(rule.idx[ju])
            pair_v.append(2 * penalty * coeff[iu] * coeff[ju])

    for rule in model.quadratic_rules:
        left_n, right_n = len(rule.left_idx), len(rule.right_idx)
        a = np.repeat(rule.left_idx, right_n)
        b = np.tile(rule.right_idx, left_n)
        v = penalty * np.repeat(rule.left_coeff.astype(dtype), right_n) * np.tile(
            rule.right_coeff.astype(dtype), left_n
        )
        diagonal = a == b
        if diagonal.any():
            np.add.at(linear_acc, a[diagonal], v[diagonal])
            a, b, v = a[~diagonal], b[~diagonal], v[~diagonal]
        pair_i.append(a)
        pair_j.append(b)
        pair_v.append(v)

    quadratic: dict[tuple[int, int], int] = {}
    if pair_i:
        a = np.concatenate(pair_i)
        b = np.concatenate(pair_j)
        v = np.concatenate(pair_v)
        low = np.minimum(a, b)
        high = np.maximum(a, b)
        keys = low * n + high
        uniq, inverse = np.unique(keys, return_inverse=True)
        sums = np.zeros(len(uniq), dtype=dtype)
        np.add.at(sums, inverse, v)
        cast = int if exact else float
        for key, total in zip(uniq.tolist(), sums.tolist()):
            if total != 0:
                quadratic[(key // n, key % n)] = cast(total)
    cast = int if exact else float
    linear = {
        i: cast(c) for i, c in enumerate(linear_acc.tolist()) if c != 0
    }
    return Qubo(n=model.num_vars, linear=linear, quadratic=quadratic, offset=offset)


def qubo_energy(qubo: Qubo, bits: Sequence[int] | np.ndarray) -> int | float:
    """Exact energy of a bit vector (integer arithmetic for integer data)."""
    if len(bits) != qubo.n:
        raise ValueError(f"bit vector must have length {qubo.n}")
    total = qubo.offset
    for i, c in qubo.linear.items():
        if bits[i]:
            total += c
    for (i, j), c in qubo.quadratic.items():
        if bits[i] and bits[j]:
            total += c
    return total


def qubo_to_json(qubo: Qubo) -> str:
    doc = {
        "n": qubo.n,
        "offset": qubo.offset,
        "linear": [[i, qubo.linear[i]] for i in sorted(qubo.linear)],
        "quadratic": [
            [i, j, qubo.quadratic[(i, j)]] for i, j in sorted(qubo.quadratic)
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=None, separators=(",", ":")) + "\n"


def qubo_from_json(text: str) -> Qubo:
    doc = json.loads(text)
    if set(doc) != {"n", "offset", "linear", "quadratic"}:
        raise ValueError("QUBO document must have n, offset, linear, quadratic")
    linear = {}
    for i, c in doc["linear"]:
        if i in linear:
            raise ValueError(f"duplicate linear index {i}")
        linear[i] = c
    quadratic = {}
    for i, j, c in doc["quadratic"]:
        if not i < j:
            raise ValueError(f"quadratic pair ({i},{j}) must satisfy i < j")
        if (i, j) in quadratic:
            raise ValueError(f"duplicate quadratic pair ({i},{j})")
        quadratic[(i, j)] = c
    return Qubo(n=doc["n"], linear=linear, quadratic=quadratic, offset=doc["offset"])


# -- schedule <-> bits -------------------------------------------------------


def encode_schedule_qcbo(instance: Instance, schedule: Schedule) -> np.ndarray:
    """Bit vector of a schedule: one start, end, pickup and makespan hot."""
    check_schedule_shape(instance, schedule)
    model_index = _IndexOnly(instance)
    bits = np.zeros(model_index.num_vars, dtype=np.int8)
    tasks = movable_tasks(instance)
    pos = {task: i for i, task in enumerate(tasks)}
    for task in tasks:
        place = schedule.placements[task]
        end = place.start + instance.processing_time(task)
        if place.start > instance.horizon or end > instance.horizon:
            raise QcboEncodingError(
                f"{task.token()} ends at {end}, beyond horizon {instance.horizon}"
            )
        bits[model_index.x_index(pos[task], place.start, place.delivery_agv)] = 1
        bits[model_index.y_index(pos[task], end, place.pickup_agv)] = 1
    for job, agv in enumerate(schedule.a1_pickups):
        bits[model_index.z_index(job, agv)] = 1
    finals = final_tasks(instance)
    last_end = (
        max(schedule.end(instance, t) for t in finals) if finals else 1
    )
    bits[model_index.u_index(last_end)] = 1
    return bits


class _IndexOnly(QcboModel):
    """Index arithmetic without building the constraint system."""

    def __init__(self, instance: Instance):
        n_tasks = len(movable_tasks(instance))
        n = (
            2 * n_tasks * instance.horizon * instance.num_agvs
            + len(instance.a_jobs) * instance.num_agvs
            + instance.horizon
        )
        super().__init__(
            instance=instance,
            num_vars=n,
            linear_rules=(),
            quadratic_rules=(),
            objective_linear={},
            objective_offset=0,
        )


def decode_qcbo_solution(instance: Instance, bits: Sequence[int] | np.ndarray) -> Schedule:
    """Invert the one-hot groups; malformed groups raise, never repaired.

    A group is malformed when a task has not exactly one start or end bit,
    an A1 task not exactly one pickup bit, or the end position disagrees
    with start + processing time.
    """
    index = _IndexOnly(instance)
    vec = np.asarray(bits, dtype=np.int64)
    if vec.ndim != 1 or vec.shape[0] != index.num_vars:
        raise ValueError(f"bit vector must have length {index.num_vars}")
    tasks = movable_tasks(instance)
    horizon, agvs = instance.horizon, instance.num_agvs
    bad: list[str] = []
    placements: dict[TaskId, Placement] = {}
    for pos, task in enumerate(tasks):
        starts = [
            (t, k)
            for t in range(1, horizon + 1)
            for k in range(agvs)
            if vec[index.x_index(pos, t, k)]
        ]
        ends = [
            (t, k)
            for t in range(1, horizon + 1)
            for k in range(agvs)
            if vec[index.y_index(pos, t, k)]
        ]
        if len(starts) != 1:
            bad.append(f"x[{task.token()}]x{len(starts)}")
            continue
        if len(ends) != 1:
            bad.append(f"y[{task.token()}]x{len(ends)}")
            continue
        (start, delivery), (end, pickup) = starts[0], ends[0]
        if end != start + instance.processing_time(task):
            bad.append(f"y[{task.token()}]@{end}!={start}+p")
            continue
        placements[task] = Placement(start=start, delivery_agv=delivery, pickup_agv=pickup)
    pickups: list[int] = []
    for job in range(len(instance.a_jobs)):
        hot = [k for k in range(agvs) if vec[index.z_index(job, k)]]
        if len(hot) != 1:
            bad.append(f"z[A{job}s1]x{len(hot)}")
            continue
        pickups.append(hot[0])
    if bad:
        raise QcboDecodeError(bad)
    return Schedule(placements=placements, a1_pickups=tuple(pickups))
