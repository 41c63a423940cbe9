"""Native solvers: exact depth-first search, greedy construction, annealing.

The exact search enumerates start times and AGV choices task by task in
stage order, pruning with a per-job chain bound against the incumbent;
on small instances it both proves optimality and serves as the oracle
for the other methods.  The annealer is a seeded single-flip Metropolis
chain on the compiled penalty QUBO and stands in for the proprietary
hybrid metaheuristic the models were designed for; results are labeled
accordingly by the benchmark harness.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from agvshop.core import (
    Instance,
    Placement,
    Schedule,
    TaskId,
    a1_timetable,
    final_tasks,
    machine_of,
    movable_tasks,
    relation_set,
    trivial_makespan,
)
from agvshop.qcbo import (
    Qubo,
    QcboDecodeError,
    build_qcbo,
    decode_qcbo_solution,
    default_penalty,
    to_qubo,
)
from agvshop.validate import makespan, validate_schedule


@dataclass(frozen=True)
class AnnealParams:
    """Knobs of the Metropolis annealer.

    The inverse temperature rises geometrically from beta_start to
    beta_end over the sweeps; every restart is an independent chain from
    uniform random bits with a seed derived from (seed, restart index).
    """

    sweeps: int = 300
    restarts: int = 1
    beta_start: float = 0.01
    beta_end: float = 5.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sweeps < 1 or self.restarts < 1:
            raise ValueError("sweeps and restarts must be >= 1")
        if not 0 < self.beta_start <= self.beta_end:
            raise ValueError("need 0 < beta_start <= beta_end")


@dataclass(frozen=True)
class SolveResult:
    schedule: Schedule | None
    objective: int
    feasible: bool
    proven_optimal: bool
    runtime: float
    iterations: int
    seed: int
    trace: tuple[tuple[float, int], ...] = ()
    """Incumbent objective improvements as (elapsed seconds, objective)."""


# -- incremental feasibility ---------------------------------------------------


class _PartialState:
    """Placed tasks plus the event lists the pairwise rules need."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.timetable = a1_timetable(instance)
        self.pairs = set(relation_set(instance).pairs)
        self.placements: dict[TaskId, Placement] = {}
        self.a1_pickups: list[int] = []
        # events: (time, agv, task)
        self.starts: list[tuple[int, int, TaskId]] = []
        self.ends: list[tuple[int, int, TaskId]] = []

    def assign_a1(self, job: int, agv: int) -> None:
        self.a1_pickups.append(agv)
        self.ends.append((self.timetable.tau(job), agv, TaskId("A", job, 1)))

    def unassign_a1(self) -> None:
        self.a1_pickups.pop()
        self.ends.pop()

    def place(self, task: TaskId, start: int, k1: int, k2: int) -> None:
        end = start + self.instance.processing_time(task)
        self.placements[task] = Placement(start, k1, k2)
        self.starts.append((start, k1, task))
        self.ends.append((end, k2, task))

    def unplace(self, task: TaskId) -> None:
        del self.placements[task]
        self.starts.pop()
        self.ends.pop()

    def a1_pickup_ok(self, job: int, agv: int) -> bool:
        tau = self.timetable.tau(job)
        margin = 2 * self.instance.delta
        return all(
            k != agv or abs(tau - e) >= margin for e, k, _ in self.ends
        )

    def placement_ok(self, task: TaskId, start: int, k1: int, k2: int) -> bool:
        inst = self.instance
        end = start + inst.processing_time(task)
        if end > inst.horizon:
            return False
        delta = inst.delta
        two_delta = 2 * delta
        mach = machine_of(task)
        for other, place in self.placements.items():
            if machine_of(other) == mach:
                other_end = place.start + inst.processing_time(other)
                if start < other_end and place.start < end:
                    return False
        for s, k, other in self.starts:
            if k == k1 and abs(s - start) < two_delta:
                return False
        for e, k, other in self.ends:
            if k == k2 and abs(e - end) < two_delta:
                return False
        # candidate starts at `start`: placed ends on its delivery AGV
        for e, k, other in self.ends:
            if k != k1:
                continue
            if 0 <= e - start < two_delta:
                return False
            gap = start - e
            margin = delta if (other, task) in self.pairs else two_delta
            if 0 <= gap < margin:
                return False
        # candidate ends at `end`: placed starts on its pickup AGV
        for s, k, other in self.starts:
            if k != k2:
                continue
            if 0 <= end - s < two_delta:
                return False
            gap = s - end
            margin = delta if (task, other) in self.pairs else two_delta
            if 0 <= gap < margin:
                return False
        # handoff: a successor delivered by a different AGV than picked up
        # its predecessor needs the full 2*delta margin
        pred = _predecessor(task)
        if pred is not None:
            pred_end, pred_pickup = self._end_of(pred)
            if pred_pickup is not None and pred_pickup != k1:
                if 0 <= start - pred_end < two_delta:
                    return False
        succ = _successor(task)
        if succ is not None and succ in self.placements:
            succ_place = self.placements[succ]
            if succ_place.delivery_agv != k2:
                if 0 <= succ_place.start - end < two_delta:
                    return False
        return True

    def _end_of(self, task: TaskId) -> tuple[int, int | None]:
        if task.kind == "A" and task.stage == 1:
            if task.job < len(self.a1_pickups):
                return self.timetable.tau(task.job), self.a1_pickups[task.job]
            return self.timetable.tau(task.job), None
        place = self.placements.get(task)
        if place is None:
            return 0, None
        return place.start + self.instance.processing_time(task), place.pickup_agv

    def schedule(self) -> Schedule:
        return Schedule(
            placements=dict(self.placements), a1_pickups=tuple(self.a1_pickups)
        )


def _predecessor(task: TaskId) -> TaskId | None:
    if task.stage == 1:
        return None
    return TaskId(task.kind, task.job, task.stage - 1)


def _successor(task: TaskId) -> TaskId | None:
    last = 2 if task.kind == "A" else 3
    if task.stage == last:
        return None
    return TaskId(task.kind, task.job, task.stage + 1)


def _stage_order(instance: Instance) -> tuple[TaskId, ...]:
    return tuple(
        sorted(movable_tasks(instance), key=lambda t: (t.stage, t.kind, t.job))
    )


def _earliest_start(state: _PartialState, task: TaskId) -> int:
    inst = state.instance
    pred = _predecessor(task)
    if pred is None:
        return 1
    if pred.kind == "A" and pred.stage == 1:
        return state.timetable.tau(pred.job) + inst.delta
    place = state.placements[pred]
    return place.start + inst.processing_time(pred) + inst.delta


def _remaining_chain(instance: Instance, task: TaskId) -> int:
    """delta + processing of this task and everything after it in its job."""
    last = 2 if task.kind == "A" else 3
    total = 0
    for stage in range(task.stage, last + 1):
        total += instance.delta + instance.processing_time(
            TaskId(task.kind, task.job, stage)
        )
    return total


# -- exact search --------------------------------------------------------------


def brute_force(instance: Instance, time_budget: float = 60.0) -> SolveResult:
    """Depth-first exact search over start times and AGV choices.

    Start times increase along each branch, so the chain lower bound
    prunes monotonically; a completed search proves the returned schedule
    optimal within the horizon (or that none exists).  Intended for a
    handful of jobs; the search space grows with horizon^tasks.
    """
    begin = time.perf_counter()
    order = _stage_order(instance)
    finals = set(final_tasks(instance))
    state = _PartialState(instance)
    timetable = state.timetable
    n_a = len(instance.a_jobs)
    trivial = trivial_makespan(instance)

    best: dict = {"objective": trivial, "schedule": None, "nodes": 0, "aborted": False}
    trace: list[tuple[float, int]] = []

    def chain_bound() -> int:
        # completion lower bound per job, + final trip
        worst = 0
        for job in range(n_a):
            task = TaskId("A", job, 2)
            if task in state.placements:
                end = state.placements[task].start + instance.processing_time(task)
            else:
                end = timetable.tau(job) + _remaining_chain(instance, task)
            worst = max(worst, end)
        for job in range(len(instance.b_jobs)):
            end = 0
            for stage in (3, 2, 1):
                task = TaskId("B", job, stage)
                place = state.placements.get(task)
                if place is not None:
                    end = max(
                        end,
                        place.start
                        + instance.processing_time(task)
                        + (
                            _remaining_chain(instance, TaskId("B", job, stage + 1))
                            if task not in finals
                            else 0
                        ),
                    )
                    break
            else:
                end = 1 - instance.delta + _remaining_chain(instance, TaskId("B", job, 1))
            worst = max(worst, end)
        return worst + instance.delta

    def out_of_time() -> bool:
        return time.perf_counter() - begin > time_budget

    def descend(depth: int) -> None:
        best["nodes"] += 1
        if best["nodes"] % 4096 == 0 and out_of_time():
            best["aborted"] = True
            return
        if depth < n_a:
            for agv in range(instance.num_agvs):
                if not state.a1_pickup_ok(depth, agv):
                    continue
                state.assign_a1(depth, agv)
                descend(depth + 1)
                state.unassign_a1()
                if best["aborted"]:
                    return
            return
        task_depth = depth - n_a
        if task_depth == len(order):
            objective = makespan(instance, state.schedule())
            if objective < best["objective"] or best["schedule"] is None:
                best["objective"] = objective
                best["schedule"] = state.schedule()
                trace.append((time.perf_counter() - begin, objective))
            return
        if best["schedule"] is not None and chain_bound() >= best["objective"]:
            return
        task = order[task_depth]
        duration = instance.processing_time(task)
        tail = _remaining_chain(instance, task) - instance.delta - duration
        for start in range(_earliest_start(state, task), instance.horizon - duration + 1):
            if best["schedule"] is not None:
                bound = start + duration + tail + instance.delta
                if bound >= best["objective"]:
                    break  # starts ascend, the bound only grows
            for k1 in range(instance.num_agvs):
                for k2 in range(instance.num_agvs):
                    if not state.placement_ok(task, start, k1, k2):
                        continue
                    state.place(task, start, k1, k2)
                    descend(depth + 1)
                    state.unplace(task)
                    if best["aborted"]:
                        return
            if best["aborted"]:
                return

    descend(0)
    runtime = time.perf_counter() - begin
    feasible = best["schedule"] is not None
    return SolveResult(
        schedule=best["schedule"],
        objective=best["objective"] if feasible else trivial,
        feasible=feasible,
        proven_optimal=not best["aborted"],
        runtime=runtime,
        iterations=best["nodes"],
        seed=0,
        trace=tuple(trace),
    )


# -- greedy construction -------------------------------------------------------


def greedy_schedule(instance: Instance) -> SolveResult:
    """Earliest feasible start per task in stage order, AGVs first-fit.

    Deterministic; the result, when feasible, passes the validator (this
    is re-checked before returning).
    """
    begin = time.perf_counter()
    state = _PartialState(instance)
    tried = 0
    trivial = trivial_makespan(instance)

    def fail() -> SolveResult:
        return SolveResult(
            schedule=None,
            objective=trivial,
            feasible=False,
            proven_optimal=False,
            runtime=time.perf_counter() - begin,
            iterations=tried,
            seed=0,
        )

    for job in range(len(instance.a_jobs)):
        agv = next(
            (k for k in range(instance.num_agvs) if state.a1_pickup_ok(job, k)), None
        )
        if agv is None:
            return fail()
        state.assign_a1(job, agv)

    for task in _stage_order(instance):
        duration = instance.processing_time(task)
        placed = False
        for start in range(_earliest_start(state, task), instance.horizon - duration + 1):
            for k1 in range(instance.num_agvs):
                for k2 in range(instance.num_agvs):
                    tried += 1
                    if state.placement_ok(task, start, k1, k2):
                        state.place(task, start, k1, k2)
                        placed = True
                        break
                if placed:
                    break
            if placed:
                break
        if not placed:
            return fail()

    schedule = state.schedule()
    if validate_schedule(instance, schedule):
        return fail()
    runtime = time.perf_counter() - begin
    objective = makespan(instance, schedule)
    return SolveResult(
        schedule=schedule,
        objective=objective,
        feasible=True,
        proven_optimal=False,
        runtime=runtime,
        iterations=tried,
        seed=0,
        trace=((runtime, objective),),
    )


# -- annealing -----------------------------------------------------------------


class QuboArrays:
    """QUBO compiled to flat arrays for incremental evaluation.

    ``flip_delta`` is the exact energy change of flipping one bit; the
    annealer applies it incrementally and tests assert it against full
    re-evaluation.
    """

    def __init__(self, qubo: Qubo):
        self.n = qubo.n
        self.offset = qubo.offset
        self.linear = np.zeros(qubo.n, dtype=np.int64)
        for i, c in qubo.linear.items():
            self.linear[i] = c
        pairs = sorted(qubo.quadratic)
        self.pair_i = np.asarray([i for i, _ in pairs], dtype=np.int64)
        self.pair_j = np.asarray([j for _, j in pairs], dtype=np.int64)
        self.pair_v = np.asarray([qubo.quadratic[p] for p in pairs], dtype=np.int64)
        # symmetric adjacency in CSR form for single-flip deltas
        src = np.concatenate([self.pair_i, self.pair_j])
        dst = np.concatenate([self.pair_j, self.pair_i])
        val = np.concatenate([self.pair_v, self.pair_v])
        order = np.lexsort((dst, src))
        self.adj_indices = dst[order]
        self.adj_values = val[order]
        self.adj_indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(self.adj_indptr, src[order] + 1, 1)
        np.cumsum(self.adj_indptr, out=self.adj_indptr)

    def energy(self, bits: np.ndarray) -> int:
        vec = np.asarray(bits, dtype=np.int64)
        lin = int(self.linear @ vec)
        both = vec[self.pair_i] * vec[self.pair_j]
        quad = int(both @ self.pair_v)
        return self.offset + lin + quad

    def flip_delta(self, bits: np.ndarray, i: int) -> int:
        lo, hi = self.adj_indptr[i], self.adj_indptr[i + 1]
        field = int(self.linear[i]) + int(
            self.adj_values[lo:hi] @ bits[self.adj_indices[lo:hi]]
        )
        return field if not bits[i] else -field


@njit(cache=True)
def _splitmix64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _chain_kernel(
    offset, linear, indptr, indices, values, pair_i, pair_j, pair_v, betas, seed,
    bits, best_bits, trace,
):
    # one full Metropolis chain: random init, sequential single-flip sweeps,
    # integer energies; splitmix64 keeps runs bit-reproducible
    n = linear.shape[0]
    state = np.uint64(seed)
    for i in range(n):
        state, z = _splitmix64(state)
        bits[i] = np.int8(z & np.uint64(1))
    energy = offset
    for i in range(n):
        if bits[i]:
            energy += linear[i]
    for p in range(pair_i.shape[0]):
        if bits[pair_i[p]] and bits[pair_j[p]]:
            energy += pair_v[p]
    best = energy
    for i in range(n):
        best_bits[i] = bits[i]
    inv53 = 1.0 / 9007199254740992.0
    for s in range(betas.shape[0]):
        beta = betas[s]
        for i in range(n):
            field = linear[i]
            for q in range(indptr[i], indptr[i + 1]):
                if bits[indices[q]]:
                    field += values[q]
            delta = -field if bits[i] else field
            accept = delta <= 0
            if not accept:
                state, z = _splitmix64(state)
                accept = (z >> np.uint64(11)) * inv53 < math.exp(-beta * delta)
            if accept:
                bits[i] = 1 - bits[i]
                energy += delta
                if energy < best:
                    best = energy
                    for t in range(n):
                        best_bits[t] = bits[t]
        trace[s] = best
    return best


def _beta_schedule(params: AnnealParams) -> np.ndarray:
    if params.sweeps > 1:
        ratio = (params.beta_end / params.beta_start) ** (1.0 / (params.sweeps - 1))
    else:
        ratio = 1.0
    return np.asarray(
        [params.beta_start * ratio**s for s in range(params.sweeps)], dtype=np.float64
    )


def _restart_seed(seed: int, restart: int) -> np.uint64:
    return np.random.SeedSequence([seed, restart]).generate_state(2, np.uint64)[0]


def anneal_qubo(
    qubo: Qubo, params: AnnealParams
) -> tuple[np.ndarray, int, tuple[int, ...]]:
    """Best bits, their energy, and the running best energy per sweep.

    Deterministic given the seed; the trace spans all restarts in order
    and is non-increasing.
    """
    arrays = QuboArrays(qubo)
    return _anneal_arrays(arrays, params)


def _anneal_arrays(
    arrays: QuboArrays, params: AnnealParams
) -> tuple[np.ndarray, int, tuple[int, ...]]:
    n = arrays.n
    betas = _beta_schedule(params)
    best_bits = np.zeros(n, dtype=np.int8)
    best_energy: int | None = None
    trace: list[int] = []
    bits = np.zeros(n, dtype=np.int8)
    chain_best = np.zeros(n, dtype=np.int8)
    chain_trace = np.zeros(params.sweeps, dtype=np.int64)
    for restart in range(params.restarts):
        chain_energy = int(
            _chain_kernel(
                arrays.offset,
                arrays.linear,
                arrays.adj_indptr,
                arrays.adj_indices,
                arrays.adj_values,
                arrays.pair_i,
                arrays.pair_j,
                arrays.pair_v,
                betas,
                _restart_seed(params.seed, restart),
                bits,
                chain_best,
                chain_trace,
            )
        )
        previous_best = best_energy
        if previous_best is None or chain_energy < previous_best:
            best_energy = chain_energy
            best_bits = chain_best.copy()
        for s in range(params.sweeps):
            value = int(chain_trace[s])
            if previous_best is not None:
                value = min(value, previous_best)
            trace.append(value)
    return best_bits, best_energy, tuple(trace)


# -- uniform facade ------------------------------------------------------------


def _chunk_seed(seed: int, chunk: int) -> int:
    return int(np.random.SeedSequence([seed, chunk]).generate_state(2, np.uint64)[0])


def solve_instance(
    instance: Instance,
    method: str,
    budget: float = 5.0,
    seed: int = 0,
    anneal_sweeps: int = 300,
    penalty: int | None = None,
) -> SolveResult:
    """One entry point for brute, greedy and anneal.

    Annealing compiles the penalty QUBO once and runs seeded restart
    chunks until the wall-clock budget expires; the best bit vector is
    decoded at the end.  Malformed or rule-violating decodes count as
    infeasible and fall back to the trivial objective, never repaired.
    """
    if method == "brute":
        return dataclasses.replace(brute_force(instance, time_budget=budget), seed=seed)
    if method == "greedy":
        return dataclasses.replace(greedy_schedule(instance), seed=seed)
    if method != "anneal":
        raise ValueError(f"unknown method {method!r}; use brute, greedy or anneal")

    begin = time.perf_counter()
    model = build_qcbo(instance)
    pen = default_penalty(instance) if penalty is None else penalty
    qubo = to_qubo(model, pen)
    arrays = QuboArrays(qubo)

    best_energy: int | None = None
    best_bits: np.ndarray | None = None
    incumbent: int | None = None
    trace: list[tuple[float, int]] = []
    chunk = 0
    total_sweeps = 0
    anneal_started = time.perf_counter()
    while True:
        chunk_begin = time.perf_counter()
        params = AnnealParams(
            sweeps=anneal_sweeps,
            restarts=1,
            beta_start=max(1e-4, 0.1 / pen),
            beta_end=5.0,
            seed=_chunk_seed(seed, chunk),
        )
        bits, energy, sweep_trace = _anneal_arrays(arrays, params)
        chunk_duration = time.perf_counter() - chunk_begin
        if best_energy is None or energy < best_energy:
            best_energy = energy
            best_bits = bits
        # energies below the penalty are violation-free, so they equal the
        # makespan objective of the visited bit vector
        for s, value in enumerate(sweep_trace):
            if value < pen and (incumbent is None or value < incumbent):
                incumbent = int(value)
                at = (
                    chunk_begin
                    - begin
                    + (s + 1) / len(sweep_trace) * chunk_duration
                )
                trace.append((at, incumbent))
        chunk += 1
        total_sweeps += anneal_sweeps
        if time.perf_counter() - anneal_started >= budget:
            break

    schedule: Schedule | None = None
    feasible = False
    objective = trivial_makespan(instance)
    if best_bits is not None and best_energy is not None and best_energy < pen:
        try:
            candidate = decode_qcbo_solution(instance, best_bits)
        except QcboDecodeError:
            candidate = None
        if candidate is not None and not validate_schedule(instance, candidate):
            schedule = candidate
            feasible = True
            objective = makespan(instance, candidate)
    return SolveResult(
        schedule=schedule,
        objective=objective,
        feasible=feasible,
        proven_optimal=False,
        runtime=time.perf_counter() - begin,
        iterations=total_sweeps,
        seed=seed,
        trace=tuple(trace),
    )
