import numpy as np
import pytest

from agvshop.core import Instance, Placement, Schedule, TaskId
from agvshop.qcbo import (
    LinearRule,
    QcboDecodeError,
    QcboModel,
    build_qcbo,
    decode_qcbo_solution,
    default_penalty,
    encode_schedule_qcbo,
    objective_value,
    qubo_energy,
    qubo_from_json,
    qubo_to_json,
    to_qubo,
    violation_count,
    violation_measure,
)
from agvshop.solve import QuboArrays, brute_force
from agvshop.validate import makespan

from helpers import TINY


def test_variable_count():
    inst = Instance(delta=1, num_agvs=1, horizon=20, a_jobs=((1, 1),), b_jobs=((1, 1, 1),))
    model = build_qcbo(inst)
    assert model.num_vars == 2 * 4 * 20 * 1 + 1 * 1 + 20 == 181


def test_optimal_schedule_is_clean_and_energy_matches_makespan():
    result = brute_force(TINY, time_budget=30)
    assert result.proven_optimal
    model = build_qcbo(TINY)
    bits = encode_schedule_qcbo(TINY, result.schedule)
    assert all(v == 0 for v in violation_count(model, bits).values())
    qubo = to_qubo(model, default_penalty(TINY))
    assert qubo_energy(qubo, bits) == makespan(TINY, result.schedule)


def test_only_precedence_fires_on_inverted_successor():
    inst = Instance(delta=1, num_agvs=2, horizon=20, a_jobs=((1, 1),), b_jobs=((1, 1, 1),))
    schedule = Schedule(
        placements={
            TaskId("A", 0, 2): Placement(5, 0, 0),
            TaskId("B", 0, 1): Placement(10, 0, 0),
            TaskId("B", 0, 2): Placement(3, 1, 1),
            TaskId("B", 0, 3): Placement(15, 1, 1),
        },
        a1_pickups=(0,),
    )
    model = build_qcbo(inst)
    totals = violation_count(model, encode_schedule_qcbo(inst, schedule))
    assert totals["precedence"] > 0
    assert all(v == 0 for family, v in totals.items() if family != "precedence")


def test_missing_makespan_one_hot_counts_one():
    model = build_qcbo(TINY)
    result = brute_force(TINY, time_budget=30)
    bits = encode_schedule_qcbo(TINY, result.schedule)
    bits[[i for i, c in model.objective_linear.items() if bits[i]]] = 0
    assert violation_count(model, bits)["makespan_onehot"] == 1


def test_close_deliveries_fire_start_start():
    inst = Instance(delta=1, num_agvs=2, horizon=20, a_jobs=((1, 3),), b_jobs=((1, 1, 1),))
    schedule = Schedule(
        placements={
            TaskId("A", 0, 2): Placement(5, 0, 1),
            TaskId("B", 0, 1): Placement(3, 1, 1),
            TaskId("B", 0, 2): Placement(6, 0, 0),
            TaskId("B", 0, 3): Placement(12, 1, 1),
        },
        a1_pickups=(0,),
    )
    model = build_qcbo(inst)
    totals = violation_count(model, encode_schedule_qcbo(inst, schedule))
    assert totals["agv_start_start"] >= 1


def test_penalty_expansion_of_single_equality():
    # one row: v0 + v1 = 1 with zero objective and penalty 3
    model = QcboModel(
        instance=TINY,
        num_vars=2,
        linear_rules=(
            LinearRule(
                "start_assign",
                np.asarray([0, 1], dtype=np.int64),
                np.asarray([1, 1], dtype=np.int64),
                1,
            ),
        ),
        quadratic_rules=(),
        objective_linear={},
        objective_offset=0,
    )
    qubo = to_qubo(model, 3)
    assert qubo_energy(qubo, [0, 0]) == 3
    assert qubo_energy(qubo, [1, 0]) == 0
    assert qubo_energy(qubo, [0, 1]) == 0
    assert qubo_energy(qubo, [1, 1]) == 3


def test_energy_identity_on_random_bits():
    model = build_qcbo(TINY)
    penalty = default_penalty(TINY)
    qubo = to_qubo(model, penalty)
    rng = np.random.default_rng(11)
    for _ in range(100):
        bits = rng.integers(0, 2, size=model.num_vars).astype(np.int8)
        assert qubo_energy(qubo, bits) == objective_value(model, bits) + (
            penalty * violation_measure(model, bits)
        )


def test_penalty_linearity():
    model = build_qcbo(TINY)
    q5 = to_qubo(model, 5)
    q9 = to_qubo(model, 9)
    rng = np.random.default_rng(3)
    for _ in range(25):
        bits = rng.integers(0, 2, size=model.num_vars).astype(np.int8)
        diff = qubo_energy(q9, bits) - qubo_energy(q5, bits)
        assert diff == 4 * violation_measure(model, bits)


def test_penalty_must_be_positive():
    model = build_qcbo(TINY)
    with pytest.raises(ValueError):
        to_qubo(model, 0)
    with pytest.raises(ValueError):
        to_qubo(model, -2)


def test_qubo_energy_basics():
    from agvshop.qcbo import Qubo

    qubo = Qubo(n=3, linear={1: 4}, quadratic={(0, 2): -2}, offset=7)
    assert qubo_energy(qubo, [0, 0, 0]) == 7
    assert qubo_energy(qubo, [0, 1, 0]) == 11
    assert qubo_energy(qubo, [1, 0, 1]) == 5
    with pytest.raises(ValueError):
        qubo_energy(qubo, [0, 1])


def test_flip_delta_matches_full_reevaluation():
    model = build_qcbo(TINY)
    qubo = to_qubo(model, default_penalty(TINY))
    arrays = QuboArrays(qubo)
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, size=qubo.n).astype(np.int8)
    for _ in range(200):
        i = int(rng.integers(qubo.n))
        before = arrays.energy(bits)
        delta = arrays.flip_delta(bits, i)
        bits[i] ^= 1
        assert arrays.energy(bits) - before == delta


def test_encode_decode_round_trip():
    result = brute_force(TINY, time_budget=30)
    bits = encode_schedule_qcbo(TINY, result.schedule)
    assert decode_qcbo_solution(TINY, bits) == result.schedule


def test_decode_names_doubled_task():
    result = brute_force(TINY, time_budget=30)
    model = build_qcbo(TINY)
    bits = encode_schedule_qcbo(TINY, result.schedule)
    free = next(i for i in range(model.num_vars) if not bits[i])
    assert model.var_name(free).startswith("x_")
    bits[free] = 1
    with pytest.raises(QcboDecodeError) as err:
        decode_qcbo_solution(TINY, bits)
    assert any("x[" in g for g in err.value.groups)


def test_decode_all_zeros_lists_every_task():
    model = build_qcbo(TINY)
    with pytest.raises(QcboDecodeError) as err:
        decode_qcbo_solution(TINY, np.zeros(model.num_vars, dtype=np.int8))
    assert len(err.value.groups) == 5  # 4 task start groups + 1 pickup group


def test_encoded_makespan_hot_is_latest_final_end():
    result = brute_force(TINY, time_budget=30)
    model = build_qcbo(TINY)
    bits = encode_schedule_qcbo(TINY, result.schedule)
    hot = [i for i, c in model.objective_linear.items() if bits[i]]
    assert len(hot) == 1
    last_end = max(
        result.schedule.end(TINY, TaskId("A", 0, 2)),
        result.schedule.end(TINY, TaskId("B", 0, 3)),
    )
    assert model.objective_linear[hot[0]] == last_end


def test_encode_rejects_out_of_horizon():
    schedule = Schedule(
        placements={
            TaskId("A", 0, 2): Placement(14, 0, 0),
            TaskId("B", 0, 1): Placement(1, 0, 0),
            TaskId("B", 0, 2): Placement(4, 0, 0),
            TaskId("B", 0, 3): Placement(7, 0, 0),
        },
        a1_pickups=(0,),
    )
    with pytest.raises(ValueError):
        encode_schedule_qcbo(TINY, schedule)


def test_violation_count_rejects_wrong_length():
    model = build_qcbo(TINY)
    with pytest.raises(ValueError):
        violation_count(model, np.zeros(model.num_vars - 1, dtype=np.int8))


def test_qubo_json_round_trip():
    model = build_qcbo(TINY)
    qubo = to_qubo(model, default_penalty(TINY))
    text = qubo_to_json(qubo)
    back = qubo_from_json(text)
    assert back == qubo
    assert qubo_to_json(back) == text
