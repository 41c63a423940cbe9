import json

import pytest

from agvshop.core import trivial_makespan
from agvshop.instance_gen import (
    GenConfig,
    InstanceFormatError,
    generate,
    read_instance,
    write_instance,
)


def test_same_seed_identical():
    config = GenConfig(seed=123)
    assert generate(config) == generate(config)


def test_different_seeds_differ():
    instances = {generate(GenConfig(seed=s)) for s in range(8)}
    assert len(instances) > 1


def test_default_ranges_respected():
    for seed in range(40):
        inst = generate(GenConfig(seed=seed))
        assert 3 <= len(inst.a_jobs) <= 11
        assert 3 <= len(inst.b_jobs) <= 11
        assert len(inst.a_jobs) + len(inst.b_jobs) <= 22
        assert 1 <= inst.num_agvs <= 5
        for p1, p2 in inst.a_jobs:
            assert 3 <= p1 <= 9 and 2 <= p2 <= 8
        for p1, p2, p3 in inst.b_jobs:
            assert 2 <= p1 <= 9 and 3 <= p2 <= 8 and 2 <= p3 <= 7


def test_horizon_always_covers_trivial_bound():
    for seed in range(100):
        inst = generate(GenConfig(seed=seed))
        assert inst.horizon >= trivial_makespan(inst)


def test_fixed_horizon_too_small_errors():
    config = GenConfig(
        seed=1,
        n_a=(3, 3),
        n_b=(3, 3),
        horizon_policy="fixed",
        horizon_value=10,
    )
    with pytest.raises(ValueError):
        generate(config)


def test_fixed_horizon_large_enough_is_kept():
    config = GenConfig(
        seed=1, n_a=(3, 3), n_b=(3, 3), horizon_policy="fixed", horizon_value=500
    )
    inst = generate(config)
    assert inst.horizon == 500
    assert trivial_makespan(inst) <= 500


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(n_a=(5, 3))
    with pytest.raises(ValueError):
        GenConfig(num_agvs=(0, 2))
    with pytest.raises(ValueError):
        GenConfig(horizon_policy="fixed")
    with pytest.raises(ValueError):
        GenConfig(horizon_policy="fixed", horizon_value=600)
    with pytest.raises(ValueError):
        GenConfig(horizon_policy="bogus")
    with pytest.raises(ValueError):
        GenConfig(horizon_value=30)
    with pytest.raises(ValueError):
        GenConfig(delta=0)


def test_round_trip_identity():
    for seed in (0, 7, 99):
        inst = generate(GenConfig(seed=seed))
        assert read_instance(write_instance(inst)) == inst


def test_write_is_canonical():
    inst = generate(GenConfig(seed=4))
    assert write_instance(inst) == write_instance(inst)
    keys = list(json.loads(write_instance(inst)))
    assert keys == sorted(keys)


def test_read_rejects_zero_delta():
    inst = generate(GenConfig(seed=2))
    text = write_instance(inst).replace(f'"delta": {inst.delta}', '"delta": 0')
    with pytest.raises(InstanceFormatError, match="delta"):
        read_instance(text)


def test_read_rejects_unknown_field():
    inst = generate(GenConfig(seed=2))
    text = write_instance(inst).replace('"delta"', '"comment": "x",\n  "delta"')
    with pytest.raises(InstanceFormatError, match="comment"):
        read_instance(text)


def test_read_rejects_missing_field():
    inst = generate(GenConfig(seed=2))
    doc = json.loads(write_instance(inst))
    del doc["num_agvs"]
    with pytest.raises(InstanceFormatError, match="num_agvs"):
        read_instance(json.dumps(doc))


def test_read_rejects_bad_job_shape():
    with pytest.raises(InstanceFormatError, match="b_jobs"):
        read_instance(
            '{"a_jobs": [], "b_jobs": [[1, 2]], "delta": 1, "horizon": 5, "num_agvs": 1}'
        )


def test_read_rejects_malformed_json():
    with pytest.raises(InstanceFormatError):
        read_instance("{not json")
