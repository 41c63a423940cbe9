"""Seeded random benchmark instances and the canonical instance file format.

Generation is a pure function of the config: the PRNG is NumPy's PCG64
seeded from ``config.seed``, so corpora are bit-identical across runs and
platforms.  Instance files are strict JSON with sorted keys; unknown or
missing fields are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from agvshop.core import Instance, a1_timetable, trivial_makespan

MAX_TOTAL_JOBS = 22
MAX_FIXED_HORIZON = 541
_MAX_ATTEMPTS = 10_000


class InstanceFormatError(ValueError):
    """Raised for malformed instance documents; the message names the field."""


@dataclass(frozen=True)
class GenConfig:
    """Sampling ranges (inclusive) for random instances.

    Defaults are the benchmark ranges: 3..11 jobs of each kind capped at
    22 in total, up to 5 AGVs, stage-specific processing-time ranges.
    ``delta`` is a fixed trip time rather than a range.  ``horizon_policy``
    is ``"trivial_bound"`` (horizon = trivial makespan, always feasible)
    or ``"fixed"`` with ``horizon_value`` <= 541.
    """

    seed: int = 0
    n_a: tuple[int, int] = (3, 11)
    n_b: tuple[int, int] = (3, 11)
    num_agvs: tuple[int, int] = (1, 5)
    p_a1: tuple[int, int] = (3, 9)
    p_a2: tuple[int, int] = (2, 8)
    p_b1: tuple[int, int] = (2, 9)
    p_b2: tuple[int, int] = (3, 8)
    p_b3: tuple[int, int] = (2, 7)
    delta: int = 1
    horizon_policy: str = "trivial_bound"
    horizon_value: int | None = None

    def __post_init__(self) -> None:
        for name, lo_min in (
            ("n_a", 0),
            ("n_b", 0),
            ("num_agvs", 1),
            ("p_a1", 1),
            ("p_a2", 1),
            ("p_b1", 1),
            ("p_b2", 1),
            ("p_b3", 1),
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"empty range for {name}: {lo}..{hi}")
            if lo < lo_min:
                raise ValueError(f"range for {name} must start at >= {lo_min}")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.horizon_policy not in ("trivial_bound", "fixed"):
            raise ValueError(f"unknown horizon_policy {self.horizon_policy!r}")
        if self.horizon_policy == "fixed":
            if self.horizon_value is None:
                raise ValueError("fixed horizon_policy requires horizon_value")
            if not 1 <= self.horizon_value <= MAX_FIXED_HORIZON:
                raise ValueError(
                    f"horizon_value must be in 1..{MAX_FIXED_HORIZON}"
                )
        elif self.horizon_value is not None:
            raise ValueError("horizon_value only applies to the fixed policy")


def _a1_pickups_schedulable(instance: Instance) -> bool:
    # The A1 end times are fixed; pickups on the same AGV must be >= 2*delta
    # apart, so with K AGVs every K-th consecutive end must leave that gap.
    taus = a1_timetable(instance).taus
    k = instance.num_agvs
    return all(
        taus[i] - taus[i - k] >= 2 * instance.delta for i in range(k, len(taus))
    )


def _draw(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    return int(rng.integers(bounds[0], bounds[1] + 1))


def generate(config: GenConfig) -> Instance:
    """Sample one instance uniformly within the config ranges.

    Deterministic given the seed.  Rejection resampling enforces the
    22-job cap, a horizon large enough for a feasible schedule, and
    A1 pickups that fit the AGV fleet.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    for _ in range(_MAX_ATTEMPTS):
        n_a = _draw(rng, config.n_a)
        n_b = _draw(rng, config.n_b)
        if n_a + n_b > MAX_TOTAL_JOBS:
            continue
        num_agvs = _draw(rng, config.num_agvs)
        a_jobs = tuple(
            (_draw(rng, config.p_a1), _draw(rng, config.p_a2)) for _ in range(n_a)
        )
        b_jobs = tuple(
            (_draw(rng, config.p_b1), _draw(rng, config.p_b2), _draw(rng, config.p_b3))
            for _ in range(n_b)
        )
        probe = Instance(
            delta=config.delta,
            num_agvs=num_agvs,
            horizon=1,
            a_jobs=a_jobs,
            b_jobs=b_jobs,
        )
        bound = trivial_makespan(probe)
        if config.horizon_policy == "fixed":
            horizon = config.horizon_value
            if horizon < bound:
                continue
        else:
            horizon = max(bound, 1)
        instance = Instance(
            delta=config.delta,
            num_agvs=num_agvs,
            horizon=horizon,
            a_jobs=a_jobs,
            b_jobs=b_jobs,
        )
        if not _a1_pickups_schedulable(instance):
            continue
        return instance
    raise ValueError(
        "could not sample a feasible instance within "
        f"{_MAX_ATTEMPTS} attempts; widen the config ranges"
    )


_INSTANCE_FIELDS = ("a_jobs", "b_jobs", "delta", "horizon", "num_agvs")


def write_instance(instance: Instance) -> str:
    """Canonical JSON document for an instance (sorted keys, no optionals)."""
    doc = {
        "a_jobs": [list(j) for j in instance.a_jobs],
        "b_jobs": [list(j) for j in instance.b_jobs],
        "delta": instance.delta,
        "horizon": instance.horizon,
        "num_agvs": instance.num_agvs,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _require_positive_int(value: object, name: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise InstanceFormatError(f"field {name!r} must be a positive integer")
    return value


def read_instance(text: str) -> Instance:
    """Parse an instance document; strict about fields and value ranges."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError("document must be a JSON object")
    unknown = sorted(set(doc) - set(_INSTANCE_FIELDS))
    if unknown:
        raise InstanceFormatError(f"unexpected field {unknown[0]!r}")
    missing = sorted(set(_INSTANCE_FIELDS) - set(doc))
    if missing:
        raise InstanceFormatError(f"missing field {missing[0]!r}")
    delta = _require_positive_int(doc["delta"], "delta")
    num_agvs = _require_positive_int(doc["num_agvs"], "num_agvs")
    horizon = _require_positive_int(doc["horizon"], "horizon")
    for name, width in (("a_jobs", 2), ("b_jobs", 3)):
        jobs = doc[name]
        if not isinstance(jobs, list):
            raise InstanceFormatError(f"field {name!r} must be a list")
        for entry in jobs:
            if not isinstance(entry, list) or len(entry) != width:
                raise InstanceFormatError(
                    f"field {name!r} entries must be lists of {width} durations"
                )
            for p in entry:
                _require_positive_int(p, name)
    return Instance(
        delta=delta,
        num_agvs=num_agvs,
        horizon=horizon,
        a_jobs=tuple(tuple(j) for j in doc["a_jobs"]),
        b_jobs=tuple(tuple(j) for j in doc["b_jobs"]),
    )
