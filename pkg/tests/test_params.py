import math

import pytest

from semisort.errors import ConfigurationError
from semisort.params import TuningParams


def test_defaults_follow_reference_configuration():
    params = TuningParams.for_input(10**7)
    assert params.light_buckets == 1024
    assert params.light_bits == 10
    assert params.subarray_len == 2000  # ceil(1e7 / 5000)
    assert params.base_case_cutoff == 2**14
    assert params.max_heavy == 500
    assert params.sample_count == round(500 * math.log2(10**7))
    assert params.heavy_threshold == math.log2(10**7)


def test_default_subarray_len_floors_at_one_then_light_buckets():
    # Tiny inputs: derived ceil(n/5000) = 1, raised to the bucket count.
    params = TuningParams.for_input(100)
    assert params.subarray_len == params.light_buckets
    small = TuningParams.for_input(100, light_buckets=1)
    assert small.subarray_len == 1


def test_default_subarray_len_raised_for_mid_sizes():
    # ceil(1e6/5000) = 200 < 1024 light buckets: construction raises it.
    params = TuningParams.for_input(10**6)
    assert params.subarray_len == 1024


def test_explicit_subarray_len_below_bucket_count_rejected():
    with pytest.raises(ConfigurationError):
        TuningParams.for_input(10**6, subarray_len=200)


def test_light_buckets_must_be_power_of_two():
    with pytest.raises(ConfigurationError):
        TuningParams.for_input(1000, light_buckets=3)


def test_invalid_cutoffs_rejected():
    with pytest.raises(ConfigurationError):
        TuningParams.for_input(1000, base_case_cutoff=0)
    with pytest.raises(ConfigurationError):
        TuningParams.for_input(1000, max_heavy=-1)


def test_env_overrides(monkeypatch):
    env = {"SEMISORT_LIGHT_BUCKETS": "64", "SEMISORT_SEED": "9"}
    params = TuningParams.from_env(10**6, env=env)
    assert params.light_buckets == 64
    assert params.seed == 9
    with pytest.raises(ConfigurationError):
        TuningParams.from_env(10**6, env={"SEMISORT_SEED": "not-an-int"})


def test_num_subarrays_includes_short_tail():
    params = TuningParams.for_input(10**7)  # subarray_len 2000
    assert params.num_subarrays(4001) == 3
    assert params.num_subarrays(4000) == 2
    assert params.num_subarrays(0) == 0


def test_rounds_per_hash():
    assert TuningParams.for_input(10**6).rounds_per_hash == 6  # 64 // 10
    assert TuningParams.for_input(10**6, light_buckets=2).rounds_per_hash == 64
