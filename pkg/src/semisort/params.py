"""Tuning parameters for the bucketing recursion.

Defaults follow the reference configuration: 2^10 light buckets, subarray
length n/5000 (at most 5000 subarrays per recursion level), base-case
cutoff 2^14, at most 500 heavy keys, and 500*log2(n) samples. The subarray
length and light-bucket count are fixed once from the top-level input size
and shared by every recursion level.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from .errors import ConfigurationError

DEFAULT_LIGHT_BUCKETS = 1 << 10
DEFAULT_BASE_CASE_CUTOFF = 1 << 14
DEFAULT_MAX_HEAVY = 500
DEFAULT_SAMPLE_FACTOR = 500
DEFAULT_SUBARRAY_DIVISOR = 5000
DEFAULT_SEED = 1

#: Environment variable overrides honored by :meth:`TuningParams.from_env`.
ENV_OVERRIDES = {
    "SEMISORT_LIGHT_BUCKETS": "light_buckets",
    "SEMISORT_SUBARRAY_LEN": "subarray_len",
    "SEMISORT_BASE_CASE_CUTOFF": "base_case_cutoff",
    "SEMISORT_MAX_HEAVY": "max_heavy",
    "SEMISORT_SAMPLE_FACTOR": "sample_factor",
    "SEMISORT_SEED": "seed",
}


@dataclass(frozen=True)
class TuningParams:
    input_size: int
    light_buckets: int
    light_bits: int
    subarray_len: int
    base_case_cutoff: int
    max_heavy: int
    sample_factor: int
    seed: int
    sample_count: int
    heavy_threshold: float

    def __post_init__(self):
        nl = self.light_buckets
        if nl < 1 or nl & (nl - 1):
            raise ConfigurationError(f"light_buckets must be a power of two, got {nl}")
        if nl != 1 << self.light_bits:
            raise ConfigurationError("light_bits inconsistent with light_buckets")
        if self.subarray_len < nl:
            raise ConfigurationError(
                f"subarray_len {self.subarray_len} smaller than light_buckets {nl}"
            )
        if self.base_case_cutoff < 1:
            raise ConfigurationError("base_case_cutoff must be >= 1")
        if self.max_heavy < 0:
            raise ConfigurationError("max_heavy must be >= 0")

    @classmethod
    def for_input(
        cls,
        n: int,
        *,
        light_buckets: int = DEFAULT_LIGHT_BUCKETS,
        subarray_len: int | None = None,
        base_case_cutoff: int = DEFAULT_BASE_CASE_CUTOFF,
        max_heavy: int = DEFAULT_MAX_HEAVY,
        sample_factor: int = DEFAULT_SAMPLE_FACTOR,
        seed: int = DEFAULT_SEED,
    ) -> "TuningParams":
        """Derive parameters for a top-level input of ``n`` records.

        The default subarray length is ceil(n / 5000) with a floor of 1,
        raised to ``light_buckets`` so the counting matrix stays O(n); an
        explicitly supplied value below ``light_buckets`` is rejected.
        """
        if n < 0:
            raise ConfigurationError("input size must be >= 0")
        if light_buckets < 1 or light_buckets & (light_buckets - 1):
            raise ConfigurationError(
                f"light_buckets must be a power of two, got {light_buckets}"
            )
        if subarray_len is None:
            derived = max(1, -(-n // DEFAULT_SUBARRAY_DIVISOR))
            subarray_len = max(derived, light_buckets)
        log_n = math.log2(max(n, 2))
        return cls(
            input_size=n,
            light_buckets=light_buckets,
            light_bits=light_buckets.bit_length() - 1,
            subarray_len=subarray_len,
            base_case_cutoff=base_case_cutoff,
            max_heavy=max_heavy,
            sample_factor=sample_factor,
            seed=seed,
            sample_count=max(1, round(sample_factor * log_n)),
            heavy_threshold=log_n,
        )

    @classmethod
    def from_env(cls, n: int, env=None, **overrides) -> "TuningParams":
        """Like :meth:`for_input` but honoring SEMISORT_* environment overrides."""
        env = os.environ if env is None else env
        for var, field_name in ENV_OVERRIDES.items():
            if field_name not in overrides and var in env:
                try:
                    overrides[field_name] = int(env[var])
                except ValueError as exc:
                    raise ConfigurationError(f"{var} must be an integer") from exc
        return cls.for_input(n, **overrides)

    def num_subarrays(self, n: int) -> int:
        return -(-n // self.subarray_len)

    @property
    def rounds_per_hash(self) -> int:
        """Recursion levels served by one 64-bit hash before remixing."""
        return max(1, 64 // max(self.light_bits, 1))
