"""Run configuration and the key-value config-file format.

Config files are plain text: one `key = value` pair per line, `#` starts
a comment.  Unknown keys are rejected so typos surface immediately.
`scenarios` is a comma-separated list of verify scenario names.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

from .errors import DomainError


@dataclass
class RunConfig:
    precision_bits: int = 256
    cache_dir: str | None = None
    k_min: int = 12
    k_max: int = 120
    t: float = 1.0
    delta: float = 0.1
    epsilon: float = 1.0 / (4 * math.pi)
    a: float = 0.0
    b: float = 0.25
    t2: float = float("inf")
    p: int = 2
    output_format: str = "json"
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    y_split: float = 2.0
    quad_tol: float = 1e-8
    scenarios: list = field(default_factory=lambda: ["vertical"])
    out_dir: str = "."
    timing: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.precision_bits < 128:
            raise DomainError("precision_bits must be >= 128")
        if self.k_min % 2 or self.k_max % 2 or self.k_min < 12:
            raise DomainError("weight grid must be even and start at >= 12")
        if self.k_min > self.k_max:
            raise DomainError("k_min must not exceed k_max")
        if self.output_format not in ("json", "csv"):
            raise DomainError("output format must be json or csv")
        if self.jobs < 1:
            raise DomainError("jobs must be >= 1")

    def resolved_cache_dir(self) -> str:
        if self.cache_dir:
            return self.cache_dir
        return os.environ.get(
            "QUELAB_CACHE_DIR", os.path.join(".", ".quelab_cache")
        )


_INT_KEYS = {"precision_bits", "k_min", "k_max", "jobs", "p"}
_FLOAT_KEYS = {"t", "delta", "epsilon", "a", "b", "t2", "y_split", "quad_tol"}
_BOOL_KEYS = {"timing"}


def parse_config_file(path: str) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    values: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in known:
                raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _BOOL_KEYS:
                values[key] = val.lower() in ("1", "true", "yes", "on")
            elif key == "scenarios":
                values[key] = [s.strip() for s in val.split(",") if s.strip()]
            else:
                values[key] = val
    return RunConfig(**values)
