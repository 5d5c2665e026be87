"""Run configuration: grid parsing, JSON config files, flag precedence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from pbsp_sim.common.config import Config
from pbsp_sim.common.errors import UsageError

FORMATS = ("csv", "json")

# Keys a --config file may set; each mirrors a long flag.
FILE_KEYS = ("d", "N", "eps", "trials", "seed", "dense_budget", "format", "out", "workers")


# ─── Grid parsing ───────────────────────────────────────────────────────────

def _parse_int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise UsageError(f"Invalid {what} value '{token}' (expected an integer)") from None


def parse_int_grid(value: Any, what: str = "grid") -> tuple[int, ...]:
    """Integers from 3, [1, 2], "1,2,3", "1..4" or "1..3,5"; sorted, duplicates dropped."""
    if isinstance(value, bool):
        raise UsageError(f"Invalid {what} value {value!r}")
    if isinstance(value, int):
        values = [value]
    elif isinstance(value, (list, tuple)):
        values = []
        for item in value:
            values.extend(parse_int_grid(item, what))
    elif isinstance(value, str):
        values = []
        for token in (t.strip() for t in value.split(",")):
            if not token:
                raise UsageError(f"Empty entry in {what} '{value}'")
            if ".." in token:
                lo_text, _, hi_text = token.partition("..")
                lo, hi = _parse_int(lo_text, what), _parse_int(hi_text, what)
                if lo > hi:
                    raise UsageError(f"Empty range '{token}' in {what}")
                values.extend(range(lo, hi + 1))
            else:
                values.append(_parse_int(token, what))
    else:
        raise UsageError(f"Invalid {what} value {value!r}")
    if not values:
        raise UsageError(f"{what} must not be empty")
    return tuple(sorted(set(values)))


def parse_float_list(value: Any, what: str = "eps") -> tuple[float, ...]:
    """Floats from 0.1, [0.2, 0.1] or "0.2,0.1"; order kept, duplicates dropped."""
    if isinstance(value, bool):
        raise UsageError(f"Invalid {what} value {value!r}")
    if isinstance(value, (int, float)):
        values = [float(value)]
    elif isinstance(value, (list, tuple)):
        values = [v for item in value for v in parse_float_list(item, what)]
    elif isinstance(value, str):
        values = []
        for token in (t.strip() for t in value.split(",")):
            try:
                values.append(float(token))
            except ValueError:
                raise UsageError(f"Invalid {what} value '{token}' (expected a number)") from None
    else:
        raise UsageError(f"Invalid {what} value {value!r}")
    if not values:
        raise UsageError(f"{what} must not be empty")
    return tuple(dict.fromkeys(values))


# ─── Config file ────────────────────────────────────────────────────────────

def load_config_file(path: Optional[str]) -> dict:
    """Read a JSON object of flag values; unknown keys are rejected."""
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"Cannot read config file {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"Config file {path} is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise UsageError(f"Config file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(FILE_KEYS))
    if unknown:
        raise UsageError(f"Unknown config keys: {', '.join(unknown)}")
    return data


# ─── RunConfig ──────────────────────────────────────────────────────────────

@dataclass
class RunConfig:
    command: str
    d_list: tuple[int, ...] = Config.default_d_list
    n_list: tuple[int, ...] = Config.default_n_list
    eps_list: tuple[float, ...] = Config.default_eps_list
    trials: int = Config.default_trials
    seed: int = Config.default_seed
    dense_budget: int = Config.dense_budget
    output_format: str = "csv"
    out: Optional[Path] = None
    workers: int = Config.default_workers
    haar_samples: int = Config.default_haar_samples
    perturb: Optional[float] = field(default=None)

    def __post_init__(self):
        for name in ("d_list", "n_list", "eps_list"):
            if not getattr(self, name):
                raise UsageError(f"{name} must not be empty")
        if any(d < 2 for d in self.d_list):
            raise UsageError(f"Every d must be at least 2, got {list(self.d_list)}")
        if any(n < 1 for n in self.n_list):
            raise UsageError(f"Every N must be at least 1, got {list(self.n_list)}")
        if any(not 0.0 < e < 1.0 for e in self.eps_list):
            raise UsageError(f"Every epsilon must lie in (0, 1), got {list(self.eps_list)}")
        if self.trials < 1:
            raise UsageError(f"trials must be at least 1, got {self.trials}")
        if self.dense_budget < 1:
            raise UsageError(f"dense budget must be positive, got {self.dense_budget}")
        if self.workers < 1:
            raise UsageError(f"workers must be at least 1, got {self.workers}")
        if self.output_format not in FORMATS:
            raise UsageError(f"Unknown format '{self.output_format}' (expected csv or json)")
        if self.seed < 0:
            raise UsageError(f"seed must be non-negative, got {self.seed}")

    def dense_ok(self, entries: int) -> bool:
        return entries <= self.dense_budget


def _int_value(value: Any, what: str) -> int:
    if isinstance(value, bool):
        raise UsageError(f"Invalid {what} value {value!r}")
    if isinstance(value, int):
        return value
    return _parse_int(str(value), what)


def build_run_config(args, command: str) -> RunConfig:
    """Defaults, then --config file values, then command-line flags."""
    merged = load_config_file(getattr(args, "config", None))
    for key in FILE_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value

    kwargs: dict = {"command": command}
    if "d" in merged:
        kwargs["d_list"] = parse_int_grid(merged["d"], "d")
    if "N" in merged:
        kwargs["n_list"] = parse_int_grid(merged["N"], "N")
    if "eps" in merged:
        kwargs["eps_list"] = parse_float_list(merged["eps"], "eps")
    for key, attr in (("trials", "trials"), ("seed", "seed"), ("dense_budget", "dense_budget"),
                      ("workers", "workers")):
        if key in merged:
            kwargs[attr] = _int_value(merged[key], key)
    if "format" in merged:
        kwargs["output_format"] = str(merged["format"])
    if merged.get("out"):
        kwargs["out"] = Path(merged["out"])
    if getattr(args, "perturb", None) is not None:
        kwargs["perturb"] = float(args.perturb)
    return RunConfig(**kwargs)
