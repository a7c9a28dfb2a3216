"""Experiment configuration and deterministic CSV / JSON output."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .trace import EvolutionTrace

COMMANDS = ("simulate", "compare", "spectrum", "scaling", "walk")
TRACE_COLUMNS = ("p_full", "p_reduced", "p_analytic", "p_walk", "p_mc", "stderr")
SCALING_COLUMNS = ("N", "k", "p", "q", "kind", "mode", "m_used", "mbar")
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


class NumericalError(ArithmeticError):
    """Non-finite output or failed numerical routine."""


@dataclass
class ExperimentConfig:
    command: str
    n: int | None = None
    k: int = 0
    kind: str = "coupled"
    p: float = 0.0
    q: float = 0.0
    target_noisy: bool = False
    steps: int = 100
    grid: str = "2^6..2^16"
    mu: float | None = None
    mode: str = "fixed_m0"
    scan_factor: float = 4.0
    a: float = 1.0
    shots: int = 1000
    seed: int = 0
    workers: int = 1
    out: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        if "command" not in data:
            raise ConfigError("missing required key: command")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"command: expected one of {COMMANDS}, got {self.command!r}")
        if self.kind not in ("coupled", "decoupled"):
            raise ConfigError(f"kind: expected 'coupled' or 'decoupled', got {self.kind!r}")
        for name in ("p", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}: rate must lie in [0, 1], got {v!r}")
        if self.command == "scaling":
            parse_grid(self.grid)
            if self.mode not in ("fixed_m0", "minimized"):
                raise ConfigError(f"mode: expected 'fixed_m0' or 'minimized', got {self.mode!r}")
            if self.mu is not None and not 0.0 <= self.mu <= 1.0:
                raise ConfigError(f"mu: expected a value in [0, 1], got {self.mu!r}")
            if self.scan_factor < 1:
                raise ConfigError(f"scan_factor: must be >= 1, got {self.scan_factor!r}")
            return
        if self.n is None:
            raise ConfigError(f"n: required for command {self.command!r}")
        if not isinstance(self.n, int) or self.n < 4:
            raise ConfigError(f"n: expected an integer >= 4, got {self.n!r}")
        if not isinstance(self.k, int) or not 0 <= self.k <= self.n - 1:
            raise ConfigError(f"k: expected an integer in [0, {self.n - 1}], got {self.k!r}")
        if not isinstance(self.steps, int) or self.steps < 0:
            raise ConfigError(f"steps: expected a non-negative integer, got {self.steps!r}")
        if self.command in ("simulate", "compare") and self.q > 0 and self.k > 0 and self.p != self.q:
            raise ConfigError(
                "q: simulate/compare use one rate for every noisy element; "
                f"q={self.q} must equal p={self.p} when k > 0"
            )
        if self.command == "walk":
            if self.k > self.n - 1:
                raise ConfigError(f"k: at most {self.n - 1} faulty spokes")
            if not 0 < self.a <= math.pi:
                raise ConfigError(f"a: phase half-width must lie in (0, pi], got {self.a!r}")
            if not isinstance(self.shots, int) or self.shots < 0:
                raise ConfigError(f"shots: expected a non-negative integer, got {self.shots!r}")


def parse_grid(text: str) -> list[int]:
    """``"2^6..2^16"`` (every integer exponent) or ``"64,128,256"``."""
    text = str(text).replace(" ", "")
    m = re.fullmatch(r"(\d+)\^(\d+)\.\.(\d+)\^(\d+)", text)
    if m:
        b1, e1, b2, e2 = map(int, m.groups())
        if b1 != b2 or b1 < 2 or e1 > e2:
            raise ConfigError(f"grid: malformed range {text!r}")
        values = [b1**e for e in range(e1, e2 + 1)]
    else:
        try:
            values = [int(v) for v in text.split(",") if v]
        except ValueError:
            raise ConfigError(f"grid: expected 'B^a..B^b' or a comma list, got {text!r}") from None
    if not values or min(values) < 4:
        raise ConfigError(f"grid: needs values >= 4, got {text!r}")
    return values


def format_value(v) -> str:
    """Shortest round-trip text for floats; NaN/inf are rejected."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            raise NumericalError(f"refusing to write non-finite value {v}")
        return repr(v)
    return str(v)


def _write_rows(path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    """``path`` may also be an open text stream."""
    # Format everything first so a bad value leaves no partial file behind.
    lines = [list(header)] + [[format_value(v) for v in row] for row in rows]
    if hasattr(path, "write"):
        csv.writer(path, lineterminator="\n").writerows(lines)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(lines)


def trace_header(trace: EvolutionTrace) -> list[str]:
    names = [c for c in TRACE_COLUMNS if c in trace.columns]
    names += sorted(c for c in trace.columns if c not in TRACE_COLUMNS)
    return ["m", *names]


def write_csv(trace: EvolutionTrace, path) -> None:
    header = trace_header(trace)
    cols = [trace.columns[c] for c in header[1:]]
    for name, col in zip(header[1:], cols):
        if not np.all(np.isfinite(col)):
            raise NumericalError(f"column {name!r} contains non-finite values")
    rows = ([m, *(c[i] for c in cols)] for i, m in enumerate(trace.steps))
    _write_rows(path, header, rows)


def write_scaling_csv(records, path) -> None:
    rows = (
        [r.n_elements, r.noisy_count, r.p, r.q, r.kind, r.mode.value, r.m_used, r.mbar]
        for r in records
        if r.error is None
    )
    _write_rows(path, SCALING_COLUMNS, rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise NumericalError(f"refusing to write non-finite value {v}")
        return v
    if hasattr(obj, "value") and not isinstance(obj, (str, int)):
        return obj.value
    return obj


def write_json(payload: dict, path) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def provenance(config: ExperimentConfig, **extra) -> dict:
    return {
        "artifact": "grover_dephasing",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        **extra,
    }
