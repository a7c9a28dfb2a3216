from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EvolutionTrace:
    """Per-step columns (``p_full``, ``p_reduced``, ...) sharing one step axis."""

    steps: np.ndarray
    columns: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.steps = np.asarray(self.steps, dtype=int)
        if self.steps.ndim != 1 or np.any(np.diff(self.steps) <= 0):
            raise ValueError("steps must be a strictly increasing 1-d sequence")
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            if col.shape != self.steps.shape:
                raise ValueError(
                    f"column {name!r} has shape {col.shape}, expected {self.steps.shape}"
                )
            self.columns[name] = col

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def p_suc(self) -> np.ndarray:
        """The first probability column."""
        return next(iter(self.columns.values()))

    def merge(self, other: "EvolutionTrace") -> "EvolutionTrace":
        if not np.array_equal(self.steps, other.steps):
            raise ValueError("cannot merge traces with different step axes")
        return EvolutionTrace(
            self.steps.copy(),
            {**self.columns, **other.columns},
            {**self.meta, **other.meta},
        )
