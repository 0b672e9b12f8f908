from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OperatingPoint:
    """A DC solution.

    ``source_currents`` are the currents each voltage source delivers out of
    its ``+`` terminal (positive for a supply feeding a load).
    ``residual_norm`` is the largest KCL error (A) at the returned point and
    ``last_update`` the largest node-voltage change (V) the final Newton
    step would still have applied.
    """

    node_voltages: dict[str, float]
    source_currents: dict[str, float]
    iterations: int
    residual_norm: float
    converged: bool
    last_update: float = 0.0
    strategy: str = "newton"
    temp_k: float = 300.0
    x: np.ndarray | None = field(default=None, repr=False, compare=False)

    def v(self, node: str) -> float:
        return self.node_voltages[node.lower()]

    def i(self, source: str) -> float:
        key = source.lower()
        for name, val in self.source_currents.items():
            if name.lower() == key:
                return val
        raise KeyError(source)


@dataclass
class Waveform:
    """Samples of named signals against a strictly increasing abscissa.

    Column names are ``v(<node>)`` for node voltages and ``i(<source>)`` for
    source currents (lower case).
    """

    abscissa_name: str
    abscissa: np.ndarray
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.columns = {k.lower(): np.asarray(v, dtype=float) for k, v in self.columns.items()}
        if np.any(np.diff(self.abscissa) <= 0):
            raise ValueError("waveform abscissa must be strictly increasing")
        for name, col in self.columns.items():
            if col.shape != self.abscissa.shape:
                raise ValueError(f"column {name} has {col.shape[0]} samples, expected {self.abscissa.size}")

    def __len__(self):
        return self.abscissa.size

    def __getitem__(self, name: str) -> np.ndarray:
        if name.lower() == self.abscissa_name.lower():
            return self.abscissa
        return self.columns[name.lower()]

    @property
    def names(self) -> list[str]:
        return [self.abscissa_name, *self.columns]
