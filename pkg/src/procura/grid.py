"""Engine variants and the uniform grids their ratio bounds are evaluated on."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Variant(str, Enum):
    """Which online engine a surrogate is designed for.

    SIM is the simultaneous-update engine; SEQ0 and SEQ1 are the posted-price
    engine with offset 0 and offset 1 respectively.
    """

    SIM = "sim"
    SEQ0 = "seq0"
    SEQ1 = "seq1"

    @classmethod
    def parse(cls, value: "Variant | str") -> "Variant":
        if isinstance(value, Variant):
            return value
        return cls(str(value).strip().lower())


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the box ``[0, upper]`` including both corners."""

    upper: tuple[float, ...]
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if any(u < 0 for u in self.upper):
            raise ValueError("grid upper bounds must be nonnegative")
        object.__setattr__(self, "upper", tuple(float(u) for u in self.upper))

    @classmethod
    def for_variant(cls, variant, horizon: int, dimension: int, step: float = 0.1) -> "GridSpec":
        variant = Variant.parse(variant)
        top = horizon - 1 if variant is Variant.SEQ1 else horizon
        return cls(upper=(float(top),) * dimension, step=step)

    @property
    def dimension(self) -> int:
        return len(self.upper)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(int(np.ceil(u / self.step - 1e-9)) + 1 for u in self.upper)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.counts))

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(0.0, u, n) for u, n in zip(self.upper, self.counts)]

    def points(self) -> np.ndarray:
        """All grid points as an (n_points, D) array, last coordinate fastest."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def to_dict(self) -> dict:
        return {"upper": list(self.upper), "step": self.step, "n_points": self.n_points}
