"""Arrival sequences: the adversarial constructions and seeded random ones.

Random instances draw from numpy's ``default_rng(seed)``, which is the PCG64
bit generator (numpy >= 1.17). Coefficients come from ``rng.uniform(lo, hi,
size=(T, D))`` in row-major order, so a fixed seed gives the same instance on
every platform numpy supports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cost_model import CostFunction, Valuation
from .offline import Instance


def gen_adversarial_scalar(T: int) -> Instance:
    """One resource, linear valuations ``c_t = 2t``; T must be even."""
    if T < 1 or T % 2:
        raise ValueError(f"the scalar construction needs an even positive horizon, got {T}")
    return Instance(tuple(Valuation.linear((2.0 * t,)) for t in range(1, T + 1)))


def gen_adversarial_gradient(f: CostFunction, T: int) -> Instance:
    """Linear valuations priced off the cost's own gradient.

    Odd t gets ``grad f(t * 1)``, even t gets ``grad f(2t * 1)``.
    """
    if T < 1:
        raise ValueError("horizon must be positive")
    ones = np.ones(f.dimension)
    vals = []
    for t in range(1, T + 1):
        point = (t if t % 2 else 2 * t) * ones
        vals.append(Valuation.linear(tuple(f.gradient(point))))
    return Instance(tuple(vals))


def gen_random_linear(T: int, D: int, low: float = 0.0, high: float = 1.0, seed: int = 0) -> Instance:
    """Linear valuations with coefficients uniform on ``[low, high]``."""
    if T < 1 or D < 1:
        raise ValueError("horizon and dimension must be positive")
    if low < 0 or high < low:
        raise ValueError(f"coefficient range must satisfy 0 <= low <= high, got [{low}, {high}]")
    rng = np.random.default_rng(seed)
    C = rng.uniform(low, high, size=(T, D))
    return Instance(tuple(Valuation.linear(tuple(row)) for row in C))


@dataclass(frozen=True)
class GeneratorSpec:
    """Serializable recipe for an instance: ``scalar``, ``gradient`` or ``random``."""

    kind: str
    T: int
    D: int = 1
    low: float = 0.0
    high: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("scalar", "gradient", "random"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.low < 0 or self.high < self.low:
            raise ValueError("generator range must be nonnegative and ordered")

    def build(self, f: CostFunction | None = None) -> Instance:
        if self.kind == "scalar":
            return gen_adversarial_scalar(self.T)
        if self.kind == "gradient":
            if f is None:
                raise ValueError("the gradient construction needs the cost function")
            return gen_adversarial_gradient(f, self.T)
        return gen_random_linear(self.T, self.D, self.low, self.high, self.seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "T": self.T, "D": self.D, "low": self.low, "high": self.high, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        return cls(**data)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(inst.to_json(), encoding="utf-8", newline="\n")


def load_instance(path) -> Instance:
    return Instance.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
