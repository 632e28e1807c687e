"""Numerical tolerances shared by every module."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path


@dataclass(frozen=True)
class Tolerances:
    unitarity_tol: float = 1e-10
    eig_tol: float = 1e-9
    gap_tol: float = 1e-6
    # normality precondition of eig_normal, relative to the operator norm
    normal_tol: float = 1e-8
    # imaginary part of a trace of a skew-Hermitian log that is silently dropped
    imag_tol: float = 1e-12

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"tolerance {f.name} must be positive, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Tolerances":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def load(cls, path: str | Path) -> "Tolerances":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def with_(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT_TOL = Tolerances()
