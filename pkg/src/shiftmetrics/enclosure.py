from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .errors import DomainError

__all__ = ["Enclosure"]


@dataclass(frozen=True)
class Enclosure:
    """Certified interval ``[lo, hi]`` together with how it was obtained."""

    lo: float
    hi: float
    method: str = ""
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise DomainError("enclosure bounds must not be NaN")
        if self.lo > self.hi:
            raise DomainError(f"enclosure with lo={self.lo!r} > hi={self.hi!r}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= value <= self.hi + slack

    @classmethod
    def point(cls, value: float, method: str = "", pad: float = 0.0, **meta) -> "Enclosure":
        return cls(value - pad, value + pad, method, meta)

    def as_dict(self) -> dict[str, Any]:
        out = {"lo": self.lo, "hi": self.hi, "method": self.method}
        out.update(self.meta)
        return out
