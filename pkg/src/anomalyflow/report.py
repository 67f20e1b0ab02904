"""Named residuals with tolerances."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Residual:
    name: str
    value: float
    tol: float
    where: tuple | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        loc = f" at {self.where}" if self.where is not None else ""
        note = f"  ({self.note})" if self.note else ""
        return f"{status}  {self.name:<40s} {self.value:.3e}  tol {self.tol:.0e}{loc}{note}"


@dataclass
class ResidualReport:
    """Ordered collection of named max-norm residuals."""

    entries: dict[str, Residual] = field(default_factory=dict)

    def add(self, name: str, values, tol: float, note: str = "") -> Residual:
        arr = np.abs(np.asarray(values))
        if arr.size == 0:
            r = Residual(name, 0.0, tol, None, note)
        else:
            flat = int(np.argmax(arr))
            where = np.unravel_index(flat, arr.shape) if arr.ndim else None
            r = Residual(name, float(arr.reshape(-1)[flat]), tol,
                         tuple(int(i) for i in where) if where is not None else None, note)
        self.entries[name] = r
        return r

    def merge(self, other: "ResidualReport", prefix: str = "") -> "ResidualReport":
        for k, v in other.entries.items():
            self.entries[prefix + k] = Residual(prefix + k, v.value, v.tol, v.where, v.note)
        return self

    def __getitem__(self, name: str) -> float:
        return self.entries[name].value

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.entries.values())

    def failures(self) -> list[str]:
        return [k for k, r in self.entries.items() if not r.passed]

    def lines(self) -> list[str]:
        return [r.line() for r in self.entries.values()]

    def __str__(self) -> str:
        return "\n".join(self.lines())
