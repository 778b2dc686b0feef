"""Verification reports: named checks with residuals, rendered deterministically."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

PASS, FAIL, SKIP, INFO = "pass", "fail", "skip", "info"


def _round(r: float) -> float:
    # values below 1e-12 are rounding noise; hiding them keeps output byte-stable
    if r is None:
        return 0.0
    r = float(r)
    if r != r:
        return r
    if abs(r) < 1e-12:
        return 0.0
    return float(f"{r:.3g}")


@dataclass
class Check:
    name: str
    anchor: str  # the property being checked, written as a formula
    status: str
    max_residual: float = 0.0
    dims: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self):
        d = {"name": self.name, "anchor": self.anchor, "status": self.status,
             "max_residual": _round(self.max_residual), "dims": dict(sorted(self.dims.items()))}
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class Report:
    title: str = ""
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, name, anchor, residual, tol, dims=None, note=""):
        """Record a residual-type check: pass iff residual <= tol."""
        status = PASS if residual <= tol else FAIL
        c = Check(name, anchor, status, residual, dims or {}, note)
        self.checks.append(c)
        return c

    def add_flag(self, name, anchor, ok, residual=0.0, dims=None, note=""):
        c = Check(name, anchor, PASS if ok else FAIL, residual, dims or {}, note)
        self.checks.append(c)
        return c

    def info(self, name, anchor, residual=0.0, dims=None, note=""):
        """Record a measured value that is reported but never asserted."""
        c = Check(name, anchor, INFO, residual, dims or {}, note)
        self.checks.append(c)
        return c

    def skip(self, name, anchor, note=""):
        c = Check(name, anchor, SKIP, 0.0, {}, note)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = ""):
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.anchor, c.status, c.max_residual,
                                     dict(c.dims), c.note))
        return self

    @property
    def passed(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    @property
    def status(self) -> str:
        return PASS if self.passed else FAIL

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def max_residual(self) -> float:
        return max((c.max_residual for c in self.checks if c.status in (PASS, FAIL)), default=0.0)

    def to_dict(self):
        return {"title": self.title, "status": self.status,
                "checks": [c.to_dict() for c in self.checks],
                "data": self.data}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def render(self) -> str:
        lines = [f"== {self.title}" if self.title else "== report"]
        for c in self.checks:
            res = _round(c.max_residual)
            dims = " ".join(f"{k}={v}" for k, v in sorted(c.dims.items()))
            line = f"[{c.status.upper():4s}] {c.name}: residual={res:.3g}"
            if dims:
                line += f" ({dims})"
            if c.note:
                line += f" - {c.note}"
            lines.append(line)
        lines.append(f"overall: {self.status.upper()}")
        return "\n".join(lines)
