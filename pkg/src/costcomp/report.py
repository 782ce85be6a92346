"""Deterministic text reports and CSV rows."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .numbers import fmt_decimal, fmt_fraction


def fmt_param(v) -> str:
    if isinstance(v, Fraction):
        return fmt_fraction(v)
    return str(v)


@dataclass
class Report:
    analysis: str
    scenario: str
    params: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)      # free-form input echo lines
    values: list = field(default_factory=list)      # (label, Fraction)
    witnesses: list = field(default_factory=list)   # text lines
    checks: list = field(default_factory=list)      # (label, bool)

    def value(self, label: str, v) -> "Report":
        self.values.append((label, Fraction(v)))
        return self

    def check(self, label: str, ok: bool) -> "Report":
        self.checks.append((label, bool(ok)))
        return self

    @property
    def failed(self) -> bool:
        return any(not ok for _, ok in self.checks)

    def lookup(self, label: str) -> Fraction:
        for k, v in self.values:
            if k == label:
                return v
        raise KeyError(label)

    def render(self) -> str:
        out = [f"analysis: {self.analysis}", f"scenario: {self.scenario}"]
        if self.params:
            out.append("parameters: " + ", ".join(f"{k}={fmt_param(v)}" for k, v in sorted(self.params.items())))
        out.extend(self.inputs)
        if self.values:
            out.append("values:")
            for label, v in self.values:
                out.append(f"  {label} = {fmt_fraction(v)}  (~{fmt_decimal(v)})")
        if self.witnesses:
            out.append("witnesses:")
            out.extend(f"  {w}" for w in self.witnesses)
        if self.checks:
            out.append("checks:")
            out.extend(f"  {label}: {'pass' if ok else 'FAIL'}" for label, ok in self.checks)
        return "\n".join(out) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["label", "fraction", "decimal"])
        for label, v in self.values:
            w.writerow([label, fmt_fraction(v), fmt_decimal(v)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())
