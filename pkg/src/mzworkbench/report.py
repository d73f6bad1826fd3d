"""Machine-readable verification reports.

A report is a flat list of named checks, each carrying the mathematical
claim it certifies, the measured value, the tolerance in force and the
verdict.  Reports double as a traceability matrix: the claim strings name
the identities being exercised.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckRecord:
    name: str
    claim: str
    measured: float
    tolerance: float | None
    passed: bool

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "claim": self.claim,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass
class Tolerances:
    """Named tolerance table with --strict halving and per-name overrides."""

    defaults: dict
    strict: bool = False
    overrides: dict = field(default_factory=dict)

    def get(self, name: str) -> float:
        if name in self.overrides:
            return float(self.overrides[name])
        value = float(self.defaults[name])
        return value / 2.0 if self.strict else value


@dataclass
class VerificationReport:
    title: str
    config: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add(self, name: str, claim: str, measured: float, tolerance: float) -> CheckRecord:
        record = CheckRecord(
            name=name,
            claim=claim,
            measured=float(measured),
            tolerance=float(tolerance),
            passed=bool(measured <= tolerance),
        )
        self.checks.append(record)
        return record

    def add_flag(self, name: str, claim: str, passed: bool, measured: float = 0.0) -> CheckRecord:
        """A boolean check with no numeric tolerance."""
        record = CheckRecord(
            name=name, claim=claim, measured=float(measured), tolerance=None,
            passed=bool(passed),
        )
        self.checks.append(record)
        return record

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_payload(self) -> dict:
        payload = {
            "title": self.title,
            "config": self.config,
            "checks": [c.to_payload() for c in self.checks],
            "summary": {
                "total": len(self.checks),
                "passed": sum(c.passed for c in self.checks),
                "failed": len(self.failures),
                "overall_pass": self.passed,
            },
        }
        payload.update(self.extra)
        return payload

    def format_lines(self) -> list:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            tol = "-" if c.tolerance is None else f"{c.tolerance:.6e}"
            lines.append(f"[{status}] {c.name}: measured {c.measured:.6e}"
                         f" tolerance {tol} ({c.claim})")
        lines.append(
            f"{self.title}: {sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed"
        )
        return lines
