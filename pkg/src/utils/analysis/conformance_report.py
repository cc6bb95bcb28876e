from dataclasses import dataclass, field

from src.algorithm.probes.fields import Confidence


@dataclass(eq=False)
class CheckRow:
    """
    One conformance check. Rows that are not ``asserted`` are observations: they are reported but
    never fail a run. Noisy probes are never asserted.
    """
    citation: str
    check: str
    passed: bool
    asserted: bool = True
    confidence: Confidence = Confidence.CONVERGED
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "citation": self.citation,
            "check": self.check,
            "passed": self.passed,
            "asserted": self.asserted,
            "confidence": self.confidence.value,
            "detail": self.detail,
        }


class ConformanceReport:
    def __init__(self):
        self.rows: list[CheckRow] = []

    def add(self, citation: str, check: str, passed: bool, asserted: bool = True,
            confidence: Confidence = Confidence.CONVERGED, **detail) -> CheckRow:
        row = CheckRow(citation, check, bool(passed), asserted and confidence is Confidence.CONVERGED,
                       confidence, detail)
        self.rows.append(row)
        return row

    def extend(self, rows: list[CheckRow]):
        self.rows.extend(rows)

    @property
    def failures(self) -> list[CheckRow]:
        return [row for row in self.rows if row.asserted and not row.passed]

    @property
    def noisy(self) -> list[CheckRow]:
        return [row for row in self.rows if row.confidence is Confidence.NOISY]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def format_table(self) -> str:
        if not self.rows:
            return "(no checks)"
        width = max(len(row.citation) for row in self.rows) + 1
        lines = [f"{'citation':<{width}} {'result':<8} {'conf.':<10} check"]
        for row in self.rows:
            result = ("pass" if row.passed else "FAIL") if row.asserted else ("obs" if row.passed else "obs!")
            lines.append(f"{row.citation:<{width}} {result:<8} {row.confidence.value:<10} {row.check}")
        lines.append(f"{len(self.rows)} checks, {len(self.failures)} failed, {len(self.noisy)} noisy")
        return "\n".join(lines)
