"""Verification records shared by every check."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field


def _fmt_resolution(resolution) -> str:
    if resolution is None:
        return "exact"
    if isinstance(resolution, str):
        return resolution
    try:
        return "x".join(str(int(n)) for n in resolution)
    except TypeError:
        return str(resolution)


@dataclass(frozen=True)
class CheckReport:
    """One inequality/identity verification record.

    ``passed`` always equals ``lhs <= rhs + tolerance`` (the attribute is not
    called ``pass`` because that is a Python keyword; the serialized key is
    ``"pass"``).  The slack ``rhs - lhs`` is recorded even on failure.
    """

    name: str
    lhs: float
    rhs: float
    slack: float
    resolution: str
    tolerance: float
    passed: bool
    notes: str = ""
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_sides(
        cls,
        name: str,
        lhs: float,
        rhs: float,
        tolerance: float,
        resolution=None,
        notes: str = "",
        **extra,
    ) -> "CheckReport":
        lhs = float(lhs)
        rhs = float(rhs)
        return cls(
            name=name,
            lhs=lhs,
            rhs=rhs,
            slack=rhs - lhs,
            resolution=_fmt_resolution(resolution),
            tolerance=float(tolerance),
            passed=bool(lhs <= rhs + tolerance),
            notes=notes,
            extra={k: v for k, v in extra.items()},
        )

    def to_json_dict(self, hexfloat: bool = True) -> dict:
        def num(x: float):
            return float(x).hex() if hexfloat else float(x)

        doc = {
            "name": self.name,
            "lhs": num(self.lhs),
            "rhs": num(self.rhs),
            "slack": num(self.slack),
            "resolution": self.resolution,
            "tolerance": num(self.tolerance),
            "pass": self.passed,
            "notes": self.notes,
        }
        if self.extra:
            doc["extra"] = {
                k: (num(v) if isinstance(v, float) else v) for k, v in self.extra.items()
            }
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CheckReport":
        def num(x):
            return float.fromhex(x) if isinstance(x, str) else float(x)

        extra = {
            k: (float.fromhex(v) if isinstance(v, str) and v.startswith(("0x", "-0x")) else v)
            for k, v in doc.get("extra", {}).items()
        }
        return cls(
            name=doc["name"],
            lhs=num(doc["lhs"]),
            rhs=num(doc["rhs"]),
            slack=num(doc["slack"]),
            resolution=doc["resolution"],
            tolerance=num(doc["tolerance"]),
            passed=bool(doc["pass"]),
            notes=doc.get("notes", ""),
            extra=extra,
        )


CSV_COLUMNS = ["name", "lhs", "rhs", "slack", "pass", "resolution", "tolerance"]


def reports_to_json(reports, hexfloat: bool = True) -> str:
    return json.dumps([r.to_json_dict(hexfloat=hexfloat) for r in reports], indent=2)


def reports_from_json(text: str) -> list[CheckReport]:
    return [CheckReport.from_json_dict(doc) for doc in json.loads(text)]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(
            [
                r.name,
                repr(r.lhs),
                repr(r.rhs),
                repr(r.slack),
                r.passed,
                r.resolution,
                repr(r.tolerance),
            ]
        )
    return buf.getvalue()
