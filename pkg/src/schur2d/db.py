"""Append-only JSON-lines store of certified results.

Every record is re-verified when loaded: an exact value ``v`` must come with
a valid coloring of length ``v - 1``; a lower bound ``v`` with a valid
coloring of length ``v``.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

from .core import Coloring, Enumeration, StructuralError, is_valid_coloring
from .solver import SchurNumberResult


class DbError(ValueError):
    """A line of the database cannot be parsed."""


class IntegrityError(ValueError):
    """A stored certificate does not re-verify."""


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


@dataclass
class ResultRecord:
    r: int
    k: int
    enumeration: object  # descriptor as in coloring files
    status: str          # "exact" | "lower_bound"
    value: int
    certificate: Optional[list]
    engine: str = "native"
    stats: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=utc_now)

    @classmethod
    def from_result(cls, res: SchurNumberResult, engine: str = "native") -> "ResultRecord":
        cert = list(res.certificate.colors) if res.certificate is not None else None
        return cls(res.r, res.k, res.enumeration.describe(), res.status, res.value, cert,
                   engine, res.stats.as_dict())

    @property
    def key(self) -> tuple:
        return self.r, self.k, json.dumps(self.enumeration, sort_keys=True)

    def verify(self) -> bool:
        if self.status not in ("exact", "lower_bound") or self.certificate is None:
            return False
        length = self.value - 1 if self.status == "exact" else self.value
        if len(self.certificate) != length:
            return False
        try:
            prefix = Enumeration.from_descriptor(self.enumeration).prefix(length)
            coloring = Coloring(self.r, tuple(self.certificate))
        except StructuralError:
            return False
        return is_valid_coloring(prefix, coloring, self.k)


def append_db(path, record: ResultRecord) -> None:
    line = json.dumps(asdict(record), sort_keys=True) + "\n"
    # a single O_APPEND write keeps each record whole
    fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
    try:
        os.write(fd, line.encode("utf-8"))
    finally:
        os.close(fd)


def load_db(path, verify: bool = True) -> list:
    if not os.path.exists(path):
        return []
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = ResultRecord(**json.loads(line))
            except (json.JSONDecodeError, TypeError) as exc:
                raise DbError(f"{path}:{lineno}: malformed record ({exc})") from exc
            if verify and not rec.verify():
                raise IntegrityError(f"{path}:{lineno}: certificate for S({rec.r},{rec.k}) does not verify")
            records.append(rec)
    return records


def check_consistency(records: list) -> list:
    """Human-readable conflicts between records for the same key."""
    exact, problems = {}, []
    for rec in records:
        if rec.status == "exact":
            old = exact.setdefault(rec.key, rec.value)
            if old != rec.value:
                problems.append(f"S({rec.r},{rec.k}): conflicting exact values {old} and {rec.value}")
    for rec in records:
        # a lower bound v certifies a valid coloring of length v, so S > v
        if rec.status == "lower_bound" and rec.key in exact and rec.value >= exact[rec.key]:
            problems.append(f"S({rec.r},{rec.k}): lower bound {rec.value} contradicts exact {exact[rec.key]}")
    return problems


def best_known(records: list) -> dict:
    """``(r, k) -> value`` of exact natural-enumeration records."""
    return {(rec.r, rec.k): rec.value for rec in records
            if rec.status == "exact" and rec.enumeration == "natural"}
