"""Acceptance criteria as callable checks (filled in below)."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str = ""
    infos: list = field(default_factory=list)


def run_criteria(only=None, quick=False):
    raise NotImplementedError
