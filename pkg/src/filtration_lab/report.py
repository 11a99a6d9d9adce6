"""Verification reports: one record per claim, in the order claims were checked."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass
class Claim:
    claim: str
    verdict: bool
    evidence: dict = field(default_factory=dict)
    witness: dict | None = None
    note: str = ""
    informational: bool = False

    def to_dict(self) -> dict:
        out = {"claim": self.claim, "verdict": bool(self.verdict)}
        if self.informational:
            out["informational"] = True
        out["evidence"] = plain(self.evidence)
        if self.witness is not None:
            out["witness"] = plain(self.witness)
        if self.note:
            out["note"] = self.note
        return out


class VerificationReport:
    def __init__(self, task: str):
        self.task = task
        self.claims: list[Claim] = []

    def add(self, claim: str, verdict: bool, *, witness=None, note: str = "", informational: bool = False, **evidence) -> Claim:
        if any(c.claim == claim for c in self.claims):
            raise ValueError(f"claim {claim!r} recorded twice")
        c = Claim(claim, bool(verdict), evidence, witness, note, informational)
        self.claims.append(c)
        return c

    @property
    def ok(self) -> bool:
        return all(c.verdict for c in self.claims if not c.informational)

    def __getitem__(self, claim: str) -> Claim:
        for c in self.claims:
            if c.claim == claim:
                return c
        raise KeyError(claim)

    def __contains__(self, claim: str) -> bool:
        return any(c.claim == claim for c in self.claims)

    def to_dict(self) -> dict:
        return {"task": self.task, "verdict": self.ok, "claims": [c.to_dict() for c in self.claims]}

    def __repr__(self) -> str:
        marks = ", ".join(f"{c.claim}={'ok' if c.verdict else 'FAIL'}" for c in self.claims)
        return f"VerificationReport({self.task}: {marks})"


def plain(obj):
    """Convert numbers/arrays/tuples into JSON-ready values; rationals become "p/q"."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return float(repr(x))
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)
