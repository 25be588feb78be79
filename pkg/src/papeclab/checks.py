"""Inequality records with three-way verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass
class Check:
    """One evaluated inequality ``lhs <= rhs``.

    ``rhs`` is the value used for the pass test. ``rhs_loose`` is set when
    the right side is only known within a bracket; a violation is certified
    only against that looser value.
    """

    name: str
    anchor: str
    lhs: float
    rhs: float
    verdict: str
    rhs_loose: float | None = None
    detail: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_json(self) -> dict:
        out = {"name": self.name, "anchor": self.anchor, "lhs": _num(self.lhs),
               "rhs": _num(self.rhs), "margin": _num(self.margin), "verdict": self.verdict}
        if self.rhs_loose is not None:
            out["rhs_loose"] = _num(self.rhs_loose)
        if self.detail:
            out["detail"] = {k: _num(v) if isinstance(v, float) else v
                             for k, v in self.detail.items()}
        return out


def _num(x: float):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def leq(name: str, anchor: str, lhs: float, rhs: float, tol: float, **detail) -> Check:
    verdict = PASS if lhs <= rhs + tol else FAIL
    return Check(name, anchor, float(lhs), float(rhs), verdict, None, detail)


def leq_bracketed(name: str, anchor: str, lhs: float, rhs_sure: float, rhs_loose: float,
                  tol: float, **detail) -> Check:
    """``lhs <= rhs`` where the true rhs lies in ``[rhs_sure, rhs_loose]``."""
    if lhs <= rhs_sure + tol:
        verdict = PASS
    elif lhs > rhs_loose + tol:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return Check(name, anchor, float(lhs), float(rhs_sure), verdict, float(rhs_loose), detail)


def leq_entropy(name: str, anchor: str, lhs: float, bound: Callable[[float], float],
                h_lower: float, h_upper: float, tol: float, **detail) -> Check:
    """``lhs <= bound(H)`` for decreasing ``bound`` and ``H`` in a bracket."""
    return leq_bracketed(name, anchor, lhs, bound(h_upper), bound(h_lower), tol,
                         h_lower=h_lower, h_upper=h_upper, **detail)


def geq_entropy(name: str, anchor: str, h_lower: float, h_upper: float, target: float,
                tol: float, **detail) -> Check:
    """``H >= target`` for ``H`` known only within a bracket."""
    if h_lower >= target - tol:
        verdict = PASS
    elif h_upper < target - tol:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return Check(name, anchor, float(target), float(h_lower), verdict, float(h_upper),
                 dict(detail, h_lower=h_lower, h_upper=h_upper))


def summarize(checks: Iterable[Check]) -> dict:
    out = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
    for c in checks:
        out[c.verdict] += 1
    return out


def failures(checks: Iterable[Check]) -> list[Check]:
    return [c for c in checks if c.verdict == FAIL]
