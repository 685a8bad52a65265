"""Fixed-priority response time analysis and the utilization bound test."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional

from .taskset import AnalysisTaskSet, assign_rm_priorities, check_taskset, priority_order

BOUND_EPSILON = 1e-9


def utilization_bound(n: int) -> float:
    """Least upper bound n(2^(1/n) - 1) for rate-monotonic scheduling of n tasks."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return n * math.expm1(math.log(2) / n)


def utilization(ts: AnalysisTaskSet) -> Fraction:
    return sum((Fraction(t.wcet, t.period) for t in ts.tasks), Fraction(0))


def bound_verdict(ts: AnalysisTaskSet) -> str:
    """'schedulable' when utilization is safely under the bound, else 'inconclusive'."""
    check_taskset(ts)
    if not ts.tasks:
        return "schedulable"
    if float(utilization(ts)) <= utilization_bound(len(ts.tasks)) - BOUND_EPSILON:
        return "schedulable"
    return "inconclusive"


@dataclass
class RtaResult:
    platform: str
    responses: Dict[str, Optional[int]] = field(default_factory=dict)
    priorities: Dict[str, int] = field(default_factory=dict)
    rm_assigned: bool = False

    @property
    def schedulable(self):
        return all(r is not None for r in self.responses.values())

    def unbounded(self):
        return sorted(n for n, r in self.responses.items() if r is None)


def rta(ts: AnalysisTaskSet) -> RtaResult:
    """Exact worst-case response times for implicit-deadline periodic tasks.

    R = C + sum over higher priority tasks of ceil(R / T_j) * C_j, iterated
    from the sum of the wcets to a fixed point; a task whose iterate passes
    its period is unbounded (None). Tasks without priorities get
    rate-monotonic ones for the whole set.
    """
    check_taskset(ts)
    rm = not ts.prioritized
    ts = assign_rm_priorities(ts)
    order = priority_order(ts)
    result = RtaResult(ts.platform, priorities={t.name: t.priority for t in ts.tasks}, rm_assigned=rm and bool(ts.tasks))
    for i, task in enumerate(order):
        hp = order[:i]
        r = task.wcet + sum(t.wcet for t in hp)
        while True:
            if r > task.period:
                r = None
                break
            nxt = task.wcet + sum(-(-r // t.period) * t.wcet for t in hp)
            if nxt == r:
                break
            r = nxt
        result.responses[task.name] = r
    return result
