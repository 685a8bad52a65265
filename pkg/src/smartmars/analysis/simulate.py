"""Preemptive fixed-priority schedule simulation over one hyperperiod.

This is a second, independent route to the schedulability verdict: it plays
the synchronous-release schedule job by job instead of solving the
response-time recurrence.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict

from ..errors import HyperperiodTooLarge
from .taskset import AnalysisTaskSet, assign_rm_priorities, check_taskset, priority_order

DEFAULT_HYPERPERIOD_CAP = 10**6


@dataclass
class SimResult:
    hyperperiod: int
    first_miss: Dict[str, int] = field(default_factory=dict)
    worst_response: Dict[str, int] = field(default_factory=dict)
    jobs: int = 0

    @property
    def schedulable(self):
        return not self.first_miss

    def misses(self, name):
        return name in self.first_miss


def hyperperiod(ts):
    return math.lcm(*(t.period for t in ts.tasks)) if ts.tasks else 1


def simulate_hyperperiod(ts: AnalysisTaskSet, cap: int = DEFAULT_HYPERPERIOD_CAP) -> SimResult:
    """Simulate [0, H) with every task released at 0.

    Late jobs keep running (and delay their successors). ``first_miss`` maps
    a task to the deadline of its first job that completed late or was still
    unfinished at the end of the hyperperiod.
    """
    check_taskset(ts)
    ts = assign_rm_priorities(ts)
    h = hyperperiod(ts)
    if h > cap:
        raise HyperperiodTooLarge(h, cap)
    res = SimResult(h)
    if not ts.tasks:
        return res
    order = priority_order(ts)
    n = len(order)
    backlog = [deque() for _ in order]  # entries: [remaining, release]
    next_release = [0] * n
    t = 0
    while t < h:
        for i, task in enumerate(order):
            if next_release[i] == t:
                backlog[i].append([task.wcet, t])
                next_release[i] += task.period
                res.jobs += 1
        upcoming = min(min(next_release), h)
        run = next((i for i in range(n) if backlog[i]), None)
        if run is None:
            t = upcoming
            continue
        job = backlog[run][0]
        step = min(job[0], upcoming - t)
        t += step
        job[0] -= step
        if job[0] == 0:
            backlog[run].popleft()
            task = order[run]
            response = t - job[1]
            prev = res.worst_response.get(task.name, 0)
            res.worst_response[task.name] = max(prev, response)
            if response > task.period and task.name not in res.first_miss:
                res.first_miss[task.name] = job[1] + task.period
    for i, task in enumerate(order):
        if backlog[i] and task.name not in res.first_miss:
            res.first_miss[task.name] = backlog[i][0][1] + task.period
    return res
