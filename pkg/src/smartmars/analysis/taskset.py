"""Task sets handed to schedulability analysis."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

from ..errors import InvalidTaskSet


@dataclass(frozen=True)
class AnalysisTask:
    """A periodic task with implicit deadline (deadline == period)."""

    name: str
    wcet: int
    period: int
    priority: Optional[int] = None
    emulated: bool = False


@dataclass(frozen=True)
class AnalysisTaskSet:
    platform: str
    tasks: Tuple[AnalysisTask, ...] = ()

    def __iter__(self):
        return iter(self.tasks)

    def __len__(self):
        return len(self.tasks)

    def task(self, name):
        for t in self.tasks:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def prioritized(self):
        return all(t.priority is not None for t in self.tasks)

    def scaled(self, k):
        """Same set with every wcet and period multiplied by ``k``."""
        return replace(self, tasks=tuple(replace(t, wcet=t.wcet * k, period=t.period * k) for t in self.tasks))


def check_taskset(ts):
    seen = set()
    for t in ts.tasks:
        if t.name in seen:
            raise InvalidTaskSet(f"duplicate task {t.name!r}")
        seen.add(t.name)
        for attr in ("wcet", "period"):
            v = getattr(t, attr)
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise InvalidTaskSet(f"task {t.name}: {attr} must be a positive integer, got {v!r}")
        if t.wcet > t.period:
            raise InvalidTaskSet(f"task {t.name}: wcet {t.wcet} exceeds period {t.period}")
        if t.priority is not None and (isinstance(t.priority, bool) or not isinstance(t.priority, int)):
            raise InvalidTaskSet(f"task {t.name}: priority must be an integer")


def assign_rm_priorities(ts: AnalysisTaskSet) -> AnalysisTaskSet:
    """Rate-monotonic priorities: shorter period, higher number; names break ties.

    A set whose tasks all carry priorities is returned unchanged.
    """
    if ts.prioritized:
        return ts
    order = sorted(ts.tasks, key=lambda t: (t.period, t.name))
    n = len(order)
    rank = {t.name: n - i for i, t in enumerate(order)}
    return replace(ts, tasks=tuple(replace(t, priority=rank[t.name]) for t in ts.tasks))


def priority_order(ts: AnalysisTaskSet):
    """Tasks from highest to lowest priority; equal priorities fall back to period, then name."""
    return sorted(ts.tasks, key=lambda t: (-t.priority, t.period, t.name))
