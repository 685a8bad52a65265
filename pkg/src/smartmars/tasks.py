"""Task mapping onto platforms and periodic task execution."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import AlreadyStopped, InvalidTaskSpec, MissingPlatformCapability, TaskError
from .model.core import PlatformDescription, TaskSpec
from .model.validation import _task_violations

log = logging.getLogger(__name__)


class TaskMapping(str, enum.Enum):
    REALTIME = "RealtimeTask"
    EMULATED_PERIODIC = "EmulatedPeriodicTask"
    FREE_RUNNING = "FreeRunningTask"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PsmTask:
    spec: TaskSpec
    mapping: TaskMapping
    platform: str

    @property
    def name(self):
        return self.spec.name


def map_task(spec: TaskSpec, platform: PlatformDescription, element: str = "") -> PsmTask:
    """Choose the platform-specific execution class of a task.

    Realtime tasks need a realtime-capable platform; periodic non-realtime
    tasks get periodic emulation; everything else runs free.
    """
    problems = _task_violations("?", spec)
    if problems:
        raise InvalidTaskSpec("; ".join(v.message for v in problems))
    if spec.is_realtime:
        if not platform.supports_realtime:
            raise MissingPlatformCapability("realtime", platform.name, element or f"task {spec.name}")
        return PsmTask(spec, TaskMapping.REALTIME, platform.name)
    if spec.is_periodic:
        return PsmTask(spec, TaskMapping.EMULATED_PERIODIC, platform.name)
    return PsmTask(spec, TaskMapping.FREE_RUNNING, platform.name)


@dataclass
class RunReport:
    task: str
    mapping: str
    period_ms: Optional[int] = None
    iterations: int = 0
    deadline_misses: int = 0
    max_jitter_ms: float = 0
    releases: List[int] = field(default_factory=list)

    def to_dict(self, with_releases=False):
        d = {
            "task": self.task,
            "mapping": self.mapping,
            "periodMs": self.period_ms,
            "iterations": self.iterations,
            "deadlineMisses": self.deadline_misses,
            "maxJitterMs": self.max_jitter_ms,
        }
        if with_releases:
            d["releases"] = list(self.releases)
        return d


def run_periodic(task: PsmTask, body, clock, until=None, stop=None, report=None) -> RunReport:
    """Invoke ``body`` at origin + k*period for every release up to ``until``.

    ``until`` is an absolute clock reading (None runs until ``stop()`` holds).
    A body still running at a later release counts one deadline miss per
    such release, and that release is skipped; releases stay on the grid.
    """
    if task.mapping is TaskMapping.FREE_RUNNING:
        raise TaskError(f"task {task.name} is not periodic")
    clock.check_running()
    period = task.spec.period_ms
    origin = clock.now()
    if until is not None and until <= origin:
        raise ValueError("until must lie in the future")
    report = report or RunReport(task.name, task.mapping.value, period)
    stop = stop or (lambda: False)
    k = 1
    while True:
        release = origin + k * period
        if until is not None and release > until:
            break
        clock.wait_for(stop, release)
        if stop():
            break
        clock.check_running()
        start = clock.now()
        report.max_jitter_ms = max(report.max_jitter_ms, start - release)
        report.releases.append(release)
        body()
        report.iterations += 1
        end = clock.now()
        k += 1
        while origin + k * period < end:
            if until is None or origin + k * period <= until:
                report.deadline_misses += 1
            k += 1
    return report


class TaskHandle:
    """Running task owned by a component's executor."""

    def __init__(self, component, task: PsmTask):
        self.component = component
        self.task = task
        self.report = RunReport(task.name, task.mapping.value, task.spec.period_ms)
        self.ctx = None
        self.stopped = False
        self.error = None

    @property
    def done(self):
        return self.ctx is not None and self.ctx.done

    def stop(self, wait=True):
        if self.stopped:
            raise AlreadyStopped(f"task {self.task.name} already stopped")
        self.stopped = True
        self.ctx.cancel()
        if wait and self.ctx is not self.ctx.clock.current():
            self.ctx.join()


def executor_spawn(component, task: PsmTask, body, until=None) -> TaskHandle:
    """Run ``body`` on a dedicated context of ``component``.

    Periodic tasks follow ``run_periodic``. Free-running tasks call ``body``
    back to back; under the virtual clock such a body must block on something
    (a port, a sleep) or time cannot advance.
    """
    clock = component.clock
    handle = TaskHandle(component, task)

    def main():
        ctx = clock.current()
        try:
            if task.mapping is TaskMapping.FREE_RUNNING:
                while not ctx.cancelled:
                    body()
                    handle.report.iterations += 1
            else:
                run_periodic(task, body, clock, until, stop=lambda: ctx.cancelled, report=handle.report)
        except Exception as exc:
            if ctx.cancelled:
                return
            handle.error = exc
            log.exception("task %s.%s failed", component.name, task.name)

    handle.ctx = clock.spawn(main, name=f"{component.name}.{task.name}", propagate=False)
    return handle


def executor_stop(handle: TaskHandle):
    handle.stop()
