"""Instantiate a deployment in-process, attach behaviors and run it."""
from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from ..clock import VirtualClock
from ..system import System

log = logging.getLogger(__name__)


class ScenarioEnv:
    """What behaviors and master scripts see of the running system."""

    def __init__(self, system, until=None):
        self.system = system
        self.clock = system.clock
        self.until = until
        self.handles = {}
        self._stats = defaultdict(Counter)

    def stats(self, owner):
        return self._stats[owner]

    def all_stats(self):
        return {k: dict(sorted(v.items())) for k, v in sorted(self._stats.items())}

    def spawn_task(self, comp, task_name, body):
        handle = comp.spawn_task(task_name, body, until=self.until)
        self.handles[f"{comp.name}.{task_name}"] = handle
        return handle


@dataclass
class RunResult:
    env: ScenarioEnv
    until: int
    ended_at: int
    blocked_calls: int
    wiring: dict
    interrupted: bool = False
    ports: list = field(default_factory=list)

    @property
    def system(self):
        return self.env.system


def _drain(system, env, until):
    """Stop periodic distribution at the horizon and let in-flight task bodies finish.

    Tasks release nothing after ``until``; a body released at or before it
    gets up to one more period to complete.
    """
    for comp in system.components.values():
        for p in comp.provided():
            if hasattr(p, "stop_timed"):
                p.stop_timed()
    handles = list(env.handles.values())
    grace = max((h.task.spec.period_ms or 0 for h in handles), default=0)
    if grace:
        system.clock.wait_for(lambda: all(h.done for h in handles), until + grace)
    settle = getattr(system.clock, "settle", None)
    if settle is not None:
        settle()


def run_deployment(deployment, registry, clock=None, until=5000, masters=(), tcp=False):
    """Run ``deployment`` until the clock reads ``until`` and collect results.

    Every component model must have a registered behavior; this is checked
    before anything is instantiated. With ``tcp`` every wire goes through a
    loopback TCP host (real clock only).
    """
    behaviors = {i.name: registry.lookup(deployment.model_of(i.name).name) for i in deployment.instances}
    scripts = [registry.master(m) for m in masters]
    clock = clock or VirtualClock()
    host = None
    system = System.from_deployment(deployment, clock, connect=not tcp)
    if tcp:
        from ..patterns.tcp import TcpHost

        host = TcpHost(system)
        for w in deployment.wires:
            system.connect_remote((w.from_instance, w.from_port), host.address, f"{w.to_instance}.{w.to_port}")
    env = ScenarioEnv(system, until)
    interrupted = False
    try:
        for inst in deployment.instances:
            behaviors[inst.name](system[inst.name], env)
        for script in scripts:
            script(env)
        try:
            clock.run(until)
            _drain(system, env, until)
        except KeyboardInterrupt:
            interrupted = True
        ended = clock.now()
        blocked = system.blocked_calls()
        wiring = system.wiring()
        ports = [
            {
                "port": p.path,
                "pattern": p.spec.pattern.value,
                "direction": p.spec.direction.value,
                "counters": dict(sorted(p.counters.items())),
            }
            for c in system.components.values()
            for p in c.ports.values()
        ]
        ports.sort(key=lambda row: row["port"])
        result = RunResult(env, until, ended, blocked, wiring, interrupted, ports)
    finally:
        for h in env.handles.values():
            if not h.stopped:
                h.stop(wait=False)
        if host is not None:
            host.close()
        clock.close()
    return result
