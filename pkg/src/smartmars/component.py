"""Running component instances: ports, main states, params and tasks."""
from __future__ import annotations

import logging

from .errors import UnknownEndpoint
from .model.core import ComponentModel, Direction, PlatformDescription
from .patterns.ports import DEFAULT_QUEUE_DEPTH, make_port
from .state import ParamSet, StateAutomaton
from .tasks import executor_spawn, map_task

log = logging.getLogger(__name__)

HOST_PLATFORM = PlatformDescription("host", supports_realtime=False, memory_mb=1024)


class ComponentInstance:
    """One instance of a component model living on a clock."""

    def __init__(self, name, model: ComponentModel, clock, platform=None, qos=None, depth=DEFAULT_QUEUE_DEPTH):
        self.name = name
        self.model = model
        self.clock = clock
        self.platform = platform or HOST_PLATFORM
        qos = qos or {}
        types = model.type_table()
        self.ports = {
            p.name: make_port(p, types, clock, owner=name, qos=qos.get(p.name), depth=depth) for p in model.ports
        }
        self.state = StateAutomaton(clock, model.main_states(), model.bindings(), self.ports)
        self.params = ParamSet(clock, model.params)
        self.tasks = {}
        self.destroyed = False
        self.state.start()

    def port(self, name):
        try:
            return self.ports[name]
        except KeyError:
            raise UnknownEndpoint(f"{self.name}.{name}") from None

    __getitem__ = port

    def required(self):
        return [p for p in self.ports.values() if p.spec.direction is Direction.REQUIRED]

    def provided(self):
        return [p for p in self.ports.values() if p.spec.direction is Direction.PROVIDED]

    def map_task(self, task_name):
        return map_task(self.model.task(task_name), self.platform, f"instance {self.name} task {task_name}")

    def spawn_task(self, task_name, body, until=None):
        """Start ``body`` as the named task, mapped onto this instance's platform."""
        handle = executor_spawn(self, self.map_task(task_name), body, until)
        self.tasks[task_name] = handle
        return handle

    def stop_tasks(self):
        for handle in list(self.tasks.values()):
            if not handle.stopped:
                handle.stop(wait=False)

    def destroy(self):
        """Stop tasks, shut provided ports down and unwire required ones."""
        if self.destroyed:
            return
        self.destroyed = True
        self.stop_tasks()
        for p in self.provided():
            p.destroy()
        for p in self.required():
            p.detach()

    def __repr__(self):
        return f"<ComponentInstance {self.name}:{self.model.name} state={self.state.current}>"
