"""Component main states with entry/exit actions, and typed parameters."""
from __future__ import annotations

import itertools
import logging
from collections import Counter

from .errors import TypeMismatch, UnknownKey, UnknownState
from .model.core import NEUTRAL

log = logging.getLogger(__name__)


class StateAutomaton:
    """Flat main states; each bound port is active only in its binding set.

    Transitions are serialized FIFO: a second ``set_state`` issued while
    actions of the first are still running waits its turn.
    """

    def __init__(self, clock, main_states, bindings, ports=None):
        self.clock = clock
        self.main_states = tuple(main_states)
        self.bindings = dict(bindings)
        self.ports = ports or {}
        self.current = NEUTRAL
        self.entry_actions = {}
        self.exit_actions = {}
        self.counts = Counter()
        self.history = []
        self._tickets = itertools.count()
        self._serving = 0
        self.started = False

    def on_entry(self, state, action):
        self._known(state)
        self.entry_actions[state] = action

    def on_exit(self, state, action):
        self._known(state)
        self.exit_actions[state] = action

    def _known(self, state):
        if state not in self.main_states:
            raise UnknownState(f"unknown state {state!r}; known: {', '.join(self.main_states)}")

    def port_active(self, port, state=None):
        state = self.current if state is None else state
        binding = self.bindings.get(port)
        return binding is None or state in binding

    def _apply(self):
        for name, port in self.ports.items():
            port.set_active(self.port_active(name))

    def _run(self, kind, state):
        self.counts[(kind, state)] += 1
        action = (self.entry_actions if kind == "entry" else self.exit_actions).get(state)
        if action is None:
            return
        try:
            action()
        except Exception:
            log.exception("%s action of state %s raised", kind, state)

    def start(self):
        """Enter Neutral: every bound port starts inactive."""
        if self.started:
            return
        self.started = True
        self._apply()
        self._run("entry", NEUTRAL)
        self.history.append(NEUTRAL)

    def set_state(self, target):
        self._known(target)
        if not self.started:
            self.start()
        with self.clock.lock:
            ticket = next(self._tickets)
        self.clock.wait_for(lambda: self._serving == ticket)
        try:
            self._run("exit", self.current)
            with self.clock.lock:
                self.current = target
                self._apply()
            self._run("entry", target)
            self.history.append(target)
        finally:
            with self.clock.lock:
                self._serving += 1
            self.clock.notify()
        return True

    def balance(self, state):
        return self.counts[("entry", state)] - self.counts[("exit", state)]


def _param_ok(value_type, value):
    if value_type == "bool":
        return isinstance(value, bool)
    if value_type == "int64":
        return isinstance(value, int) and not isinstance(value, bool)
    if value_type == "float64":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if value_type == "string":
        return isinstance(value, str)
    return False


class ParamSet:
    """Name-value pairs typed by a component's param schema."""

    def __init__(self, clock, schema):
        self.clock = clock
        self.schema = {p.key: p.value_type for p in schema}
        self.values = {}
        self._hooks = []

    def on_change(self, hook):
        self._hooks.append(hook)

    def set(self, key, value):
        if key not in self.schema:
            raise UnknownKey(f"unknown param {key!r}")
        if not _param_ok(self.schema[key], value):
            raise TypeMismatch(f"param {key!r} expects {self.schema[key]}, got {value!r}")
        with self.clock.lock:
            self.values[key] = value
            hooks = list(self._hooks)
        for h in hooks:
            h(key, value)
        self.clock.notify()
        return True

    def get(self, key, default=None):
        return self.values.get(key, default)

    def __getitem__(self, key):
        return self.values[key]
