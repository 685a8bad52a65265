"""Behaviors keyed by component model name, and named master scripts."""
from __future__ import annotations

from ..errors import DuplicateRegistration, UnknownBehavior


class Registry:
    """A behavior is ``fn(component, env)``; it installs handlers and spawns tasks.

    A master script is ``fn(env)`` and drives management operations
    (wiring, states, params) while the system runs.
    """

    def __init__(self):
        self._behaviors = {}
        self._masters = {}

    def register(self, name, behavior):
        if name in self._behaviors:
            raise DuplicateRegistration(f"behavior for {name!r} already registered")
        self._behaviors[name] = behavior

    def lookup(self, name):
        try:
            return self._behaviors[name]
        except KeyError:
            raise UnknownBehavior(f"no behavior registered for component {name!r}") from None

    def register_master(self, name, script):
        if name in self._masters:
            raise DuplicateRegistration(f"master script {name!r} already registered")
        self._masters[name] = script

    def master(self, name):
        try:
            return self._masters[name]
        except KeyError:
            raise UnknownBehavior(f"no master script named {name!r}") from None

    def names(self):
        return sorted(self._behaviors)

    def master_names(self):
        return sorted(self._masters)

    def __contains__(self, name):
        return name in self._behaviors
