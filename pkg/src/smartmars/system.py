"""The master side of a running system: dynamic wiring, states and params.

Every management call returns True as its acknowledgement or raises. The
wiring table maps each required endpoint to the provided endpoint it is
connected to (None when unwired); it is only changed under the clock lock so
each entry flips atomically.
"""
from __future__ import annotations

import logging

from .component import ComponentInstance
from .errors import DuplicateName, Incompatible, UnknownEndpoint
from .model.core import Direction
from .patterns.transport import unwire, wire

log = logging.getLogger(__name__)


def _endpoint(ref):
    if isinstance(ref, str):
        inst, dot, port = ref.partition(".")
        if not dot or not inst or not port:
            raise UnknownEndpoint(f"malformed endpoint {ref!r}; expected instance.port")
        return inst, port
    inst, port = ref
    return inst, port


class System:
    def __init__(self, clock):
        self.clock = clock
        self.components = {}
        self.table = {}
        self.destroyed = set()
        self.log = []

    # -- lifecycle ---------------------------------------------------------

    def add(self, name, model, platform=None, qos=None, depth=None):
        with self.clock.lock:
            if name in self.components:
                raise DuplicateName(name, "system")
            kw = {} if depth is None else {"depth": depth}
            comp = ComponentInstance(name, model, self.clock, platform, qos, **kw)
            self.components[name] = comp
            self.destroyed.discard(name)
            for p in comp.required():
                self.table[(name, p.name)] = None
        return comp

    def remove(self, name):
        """Destroy an instance; clients wired to it become unwired."""
        with self.clock.lock:
            comp = self.components.pop(name, None)
            if comp is None:
                raise UnknownEndpoint(name)
            self.destroyed.add(name)
            comp.destroy()
            for key in [k for k in self.table if k[0] == name]:
                del self.table[key]
        self.clock.notify()
        return True

    def component(self, name):
        try:
            return self.components[name]
        except KeyError:
            if name in self.destroyed:
                raise Incompatible("provider destroyed") from None
            raise UnknownEndpoint(name) from None

    def __getitem__(self, name):
        return self.component(name)

    def port(self, ref):
        inst, port = _endpoint(ref)
        comp = self.components.get(inst)
        if comp is None:
            raise UnknownEndpoint(f"{inst}.{port}")
        return comp.port(port)

    # -- wiring ------------------------------------------------------------

    def connect(self, source, target):
        """Wire required endpoint ``source`` to provided endpoint ``target``.

        An existing wiring of ``source`` is torn down first (its pending calls
        fail with Disconnected).
        """
        src = _endpoint(source)
        dst = _endpoint(target)
        with self.clock.lock:
            client = self.port(src)
            if dst[0] in self.destroyed and dst[0] not in self.components:
                raise Incompatible("provider destroyed")
            server = self.port(dst)
            if client.spec.direction is not Direction.REQUIRED:
                raise Incompatible(f"direction: {src[0]}.{src[1]} is not a required port")

            def lost(conn, key=src, value=dst):
                with self.clock.lock:
                    if self.table.get(key) == value:
                        self.table[key] = None

            wire(client, server, on_lost=lost)
            self.table[src] = dst
            self.log.append((self.clock.now(), "connect", f"{src[0]}.{src[1]}", f"{dst[0]}.{dst[1]}"))
        self.clock.notify()
        return True

    def connect_remote(self, source, address, target):
        """Wire ``source`` to provided endpoint ``target`` served by a TCP host."""
        from .patterns.tcp import wire_tcp

        src = _endpoint(source)
        dst = _endpoint(target)
        client = self.port(src)

        def lost(conn, key=src):
            with self.clock.lock:
                self.table[key] = None

        wire_tcp(client, address, f"{dst[0]}.{dst[1]}", on_lost=lost)
        with self.clock.lock:
            self.table[src] = dst
            self.log.append((self.clock.now(), "connect", f"{src[0]}.{src[1]}", f"tcp:{dst[0]}.{dst[1]}"))
        self.clock.notify()
        return True

    def disconnect(self, source):
        """Unwire ``source``; a no-op for an endpoint that is not wired."""
        src = _endpoint(source)
        with self.clock.lock:
            client = self.port(src)
            if client.spec.direction is not Direction.REQUIRED:
                raise UnknownEndpoint(f"{src[0]}.{src[1]} is not a required port")
            unwire(client)
            self.table[src] = None
            self.log.append((self.clock.now(), "disconnect", f"{src[0]}.{src[1]}", None))
        self.clock.notify()
        return True

    def wiring(self):
        """Snapshot of the wiring table with endpoints rendered as strings."""
        with self.clock.lock:
            return {
                f"{i}.{p}": (None if v is None else f"{v[0]}.{v[1]}") for (i, p), v in sorted(self.table.items())
            }

    # -- states and params -------------------------------------------------

    def set_state(self, instance, state):
        return self.component(instance).state.set_state(state)

    def state_of(self, instance):
        return self.component(instance).state.current

    def set_param(self, instance, key, value):
        return self.component(instance).params.set(key, value)

    # -- diagnostics -------------------------------------------------------

    def blocked_calls(self):
        """Client calls currently parked waiting for an answer, update or event."""
        with self.clock.lock:
            return sum(p.waiting for c in self.components.values() for p in c.required())

    def shutdown(self):
        for name in list(self.components):
            self.remove(name)

    @classmethod
    def from_deployment(cls, deployment, clock, connect=True):
        """Instantiate and wire every instance of a deployment model."""
        system = cls(clock)
        for inst in deployment.instances:
            model = deployment.component(inst.component)
            qos = {p.name: deployment.effective_qos(inst.name, p.name) for p in model.ports}
            system.add(inst.name, model, deployment.platform(inst.platform), qos)
        if connect:
            for w in deployment.wires:
                system.connect((w.from_instance, w.from_port), (w.to_instance, w.to_port))
        return system
