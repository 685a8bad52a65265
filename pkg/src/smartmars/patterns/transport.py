"""Connections between client and server endpoints.

A connection is what a wired client holds. It forwards requests to the
provider and keeps track of the subscriptions and activations it opened so
that closing it releases everything on the provider side.
"""
from __future__ import annotations

import logging

from ..errors import Disconnected, Incompatible
from ..model.core import Direction

log = logging.getLogger(__name__)


def incompatibility(required, provided):
    """Reason why ``required`` cannot be served by ``provided``, or None."""
    if required.pattern is not provided.pattern:
        return "pattern"
    if required.request_type != provided.request_type:
        return "request type"
    if required.answer_type != provided.answer_type:
        return "answer type"
    return None


def check_compatibility(required, provided) -> bool:
    """Same pattern kind and the same communication object names."""
    return incompatibility(required, provided) is None


class InProcessConnection:
    """Direct calls into a server endpoint living in the same process."""

    def __init__(self, client, server, on_lost=None):
        self.client = client
        self.server = server
        self.on_lost = on_lost
        self.closed = False
        self._subs = set()
        self._acts = set()

    @property
    def peer(self):
        return self.server.path

    def open(self):
        with self.server.clock.lock:
            if self.server.closed:
                raise Incompatible("provider destroyed")
            self.server.connections.add(self)

    def _live(self):
        if self.closed:
            raise Disconnected(f"{self.client.path}: connection closed")

    def send(self, msg):
        self._live()
        self.server.accept(msg)

    def query(self, request, reply):
        self._live()
        self.server.accept(request, reply)

    def subscribe(self, sink):
        self._live()
        token = self.server.attach(sink)
        self._subs.add(token)
        return token

    def unsubscribe(self, token):
        self._subs.discard(token)
        self.server.detach(token)

    def activate(self, param, mode, sink):
        self._live()
        token = self.server.activate(param, mode, sink)
        self._acts.add(token)
        return token

    def deactivate(self, token):
        self._acts.discard(token)
        self.server.deactivate(token)

    def close(self):
        with self.server.clock.lock:
            if self.closed:
                return
            self.closed = True
            self.server.connections.discard(self)
            for t in self._subs:
                self.server.detach(t)
            for t in self._acts:
                self.server.deactivate(t)
            self._subs.clear()
            self._acts.clear()

    def provider_lost(self):
        """Called by a destroyed provider: unwire the client."""
        self.client.detach(Disconnected(f"{self.client.path}: provider {self.server.path} destroyed"))
        if self.on_lost is not None:
            self.on_lost(self)


def wire(client, server, on_lost=None):
    """Connect a required endpoint to a provided one in this process.

    An already wired client is disconnected first, so its pending calls fail
    with Disconnected before the new wiring becomes visible.
    """
    if client.spec.direction is not Direction.REQUIRED:
        raise Incompatible("direction: source is not a required port")
    if server.spec.direction is not Direction.PROVIDED:
        raise Incompatible("direction: target is not a provided port")
    reason = incompatibility(client.spec, server.spec)
    if reason is not None:
        raise Incompatible(reason)
    with client.clock.lock:
        client.detach()
        conn = InProcessConnection(client, server, on_lost)
        conn.open()
        client.attach(conn)
    return conn


def unwire(client):
    """Disconnect with housekeeping; idempotent."""
    return client.detach()
