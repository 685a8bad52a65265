"""Executable semantics of the five data patterns.

Provided ports are servers, required ports are clients. A client talks to its
server through a connection object (see ``transport``); the server never
learns which transport carries a request, it only receives callables to
deliver answers, updates and notifications.

Every blocking client call returns once its answer arrives, its deadline
passes, its wiring is torn down, its port is deactivated or the calling
execution context is stopped, whichever happens first.
"""
from __future__ import annotations

import enum
import itertools
import logging
from collections import Counter, deque
from dataclasses import dataclass
from functools import partial

from ..errors import (
    AlreadyStarted,
    Disconnected,
    HandlerAlreadyRegistered,
    NoCycleTime,
    NotWired,
    PatternError,
    QueueFull,
    ServiceDeactivated,
    Timeout,
    TypeMismatch,
    UnknownId,
)
from ..model.core import Direction, Pattern
from .commobject import conform

log = logging.getLogger(__name__)

DEFAULT_QUEUE_DEPTH = 16
_uids = itertools.count(1)


class Status(enum.Enum):
    """Non-blocking results that are not communication objects."""

    PENDING = "pending"
    NO_UPDATE = "no-update"
    NO_EVENT = "no-event"

    def __repr__(self):
        return f"Status.{self.name}"


PENDING = Status.PENDING
NO_UPDATE = Status.NO_UPDATE
NO_EVENT = Status.NO_EVENT


class EventMode(str, enum.Enum):
    SINGLE = "single"
    CONTINUOUS = "continuous"


class ConnectionState(enum.Enum):
    UNWIRED = "unwired"
    WIRED = "wired"
    DISCONNECTING = "disconnecting"


@dataclass(frozen=True)
class QueryId:
    port: int
    seq: int


@dataclass(frozen=True)
class ActivationId:
    port: int
    seq: int


class SerialWorker:
    """Bounded FIFO drained by one execution context: handlers never overlap."""

    def __init__(self, clock, name, depth=DEFAULT_QUEUE_DEPTH):
        self.clock = clock
        self.name = name
        self.depth = depth
        self.queue = deque()
        self.closed = False
        self.ctx = None
        self.busy = False

    def submit(self, fn):
        with self.clock.lock:
            if self.closed:
                raise Disconnected(f"{self.name}: provider shut down")
            if len(self.queue) >= self.depth:
                raise QueueFull(f"{self.name}: request queue full ({self.depth})")
            self.queue.append(fn)
            if self.ctx is None:
                self.ctx = self.clock.spawn(self._loop, name=self.name, propagate=False)
        self.clock.notify()

    def clear(self):
        with self.clock.lock:
            dropped = len(self.queue)
            self.queue.clear()
        return dropped

    def close(self):
        with self.clock.lock:
            self.closed = True
            self.queue.clear()
        self.clock.notify()

    def _loop(self):
        clock = self.clock
        while True:
            clock.wait_for(lambda: bool(self.queue) or self.closed)
            with clock.lock:
                if not self.queue:
                    return
                fn = self.queue.popleft()
                self.busy = True
            try:
                fn()
            except Exception:
                log.exception("%s: handler fault", self.name)
            finally:
                self.busy = False


class Port:
    """State shared by client and server endpoints."""

    def __init__(self, spec, types, clock, owner="", qos=None):
        self.spec = spec
        self.types = types
        self.clock = clock
        self.owner = owner
        self.qos = qos if qos is not None else spec.qos
        self.uid = next(_uids)
        self.active = True
        self.counters = Counter()

    @property
    def name(self):
        return self.spec.name

    @property
    def pattern(self):
        return self.spec.pattern

    @property
    def path(self):
        return f"{self.owner}.{self.spec.name}" if self.owner else self.spec.name

    def _conform(self, obj, expected):
        try:
            conform(obj, self.types, expected)
        except TypeMismatch as exc:
            self.counters["type_mismatch"] += 1
            raise TypeMismatch(f"{self.path}: {exc}") from None

    def _deadline(self, timeout_ms):
        return None if timeout_ms is None else self.clock.now() + timeout_ms

    def __repr__(self):
        return f"<{type(self).__name__} {self.path}>"


# -- servers ----------------------------------------------------------------


class ServerPort(Port):
    def __init__(self, spec, types, clock, owner="", qos=None, depth=DEFAULT_QUEUE_DEPTH):
        super().__init__(spec, types, clock, owner, qos)
        self.depth = depth
        self.closed = False
        self.connections = set()
        self._worker = None

    @property
    def worker(self):
        if self._worker is None:
            self._worker = SerialWorker(self.clock, f"{self.path}:handler", self.depth)
        return self._worker

    def _admit(self):
        if self.closed:
            raise Disconnected(f"{self.path}: provider destroyed")
        if not self.active:
            self.counters["rejected"] += 1
            raise ServiceDeactivated(f"{self.path}: service deactivated")

    def set_active(self, active):
        with self.clock.lock:
            was, self.active = self.active, active
            if was and not active:
                self._on_deactivate()
        self.clock.notify()

    def _on_deactivate(self):
        pass

    def destroy(self):
        """Shut the provider down; every connected client is disconnected."""
        with self.clock.lock:
            if self.closed:
                return
            self.closed = True
            conns = list(self.connections)
            self.connections.clear()
        # clients learn of the loss first so their pending calls see Disconnected
        for c in conns:
            c.provider_lost()
        with self.clock.lock:
            self._on_deactivate()
        if self._worker is not None:
            self._worker.close()
        self.clock.notify()


class SendServer(ServerPort):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self._handler = None

    def register_handler(self, handler):
        if self._handler is not None:
            raise HandlerAlreadyRegistered(self.path)
        self._handler = handler

    def accept(self, msg):
        with self.clock.lock:
            self._admit()
            self._conform(msg, self.spec.request_type)
            self.worker.submit(partial(self._handle, msg))
            self.counters["received"] += 1

    def _handle(self, msg):
        handler = self._handler
        if handler is None:
            self.counters["dropped"] += 1
            log.warning("%s: message dropped, no handler registered", self.path)
            return
        try:
            handler(msg)
        except Exception:
            self.counters["faults"] += 1
            log.exception("%s: send handler raised", self.path)
            return
        self.counters["handled"] += 1

    def _on_deactivate(self):
        if self._worker is not None:
            self.counters["dropped"] += self._worker.clear()


class Responder:
    """Answers one query exactly once, from any execution context."""

    def __init__(self, server, token):
        self._server = server
        self._token = token

    def answer(self, obj):
        self._server._answer(self._token, obj)


class QueryServer(ServerPort):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self._handler = None
        self._deferred = False
        self._inflight = {}
        self._tokens = itertools.count(1)

    def register_handler(self, handler, deferred=False):
        """Install the request handler.

        ``handler(request) -> answer`` by default. With ``deferred`` the call is
        ``handler(request, responder)`` and the answer is given later through
        ``responder.answer(obj)``, which permits answering out of order.
        """
        if self._handler is not None:
            raise HandlerAlreadyRegistered(self.path)
        self._handler = handler
        self._deferred = deferred

    register_query_handler = register_handler

    def accept(self, request, reply):
        with self.clock.lock:
            self._admit()
            self._conform(request, self.spec.request_type)
            token = next(self._tokens)
            self._inflight[token] = reply
            try:
                self.worker.submit(partial(self._handle, token, request))
            except PatternError:
                del self._inflight[token]
                raise
            self.counters["requests"] += 1

    def _handle(self, token, request):
        handler = self._handler
        if handler is None:
            # no silent default answer: the client runs into its timeout
            self.counters["unhandled"] += 1
            log.warning("%s: query unanswered, no handler registered", self.path)
            with self.clock.lock:
                self._inflight.pop(token, None)
            return
        try:
            if self._deferred:
                handler(request, Responder(self, token))
                return
            answer = handler(request)
        except Exception:
            self.counters["faults"] += 1
            log.exception("%s: query handler raised; answer suppressed", self.path)
            with self.clock.lock:
                self._inflight.pop(token, None)
            return
        self._answer(token, answer)

    def _answer(self, token, answer):
        try:
            self._conform(answer, self.spec.answer_type)
        except TypeMismatch:
            self.counters["faults"] += 1
            log.error("%s: handler produced a malformed answer; suppressed", self.path)
            with self.clock.lock:
                self._inflight.pop(token, None)
            return
        with self.clock.lock:
            reply = self._inflight.pop(token, None)
            if reply is None:
                return
            self.counters["answered"] += 1
            reply(answer)
        self.clock.notify()

    def pending(self):
        return len(self._inflight)

    def _on_deactivate(self):
        if self._worker is not None:
            self._worker.clear()
        inflight, self._inflight = self._inflight, {}
        for reply in inflight.values():
            reply(ServiceDeactivated(f"{self.path}: service deactivated"))


class _PushServer(ServerPort):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self.current = None
        self._sinks = {}
        self._tokens = itertools.count(1)

    def attach(self, sink):
        with self.clock.lock:
            self._admit()
            token = next(self._tokens)
            self._sinks[token] = sink
            self._on_attach(sink)
            return token

    def detach(self, token):
        with self.clock.lock:
            self._sinks.pop(token, None)

    def subscribers(self):
        return len(self._sinks)

    def _on_attach(self, sink):
        pass

    def _distribute(self, value):
        sinks = list(self._sinks.values())
        for s in sinks:
            s(value)
        self.counters["distributions"] += 1
        self.counters["deliveries"] += len(sinks)

    def _on_deactivate(self):
        sinks, self._sinks = list(self._sinks.values()), {}
        for s in sinks:
            s(ServiceDeactivated(f"{self.path}: service deactivated"))


class PushNewestServer(_PushServer):
    def publish(self, value):
        """Make ``value`` current and hand it to every subscriber now."""
        self._conform(value, self.spec.answer_type)
        with self.clock.lock:
            if self.closed:
                raise Disconnected(f"{self.path}: provider destroyed")
            self.current = value
            self.counters["published"] += 1
            if self.active:
                self._distribute(value)
        self.clock.notify()

    def _on_attach(self, sink):
        if self.current is not None and self.active:
            sink(self.current)
            self.counters["deliveries"] += 1


class TimedTicket:
    """Handle of a running push-timed distribution loop."""

    def __init__(self, server):
        self.server = server
        self.stopped = False
        self.ctx = None

    def stop(self):
        with self.server.clock.lock:
            self.stopped = True
            if self.server._ticket is self:
                self.server._ticket = None
        self.server.clock.notify()


class PushTimedServer(_PushServer):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self._ticket = None

    def publish(self, value):
        """Make ``value`` current; it goes out at the next cycle tick."""
        self._conform(value, self.spec.answer_type)
        with self.clock.lock:
            if self.closed:
                raise Disconnected(f"{self.path}: provider destroyed")
            self.current = value
            self.counters["published"] += 1

    def start_timed(self, clock=None):
        """Distribute the current value at every multiple of the cycle time."""
        clock = clock or self.clock
        cycle = self.qos.cycle_ms
        if not cycle:
            raise NoCycleTime(f"{self.path}: no cycleMs declared")
        with self.clock.lock:
            if self._ticket is not None:
                raise AlreadyStarted(self.path)
            ticket = self._ticket = TimedTicket(self)

        def loop():
            k = clock.now() // cycle + 1
            while True:
                clock.wait_for(lambda: ticket.stopped or self.closed, k * cycle)
                if ticket.stopped or self.closed:
                    return
                self.tick()
                k += 1
                behind = clock.now() // cycle + 1
                if behind > k:
                    self.counters["late_ticks"] += behind - k
                    k = behind

        ticket.ctx = clock.spawn(loop, name=f"{self.path}:timer", propagate=False)
        return ticket

    def stop_timed(self):
        """Stop the distribution loop if one runs; returns whether it did."""
        ticket = self._ticket
        if ticket is None:
            return False
        ticket.stop()
        return True

    def tick(self):
        with self.clock.lock:
            if self.current is None:
                self.counters["skipped_ticks"] += 1
                return
            if not self.active or self.closed:
                return
            self._distribute(self.current)
        self.clock.notify()

    def destroy(self):
        if self._ticket is not None:
            self._ticket.stop()
        super().destroy()


class _Activation:
    __slots__ = ("param", "mode", "sink")

    def __init__(self, param, mode, sink):
        self.param = param
        self.mode = mode
        self.sink = sink


class EventServer(ServerPort):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self._test = None
        self._notification = None
        self._activations = {}
        self._tokens = itertools.count(1)
        self.state = None

    def register_handler(self, test, notification):
        """``test(param, state) -> bool`` decides firing on each state change;
        ``notification(param, state)`` builds the object sent to the client."""
        if self._test is not None:
            raise HandlerAlreadyRegistered(self.path)
        self._test = test
        self._notification = notification

    register_event_handler = register_handler

    def activate(self, param, mode, sink):
        with self.clock.lock:
            self._admit()
            self._conform(param, self.spec.request_type)
            token = next(self._tokens)
            self._activations[token] = _Activation(param, EventMode(mode), sink)
            self.counters["activations"] += 1
            return token

    def deactivate(self, token):
        with self.clock.lock:
            self._activations.pop(token, None)

    def put_state(self, state):
        """Record a server state change and fire matching activations."""
        with self.clock.lock:
            self.state = state
            if not self.active or self.closed or self._test is None:
                return
            acts = list(self._activations.items())
        fired = []
        for token, act in acts:
            try:
                if self._test(act.param, state):
                    fired.append((token, act, self._notification(act.param, state)))
            except Exception:
                self.counters["faults"] += 1
                log.exception("%s: event test raised", self.path)
        with self.clock.lock:
            for token, act, note in fired:
                try:
                    self._conform(note, self.spec.answer_type)
                except TypeMismatch:
                    self.counters["faults"] += 1
                    log.error("%s: malformed notification suppressed", self.path)
                    continue
                if self._activations.get(token) is not act:
                    continue
                if act.mode is EventMode.SINGLE:
                    del self._activations[token]
                self.counters["notifications"] += 1
                act.sink(note)
        self.clock.notify()

    def _on_deactivate(self):
        acts, self._activations = list(self._activations.values()), {}
        for a in acts:
            a.sink(ServiceDeactivated(f"{self.path}: service deactivated"))


# -- clients ----------------------------------------------------------------


class _Call:
    __slots__ = ("done", "result", "error", "deadline")

    def __init__(self, deadline):
        self.done = False
        self.result = None
        self.error = None
        self.deadline = deadline

    def settle(self, outcome):
        if self.done:
            return
        self.done = True
        if isinstance(outcome, BaseException):
            self.error = outcome
        else:
            self.result = outcome

    def outcome(self):
        if self.error is not None:
            raise self.error
        return self.result


class ClientPort(Port):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self.conn = None
        self.gen = 0
        self.conn_state = ConnectionState.UNWIRED
        self.waiting = 0

    @property
    def wired(self):
        return self.conn is not None

    @property
    def peer(self):
        return None if self.conn is None else self.conn.peer

    def _ready(self):
        if self.conn is None:
            raise NotWired(f"{self.path} is not wired")
        if not self.active:
            self.counters["rejected"] += 1
            raise ServiceDeactivated(f"{self.path}: service deactivated")

    def _block(self, pred, deadline):
        """Wait for ``pred``; True if the caller's context was stopped."""
        ctx = self.clock.current()
        self.waiting += 1
        try:
            self.clock.wait_for(lambda: pred() or (ctx is not None and ctx.cancelled), deadline)
        finally:
            self.waiting -= 1
        return ctx is not None and ctx.cancelled and not pred()

    # wiring hooks, called by the wiring layer

    def attach(self, conn):
        with self.clock.lock:
            if self.conn is not None:
                self.detach()
            self.conn = conn
            self.gen += 1
            self.conn_state = ConnectionState.WIRED
            self._on_attach(conn)
        self.clock.notify()

    def detach(self, error=None):
        """Housekeeping: unwire and fail everything that is pending."""
        error = error or Disconnected(f"{self.path}: disconnected")
        with self.clock.lock:
            conn = self.conn
            if conn is None:
                return False
            self.conn_state = ConnectionState.DISCONNECTING
            self.conn = None
            self.gen += 1
            self._fail_pending(error)
            self.conn_state = ConnectionState.UNWIRED
        conn.close()
        self.clock.notify()
        return True

    def set_active(self, active):
        with self.clock.lock:
            was, self.active = self.active, active
            if was and not active:
                self._fail_pending(ServiceDeactivated(f"{self.path}: service deactivated"))
        self.clock.notify()

    def _on_attach(self, conn):
        pass

    def _fail_pending(self, error):
        pass


class SendClient(ClientPort):
    def send(self, msg):
        """Hand ``msg`` to the provider; returns once it is queued there."""
        with self.clock.lock:
            self._ready()
            self._conform(msg, self.spec.request_type)
            conn = self.conn
        conn.send(msg)
        self.counters["sent"] += 1
        return True


class QueryClient(ClientPort):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self._pending = {}
        self._seq = itertools.count(1)

    def query(self, request, timeout_ms=...):
        """Blocking request/answer; ``timeout_ms`` overrides the QoS timeout."""
        qid = self.query_async(request, timeout_ms=timeout_ms)
        return self.query_receive(qid, wait=True)

    def query_async(self, request, timeout_ms=...):
        if timeout_ms is ...:
            timeout_ms = self.qos.timeout_ms
        with self.clock.lock:
            self._ready()
            self._conform(request, self.spec.request_type)
            qid = QueryId(self.uid, next(self._seq))
            call = _Call(self._deadline(timeout_ms))
            self._pending[qid.seq] = call
            conn, gen = self.conn, self.gen
            self.counters["requests"] += 1
            try:
                conn.query(request, partial(self._on_answer, gen, qid.seq))
            except PatternError:
                self._pending.pop(qid.seq, None)
                self.counters["rejected"] += 1
                raise
        return qid

    def query_receive(self, qid, wait=False):
        with self.clock.lock:
            call = self._pending.get(qid.seq) if qid.port == self.uid else None
            if call is None:
                raise UnknownId(f"{self.path}: unknown or consumed query id {qid.seq}")
            if call.done:
                return self._consume(qid, call)
            if not wait:
                return PENDING
        stopped = self._block(lambda: call.done, call.deadline)
        with self.clock.lock:
            if call.done:
                return self._consume(qid, call)
            del self._pending[qid.seq]
            if stopped:
                self.counters["disconnected"] += 1
                raise Disconnected(f"{self.path}: calling context stopped")
            self.counters["timeouts"] += 1
            raise Timeout(f"{self.path}: no answer by t={call.deadline}ms")

    def _consume(self, qid, call):
        del self._pending[qid.seq]
        if call.error is None:
            self.counters["answers"] += 1
        elif isinstance(call.error, Disconnected):
            self.counters["disconnected"] += 1
        return call.outcome()

    def _on_answer(self, gen, seq, outcome):
        with self.clock.lock:
            if gen != self.gen:
                return
            call = self._pending.get(seq)
            if call is None or call.done:
                return
            if not isinstance(outcome, BaseException):
                try:
                    self._conform(outcome, self.spec.answer_type)
                except TypeMismatch:
                    return
            call.settle(outcome)
        self.clock.notify()

    def pending(self):
        return sum(1 for c in self._pending.values() if not c.done)

    def _fail_pending(self, error):
        for call in self._pending.values():
            call.settle(error)


class _PushClient(ClientPort):
    # drop a value re-sent on resubscribe when it is the one already seen
    skip_replay = False

    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self.subscribed = False
        self._token = None
        self._slot = None
        self._error = None
        self._last = None
        self._resync = False

    def subscribe(self):
        with self.clock.lock:
            if self.conn is None:
                raise NotWired(f"{self.path} is not wired")
            if self.subscribed:
                return
            self.subscribed = True
            self._subscribe_on(self.conn)
        self.clock.notify()

    def unsubscribe(self):
        with self.clock.lock:
            self.subscribed = False
            if self.conn is not None and self._token is not None:
                self.conn.unsubscribe(self._token)
            self._token = None

    def _subscribe_on(self, conn):
        self._token = conn.subscribe(partial(self._on_update, self.gen))

    def _on_attach(self, conn):
        if self.subscribed:
            self._resync = self.skip_replay
            try:
                self._subscribe_on(conn)
            except PatternError as exc:
                log.warning("%s: resubscribe failed: %s", self.path, exc)

    def _on_update(self, gen, value):
        with self.clock.lock:
            if gen != self.gen:
                return
            if isinstance(value, BaseException):
                self._error = value
                self._token = None
            else:
                replay, self._resync = self._resync and value == self._last, False
                if replay:
                    return
                self._slot = self._last = value
                self.counters["updates"] += 1
        self.clock.notify()

    def get_update(self, wait=False, timeout_ms=None):
        """Latest value not yet read, ``NO_UPDATE``, or block for a fresh one.

        A wired port that was never subscribed is subscribed on first use.
        """
        with self.clock.lock:
            self._ready()
            if not self.subscribed:
                self.subscribed = True
                self._subscribe_on(self.conn)
            got = self._take()
            if got is not None or not wait:
                return NO_UPDATE if got is None else got
            gen = self.gen
        stopped = self._block(
            lambda: self._slot is not None or self._error is not None or self.gen != gen or not self.active,
            self._deadline(timeout_ms),
        )
        with self.clock.lock:
            if self.gen != gen:
                self.counters["disconnected"] += 1
                raise Disconnected(f"{self.path}: disconnected while waiting")
            if not self.active:
                raise ServiceDeactivated(f"{self.path}: service deactivated")
            got = self._take()
            if got is not None:
                return got
            if stopped:
                raise Disconnected(f"{self.path}: calling context stopped")
            self.counters["timeouts"] += 1
            raise Timeout(f"{self.path}: no update within {timeout_ms} ms")

    def _take(self):
        if self._slot is not None:
            v, self._slot = self._slot, None
            self.counters["reads"] += 1
            return v
        if self._error is not None:
            err, self._error = self._error, None
            raise err
        return None

    def _fail_pending(self, error):
        self._slot = None
        self._error = None
        self._token = None


class PushNewestClient(_PushClient):
    skip_replay = True


class PushTimedClient(_PushClient):
    pass


class _ClientActivation:
    __slots__ = ("mode", "queue", "error", "token", "gen")

    def __init__(self, mode, gen):
        self.mode = mode
        self.queue = deque()
        self.error = None
        self.token = None
        self.gen = gen


class EventClient(ClientPort):
    def __init__(self, *a, **k):
        super().__init__(*a, **k)
        self._acts = {}
        self._seq = itertools.count(1)

    def event_activate(self, param, mode=EventMode.SINGLE):
        mode = EventMode(mode)
        with self.clock.lock:
            self._ready()
            self._conform(param, self.spec.request_type)
            aid = ActivationId(self.uid, next(self._seq))
            act = _ClientActivation(mode, self.gen)
            self._acts[aid.seq] = act
            try:
                act.token = self.conn.activate(param, mode, partial(self._on_event, self.gen, aid.seq))
            except PatternError:
                del self._acts[aid.seq]
                raise
            self.counters["activations"] += 1
        return aid

    activate = event_activate

    def _lookup(self, aid):
        act = self._acts.get(aid.seq) if aid.port == self.uid else None
        if act is None:
            raise UnknownId(f"{self.path}: unknown or finished activation {aid.seq}")
        return act

    def event_get(self, aid, wait=False, timeout_ms=...):
        if timeout_ms is ...:
            timeout_ms = self.qos.timeout_ms
        with self.clock.lock:
            act = self._lookup(aid)
            got = self._take(aid, act)
            if got is not None or not wait:
                return NO_EVENT if got is None else got
            deadline = self._deadline(timeout_ms)
        stopped = self._block(
            lambda: bool(act.queue) or act.error is not None or self._acts.get(aid.seq) is not act,
            deadline,
        )
        with self.clock.lock:
            if self._acts.get(aid.seq) is not act:
                raise UnknownId(f"{self.path}: activation {aid.seq} deactivated while waiting")
            got = self._take(aid, act)
            if got is not None:
                return got
            if stopped:
                raise Disconnected(f"{self.path}: calling context stopped")
            self.counters["timeouts"] += 1
            raise Timeout(f"{self.path}: no event within {timeout_ms} ms")

    def _take(self, aid, act):
        if act.queue:
            note = act.queue.popleft()
            self.counters["reads"] += 1
            if act.mode is EventMode.SINGLE:
                del self._acts[aid.seq]
            return note
        if act.error is not None:
            del self._acts[aid.seq]
            if isinstance(act.error, Disconnected):
                self.counters["disconnected"] += 1
            raise act.error
        return None

    def event_deactivate(self, aid):
        with self.clock.lock:
            act = self._lookup(aid)
            del self._acts[aid.seq]
            if self.conn is not None and act.gen == self.gen and act.token is not None:
                self.conn.deactivate(act.token)
        self.clock.notify()

    deactivate = event_deactivate

    def _on_event(self, gen, seq, note):
        with self.clock.lock:
            if gen != self.gen:
                return
            act = self._acts.get(seq)
            if act is None or act.error is not None:
                return
            if isinstance(note, BaseException):
                act.error = note
            else:
                act.queue.append(note)
                self.counters["events"] += 1
        self.clock.notify()

    def _fail_pending(self, error):
        for act in self._acts.values():
            if act.error is None:
                act.error = error
            act.token = None


SERVER_CLASSES = {
    Pattern.SEND: SendServer,
    Pattern.QUERY: QueryServer,
    Pattern.PUSH_NEWEST: PushNewestServer,
    Pattern.PUSH_TIMED: PushTimedServer,
    Pattern.EVENT: EventServer,
}
CLIENT_CLASSES = {
    Pattern.SEND: SendClient,
    Pattern.QUERY: QueryClient,
    Pattern.PUSH_NEWEST: PushNewestClient,
    Pattern.PUSH_TIMED: PushTimedClient,
    Pattern.EVENT: EventClient,
}


def make_port(spec, types, clock, owner="", qos=None, depth=DEFAULT_QUEUE_DEPTH):
    """Instantiate the endpoint class matching a port spec."""
    if spec.direction is Direction.PROVIDED:
        return SERVER_CLASSES[spec.pattern](spec, types, clock, owner, qos, depth=depth)
    return CLIENT_CLASSES[spec.pattern](spec, types, clock, owner, qos)
