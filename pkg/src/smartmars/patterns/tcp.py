"""TCP transport: serve provided ports of a system, connect required ports remotely.

Only meaningful with the real clock. One socket per wired client endpoint;
frames are described in ``codec``. Control frames carry their verb in the
type-name field (``connect``, ``subscribe``, ``unsubscribe``,
``activate:single``, ``activate:continuous``, ``deactivate``, ``error``,
``set_state``, ``set_param``).
"""
from __future__ import annotations

import itertools
import logging
import socket
import threading
from functools import partial

from .. import errors
from ..errors import Disconnected, Incompatible, PatternError, SmartMarsError
from ..model.core import Direction
from .codec import (
    OPCODE_OF_PATTERN,
    CodecError,
    Frame,
    Kind,
    Opcode,
    decode_payload,
    decode_strings,
    encode_frame,
    encode_payload,
    encode_strings,
    read_frame,
)

log = logging.getLogger(__name__)

_PARAM_TAGS = {"bool": bool, "int64": int, "float64": float, "string": str}


def _error_frame(opcode, corr, exc):
    return Frame(opcode, Kind.CONTROL, corr, "error", encode_strings(type(exc).__name__, str(exc)))


def _error_from(payload):
    name, message = (decode_strings(payload) + ["", ""])[:2]
    cls = getattr(errors, name, None)
    if not (isinstance(cls, type) and issubclass(cls, SmartMarsError)):
        cls = PatternError
    try:
        return cls(message)
    except TypeError:
        return PatternError(f"{name}: {message}")


def encode_param(value):
    for tag, typ in _PARAM_TAGS.items():
        if type(value) is typ:
            return tag, ("true" if value else "false") if typ is bool else repr(value) if typ is float else str(value)
    raise errors.TypeMismatch(f"unsupported param value {value!r}")


def decode_param(tag, text):
    if tag == "bool":
        return text == "true"
    if tag == "int64":
        return int(text)
    if tag == "float64":
        return float(text)
    return text


class _Link:
    """A socket with serialized writes."""

    def __init__(self, sock):
        self.sock = sock
        self.wlock = threading.Lock()
        self.closed = False

    def write(self, frame):
        data = encode_frame(frame)
        with self.wlock:
            if self.closed:
                raise Disconnected("connection closed")
            try:
                self.sock.sendall(data)
            except OSError as exc:
                raise Disconnected(f"connection lost: {exc}") from None

    def close(self):
        with self.wlock:
            if self.closed:
                return
            self.closed = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


# -- server side ------------------------------------------------------------


class _Session:
    def __init__(self, host, sock):
        self.host = host
        self.link = _Link(sock)
        self.server = None
        self.subs = {}
        self.acts = {}

    @property
    def clock(self):
        return self.host.system.clock

    def run(self):
        try:
            while True:
                frame = read_frame(self.link.sock)
                if frame is None:
                    break
                try:
                    self.dispatch(frame)
                except Disconnected:
                    break
                except SmartMarsError as exc:
                    self.safe_write(_error_frame(frame.opcode, frame.correlation, exc))
        except (OSError, CodecError) as exc:
            if not self.link.closed:
                log.warning("tcp session ended: %s", exc)
        finally:
            self.close()

    def safe_write(self, frame):
        try:
            self.link.write(frame)
        except Disconnected:
            pass

    def ack(self, frame):
        self.safe_write(Frame(frame.opcode, Kind.ACK, frame.correlation, "ack"))

    def dispatch(self, f):
        system = self.host.system
        if f.kind == Kind.CONTROL and f.type_name == "connect":
            path, pattern, req, ans = decode_strings(f.payload)
            server = system.port(path)
            if server.spec.direction is not Direction.PROVIDED:
                raise Incompatible("direction: target is not a provided port")
            if server.spec.pattern.value != pattern:
                raise Incompatible("pattern")
            if (server.spec.request_type or "") != req:
                raise Incompatible("request type")
            if (server.spec.answer_type or "") != ans:
                raise Incompatible("answer type")
            with self.clock.lock:
                if server.closed:
                    raise Incompatible("provider destroyed")
                server.connections.add(self)
                self.server = server
            self.ack(f)
            return
        if f.opcode == Opcode.STATE and f.type_name == "set_state":
            inst, state = decode_strings(f.payload)
            system.set_state(inst, state)
            self.ack(f)
            return
        if f.opcode == Opcode.PARAM and f.type_name == "set_param":
            inst, key, tag, text = decode_strings(f.payload)
            system.set_param(inst, key, decode_param(tag, text))
            self.ack(f)
            return
        server = self.server
        if server is None:
            raise PatternError("not connected to a provided port")
        types = server.types
        if f.kind == Kind.REQUEST and f.opcode == Opcode.SEND:
            try:
                server.accept(decode_payload(f.payload, f.type_name, types))
            except SmartMarsError as exc:
                log.warning("%s: remote send dropped: %s", server.path, exc)
        elif f.kind == Kind.REQUEST and f.opcode == Opcode.QUERY:
            server.accept(decode_payload(f.payload, f.type_name, types), partial(self.reply, f.correlation))
        elif f.type_name == "subscribe":
            self.subs[f.correlation] = server.attach(partial(self.push, f.opcode, Kind.UPDATE, f.correlation))
        elif f.type_name == "unsubscribe":
            token = self.subs.pop(f.correlation, None)
            if token is not None:
                server.detach(token)
        elif f.type_name.startswith("activate:"):
            mode = f.type_name.split(":", 1)[1]
            param = decode_payload(f.payload, server.spec.request_type, types)
            self.acts[f.correlation] = server.activate(param, mode, partial(self.push, f.opcode, Kind.EVENT,
                                                                           f.correlation))
        elif f.type_name == "deactivate":
            token = self.acts.pop(f.correlation, None)
            if token is not None:
                server.deactivate(token)
        else:
            raise PatternError(f"unexpected frame {f.type_name!r}")

    def reply(self, corr, outcome):
        self.push(Opcode.QUERY, Kind.ANSWER, corr, outcome)

    def push(self, opcode, kind, corr, outcome):
        if isinstance(outcome, BaseException):
            self.safe_write(_error_frame(opcode, corr, outcome))
            return
        payload = encode_payload(outcome, self.server.types)
        self.safe_write(Frame(opcode, kind, corr, outcome.type_name, payload))

    def provider_lost(self):
        self.link.close()

    def close(self):
        server = self.server
        if server is not None:
            with self.clock.lock:
                server.connections.discard(self)
                for t in self.subs.values():
                    server.detach(t)
                for t in self.acts.values():
                    server.deactivate(t)
                self.subs.clear()
                self.acts.clear()
        self.link.close()
        self.host.sessions.discard(self)


class TcpHost:
    """Accepts remote clients for the provided ports of a ``System``."""

    def __init__(self, system, host="127.0.0.1", port=0):
        self.system = system
        self.listener = socket.create_server((host, port))
        self.address = self.listener.getsockname()[:2]
        self.sessions = set()
        self.closed = False
        self._thread = threading.Thread(target=self._accept, name="tcp-accept", daemon=True)
        self._thread.start()

    def _accept(self):
        while True:
            try:
                sock, _ = self.listener.accept()
            except OSError:
                return
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            session = _Session(self, sock)
            self.sessions.add(session)
            threading.Thread(target=session.run, name="tcp-session", daemon=True).start()

    def close(self):
        self.closed = True
        try:
            self.listener.close()
        except OSError:
            pass
        for s in list(self.sessions):
            s.close()


# -- client side ------------------------------------------------------------


def _handshake(address, frame, timeout):
    sock = socket.create_connection(tuple(address), timeout=timeout)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    try:
        sock.sendall(encode_frame(frame))
        resp = read_frame(sock)
    except (OSError, CodecError) as exc:
        sock.close()
        raise Disconnected(f"handshake with {address} failed: {exc}") from None
    if resp is None:
        sock.close()
        raise Disconnected(f"{address} closed the connection")
    return sock, resp


class TcpConnection:
    """Client-side connection object, interchangeable with the in-process one."""

    def __init__(self, client, address, target, on_lost=None, timeout=5.0):
        self.client = client
        self.address = tuple(address)
        self.target = target
        self.on_lost = on_lost
        self.timeout = timeout
        self.closed = False
        self.link = None
        self._corr = itertools.count(1)
        self._replies = {}
        self._sinks = {}

    @property
    def clock(self):
        return self.client.clock

    @property
    def peer(self):
        return f"tcp://{self.address[0]}:{self.address[1]}/{self.target}"

    @property
    def opcode(self):
        return OPCODE_OF_PATTERN[self.client.spec.pattern.value]

    def open(self):
        spec = self.client.spec
        hello = Frame(self.opcode, Kind.CONTROL, 0, "connect",
                      encode_strings(self.target, spec.pattern.value, spec.request_type or "", spec.answer_type or ""))
        sock, resp = _handshake(self.address, hello, self.timeout)
        if resp.kind != Kind.ACK:
            sock.close()
            exc = _error_from(resp.payload)
            raise exc if isinstance(exc, Incompatible) else Incompatible(str(exc))
        sock.settimeout(None)
        self.link = _Link(sock)
        threading.Thread(target=self._read, name=f"tcp-client:{self.client.path}", daemon=True).start()

    def _write(self, kind, corr, type_name, payload=b""):
        if self.closed:
            raise Disconnected(f"{self.client.path}: connection closed")
        self.link.write(Frame(self.opcode, kind, corr, type_name, payload))

    def _encode(self, obj):
        return encode_payload(obj, self.client.types)

    def send(self, msg):
        self._write(Kind.REQUEST, next(self._corr), msg.type_name, self._encode(msg))

    def query(self, request, reply):
        corr = next(self._corr)
        self._replies[corr] = reply
        try:
            self._write(Kind.REQUEST, corr, request.type_name, self._encode(request))
        except Exception:
            self._replies.pop(corr, None)
            raise

    def subscribe(self, sink):
        corr = next(self._corr)
        self._sinks[corr] = sink
        self._write(Kind.CONTROL, corr, "subscribe")
        return corr

    def unsubscribe(self, token):
        self._sinks.pop(token, None)
        try:
            self._write(Kind.CONTROL, token, "unsubscribe")
        except Disconnected:
            pass

    def activate(self, param, mode, sink):
        corr = next(self._corr)
        self._sinks[corr] = sink
        self._write(Kind.CONTROL, corr, f"activate:{getattr(mode, 'value', mode)}", self._encode(param))
        return corr

    def deactivate(self, token):
        self._sinks.pop(token, None)
        try:
            self._write(Kind.CONTROL, token, "deactivate")
        except Disconnected:
            pass

    def close(self):
        if self.closed:
            return
        self.closed = True
        if self.link is not None:
            self.link.close()

    def _deliver(self, f):
        types = self.client.types
        with self.clock.lock:
            if f.kind == Kind.CONTROL and f.type_name == "error":
                outcome = _error_from(f.payload)
                target = self._replies.pop(f.correlation, None) or self._sinks.pop(f.correlation, None)
            elif f.kind == Kind.ANSWER:
                outcome = decode_payload(f.payload, f.type_name, types)
                target = self._replies.pop(f.correlation, None)
            elif f.kind in (Kind.UPDATE, Kind.EVENT):
                outcome = decode_payload(f.payload, f.type_name, types)
                target = self._sinks.get(f.correlation)
            else:
                return
            if target is not None:
                target(outcome)
        self.clock.notify()

    def _read(self):
        try:
            while True:
                f = read_frame(self.link.sock)
                if f is None:
                    break
                self._deliver(f)
        except (OSError, CodecError, SmartMarsError) as exc:
            if not self.closed:
                log.warning("%s: tcp link failed: %s", self.client.path, exc)
        if not self.closed:
            self.client.detach(Disconnected(f"{self.client.path}: connection to {self.peer} lost"))
            if self.on_lost is not None:
                self.on_lost(self)


def wire_tcp(client, address, target, on_lost=None):
    """Connect a required endpoint to a remote provided one ``instance.port``."""
    if client.spec.direction is not Direction.REQUIRED:
        raise Incompatible("direction: source is not a required port")
    conn = TcpConnection(client, address, target, on_lost)
    client.detach()
    conn.open()
    client.attach(conn)
    return conn


class TcpMaster:
    """Remote state and param management against a ``TcpHost``."""

    def __init__(self, address, timeout=5.0):
        self.address = tuple(address)
        self.timeout = timeout

    def _call(self, frame):
        sock, resp = _handshake(self.address, frame, self.timeout)
        sock.close()
        if resp.kind != Kind.ACK:
            raise _error_from(resp.payload)
        return True

    def set_state(self, instance, state):
        return self._call(Frame(Opcode.STATE, Kind.CONTROL, 1, "set_state", encode_strings(instance, state)))

    def set_param(self, instance, key, value):
        tag, text = encode_param(value)
        return self._call(Frame(Opcode.PARAM, Kind.CONTROL, 1, "set_param", encode_strings(instance, key, tag, text)))

