"""Interaction pattern runtime: send, query, push newest, push timed, event."""
from .commobject import CommObject, conform, make
from .ports import (
    NO_EVENT,
    NO_UPDATE,
    PENDING,
    ActivationId,
    ClientPort,
    ConnectionState,
    EventClient,
    EventMode,
    EventServer,
    PushNewestClient,
    PushNewestServer,
    PushTimedClient,
    PushTimedServer,
    QueryClient,
    QueryId,
    QueryServer,
    SendClient,
    SendServer,
    ServerPort,
    Status,
    make_port,
)
from .transport import InProcessConnection, check_compatibility, incompatibility, unwire, wire

__all__ = [
    "NO_EVENT",
    "NO_UPDATE",
    "PENDING",
    "ActivationId",
    "ClientPort",
    "CommObject",
    "ConnectionState",
    "EventClient",
    "EventMode",
    "EventServer",
    "InProcessConnection",
    "PushNewestClient",
    "PushNewestServer",
    "PushTimedClient",
    "PushTimedServer",
    "QueryClient",
    "QueryId",
    "QueryServer",
    "SendClient",
    "SendServer",
    "ServerPort",
    "Status",
    "check_compatibility",
    "conform",
    "incompatibility",
    "make",
    "make_port",
    "unwire",
    "wire",
]
