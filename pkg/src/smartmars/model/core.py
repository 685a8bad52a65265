"""Immutable domain types for component, platform and deployment models.

All containers are tuples so models compare structurally and can be shared
between threads without copying.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

PRIMITIVE_TYPES = ("bool", "int64", "float64", "string", "bytes")
PARAM_TYPES = ("bool", "int64", "float64", "string")
NEUTRAL = "Neutral"

_LIST_RE = re.compile(r"^list<(.+)>$")


class Pattern(str, enum.Enum):
    SEND = "send"
    QUERY = "query"
    PUSH_NEWEST = "pushnewest"
    PUSH_TIMED = "pushtimed"
    EVENT = "event"

    @property
    def is_push(self):
        return self in (Pattern.PUSH_NEWEST, Pattern.PUSH_TIMED)

    def __str__(self):
        return self.value


class Direction(str, enum.Enum):
    PROVIDED = "provided"
    REQUIRED = "required"

    def __str__(self):
        return self.value


def list_item_type(type_expr: str) -> Optional[str]:
    """Return the element type of ``list<T>``, or None for non-list types."""
    m = _LIST_RE.match(type_expr)
    return m.group(1) if m else None


def referenced_object_types(type_expr: str):
    """Names of comm-object types mentioned by a field type expression."""
    item = list_item_type(type_expr)
    if item is not None:
        return referenced_object_types(item)
    if type_expr in PRIMITIVE_TYPES:
        return ()
    return (type_expr,)


@dataclass(frozen=True)
class CommObjectType:
    name: str
    fields: Tuple[Tuple[str, str], ...] = ()

    def field_names(self):
        return tuple(f for f, _ in self.fields)


@dataclass(frozen=True)
class QosParams:
    """Timing attributes of a service port.

    ``timeout_ms`` of None means unbounded. ``min_handling_ms`` and
    ``cycle_cost_ms`` are optional provider-side declarations used only by
    deployment checks and analysis extraction.
    """

    cycle_ms: Optional[int] = None
    timeout_ms: Optional[int] = None
    min_handling_ms: Optional[int] = None
    cycle_cost_ms: Optional[int] = None


@dataclass(frozen=True)
class ServicePortSpec:
    name: str
    pattern: Pattern
    direction: Direction
    request_type: Optional[str] = None
    answer_type: Optional[str] = None
    qos: QosParams = field(default_factory=QosParams)

    @property
    def provided(self):
        return self.direction is Direction.PROVIDED

    def type_names(self):
        return tuple(t for t in (self.request_type, self.answer_type) if t is not None)


@dataclass(frozen=True)
class TaskSpec:
    name: str
    is_realtime: bool = False
    is_periodic: bool = False
    period_ms: Optional[int] = None
    wcet_ms: Optional[int] = None
    priority: Optional[int] = None


@dataclass(frozen=True)
class RequiresRealtime:
    def __str__(self):
        return "realtime"


@dataclass(frozen=True)
class RequiresDevice:
    device_class: str
    count: int = 1

    def __str__(self):
        return f"device {self.device_class} x{self.count}"


@dataclass(frozen=True)
class RequiresMemoryMB:
    mb: int

    def __str__(self):
        return f"memoryMB={self.mb}"


Constraint = Union[RequiresRealtime, RequiresDevice, RequiresMemoryMB]


@dataclass(frozen=True)
class ParamDecl:
    key: str
    value_type: str


@dataclass(frozen=True)
class StateDecl:
    """A main state and the ports that are active while it is current."""

    name: str
    binds: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ComponentModel:
    name: str
    ports: Tuple[ServicePortSpec, ...] = ()
    tasks: Tuple[TaskSpec, ...] = ()
    params: Tuple[ParamDecl, ...] = ()
    constraints: Tuple[Constraint, ...] = ()
    states: Tuple[StateDecl, ...] = ()
    types: Tuple[CommObjectType, ...] = ()

    def port(self, name):
        for p in self.ports:
            if p.name == name:
                return p
        raise KeyError(name)

    def task(self, name):
        for t in self.tasks:
            if t.name == name:
                return t
        raise KeyError(name)

    def type_table(self):
        return {t.name: t for t in self.types}

    def main_states(self):
        names = [NEUTRAL]
        names.extend(s.name for s in self.states if s.name != NEUTRAL)
        return tuple(names)

    def bindings(self):
        """Map of port name -> frozenset of states in which it is active.

        Ports missing from the map are unbound and therefore always active.
        """
        out = {}
        for st in self.states:
            for p in st.binds:
                out.setdefault(p, set()).add(st.name)
        return {p: frozenset(s) for p, s in out.items()}


@dataclass(frozen=True)
class PlatformDescription:
    name: str
    supports_realtime: bool = False
    memory_mb: int = 1
    devices: Tuple[Tuple[str, int], ...] = ()
    cpu_count: int = 1

    def device_count(self, device_class):
        return sum(n for c, n in self.devices if c == device_class)


@dataclass(frozen=True)
class Instance:
    name: str
    component: str
    platform: str


@dataclass(frozen=True)
class Wire:
    from_instance: str
    from_port: str
    to_instance: str
    to_port: str

    def __str__(self):
        return f"{self.from_instance}.{self.from_port} -> {self.to_instance}.{self.to_port}"


@dataclass(frozen=True)
class TimeoutOverride:
    """Deployment-time replacement of a port's ``timeout_ms`` (None = unbounded)."""

    instance: str
    port: str
    timeout_ms: Optional[int]


@dataclass(frozen=True)
class DeploymentModel:
    instances: Tuple[Instance, ...] = ()
    wires: Tuple[Wire, ...] = ()
    overrides: Tuple[TimeoutOverride, ...] = ()
    components: Tuple[ComponentModel, ...] = ()
    platforms: Tuple[PlatformDescription, ...] = ()
    types: Tuple[CommObjectType, ...] = ()
    transport: str = "inproc"

    @property
    def placement(self):
        return {i.name: i.platform for i in self.instances}

    def component(self, name):
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def platform(self, name):
        for p in self.platforms:
            if p.name == name:
                return p
        raise KeyError(name)

    def instance(self, name):
        for i in self.instances:
            if i.name == name:
                return i
        raise KeyError(name)

    def model_of(self, instance_name):
        return self.component(self.instance(instance_name).component)

    def effective_qos(self, instance_name, port_name):
        qos = self.model_of(instance_name).port(port_name).qos
        for o in self.overrides:
            if o.instance == instance_name and o.port == port_name:
                qos = QosParams(qos.cycle_ms, o.timeout_ms, qos.min_handling_ms, qos.cycle_cost_ms)
        return qos


@dataclass(frozen=True)
class ModelDocument:
    """Everything declared in one or more model files, references resolved."""

    types: Tuple[CommObjectType, ...] = ()
    components: Tuple[ComponentModel, ...] = ()
    platforms: Tuple[PlatformDescription, ...] = ()
    deployment: Optional[DeploymentModel] = None


@dataclass(frozen=True, order=True)
class Violation:
    """A broken model invariant. ``element`` names exactly one model element."""

    element: str
    message: str
    code: str = "invariant"

    def __str__(self):
        return f"{self.element}: {self.message}"
