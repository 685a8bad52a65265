"""Invariant checks for component, platform and deployment models.

Violations are returned as data, sorted, so the result does not depend on the
order in which elements were declared.
"""
from __future__ import annotations

from collections import Counter

from .core import (
    NEUTRAL,
    PARAM_TYPES,
    PRIMITIVE_TYPES,
    ComponentModel,
    DeploymentModel,
    Direction,
    Pattern,
    PlatformDescription,
    RequiresDevice,
    RequiresMemoryMB,
    Violation,
    list_item_type,
    referenced_object_types,
)

# (needs request type, needs answer type) per pattern
PORT_SHAPES = {
    Pattern.SEND: (True, False),
    Pattern.QUERY: (True, True),
    Pattern.PUSH_NEWEST: (False, True),
    Pattern.PUSH_TIMED: (False, True),
    Pattern.EVENT: (True, True),
}


def _dupes(names):
    return sorted(n for n, k in Counter(names).items() if k > 1)


def _type_expr_ok(expr, known):
    item = list_item_type(expr)
    if item is not None:
        return _type_expr_ok(item, known)
    return expr in PRIMITIVE_TYPES or expr in known


def _type_violations(types):
    out = []
    known = {t.name for t in types}
    for name in _dupes([t.name for t in types]):
        out.append(Violation(f"commobject {name}", "type name declared more than once"))
    for t in types:
        for f in _dupes(t.field_names()):
            out.append(Violation(f"commobject {t.name} field {f}", "field name declared more than once"))
        for f, ftype in t.fields:
            if not _type_expr_ok(ftype, known):
                out.append(Violation(f"commobject {t.name} field {f}", f"unknown field type {ftype!r}"))

    # nesting must form a DAG
    edges = {t.name: {r for _, ft in t.fields for r in referenced_object_types(ft)} for t in types}
    white, grey, black = 0, 1, 2
    color = {n: white for n in edges}
    cyclic = set()

    def visit(n, stack):
        color[n] = grey
        stack.append(n)
        for m in sorted(edges[n]):
            if m not in color:
                continue
            if color[m] == grey:
                cyclic.update(stack[stack.index(m):])
            elif color[m] == white:
                visit(m, stack)
        stack.pop()
        color[n] = black

    for n in sorted(edges):
        if color[n] == white:
            visit(n, [])
    for n in sorted(cyclic):
        out.append(Violation(f"commobject {n}", "recursive nesting of communication objects"))
    return out


def _port_violations(comp, p, known):
    el = f"component {comp} port {p.name}"
    out = []
    needs_req, needs_ans = PORT_SHAPES[p.pattern]
    if p.pattern is Pattern.SEND and p.answer_type is not None:
        out.append(Violation(el, "send is one-way: no answer type allowed"))
    elif needs_ans and p.answer_type is None:
        out.append(Violation(el, f"{p.pattern.value} needs an answer type"))
    elif not needs_ans and p.answer_type is not None:
        out.append(Violation(el, f"{p.pattern.value} takes no answer type"))
    if needs_req and p.request_type is None:
        out.append(Violation(el, f"{p.pattern.value} needs a request type"))
    elif not needs_req and p.request_type is not None:
        out.append(Violation(el, f"{p.pattern.value} takes no request type"))
    for t in p.type_names():
        if t not in known:
            out.append(Violation(el, f"unresolved communication object {t!r}"))

    q = p.qos
    if p.pattern is Pattern.PUSH_TIMED:
        if q.cycle_ms is None:
            out.append(Violation(el, "pushtimed needs cycleMs"))
        elif q.cycle_ms <= 0:
            out.append(Violation(el, "cycleMs must be positive"))
    elif q.cycle_ms is not None:
        out.append(Violation(el, f"cycleMs is only allowed on pushtimed, not {p.pattern.value}"))
    if p.pattern in (Pattern.QUERY, Pattern.EVENT):
        if q.timeout_ms is not None and q.timeout_ms <= 0:
            out.append(Violation(el, "timeoutMs must be positive or none"))
    elif q.timeout_ms is not None:
        out.append(Violation(el, f"timeoutMs is only allowed on query and event, not {p.pattern.value}"))
    if q.min_handling_ms is not None:
        if p.pattern is not Pattern.QUERY or p.direction is not Direction.PROVIDED:
            out.append(Violation(el, "minHandlingMs is only allowed on provided query ports"))
        elif q.min_handling_ms <= 0:
            out.append(Violation(el, "minHandlingMs must be positive"))
    if q.cycle_cost_ms is not None:
        if p.pattern is not Pattern.PUSH_TIMED or p.direction is not Direction.PROVIDED:
            out.append(Violation(el, "cycleCostMs is only allowed on provided pushtimed ports"))
        elif q.cycle_cost_ms <= 0:
            out.append(Violation(el, "cycleCostMs must be positive"))
    return out


def _task_violations(comp, t):
    el = f"component {comp} task {t.name}"
    out = []
    if t.period_ms is not None and t.period_ms <= 0:
        out.append(Violation(el, "periodMs must be positive"))
    if t.wcet_ms is not None and t.wcet_ms <= 0:
        out.append(Violation(el, "wcetMs must be positive"))
    if t.is_periodic and t.period_ms is None:
        out.append(Violation(el, "periodic task needs periodMs"))
    if t.is_realtime:
        if not t.is_periodic:
            out.append(Violation(el, "realtime task must be periodic"))
        if t.wcet_ms is None:
            out.append(Violation(el, "realtime task needs wcetMs"))
        elif t.period_ms is not None and t.wcet_ms > t.period_ms:
            out.append(Violation(el, "wcetMs exceeds periodMs"))
    return out


def validate_pim(model: ComponentModel):
    """Check every invariant of a component model; [] means valid."""
    out = []
    c = model.name
    known = {t.name for t in model.types}
    out += _type_violations(model.types)

    for n in _dupes([p.name for p in model.ports]):
        out.append(Violation(f"component {c} port {n}", "port name declared more than once"))
    for n in _dupes([t.name for t in model.tasks]):
        out.append(Violation(f"component {c} task {n}", "task name declared more than once"))
    for n in _dupes([p.key for p in model.params]):
        out.append(Violation(f"component {c} param {n}", "param key declared more than once"))
    for n in _dupes([s.name for s in model.states]):
        out.append(Violation(f"component {c} state {n}", "state declared more than once"))

    for p in model.ports:
        out += _port_violations(c, p, known)
    for t in model.tasks:
        out += _task_violations(c, t)
    for p in model.params:
        if p.value_type not in PARAM_TYPES:
            out.append(Violation(f"component {c} param {p.key}", f"unsupported param type {p.value_type!r}"))

    port_names = {p.name for p in model.ports}
    for s in model.states:
        el = f"component {c} state {s.name}"
        if s.name == NEUTRAL and s.binds:
            out.append(Violation(el, "Neutral deactivates all bound ports and cannot bind any"))
        for b in s.binds:
            if b not in port_names:
                out.append(Violation(el, f"binds unknown port {b!r}"))

    for k in model.constraints:
        if isinstance(k, RequiresDevice) and k.count <= 0:
            out.append(Violation(f"component {c} requires {k}", "device count must be positive"))
        if isinstance(k, RequiresMemoryMB) and k.mb <= 0:
            out.append(Violation(f"component {c} requires {k}", "memory requirement must be positive"))
    return sorted(set(out))


def validate_platform(p: PlatformDescription):
    el = f"platform {p.name}"
    out = []
    if p.memory_mb <= 0:
        out.append(Violation(el, "memoryMB must be positive"))
    if p.cpu_count != 1:
        out.append(Violation(el, "cpus is reserved and must be 1"))
    for cls, n in p.devices:
        if n <= 0:
            out.append(Violation(f"{el} device {cls}", "device count must be positive"))
    return sorted(set(out))


def validate_deployment(d: DeploymentModel):
    """Validate a deployment and every model it references."""
    out = []
    for c in d.components:
        out += validate_pim(c)
    for p in d.platforms:
        out += validate_platform(p)
    for n in _dupes([c.name for c in d.components]):
        out.append(Violation(f"component {n}", "component declared more than once"))
    for n in _dupes([p.name for p in d.platforms]):
        out.append(Violation(f"platform {n}", "platform declared more than once"))
    for n in _dupes([i.name for i in d.instances]):
        out.append(Violation(f"instance {n}", "instance name declared more than once"))

    comps = {c.name: c for c in d.components}
    plats = {p.name for p in d.platforms}
    inst = {}
    for i in d.instances:
        if i.component not in comps:
            out.append(Violation(f"instance {i.name}", f"unknown component {i.component!r}"))
        else:
            inst[i.name] = comps[i.component]
        if i.platform not in plats:
            out.append(Violation(f"instance {i.name}", f"not placed on a known platform ({i.platform!r})"))

    def port_of(iname, pname):
        if iname not in inst:
            return None
        for p in inst[iname].ports:
            if p.name == pname:
                return p
        return None

    for n in _dupes([(w.from_instance, w.from_port) for w in d.wires]):
        out.append(Violation(f"wire {n[0]}.{n[1]}", "required port wired more than once"))
    for w in d.wires:
        src, dst = port_of(w.from_instance, w.from_port), port_of(w.to_instance, w.to_port)
        if src is None:
            out.append(Violation(f"wire {w}", f"unknown endpoint {w.from_instance}.{w.from_port}"))
        elif src.direction is not Direction.REQUIRED:
            out.append(Violation(f"wire {w}", "wire must start at a required port"))
        if dst is None:
            out.append(Violation(f"wire {w}", f"unknown endpoint {w.to_instance}.{w.to_port}"))
        elif dst.direction is not Direction.PROVIDED:
            out.append(Violation(f"wire {w}", "wire must end at a provided port"))
    for o in d.overrides:
        p = port_of(o.instance, o.port)
        el = f"override {o.instance}.{o.port}"
        if p is None:
            out.append(Violation(el, "unknown endpoint"))
        elif p.pattern not in (Pattern.QUERY, Pattern.EVENT):
            out.append(Violation(el, "only query and event timeouts can be overridden"))
        elif o.timeout_ms is not None and o.timeout_ms <= 0:
            out.append(Violation(el, "timeoutMs must be positive or none"))
    if d.transport not in ("inproc", "tcp"):
        out.append(Violation("deployment", f"unknown transport {d.transport!r}"))
    return sorted(set(out))
