"""Canonical text rendering of models.

The output is deterministic: same model, same bytes. Parsing the output
yields a structurally equal model.
"""
from __future__ import annotations

from .core import (
    ComponentModel,
    DeploymentModel,
    ModelDocument,
    Pattern,
    PlatformDescription,
    RequiresDevice,
    RequiresMemoryMB,
    RequiresRealtime,
)

INDENT = "  "


def _bool(v):
    return "true" if v else "false"


def _commobject(t):
    lines = [f"commobject {t.name} {{"]
    lines += [f"{INDENT}{f}: {ft};" for f, ft in t.fields]
    lines.append("}")
    return "\n".join(lines)


def _port(p):
    parts = [f"port {p.name}: {p.pattern.value} {p.direction.value}"]
    if p.request_type is not None:
        parts.append(f"req={p.request_type}")
    if p.answer_type is not None:
        parts.append(f"ans={p.answer_type}")
    q = p.qos
    if q.cycle_ms is not None:
        parts.append(f"cycleMs={q.cycle_ms}")
    if p.pattern in (Pattern.QUERY, Pattern.EVENT) or q.timeout_ms is not None:
        parts.append("timeoutMs=" + ("none" if q.timeout_ms is None else str(q.timeout_ms)))
    if q.min_handling_ms is not None:
        parts.append(f"minHandlingMs={q.min_handling_ms}")
    if q.cycle_cost_ms is not None:
        parts.append(f"cycleCostMs={q.cycle_cost_ms}")
    return " ".join(parts) + ";"


def _task(t):
    parts = [f"task {t.name}", f"realtime={_bool(t.is_realtime)}", f"periodic={_bool(t.is_periodic)}"]
    if t.period_ms is not None:
        parts.append(f"periodMs={t.period_ms}")
    if t.wcet_ms is not None:
        parts.append(f"wcetMs={t.wcet_ms}")
    if t.priority is not None:
        parts.append(f"priority={t.priority}")
    return " ".join(parts) + ";"


def _constraint(c):
    if isinstance(c, RequiresRealtime):
        return "requires realtime;"
    if isinstance(c, RequiresDevice):
        return f"requires device {c.device_class} x{c.count};"
    if isinstance(c, RequiresMemoryMB):
        return f"requires memoryMB={c.mb};"
    raise TypeError(f"unknown constraint {c!r}")


def _component(c):
    lines = [f"component {c.name} {{"]
    body = [_port(p) for p in c.ports]
    body += [_task(t) for t in c.tasks]
    body += [f"param {p.key}: {p.value_type};" for p in c.params]
    for s in c.states:
        body.append(f"state {s.name}" + (f" binds {', '.join(s.binds)}" if s.binds else "") + ";")
    body += [_constraint(k) for k in c.constraints]
    lines += [INDENT + b for b in body]
    lines.append("}")
    return "\n".join(lines)


def _platform(p):
    lines = [f"platform {p.name} {{", f"{INDENT}realtime={_bool(p.supports_realtime)};",
             f"{INDENT}memoryMB={p.memory_mb};"]
    if p.cpu_count != 1:
        lines.append(f"{INDENT}cpus={p.cpu_count};")
    lines += [f"{INDENT}device {cls} x{n};" for cls, n in p.devices]
    lines.append("}")
    return "\n".join(lines)


def _deployment(d):
    lines = ["deployment {"]
    if d.transport != "inproc":
        lines.append(f"{INDENT}transport {d.transport};")
    lines += [f"{INDENT}instance {i.name}: {i.component} on {i.platform};" for i in d.instances]
    lines += [f"{INDENT}wire {w};" for w in d.wires]
    for o in d.overrides:
        t = "none" if o.timeout_ms is None else str(o.timeout_ms)
        lines.append(f"{INDENT}override {o.instance}.{o.port} timeoutMs={t};")
    lines.append("}")
    return "\n".join(lines)


def serialize_model(model) -> bytes:
    """Render a component, platform, deployment or whole document canonically."""
    if isinstance(model, ComponentModel):
        blocks = [_commobject(t) for t in model.types] + [_component(model)]
    elif isinstance(model, PlatformDescription):
        blocks = [_platform(model)]
    elif isinstance(model, DeploymentModel):
        blocks = [_commobject(t) for t in model.types]
        blocks += [_component(c) for c in model.components]
        blocks += [_platform(p) for p in model.platforms]
        blocks.append(_deployment(model))
    elif isinstance(model, ModelDocument):
        blocks = [_commobject(t) for t in model.types]
        blocks += [_component(c) for c in model.components]
        blocks += [_platform(p) for p in model.platforms]
        if model.deployment is not None:
            blocks.append(_deployment(model.deployment))
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return ("\n\n".join(blocks) + "\n").encode("utf-8")
