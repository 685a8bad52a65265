"""Analysis model export: a native line format (importable) and Cheddar-style XML."""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET

from ..errors import ModelSyntaxError
from .taskset import AnalysisTask, AnalysisTaskSet, assign_rm_priorities, priority_order

FORMATS = ("native", "cheddar")

_TASK_RE = re.compile(
    r"^task\s+(?P<name>\S+)\s+wcet=(?P<wcet>\d+)\s+period=(?P<period>\d+)"
    r"(?:\s+priority=(?P<priority>-?\d+))?(?P<emulated>\s+emulated)?\s*$"
)


def to_native(sets) -> str:
    """One ``platform`` line per set followed by its tasks in priority order."""
    out = []
    for ts in sets:
        out.append(f"platform {ts.platform}")
        ranked = assign_rm_priorities(ts) if ts.tasks else ts
        for t in priority_order(ranked):
            line = f"task {t.name} wcet={t.wcet} period={t.period} priority={t.priority}"
            if t.emulated:
                line += " emulated"
            out.append(line)
    return "\n".join(out) + "\n" if out else ""


def from_native(text: str):
    """Parse the native format back into task sets."""
    sets = []
    current = None
    tasks = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("platform "):
            if current is not None:
                sets.append(AnalysisTaskSet(current, tuple(tasks)))
            current, tasks = line.split(None, 1)[1].strip(), []
            continue
        m = _TASK_RE.match(line)
        if m is None or current is None:
            raise ModelSyntaxError("malformed analysis line" if m is None else "task before platform", lineno, 1)
        prio = m.group("priority")
        tasks.append(
            AnalysisTask(
                m.group("name"),
                int(m.group("wcet")),
                int(m.group("period")),
                None if prio is None else int(prio),
                bool(m.group("emulated")),
            )
        )
    if current is not None:
        sets.append(AnalysisTaskSet(current, tuple(tasks)))
    return sets


def _sub(parent, tag, text=None):
    el = ET.SubElement(parent, tag)
    if text is not None:
        el.text = str(text)
    return el


def to_cheddar(sets) -> str:
    """Best-effort Cheddar architecture XML: one processor per platform.

    Priorities are written as ranks (1 = lowest), which keeps the relative
    order whatever numbering the model used.
    """
    root = ET.Element("cheddar")
    cores = _sub(root, "core_units")
    procs = _sub(root, "processors")
    spaces = _sub(root, "address_spaces")
    tasks_el = _sub(root, "tasks")
    for ts in sets:
        core = _sub(cores, "core_unit")
        _sub(core, "name", f"{ts.platform}_core")
        sched = _sub(_sub(core, "scheduling"), "scheduling_parameters")
        _sub(sched, "scheduler_type", "POSIX_1003_HIGHEST_PRIORITY_FIRST_PROTOCOL")
        _sub(sched, "preemptive_type", "PREEMPTIVE")
        proc = _sub(procs, "mono_core_processor")
        _sub(proc, "name", ts.platform)
        _sub(proc, "core", f"{ts.platform}_core")
        space = _sub(spaces, "address_space")
        _sub(space, "name", f"{ts.platform}_space")
        _sub(space, "cpu_name", ts.platform)
        ranked = priority_order(assign_rm_priorities(ts)) if ts.tasks else []
        n = len(ranked)
        for i, t in enumerate(ranked):
            el = _sub(tasks_el, "periodic_task")
            _sub(el, "name", t.name)
            _sub(el, "cpu_name", ts.platform)
            _sub(el, "address_space_name", f"{ts.platform}_space")
            _sub(el, "capacity", t.wcet)
            _sub(el, "period", t.period)
            _sub(el, "deadline", t.period)
            _sub(el, "start_time", 0)
            _sub(el, "priority", n - i)
            _sub(el, "policy", "SCHED_FIFO")
            if t.emulated:
                _sub(el, "text_memory_size", 0).set("note", "emulated")
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def export_analysis_model(sets, fmt="native") -> str:
    if fmt == "native":
        return to_native(sets)
    if fmt == "cheddar":
        return to_cheddar(sets)
    raise ValueError(f"unknown export format {fmt!r}; choose from {', '.join(FORMATS)}")
