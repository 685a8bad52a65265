"""Deployment-time checks: platform mapping, constraint and QoS cross-checks,
and extraction of per-platform analysis task sets."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .analysis import AnalysisTask, AnalysisTaskSet, to_native
from .errors import MissingPlatformCapability, TransformError
from .model.core import (
    DeploymentModel,
    Direction,
    Pattern,
    QosParams,
    RequiresDevice,
    RequiresMemoryMB,
    RequiresRealtime,
    Violation,
)
from .model.validation import validate_deployment
from .patterns.transport import incompatibility
from .tasks import PsmTask, map_task


@dataclass
class PsmDeployment:
    """A deployment with tasks mapped onto platforms and port QoS resolved."""

    model: DeploymentModel
    tasks: Dict[Tuple[str, str], PsmTask] = field(default_factory=dict)
    endpoints: Dict[Tuple[str, str], QosParams] = field(default_factory=dict)

    def mapping_table(self):
        return [
            (inst, task, psm.platform, psm.mapping.value)
            for (inst, task), psm in sorted(self.tasks.items())
        ]


def transform(deployment: DeploymentModel) -> PsmDeployment:
    """Map every task onto its instance's platform, collecting all problems.

    Raises TransformError carrying every validation violation and every
    missing platform capability found; ``partial`` holds what could be mapped.
    """
    issues = list(validate_deployment(deployment))
    missing = []
    psm = PsmDeployment(deployment)
    comps = {c.name: c for c in deployment.components}
    plats = {p.name: p for p in deployment.platforms}
    for inst in deployment.instances:
        comp, plat = comps.get(inst.component), plats.get(inst.platform)
        if comp is None or plat is None:
            continue
        for p in comp.ports:
            psm.endpoints[(inst.name, p.name)] = deployment.effective_qos(inst.name, p.name)
        for t in comp.tasks:
            element = f"instance {inst.name} task {t.name}"
            try:
                psm.tasks[(inst.name, t.name)] = map_task(t, plat, element)
            except MissingPlatformCapability as exc:
                missing.append(exc)
                issues.append(Violation(element, f"platform {plat.name} lacks realtime support", "missing-capability"))
            except Exception:
                # already reported by validation
                continue
    if issues:
        err = TransformError(sorted(set(issues)), psm)
        err.missing = missing
        raise err
    return psm


def check_deployment(psm: PsmDeployment) -> List[Violation]:
    """Cross-check component constraints and wiring QoS against the platforms."""
    d = psm.model
    out = []
    by_platform = defaultdict(list)
    for inst in d.instances:
        by_platform[inst.platform].append(inst)

    for plat in d.platforms:
        el = f"platform {plat.name}"
        insts = by_platform.get(plat.name, [])
        memory = 0
        devices = defaultdict(int)
        for inst in insts:
            for k in d.component(inst.component).constraints:
                if isinstance(k, RequiresMemoryMB):
                    memory += k.mb
                elif isinstance(k, RequiresDevice):
                    devices[k.device_class] += k.count
                elif isinstance(k, RequiresRealtime) and not plat.supports_realtime:
                    out.append(
                        Violation(f"instance {inst.name}", f"requires realtime but platform {plat.name} has none",
                                  "capability")
                    )
        if memory > plat.memory_mb:
            out.append(Violation(el, f"memory shortage: {memory} MB required, {plat.memory_mb} MB available",
                                 "memory"))
        for cls in sorted(devices):
            have = plat.device_count(cls)
            if devices[cls] > have:
                out.append(Violation(f"{el} device {cls}",
                                     f"device shortage: {devices[cls]} required, {have} available", "device"))

    for w in d.wires:
        req = d.model_of(w.from_instance).port(w.from_port)
        prov = d.model_of(w.to_instance).port(w.to_port)
        el = f"wire {w}"
        if req.direction is not Direction.REQUIRED or prov.direction is not Direction.PROVIDED:
            out.append(Violation(el, "incompatible: direction", "incompatible"))
            continue
        reason = incompatibility(req, prov)
        if reason is not None:
            out.append(Violation(el, f"incompatible: {reason} differs", "incompatible"))
            continue
        rq = psm.endpoints.get((w.from_instance, w.from_port), req.qos)
        pq = psm.endpoints.get((w.to_instance, w.to_port), prov.qos)
        if req.pattern is Pattern.QUERY and pq.min_handling_ms is not None and rq.timeout_ms is not None:
            if rq.timeout_ms < pq.min_handling_ms:
                out.append(Violation(el, f"timeoutMs {rq.timeout_ms} is below the provider's minimum handling "
                                         f"time {pq.min_handling_ms}", "qos"))
        if req.pattern is Pattern.PUSH_TIMED and rq.cycle_ms != pq.cycle_ms:
            out.append(Violation(el, f"cycleMs {rq.cycle_ms} does not match the provider's {pq.cycle_ms}", "qos"))
    return sorted(set(out))


def extract_analysis_model(psm: PsmDeployment) -> Dict[str, AnalysisTaskSet]:
    """One task set per platform, keyed and ordered by platform name.

    Realtime tasks are always included; periodic emulated tasks with a wcet
    come along flagged ``emulated``; provided push timed ports declaring a
    per-cycle cost add a derived periodic load named ``instance.port``.
    """
    d = psm.model
    per = {p.name: [] for p in d.platforms}
    placement = d.placement
    for (inst, tname), task in sorted(psm.tasks.items()):
        spec = task.spec
        if task.mapping.value == "RealtimeTask":
            per[task.platform].append(AnalysisTask(f"{inst}.{tname}", spec.wcet_ms, spec.period_ms, spec.priority))
        elif task.mapping.value == "EmulatedPeriodicTask" and spec.wcet_ms is not None:
            per[task.platform].append(
                AnalysisTask(f"{inst}.{tname}", spec.wcet_ms, spec.period_ms, spec.priority, emulated=True)
            )
    for (inst, pname), qos in sorted(psm.endpoints.items()):
        port = d.model_of(inst).port(pname)
        if port.pattern is Pattern.PUSH_TIMED and port.direction is Direction.PROVIDED and qos.cycle_cost_ms:
            per[placement[inst]].append(AnalysisTask(f"{inst}.{pname}", qos.cycle_cost_ms, qos.cycle_ms))
    return {name: AnalysisTaskSet(name, tuple(tasks)) for name, tasks in sorted(per.items())}


def deployment_report(psm: PsmDeployment, violations, sets=None) -> str:
    """Plain-text report: violations, task mapping table, extracted task sets."""
    d = psm.model
    lines = [f"deployment: {len(d.instances)} instances on {len(d.platforms)} platforms, transport {d.transport}"]
    lines.append(f"violations: {len(violations)}")
    for v in violations:
        lines.append(f"  [{v.code}] {v.element}: {v.message}")
    rows = psm.mapping_table()
    lines.append(f"tasks: {len(rows)}")
    for inst, task, plat, mapping in rows:
        lines.append(f"  {inst}.{task} on {plat}: {mapping}")
    if sets is not None:
        lines.append("analysis model:")
        for line in to_native(sets.values()).splitlines():
            lines.append(f"  {line}")
    return "\n".join(lines) + "\n"
