"""Machine-readable reports and the figures rendered next to them."""
from __future__ import annotations

import json
import os

from .analysis import bound_verdict, rta, simulate_hyperperiod, utilization, utilization_bound

RUN_SCHEMA = "smartmars.run/1"
ANALYSIS_SCHEMA = "smartmars.analysis/1"

# counter that shows a pattern actually moved data, by pattern and direction
PATTERN_COUNTERS = {
    "send": ("provided", "handled"),
    "query": ("provided", "answered"),
    "pushnewest": ("required", "updates"),
    "pushtimed": ("required", "updates"),
    "event": ("required", "events"),
}


def pattern_totals(port_rows):
    totals = {k: 0 for k in PATTERN_COUNTERS}
    for row in port_rows:
        direction, counter = PATTERN_COUNTERS[row["pattern"]]
        if row["direction"] == direction:
            totals[row["pattern"]] += row["counters"].get(counter, 0)
    return totals


def run_report(result, mode="virtual"):
    env = result.env
    tasks = [
        dict(h.report.to_dict(), task=name, error=None if h.error is None else repr(h.error))
        for name, h in sorted(env.handles.items())
    ]
    return {
        "schema": RUN_SCHEMA,
        "clock": mode,
        "untilMs": result.until,
        "endedAtMs": result.ended_at,
        "interrupted": result.interrupted,
        "tasks": tasks,
        "deadlineMisses": sum(t["deadlineMisses"] for t in tasks),
        "ports": result.ports,
        "patterns": pattern_totals(result.ports),
        "wiring": result.wiring,
        "management": [
            {"atMs": t, "op": op, "from": a, "to": b} for t, op, a, b in result.system.log
        ],
        "behaviors": env.all_stats(),
        "blockedCalls": result.blocked_calls,
    }


def analysis_report(sets, include_emulated=False, oracle=False):
    """Per platform: response times, utilization, bound verdict, set verdict."""
    platforms = []
    for name, ts in sorted(sets.items()):
        if not include_emulated:
            ts = type(ts)(ts.platform, tuple(t for t in ts.tasks if not t.emulated))
        res = rta(ts)
        n = len(ts.tasks)
        entry = {
            "platform": name,
            "tasks": [
                {
                    "name": t.name,
                    "wcetMs": t.wcet,
                    "periodMs": t.period,
                    "priority": res.priorities[t.name],
                    "emulated": t.emulated,
                    "responseMs": res.responses[t.name],
                }
                for t in ts.tasks
            ],
            "rmAssigned": res.rm_assigned,
            "utilization": float(utilization(ts)),
            "utilizationBound": utilization_bound(n) if n else None,
            "boundVerdict": bound_verdict(ts),
            "schedulable": res.schedulable,
        }
        if oracle:
            sim = simulate_hyperperiod(ts)
            agrees = all(
                (res.responses[t.name] is None) == sim.misses(t.name)
                and (res.responses[t.name] is None or res.responses[t.name] == sim.worst_response[t.name])
                for t in ts.tasks
            )
            entry["oracle"] = {
                "hyperperiodMs": sim.hyperperiod,
                "worstResponseMs": dict(sorted(sim.worst_response.items())),
                "misses": dict(sorted(sim.first_miss.items())),
                "agrees": agrees,
            }
        platforms.append(entry)
    return {
        "schema": ANALYSIS_SCHEMA,
        "platforms": platforms,
        "schedulable": all(p["schedulable"] for p in platforms),
    }


def dumps(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(report))


# -- figures ----------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_run_figures(report, directory):
    """Task iterations/misses and per-pattern traffic; returns written paths."""
    plt = _pyplot()
    os.makedirs(directory, exist_ok=True)
    written = []

    tasks = report["tasks"]
    fig, ax = plt.subplots(figsize=(8, 4))
    names = [t["task"] for t in tasks]
    xs = range(len(names))
    ax.bar([x - 0.2 for x in xs], [t["iterations"] for t in tasks], width=0.4, label="iterations")
    ax.bar([x + 0.2 for x in xs], [t["deadlineMisses"] for t in tasks], width=0.4, label="deadline misses")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_title(f"Tasks over {report['untilMs']} ms ({report['clock']} clock)")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(directory, "run_tasks.png")
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    pats = sorted(report["patterns"])
    ax.bar(pats, [report["patterns"][p] for p in pats])
    ax.set_ylabel("deliveries")
    ax.set_title("Traffic per interaction pattern")
    fig.tight_layout()
    path = os.path.join(directory, "run_patterns.png")
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)
    return written


def render_analysis_figures(report, directory):
    """Response time against period for every analyzed task, one figure per platform."""
    plt = _pyplot()
    os.makedirs(directory, exist_ok=True)
    written = []
    for entry in report["platforms"]:
        tasks = entry["tasks"]
        fig, ax = plt.subplots(figsize=(7, 4))
        names = [t["name"] for t in tasks]
        xs = range(len(names))
        ax.bar([x - 0.2 for x in xs], [t["periodMs"] for t in tasks], width=0.4, label="period (deadline)")
        ax.bar(
            [x + 0.2 for x in xs],
            [t["responseMs"] if t["responseMs"] is not None else t["periodMs"] for t in tasks],
            width=0.4,
            label="worst-case response",
            color=["tab:orange" if t["responseMs"] is not None else "tab:red" for t in tasks],
        )
        ax.set_xticks(list(xs))
        ax.set_xticklabels(names, rotation=30, ha="right")
        ax.set_ylabel("ms")
        ax.set_title(f"{entry['platform']}: U={entry['utilization']:.3f}")
        ax.legend()
        fig.tight_layout()
        path = os.path.join(directory, f"analysis_{entry['platform']}.png")
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)
    return written
