"""Command line: validate, transform, check, analyze, export, run.

Exit codes: 0 ok, 1 semantic failure (violations, unschedulable), 2 input or
system error (unreadable or malformed files, run refused).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .analysis import FORMATS, export_analysis_model
from .clock import RealClock, VirtualClock
from .deployment import check_deployment, deployment_report, extract_analysis_model, transform
from .errors import ModelError, SmartMarsError, TransformError, UnknownBehavior
from .model import parse_document, validate_deployment, validate_pim, validate_platform
from .report import (
    analysis_report,
    dumps,
    render_analysis_figures,
    render_run_figures,
    run_report,
    write_report,
)

log = logging.getLogger("smartmars")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load(paths):
    texts = []
    for p in paths:
        try:
            with open(p, encoding="utf-8") as fh:
                texts.append(fh.read())
        except OSError as exc:
            raise InputError(f"{p}: cannot read: {exc.strerror or exc}") from None
    try:
        return parse_document(*texts)
    except ModelError as exc:
        where = paths[0] if len(paths) == 1 else "+".join(paths)
        raise InputError(f"{where}: {exc}") from None


def _deployment(doc):
    if doc.deployment is None:
        raise InputError("no deployment block in the given files")
    return doc.deployment


def _violations(doc):
    if doc.deployment is not None:
        return validate_deployment(doc.deployment)
    out = []
    for c in doc.components:
        out += validate_pim(c)
    for p in doc.platforms:
        out += validate_platform(p)
    return sorted(set(out))


def _print_violations(violations, out):
    for v in violations:
        print(f"violation [{v.code}] {v.element}: {v.message}", file=out)


def cmd_validate(args, out):
    doc = _load(args.paths)
    violations = _violations(doc)
    _print_violations(violations, out)
    if violations:
        print(f"{len(violations)} violation(s)", file=out)
        return EXIT_FAIL
    parts = [f"{len(doc.types)} commobjects", f"{len(doc.components)} components", f"{len(doc.platforms)} platforms"]
    if doc.deployment is not None:
        parts.append(f"deployment with {len(doc.deployment.instances)} instances")
    print("valid: " + ", ".join(parts), file=out)
    return EXIT_OK


def _transform(args, out):
    doc = _load(args.paths)
    try:
        return transform(_deployment(doc))
    except TransformError as exc:
        _print_violations(exc.issues, out)
        print(f"transform failed: {len(exc.issues)} problem(s)", file=out)
        return None


def cmd_transform(args, out):
    psm = _transform(args, out)
    if psm is None:
        return EXIT_FAIL
    for inst, task, plat, mapping in psm.mapping_table():
        print(f"{inst}.{task} on {plat}: {mapping}", file=out)
    print(f"transformed: {len(psm.tasks)} tasks, {len(psm.endpoints)} endpoints", file=out)
    return EXIT_OK


def cmd_check(args, out):
    psm = _transform(args, out)
    if psm is None:
        return EXIT_FAIL
    violations = check_deployment(psm)
    out.write(deployment_report(psm, violations, extract_analysis_model(psm)))
    return EXIT_FAIL if violations else EXIT_OK


def _write(text, path, out):
    if path in (None, "-"):
        out.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_export(args, out):
    psm = _transform(args, out)
    if psm is None:
        return EXIT_FAIL
    _write(export_analysis_model(extract_analysis_model(psm).values(), args.format), args.output, out)
    return EXIT_OK


def cmd_analyze(args, out):
    psm = _transform(args, out)
    if psm is None:
        return EXIT_INPUT
    sets = extract_analysis_model(psm)
    rep = analysis_report(sets, include_emulated=args.include_emulated, oracle=args.oracle)
    for entry in rep["platforms"]:
        n = len(entry["tasks"])
        bound = "n/a" if entry["utilizationBound"] is None else f"{entry['utilizationBound']:.6f}"
        line = (f"platform {entry['platform']}: {n} tasks, U={entry['utilization']:.6f}, bound={bound}, "
                f"utilization test {entry['boundVerdict']}, "
                f"response times {'schedulable' if entry['schedulable'] else 'UNSCHEDULABLE'}")
        if entry["rmAssigned"]:
            line += " (rate-monotonic priorities assigned)"
        print(line, file=out)
        for t in entry["tasks"]:
            r = "unbounded" if t["responseMs"] is None else t["responseMs"]
            flag = " emulated" if t["emulated"] else ""
            print(f"  task {t['name']} C={t['wcetMs']} T={t['periodMs']} priority={t['priority']} R={r}{flag}",
                  file=out)
    status = EXIT_OK if rep["schedulable"] else EXIT_FAIL
    if args.oracle:
        bad = [e["platform"] for e in rep["platforms"] if not e["oracle"]["agrees"]]
        if bad:
            print(f"oracle DISAGREES on {', '.join(bad)}", file=out)
            status = EXIT_FAIL
        else:
            print("oracle agrees", file=out)
    print(f"verdict: {'schedulable' if rep['schedulable'] else 'unschedulable'}", file=out)
    if args.format:
        _write(export_analysis_model(sets.values(), args.format), args.output, out)
    if args.json:
        write_report(rep, args.json)
    if args.figures:
        for path in render_analysis_figures(rep, args.figures):
            print(f"figure {path}", file=out)
    return status


def cmd_run(args, out):
    from .scenario import default_registry, run_deployment

    doc = _load(args.paths)
    deployment = _deployment(doc)
    try:
        psm = transform(deployment)
    except TransformError as exc:
        _print_violations(exc.issues, out)
        print("run refused: deployment does not transform", file=out)
        return EXIT_INPUT
    violations = check_deployment(psm)
    if violations:
        _print_violations(violations, out)
        print("run refused: deployment checks failed", file=out)
        return EXIT_INPUT
    registry = default_registry()
    if args.real:
        clock = RealClock()
        until = clock.now() + (args.real_for if deployment.instances else 0)
        mode = "real"
    else:
        clock = VirtualClock()
        until = args.virtual_until
        mode = "virtual"
    tcp = deployment.transport == "tcp"
    if tcp and not args.real:
        log.info("tcp transport needs --real; running in-process")
        tcp = False
    try:
        result = run_deployment(deployment, registry, clock, until, masters=args.master, tcp=tcp)
    except UnknownBehavior as exc:
        clock.close()
        print(f"run refused: {exc}", file=out)
        return EXIT_INPUT
    rep = run_report(result, mode)
    if mode == "real":
        # wall-clock readings differ between runs; report the horizon relative to start
        rep["untilMs"] = args.real_for
    if args.report == "-":
        out.write(dumps(rep))
    elif args.report:
        write_report(rep, args.report)
    print(f"ran {len(deployment.instances)} instances to t={rep['endedAtMs']} ms on the {mode} clock", file=out)
    for t in rep["tasks"]:
        print(f"  task {t['task']} {t['mapping']}: {t['iterations']} iterations, {t['deadlineMisses']} misses",
              file=out)
    for pattern, n in rep["patterns"].items():
        print(f"  {pattern}: {n} deliveries", file=out)
    print(f"blocked calls at end: {rep['blockedCalls']}", file=out)
    if args.figures:
        for path in render_run_figures(rep, args.figures):
            print(f"figure {path}", file=out)
    failed = any(t["error"] for t in rep["tasks"])
    return EXIT_FAIL if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="smartmars", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def paths(p):
        p.add_argument("paths", nargs="+", help="model files, read as one document")

    p = sub.add_parser("validate", help="check model invariants")
    paths(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("transform", help="map tasks onto platforms")
    paths(p)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("check", help="cross-check constraints and QoS against platforms")
    paths(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("analyze", help="schedulability analysis per platform")
    paths(p)
    p.add_argument("--format", choices=FORMATS, help="also write the analysis model in this format")
    p.add_argument("--output", "-o", help="file for --format (default stdout)")
    p.add_argument("--oracle", action="store_true", help="cross-check with a hyperperiod simulation")
    p.add_argument("--include-emulated", action="store_true", help="analyze emulated periodic tasks too")
    p.add_argument("--json", help="write the analysis report as JSON")
    p.add_argument("--figures", help="directory for response-time figures")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("export", help="write the analysis model")
    paths(p)
    p.add_argument("--format", choices=FORMATS, default="native")
    p.add_argument("--output", "-o")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("run", help="execute a deployment in-process")
    paths(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--virtual-until", type=int, default=5000, metavar="MS",
                      help="run on the virtual clock up to this time (default 5000)")
    mode.add_argument("--real", action="store_true", help="run on the wall clock (Ctrl-C stops)")
    p.add_argument("--real-for", type=int, default=5000, metavar="MS", help="wall-clock duration with --real")
    p.add_argument("--master", action="append", default=[], metavar="NAME",
                   help="master script to run alongside (e.g. swap-base)")
    p.add_argument("--report", help="write the JSON run report here ('-' for stdout)")
    p.add_argument("--figures", help="directory for run figures")
    p.set_defaults(fn=cmd_run)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    level = os.environ.get("SMARTMARS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SmartMarsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
