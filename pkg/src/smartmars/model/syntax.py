"""Parser for the block-structured model format (see docs/model-format.md)."""
from __future__ import annotations

import re
from dataclasses import replace
from typing import NamedTuple, Union

from ..errors import DuplicateName, ModelError, ModelSyntaxError, UnresolvedReference
from .core import (
    PARAM_TYPES,
    CommObjectType,
    ComponentModel,
    DeploymentModel,
    Direction,
    Instance,
    ModelDocument,
    ParamDecl,
    Pattern,
    PlatformDescription,
    QosParams,
    RequiresDevice,
    RequiresMemoryMB,
    RequiresRealtime,
    ServicePortSpec,
    StateDecl,
    TaskSpec,
    TimeoutOverride,
    Wire,
    referenced_object_types,
)


class Token(NamedTuple):
    kind: str  # ident | int | punct | eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)"
    r"|(?P<arrow>->)|(?P<int>-?[0-9]+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[{};:=.,<>])"
)


def tokenize(text: str):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ModelSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "arrow":
            tokens.append(Token("punct", "->", line, col))
        elif kind in ("int", "ident", "punct"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_PORT_ATTRS = {
    "req": "ident",
    "ans": "ident",
    "cycleMs": "int",
    "timeoutMs": "int|none",
    "minHandlingMs": "int",
    "cycleCostMs": "int",
}
_TASK_ATTRS = {
    "realtime": "bool",
    "periodic": "bool",
    "periodMs": "int",
    "wcetMs": "int",
    "priority": "int",
}


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0
        self.types = []
        self.components = []
        self.platforms = []
        self.deployments = []

    # token helpers

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ModelSyntaxError(message, tok.line, tok.col)

    def next(self):
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.tok
        if tok.kind == "eof" or tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}")
        return self.next()

    def accept(self, text):
        if self.tok.kind != "eof" and self.tok.text == text:
            return self.next()
        return None

    def ident(self, what="identifier"):
        tok = self.tok
        if tok.kind != "ident":
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.next().text

    def integer(self):
        tok = self.tok
        if tok.kind != "int":
            raise self.error(f"expected integer, found {tok.text or 'end of input'!r}")
        return int(self.next().text)

    def boolean(self):
        tok = self.tok
        if tok.text not in ("true", "false"):
            raise self.error(f"expected true or false, found {tok.text or 'end of input'!r}")
        self.next()
        return tok.text == "true"

    def attrs(self, schema, terminator=";"):
        out = {}
        while self.tok.text != terminator:
            tok = self.tok
            key = self.ident("attribute")
            if key not in schema:
                raise self.error(f"unknown attribute {key!r}", tok)
            if key in out:
                raise self.error(f"attribute {key!r} given twice", tok)
            self.expect("=")
            kind = schema[key]
            if kind == "bool":
                out[key] = self.boolean()
            elif kind == "int":
                out[key] = self.integer()
            elif kind == "int|none":
                if self.accept("none"):
                    out[key] = None
                else:
                    out[key] = self.integer()
            else:
                out[key] = self.ident()
        self.expect(terminator)
        return out

    # grammar

    def document(self):
        while self.tok.kind != "eof":
            tok = self.tok
            kw = self.ident("block keyword")
            if kw == "commobject":
                self.types.append(self.commobject())
            elif kw == "component":
                self.components.append(self.component())
            elif kw == "platform":
                self.platforms.append(self.platform())
            elif kw == "deployment":
                self.deployments.append(self.deployment())
            else:
                raise self.error(f"unknown block {kw!r}", tok)

    def type_expr(self):
        tok = self.tok
        name = self.ident("type")
        if name == "list" and self.accept("<"):
            inner = self.type_expr()
            self.expect(">")
            return f"list<{inner}>"
        if name == "list":
            raise self.error("expected '<' after list", tok)
        return name

    def commobject(self):
        name = self.ident("commobject name")
        self.expect("{")
        fields = []
        while not self.accept("}"):
            fname = self.ident("field name")
            self.expect(":")
            fields.append((fname, self.type_expr()))
            self.expect(";")
        return CommObjectType(name, tuple(fields))

    def component(self):
        name = self.ident("component name")
        self.expect("{")
        ports, tasks, params, constraints, states = [], [], [], [], []
        while not self.accept("}"):
            tok = self.tok
            kw = self.ident("component member")
            if kw == "port":
                ports.append(self.port())
            elif kw == "task":
                tasks.append(self.task())
            elif kw == "param":
                key = self.ident("param key")
                self.expect(":")
                t = self.tok
                vtype = self.ident("param type")
                if vtype not in PARAM_TYPES:
                    raise self.error(f"param type must be one of {', '.join(PARAM_TYPES)}", t)
                self.expect(";")
                params.append(ParamDecl(key, vtype))
            elif kw == "state":
                sname = self.ident("state name")
                binds = []
                if self.accept("binds"):
                    binds.append(self.ident("port name"))
                    while self.accept(","):
                        binds.append(self.ident("port name"))
                self.expect(";")
                states.append(StateDecl(sname, tuple(binds)))
            elif kw == "requires":
                constraints.append(self.requires())
            else:
                raise self.error(f"unknown component member {kw!r}", tok)
        return ComponentModel(name, tuple(ports), tuple(tasks), tuple(params),
                              tuple(constraints), tuple(states))

    def port(self):
        name = self.ident("port name")
        self.expect(":")
        tok = self.tok
        pname = self.ident("pattern")
        try:
            pattern = Pattern(pname)
        except ValueError:
            raise self.error(f"unknown pattern {pname!r}", tok) from None
        tok = self.tok
        dname = self.ident("provided or required")
        try:
            direction = Direction(dname)
        except ValueError:
            raise self.error("expected 'provided' or 'required'", tok) from None
        a = self.attrs(_PORT_ATTRS)
        qos = QosParams(
            cycle_ms=a.get("cycleMs"),
            timeout_ms=a.get("timeoutMs"),
            min_handling_ms=a.get("minHandlingMs"),
            cycle_cost_ms=a.get("cycleCostMs"),
        )
        return ServicePortSpec(name, pattern, direction, a.get("req"), a.get("ans"), qos)

    def task(self):
        name = self.ident("task name")
        a = self.attrs(_TASK_ATTRS)
        return TaskSpec(
            name,
            is_realtime=a.get("realtime", False),
            is_periodic=a.get("periodic", False),
            period_ms=a.get("periodMs"),
            wcet_ms=a.get("wcetMs"),
            priority=a.get("priority"),
        )

    def requires(self):
        tok = self.tok
        kind = self.ident("constraint")
        if kind == "realtime":
            self.expect(";")
            return RequiresRealtime()
        if kind == "device":
            cls = self.ident("device class")
            count = self.multiplicity()
            self.expect(";")
            return RequiresDevice(cls, count)
        if kind == "memoryMB":
            self.expect("=")
            mb = self.integer()
            self.expect(";")
            return RequiresMemoryMB(mb)
        raise self.error(f"unknown constraint {kind!r}", tok)

    def multiplicity(self):
        tok = self.tok
        if tok.kind != "ident" or not re.fullmatch(r"x[0-9]+", tok.text):
            raise self.error("expected device count like x1", tok)
        self.next()
        return int(tok.text[1:])

    def platform(self):
        name = self.ident("platform name")
        self.expect("{")
        seen = {}
        devices = []
        while not self.accept("}"):
            tok = self.tok
            kw = self.ident("platform member")
            if kw == "device":
                devices.append((self.ident("device class"), self.multiplicity()))
            elif kw in ("realtime", "memoryMB", "cpus"):
                if kw in seen:
                    raise self.error(f"{kw!r} given twice", tok)
                self.expect("=")
                seen[kw] = self.boolean() if kw == "realtime" else self.integer()
            else:
                raise self.error(f"unknown platform member {kw!r}", tok)
            self.expect(";")
        return PlatformDescription(
            name,
            supports_realtime=seen.get("realtime", False),
            memory_mb=seen.get("memoryMB", 0),
            devices=tuple(devices),
            cpu_count=seen.get("cpus", 1),
        )

    def endpoint(self):
        inst = self.ident("instance name")
        self.expect(".")
        return inst, self.ident("port name")

    def deployment(self):
        self.expect("{")
        instances, wires, overrides = [], [], []
        transport = None
        while not self.accept("}"):
            tok = self.tok
            kw = self.ident("deployment member")
            if kw == "instance":
                iname = self.ident("instance name")
                self.expect(":")
                comp = self.ident("component name")
                self.expect("on")
                plat = self.ident("platform name")
                instances.append(Instance(iname, comp, plat))
            elif kw == "wire":
                fi, fp = self.endpoint()
                self.expect("->")
                ti, tp = self.endpoint()
                wires.append(Wire(fi, fp, ti, tp))
            elif kw == "override":
                inst, port = self.endpoint()
                a = self.attrs({"timeoutMs": "int|none"})
                if "timeoutMs" not in a:
                    raise self.error("override needs timeoutMs", tok)
                overrides.append(TimeoutOverride(inst, port, a["timeoutMs"]))
                continue
            elif kw == "transport":
                t = self.tok
                transport = self.ident("transport kind")
                if transport not in ("inproc", "tcp"):
                    raise self.error("transport must be inproc or tcp", t)
            else:
                raise self.error(f"unknown deployment member {kw!r}", tok)
            self.expect(";")
        return DeploymentModel(tuple(instances), tuple(wires), tuple(overrides),
                                      transport=transport or "inproc")


def _unique(names, where):
    seen = set()
    for n in names:
        if n in seen:
            raise DuplicateName(n, where)
        seen.add(n)


def _type_closure(roots, table):
    seen = set()

    def visit(name):
        if name in seen:
            return
        seen.add(name)
        t = table.get(name)
        if t is None:
            return
        for _, ftype in t.fields:
            for ref in referenced_object_types(ftype):
                visit(ref)

    for r in roots:
        visit(r)
    return seen


def _resolve(types, components, platforms, deployments):
    _unique([t.name for t in types], "commobject declarations")
    table = {t.name: t for t in types}
    for t in types:
        _unique([f for f, _ in t.fields], f"commobject {t.name}")
        for _, ftype in t.fields:
            for ref in referenced_object_types(ftype):
                if ref not in table:
                    raise UnresolvedReference(ref, f"commobject {t.name}")

    _unique([c.name for c in components], "component declarations")
    resolved = []
    for c in components:
        where = f"component {c.name}"
        _unique([p.name for p in c.ports], where)
        _unique([t.name for t in c.tasks], where)
        _unique([p.key for p in c.params], where)
        _unique([s.name for s in c.states], where)
        port_names = {p.name for p in c.ports}
        for p in c.ports:
            for ref in p.type_names():
                if ref not in table:
                    raise UnresolvedReference(ref, f"{where} port {p.name}")
        for s in c.states:
            for b in s.binds:
                if b not in port_names:
                    raise UnresolvedReference(b, f"{where} state {s.name}")
        needed = _type_closure([r for p in c.ports for r in p.type_names()], table)
        own = tuple(t for t in types if t.name in needed)
        resolved.append(replace(c, types=own))

    _unique([p.name for p in platforms], "platform declarations")

    if len(deployments) > 1:
        raise DuplicateName("deployment", "document")
    deployment = None
    if deployments:
        d = deployments[0]
        comps = {c.name: c for c in resolved}
        plats = {p.name for p in platforms}
        _unique([i.name for i in d.instances], "deployment")
        inst_comp = {}
        for i in d.instances:
            if i.component not in comps:
                raise UnresolvedReference(i.component, f"instance {i.name}")
            if i.platform not in plats:
                raise UnresolvedReference(i.platform, f"instance {i.name}")
            inst_comp[i.name] = comps[i.component]

        def check_endpoint(inst, port, what):
            if inst not in inst_comp:
                raise UnresolvedReference(inst, what)
            if port not in {p.name for p in inst_comp[inst].ports}:
                raise UnresolvedReference(f"{inst}.{port}", what)

        for w in d.wires:
            check_endpoint(w.from_instance, w.from_port, f"wire {w}")
            check_endpoint(w.to_instance, w.to_port, f"wire {w}")
        for o in d.overrides:
            check_endpoint(o.instance, o.port, "override")
        deployment = replace(d, components=tuple(resolved), platforms=tuple(platforms),
                             types=tuple(types))
    return ModelDocument(tuple(types), tuple(resolved), tuple(platforms), deployment)


def parse_document(*texts: Union[bytes, str]) -> ModelDocument:
    """Parse one or more model texts as a single document and resolve names."""
    types, components, platforms, deployments = [], [], [], []
    for text in texts:
        if isinstance(text, bytes):
            try:
                text = text.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ModelSyntaxError(f"input is not UTF-8 ({exc.reason})", 1, exc.start + 1) from None
        p = _Parser(text)
        p.document()
        types += p.types
        components += p.components
        platforms += p.platforms
        deployments += p.deployments
    return _resolve(types, components, platforms, deployments)


def parse_model(text: Union[bytes, str]):
    """Parse a model text and return its principal model.

    A document with a deployment block yields the DeploymentModel; otherwise a
    single component yields that ComponentModel and a lone platform its
    PlatformDescription.
    """
    doc = parse_document(text)
    if doc.deployment is not None:
        return doc.deployment
    if len(doc.components) == 1:
        return doc.components[0]
    if not doc.components and len(doc.platforms) == 1:
        return doc.platforms[0]
    raise ModelError(
        f"document holds {len(doc.components)} component(s) and {len(doc.platforms)} "
        "platform(s) without a deployment; use parse_document"
    )


__all__ = ["parse_document", "parse_model", "tokenize"]
