import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harness import LAB
from smartmars.errors import DuplicateName, ModelSyntaxError, UnresolvedReference
from smartmars.model import (
    ComponentModel,
    DeploymentModel,
    Direction,
    Pattern,
    PlatformDescription,
    parse_document,
    parse_model,
    serialize_model,
    validate_deployment,
    validate_pim,
    validate_platform,
)
from smartmars.scenario.navigation import fixture_text

MINIMAL = """
commobject Cmd { v: float64; }
component Sink { port cmd: send provided req=Cmd; }
"""


def test_minimal_component():
    m = parse_model(MINIMAL)
    assert isinstance(m, ComponentModel)
    assert len(m.ports) == 1 and len(m.tasks) == 0
    port = m.ports[0]
    assert (port.pattern, port.direction, port.request_type) == (Pattern.SEND, Direction.PROVIDED, "Cmd")
    assert validate_pim(m) == []


def test_unresolved_type():
    with pytest.raises(UnresolvedReference) as info:
        parse_model("component A { port p: send provided req=Nope; }")
    assert info.value.name == "Nope"


def test_duplicate_type_name():
    with pytest.raises(DuplicateName):
        parse_document("commobject A { x: int64; }\ncommobject A { y: int64; }")


def test_syntax_error_position():
    with pytest.raises(ModelSyntaxError) as info:
        parse_model("component A {\n  port p send provided;\n}")
    assert info.value.line == 2
    assert info.value.col > 1


def test_comments_and_whitespace_ignored():
    a = parse_model(MINIMAL)
    b = parse_model("# leading\n" + MINIMAL.replace(";", " ;  # trailing\n"))
    assert a == b


def test_non_utf8_rejected():
    with pytest.raises(ModelSyntaxError):
        parse_model(b"component \xff {}")


def test_base_model_cycle_round_trip():
    doc = parse_document(fixture_text())
    base = next(c for c in doc.components if c.name == "BaseSim")
    port = next(p for p in base.ports if p.name == "basestate")
    assert port.qos.cycle_ms == 100
    again = parse_model(serialize_model(base))
    assert again == base


def test_realtime_task_must_be_periodic():
    m = parse_model("component A { task t realtime=true periodic=false wcetMs=1; }")
    assert [v.message for v in validate_pim(m)] == ["realtime task must be periodic"]


def test_send_is_one_way():
    m = parse_model("commobject C { x: int64; }\ncomponent A { port p: send provided req=C ans=C; }")
    violations = validate_pim(m)
    assert len(violations) == 1
    assert violations[0].message.startswith("send is one-way")
    assert violations[0].element == "component A port p"


def test_pattern_type_rules():
    text = """
    commobject C { x: int64; }
    component A {
      port q: query provided req=C;
      port p: pushnewest provided req=C ans=C;
      port e: event provided ans=C;
      port t: pushtimed provided ans=C;
    }
    """
    messages = {(v.element, v.message) for v in validate_pim(parse_model(text))}
    assert ("component A port q", "query needs an answer type") in messages
    assert ("component A port p", "pushnewest takes no request type") in messages
    assert ("component A port e", "event needs a request type") in messages
    assert ("component A port t", "pushtimed needs cycleMs") in messages


def test_navigation_models_valid():
    doc = parse_document(fixture_text())
    for c in doc.components:
        assert validate_pim(c) == [], c.name
    for p in doc.platforms:
        assert validate_platform(p) == []
    assert validate_deployment(doc.deployment) == []


def test_recursive_nesting_rejected():
    doc = parse_document("commobject A { b: B; }\ncommobject B { a: list<A>; }\ncomponent X { port p: send provided req=A; }")
    messages = [v.message for v in validate_pim(doc.components[0])]
    assert "recursive nesting of communication objects" in messages


def test_platform_memory_positive():
    assert validate_platform(PlatformDescription("p", False, 0))[0].message == "memoryMB must be positive"


def test_empty_deployment_serializes():
    text = serialize_model(DeploymentModel())
    assert text == b"deployment {\n}\n"
    assert parse_model(text) == DeploymentModel()


def test_canonical_is_fixpoint():
    for source in (fixture_text(), LAB):
        once = serialize_model(parse_document(source))
        assert serialize_model(parse_document(once)) == once


def test_every_violation_names_one_element():
    text = """
    commobject C { x: int64; }
    component A {
      port p: send provided req=C ans=C;
      port q: query provided req=C;
      port r: pushnewest provided ans=C timeoutMs=5;
      task t realtime=true periodic=false;
      task u periodic=true;
      requires memoryMB=0;
    }
    """
    doc = parse_document(text)
    violations = validate_pim(doc.components[0])
    assert len(violations) >= 6
    for v in violations:
        assert v.element and ":" not in v.element


# -- generated models ---------------------------------------------------------

_ident = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True).filter(
    lambda s: s not in {"true", "false", "none", "list", "port", "task", "param", "state", "requires"}
)
_patterns = st.sampled_from(["send", "query", "pushnewest", "pushtimed", "event"])


@st.composite
def component_texts(draw, valid=True):
    ports = draw(st.lists(st.tuples(_ident, _patterns, st.booleans(), st.integers(1, 500)),
                          max_size=6, unique_by=lambda p: p[0]))
    tasks = draw(st.lists(st.tuples(_ident, st.booleans(), st.integers(1, 100), st.integers(0, 100),
                                    st.one_of(st.none(), st.integers(-5, 5))),
                          max_size=4, unique_by=lambda t: t[0]))
    lines = ["commobject Msg { a: int64; b: list<string>; c: Inner; }", "commobject Inner { f: float64; g: bytes; }",
             "component Gen {"]
    for name, pattern, provided, n in ports:
        d = "provided" if provided else "required"
        attrs = {
            "send": "req=Msg",
            "query": f"req=Msg ans=Inner timeoutMs={n}",
            "pushnewest": "ans=Msg",
            "pushtimed": f"ans=Msg cycleMs={n}",
            "event": f"req=Inner ans=Msg timeoutMs={'none' if n % 2 else n}",
        }[pattern]
        lines.append(f"  port {name}: {pattern} {d} {attrs};")
    for name, rt, period, extra, prio in tasks:
        wcet = max(1, min(period, extra)) if rt else None
        t = f"  task {name} realtime={'true' if rt else 'false'} periodic=true periodMs={period}"
        if wcet is not None:
            t += f" wcetMs={wcet}"
        if prio is not None:
            t += f" priority={prio}"
        lines.append(t + ";")
    if draw(st.booleans()):
        lines.append("  requires realtime;")
    if draw(st.booleans()):
        lines.append(f"  requires device serial x{draw(st.integers(1, 3))};")
    lines.append("}")
    return "\n".join(lines)


@settings(max_examples=100, deadline=None)
@given(component_texts())
def test_round_trip_generated(text):
    m = parse_model(text)
    assert validate_pim(m) == []
    data = serialize_model(m)
    assert parse_model(data) == m
    assert serialize_model(parse_model(data)) == data


@settings(max_examples=60, deadline=None)
@given(component_texts(), st.randoms(use_true_random=False))
def test_violations_independent_of_declaration_order(text, rnd):
    # break the model a little so there is something to report
    broken = text.replace("requires realtime;", "requires memoryMB=0;").replace(
        "component Gen {", "component Gen {\n  task broken_task realtime=true periodic=false;")
    lines = broken.splitlines()
    head, members, tail = lines[:3], lines[3:-1], lines[-1:]
    shuffled = members[:]
    rnd.shuffle(shuffled)
    a = validate_pim(parse_model("\n".join(head + members + tail)))
    b = validate_pim(parse_model("\n".join(head + shuffled + tail)))
    assert sorted(a) == sorted(b)
    assert validate_pim(parse_model(broken)) == validate_pim(parse_model(broken))
