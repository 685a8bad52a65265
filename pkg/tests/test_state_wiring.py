import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harness import CONSUMER, GATED, PROVIDER, echo, wiring_stress
from smartmars.errors import (
    Disconnected,
    Incompatible,
    ServiceDeactivated,
    TypeMismatch,
    UnknownEndpoint,
    UnknownKey,
    UnknownState,
)
from smartmars.model import NEUTRAL
from smartmars.patterns import make
from smartmars.system import System


@pytest.fixture
def gated(vclock):
    system = System(vclock)
    g = system.add("g", GATED)
    g["q"].register_handler(lambda r: r)
    system.add("c", CONSUMER)
    system.connect("c.q", "g.q")
    return vclock, system, g


def _query(clock, port, timeout_ms=...):
    out = {}

    def body():
        try:
            out["v"] = port.query(make("Tagged", tag=1), timeout_ms=timeout_ms)
        except Exception as exc:  # noqa: BLE001
            out["v"] = exc
        out["at"] = clock.now()

    f = clock.spawn(body)
    clock.wait_for(lambda: f.done)
    return out["v"], out["at"]


def test_neutral_rejects_bound_ports(gated):
    clock, system, g = gated
    assert system.state_of("g") == NEUTRAL
    value, _ = _query(clock, system["c"]["q"])
    assert isinstance(value, ServiceDeactivated)


def test_activate_then_accept(gated):
    clock, system, g = gated
    entered = []
    g.state.on_entry("active", lambda: entered.append(clock.now()))
    assert system.set_state("g", "active") is True
    assert entered == [0]
    value, _ = _query(clock, system["c"]["q"])
    assert value == make("Tagged", tag=1)


def test_back_to_neutral_rejects(gated):
    clock, system, g = gated
    system.set_state("g", "active")
    system.set_state("g", NEUTRAL)
    value, _ = _query(clock, system["c"]["q"])
    assert isinstance(value, ServiceDeactivated)


def test_deactivation_unblocks_pending_call(vclock):
    system = System(vclock)
    g = system.add("g", GATED)
    g["q"].register_handler(lambda r, resp: None, deferred=True)
    system.add("c", CONSUMER)
    system.connect("c.q", "g.q")
    system.set_state("g", "active")
    vclock.call_at(40, lambda: vclock.spawn(lambda: system.set_state("g", "idle")))
    value, at = _query(vclock, system["c"]["q"], timeout_ms=None)
    assert isinstance(value, ServiceDeactivated)
    assert at == 40


def test_unbound_port_always_active(gated):
    clock, system, g = gated
    for state in ("active", "idle", NEUTRAL):
        system.set_state("g", state)
        assert g["free"].active


def test_unknown_state(gated):
    clock, system, g = gated
    with pytest.raises(UnknownState):
        system.set_state("g", "flying")


def test_entry_exit_pairing(gated):
    clock, system, g = gated
    for s in ("active", "idle", "active", NEUTRAL, "idle"):
        system.set_state("g", s)
    for s in g.state.main_states:
        assert g.state.balance(s) == (1 if s == g.state.current else 0)


def test_set_state_fifo(vclock):
    system = System(vclock)
    g = system.add("g", GATED)
    log = []
    g.state.on_entry("active", lambda: (log.append("enter active"), vclock.sleep(30)))
    g.state.on_exit("active", lambda: log.append("exit active"))
    g.state.on_entry("idle", lambda: log.append("enter idle"))
    a = vclock.spawn(lambda: system.set_state("g", "active"))
    b = vclock.spawn(lambda: system.set_state("g", "idle"))
    vclock.wait_for(lambda: a.done and b.done)
    assert log == ["enter active", "exit active", "enter idle"]
    assert system.state_of("g") == "idle"


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["active", "idle", NEUTRAL]), max_size=12))
def test_ports_follow_state(states):
    from smartmars.clock import VirtualClock

    clock = VirtualClock()
    try:
        system = System(clock)
        g = system.add("g", GATED)
        for s in states:
            system.set_state("g", s)
            bound_ok = s == "active"
            assert g["q"].active is bound_ok and g["p"].active is bound_ok
            assert g["free"].active
        for s in g.state.main_states:
            assert g.state.balance(s) == (1 if s == g.state.current else 0)
    finally:
        clock.close()


# -- wiring --------------------------------------------------------------------


def test_pattern_mismatch_incompatible(vclock):
    system = System(vclock)
    system.add("p", PROVIDER)
    system.add("c", CONSUMER)
    with pytest.raises(Incompatible) as info:
        system.connect("c.q", "p.p")
    assert "pattern" in str(info.value)
    with pytest.raises(Incompatible):
        system.connect("c.o", "p.s")


def test_unknown_endpoint(vclock):
    system = System(vclock)
    system.add("c", CONSUMER)
    with pytest.raises(UnknownEndpoint):
        system.connect("c.q", "nobody.q")
    with pytest.raises(UnknownEndpoint):
        system.disconnect("c.nope")
    with pytest.raises(UnknownEndpoint):
        system.connect("c-q", "x.q")


def test_rewire_fails_pending_then_routes_to_new(vclock):
    system = System(vclock)
    old = system.add("old", PROVIDER)
    new = system.add("new", PROVIDER)
    old["q"].register_handler(lambda r, resp: None, deferred=True)
    new["q"].register_handler(lambda r: make("Tagged", tag=r["tag"] + 100))
    c = system.add("c", CONSUMER)
    system.connect("c.q", "old.q")
    vclock.call_at(10, lambda: system.connect("c.q", "new.q"))
    value, at = _query(vclock, c["q"], timeout_ms=None)
    assert isinstance(value, Disconnected) and at == 10
    value, _ = _query(vclock, c["q"])
    assert value["tag"] == 101
    assert system.wiring()["c.q"] == "new.q"


def test_disconnect_three_blocked(vclock):
    system = System(vclock)
    p = system.add("p", PROVIDER)
    p["q"].register_handler(lambda r, resp: None, deferred=True)
    c = system.add("c", CONSUMER)
    system.connect("c.q", "p.q")
    results = []

    def caller():
        try:
            c["q"].query(make("Tagged", tag=0), timeout_ms=None)
        except Disconnected:
            results.append(vclock.now())

    fibers = [vclock.spawn(caller) for _ in range(3)]
    vclock.call_at(25, lambda: system.disconnect("c.q"))
    vclock.wait_for(lambda: all(f.done for f in fibers))
    assert results == [25, 25, 25]
    assert system.blocked_calls() == 0


def test_disconnect_idempotent(vclock):
    system = System(vclock)
    system.add("c", CONSUMER)
    assert system.disconnect("c.q") is True
    assert system.disconnect("c.q") is True
    assert system.wiring()["c.q"] is None


def test_provider_destroyed_while_connecting(vclock):
    system = System(vclock)
    p = system.add("p", PROVIDER)
    p["q"].register_handler(lambda r, resp: None, deferred=True)
    c = system.add("c", CONSUMER)
    outcomes = []

    def connector():
        try:
            system.connect("c.q", "p.q")
            outcomes.append("connected")
            c["q"].query(make("Tagged", tag=1), timeout_ms=None)
        except (Incompatible, Disconnected) as exc:
            outcomes.append(type(exc).__name__)

    f = vclock.spawn(connector)
    vclock.spawn(lambda: system.remove("p"))
    vclock.wait_for(lambda: f.done)
    assert outcomes in (["Incompatible"], ["connected", "Disconnected"])
    with pytest.raises(Incompatible):
        system.connect("c.q", "p.q")
    assert system.blocked_calls() == 0


def test_remove_provider_unblocks_clients(vclock):
    system = System(vclock)
    p = system.add("p", PROVIDER)
    p["q"].register_handler(lambda r, resp: None, deferred=True)
    c = system.add("c", CONSUMER)
    system.connect("c.q", "p.q")
    vclock.call_at(5, lambda: system.remove("p"))
    value, at = _query(vclock, c["q"], timeout_ms=None)
    assert isinstance(value, Disconnected) and at == 5
    assert system.wiring()["c.q"] is None


def test_no_call_routed_after_rewire(vclock):
    system = System(vclock)
    a = system.add("a", PROVIDER)
    b = system.add("b", PROVIDER)
    hits = {"a": 0, "b": 0}
    a["q"].register_handler(lambda r: (hits.__setitem__("a", hits["a"] + 1), r)[1])
    b["q"].register_handler(lambda r: (hits.__setitem__("b", hits["b"] + 1), r)[1])
    c = system.add("c", CONSUMER)
    system.connect("c.q", "a.q")
    _query(vclock, c["q"])
    system.connect("c.q", "b.q")
    for _ in range(5):
        _query(vclock, c["q"])
    assert hits == {"a": 1, "b": 5}


# -- params --------------------------------------------------------------------


def test_set_param(vclock):
    system = System(vclock)
    p = system.add("p", PROVIDER)
    seen = []
    p.params.on_change(lambda k, v: seen.append((k, v)))
    assert system.set_param("p", "gain", 3) is True
    assert seen == [("gain", 3)] and p.params["gain"] == 3
    with pytest.raises(UnknownKey):
        system.set_param("p", "nope", 1)
    with pytest.raises(TypeMismatch):
        system.set_param("p", "gain", "three")
    with pytest.raises(TypeMismatch):
        system.set_param("p", "gain", True)


# -- liveness ------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(40))
def test_stress_no_leaks(seed):
    blocked, unfinished, overlong = wiring_stress(seed)
    assert blocked == 0 and unfinished == [] and overlong == []


def test_echo_helper_smoke(vclock):
    system = System(vclock)
    p = system.add("p", PROVIDER)
    echo(p)
    c = system.add("c", CONSUMER)
    system.connect("c.q", "p.q")
    assert _query(vclock, c["q"])[0]["tag"] == 1
