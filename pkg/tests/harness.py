"""Shared models and randomized drivers for the test suite."""
from __future__ import annotations

import math
import random

from smartmars.analysis import AnalysisTask, AnalysisTaskSet, hyperperiod, utilization
from smartmars.clock import VirtualClock
from smartmars.errors import (
    Disconnected,
    Incompatible,
    NotWired,
    QueueFull,
    ServiceDeactivated,
    Timeout,
    TypeMismatch,
    UnknownEndpoint,
    UnknownId,
)
from smartmars.model import parse_document
from smartmars.patterns import NO_EVENT, NO_UPDATE, EventMode, make
from smartmars.system import System

LAB = """
commobject Tagged { tag: int64; }
commobject Value { seq: int64; }
commobject Other { name: string; }

component Provider {
  port q: query provided req=Tagged ans=Tagged;
  port s: send provided req=Tagged;
  port p: pushnewest provided ans=Value;
  port t: pushtimed provided ans=Value cycleMs=100;
  port e: event provided req=Value ans=Value;
  param gain: int64;
  param label: string;
}

component Gated {
  port q: query provided req=Tagged ans=Tagged;
  port p: pushnewest provided ans=Value;
  port free: send provided req=Tagged;
  state active binds q, p;
  state idle;
}

component Consumer {
  port q: query required req=Tagged ans=Tagged timeoutMs=50;
  port s: send required req=Tagged;
  port p: pushnewest required ans=Value;
  port t: pushtimed required ans=Value cycleMs=100;
  port e: event required req=Value ans=Value timeoutMs=200;
  port o: send required req=Other;
}
"""

_DOC = parse_document(LAB)
PROVIDER, GATED, CONSUMER = _DOC.components


def lab_system(clock=None):
    clock = clock or VirtualClock()
    return clock, System(clock)


def wire_all(system, consumer, provider, ports=("q", "s", "p", "t", "e")):
    for p in ports:
        system.connect(f"{consumer}.{p}", f"{provider}.{p}")


def echo(provider):
    provider["q"].register_handler(lambda r: make("Tagged", tag=r["tag"]))


# -- randomized pattern trial -------------------------------------------------


class TrialFailure(AssertionError):
    pass


def pattern_trial(seed, ops=12):
    """One randomized interleaving of every pattern with injected faults.

    Returns a dict of observations; raises TrialFailure when an invariant
    breaks. Faults: handler exceptions, dropped answers, random disconnects
    with later reconnects, ill-typed sends.
    """
    rng = random.Random(seed)
    clock, system = lab_system()
    try:
        return _pattern_trial(rng, clock, system, ops)
    finally:
        clock.close()


def _pattern_trial(rng, clock, system, ops):
    prov = system.add("prov", PROVIDER)
    k = rng.randint(1, 3)
    names = [f"c{i}" for i in range(k)]
    for n in names:
        system.add(n, CONSUMER)
        wire_all(system, n, "prov")

    fail = []
    disconnects = {n: [] for n in names}
    received = []
    published = []

    def query_handler(req, responder):
        r = rng.random()
        if r < 0.1:
            raise RuntimeError("injected handler fault")
        if r < 0.2:
            return  # answer dropped
        clock.call_at(clock.now() + rng.randint(0, 60), lambda: responder.answer(make("Tagged", tag=req["tag"])))

    prov["q"].register_handler(query_handler, deferred=True)

    def send_handler(msg):
        if msg.type_name != "Tagged":
            fail.append(f"send handler got {msg.type_name}")
        received.append(msg["tag"])
        if rng.random() < 0.1:
            raise RuntimeError("injected send fault")

    prov["s"].register_handler(send_handler)
    prov["e"].register_handler(lambda p, st: st >= p["seq"], lambda p, st: make("Value", seq=st))

    tags = iter(range(1, 10**9))
    calls = []  # (kind, port, t0, t1, timeout, outcome)

    def record(kind, port, t0, timeout, outcome, since=None, strict=True):
        calls.append((kind, port, t0, clock.now(), timeout, outcome, t0 if since is None else since, strict))

    def querier(name):
        c = system[name]
        for _ in range(ops):
            clock.sleep(rng.randint(0, 40))
            tag = next(tags)
            timeout = rng.choice([..., 10, 30, 80])
            eff = 50 if timeout is ... else timeout
            t0 = since = clock.now()
            strict = True
            try:
                if rng.random() < 0.5:
                    ans = c["q"].query(make("Tagged", tag=tag), timeout_ms=timeout)
                else:
                    qid = c["q"].query_async(make("Tagged", tag=tag), timeout_ms=timeout)
                    if rng.random() < 0.5:
                        clock.sleep(rng.randint(0, 20))
                        # the caller only blocks for what is left of its deadline
                        t0, eff, strict = clock.now(), max(0, since + eff - clock.now()), False
                    ans = c["q"].query_receive(qid, wait=True)
                    try:
                        c["q"].query_receive(qid)
                        fail.append("query id consumed twice")
                    except UnknownId:
                        pass
                if ans["tag"] != tag:
                    fail.append(f"answer tag {ans['tag']} for request {tag}")
                record("query", f"{name}.q", t0, eff, "answer", since, strict)
            except (Timeout, Disconnected, NotWired, QueueFull) as exc:
                record("query", f"{name}.q", t0, eff, type(exc).__name__, since, strict)
            try:
                c["o"].send(make("Other", name="x"))
            except NotWired:
                pass
            try:
                c["s"].send(make("Other", name="wrong"))
                fail.append("ill-typed send accepted")
            except (TypeMismatch, NotWired):
                pass
            try:
                c["s"].send(make("Tagged", tag=tag))
            except (NotWired, QueueFull):
                pass

    def publisher():
        for seq in range(1, ops * 2 + 1):
            clock.sleep(rng.randint(0, 30))
            prov["p"].publish(make("Value", seq=seq))
            published.append(seq)
            prov["e"].put_state(seq)

    seen = {n: [] for n in names}

    def reader(name):
        c = system[name]
        for _ in range(ops):
            t0 = clock.now()
            timeout = rng.choice([20, 50])
            try:
                v = c["p"].get_update(wait=True, timeout_ms=timeout)
                seen[name].append(v["seq"])
                record("update", f"{name}.p", t0, timeout, "update")
            except (Timeout, Disconnected, NotWired) as exc:
                record("update", f"{name}.p", t0, timeout, type(exc).__name__)
                if isinstance(exc, NotWired):
                    clock.sleep(5)

    def eventer(name):
        c = system[name]
        for _ in range(max(1, ops // 3)):
            try:
                threshold = rng.randint(1, ops * 2)
                mode = rng.choice([EventMode.SINGLE, EventMode.CONTINUOUS])
                aid = c["e"].event_activate(make("Value", seq=threshold), mode)
            except NotWired:
                clock.sleep(10)
                continue
            since = clock.now()
            for _ in range(3):
                t0 = clock.now()
                try:
                    note = c["e"].event_get(aid, wait=True, timeout_ms=60)
                    if note["seq"] < threshold:
                        fail.append(f"event fired for {note['seq']} below threshold {threshold}")
                    record("event", f"{name}.e", t0, 60, "event", since, False)
                except (Timeout, Disconnected, UnknownId) as exc:
                    record("event", f"{name}.e", t0, 60, type(exc).__name__, since, False)
                    break

    def chaos():
        for _ in range(rng.randint(0, 4)):
            clock.sleep(rng.randint(5, 120))
            name = rng.choice(names)
            port = rng.choice("qpes")
            system.disconnect(f"{name}.{port}")
            disconnects[name].append((port, clock.now()))
            clock.sleep(rng.randint(0, 40))
            system.connect(f"{name}.{port}", f"prov.{port}")

    workers = [clock.spawn(publisher, name="publisher"), clock.spawn(chaos, name="chaos")]
    for n in names:
        workers.append(clock.spawn(lambda n=n: querier(n), name=f"querier:{n}"))
        workers.append(clock.spawn(lambda n=n: reader(n), name=f"reader:{n}"))
        workers.append(clock.spawn(lambda n=n: eventer(n), name=f"eventer:{n}"))
    clock.wait_for(lambda: all(w.done for w in workers), 100_000)
    if not all(w.done for w in workers):
        raise TrialFailure(f"workers still blocked: {[w for w in workers if not w.done]}")

    # 1: every blocking call returned within its bound; disconnects promptly
    for kind, port, t0, t1, timeout, outcome, since, strict in calls:
        if t1 - t0 > timeout:
            fail.append(f"{kind} on {port} blocked {t1 - t0} ms > {timeout}")
        if outcome == "Timeout" and t1 - t0 != timeout:
            fail.append(f"{kind} on {port} timed out after {t1 - t0} ms, expected {timeout}")
        if outcome == "Disconnected":
            name, p = port.split(".")
            # a caller parked at the moment of the disconnect is released at that instant
            ok = [dt for dp, dt in disconnects[name] if dp == p and since <= dt <= t1]
            if not ok or (strict and t1 not in ok):
                fail.append(f"{kind} on {port} saw Disconnected at {t1} without a matching disconnect")

    # 2: subsequence of published values, then latest once quiescent
    for n in names:
        s = seen[n]
        if any(b <= a for a, b in zip(s, s[1:])) or not set(s) <= set(published):
            fail.append(f"{n} observed {s}, not a subsequence of {published}")
    for n in names:
        system[n]["p"].subscribe()
    clock.sleep(10)
    before = {n: system[n]["p"].counters["updates"] for n in names}
    final = len(published) + 1
    prov["p"].publish(make("Value", seq=final))
    clock.settle()
    for n in names:
        last = system[n]["p"].get_update()
        if last is NO_UPDATE or last["seq"] != final:
            fail.append(f"{n} did not end on the latest value")
        # 5: exactly one delivery per subscriber for one publish when quiescent
        if system[n]["p"].counters["updates"] - before[n] != 1:
            fail.append(f"{n} got {system[n]['p'].counters['updates'] - before[n]} deliveries for one publish")

    if system.blocked_calls():
        fail.append(f"{system.blocked_calls()} calls still blocked")
    if fail:
        raise TrialFailure("; ".join(fail[:5]))
    return {"calls": len(calls), "subscribers": k, "published": len(published), "received": len(received)}


# -- wiring stress -------------------------------------------------------------


def wiring_stress(seed, steps=25):
    """Random connect/disconnect/query/publish/state/remove schedule on ≤5 components.

    Returns (leaked_blocked_calls, unfinished_operations, overlong_calls).
    """
    rng = random.Random(seed)
    clock, system = lab_system()
    try:
        return _wiring_stress(rng, clock, system, steps)
    finally:
        clock.close()


def _wiring_stress(rng, clock, system, steps):
    n_prov = rng.randint(1, 2)
    n_cons = rng.randint(1, 5 - n_prov)
    provs = []
    for i in range(n_prov):
        name = f"p{i}"
        model = rng.choice([PROVIDER, GATED])
        comp = system.add(name, model)
        if model is PROVIDER:
            # answers sometimes never come: only housekeeping can release such callers
            comp["q"].register_handler(
                lambda r, resp, rng=rng: None if rng.random() < 0.4 else clock.call_at(
                    clock.now() + rng.randint(0, 50), lambda: resp.answer(make("Tagged", tag=r["tag"]))),
                deferred=True,
            )
        else:
            comp["q"].register_handler(lambda r: make("Tagged", tag=r["tag"]))
            if rng.random() < 0.7:
                system.set_state(name, "active")
        provs.append(name)
    cons = [f"c{i}" for i in range(n_cons)]
    for c in cons:
        system.add(c, CONSUMER)

    overlong = []
    ops = []

    def caller(c):
        for _ in range(steps // 2):
            clock.sleep(rng.randint(0, 30))
            timeout = rng.choice([None, 20, 60])
            t0 = clock.now()
            try:
                if rng.random() < 0.6:
                    system[c]["q"].query(make("Tagged", tag=1), timeout_ms=timeout)
                else:
                    system[c]["p"].get_update(wait=True, timeout_ms=timeout)
            except (Timeout, Disconnected, NotWired, ServiceDeactivated, QueueFull):
                pass
            if timeout is not None and clock.now() - t0 > timeout:
                overlong.append((c, t0, clock.now(), timeout))

    def master():
        for _ in range(steps):
            clock.sleep(rng.randint(0, 25))
            op = rng.random()
            c, p = rng.choice(cons), rng.choice(["q", "p", "s"])
            live = [x for x in provs if x in system.components]
            try:
                if op < 0.4 and live:
                    system.connect(f"{c}.{p}", f"{rng.choice(provs)}.{p if p != 's' else rng.choice(['s', 'free'])}")
                elif op < 0.7:
                    system.disconnect(f"{c}.{p}")
                elif op < 0.8 and live:
                    target = rng.choice(live)
                    if system[target].model is GATED:
                        system.set_state(target, rng.choice(["active", "idle", "Neutral"]))
                elif op < 0.9 and live:
                    target = rng.choice(live)
                    if "p" in system[target].ports:
                        system[target]["p"].publish(make("Value", seq=rng.randint(0, 99)))
                elif live and rng.random() < 0.5:
                    system.remove(rng.choice(live))
            except (Incompatible, UnknownEndpoint):
                pass
        # final housekeeping: unwire everything still wired
        for c in cons:
            for p in ("q", "s", "p", "t", "e", "o"):
                system.disconnect(f"{c}.{p}")

    for c in cons:
        ops.append(clock.spawn(lambda c=c: caller(c), name=f"caller:{c}"))
    ops.append(clock.spawn(master, name="master"))
    clock.wait_for(lambda: all(o.done for o in ops), 1_000_000)
    unfinished = [o.name for o in ops if not o.done]
    return system.blocked_calls(), unfinished, overlong


# -- random task sets -----------------------------------------------------------


def random_taskset(rng, max_n=5, max_period=30, max_u=0.95, cap=None, explicit_priorities=False):
    """Integer task set with n ≤ max_n, T ≤ max_period, U ≤ max_u.

    With ``cap`` the hyperperiod is kept at or below it by redrawing.
    """
    while True:
        n = rng.randint(1, max_n)
        tasks = []
        for i in range(n):
            period = rng.randint(2, max_period)
            wcet = rng.randint(1, max(1, period // 2))
            prio = rng.randint(1, 10) if explicit_priorities else None
            tasks.append(AnalysisTask(f"t{i}", wcet, period, prio))
        ts = AnalysisTaskSet("cpu", tuple(tasks))
        if utilization(ts) > max_u:
            continue
        if cap is not None and hyperperiod(ts) > cap:
            continue
        return ts


def brute_bound(n):
    """Utilization bound by plain power instead of expm1."""
    return n * (2 ** (1 / n) - 1)


def naive_response(ts_ordered, i):
    """Response time by scanning time unit by unit (tiny sets only)."""
    task = ts_ordered[i]
    hp = ts_ordered[:i]
    t = 1
    while t <= task.period:
        demand = task.wcet + sum(math.ceil(t / h.period) * h.wcet for h in hp)
        if demand <= t:
            return t
        t += 1
    return None


__all__ = [
    "CONSUMER",
    "GATED",
    "LAB",
    "NO_EVENT",
    "PROVIDER",
    "TrialFailure",
    "brute_bound",
    "echo",
    "lab_system",
    "naive_response",
    "pattern_trial",
    "random_taskset",
    "wire_all",
    "wiring_stress",
]
