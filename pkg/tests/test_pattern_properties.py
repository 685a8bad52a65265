from hypothesis import given, settings
from hypothesis import strategies as st

from harness import CONSUMER, PROVIDER, pattern_trial, wire_all
from smartmars.clock import VirtualClock
from smartmars.patterns import NO_UPDATE, make
from smartmars.system import System


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=3, max_value=20))
def test_randomized_interleavings(seed, ops):
    pattern_trial(seed, ops=ops)


@settings(max_examples=100, deadline=None)
@given(st.permutations(list(range(8))), st.lists(st.integers(0, 40), min_size=8, max_size=8))
def test_async_answers_correlate(order, delays):
    clock = VirtualClock()
    try:
        system = System(clock)
        prov = system.add("prov", PROVIDER)
        cons = system.add("cons", CONSUMER)
        wire_all(system, "cons", "prov", ports=("q",))
        held = []
        prov["q"].register_handler(lambda r, resp: held.append((r, resp)), deferred=True)
        ids = {n: cons["q"].query_async(make("Tagged", tag=n), timeout_ms=None) for n in range(8)}
        clock.settle()
        for i, (r, resp) in enumerate(held[j] for j in order):
            clock.call_at(delays[i], lambda r=r, resp=resp: resp.answer(make("Tagged", tag=r["tag"])))
        clock.run(100)
        for n, qid in ids.items():
            assert cons["q"].query_receive(qid)["tag"] == n
    finally:
        clock.close()


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.lists(st.integers(0, 1000), min_size=1, max_size=10))
def test_fan_out_exactly_k(k, values):
    clock = VirtualClock()
    try:
        system = System(clock)
        prov = system.add("prov", PROVIDER)
        for i in range(k):
            system.add(f"c{i}", CONSUMER)
            system.connect(f"c{i}.p", "prov.p")
            system[f"c{i}"]["p"].subscribe()
        for v in values:
            before = prov["p"].counters["deliveries"]
            prov["p"].publish(make("Value", seq=v))
            clock.settle()
            assert prov["p"].counters["deliveries"] - before == k
        for i in range(k):
            assert system[f"c{i}"]["p"].get_update()["seq"] == values[-1]
            assert system[f"c{i}"]["p"].get_update() is NO_UPDATE
    finally:
        clock.close()
