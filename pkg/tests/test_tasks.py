import pytest

from harness import PROVIDER
from smartmars.clock import RealClock, VirtualClock
from smartmars.errors import (
    AlreadyStopped,
    Disconnected,
    InvalidTaskSpec,
    MissingPlatformCapability,
    TaskError,
)
from smartmars.model import PlatformDescription, TaskSpec, parse_document
from smartmars.patterns import make
from smartmars.system import System
from smartmars.tasks import TaskMapping, executor_spawn, executor_stop, map_task, run_periodic

RT = PlatformDescription("rt", True, 512)
PLAIN = PlatformDescription("plain", False, 512)


def test_realtime_on_realtime_platform():
    assert map_task(TaskSpec("t", True, True, 10, 2), RT).mapping is TaskMapping.REALTIME


def test_realtime_reports_missing_capability():
    with pytest.raises(MissingPlatformCapability) as info:
        map_task(TaskSpec("t", True, True, 10, 2), PLAIN, "instance x task t")
    assert info.value.capability == "realtime"
    assert "instance x task t" in str(info.value)


@pytest.mark.parametrize("platform", [RT, PLAIN])
def test_emulated_anywhere(platform):
    assert map_task(TaskSpec("t", False, True, 100), platform).mapping is TaskMapping.EMULATED_PERIODIC


@pytest.mark.parametrize("platform", [RT, PLAIN])
def test_free_running(platform):
    assert map_task(TaskSpec("t"), platform).mapping is TaskMapping.FREE_RUNNING


def test_invalid_spec_rejected():
    with pytest.raises(InvalidTaskSpec):
        map_task(TaskSpec("t", True, True, 10, 20), RT)
    with pytest.raises(InvalidTaskSpec):
        map_task(TaskSpec("t", False, True, None), RT)


def _emulated(period=100):
    return map_task(TaskSpec("p", False, True, period), PLAIN)


def test_until_before_first_release(vclock):
    rep = run_periodic(_emulated(), lambda: None, vclock, until=50)
    assert rep.iterations == 0 and rep.deadline_misses == 0


def test_releases_on_exact_grid(vclock):
    times = []
    rep = run_periodic(_emulated(70), lambda: times.append(vclock.now()), vclock, until=700)
    assert times == list(range(70, 701, 70)) == rep.releases
    assert rep.max_jitter_ms == 0


def test_free_running_not_periodic(vclock):
    with pytest.raises(TaskError):
        run_periodic(map_task(TaskSpec("f"), PLAIN), lambda: None, vclock, until=100)


def test_no_reentrancy(vclock):
    active = []
    overlap = []

    def body():
        if active:
            overlap.append(vclock.now())
        active.append(1)
        vclock.sleep(230)
        active.pop()

    rep = run_periodic(_emulated(), body, vclock, until=1000)
    assert overlap == []
    assert rep.iterations + rep.deadline_misses == 10


def test_real_clock_jitter_reported():
    clock = RealClock()
    try:
        rep = run_periodic(_emulated(20), lambda: None, clock, until=clock.now() + 200)
    finally:
        clock.close()
    assert 8 <= rep.iterations <= 10
    assert rep.max_jitter_ms >= 0


# -- executor ------------------------------------------------------------------

_WORKER = parse_document("""
commobject Tagged { tag: int64; }
component Worker {
  port q: query required req=Tagged ans=Tagged timeoutMs=none;
  task tick periodic=true periodMs=100;
  task loop;
}
""").components[0]


def test_spawn_then_stop_clean(vclock):
    system = System(vclock)
    w = system.add("w", _WORKER)
    handle = w.spawn_task("tick", lambda: None)
    executor_stop(handle)
    assert handle.done and handle.error is None
    assert handle.report.iterations == 0


def test_double_stop(vclock):
    w = System(vclock).add("w", _WORKER)
    handle = w.spawn_task("tick", lambda: None)
    handle.stop()
    with pytest.raises(AlreadyStopped):
        handle.stop()


def test_stop_unblocks_query_in_body(vclock):
    system = System(vclock)
    p = system.add("p", PROVIDER)
    p["q"].register_handler(lambda r, resp: None, deferred=True)
    w = system.add("w", _WORKER)
    system.connect("w.q", "p.q")
    seen = []

    def body():
        try:
            w["q"].query(make("Tagged", tag=1))
        except Disconnected:
            seen.append(vclock.now())
            raise

    handle = w.spawn_task("loop", body)
    vclock.run(500)
    assert not handle.done
    handle.stop()
    assert seen == [500]
    assert handle.done and handle.error is None
    assert system.blocked_calls() == 0


def test_periodic_task_stops_at_iteration_boundary(vclock):
    w = System(vclock).add("w", _WORKER)
    handle = w.spawn_task("tick", lambda: None)
    vclock.run(350)
    handle.stop()
    assert handle.report.iterations == 3
    vclock.run(1000)
    assert handle.report.iterations == 3


def test_executor_records_errors(vclock):
    w = System(vclock).add("w", _WORKER)

    def bad():
        raise ValueError("broken body")

    handle = executor_spawn(w, w.map_task("tick"), bad, until=1000)
    vclock.run(1000)
    assert isinstance(handle.error, ValueError)


def test_real_clock_executor():
    clock = RealClock()
    try:
        w = System(clock).add("w", _WORKER)
        handle = w.spawn_task("tick", lambda: None)
        clock.sleep(350)
        handle.stop()
        assert 2 <= handle.report.iterations <= 4
    finally:
        clock.close()


def test_virtual_clock_is_monotone():
    clock = VirtualClock()
    try:
        seen = []
        for t in (10, 5, 30):
            clock.call_at(t, lambda: seen.append(clock.now()))
        clock.run(100)
        assert seen == sorted(seen) == [5, 10, 30]
    finally:
        clock.close()
