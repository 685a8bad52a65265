"""Clocks that own every execution context of a running system.

Two implementations share one interface:

``VirtualClock``
    Deterministic discrete-event kernel. Each spawned context is a real
    thread, but a baton is passed so that exactly one of them (or the driver
    thread) runs at any instant. Time moves only when nothing is runnable,
    jumping to the next timer or wait deadline. Two runs of the same program
    produce the same interleaving.

``RealClock``
    Wall-clock time, free-running threads and a condition variable.

Runtime code mutates shared state under ``clock.lock``, calls
``clock.notify()`` afterwards, and blocks only through ``clock.wait_for``
(never while holding the lock).
"""
from __future__ import annotations

import heapq
import itertools
import logging
import threading
import time
from collections import deque

from .errors import ClockStopped, Deadlock

log = logging.getLogger(__name__)


class Context:
    """One thread of control spawned on a clock."""

    def __init__(self, clock, fn, name):
        self.clock = clock
        self.fn = fn
        self.name = name
        self.cancelled = False
        self.done = False
        self.error = None
        self.result = None

    def cancel(self):
        """Request cooperative cancellation; blocked waits observe it."""
        with self.clock.lock:
            self.cancelled = True
        self.clock.notify()

    def join(self, deadline=None):
        return self.clock.wait_for(lambda: self.done, deadline)

    def __repr__(self):
        state = "done" if self.done else ("cancelled" if self.cancelled else "live")
        return f"<{type(self).__name__} {self.name} {state}>"


class Timer:
    __slots__ = ("when", "fn", "cancelled")

    def __init__(self, when, fn):
        self.when = when
        self.fn = fn
        self.cancelled = False

    def cancel(self):
        self.cancelled = True


class Clock:
    mode = "abstract"

    def now(self) -> int:
        raise NotImplementedError

    def wait_for(self, predicate, deadline=None) -> bool:
        raise NotImplementedError

    def notify(self):
        raise NotImplementedError

    def spawn(self, fn, name="ctx") -> Context:
        raise NotImplementedError

    def call_at(self, when, fn) -> Timer:
        raise NotImplementedError

    def current(self):
        raise NotImplementedError

    def sleep_until(self, when):
        self.wait_for(lambda: False, when)

    def sleep(self, ms):
        self.sleep_until(self.now() + ms)

    def run(self, until):
        """Let every context run until the clock reads ``until``."""
        self.sleep_until(until)

    def check_running(self):
        if self.stopped:
            raise ClockStopped(f"{self.mode} clock stopped")

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class _NullLock:
    """Mutual exclusion is implied by the baton under the virtual clock."""

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def acquire(self, *a, **k):
        return True

    def release(self):
        pass


class _Killed(BaseException):
    """Unwinds a fiber when its clock is closed."""


class _Fiber(Context):
    def __init__(self, clock, fn, name, propagate):
        super().__init__(clock, fn, name)
        self.propagate = propagate
        self.turn = threading.Semaphore(0)
        self.pred = None
        self.deadline = None
        self.killed = False
        self.thread = threading.Thread(target=self._main, name=f"fiber:{name}", daemon=True)

    def _main(self):
        self.turn.acquire()
        clock = self.clock
        clock._local.fiber = self
        try:
            if not self.killed:
                self.result = self.fn()
        except _Killed:
            pass
        except BaseException as exc:  # reported by the driver
            self.error = exc
        finally:
            self.done = True
            clock._exit(self)


class VirtualClock(Clock):
    mode = "virtual"

    def __init__(self, start=0):
        self.lock = _NullLock()
        self.stopped = False
        self._now = start
        self._ready = deque()
        self._blocked = []
        self._fibers = []
        self._timers = []
        self._seq = itertools.count()
        self._driver_sem = threading.Semaphore(0)
        self._local = threading.local()
        self._driver = None
        self._in_callback = False
        self.switches = 0

    def now(self):
        return self._now

    def notify(self):
        # blocked predicates are re-evaluated after every step
        pass

    def current(self):
        return getattr(self._local, "fiber", None)

    # -- contexts -----------------------------------------------------------

    def spawn(self, fn, name="fiber", propagate=True):
        """Create a fiber; it first runs when the driver next schedules.

        With ``propagate`` an exception escaping ``fn`` is re-raised in the
        driver. Contexts that contain their own faults pass False.
        """
        if self.stopped:
            raise ClockStopped("virtual clock stopped")
        f = _Fiber(self, fn, name, propagate)
        self._fibers.append(f)
        self._ready.append(f)
        f.thread.start()
        return f

    def blocked(self):
        """Fibers currently parked in ``wait_for`` (for leak checks)."""
        return list(self._blocked)

    def live(self):
        return [f for f in self._fibers if not f.done]

    def call_at(self, when, fn):
        t = Timer(max(when, self._now), fn)
        heapq.heappush(self._timers, (t.when, next(self._seq), t))
        return t

    # -- blocking -----------------------------------------------------------

    def wait_for(self, predicate, deadline=None):
        f = self.current()
        if f is None:
            return self._drive(predicate, deadline)
        if f.killed:
            raise _Killed()
        if predicate():
            return True
        if deadline is not None and deadline <= self._now:
            return False
        f.pred, f.deadline = predicate, deadline
        self._blocked.append(f)
        self._park(f)
        if f.killed:
            raise _Killed()
        return bool(predicate())

    def yield_(self):
        """Let other ready fibers run before continuing (no time passes)."""
        f = self.current()
        if f is None:
            return
        self._ready.append(f)
        self._park(f)
        if f.killed:
            raise _Killed()

    def settle(self):
        """Run everything that is runnable at the current instant."""
        self.run(self._now)

    def _park(self, f):
        self._driver_sem.release()
        f.turn.acquire()

    def _exit(self, f):
        self._driver_sem.release()

    def _switch(self, f):
        self.switches += 1
        f.turn.release()
        self._driver_sem.acquire()
        if f.done:
            f.thread.join()
            if f.error is not None and f.propagate:
                err, f.error = f.error, None
                raise err

    def _wake_blocked(self):
        if not self._blocked:
            return
        still = []
        for f in self._blocked:
            if f.killed or (f.deadline is not None and f.deadline <= self._now) or f.pred():
                f.pred = None
                self._ready.append(f)
            else:
                still.append(f)
        self._blocked = still

    def _next_event(self):
        while self._timers and self._timers[0][2].cancelled:
            heapq.heappop(self._timers)
        times = [f.deadline for f in self._blocked if f.deadline is not None]
        if self._timers:
            times.append(self._timers[0][0])
        return min(times) if times else None

    def _fire_timers(self):
        while self._timers and self._timers[0][0] <= self._now:
            _, _, t = heapq.heappop(self._timers)
            if t.cancelled:
                continue
            self._in_callback = True
            try:
                t.fn()
            finally:
                self._in_callback = False

    def _drive(self, predicate, deadline):
        me = threading.current_thread()
        if self._in_callback:
            raise RuntimeError("timer callbacks must not block")
        if self._driver is not None and self._driver is not me:
            raise RuntimeError("virtual clock is already driven by another thread")
        outer = self._driver
        self._driver = me
        try:
            while True:
                self._wake_blocked()
                if predicate():
                    return True
                if self._ready:
                    self._switch(self._ready.popleft())
                    continue
                nxt = self._next_event()
                if nxt is None or (deadline is not None and nxt > deadline):
                    if deadline is None:
                        raise Deadlock(
                            f"waiting forever at t={self._now}: no runnable fibers, "
                            f"no timers, {len(self._blocked)} blocked"
                        )
                    self._now = max(self._now, deadline)
                    return bool(predicate())
                self._now = max(self._now, nxt)
                self._fire_timers()
        finally:
            self._driver = outer

    def run(self, until):
        if self.current() is not None:
            self.sleep_until(until)
            return
        self._drive(lambda: False, until)

    def stop(self):
        self.stopped = True

    def close(self):
        """Kill every remaining fiber so no thread outlives the clock."""
        self.stopped = True
        if self.current() is not None:
            raise RuntimeError("close() must be called by the driver thread")
        self._timers.clear()
        for f in list(self._fibers):
            if f.done:
                continue
            f.killed = True
            if f in self._blocked:
                self._blocked.remove(f)
            try:
                self._ready.remove(f)
            except ValueError:
                pass
            self._switch_quiet(f)
        self._fibers = [f for f in self._fibers if not f.done]

    def _switch_quiet(self, f):
        try:
            self._switch(f)
        except BaseException:
            log.debug("fiber %s raised while being closed", f.name, exc_info=True)


class _ThreadContext(Context):
    def __init__(self, clock, fn, name, propagate):
        super().__init__(clock, fn, name)
        self.propagate = propagate
        self.thread = threading.Thread(target=self._main, name=f"ctx:{name}", daemon=True)

    def _main(self):
        clock = self.clock
        clock._local.ctx = self
        try:
            self.result = self.fn()
        except BaseException as exc:
            self.error = exc
            if self.propagate:
                log.exception("context %s failed", self.name)
        finally:
            with clock.lock:
                self.done = True
            clock.notify()


class RealClock(Clock):
    mode = "real"

    def __init__(self):
        self.lock = threading.RLock()
        self._cond = threading.Condition(self.lock)
        self._t0 = time.monotonic()
        self._local = threading.local()
        self._contexts = []
        self._timers = []
        self.stopped = False

    def _now_f(self):
        return (time.monotonic() - self._t0) * 1000.0

    def now(self):
        return int(self._now_f())

    def notify(self):
        with self._cond:
            self._cond.notify_all()

    def current(self):
        return getattr(self._local, "ctx", None)

    def spawn(self, fn, name="ctx", propagate=True):
        if self.stopped:
            raise ClockStopped("real clock stopped")
        c = _ThreadContext(self, fn, name, propagate)
        self._contexts.append(c)
        c.thread.start()
        return c

    def call_at(self, when, fn):
        t = Timer(when, fn)
        delay = max(0.0, (when - self._now_f()) / 1000.0)

        def fire():
            if not t.cancelled and not self.stopped:
                fn()

        th = threading.Timer(delay, fire)
        th.daemon = True
        self._timers.append((t, th))
        th.start()
        return t

    def wait_for(self, predicate, deadline=None):
        with self._cond:
            while True:
                if predicate():
                    return True
                if self.stopped:
                    return bool(predicate())
                if deadline is None:
                    self._cond.wait(0.5)
                    continue
                remaining = deadline - self._now_f()
                if remaining <= 0:
                    return bool(predicate())
                self._cond.wait(min(remaining / 1000.0, 0.5))

    def stop(self):
        self.stopped = True
        self.notify()

    def close(self, grace=1.0):
        for c in self._contexts:
            c.cancelled = True
        for t, th in self._timers:
            t.cancel()
            th.cancel()
        self.notify()
        end = time.monotonic() + grace
        for c in self._contexts:
            if c.thread is not threading.current_thread():
                c.thread.join(max(0.0, end - time.monotonic()))
        self.stop()

    def live(self):
        return [c for c in self._contexts if not c.done]


def make_clock(mode="virtual"):
    if mode == "virtual":
        return VirtualClock()
    if mode == "real":
        return RealClock()
    raise ValueError(f"unknown clock mode {mode!r}")
