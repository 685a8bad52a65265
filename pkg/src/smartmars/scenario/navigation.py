"""Behaviors of the navigation scenario.

Physics is a kinematic stub: the base integrates commanded velocities into a
pose, the laser reports a distance that oscillates with a 2 s period, and an
obstacle event fires whenever that distance drops below a threshold.
"""
from __future__ import annotations

import math
from importlib import resources

from ..errors import Disconnected, NotWired, ServiceDeactivated
from ..patterns import NO_EVENT, NO_UPDATE, EventMode, make
from .registry import Registry

FIXTURE = "navigation.smm"
SWAP_AT_MS = 2510
OBSTACLE_THRESHOLD = 0.8
SCAN_BEAMS = 8


def fixture_text(name=FIXTURE):
    return resources.files(__package__).joinpath("fixtures", name).read_text(encoding="utf-8")


def laser_distance(t_ms):
    return 1.5 + math.cos(2 * math.pi * t_ms / 2000)


def _pose(s):
    return make("Pose", x=s["x"], y=s["y"], theta=s["theta"])


def base(comp, env):
    """Simulated (or stub) base: integrates velocity, publishes state, answers pose queries."""
    clock = env.clock
    s = {"x": 0.0, "y": 0.0, "theta": 0.0, "v": 0.0, "w": 0.0}
    stats = env.stats(comp.name)
    handling = comp.model.port("basepose").qos.min_handling_ms or 0
    period = comp.model.task("integrate").period_ms

    def state():
        return make("BaseState", time=clock.now(), pose=_pose(s), v=s["v"], w=s["w"], source=comp.name)

    def on_velocity(msg):
        s["v"], s["w"] = msg["v"], msg["w"]
        stats["velocity_commands"] += 1

    def on_pose(_req):
        clock.sleep(handling)
        stats["pose_answers"] += 1
        return _pose(s)

    def integrate():
        dt = period / 1000
        s["theta"] += s["w"] * dt
        s["x"] += s["v"] * math.cos(s["theta"]) * dt
        s["y"] += s["v"] * math.sin(s["theta"]) * dt
        comp["basestate"].publish(state())

    comp["velocity"].register_handler(on_velocity)
    comp["basepose"].register_handler(on_pose)
    comp["basestate"].publish(state())
    comp["basestate"].start_timed()
    env.spawn_task(comp, "integrate", integrate)


def laser(comp, env):
    clock = env.clock
    stats = env.stats(comp.name)
    obstacle = comp["obstacle"]
    obstacle.register_handler(
        lambda param, d: d < param["threshold"],
        lambda param, d: make("ObstacleNote", time=clock.now(), distance=d),
    )

    def sense():
        d = laser_distance(clock.now())
        comp["scan"].publish(make("Scan", time=clock.now(), ranges=[d] * SCAN_BEAMS))
        obstacle.put_state(d)
        stats["scans"] += 1

    env.spawn_task(comp, "sense", sense)


def mapper(comp, env):
    clock = env.clock
    stats = env.stats(comp.name)
    handling = comp.model.port("map").qos.min_handling_ms or 0

    def on_map(req):
        clock.sleep(handling)
        stats["map_answers"] += 1
        return make("MapAnswer", scans=stats["scans_read"], states=stats["states_read"],
                    free=stats["last_range"] >= OBSTACLE_THRESHOLD)

    def update():
        for port, key in (("scan", "scans_read"), ("basestate", "states_read")):
            try:
                got = comp[port].get_update()
            except (Disconnected, NotWired):
                stats[f"{port}_unavailable"] += 1
                continue
            if got is not NO_UPDATE:
                stats[key] += 1
                if port == "scan":
                    stats["last_range"] = min(got["ranges"])

    stats["last_range"] = 10.0
    comp["map"].register_handler(on_map)
    comp["scan"].subscribe()
    comp["basestate"].subscribe()
    env.spawn_task(comp, "update", update)


def planner(comp, env):
    clock = env.clock
    stats = env.stats(comp.name)

    def call(port, request):
        # a swap of the provider fails the pending call; the new wiring is
        # already in place by then, so one retry suffices
        for attempt in range(3):
            try:
                return comp[port].query(request)
            except Disconnected:
                stats[f"{port}_disconnected"] += 1
        raise Disconnected(f"{comp.name}.{port}: provider kept disappearing")

    def plan():
        stats["plan_cycles"] += 1
        pose = call("basepose", make("PoseRequest", time=clock.now()))
        m = call("map", make("MapRequest", x=pose["x"], y=pose["y"]))
        speed = comp.params.get("speed", 0.3)
        cmd = make("MotionCommand", v=speed if m["free"] else 0.0, w=0.1)
        try:
            comp["motion"].send(cmd)
            stats["motion_commands"] += 1
        except ServiceDeactivated:
            stats["motion_rejected"] += 1

    env.system.set_param(comp.name, "speed", 0.3)
    env.system.set_state(comp.name, "active")
    env.spawn_task(comp, "plan", plan)


def motion(comp, env):
    stats = env.stats(comp.name)
    s = {"v": 0.0, "w": 0.0}

    def on_motion(cmd):
        s["v"], s["w"] = cmd["v"], cmd["w"]
        stats["motion_received"] += 1

    comp["motion"].register_handler(on_motion)
    env.system.set_param(comp.name, "threshold", OBSTACLE_THRESHOLD)
    aid = comp["obstacle"].event_activate(make("ObstacleParam", threshold=comp.params["threshold"]),
                                          EventMode.CONTINUOUS)

    def control():
        blocked = False
        while True:
            note = comp["obstacle"].event_get(aid)
            if note is NO_EVENT:
                break
            stats["obstacle_events"] += 1
            blocked = True
        v = 0.0 if blocked else s["v"]
        if blocked:
            stats["emergency_stops"] += 1
        comp["velocity"].send(make("Velocity", v=v, w=s["w"]))
        stats["velocity_sent"] += 1

    env.spawn_task(comp, "control", control)


def swap_base(env, at=SWAP_AT_MS, target="stub"):
    """Master script: rewire every base client from the simulator to the stub."""
    clock = env.clock

    def script():
        clock.sleep_until(at)
        for source, port in (("mapper.basestate", "basestate"), ("planner.basepose", "basepose"),
                             ("motion.velocity", "velocity")):
            env.system.connect(source, f"{target}.{port}")
        env.stats("master")["swaps"] += 1

    clock.spawn(script, name="master:swap-base")


def register_navigation(registry: Registry):
    registry.register("BaseSim", base)
    registry.register("BaseStub", base)
    registry.register("LaserSim", laser)
    registry.register("Mapper", mapper)
    registry.register("Planner", planner)
    registry.register("Motion", motion)
    registry.register_master("swap-base", swap_base)
    return registry


def build_navigation_scenario():
    """Pinned navigation model text and a registry with its behaviors."""
    return fixture_text(), register_navigation(Registry())
