"""Executable navigation scenario and the behavior registry used by ``run``."""
from .navigation import build_navigation_scenario, fixture_text, register_navigation, swap_base
from .registry import Registry
from .runner import RunResult, ScenarioEnv, run_deployment


def default_registry():
    """A fresh registry holding the bundled navigation behaviors."""
    return register_navigation(Registry())


__all__ = [
    "Registry",
    "RunResult",
    "ScenarioEnv",
    "build_navigation_scenario",
    "default_registry",
    "fixture_text",
    "register_navigation",
    "run_deployment",
    "swap_base",
]
