"""Model-driven component middleware for robotics.

Component, platform and deployment models; a runtime for the send, query,
push newest, push timed and event interaction patterns; dynamic wiring and
state management; platform mapping of tasks and schedulability analysis.
"""
from .clock import RealClock, VirtualClock, make_clock
from .component import ComponentInstance
from .system import System

__version__ = "0.1.0"

__all__ = ["ComponentInstance", "RealClock", "System", "VirtualClock", "__version__", "make_clock"]
