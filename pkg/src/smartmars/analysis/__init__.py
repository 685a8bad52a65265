"""Schedulability analysis of periodic fixed-priority task sets."""
from .export import FORMATS, export_analysis_model, from_native, to_cheddar, to_native
from .rta import BOUND_EPSILON, RtaResult, bound_verdict, rta, utilization, utilization_bound
from .simulate import DEFAULT_HYPERPERIOD_CAP, SimResult, hyperperiod, simulate_hyperperiod
from .taskset import AnalysisTask, AnalysisTaskSet, assign_rm_priorities, check_taskset, priority_order

__all__ = [
    "BOUND_EPSILON",
    "DEFAULT_HYPERPERIOD_CAP",
    "FORMATS",
    "AnalysisTask",
    "AnalysisTaskSet",
    "RtaResult",
    "SimResult",
    "assign_rm_priorities",
    "bound_verdict",
    "check_taskset",
    "export_analysis_model",
    "from_native",
    "hyperperiod",
    "priority_order",
    "rta",
    "simulate_hyperperiod",
    "to_cheddar",
    "to_native",
    "utilization",
    "utilization_bound",
]
