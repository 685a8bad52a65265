"""Platform-independent, platform and deployment models with their file format."""
from .canonical import serialize_model
from .core import (
    NEUTRAL,
    PARAM_TYPES,
    PRIMITIVE_TYPES,
    CommObjectType,
    ComponentModel,
    DeploymentModel,
    Direction,
    Instance,
    ModelDocument,
    ParamDecl,
    Pattern,
    PlatformDescription,
    QosParams,
    RequiresDevice,
    RequiresMemoryMB,
    RequiresRealtime,
    ServicePortSpec,
    StateDecl,
    TaskSpec,
    TimeoutOverride,
    Violation,
    Wire,
)
from .syntax import parse_document, parse_model
from .validation import validate_deployment, validate_pim, validate_platform

__all__ = [
    "NEUTRAL",
    "PARAM_TYPES",
    "PRIMITIVE_TYPES",
    "CommObjectType",
    "ComponentModel",
    "DeploymentModel",
    "Direction",
    "Instance",
    "ModelDocument",
    "ParamDecl",
    "Pattern",
    "PlatformDescription",
    "QosParams",
    "RequiresDevice",
    "RequiresMemoryMB",
    "RequiresRealtime",
    "ServicePortSpec",
    "StateDecl",
    "TaskSpec",
    "TimeoutOverride",
    "Violation",
    "Wire",
    "parse_document",
    "parse_model",
    "serialize_model",
    "validate_deployment",
    "validate_pim",
    "validate_platform",
]
