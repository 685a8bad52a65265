"""Exception hierarchy shared by every layer of the toolchain and runtime."""


class SmartMarsError(Exception):
    """Base class for all errors raised by smartmars."""


# -- model files ------------------------------------------------------------

class ModelError(SmartMarsError):
    pass


class ModelSyntaxError(ModelError):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class UnresolvedReference(ModelError):
    def __init__(self, name, where=""):
        super().__init__(f"unresolved reference {name!r}" + (f" in {where}" if where else ""))
        self.name = name


class DuplicateName(ModelError):
    def __init__(self, name, where=""):
        super().__init__(f"duplicate name {name!r}" + (f" in {where}" if where else ""))
        self.name = name


# -- interaction patterns ---------------------------------------------------

class PatternError(SmartMarsError):
    pass


class NotWired(PatternError):
    pass


class TypeMismatch(PatternError, TypeError):
    pass


class Timeout(PatternError, TimeoutError):
    pass


class Disconnected(PatternError):
    pass


class ServiceDeactivated(PatternError):
    pass


class UnknownId(PatternError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class HandlerAlreadyRegistered(PatternError):
    pass


class QueueFull(PatternError):
    pass


class AlreadyStarted(PatternError):
    pass


class NoCycleTime(PatternError):
    pass


# -- state, wiring, params --------------------------------------------------

class ManagementError(SmartMarsError):
    pass


class UnknownState(ManagementError):
    pass


class Incompatible(ManagementError):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class UnknownEndpoint(ManagementError):
    pass


class UnknownKey(ManagementError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# -- tasks and clocks -------------------------------------------------------

class TaskError(SmartMarsError):
    pass


class InvalidTaskSpec(TaskError):
    pass


class MissingPlatformCapability(TaskError):
    def __init__(self, capability, platform, element=""):
        msg = f"platform {platform!r} lacks capability {capability!r}"
        if element:
            msg = f"{element}: {msg}"
        super().__init__(msg)
        self.capability = capability
        self.platform = platform
        self.element = element


class ClockStopped(TaskError):
    pass


class AlreadyStopped(TaskError):
    pass


class Deadlock(SmartMarsError):
    """The virtual clock was asked to wait but nothing can ever happen."""


# -- analysis ---------------------------------------------------------------

class AnalysisError(SmartMarsError):
    pass


class InvalidTaskSet(AnalysisError):
    pass


class HyperperiodTooLarge(AnalysisError):
    def __init__(self, hyperperiod, cap):
        super().__init__(f"hyperperiod {hyperperiod} exceeds cap {cap}")
        self.hyperperiod = hyperperiod
        self.cap = cap


# -- deployment and scenarios -----------------------------------------------

class TransformError(SmartMarsError):
    """Aggregated problems found while mapping a deployment onto platforms."""

    def __init__(self, issues, partial=None):
        super().__init__(f"{len(issues)} problem(s) in deployment transform")
        self.issues = list(issues)
        self.partial = partial


class DuplicateRegistration(SmartMarsError):
    pass


class UnknownBehavior(SmartMarsError, LookupError):
    pass
