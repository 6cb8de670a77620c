"""
Exception hierarchy for warpcheck.

Classification and certificate operations report failed properties in their
reports; exceptions are for malformed input and numerically undefined
evaluations.
"""


class WarpCheckError(Exception):
    """Base class for every error raised by the engine."""


class ExprError(WarpCheckError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownFunctionError(ExprSyntaxError):
    def __init__(self, name, offset):
        super().__init__(f"unknown function '{name}'", offset)
        self.name = name


class UnboundVariableError(ExprError):
    def __init__(self, name):
        super().__init__(f"unbound variable '{name}'")
        self.name = name


class ExprDomainError(ExprError):
    pass


class GeometryError(WarpCheckError):
    pass


class SingularMetricError(GeometryError):
    def __init__(self, det, point=None):
        super().__init__(f"singular metric (det={det:.3e}) at {point}")
        self.det = det
        self.point = point


class CoordinateCollisionError(GeometryError):
    def __init__(self, names):
        names = sorted(names)
        super().__init__(f"coordinate names shared by both factors: {', '.join(names)}")
        self.names = names


class NonPositiveWarpingError(GeometryError):
    def __init__(self, name, value, point=None):
        super().__init__(f"warping function {name} = {value:.3e} is not positive at {point}")
        self.name = name
        self.value = value
        self.point = point


class NotUnitError(GeometryError):
    def __init__(self, norm, target=1.0):
        super().__init__(f"tangent vector has squared norm {norm:.12g}, expected {target:g}")
        self.norm = norm
        self.target = target


class LieFormMismatchError(GeometryError):
    def __init__(self, gap, point=None):
        super().__init__(f"coordinate and covariant Lie derivatives differ by {gap:.3e} at {point}")
        self.gap = gap
        self.point = point


class SamplingError(WarpCheckError):
    pass


class PreconditionError(WarpCheckError):
    pass


class ScenarioError(WarpCheckError):
    def __init__(self, message, location=None):
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class UnresolvedReferenceError(ScenarioError):
    pass


class DimensionMismatchError(ScenarioError):
    pass
