class SimulationError(Exception):
    """Base class of every error raised by mpcsd."""


class ImproperlyConfigured(SimulationError):
    pass


class InvalidPlanError(SimulationError, ValueError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f"invalid frequency plan: {reason}")


class DegenerateGeometryError(SimulationError, ValueError):
    def __init__(self, reason, point_index=None):
        self.reason = reason
        self.point_index = point_index
        message = reason if point_index is None else f"grid point {point_index}: {reason}"
        super().__init__(message)


class ScenarioParseError(SimulationError):
    def __init__(self, path, line, column, reason):
        self.path = path
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {reason}")


class ScenarioValidationError(SimulationError, ValueError):
    def __init__(self, field_path, reason):
        self.field_path = field_path
        super().__init__(f"{field_path}: {reason}")


class OracleMismatchError(SimulationError):
    def __init__(self, point_index, relative_error):
        self.point_index = point_index
        self.relative_error = relative_error
        super().__init__(
            f"grid point {point_index}: time-domain power differs from the closed form "
            f"by {relative_error:.3e} (relative)"
        )
