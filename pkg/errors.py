# errors.py
"""Domain exceptions. Each subclasses a built-in so callers can catch broadly."""


class DimensionError(ValueError):
    """Vector or matrix has the wrong shape for the operation."""


class CovarianceError(ValueError):
    """Covariance is not positive definite and could not be repaired."""


class AisError(ValueError):
    """An AIS strategy precondition failed."""


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""


class NonFiniteCostError(ValueError):
    def __init__(self, index: int, value: float):
        super().__init__(f"Non-finite trajectory cost {value!r} at sample index {index}")
        self.index = index
        self.value = value


class DynamicsError(RuntimeError):
    def __init__(self, step: int, substep: int | None = None, car: int | None = None):
        where = f"step {step}"
        if substep is not None:
            where += f", substep {substep}"
        if car is not None:
            where += f", car {car}"
        super().__init__(f"Dynamics produced a non-finite state at {where}")
        self.step = step
        self.substep = substep
        self.car = car


class TrackFormatError(ValueError):
    def __init__(self, message: str, path: str = "", line: int | None = None):
        loc = path or "<track>"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}")
        self.path = path
        self.line = line
