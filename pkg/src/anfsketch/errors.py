"""Exception hierarchy shared by every module of the package."""


class AnfSketchError(Exception):
    """Base class for all errors raised by anfsketch."""


class ConfigurationError(AnfSketchError, ValueError):
    """Two sketches (or a sketch and a request) have incompatible settings."""


class ParameterError(AnfSketchError, ValueError):
    """A numeric parameter is outside its permitted range."""


class CapacityError(ParameterError):
    """More edges were requested than a simple graph can hold."""


class ParseError(AnfSketchError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyGraphError(AnfSketchError, ValueError):
    """The input contained no edges (or no nodes)."""


class UndefinedMetricError(AnfSketchError, ArithmeticError):
    """A metric has no value for this input, e.g. no reachable pairs."""


class UnsupportedMetricError(AnfSketchError, TypeError):
    """The metric is not defined for this kind of graph."""


class FormatError(AnfSketchError, ValueError):
    """A serialized artifact is truncated or carries the wrong header."""


class BudgetExceeded(AnfSketchError, TimeoutError):
    """A run went past its wall-clock budget."""

    def __init__(self, budget: float, elapsed: float):
        self.budget = budget
        self.elapsed = elapsed
        super().__init__(f"wall-clock budget of {budget:.1f}s exceeded after {elapsed:.1f}s")
