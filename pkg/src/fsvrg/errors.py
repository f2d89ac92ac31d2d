"""Exception types shared across the package."""


class ParseError(ValueError):
    """Malformed LIBSVM or spec-file input."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class InvalidDataError(ValueError):
    """Data violates a structural requirement (e.g. an all-zero row)."""


class ParameterError(ValueError):
    """A parameter is outside its admissible range."""


class StepSizeTooLargeError(ParameterError):
    """Step size violates the admissible bound for the requested schedule."""


class WrongCaseError(ValueError):
    """Operation called on an objective of the wrong smoothness/convexity case."""


class UnsupportedCombinationError(ValueError):
    """Loss/regularizer combination has no defined update rule."""


class LabelError(ValueError):
    """Labels do not match what the pipeline requires."""


class ComparabilityError(ValueError):
    """Traces being compared do not share the same objective."""


class DivergenceError(RuntimeError):
    """An iterate became non-finite during optimization."""

    def __init__(self, epoch, step, step_size):
        super().__init__(
            f"non-finite iterate at epoch {epoch}, inner step {step} "
            f"(step_size={step_size:g}); reduce the step size"
        )
        self.epoch = epoch
        self.step = step
        self.step_size = step_size


class BudgetExhaustedError(RuntimeError):
    """Iteration budget ran out before the convergence tolerance was met."""

    def __init__(self, message, best_value):
        super().__init__(message)
        self.best_value = best_value
