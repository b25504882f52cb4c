"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A spec, config file, or option set describes something unsupported."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DataError(ValueError):
    """An input series violates a data precondition."""


class ParseError(DataError):
    """A file could not be parsed; message carries the line number."""


class EstimationError(RuntimeError):
    """An estimator could not produce a result."""


class InferenceError(RuntimeError):
    """A covariance or interval construction failed."""


class EvaluationError(RuntimeError):
    """A fitted object could not be evaluated at the requested point."""


class NumericError(ArithmeticError):
    """A numeric routine failed to converge to its stated tolerance."""


class StudyError(RuntimeError):
    """A Monte Carlo study violated its failure policy."""


# CLI mapping: user mistakes exit 1, numeric/runtime trouble exits 2.
USER_ERRORS = (ConfigurationError, DomainError, DataError, ParseError)
RUNTIME_ERRORS = (EstimationError, InferenceError, EvaluationError, NumericError, StudyError)
