"""Exception hierarchy. Every error carries a machine-readable ``reason`` code."""


class FracperimError(Exception):
    reason = "error"


class ParameterError(FracperimError, ValueError):
    reason = "bad_parameter"


class DegenerateInputError(FracperimError, ValueError):
    reason = "degenerate_input"


class PreconditionError(FracperimError, ValueError):
    reason = "precondition"


class NumericalError(FracperimError, ArithmeticError):
    reason = "numerical_failure"


class NormalizationError(NumericalError):
    reason = "normalization_failure"


class UndefinedRatioError(FracperimError, ArithmeticError):
    """Both sides of a ratio vanish (e.g. the unperturbed sphere)."""

    reason = "undefined_ratio"


class EstimatorInconsistencyError(NumericalError):
    reason = "estimator_inconsistency"


class ConfigError(FracperimError, ValueError):
    reason = "config"
