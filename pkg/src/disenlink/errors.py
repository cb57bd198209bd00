"""Exception types. Each carries a short ``category`` used by the CLI error line."""


class DisenLinkError(Exception):
    category = "error"


class GraphFormatError(DisenLinkError):
    category = "parse_error"

    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DimensionMismatchError(DisenLinkError):
    category = "dimension_mismatch"

    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class MissingLabelsError(DisenLinkError):
    category = "missing_labels"


class NegativePoolExhaustedError(DisenLinkError):
    category = "negative_pool_exhausted"


class ShapeError(DisenLinkError, ValueError):
    category = "shape_mismatch"


class NonFiniteGradientError(DisenLinkError, FloatingPointError):
    category = "non_finite_gradient"


class DivergenceError(DisenLinkError, FloatingPointError):
    category = "divergence"

    def __init__(self, message, trace=None):
        self.trace = trace or []
        super().__init__(message)


class ConfigError(DisenLinkError, ValueError):
    category = "config_error"
