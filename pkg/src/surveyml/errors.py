"""Exception hierarchy shared across the package."""


class SurveyError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(SurveyError):
    """File-format or I/O failure while reading CSV/XPT data."""


class DesignError(SurveyError):
    """Invalid or inconsistent survey-design structure."""


class EstimationError(SurveyError):
    """An estimator cannot be computed on the given data."""


class MetricError(SurveyError):
    """A classification metric is undefined for the given inputs."""


class ModelError(SurveyError):
    """Model fitting or inference failure."""


class CalibrationError(SurveyError):
    """Weight-calibration failure (bad targets, non-convergence)."""


class FoldError(SurveyError):
    """Cross-validation fold construction or execution failure."""
