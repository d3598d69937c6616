"""
Custom exceptions for stretchmetrics

This module defines all custom exceptions used throughout the application.
Every exception carries a stable ``error_name`` that the CLI prints on failure.
"""


class StretchMetricsError(Exception):
    """Base exception for all stretchmetrics errors"""
    error_name = 'StretchMetricsError'


class FileNotFoundError(StretchMetricsError):
    """Raised when an input file is not found"""
    error_name = 'FileMissing'

    def __init__(self, file_path: str, message: str = None):
        self.file_path = file_path
        if message is None:
            message = f"File not found: {file_path}"
        super().__init__(message)


# ============================================================================
# Parser errors
# ============================================================================

class ParseError(StretchMetricsError):
    """Raised when an instrument log cannot be parsed"""
    error_name = 'ParseError'

    def __init__(self, message: str, row_number: int = None, row_content: str = None):
        self.row_number = row_number
        self.row_content = row_content
        if row_number:
            message = f"Parse error at row {row_number}: {message}"
        super().__init__(message)


class SchemaMismatchError(ParseError):
    """Header differs from the expected CSV schema"""
    error_name = 'SchemaMismatch'


class TooFewSamplesError(ParseError):
    """Fewer than two data rows"""
    error_name = 'TooFewSamples'


class NonMonotonicTimeError(ParseError):
    """Timestamp not strictly greater than the previous row"""
    error_name = 'NonMonotonicTime'


class NonPositiveResistanceError(ParseError):
    """Resistance value <= 0"""
    error_name = 'NonPositiveResistance'


class NegativeDisplacementError(ParseError):
    """Displacement value < 0"""
    error_name = 'NegativeDisplacement'


class InvalidValueError(ParseError):
    """Unparseable or out-of-range cell"""
    error_name = 'InvalidValue'


# ============================================================================
# Analysis errors
# ============================================================================

class AnalysisError(StretchMetricsError):
    """Base class for domain failures during analysis"""
    error_name = 'AnalysisError'


class WindowTooShortError(AnalysisError):
    error_name = 'WindowTooShort'


class NoOverlapError(AnalysisError):
    error_name = 'NoOverlap'


class DegenerateTensileTraceError(AnalysisError):
    error_name = 'DegenerateTensileTrace'


class NoCyclesFoundError(AnalysisError):
    error_name = 'NoCyclesFound'


class DegenerateGridError(AnalysisError):
    error_name = 'DegenerateGrid'


class ZeroLoadingAreaError(AnalysisError):
    error_name = 'ZeroLoadingArea'


class TooFewCyclesError(AnalysisError):
    error_name = 'TooFewCycles'


class NonPositiveInterceptError(AnalysisError):
    error_name = 'NonPositiveIntercept'


class MissingForceError(AnalysisError):
    error_name = 'MissingForce'


class NonMonotonicStrainError(AnalysisError):
    error_name = 'NonMonotonicStrain'


class DegeneratePointsError(AnalysisError):
    error_name = 'DegeneratePoints'


class AllSamplesBelowThresholdError(AnalysisError):
    error_name = 'AllSamplesBelowThreshold'


# ============================================================================
# Usage errors
# ============================================================================

class ValidationError(StretchMetricsError):
    """Raised when input validation fails"""
    error_name = 'InvalidParams'

    def __init__(self, parameter: str, message: str):
        self.parameter = parameter
        super().__init__(f"Validation error for '{parameter}': {message}")


class ConfigurationError(StretchMetricsError):
    """Raised when configuration is invalid or missing"""
    error_name = 'ConfigurationError'

    def __init__(self, message: str, config_file: str = None):
        self.config_file = config_file
        if config_file:
            message = f"Configuration error in {config_file}: {message}"
        super().__init__(message)
