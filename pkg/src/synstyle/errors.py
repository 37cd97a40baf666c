"""Shared exception types; the CLI maps these to process exit codes."""


class ConfigError(Exception):
    """Bad or unknown configuration (exit code 2)."""


class DataError(Exception):
    """Malformed input data or corpus files (exit code 3)."""


class UnparseableError(DataError):
    """No grammar template matches the token sequence."""


class NumericError(Exception):
    """Non-finite values encountered where finite ones are required (exit code 4)."""


class ShapeError(ValueError):
    """Tensor shape mismatch."""


class VocabularyError(IndexError):
    """Token id outside the vocabulary range."""
