import logging
from typing import Any, List, Optional, Tuple

import numpy as np

from config import AlgebraConfig, CLIConfig, LOGGER_NAME

logger = logging.getLogger(LOGGER_NAME)


# Errors
class OvfreeError(Exception):
    """Base class for every error raised by the engine."""


class BoundsError(OvfreeError, IndexError):
    """An order, size or degree lies outside the supported range."""


class ArgumentError(OvfreeError, ValueError):
    """Arity, dimension or shape mismatch."""


class DomainError(OvfreeError):
    """A mathematical precondition does not hold."""


class NumericError(OvfreeError):
    """Singular or non-finite intermediate values."""


class ConvergenceError(OvfreeError):
    """An iteration did not reach its tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class ValidationError(OvfreeError):
    """A job document failed validation; carries (path, message) pairs."""

    def __init__(self, errors: List[Tuple[str, str]]):
        self.errors = list(errors)
        lines = [f"{path}: {message}" for path, message in self.errors]
        super().__init__("invalid job spec:\n  " + "\n  ".join(lines))


def get_logger(name):
    """Child of the package logger."""
    return logger.getChild(name)


def configure_logging(verbose=False):
    """Attach a stderr handler to the package logger (CLI only)."""
    level = logging.DEBUG if verbose else logging.WARNING
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(level)


# Tolerance helpers
def close(a, b, tol=None):
    """Equality up to the relative tolerance with an absolute floor."""
    tol = AlgebraConfig.TOL_EQ if tol is None else tol
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), 1.0)
    return float(np.max(np.abs(a - b), initial=0.0)) <= max(tol * scale, AlgebraConfig.ABS_FLOOR)


def check_finite(array, what="value"):
    """Raise NumericError when an array holds nan or inf."""
    if not np.all(np.isfinite(array)):
        raise NumericError(f"non-finite {what}")
    return array


# JSON codecs (complex as [re, im], matrices row-major)
def encode_complex(z) -> List[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ArgumentError(f"expected a number or [re, im], got {value!r}")


def encode_matrix(matrix) -> List[List[List[float]]]:
    matrix = np.asarray(matrix)
    return [[encode_complex(entry) for entry in row] for row in matrix]


def decode_matrix(value, dim: Optional[int] = None) -> np.ndarray:
    """Nested rows of [re, im] (or plain numbers) to a complex square array."""
    try:
        rows = [[decode_complex(entry) for entry in row] for row in value]
    except TypeError:
        raise ArgumentError(f"expected a matrix, got {value!r}")
    matrix = np.array(rows, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ArgumentError(f"expected a square matrix, got shape {matrix.shape}")
    if dim is not None and matrix.shape[0] != dim:
        raise ArgumentError(f"expected a {dim}x{dim} matrix, got {matrix.shape[0]}x{matrix.shape[1]}")
    return matrix


def to_jsonable(value: Any) -> Any:
    """Convert report values (arrays, complex, numpy scalars) to plain JSON types."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return to_jsonable(value.tolist())
        return value.tolist()
    if isinstance(value, (complex, np.complexfloating)):
        return encode_complex(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


# Formatting
def format_complex(z, digits=None) -> str:
    """Render as a+bi with the configured significant digits."""
    digits = CLIConfig.TABLE_DIGITS if digits is None else digits
    z = complex(z)
    return f"{z.real:.{digits}g}{z.imag:+.{digits}g}i"


def format_matrix(matrix, digits=None) -> str:
    matrix = np.atleast_2d(np.asarray(matrix))
    rows = ["[" + ", ".join(format_complex(entry, digits) for entry in row) + "]" for row in matrix]
    return "[" + ", ".join(rows) + "]"
