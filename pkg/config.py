"""
Configuration settings for the ovfree engine.
This file centralizes numerical tolerances and size guards so every module agrees on them.
"""
import os

DEBUG_MODE = False  # Set to True (or pass --verbose) for debug logging

LOGGER_NAME = "ovfree"

# Base algebra settings
class AlgebraConfig:
    MAX_DIM = 3             # Largest d for B = M_d(C)
    MAX_ORDER = 9           # Largest series order (d^(2(n-1)) blow-up guard)
    TOL_EQ = 1e-10          # Relative tolerance for equality tests
    ABS_FLOOR = 1e-12       # Absolute floor for equality tests
    CP_TOL = 1e-10          # Choi minimum eigenvalue must be >= -CP_TOL

# Partition settings
class PartitionConfig:
    N_ENUM_MAX = 10         # Largest n for enumerate_partitions()

# Operator model settings
class FockConfig:
    GRAM_L = 2              # Default word length for Gram certificates
    GRAM_TOL = 1e-9         # Gram minimum eigenvalue must be >= -GRAM_TOL

# Analytic layer settings
class AnalyticConfig:
    RHO_MAX = 0.5           # Series are evaluated only where ||b^-1|| * M < RHO_MAX
    STEP = 1e-4             # Central difference step
    RICHARDSON_STEP = 2e-4  # Second step for the O(step^2) decay check
    MAX_ITER = 200          # Fixed point iteration guard
    FIXED_POINT_TOL = 1e-12
    BURGERS_TOL_CLOSED = 1e-6  # Burgers residual bound with scalar closed forms
    BURGERS_TOL = 1e-5      # Burgers residual bound through series

# Command line settings
class CLIConfig:
    SCHEMA_VERSION = 1
    TABLE_DIGITS = 6        # Significant digits for complex numbers in tables
    THREADS_ENV = "OVFREE_THREADS"
    DEFAULT_TRIALS = 5      # Random instances per verify suite
    DEFAULT_SEED = 0


def thread_count():
    """Worker cap for suites, read from OVFREE_THREADS (at least 1)."""
    raw = os.environ.get(CLIConfig.THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
