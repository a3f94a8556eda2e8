"""
Enumeration classes for svperturb
"""
from enum import Enum


class FactorKind(Enum):
    """How the orthogonal factors of the signal matrix are built"""
    IDENTITY = "identity"
    RANDOM = "random"


class NoiseStream(Enum):
    """Independent substream families derived from one master seed"""
    REPLICATE = 0
    SIGNAL = 1
    PROBE = 2
    REGIME = 3
    ORACLE = 4


class AcceptanceSuite(Enum):
    """Named acceptance suites of the verify command"""
    ALGEBRA = "algebra"
    BOUNDS = "bounds"
    SCALING = "scaling"
    DEBIAS = "debias"
    ALL = "all"


class ExitCode(Enum):
    """Process exit codes of the command line interface"""
    SUCCESS = 0
    USAGE_ERROR = 1
    NUMERICAL_FAILURE = 2
    ACCEPTANCE_FAILURE = 3


class ErrorCodes(Enum):
    """Error codes for numerical and experiment operations"""
    NON_SYMMETRIC = 'LINALG_001'
    NON_FINITE = 'LINALG_002'
    DIMENSION_MISMATCH = 'LINALG_003'
    NON_UNIT = 'LINALG_004'
    EMPTY_SPECTRUM = 'SPECTRAL_001'
    EIGENVALUE_ON_CONTOUR = 'SPECTRAL_002'
    INDEX_OUT_OF_RANGE = 'SPECTRAL_003'
    MULTIPLICITY_NOT_ONE = 'ESTIMATOR_001'
    SPECTRUM_TOO_LONG = 'EXPERIMENT_001'
    INSUFFICIENT_REPLICATES = 'EXPERIMENT_002'
    DEGENERATE_FIT = 'EXPERIMENT_003'
    IO_FAILURE = 'IO_001'
    INVALID_CONFIGURATION = 'CONFIG_001'
