# Core data models, schemas and enums for svperturb

from .enums import (
    AcceptanceSuite,
    ErrorCodes,
    ExitCode,
    FactorKind,
    NoiseStream
)

from .data_models import (
    AlignedEigenvector,
    BiasDecomposition,
    BiasEstimate,
    BiasOracle,
    ClusterProjector,
    DenseMatrix,
    EigenDecomposition,
    EmpiricalProjector,
    NoiseModel,
    NormStats,
    PerturbationSplit,
    ProbePair,
    ProjectorSet,
    RegimeCheck,
    ReplicateBatch,
    ReplicateRecord,
    SignalBundle,
    SpectralDeviation,
    SpectrumClustering,
    SuiteCheck,
    SuiteResult,
    SvdDecomposition,
    Vector
)

from .schemas import (
    ExperimentConfig,
    ScalingFit,
    SummaryReport,
    SweepPoint,
    SweepReport
)

from .exceptions import SpectralException

__all__ = [
    # Enums
    'AcceptanceSuite',
    'ErrorCodes',
    'ExitCode',
    'FactorKind',
    'NoiseStream',

    # Data Models
    'AlignedEigenvector',
    'BiasDecomposition',
    'BiasEstimate',
    'BiasOracle',
    'ClusterProjector',
    'DenseMatrix',
    'EigenDecomposition',
    'EmpiricalProjector',
    'NoiseModel',
    'NormStats',
    'PerturbationSplit',
    'ProbePair',
    'ProjectorSet',
    'RegimeCheck',
    'ReplicateBatch',
    'ReplicateRecord',
    'SignalBundle',
    'SpectralDeviation',
    'SpectrumClustering',
    'SuiteCheck',
    'SuiteResult',
    'SvdDecomposition',
    'Vector',

    # Schemas
    'ExperimentConfig',
    'ScalingFit',
    'SummaryReport',
    'SweepPoint',
    'SweepReport',

    # Exceptions
    'SpectralException'
]
