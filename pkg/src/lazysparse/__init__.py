"""Sparse logistic regression with constant-time lazy regularization updates."""

from .bench import BenchReport, run_bench
from .data import (
    Dataset,
    SparseExample,
    generate_synthetic,
    parse_libsvm,
    read_libsvm,
    read_model,
    write_libsvm,
    write_model,
)
from .errors import (
    ContractViolation,
    DimensionMismatch,
    InvalidRate,
    LazySparseError,
    OutOfRange,
    ParseError,
)
from .kernels import Algo, Penalty, RegConfig, sequential_oracle, validate_config
from .schedule import Schedule, ScheduleCache, ScheduleKind
from .trainer import TrainReport, TrainerState, objective, predict_proba, train, train_dense

__version__ = "0.1.0"
