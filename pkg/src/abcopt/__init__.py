"""Bee-colony optimization for mixed hyperparameter search spaces."""

__version__ = "0.1.0"

from .colony import (
    VARIANTS,
    Colony,
    ColonyConfig,
    ConvergenceTrace,
    IterationStats,
    RunAborted,
    RunResult,
    TraceRow,
    neighbor_value,
    run,
    selection_probabilities,
)
from .kmeans import Clustering, cluster, seed_population
from .objective import (
    PROTOCOL_VERSION,
    BuiltinEvaluator,
    EvaluationError,
    EvaluationLedger,
    EvaluationRecord,
    ExternalEvaluator,
    ObjectiveSpec,
    ProtocolError,
    evaluate,
    fitness,
    make_evaluator,
    make_noisy_sphere,
    rastrigin,
    register_benchmark,
    rosenbrock,
    spawn_external,
    sphere,
)
from .space import (
    FoodSource,
    ParamSpec,
    Position,
    SearchSpace,
    fitness_from_objective,
)

__all__ = [
    "VARIANTS",
    "Colony",
    "ColonyConfig",
    "ConvergenceTrace",
    "IterationStats",
    "RunAborted",
    "RunResult",
    "TraceRow",
    "neighbor_value",
    "run",
    "selection_probabilities",
    "Clustering",
    "cluster",
    "seed_population",
    "PROTOCOL_VERSION",
    "BuiltinEvaluator",
    "EvaluationError",
    "EvaluationLedger",
    "EvaluationRecord",
    "ExternalEvaluator",
    "ObjectiveSpec",
    "ProtocolError",
    "evaluate",
    "fitness",
    "make_evaluator",
    "make_noisy_sphere",
    "rastrigin",
    "register_benchmark",
    "rosenbrock",
    "spawn_external",
    "sphere",
    "FoodSource",
    "ParamSpec",
    "Position",
    "SearchSpace",
    "fitness_from_objective",
]
