"""Gradient-free optimization with momentum-and-uncertainty adapted
simulated perturbations, plus MeZO / ZO-AdaMM / first-order baselines
and a benchmark harness."""

from .errors import (
    CallbackRaised,
    ClosedHandle,
    ConfigError,
    DegenerateSchedule,
    DimensionMismatch,
    EmptyGrid,
    GradientUnavailable,
    MismatchedObjective,
    NonFiniteLoss,
)
from .estimators import GradEstimate, projected_gradient, spsa_gradient
from .objectives import (
    Minibatch,
    Objective,
    accuracy_objective,
    gaussian_blobs,
    logistic_loss,
    test_function,
)
from .optimizers import (
    OPTIMIZER_KINDS,
    OptimizerConfig,
    RunState,
    StepRecord,
    adam_step,
    adamax_step,
    make_run_state,
    mezo_step,
    run,
    zo_adamm_step,
    zo_adamu_step,
)
from .perturb import mixed_sample, perturb, state_bytes
from .rng import GaussianStream
from .schedule import AnnealConfig, SchedulePreset, ScheduleValues, anneal, schedule_at

__version__ = "0.1.0"
