"""Speculative-thread transient management for switched digital filters.

A predictor watches the switching function of a two-filter bank, pre-warms
the incoming filter on live input in a parallel worker when a switch looks
imminent, and promotes it at the true switch instant so reconfiguration adds
no latency.  The package provides the IIR filter core, the prediction and
supervision state machine, a deterministic lockstep executor plus a true
threaded executor with identical semantics, and the experiment harness that
compares cold, speculative, and always-on switching strategies.
"""

from .errors import (
    ConfigInvalid,
    IllegalTransition,
    InputMismatch,
    InsufficientHistory,
    InvalidDesignParameters,
    LengthMismatch,
    MissingBenchmark,
    NoSuchWorker,
    SpecFilterError,
    StateOwnershipMismatch,
    UnstableFilter,
    WorkerPanicked,
    ZeroLeadingDenominator,
    ZeroOrderFilter,
)
from .filters import (
    DigitalFilter,
    FilterState,
    default_filter_pair,
    design_cheby1_lowpass,
    make_filter,
    reset,
    run_filter,
    step,
    time_constant_samples,
)
from .switching import (
    CommandKind,
    LifecycleCommand,
    PredictorConfig,
    SupervisorNode,
    SupervisorState,
    SwitchSignal,
    auto_hysteresis,
    bootstrap,
    extrapolate,
    predict_cross,
    select_active,
    suggest_horizon,
    supervise,
)
from .runtime import (
    AlwaysOnPolicy,
    FilterRuntime,
    ResourceBackend,
    ResourceModel,
    SampleTrace,
    SupervisedPolicy,
    TraceRecord,
    WorkerHandle,
    WorkerStatus,
    apply_command,
    resource_level,
    run_concurrent,
    run_lockstep,
)
from .experiment import (
    ErrorMetrics,
    NoiseConfig,
    ScenarioConfig,
    StrategyConfig,
    SuiteResult,
    compute_metrics,
    default_scenario,
    emit_plots,
    gen_input,
    gen_load,
    make_policy,
    run_scenario,
    run_suite,
)
from .config import ExperimentConfig, config_from_dict, default_config_dict, load_config

__version__ = "0.1.0"
