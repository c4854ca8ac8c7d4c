"""Switch selection, crossing prediction, and the four-node supervisor.

The supervisor is a pure state-transition function over four nodes:

    F1_ONLY <-> F1_PREDICT_F2 -> F2_ONLY <-> F2_PREDICT_F1 -> F1_ONLY

A positive switching function selects filter 1, negative selects filter 2,
and an exact zero holds the current filter.  While in an ONLY node the
supervisor watches a linear extrapolation of the switching function; when the
extrapolation reaches the boundary within the prediction horizon it spawns a
speculative worker for the other filter and enters the PREDICT node.  The
worker is promoted the moment the sign actually flips, so the switch itself
adds no latency, or scheduled for a delayed kill if the prediction lapses.
Delayed kills give lapsed or outgoing workers a short grace window (the
time-based hysteresis) during which a re-armed prediction revives them with
their warm state intact.

See docs/architecture.md for the full transition table.  All cross-thread
effects are expressed as LifecycleCommand values; this module never touches a
worker directly and must only be driven from the manager.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigInvalid, InsufficientHistory
from .filters import DigitalFilter, time_constant_samples

__all__ = [
    "SupervisorNode",
    "CommandKind",
    "LifecycleCommand",
    "SwitchSignal",
    "PredictorConfig",
    "SupervisorState",
    "auto_hysteresis",
    "select_active",
    "extrapolate",
    "predict_cross",
    "bootstrap",
    "supervise",
    "suggest_horizon",
]


class SupervisorNode(Enum):
    F1_ONLY = "F1_ONLY"
    F1_PREDICT_F2 = "F1_PREDICT_F2"
    F2_ONLY = "F2_ONLY"
    F2_PREDICT_F1 = "F2_PREDICT_F1"


class CommandKind(Enum):
    RUN_THREAD = "RUN_THREAD"
    ACTIVATE_THREAD = "ACTIVATE_THREAD"
    KILL_THREAD = "KILL_THREAD"
    CANCEL_KILL = "CANCEL_KILL"
    SCALE_RESOURCES = "SCALE_RESOURCES"


@dataclass(frozen=True)
class LifecycleCommand:
    """Manager-to-runtime instruction.

    `at` is the sample index the command takes effect; for KILL_THREAD it is
    the kill deadline (emission sample + hysteresis).  `resource_level` is the
    requested number of worker cores and is set only for SCALE_RESOURCES.
    """

    kind: CommandKind
    target: int | None
    at: int
    resource_level: int | None = None

    def label(self) -> str:
        if self.kind is CommandKind.SCALE_RESOURCES:
            return f"SCALE_RESOURCES({self.resource_level})"
        if self.kind is CommandKind.KILL_THREAD:
            return f"KILL_THREAD({self.target}@{self.at})"
        return f"{self.kind.value}({self.target})"


class SwitchSignal:
    """Rolling two-sample history of the switching function g.

    push() advances the sample index by exactly one and shifts g_now into
    g_prev.  Prediction needs at least two observed samples.
    """

    __slots__ = ("g_now", "g_prev", "n", "_count")

    def __init__(self) -> None:
        self.g_now = math.nan
        self.g_prev = math.nan
        self.n = -1
        self._count = 0

    @property
    def history(self) -> int:
        return self._count

    def push(self, g: float) -> None:
        self.g_prev = self.g_now
        self.g_now = float(g)
        self.n += 1
        if self._count < 2:
            self._count += 1


def auto_hysteresis(horizon_n: int) -> int:
    """The 10%-of-horizon rule: round half up, at least 1 sample when armed."""
    if horizon_n < 1:
        return 0
    return max(1, int(math.floor(0.10 * horizon_n + 0.5)))


@dataclass(frozen=True)
class PredictorConfig:
    """Prediction horizon and kill-delay hysteresis, both in samples.

    horizon_n = 0 disables prediction entirely (cold switching); when left
    unspecified the hysteresis defaults to the 10%-of-horizon rule.
    """

    horizon_n: int
    hysteresis_samples: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.horizon_n, int) or self.horizon_n < 0:
            raise ConfigInvalid(f"horizon_n must be a non-negative integer, got {self.horizon_n!r}")
        if self.hysteresis_samples is None:
            object.__setattr__(self, "hysteresis_samples", auto_hysteresis(self.horizon_n))
        elif not isinstance(self.hysteresis_samples, int) or self.hysteresis_samples < 0:
            raise ConfigInvalid(
                f"hysteresis_samples must be a non-negative integer, got {self.hysteresis_samples!r}"
            )


@dataclass(frozen=True)
class SupervisorState:
    """Current node plus the kill deadline of a doomed worker, if any."""

    node: SupervisorNode
    kill_deadline: int | None = None


def select_active(g_now: float, current: int, f1: int = 1, f2: int = 2) -> int:
    """Sign rule for the active filter: positive g selects f1, negative f2.

    Exactly zero holds `current`, avoiding spurious toggles on the boundary.
    """
    if g_now > 0.0:
        return f1
    if g_now < 0.0:
        return f2
    return current


def extrapolate(sig: SwitchSignal, m: int) -> float:
    """Linear extrapolation of g, m samples ahead, from its last two samples."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if sig.history < 2:
        raise InsufficientHistory("extrapolation needs two observed samples")
    return sig.g_now + (sig.g_now - sig.g_prev) * m


def predict_cross(sig: SwitchSignal, n_horizon: int, running: int, f1: int = 1, f2: int = 2) -> bool:
    """True when the extrapolated g crosses the switching boundary within the horizon.

    With filter 2 running the test is g_now*(N+1) > g_prev*N; with filter 1
    running the mirrored inequality applies.  Both are the extrapolation of g
    at n+N compared against zero, rearranged to two multiplies.
    """
    if n_horizon < 1:
        raise ValueError(f"n_horizon must be >= 1, got {n_horizon}")
    if sig.history < 2:
        raise InsufficientHistory("prediction needs two observed samples")
    if running == f2:
        return sig.g_now * (n_horizon + 1) > sig.g_prev * n_horizon
    if running == f1:
        return sig.g_now * (n_horizon + 1) < sig.g_prev * n_horizon
    raise ValueError(f"running filter {running} is neither f1={f1} nor f2={f2}")


def bootstrap(g0: float, f1: int = 1, f2: int = 2) -> tuple[SupervisorState, int]:
    """Initial supervisor state and primary filter for the first sample."""
    primary = select_active(g0, current=f1, f1=f1, f2=f2)
    node = SupervisorNode.F1_ONLY if primary == f1 else SupervisorNode.F2_ONLY
    return SupervisorState(node), primary


def supervise(
    state: SupervisorState,
    sig: SwitchSignal,
    cfg: PredictorConfig,
    f1: int = 1,
    f2: int = 2,
) -> tuple[SupervisorState, list[LifecycleCommand]]:
    """One supervisor transition; call exactly once per pushed sample.

    Returns the successor state and the lifecycle commands to apply at this
    sample.  Total over the state space: unknown inputs simply hold.
    """
    n = sig.n
    h = cfg.hysteresis_samples
    deadline = state.kill_deadline
    if deadline is not None and n >= deadline:
        deadline = None  # grace window over; the runtime retires the worker this sample

    node = state.node
    if node in (SupervisorNode.F1_ONLY, SupervisorNode.F1_PREDICT_F2):
        primary, other = f1, f2
        crossed = sig.g_now < 0.0
        predict_node = SupervisorNode.F1_PREDICT_F2
        own_node = SupervisorNode.F1_ONLY
        other_node = SupervisorNode.F2_ONLY
    else:
        primary, other = f2, f1
        crossed = sig.g_now > 0.0
        predict_node = SupervisorNode.F2_PREDICT_F1
        own_node = SupervisorNode.F2_ONLY
        other_node = SupervisorNode.F1_ONLY

    predicted = (
        cfg.horizon_n >= 1
        and sig.history >= 2
        and predict_cross(sig, cfg.horizon_n, primary, f1, f2)
    )
    kill_at = n + h

    cmds: list[LifecycleCommand] = []
    if node is own_node:
        if crossed:
            # True crossing with no speculative worker armed: revive a doomed
            # worker when its grace window is still open, else switch cold.
            if deadline is not None:
                cmds.append(LifecycleCommand(CommandKind.CANCEL_KILL, other, n))
            else:
                cmds.append(LifecycleCommand(CommandKind.SCALE_RESOURCES, None, n, resource_level=2))
                cmds.append(LifecycleCommand(CommandKind.RUN_THREAD, other, n))
            cmds.append(LifecycleCommand(CommandKind.ACTIVATE_THREAD, other, n))
            cmds.append(LifecycleCommand(CommandKind.KILL_THREAD, primary, kill_at))
            return SupervisorState(other_node, kill_at if h > 0 else None), cmds
        if predicted:
            if deadline is not None:
                cmds.append(LifecycleCommand(CommandKind.CANCEL_KILL, other, n))
            else:
                cmds.append(LifecycleCommand(CommandKind.SCALE_RESOURCES, None, n, resource_level=2))
                cmds.append(LifecycleCommand(CommandKind.RUN_THREAD, other, n))
            return SupervisorState(predict_node), cmds
        return SupervisorState(node, deadline), cmds

    # Predict node: speculative worker for `other` is live.
    if crossed:
        cmds.append(LifecycleCommand(CommandKind.ACTIVATE_THREAD, other, n))
        cmds.append(LifecycleCommand(CommandKind.KILL_THREAD, primary, kill_at))
        return SupervisorState(other_node, kill_at if h > 0 else None), cmds
    if not predicted:
        # Prediction lapsed: schedule the kill; resources scale down at expiry.
        cmds.append(LifecycleCommand(CommandKind.KILL_THREAD, other, kill_at))
        return SupervisorState(own_node, kill_at if h > 0 else None), cmds
    return SupervisorState(node), cmds


def suggest_horizon(
    filters: tuple[DigitalFilter, DigitalFilter], multiple: float = 2.0
) -> int:
    """Guidance for picking the prediction horizon from the filter dynamics.

    A horizon of one to three time constants lets the incoming filter's
    transient decay before promotion; `multiple` selects where in that band
    to sit.  Uses the slower of the two filters.
    """
    if not 1.0 <= multiple <= 3.0:
        raise ValueError(f"multiple should lie in [1, 3], got {multiple}")
    tau = max(time_constant_samples(f) for f in filters)
    return max(1, round(multiple * tau))
