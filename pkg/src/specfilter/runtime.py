"""Worker lifecycle execution under manager control, with per-sample tracing.

Two executors realize the same per-sample contract:

* lockstep: one logical thread simulates manager plus workers; the reference
  semantics, bit-reproducible for a fixed configuration.
* concurrent: the manager publishes each sample to live worker threads and
  collects their outputs before advancing, so lifecycle transitions only ever
  happen between per-sample barriers.  Traces are value-identical to lockstep.

Concurrency contract: the manager owns the supervisor and the trace; each
worker exclusively owns its FilterState; all communication is message passing
of (sample index, value) pairs.  Nothing here supports concurrent mutation.

Per-sample pipeline: retire expired workers, read the switching function,
run the policy, apply its lifecycle commands, retire same-sample kills, step
every live worker, record.  Promotion therefore lands on the crossing sample
itself and no input sample is dropped or duplicated at a switch.
"""

from __future__ import annotations

import logging
import time
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from queue import SimpleQueue
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigInvalid,
    IllegalTransition,
    NoSuchWorker,
    WorkerPanicked,
)
from .filters import DigitalFilter, FilterState, step
from .switching import (
    CommandKind,
    LifecycleCommand,
    PredictorConfig,
    SupervisorState,
    SwitchSignal,
    bootstrap,
    select_active,
    supervise,
)

logger = logging.getLogger(__name__)

__all__ = [
    "WorkerStatus",
    "WorkerHandle",
    "ResourceBackend",
    "ResourceModel",
    "TraceRecord",
    "SampleTrace",
    "FilterRuntime",
    "SupervisedPolicy",
    "AlwaysOnPolicy",
    "apply_command",
    "resource_level",
    "run_lockstep",
    "run_concurrent",
    "TRACE_HEADER",
]


class WorkerStatus(Enum):
    SPECULATIVE = "SPECULATIVE"
    PRIMARY = "PRIMARY"
    DOOMED = "DOOMED"
    DEAD = "DEAD"


_LIVE = (WorkerStatus.SPECULATIVE, WorkerStatus.PRIMARY, WorkerStatus.DOOMED)


@dataclass
class WorkerHandle:
    """Bookkeeping for one spawned filter worker.

    `deadline` is the sample index at which a DOOMED worker is retired; None
    means no kill is scheduled.  In concurrent mode the state is owned by the
    worker thread from spawn until death and must not be touched here.
    """

    filter_id: int
    status: WorkerStatus
    state: FilterState
    spawned_at: int
    deadline: int | None = None

    @property
    def live(self) -> bool:
        return self.status in _LIVE


class ResourceBackend:
    """Platform hook for core/frequency control.  The default does nothing.

    Subclass and pass to FilterRuntime to drive real knobs; the simulation
    itself only tracks the requested levels.
    """

    def set_active_cores(self, cores: int) -> None:
        pass

    def set_frequency(self, level: str) -> None:
        pass


@dataclass(frozen=True)
class ResourceModel:
    """Simulated compute pool: one manager core plus one core per live worker."""

    active_cores: int = 1
    frequency_level: str = "LOW"


TRACE_HEADER = "n,u,load,g,node,primary_id,y_primary,y_spec,cores,events"


@dataclass(frozen=True)
class TraceRecord:
    n: int
    u: float
    load: float
    g: float
    node: str
    primary_id: int
    y_primary: float
    y_spec: float | None
    cores: int
    events: tuple[str, ...]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


class SampleTrace:
    """Per-sample record of one run, with bit-faithful CSV serialization.

    Records carry the inputs, the switching function, the supervisor node,
    both filter outputs where available, the simulated core count, and the
    lifecycle events fired.  Floats serialize with 17 significant digits so a
    CSV round-trip is exact.
    """

    def __init__(self, records: list[TraceRecord], meta: Mapping[str, str] | None = None):
        self.records = records
        self.meta = dict(meta or {})

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]

    @property
    def n(self) -> np.ndarray:
        return np.array(self.column("n"), dtype=np.int64)

    @property
    def u(self) -> np.ndarray:
        return np.array(self.column("u"), dtype=np.float64)

    @property
    def load(self) -> np.ndarray:
        return np.array(self.column("load"), dtype=np.float64)

    @property
    def g(self) -> np.ndarray:
        return np.array(self.column("g"), dtype=np.float64)

    @property
    def y_primary(self) -> np.ndarray:
        return np.array(self.column("y_primary"), dtype=np.float64)

    @property
    def y_spec(self) -> np.ndarray:
        """Secondary worker output with NaN where no second worker ran."""
        return np.array(
            [np.nan if r.y_spec is None else r.y_spec for r in self.records], dtype=np.float64
        )

    @property
    def primary_id(self) -> np.ndarray:
        return np.array(self.column("primary_id"), dtype=np.int64)

    @property
    def cores(self) -> np.ndarray:
        return np.array(self.column("cores"), dtype=np.int64)

    def overlap_samples(self) -> int:
        """Number of samples on which two workers produced output."""
        return sum(1 for r in self.records if r.y_spec is not None)

    def switch_samples(self) -> list[int]:
        """Samples at which a worker was promoted to primary."""
        return [r.n for r in self.records if any(e.startswith("ACTIVATE_THREAD") for e in r.events)]

    def event_count(self, prefix: str) -> int:
        return sum(1 for r in self.records for e in r.events if e.startswith(prefix))

    def same_records(self, other: "SampleTrace") -> bool:
        """Field-for-field equality of the per-sample records (floats bitwise)."""
        return self.records == other.records

    def to_csv_text(self) -> str:
        lines = ["# specfilter-trace v1"]
        for k in sorted(self.meta):
            lines.append(f"# {k}={self.meta[k]}")
        lines.append(TRACE_HEADER)
        for r in self.records:
            y_spec = "" if r.y_spec is None else _fmt(r.y_spec)
            lines.append(
                ",".join(
                    [
                        str(r.n),
                        _fmt(r.u),
                        _fmt(r.load),
                        _fmt(r.g),
                        r.node,
                        str(r.primary_id),
                        _fmt(r.y_primary),
                        y_spec,
                        str(r.cores),
                        ";".join(r.events),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())

    @classmethod
    def from_csv_text(cls, text: str) -> "SampleTrace":
        meta: dict[str, str] = {}
        records: list[TraceRecord] = []
        header_seen = False
        for line in text.splitlines():
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k] = v
                continue
            if not header_seen:
                if line != TRACE_HEADER:
                    raise ValueError(f"unexpected trace header: {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 10:
                raise ValueError(f"malformed trace row: {line!r}")
            records.append(
                TraceRecord(
                    n=int(parts[0]),
                    u=float(parts[1]),
                    load=float(parts[2]),
                    g=float(parts[3]),
                    node=parts[4],
                    primary_id=int(parts[5]),
                    y_primary=float(parts[6]),
                    y_spec=None if parts[7] == "" else float(parts[7]),
                    cores=int(parts[8]),
                    events=tuple(parts[9].split(";")) if parts[9] else (),
                )
            )
        return cls(records, meta)

    @classmethod
    def from_csv(cls, path) -> "SampleTrace":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_csv_text(fh.read())


class _SerialExecutor:
    """Lockstep realization: workers are stepped inline by the manager."""

    def __init__(self, filters: Mapping[int, DigitalFilter]):
        self._filters = filters
        self._states: dict[int, FilterState] = {}

    def start(self, handle: WorkerHandle) -> None:
        self._states[handle.filter_id] = handle.state

    def step_all(self, fids: Sequence[int], n: int, u: float) -> dict[int, float]:
        out: dict[int, float] = {}
        for fid in fids:
            try:
                out[fid] = step(self._filters[fid], self._states[fid], u)
            except Exception as exc:
                raise WorkerPanicked(
                    f"worker for filter {fid} failed at sample {n}: {exc!r}"
                ) from exc
        return out

    def stop(self, fid: int) -> None:
        self._states.pop(fid, None)

    def shutdown(self) -> None:
        self._states.clear()


class _WorkerThread:
    """One long-lived worker thread owning its filter state."""

    def __init__(self, filt: DigitalFilter, state: FilterState):
        self._inbox: SimpleQueue = SimpleQueue()
        self._outbox: SimpleQueue = SimpleQueue()
        self._thread = threading.Thread(
            target=self._loop, args=(filt, state), name=f"filter-{filt.id}", daemon=True
        )
        t0 = time.perf_counter()
        self._thread.start()
        self._outbox.get()  # ready handshake; spawn cost never shifts sample semantics
        logger.debug(
            "spawned worker for filter %d in %.1f us", filt.id, 1e6 * (time.perf_counter() - t0)
        )

    def _loop(self, filt: DigitalFilter, state: FilterState) -> None:
        self._outbox.put(("ready", None))
        while True:
            msg = self._inbox.get()
            if msg is None:
                return
            n, u = msg
            try:
                y = step(filt, state, u)
            except BaseException as exc:  # surfaced by collect(), never swallowed
                self._outbox.put(("error", (n, exc)))
                return
            self._outbox.put(("ok", (n, y)))

    def submit(self, n: int, u: float) -> None:
        self._inbox.put((n, u))

    def collect(self, fid: int) -> float:
        kind, payload = self._outbox.get()
        if kind == "error":
            n, exc = payload
            raise WorkerPanicked(f"worker for filter {fid} failed at sample {n}: {exc!r}") from exc
        return payload[1]

    def stop(self) -> None:
        self._inbox.put(None)
        self._thread.join(timeout=10.0)


class _ThreadedExecutor:
    """Concurrent realization with a per-sample publish/collect barrier."""

    def __init__(self, filters: Mapping[int, DigitalFilter]):
        self._filters = filters
        self._threads: dict[int, _WorkerThread] = {}

    def start(self, handle: WorkerHandle) -> None:
        self._threads[handle.filter_id] = _WorkerThread(
            self._filters[handle.filter_id], handle.state
        )

    def step_all(self, fids: Sequence[int], n: int, u: float) -> dict[int, float]:
        for fid in fids:
            self._threads[fid].submit(n, u)
        return {fid: self._threads[fid].collect(fid) for fid in fids}

    def stop(self, fid: int) -> None:
        worker = self._threads.pop(fid, None)
        if worker is not None:
            worker.stop()

    def shutdown(self) -> None:
        for fid in list(self._threads):
            self.stop(fid)


class FilterRuntime:
    """Worker table, lifecycle transitions, and the simulated resource pool."""

    def __init__(
        self,
        filters: Mapping[int, DigitalFilter],
        executor=None,
        backend: ResourceBackend | None = None,
    ):
        self.filters = dict(filters)
        self.workers: dict[int, WorkerHandle] = {}
        self._executor = executor if executor is not None else _SerialExecutor(self.filters)
        self._backend = backend if backend is not None else ResourceBackend()
        self._last_cores = 1
        self._last_freq = "LOW"

    # -- queries ---------------------------------------------------------

    def live_workers(self) -> list[WorkerHandle]:
        return [h for h in self.workers.values() if h.live]

    @property
    def primary_id(self) -> int | None:
        for h in self.workers.values():
            if h.status is WorkerStatus.PRIMARY:
                return h.filter_id
        return None

    @property
    def resources(self) -> ResourceModel:
        live = len(self.live_workers())
        return ResourceModel(
            active_cores=1 + live, frequency_level="HIGH" if live >= 2 else "LOW"
        )

    # -- transitions -----------------------------------------------------

    def _refresh_resources(self) -> None:
        model = self.resources
        if model.active_cores != self._last_cores:
            self._backend.set_active_cores(model.active_cores)
            self._last_cores = model.active_cores
        if model.frequency_level != self._last_freq:
            self._backend.set_frequency(model.frequency_level)
            self._last_freq = model.frequency_level

    def apply_command(self, cmd: LifecycleCommand, events: list[str] | None = None) -> None:
        """Apply one lifecycle command; raises NoSuchWorker / IllegalTransition."""
        kind = cmd.kind
        if kind is CommandKind.SCALE_RESOURCES:
            self._backend.set_frequency("HIGH" if (cmd.resource_level or 0) >= 2 else "LOW")
        else:
            fid = cmd.target
            handle = self.workers.get(fid)
            if kind is CommandKind.RUN_THREAD:
                if fid not in self.filters:
                    raise NoSuchWorker(f"unknown filter id {fid}")
                if handle is not None and handle.live:
                    raise IllegalTransition(f"filter {fid} already has a live worker")
                handle = WorkerHandle(
                    filter_id=fid,
                    status=WorkerStatus.SPECULATIVE,
                    state=FilterState.zeros(self.filters[fid]),
                    spawned_at=cmd.at,
                )
                self.workers[fid] = handle
                self._executor.start(handle)
            elif handle is None:
                raise NoSuchWorker(f"no worker for filter {fid}")
            elif kind is CommandKind.ACTIVATE_THREAD:
                if handle.status is not WorkerStatus.SPECULATIVE:
                    raise IllegalTransition(
                        f"cannot activate worker in status {handle.status.value}"
                    )
                old = self.primary_id
                if old is not None:
                    self.workers[old].status = WorkerStatus.DOOMED
                handle.status = WorkerStatus.PRIMARY
                handle.deadline = None
            elif kind is CommandKind.KILL_THREAD:
                if handle.status in (WorkerStatus.PRIMARY, WorkerStatus.DEAD):
                    raise IllegalTransition(
                        f"cannot kill worker in status {handle.status.value}"
                    )
                handle.status = WorkerStatus.DOOMED
                handle.deadline = cmd.at
            elif kind is CommandKind.CANCEL_KILL:
                if handle.status is not WorkerStatus.DOOMED:
                    raise IllegalTransition(
                        f"cannot cancel kill for worker in status {handle.status.value}"
                    )
                handle.status = WorkerStatus.SPECULATIVE
                handle.deadline = None
        if events is not None:
            events.append(cmd.label())
        self._refresh_resources()

    def expire(self, n: int, events: list[str] | None = None) -> None:
        """Retire DOOMED workers whose deadline has arrived; scales down at expiry."""
        for fid in sorted(self.workers):
            handle = self.workers[fid]
            if (
                handle.status is WorkerStatus.DOOMED
                and handle.deadline is not None
                and handle.deadline <= n
            ):
                handle.status = WorkerStatus.DEAD
                self._executor.stop(fid)
                if events is not None:
                    events.append(f"KILL_EXPIRED({fid})")
                    events.append(f"SCALE_RESOURCES({len(self.live_workers())})")
        self._refresh_resources()

    def step_live(self, n: int, u: float) -> dict[int, float]:
        fids = sorted(h.filter_id for h in self.live_workers())
        return self._executor.step_all(fids, n, u)

    def finalize(self, events: list[str] | None = None) -> None:
        """Force-kill every non-primary worker and stop all executor resources."""
        for fid in sorted(self.workers):
            handle = self.workers[fid]
            if handle.live and handle.status is not WorkerStatus.PRIMARY:
                handle.status = WorkerStatus.DEAD
                self._executor.stop(fid)
                if events is not None:
                    events.append(f"FORCE_KILL({fid})")
        self._executor.shutdown()
        self._refresh_resources()


def apply_command(cmd: LifecycleCommand, runtime: FilterRuntime) -> FilterRuntime:
    """Apply one lifecycle command to the runtime (mutated in place and returned)."""
    runtime.apply_command(cmd)
    return runtime


def resource_level(runtime: FilterRuntime) -> ResourceModel:
    """Current simulated resource level under the default accounting policy."""
    return runtime.resources


class SupervisedPolicy:
    """Drives the four-node supervisor; one instance drives exactly one run."""

    def __init__(self, cfg: PredictorConfig, f1: int = 1, f2: int = 2):
        self.cfg = cfg
        self.f1 = f1
        self.f2 = f2
        self._state: SupervisorState | None = None

    @property
    def node_label(self) -> str:
        return self._state.node.value if self._state is not None else ""

    def update(self, sig: SwitchSignal) -> list[LifecycleCommand]:
        if self._state is None:
            self._state, primary = bootstrap(sig.g_now, self.f1, self.f2)
            return [
                LifecycleCommand(CommandKind.SCALE_RESOURCES, None, sig.n, resource_level=1),
                LifecycleCommand(CommandKind.RUN_THREAD, primary, sig.n),
                LifecycleCommand(CommandKind.ACTIVATE_THREAD, primary, sig.n),
            ]
        self._state, cmds = supervise(self._state, sig, self.cfg, self.f1, self.f2)
        return cmds


class AlwaysOnPolicy:
    """Both filters run constantly; output is multiplexed by the sign rule.

    The transient-free reference used as the error benchmark, and the limit
    the speculative strategy degenerates to at full prediction horizon.
    """

    def __init__(self, f1: int = 1, f2: int = 2):
        self.f1 = f1
        self.f2 = f2
        self._primary: int | None = None

    @property
    def node_label(self) -> str:
        return "F1_ONLY" if self._primary == self.f1 else "F2_ONLY"

    def update(self, sig: SwitchSignal) -> list[LifecycleCommand]:
        if self._primary is None:
            self._primary = select_active(sig.g_now, current=self.f1, f1=self.f1, f2=self.f2)
            return [
                LifecycleCommand(CommandKind.SCALE_RESOURCES, None, sig.n, resource_level=2),
                LifecycleCommand(CommandKind.RUN_THREAD, self.f1, sig.n),
                LifecycleCommand(CommandKind.RUN_THREAD, self.f2, sig.n),
                LifecycleCommand(CommandKind.ACTIVATE_THREAD, self._primary, sig.n),
            ]
        chosen = select_active(sig.g_now, current=self._primary, f1=self.f1, f2=self.f2)
        if chosen == self._primary:
            return []
        old, self._primary = self._primary, chosen
        # The demoted worker is revived immediately: in this policy nothing dies.
        return [
            LifecycleCommand(CommandKind.ACTIVATE_THREAD, chosen, sig.n),
            LifecycleCommand(CommandKind.CANCEL_KILL, old, sig.n),
        ]


def _execute(
    filters: Sequence[DigitalFilter],
    u: Iterable[float],
    load: Iterable[float],
    threshold: float,
    policy,
    executor_cls,
    trace_meta: Mapping[str, str] | None,
) -> SampleTrace:
    if len(filters) != 2 or filters[0].id == filters[1].id:
        raise ConfigInvalid("exactly two filters with distinct ids are required")
    u = np.asarray(u, dtype=np.float64)
    load = np.asarray(load, dtype=np.float64)
    if u.ndim != 1 or load.shape != u.shape or len(u) < 1:
        raise ConfigInvalid("input and load must be equal-length 1-D sequences, length >= 1")

    f_by_id = {f.id: f for f in filters}
    runtime = FilterRuntime(f_by_id, executor=executor_cls(f_by_id))
    sig = SwitchSignal()
    records: list[TraceRecord] = []
    threshold = float(threshold)

    finalized = False
    try:
        for n in range(len(u)):
            events: list[str] = []
            runtime.expire(n, events)
            g = threshold - float(load[n])
            sig.push(g)
            for cmd in policy.update(sig):
                runtime.apply_command(cmd, events)
            runtime.expire(n, events)  # zero-hysteresis kills land this very sample

            outputs = runtime.step_live(n, float(u[n]))
            primary = runtime.primary_id
            if primary is None or primary not in outputs:
                raise ConfigInvalid(f"no primary worker at sample {n}")
            spec_outputs = [y for fid, y in outputs.items() if fid != primary]
            records.append(
                TraceRecord(
                    n=n,
                    u=float(u[n]),
                    load=float(load[n]),
                    g=g,
                    node=policy.node_label,
                    primary_id=primary,
                    y_primary=outputs[primary],
                    y_spec=spec_outputs[0] if spec_outputs else None,
                    cores=runtime.resources.active_cores,
                    events=tuple(events),
                )
            )
        final_events: list[str] = []
        runtime.finalize(final_events)
        finalized = True
        if final_events:
            records[-1] = replace(records[-1], events=records[-1].events + tuple(final_events))
    finally:
        if not finalized:
            runtime.finalize()

    return SampleTrace(records, trace_meta)


def run_lockstep(
    filters: Sequence[DigitalFilter],
    u: Iterable[float],
    load: Iterable[float],
    threshold: float,
    policy,
    *,
    trace_meta: Mapping[str, str] | None = None,
) -> SampleTrace:
    """Deterministic single-threaded execution of manager plus workers."""
    meta = {"executor": "lockstep", **(trace_meta or {})}
    return _execute(filters, u, load, threshold, policy, _SerialExecutor, meta)


def run_concurrent(
    filters: Sequence[DigitalFilter],
    u: Iterable[float],
    load: Iterable[float],
    threshold: float,
    policy,
    *,
    trace_meta: Mapping[str, str] | None = None,
) -> SampleTrace:
    """Threaded execution; value-identical traces to run_lockstep by contract."""
    meta = {"executor": "concurrent", **(trace_meta or {})}
    return _execute(filters, u, load, threshold, policy, _ThreadedExecutor, meta)
