"""Asynchronous delta aggregation under random communication delays.

Workers never wait for each other. Each one keeps stepping on its shard and,
once its previous exchange has completed and it has done at least ``tau``
local steps, ships its accumulated displacement to a reducer and asks for
the shared version. One sampled delay ``d`` covers the whole round trip:
the reducer folds the delta in at ``send + ceil(d / 2)`` and hands back the
shared version as of that moment; the worker receives it at ``send + d`` and
replays on top of it the steps it took while waiting.

Within a tick, events run in this order: reducer applications (by worker
index), exchange completions (by worker index), new sends, curve recording,
then one VQ step by every worker.
"""

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import ShapeError, check_point, check_positive_int, check_prototypes
from .core import StepSchedule, step_value, vq_step_batch
from .datagen import ROLE_DELAY, substream
from .metrics import PerformanceCurve, record
from .sync import Delta

GEOMETRIC = "geometric"
CONSTANT = "constant"

ASYNC = "async"


@dataclass(frozen=True)
class DelayModel:
    """Round-trip delay in ticks: ``Geometric(p)`` on {1, 2, ...} or a constant ``c``."""

    kind: str = GEOMETRIC
    p: float = 0.5
    c: int = 1

    def __post_init__(self):
        if self.kind == GEOMETRIC:
            if not 0 < self.p <= 1:
                raise ValueError(f"geometric delay needs p in (0, 1], got {self.p}")
        elif self.kind == CONSTANT:
            check_positive_int(self.c, "constant delay c")
        else:
            raise ValueError(f"unknown delay kind {self.kind!r}")

    @property
    def mean(self):
        return 1.0 / self.p if self.kind == GEOMETRIC else float(self.c)


def sample_delay(model, rng):
    if model.kind == CONSTANT:
        return int(model.c)
    return int(rng.geometric(model.p))


@dataclass(frozen=True, eq=False)
class Exchange:
    delta: Delta
    send_tick: int
    apply_tick: int
    complete_tick: int
    snapshot: np.ndarray = None


@dataclass(frozen=True, eq=False)
class AsyncWorkerState:
    index: int
    w: np.ndarray
    pending: np.ndarray
    pending_from: int = 0
    tick: int = 0
    last_sync_tick: int = 0
    in_flight: Exchange = None

    @classmethod
    def fresh(cls, index, w0):
        w0 = check_prototypes(w0, copy=True)
        return cls(index, w0, np.zeros_like(w0))

    @property
    def local_steps(self):
        return self.tick - self.pending_from


def worker_tick(state, z, eps):
    """One local VQ step; the step's ``eps * H`` is added to the pending delta."""
    z = check_point(z, state.w.shape[1])
    W = state.w.copy()[None]
    winners, scaled = vq_step_batch(W, z[None], float(eps))
    pending = state.pending.copy()
    pending[winners[0]] += scaled[0]
    return replace(state, w=W[0], pending=pending, tick=state.tick + 1)


def start_exchange(state, delay):
    """Ship the pending delta; returns the new state and the shipped :class:`Delta`."""
    if state.in_flight is not None:
        raise RuntimeError(f"worker {state.index} already has an exchange in flight")
    delay = check_positive_int(delay, "delay")
    delta = Delta(state.pending.copy(), state.pending_from, state.tick, state.index)
    exchange = Exchange(delta, state.tick, state.tick + math.ceil(delay / 2), state.tick + delay)
    new = replace(state, pending=np.zeros_like(state.pending), pending_from=state.tick,
                  in_flight=exchange)
    return new, delta


def complete_exchange(state, snapshot, tick=None):
    """Adopt ``snapshot`` minus the delta accumulated since the send."""
    if state.in_flight is None:
        raise RuntimeError(f"worker {state.index} has no exchange in flight")
    tick = state.tick if tick is None else tick
    if tick < state.in_flight.complete_tick:
        raise RuntimeError(f"worker {state.index}: exchange completes at tick "
                           f"{state.in_flight.complete_tick}, not {tick}")
    w = np.asarray(snapshot, dtype=np.float64) - state.pending
    return replace(state, w=w, last_sync_tick=tick, in_flight=None)


@dataclass(frozen=True, eq=False)
class ReducerState:
    w: np.ndarray
    version: int = 0
    applied: tuple = ()
    applied_keys: frozenset = frozenset()

    @classmethod
    def fresh(cls, w0, M):
        return cls(check_prototypes(w0, copy=True), 0, (0,) * M, frozenset())


def reducer_apply(red, delta):
    """``w_shared <- w_shared - delta``; each (worker, interval) is accepted once."""
    key = (delta.worker, delta.from_t, delta.to_t)
    if key in red.applied_keys:
        raise RuntimeError(f"delta {key} applied twice")
    if delta.matrix.shape != red.w.shape:
        raise ShapeError(f"delta shape {delta.matrix.shape} does not match shared {red.w.shape}")
    applied = list(red.applied)
    applied[delta.worker] += 1
    return ReducerState(red.w - delta.matrix, red.version + 1, tuple(applied),
                        red.applied_keys | {key})


@dataclass(frozen=True)
class AsyncConfig:
    M: int
    total_ticks: int
    tau: int = 10
    schedule: StepSchedule = field(default_factory=StepSchedule)
    delay: DelayModel = field(default_factory=DelayModel)
    eval_every: int = None
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.M, "M")
        check_positive_int(self.total_ticks, "total_ticks", minimum=0)
        check_positive_int(self.tau, "tau")
        if self.eval_every is not None:
            check_positive_int(self.eval_every, "eval_every")


@dataclass
class AsyncResult:
    curve: PerformanceCurve
    reducer: ReducerState
    workers: list
    shipped_total: np.ndarray
    applied_total: np.ndarray
    # (worker, generated tick, applied tick) for every applied delta
    applications: list
    trace: list = None

    @property
    def final(self):
        return self.reducer.w

    def max_staleness(self):
        return max((applied - generated for _, generated, applied in self.applications), default=0)

    def in_flight_count(self):
        return sum(w.in_flight is not None for w in self.workers)


def run_async(config, data, w0, trace=False):
    """Simulate ``config.total_ticks`` ticks of the asynchronous scheme.

    The curve records the reducer's shared version at tick 0, every
    ``eval_every`` ticks (default ``tau``) and at the last tick.
    """
    shards = np.asarray(getattr(data, "shards", data), dtype=np.float64)
    w0 = check_prototypes(w0)
    M, n, dim = shards.shape
    if M != config.M:
        raise ShapeError(f"config has M={config.M} but data has {M} shards")
    if dim != w0.shape[1]:
        raise ShapeError(f"data dimension {dim} does not match prototypes {w0.shape[1]}")
    eval_every = config.eval_every or config.tau
    total, tau = config.total_ticks, config.tau

    rngs = [substream(config.seed, ROLE_DELAY, i) for i in range(M)]
    W = np.repeat(w0[None], M, axis=0)
    pending = np.zeros_like(W)
    pending_from = [0] * M
    last_sync = [0] * M
    flights = [None] * M
    red = ReducerState.fresh(w0, M)
    shipped_total = np.zeros_like(w0)
    applied_total = np.zeros_like(w0)
    applications = []
    events = [] if trace else None
    rows = np.arange(M)
    curve = PerformanceCurve(ASYNC, M, tau, config.seed)

    for u in range(total + 1):
        for i in range(M):
            ex = flights[i]
            if ex is not None and ex.apply_tick == u:
                red = reducer_apply(red, ex.delta)
                applied_total += ex.delta.matrix
                flights[i] = replace(ex, snapshot=red.w)
                applications.append((i, ex.delta.from_t, u))
                if trace:
                    events.append((u, "apply", i, f"{ex.delta.from_t}-{ex.delta.to_t}"))
        for i in range(M):
            ex = flights[i]
            if ex is not None and ex.complete_tick == u:
                W[i] = ex.snapshot - pending[i]
                last_sync[i] = u
                flights[i] = None
                if trace:
                    events.append((u, "complete", i, f"version={red.version}"))
        for i in range(M):
            if flights[i] is None and u - pending_from[i] >= tau:
                delay = sample_delay(config.delay, rngs[i])
                delta = Delta(pending[i].copy(), pending_from[i], u, i)
                flights[i] = Exchange(delta, u, u + math.ceil(delay / 2), u + delay)
                shipped_total += delta.matrix
                pending[i] = 0.0
                pending_from[i] = u
                if trace:
                    events.append((u, "send", i, f"delay={delay}"))
        if u % eval_every == 0 or u == total:
            record(curve, u, u * M, red.w, shards)
        if u == total:
            break
        winners, scaled = vq_step_batch(W, shards[:, u % n], step_value(config.schedule, u + 1))
        pending[rows, winners] += scaled

    workers = [AsyncWorkerState(i, W[i].copy(), pending[i].copy(), pending_from[i], total,
                                last_sync[i], flights[i]) for i in range(M)]
    return AsyncResult(curve, red, workers, shipped_total, applied_total, applications, events)


def write_trace_csv(events, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tick", "event", "worker", "detail"])
        writer.writerows(events)
