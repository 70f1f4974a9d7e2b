"""Lock-step parallel VQ with instantaneous communication.

Two reduce rules are provided:

* ``averaging``: every ``tau`` steps the shared version becomes the mean of
  the worker versions.
* ``delta``: every ``tau`` steps each worker's accumulated displacement is
  subtracted from the shared version, so the shared version moves by the sum
  of all translations rather than their mean.

One wall-clock tick is one VQ step performed concurrently by every worker.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import ShapeError, check_point, check_positive_int, check_prototypes
from .core import StepSchedule, step_value, vq_step_batch
from .metrics import PerformanceCurve, record

AVERAGING = "averaging"
DELTA_MERGE = "delta"
SCHEMES = (AVERAGING, DELTA_MERGE)


@dataclass(frozen=True, eq=False)
class Delta:
    """Displacement accumulated by ``worker`` over steps ``from_t .. to_t - 1``."""

    matrix: np.ndarray
    from_t: int
    to_t: int
    worker: int = 0

    def __post_init__(self):
        if self.to_t <= self.from_t:
            raise ValueError(f"delta interval must be non-empty, got [{self.from_t}, {self.to_t})")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("delta contains NaN or Inf")


@dataclass(frozen=True, eq=False)
class SharedVersion:
    w: np.ndarray
    version: int = 0


@dataclass(frozen=True, eq=False)
class WorkerState:
    """A worker's local version and the displacement accumulated since ``anchor_t``."""

    w: np.ndarray
    delta: np.ndarray
    anchor_t: int = 0
    t: int = 0
    index: int = 0

    @classmethod
    def fresh(cls, w, t=0, index=0):
        w = check_prototypes(w, copy=True)
        return cls(w, np.zeros_like(w), t, t, index)

    def take_delta(self):
        """Package the running displacement as a :class:`Delta`."""
        return Delta(self.delta.copy(), self.anchor_t, self.t, self.index)


def accumulate_delta(state, z, eps):
    """One local VQ step that also adds ``eps * H(z, w)`` to the running displacement."""
    if not eps > 0:
        raise ValueError(f"step size must be positive, got {eps}")
    z = check_point(z, state.w.shape[1])
    W = state.w.copy()[None]
    winners, scaled = vq_step_batch(W, z[None], float(eps))
    delta = state.delta.copy()
    delta[winners[0]] += scaled[0]
    return replace(state, w=W[0], delta=delta, t=state.t + 1)


def average_merge(versions):
    """Entrywise mean of the worker versions.

    Computed as ``v0 + sum_j (v_j - v0) / M`` with the sum in worker order, so
    a list of identical versions averages to exactly that version.
    """
    versions = [check_prototypes(v) for v in versions]
    if not versions:
        raise ValueError("cannot average an empty list of versions")
    first = versions[0]
    acc = np.zeros_like(first)
    for v in versions[1:]:
        if v.shape != first.shape:
            raise ShapeError(f"version shapes differ: {first.shape} vs {v.shape}")
        acc += v - first
    return first + acc / len(versions)


def delta_merge(srd, deltas, base=None):
    """Subtract every worker's displacement from the shared version.

    All deltas must cover the same step interval. When ``base`` is given it
    must be the realized local version of the first delta's worker, i.e.
    ``srd.w - deltas[0]`` evaluated step by step; it replaces that
    subtraction so a single worker reproduces its own trajectory exactly.
    """
    if not deltas:
        raise ValueError("delta_merge needs at least one delta")
    interval = (deltas[0].from_t, deltas[0].to_t)
    for d in deltas:
        if (d.from_t, d.to_t) != interval:
            raise ValueError(f"delta from worker {d.worker} covers [{d.from_t}, {d.to_t}), "
                             f"expected [{interval[0]}, {interval[1]})")
        if d.matrix.shape != srd.w.shape:
            raise ShapeError(f"delta shape {d.matrix.shape} does not match shared version {srd.w.shape}")
    if base is None:
        total = deltas[0].matrix.copy()
        for d in deltas[1:]:
            total += d.matrix
        w = srd.w - total
    else:
        w = np.array(base, dtype=np.float64)
        if w.shape != srd.w.shape:
            raise ShapeError(f"base shape {w.shape} does not match shared version {srd.w.shape}")
        for d in deltas[1:]:
            w -= d.matrix
    return SharedVersion(w, srd.version + 1)


@dataclass(frozen=True)
class SyncConfig:
    M: int
    tau: int
    total_steps: int
    schedule: StepSchedule = field(default_factory=StepSchedule)
    scheme: str = DELTA_MERGE

    def __post_init__(self):
        check_positive_int(self.M, "M")
        check_positive_int(self.tau, "tau")
        check_positive_int(self.total_steps, "total_steps", minimum=0)
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")


@dataclass
class SyncResult:
    curve: PerformanceCurve
    shared: SharedVersion
    locals: np.ndarray
    # Sum of every merged delta, kept apart from the shared version for
    # conservation checks. Zero for the averaging scheme.
    delta_total: np.ndarray
    states: np.ndarray = None

    @property
    def final(self):
        return self.locals[0]


def run_sync(config, data, w0, eval_every=None, seed=0, keep_states=False):
    """Simulate ``config.total_steps`` lock-step ticks over ``data``.

    Worker ``i`` consumes ``data[i][t % n]`` at tick ``t`` with
    ``eps = schedule(t + 1)``. A reduce fires after every ``tau`` completed
    ticks. The curve records the shared version at reduce ticks and worker
    0's local version otherwise, at tick 0, every ``eval_every`` ticks
    (default ``tau``) and at the final tick. With ``keep_states`` the result
    holds every worker's version after each tick, shape (T + 1, M, kappa, dim).
    """
    shards = np.asarray(getattr(data, "shards", data), dtype=np.float64)
    w0 = check_prototypes(w0)
    M, n, dim = shards.shape
    if M != config.M:
        raise ShapeError(f"config has M={config.M} but data has {M} shards")
    if dim != w0.shape[1]:
        raise ShapeError(f"data dimension {dim} does not match prototypes {w0.shape[1]}")
    eval_every = config.tau if eval_every is None else check_positive_int(eval_every, "eval_every")
    tau, total = config.tau, config.total_steps
    delta_scheme = config.scheme == DELTA_MERGE

    W = np.repeat(w0[None], M, axis=0)
    D = np.zeros_like(W)
    shared = SharedVersion(w0.copy(), 0)
    delta_total = np.zeros_like(w0)
    rows = np.arange(M)
    curve = PerformanceCurve(config.scheme, M, tau, seed)
    record(curve, 0, 0, shared.w, shards)
    states = [W.copy()] if keep_states else None

    for t in range(total):
        winners, scaled = vq_step_batch(W, shards[:, t % n], step_value(config.schedule, t + 1))
        if delta_scheme:
            D[rows, winners] += scaled
        done = t + 1
        synced = done % tau == 0
        if synced:
            if delta_scheme:
                deltas = [Delta(D[j].copy(), done - tau, done, j) for j in range(M)]
                shared = delta_merge(shared, deltas, base=W[0])
                for d in deltas:
                    delta_total += d.matrix
                D[:] = 0.0
            else:
                shared = SharedVersion(average_merge(W), shared.version + 1)
            W[:] = shared.w
        if keep_states:
            states.append(W.copy())
        if done % eval_every == 0 or done == total:
            measured = shared.w if synced else W[0]
            record(curve, done, done * M, measured, shards)

    return SyncResult(curve, shared, W, delta_total,
                      np.stack(states) if keep_states else None)
