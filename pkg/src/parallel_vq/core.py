"""Sequential stochastic VQ (online k-means) kernel.

Prototype sets are plain ``(kappa, dim)`` float64 arrays. Every operation
here returns fresh arrays and never mutates its inputs.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import (
    ShapeError,
    check_point,
    check_points,
    check_positive_int,
    check_prototypes,
)

CONSTANT = "constant"
INVERSE = "inverse"
POWER = "power"
_FORMS = (CONSTANT, INVERSE, POWER)

# Initial step of the default schedule is about this value.
DEFAULT_STEP_SCALE = 0.03


@dataclass(frozen=True)
class StepSchedule:
    """Learning-rate sequence ``eps_t`` for ``t >= 1``.

    ``constant``: ``a``; ``inverse``: ``a / (b + t)``;
    ``power``: ``a / (b + t) ** gamma`` with ``gamma`` in (0.5, 1].
    """

    form: str = INVERSE
    a: float = 300.0
    b: float = 10000.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.form not in _FORMS:
            raise ValueError(f"unknown schedule form {self.form!r}; expected one of {_FORMS}")
        if not (np.isfinite(self.a) and self.a > 0):
            raise ValueError(f"schedule a must be positive, got {self.a}")
        if not (np.isfinite(self.b) and self.b >= 0):
            raise ValueError(f"schedule b must be non-negative, got {self.b}")
        if self.form == POWER and not (0.5 < self.gamma <= 1.0):
            raise ValueError(f"power schedule gamma must lie in (0.5, 1], got {self.gamma}")

    @classmethod
    def default_for(cls, n, scale=DEFAULT_STEP_SCALE):
        """Inverse schedule adapted to shards of ``n`` points: ``scale * n / (n + t)``."""
        return cls(INVERSE, a=scale * n, b=float(n))

    def __call__(self, t):
        return step_value(self, t)


def step_value(schedule, t):
    if t < 1:
        raise ValueError(f"step index starts at 1, got {t}")
    if schedule.form == CONSTANT:
        return float(schedule.a)
    if schedule.form == INVERSE:
        return schedule.a / (schedule.b + t)
    return schedule.a / (schedule.b + t) ** schedule.gamma


def _sq_dists(w, z):
    # Shared by the single and batched kernels so both round identically.
    diff = w - z
    return (diff * diff).sum(axis=-1)


def nearest_prototype(z, w):
    """Index of the prototype closest to ``z``; ties go to the lowest index."""
    w = check_prototypes(w)
    z = check_point(z, w.shape[1])
    return int(np.argmin(_sq_dists(w, z)))


def h_term(z, w):
    """Matrix that is zero except for the winning row, which holds ``w_l - z``."""
    w = check_prototypes(w)
    z = check_point(z, w.shape[1])
    h = np.zeros_like(w)
    winner = int(np.argmin(_sq_dists(w, z)))
    h[winner] = w[winner] - z
    return h


def _step_inplace(w, z, eps):
    # (1 - eps) * w_l + eps * z equals w_l - eps * (w_l - z) and lands exactly
    # on z when eps == 1.
    winner = int(np.argmin(_sq_dists(w, z)))
    h = w[winner] - z
    w[winner] = (1.0 - eps) * w[winner] + eps * z
    return winner, h


def vq_step(w, z, eps):
    """One VQ update: ``w - eps * H(z, w)``. Only the winning row moves."""
    if not eps > 0:
        raise ValueError(f"step size must be positive, got {eps}")
    w = check_prototypes(w, copy=True)
    z = check_point(z, w.shape[1])
    _step_inplace(w, z, float(eps))
    return w


def vq_step_batch(W, Z, eps):
    """Advance ``M`` independent versions by one VQ step, in place.

    ``W`` has shape (M, kappa, dim) and ``Z`` shape (M, dim). Returns the
    winning indices and the scaled H rows ``eps * (w_l - z)`` so callers can
    accumulate displacements. Arithmetic matches :func:`vq_step` bit for bit.
    """
    winners = np.argmin(_sq_dists(W, Z[:, None, :]), axis=1)
    rows = np.arange(W.shape[0])
    h = W[rows, winners] - Z
    W[rows, winners] = (1.0 - eps) * W[rows, winners] + eps * Z
    return winners, eps * h


class Trajectory(NamedTuple):
    ticks: np.ndarray
    states: np.ndarray

    @property
    def final(self):
        return self.states[-1]


def run_sequential(shard, w0, schedule, steps, snapshot_every=None):
    """Run ``steps`` sequential VQ updates over ``shard`` cyclically.

    Step ``t`` (0-based) consumes ``shard[t % n]`` with ``eps = schedule(t + 1)``.
    Snapshots are taken at t=0, every ``snapshot_every`` steps, and at the end.
    """
    w = check_prototypes(w0, copy=True)
    shard = check_points(shard, w.shape[1])
    if shard.shape[0] == 0:
        raise ShapeError("shard is empty")
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    if snapshot_every is not None:
        check_positive_int(snapshot_every, "snapshot_every")
    n = shard.shape[0]
    ticks = [0]
    states = [w.copy()]
    for t in range(steps):
        _step_inplace(w, shard[t % n], step_value(schedule, t + 1))
        done = t + 1
        if done == steps or (snapshot_every and done % snapshot_every == 0):
            ticks.append(done)
            states.append(w.copy())
    return Trajectory(np.asarray(ticks), np.stack(states))
