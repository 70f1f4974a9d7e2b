"""Small-instance oracle and invariant checks behind ``parallel-vq verify``."""

import time
from dataclasses import dataclass

import numpy as np

from .asynchronous import AsyncConfig, DelayModel, run_async
from .core import StepSchedule, h_term, nearest_prototype, run_sequential, step_value, vq_step
from .datagen import MixtureSpec, init_prototypes, make_sharded
from .metrics import distortion
from .sync import AVERAGING, DELTA_MERGE, SyncConfig, run_sync


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _rel_err(a, b):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def _instance(seed, M=4, n=200, kappa=6, dim=3):
    spec = MixtureSpec.default(seed, dim=dim, n_components=4, sigma=0.05)
    return make_sharded(spec, M, n, seed), init_prototypes(spec, kappa, seed)


def check_sequential_equivalence(steps=2000):
    data, w0 = _instance(1, M=1)
    schedule = StepSchedule.default_for(data.n)
    ref = run_sequential(data[0], w0, schedule, steps, snapshot_every=1).states
    bad = []
    for scheme in (AVERAGING, DELTA_MERGE):
        for tau in (1, 10, 100):
            res = run_sync(SyncConfig(1, tau, steps, schedule, scheme), data, w0,
                           eval_every=steps, keep_states=True)
            if not np.array_equal(res.states[:, 0], ref):
                bad.append(f"{scheme}/tau={tau}")
    return not bad, "bitwise equal for both schemes, tau in {1,10,100}" if not bad else f"differs: {bad}"


def check_telescoping(instances=20, tau=64):
    worst = 0.0
    for seed in range(instances):
        data, w0 = _instance(100 + seed, M=1)
        schedule = StepSchedule.default_for(data.n)
        traj = run_sequential(data[0], w0, schedule, tau, snapshot_every=1).states
        closed = w0.copy()
        for t in range(tau):
            closed -= step_value(schedule, t + 1) * h_term(data[0][t % data.n], traj[t])
        worst = max(worst, _rel_err(closed, traj[-1]))
    return worst <= 1e-12, f"max relative error {worst:.2e} over {instances} instances"


def check_averaging_rewrite(M=3, tau=5, syncs=4):
    data, w0 = _instance(7, M=M)
    schedule = StepSchedule.default_for(data.n)
    res = run_sync(SyncConfig(M, tau, tau * syncs, schedule, AVERAGING), data, w0,
                   eval_every=tau, keep_states=True)
    worst = 0.0
    for k in range(1, syncs + 1):
        start = (k - 1) * tau
        closed = res.states[start, 0].copy()
        for t in range(start, start + tau):
            mean_h = sum(h_term(data[j][t % data.n], res.states[t, j]) for j in range(M)) / M
            closed -= step_value(schedule, t + 1) * mean_h
        worst = max(worst, _rel_err(closed, res.states[start + tau, 0]))
    return worst <= 1e-10, f"max relative error {worst:.2e} over {syncs} reduce phases"


def check_conservation():
    data, w0 = _instance(11, M=4)
    schedule = StepSchedule.default_for(data.n)
    sync = run_sync(SyncConfig(4, 10, 1000, schedule, DELTA_MERGE), data, w0, eval_every=1000)
    e_sync = _rel_err(sync.shared.w, w0 - sync.delta_total)
    errs = [e_sync]
    for delay in (DelayModel("geometric", 0.5), DelayModel("constant", c=3)):
        res = run_async(AsyncConfig(4, 1000, 10, schedule, delay, 1000, seed=5), data, w0)
        in_flight = sum((w.in_flight.delta.matrix for w in res.workers if w.in_flight is not None),
                        np.zeros_like(w0))
        errs.append(_rel_err(res.reducer.w, w0 - (res.shipped_total - in_flight)))
    worst = max(errs)
    return worst <= 1e-10, f"max relative error {worst:.2e} (sync delta + 2 async runs)"


def check_staleness(c=3, tau=10):
    data, w0 = _instance(13, M=3)
    res = run_async(AsyncConfig(3, 600, tau, StepSchedule.default_for(data.n),
                                DelayModel("constant", c=c), 600), data, w0)
    stale = res.max_staleness()
    return stale <= tau + 2 * c, f"max staleness {stale} ticks (bound {tau + 2 * c})"


def check_kernel(trials=1000, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        kappa, dim = rng.integers(1, 8), rng.integers(1, 5)
        w = rng.normal(size=(kappa, dim))
        z = rng.normal(size=dim)
        h = h_term(z, w)
        if np.count_nonzero(np.any(h != 0, axis=1)) > 1:
            return False, "H has more than one nonzero row"
        w1 = vq_step(w, z, 1.0)
        if not np.array_equal(w1[nearest_prototype(z, w)], z):
            return False, "eps=1 did not snap the winner onto z"
        eps = rng.uniform(0.01, 1.0)
        changed = np.any(vq_step(w, z, eps) != w, axis=1)
        if changed.sum() > 1:
            return False, "vq_step changed more than one row"
        dup = np.vstack([w, w[:1]])
        if nearest_prototype(dup[-1], dup) != 0:
            return False, "tie not broken towards lowest index"
        pts = rng.normal(size=(5, dim))
        if not np.isclose(distortion(w, pts), distortion(w[rng.permutation(kappa)], pts),
                          rtol=1e-12, atol=0):
            return False, "distortion changed under prototype permutation"
    return True, f"{trials} randomized kernel checks"


CHECKS = (
    ("sequential equivalence", check_sequential_equivalence),
    ("telescoping identity", check_telescoping),
    ("averaging rewrite", check_averaging_rewrite),
    ("delta conservation", check_conservation),
    ("staleness bound", check_staleness),
    ("kernel properties", check_kernel),
)


def run_checks():
    results = []
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # report, keep going
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(Check(name, passed, detail, time.perf_counter() - start))
    return results
