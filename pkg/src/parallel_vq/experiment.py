"""Grid experiments over (scheme, M, tau, seed) with CSV export."""

import csv
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .asynchronous import ASYNC, AsyncConfig, run_async
from .core import run_sequential
from .datagen import (
    MixtureSpec,
    ROLE_INIT,
    ShardedDataset,
    init_prototypes,
    load_dataset,
    make_sharded,
    substream,
)
from .metrics import distortion, time_to_threshold, write_curves_csv
from .sync import SyncConfig, run_sync

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ("scheme", "M", "tau", "seed", "final_distortion", "threshold",
                  "time_to_threshold", "speedup")


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class SummaryRow:
    scheme: str
    M: int
    tau: int
    seed: int
    final_distortion: float
    threshold: float
    time_to_threshold: int = None
    speedup: float = None


@dataclass
class ExperimentResult:
    curves: list
    summary: list
    thresholds: dict

    def curve(self, scheme, M, tau, seed):
        for c in self.curves:
            if (c.scheme, c.M, c.tau, c.seed) == (scheme, M, tau, seed):
                return c
        raise KeyError((scheme, M, tau, seed))

    def row(self, scheme, M, tau, seed):
        for r in self.summary:
            if (r.scheme, r.M, r.tau, r.seed) == (scheme, M, tau, seed):
                return r
        raise KeyError((scheme, M, tau, seed))


def prepare_seed(config, seed):
    """Dataset with ``max(M)`` shards and the shared initial prototypes for ``seed``.

    Shard ``i`` does not depend on the shard count, so ``data.head(M)`` is
    what ``make_sharded`` would produce for ``M`` machines.
    """
    max_m = max(config.M)
    if config.data_path:
        data = load_dataset(config.data_path)
        if data.M < max_m:
            raise ExperimentError(f"{config.data_path} holds {data.M} shards, grid needs {max_m}")
        if data.dim != config.dim:
            logger.info("dataset dimension %d overrides configured dim %d", data.dim, config.dim)
        # kappa distinct points from the file, chosen by the init stream.
        flat = data.shards.reshape(-1, data.dim)
        if flat.shape[0] < config.kappa:
            raise ExperimentError(f"dataset has fewer than kappa={config.kappa} points")
        idx = substream(seed, ROLE_INIT).choice(flat.shape[0], size=config.kappa, replace=False)
        return ShardedDataset(data.shards[:max_m]), flat[np.sort(idx)].copy()
    spec = MixtureSpec.default(seed, dim=config.dim, n_components=config.components,
                               sigma=config.sigma)
    return make_sharded(spec, max_m, config.n, seed), init_prototypes(spec, config.kappa, seed)


def run_cell(config, scheme, M, tau, seed, data, w0):
    sub = data.head(M)
    if scheme == ASYNC:
        cfg = AsyncConfig(M, config.total_steps, tau, config.schedule, config.delay,
                          config.eval_every, seed)
        return run_async(cfg, sub, w0).curve
    cfg = SyncConfig(M, tau, config.total_steps, config.schedule, scheme)
    return run_sync(cfg, sub, w0, eval_every=config.eval_every, seed=seed).curve


def sequential_threshold(config, data, w0):
    """``threshold_factor`` times the final distortion of a sequential run on shard 0."""
    traj = run_sequential(data[0], w0, config.schedule, config.total_steps)
    return config.threshold_factor * distortion(traj.final, data.head(1))


def _cell_job(args):
    config, scheme, M, tau, seed = args
    data, w0 = prepare_seed(config, seed)
    try:
        return run_cell(config, scheme, M, tau, seed, data, w0)
    except Exception as exc:
        raise ExperimentError(f"cell scheme={scheme} M={M} tau={tau} seed={seed} failed: {exc}") from exc


def grid(config):
    return [(s, m, t, seed) for seed in config.seeds for s in config.schemes
            for t in config.tau for m in config.M]


def run_experiment(config, out_dir=None, threads=1):
    """Run every grid cell, then optionally write curves and the summary under ``out_dir``."""
    cells = grid(config)
    thresholds = {}
    curves = []
    if threads > 1:
        for seed in config.seeds:
            data, w0 = prepare_seed(config, seed)
            thresholds[seed] = sequential_threshold(config, data, w0)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            curves = list(pool.map(_cell_job, [(config, *cell) for cell in cells]))
    else:
        for seed in config.seeds:
            data, w0 = prepare_seed(config, seed)
            thresholds[seed] = sequential_threshold(config, data, w0)
            for scheme, M, tau, s in cells:
                if s != seed:
                    continue
                logger.info("running %s M=%d tau=%d seed=%d", scheme, M, tau, seed)
                try:
                    curves.append(run_cell(config, scheme, M, tau, seed, data, w0))
                except Exception as exc:
                    raise ExperimentError(
                        f"cell scheme={scheme} M={M} tau={tau} seed={seed} failed: {exc}") from exc
    result = ExperimentResult(curves, summarize(curves, thresholds), thresholds)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def summarize(curves, thresholds):
    ticks = {}
    for c in curves:
        ticks[(c.scheme, c.M, c.tau, c.seed)] = time_to_threshold(c, thresholds[c.seed])
    rows = []
    for c in curves:
        tick = ticks[(c.scheme, c.M, c.tau, c.seed)]
        base = ticks.get((c.scheme, 1, c.tau, c.seed), "missing")
        speedup = None
        if base != "missing" and base is not None and tick is not None:
            # A threshold already met at tick 0 gives no meaningful ratio.
            speedup = 1.0 if base == tick else (base / tick if tick > 0 else None)
        rows.append(SummaryRow(c.scheme, c.M, c.tau, c.seed, c.final_distortion,
                               thresholds[c.seed], tick, speedup))
    return rows


def _atomic_write(path, writer):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def curve_filename(curve):
    return f"{curve.scheme}_M{curve.M}_tau{curve.tau}_seed{curve.seed}.csv"


def write_summary_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for r in rows:
            writer.writerow([r.scheme, r.M, r.tau, r.seed, f"{r.final_distortion:.17g}",
                             f"{r.threshold:.17g}",
                             "never" if r.time_to_threshold is None else r.time_to_threshold,
                             "" if r.speedup is None else f"{r.speedup:.17g}"])


def write_outputs(result, out_dir):
    out = Path(out_dir)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    for c in result.curves:
        _atomic_write(out / "curves" / curve_filename(c), lambda p, c=c: write_curves_csv([c], p))
    _atomic_write(out / "summary.csv", lambda p: write_summary_csv(result.summary, p))
