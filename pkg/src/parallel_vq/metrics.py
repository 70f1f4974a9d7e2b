"""Quantization distortion, performance curves and time-to-threshold."""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ._validation import ShapeError, check_prototypes

CURVE_HEADER = ("scheme", "M", "tau", "seed", "tick", "samples_total", "distortion")


def _as_shards(data):
    shards = getattr(data, "shards", data)
    shards = np.asarray(shards, dtype=np.float64)
    if shards.ndim == 2:
        shards = shards[None]
    return shards


def distortion(w, data):
    """Mean over all points of all shards of the squared distance to the nearest prototype.

    ``data`` is a :class:`~parallel_vq.datagen.ShardedDataset`, an (M, n, dim)
    array, or a single (n, dim) shard.
    """
    w = check_prototypes(w)
    shards = _as_shards(data)
    if shards.shape[-1] != w.shape[1]:
        raise ShapeError(f"data dimension {shards.shape[-1]} does not match prototypes {w.shape[1]}")
    points = shards.reshape(-1, w.shape[1])
    # cdist sums (x - w)^2 directly; no |x|^2 - 2xw + |w|^2 cancellation.
    mins = cdist(points, w, "sqeuclidean").min(axis=1)
    return float(mins.sum() / points.shape[0])


@dataclass(frozen=True)
class CurvePoint:
    tick: int
    samples_total: int
    distortion: float


@dataclass
class PerformanceCurve:
    scheme: str
    M: int
    tau: int
    seed: int
    points: list = field(default_factory=list)

    @property
    def label(self):
        return f"{self.scheme} M={self.M} tau={self.tau} seed={self.seed}"

    @property
    def ticks(self):
        return np.array([p.tick for p in self.points], dtype=np.int64)

    @property
    def distortions(self):
        return np.array([p.distortion for p in self.points])

    @property
    def final_distortion(self):
        return self.points[-1].distortion

    def __len__(self):
        return len(self.points)


def record(curve, tick, samples_total, w, data):
    """Append the distortion of ``w`` at ``tick``. Ticks must strictly increase."""
    if curve.points and tick <= curve.points[-1].tick:
        raise ValueError(f"tick {tick} does not follow last recorded tick {curve.points[-1].tick}")
    curve.points.append(CurvePoint(int(tick), int(samples_total), distortion(w, data)))
    return curve


def time_to_threshold(curve, threshold):
    """First recorded tick with distortion <= ``threshold``, or ``None`` if never."""
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    for p in curve.points:
        if p.distortion <= threshold:
            return p.tick
    return None


def write_curves_csv(curves, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for curve in curves:
            for p in curve.points:
                writer.writerow([curve.scheme, curve.M, curve.tau, curve.seed,
                                 p.tick, p.samples_total, f"{p.distortion:.17g}"])


def read_curves_csv(path):
    """Parse a curve CSV back into curves, grouped by (scheme, M, tau, seed)."""
    curves = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CURVE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CURVE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CURVE_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(CURVE_HEADER)} fields, got {len(row)}")
            try:
                key = (row[0], int(row[1]), int(row[2]), int(row[3]))
                point = CurvePoint(int(row[4]), int(row[5]), float(row[6]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if key not in curves:
                curves[key] = PerformanceCurve(*key)
            curves[key].points.append(point)
    if not curves:
        raise ValueError(f"{path}: no curve rows")
    return list(curves.values())
