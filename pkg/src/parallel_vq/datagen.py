"""Seeded Gaussian-mixture data and sharding across simulated machines.

Random streams
--------------
Every stream is a Philox-4x64 counter-based generator keyed by
``numpy.random.SeedSequence(seed, spawn_key=(role, index))``. Roles:

=======  ====  ==========================================
role     id    index
=======  ====  ==========================================
centers  0     always 0 (default mixture centers)
data     1     shard index ``i``
init     2     always 0 (initial prototypes)
delay    3     worker index (async communication delays)
=======  ====  ==========================================

Shard ``i`` therefore does not depend on the number of shards. Gaussian
noise uses the Box-Muller transform on pairs of Philox uniforms so that
ports to other languages agree in distribution.
"""

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int

ROLE_CENTERS = 0
ROLE_DATA = 1
ROLE_INIT = 2
ROLE_DELAY = 3

MAGIC = b"DVQ1"
_HEADER = struct.Struct("<4sqqq")


def substream(seed, role, index=0):
    """Philox generator for ``(seed, role, index)``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(role), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def box_muller(rng, size):
    """``size`` standard normal draws from the Box-Muller transform."""
    pairs = (size + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1]; keeps log finite
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:size]


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture.

    ``centers`` is (K, dim), ``sigmas`` and ``weights`` have length K.
    Weights are normalized on construction.
    """

    centers: np.ndarray
    sigmas: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        k = centers.shape[0]
        sigmas = np.broadcast_to(np.asarray(self.sigmas, dtype=np.float64), (k,)).copy()
        weights = np.ones(k) if self.weights is None else np.asarray(self.weights, dtype=np.float64)
        if k < 1 or centers.shape[1] < 1:
            raise ValueError("mixture needs at least one component of positive dimension")
        if weights.shape != (k,):
            raise ValueError(f"expected {k} weights, got shape {weights.shape}")
        if np.any(sigmas <= 0) or not np.all(np.isfinite(sigmas)):
            raise ValueError("mixture sigmas must be positive")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError("mixture weights must be positive")
        if not np.all(np.isfinite(centers)):
            raise ValueError("mixture centers must be finite")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "weights", weights / weights.sum())

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def n_components(self):
        return self.centers.shape[0]

    @classmethod
    def default(cls, seed, dim=8, n_components=20, sigma=0.025):
        """Equal-weight mixture with centers uniform in ``[0, 1]^dim``."""
        rng = substream(seed, ROLE_CENTERS)
        centers = rng.random((n_components, dim))
        return cls(centers, np.full(n_components, sigma))

    def __eq__(self, other):
        if not isinstance(other, MixtureSpec):
            return NotImplemented
        return (np.array_equal(self.centers, other.centers)
                and np.array_equal(self.sigmas, other.sigmas)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None


def _draw(spec, count, rng):
    cumulative = np.cumsum(spec.weights)
    cumulative[-1] = 1.0
    labels = np.searchsorted(cumulative, rng.random(count), side="right")
    noise = box_muller(rng, count * spec.dim).reshape(count, spec.dim)
    return spec.centers[labels] + spec.sigmas[labels, None] * noise, labels


def sample_mixture(spec, count, rng, return_labels=False):
    """Draw ``count`` i.i.d. points from ``spec`` using generator ``rng``.

    ``rng`` may be a ``numpy.random.Generator`` or an integer seed (mapped to
    the data stream of shard 0).
    """
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    if not isinstance(rng, np.random.Generator):
        rng = substream(rng, ROLE_DATA, 0)
    points, labels = _draw(spec, int(count), rng)
    return (points, labels) if return_labels else points


@dataclass(frozen=True, eq=False)
class ShardedDataset:
    """``M`` shards of ``n`` points each, stored as an (M, n, dim) array."""

    shards: np.ndarray

    def __post_init__(self):
        shards = np.ascontiguousarray(self.shards, dtype=np.float64)
        if shards.ndim != 3 or 0 in shards.shape:
            raise ValueError(f"shards must be a non-empty (M, n, dim) array, got {shards.shape}")
        object.__setattr__(self, "shards", shards)

    @property
    def M(self):
        return self.shards.shape[0]

    @property
    def n(self):
        return self.shards.shape[1]

    @property
    def dim(self):
        return self.shards.shape[2]

    def __getitem__(self, i):
        return self.shards[i]

    def __len__(self):
        return self.M

    def head(self, M):
        """Dataset made of the first ``M`` shards."""
        return ShardedDataset(self.shards[:M])

    def __eq__(self, other):
        if not isinstance(other, ShardedDataset):
            return NotImplemented
        return np.array_equal(self.shards, other.shards)

    __hash__ = None


def make_sharded(spec, M, n, seed):
    M = check_positive_int(M, "M")
    n = check_positive_int(n, "n")
    shards = np.stack([sample_mixture(spec, n, substream(seed, ROLE_DATA, i)) for i in range(M)])
    return ShardedDataset(shards)


def init_prototypes(spec, kappa, seed):
    """``kappa`` mixture draws from the init stream, shared by every worker."""
    kappa = check_positive_int(kappa, "kappa")
    return sample_mixture(spec, kappa, substream(seed, ROLE_INIT))


def save_dataset(data, path):
    """Write the ``DVQ1`` binary format: header then shard-major float64 payload."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, data.dim, data.M, data.n))
        fh.write(data.shards.astype("<f8", copy=False).tobytes(order="C"))


def load_dataset(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, dim, M, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if min(dim, M, n) < 1:
        raise ValueError(f"{path}: invalid sizes dim={dim} M={M} n={n}")
    expected = _HEADER.size + 8 * dim * M * n
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return ShardedDataset(values.reshape(M, n, dim).astype(np.float64))


def export_csv(data, path):
    """One row per point: ``shard,index,x0,...,x{dim-1}``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["shard", "index"] + [f"x{k}" for k in range(data.dim)])
        for i in range(data.M):
            for t in range(data.n):
                writer.writerow([i, t] + [repr(float(v)) for v in data.shards[i, t]])
