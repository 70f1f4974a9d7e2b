"""scikit-learn style estimators wrapping the sequential and parallel VQ runs."""

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .asynchronous import ASYNC, AsyncConfig, DelayModel, run_async
from .core import DEFAULT_STEP_SCALE, StepSchedule, run_sequential
from .datagen import ShardedDataset
from .metrics import distortion
from .sync import AVERAGING, DELTA_MERGE, SyncConfig, run_sync


class _BaseVQ(ClusterMixin, TransformerMixin, BaseEstimator):

    def _validate_fit_input(self, X):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        if X.shape[0] < self.n_prototypes:
            raise ValueError(f"n_samples={X.shape[0]} should be >= n_prototypes={self.n_prototypes}")
        self.n_features_in_ = X.shape[1]
        return X

    def _validate_predict_input(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but {type(self).__name__} "
                             f"is expecting {self.n_features_in_} features as input")
        return X

    def _schedule(self, n):
        if self.schedule is not None:
            return self.schedule
        return StepSchedule.default_for(n, self.step_scale)

    def _initial_prototypes(self, X, rng):
        idx = rng.choice(X.shape[0], size=self.n_prototypes, replace=False)
        return X[np.sort(idx)].copy()

    def predict(self, X):
        """Index of the nearest prototype for every row of ``X``."""
        X = self._validate_predict_input(X)
        return cdist(X, self.cluster_centers_, "sqeuclidean").argmin(axis=1)

    def transform(self, X):
        """Squared distances from every row of ``X`` to every prototype."""
        X = self._validate_predict_input(X)
        return cdist(X, self.cluster_centers_, "sqeuclidean")

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def score(self, X, y=None):
        """Negative mean squared quantization error of ``X``."""
        X = self._validate_predict_input(X)
        return -distortion(self.cluster_centers_, X)


class OnlineVQ(_BaseVQ):
    """Sequential stochastic vector quantization (online k-means).

    Parameters
    ----------
    n_prototypes : int
        Number of prototypes.
    n_steps : int or None
        Number of VQ updates; defaults to one pass over the data.
    step_scale : float
        Initial step size of the default ``inverse`` schedule.
    schedule : StepSchedule or None
        Overrides the default schedule when given.
    random_state : int, RandomState or None
        Controls the initial prototypes (distinct rows of ``X``).
    """

    def __init__(self, n_prototypes=8, n_steps=None, step_scale=DEFAULT_STEP_SCALE,
                 schedule=None, random_state=None):
        self.n_prototypes = n_prototypes
        self.n_steps = n_steps
        self.step_scale = step_scale
        self.schedule = schedule
        self.random_state = random_state

    def fit(self, X, y=None):
        X = self._validate_fit_input(X)
        rng = check_random_state(self.random_state)
        w0 = self._initial_prototypes(X, rng)
        steps = X.shape[0] if self.n_steps is None else self.n_steps
        traj = run_sequential(X, w0, self._schedule(X.shape[0]), steps)
        self.cluster_centers_ = traj.final
        self.n_steps_ = steps
        self.labels_ = cdist(X, self.cluster_centers_, "sqeuclidean").argmin(axis=1)
        self.inertia_ = distortion(self.cluster_centers_, X)
        return self


class ParallelVQ(_BaseVQ):
    """Stochastic VQ spread over ``n_workers`` simulated machines.

    ``X`` is shuffled and split into ``n_workers`` equal shards (the
    ``len(X) % n_workers`` leftover rows are dropped). The prototypes after
    fitting are the final shared version.

    Parameters
    ----------
    n_prototypes : int
    n_workers : int
    scheme : {"delta", "averaging", "async"}
        Reduce rule. ``async`` removes the synchronization barrier and delays
        exchanges by ``delay``.
    tau : int
        Local steps between reduce phases (minimum between exchanges for
        ``async``).
    n_steps : int or None
        Wall-clock ticks; defaults to one pass over a shard.
    step_scale, schedule :
        As in :class:`OnlineVQ`; the schedule size is the shard length.
    delay : DelayModel or None
        Round-trip delay model for ``async``; geometric with p=0.5 by default.
    eval_every : int or None
        Curve recording period in ticks; defaults to ``tau``.
    random_state : int, RandomState or None
        Controls the shuffle, the initial prototypes and the delay streams.

    Attributes
    ----------
    cluster_centers_ : ndarray of shape (n_prototypes, n_features)
    curve_ : PerformanceCurve
        Distortion over the fitted shards through simulated time.
    """

    def __init__(self, n_prototypes=8, n_workers=2, scheme=DELTA_MERGE, tau=10, n_steps=None,
                 step_scale=DEFAULT_STEP_SCALE, schedule=None, delay=None, eval_every=None,
                 random_state=None):
        self.n_prototypes = n_prototypes
        self.n_workers = n_workers
        self.scheme = scheme
        self.tau = tau
        self.n_steps = n_steps
        self.step_scale = step_scale
        self.schedule = schedule
        self.delay = delay
        self.eval_every = eval_every
        self.random_state = random_state

    def fit(self, X, y=None):
        X = self._validate_fit_input(X)
        if self.scheme not in (AVERAGING, DELTA_MERGE, ASYNC):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        M = int(self.n_workers)
        if M < 1:
            raise ValueError(f"n_workers must be >= 1, got {self.n_workers}")
        n = X.shape[0] // M
        if n < 1:
            raise ValueError(f"need at least n_workers={M} samples, got {X.shape[0]}")
        rng = check_random_state(self.random_state)
        order = rng.permutation(X.shape[0])[: n * M]
        data = ShardedDataset(X[order].reshape(M, n, X.shape[1]))
        w0 = self._initial_prototypes(X, rng)
        steps = n if self.n_steps is None else self.n_steps
        schedule = self._schedule(n)
        seed = int(rng.randint(0, 2**31 - 1))
        if self.scheme == ASYNC:
            cfg = AsyncConfig(M, steps, self.tau, schedule, self.delay or DelayModel(),
                              self.eval_every, seed)
            result = run_async(cfg, data, w0)
            self.cluster_centers_ = result.reducer.w.copy()
        else:
            cfg = SyncConfig(M, self.tau, steps, schedule, self.scheme)
            result = run_sync(cfg, data, w0, eval_every=self.eval_every, seed=seed)
            self.cluster_centers_ = result.shared.w.copy() if steps % self.tau == 0 \
                else result.final.copy()
        self.curve_ = result.curve
        self.n_steps_ = steps
        self.labels_ = cdist(X, self.cluster_centers_, "sqeuclidean").argmin(axis=1)
        self.inertia_ = distortion(self.cluster_centers_, X)
        return self
