"""scikit-learn compatible wrapper around the streaming mode estimator."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .estimator import EstimatorConfig, StepSchedule, _Runner, init_state
from .kernels import KernelSpec, kernel_value


class OnlineModeEstimator(BaseEstimator):
    """Estimate the mode of a smooth unimodal density from streamed samples.

    Parameters
    ----------
    kernel : {"gaussian", "cauchy", "fejer", "multivariate_gaussian"}, default="gaussian"
        Smoothing kernel. ``gaussian`` switches to its multivariate form for
        data with more than one feature.
    epsilon : float, default=1.0
        Kernel bandwidth.
    lam : float, default=1e-5
        Ridge coefficient pulling the estimate towards the origin.
    schedule : {"harmonic", "polynomial"}, default="harmonic"
        ``harmonic`` uses ``1/n``; ``polynomial`` uses ``a0 / (n + n0)**gamma``.
    a0, n0, gamma : float, int, float
        Parameters of the polynomial schedule.
    warmup : int, default=1000
        Number of leading samples averaged into the starting point.
    init : array-like of shape (n_features,), default=None
        Starting point; required when ``warmup=0`` and rejected otherwise.
    trace_every : int, default=None
        Record ``(n, mode)`` every ``trace_every`` updates in ``trajectory_``.

    Attributes
    ----------
    mode_ : ndarray of shape (n_features,)
        Current estimate. Only available once the warm-up is complete.
    n_updates_ : int
        Gradient updates performed so far.
    n_samples_seen_ : int
        Samples consumed, warm-up included.
    trajectory_ : list of (int, ndarray)
        Recorded path when ``trace_every`` is set.

    Examples
    --------
    >>> import numpy as np
    >>> X = np.random.default_rng(0).normal(10.0, 1.0, size=(20000, 1))
    >>> est = OnlineModeEstimator().fit(X)
    >>> bool(abs(est.mode_[0] - 10.0) < 0.5)
    True
    """

    def __init__(self, kernel="gaussian", epsilon=1.0, lam=1e-5, schedule="harmonic",
                 a0=1.0, n0=0, gamma=1.0, warmup=1000, init=None, trace_every=None):
        self.kernel = kernel
        self.epsilon = epsilon
        self.lam = lam
        self.schedule = schedule
        self.a0 = a0
        self.n0 = n0
        self.gamma = gamma
        self.warmup = warmup
        self.init = init
        self.trace_every = trace_every

    def _make_config(self, n_features):
        return EstimatorConfig(
            kernel=KernelSpec.for_dim(self.kernel, self.epsilon, n_features),
            lam=self.lam,
            schedule=StepSchedule(self.schedule, self.a0, self.n0, self.gamma),
            warmup=self.warmup,
        )

    def fit(self, X, y=None):
        """Reset and run the estimator over the rows of ``X`` in order."""
        for attr in ("_runner", "mode_", "n_updates_", "n_samples_seen_", "trajectory_", "n_features_in_"):
            self.__dict__.pop(attr, None)
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Continue the stream with the rows of ``X``."""
        first = not hasattr(self, "_runner")
        X = check_array(X, dtype=np.float64, ensure_2d=True, order="C")
        if first:
            self.n_features_in_ = X.shape[1]
            config = self._make_config(self.n_features_in_)
            init = None if self.init is None else np.asarray(self.init, dtype=float)
            self._runner = _Runner(config, init_state(config, init), self.trace_every)
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but {type(self).__name__} "
                             f"is expecting {self.n_features_in_} features as input.")
        try:
            self._runner.feed(X)
        finally:
            self._sync()
        return self

    def _sync(self):
        state = self._runner.state()
        self.n_updates_ = state.n
        self.n_samples_seen_ = self._runner.seen
        self.trajectory_ = list(self._runner.trajectory)
        if state.warmup_count >= self._runner.config.warmup:
            self.mode_ = state.m
        else:
            self.__dict__.pop("mode_", None)

    @property
    def state_(self):
        check_is_fitted(self, "_runner")
        return self._runner.state()

    @property
    def config_(self) -> EstimatorConfig:
        check_is_fitted(self, "_runner")
        return self._runner.config

    def score(self, X, y=None):
        """Mean kernel density estimate of ``X`` at the current mode (higher is better)."""
        check_is_fitted(self, "mode_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but {type(self).__name__} "
                             f"is expecting {self.n_features_in_} features as input.")
        return float(np.mean(kernel_value(self.config_.kernel, self.mode_ - X)))
