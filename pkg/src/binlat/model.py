"""Core types, logistic link functions and simulation for the parameter-driven
binomial model

    Y_t | alpha_t ~ Binomial(m_t, bdot(x_t' beta + alpha_t)),

with a stationary Gaussian AR(1) latent process alpha_t of variance tau.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence``.
A seed yields three child streams: the latent path, the binomial draws and
(when trial counts are random) the trial counts, so a series is
reproducible from its seed alone.  Replication ``i`` of a simulation study uses child ``i`` of the
study-level ``SeedSequence`` (see :func:`replication_seeds`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np
from scipy.signal import lfilter
from scipy.special import expit

SeedLike = Union[int, np.random.SeedSequence]


# ---------------------------------------------------------------------------
# link functions: b(w) = log(1 + e^w) and its derivatives
# ---------------------------------------------------------------------------

def link_b(w):
    """Cumulant function b(w) = log(1 + exp(w)), overflow free."""
    return np.logaddexp(0.0, w)


def link_b_dot(w):
    """Success probability bdot(w) = e^w / (1 + e^w)."""
    return expit(w)


def link_b_ddot(w):
    """Bernoulli variance bddot(w) = bdot(w) (1 - bdot(w))."""
    # expit(-w) avoids the cancellation in 1 - expit(w) for large w
    return expit(w) * expit(-w)


def link_b_d3(w):
    """Third derivative b'''(w) = bddot(w) (1 - 2 bdot(w))."""
    return link_b_ddot(w) * (expit(-w) - expit(w))


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelParams:
    """Regression coefficients ``beta``, latent variance ``tau`` and AR(1)
    coefficient ``phi`` of the latent process."""

    beta: np.ndarray
    tau: float
    phi: float = 0.0

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a finite vector")
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if not -1.0 < self.phi < 1.0:
            raise ValueError(f"phi must lie in (-1, 1), got {self.phi}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "phi", float(self.phi))

    @property
    def delta(self) -> np.ndarray:
        """(beta, tau) stacked into one vector."""
        return np.append(self.beta, self.tau)


@dataclass(frozen=True)
class BinomialSeries:
    """Observed counts ``y`` out of ``m`` trials with design matrix ``X``."""

    y: np.ndarray
    m: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y)
        m = np.asarray(self.m)
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if y.ndim != 1 or m.shape != y.shape or X.shape[0] != y.shape[0]:
            raise ValueError("y, m and the rows of X must have equal length")
        if np.any(m < 1):
            raise ValueError("trial counts must be >= 1")
        if np.any(y < 0) or np.any(y > m):
            raise ValueError("counts must satisfy 0 <= y_t <= m_t")
        if not np.allclose(X[:, 0], 1.0):
            raise ValueError("first column of X must be the intercept (all ones)")
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise ValueError("X must have full column rank")
        object.__setattr__(self, "y", y.astype(float))
        object.__setattr__(self, "m", m.astype(float))
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def r(self) -> int:
        return self.X.shape[1]

    def permuted(self, order) -> "BinomialSeries":
        order = np.asarray(order)
        return BinomialSeries(self.y[order], self.m[order], self.X[order])


@dataclass(frozen=True)
class LatentPath:
    alpha: np.ndarray
    tau: float
    phi: float

    @property
    def innovation_variance(self) -> float:
        return self.tau * (1.0 - self.phi ** 2)


@dataclass(frozen=True)
class TrendDesign:
    """Deterministic regressors x_nt = h(t/n).

    Population limits integrate over u in [0, 1] with the midpoint rule on a
    grid of width ``mesh``.
    """

    h: Callable[[np.ndarray], np.ndarray]
    mesh: float = 1e-4
    name: str = field(default="custom", compare=False)

    def grid(self) -> np.ndarray:
        k = int(round(1.0 / self.mesh))
        return (np.arange(k) + 0.5) / k

    def matrix(self, u=None) -> np.ndarray:
        u = self.grid() if u is None else np.asarray(u, dtype=float)
        return np.atleast_2d(self.h(u))

    def sample(self, n: int) -> np.ndarray:
        """Design matrix of a series of length n, rows h(t/n)."""
        return self.matrix(np.arange(1, n + 1) / n)


def _linear_h(u):
    u = np.asarray(u, dtype=float)
    return np.column_stack([np.ones_like(u), u])


def linear_trend(mesh: float = 1e-4) -> TrendDesign:
    """The h(u) = (1, u) design used throughout the simulations."""
    return TrendDesign(_linear_h, mesh=mesh, name="linear_trend")


def linear_trend_design(n: int) -> np.ndarray:
    """n x 2 matrix with rows (1, t/n), t = 1..n."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return _linear_h(np.arange(1, n + 1) / n)


def trial_distribution(m_spec) -> dict[int, float]:
    """Normalise a trial-count specification to ``{m: P(m_t = m)}``.

    Accepts an integer (constant m) or a mapping of probabilities.
    """
    if isinstance(m_spec, Mapping):
        dist = {int(k): float(v) for k, v in m_spec.items() if float(v) > 0}
    else:
        dist = {int(m_spec): 1.0}
    if not dist or min(dist) < 1:
        raise ValueError("trial counts must be >= 1")
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"trial probabilities sum to {total}, not 1")
    return dict(sorted(dist.items()))


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def child_seed(seed: SeedLike, index: int) -> np.random.SeedSequence:
    """Child ``index`` of ``seed``, built from the spawn key so repeated calls
    agree (``SeedSequence.spawn`` is stateful)."""
    ss = _seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (index,),
                                  pool_size=ss.pool_size)


def replication_seeds(seed: SeedLike, count: int) -> list[np.random.SeedSequence]:
    """One independent substream per replication."""
    return [child_seed(seed, i) for i in range(count)]


def _ar1_path(n, tau, phi, rng):
    if tau == 0.0:
        return np.zeros(n)
    shocks = np.sqrt(tau * (1.0 - phi ** 2)) * rng.standard_normal(n)
    shocks[0] *= 1.0 / np.sqrt(1.0 - phi ** 2)  # alpha_0 ~ N(0, tau)
    return lfilter([1.0], [1.0, -phi], shocks)


def simulate_latent(n: int, params: ModelParams, seed: SeedLike) -> LatentPath:
    """Stationary Gaussian AR(1) path started from its N(0, tau) law."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(child_seed(seed, 0)))
    return LatentPath(_ar1_path(n, params.tau, params.phi, rng), params.tau, params.phi)


def simulate_series(X, m, params: ModelParams, seed: SeedLike,
                    return_latent: bool = False):
    """Draw y_t ~ Binomial(m_t, bdot(x_t' beta + alpha_t)) given a latent path.

    ``m`` may be a scalar (constant trials) or a vector of length n.  Each
    binomial count is the sum of m_t Bernoulli draws.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    m = np.asarray(m, dtype=int)
    if m.ndim == 0:
        m = np.full(n, int(m))
    if m.shape != (n,):
        raise ValueError("length of m must equal the number of rows of X")
    if X.shape[1] != params.beta.shape[0]:
        raise ValueError("X columns do not match the length of beta")
    path = simulate_latent(n, params, seed)
    rng = np.random.Generator(np.random.PCG64(child_seed(seed, 1)))
    p = expit(X @ params.beta + path.alpha)
    draws = rng.random((n, int(m.max())))
    active = np.arange(draws.shape[1])[None, :] < m[:, None]
    y = ((draws < p[:, None]) & active).sum(axis=1)
    series = BinomialSeries(y, m, X)
    return (series, path) if return_latent else series


def simulate_trials(n: int, m_spec, seed: SeedLike) -> np.ndarray:
    """Constant or i.i.d. trial counts drawn from ``m_spec``."""
    dist = trial_distribution(m_spec)
    if len(dist) == 1:
        return np.full(n, next(iter(dist)), dtype=int)
    rng = np.random.default_rng(child_seed(seed, 2))
    return rng.choice(list(dist), size=n, p=list(dist.values()))
