"""Overlapping-block subsampling covariance for the marginal estimator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit, SingularGramMatrix
from .marginal import DEGENERACY_THRESHOLD, _split, observation_scores
from .model import BinomialSeries


@dataclass(frozen=True)
class SubsampleCovariance:
    covariance: np.ndarray
    k_n: int
    C: int
    m_n: int
    n: int

    @property
    def se(self) -> np.ndarray:
        """Standard errors of delta_hat, sqrt(diag(covariance) / n)."""
        return np.sqrt(np.diag(self.covariance) / self.n)


def block_length(n: int, C: int) -> int:
    """k_n = C * floor(n^(1/3)), with the cube root computed exactly for
    perfect cubes."""
    root = int(round(n ** (1.0 / 3.0)))
    while root ** 3 > n:
        root -= 1
    while (root + 1) ** 3 <= n:
        root += 1
    return int(C) * root


def subsample_covariance(data: BinomialSeries, delta_hat, C: int = 2,
                         rule=None) -> SubsampleCovariance:
    """Gamma_1^-1 Gamma_dagger Gamma_1^-1 from per-observation scores at delta_hat.

    Gamma_1 = n^-1 sum_t l_t l_t' and Gamma_dagger averages, over the
    m_n = n - k_n + 1 overlapping blocks of length k_n, the outer product of
    the block score sum scaled by k_n^-1/2.  The result estimates the
    covariance of sqrt(n) (delta_hat - delta0).
    """
    _, tau = _split(delta_hat)
    if tau <= DEGENERACY_THRESHOLD:
        raise DegenerateFit("subsampling needs tau_hat > 0; the fit is on the boundary")
    n = data.n
    k = block_length(n, C)
    if k < 1 or k >= n:
        raise ValueError(f"block length {k} must satisfy 1 <= k_n < n = {n}")
    L = observation_scores(delta_hat, data, rule)
    G1 = L.T @ L / n
    cum = np.vstack([np.zeros(L.shape[1]), np.cumsum(L, axis=0)])
    blocks = cum[k:] - cum[:-k]                 # (m_n, r+1) block sums
    mn = blocks.shape[0]
    Gd = blocks.T @ blocks / (k * mn)
    cond = np.linalg.cond(G1)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularGramMatrix(f"score Gram matrix has condition number {cond:.3g}")
    G1i = np.linalg.inv(G1)
    cov = G1i @ Gd @ G1i
    return SubsampleCovariance(0.5 * (cov + cov.T), k, int(C), mn, n)
