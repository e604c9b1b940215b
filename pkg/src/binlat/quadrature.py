"""Gauss-Hermite rules and the Gaussian-mixture binomial probabilities.

Rules use the probabilists' normalisation: ``sum(w * f(z))`` approximates
E f(Z) for Z ~ N(0, 1), so the weights add to one.  Node/weight generation
is delegated to :func:`numpy.polynomial.hermite_e.hermegauss`.

Probabilities are accumulated in log space (log-sum-exp over nodes) so that
large trial counts do not underflow.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import gammaln, logsumexp

from .model import ModelParams, link_b, link_b_ddot, link_b_dot

DEFAULT_ORDER = 32
JOINT_ORDER = 9
MAX_ORDER = 128

#: adaptive recentring switches on when tau * m exceeds this value ("auto")
ADAPTIVE_THRESHOLD = 4.0


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return self.nodes.shape[0]

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)

    def expect(self, f) -> float:
        """E f(Z) for a vectorised callable f."""
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=None)
def gauss_hermite(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Probabilists' Gauss-Hermite rule with ``order`` nodes."""
    order = int(order)
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [1, {MAX_ORDER}], got {order}")
    z, w = hermegauss(order)
    w = w / w.sum()
    z.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(z, w)


def _rule(rule) -> QuadratureRule:
    if rule is None:
        return gauss_hermite(DEFAULT_ORDER)
    if isinstance(rule, QuadratureRule):
        return rule
    return gauss_hermite(int(rule))


def log_binom(m, j):
    """log C(m, j) via log-gamma."""
    m = np.asarray(m, dtype=float)
    j = np.asarray(j, dtype=float)
    return gammaln(m + 1.0) - gammaln(j + 1.0) - gammaln(m - j + 1.0)


def log_cond_pmf(j, w, m):
    """log P(Y = j | W = w) for Y ~ Binomial(m, bdot(w))."""
    return j * w - m * link_b(w) + log_binom(m, j)


def _use_adaptive(adaptive, tau, m) -> bool:
    if adaptive in (False, None, "off"):
        return False
    if adaptive in (True, "always"):
        return tau > 0
    if adaptive == "auto":
        return tau * m > ADAPTIVE_THRESHOLD
    raise ValueError(f"unknown adaptive mode {adaptive!r}")


def _mode_and_scale(j, eta, m, tau, iters=60):
    """Mode of log f(j | eta + sqrt(tau) z) - z^2 / 2 and the matching
    Laplace scale.

    The gradient s (j - m bdot) - z is decreasing with its root inside
    [s (j - m), s j], so Newton steps that leave the bracket are replaced by
    bisection.
    """
    s = np.sqrt(tau)
    shape = np.broadcast(j, eta).shape
    lo = np.broadcast_to(s * (j - m), shape).astype(float)
    hi = np.broadcast_to(s * j, shape).astype(float)
    z = np.clip(np.zeros(shape), lo, hi)
    for _ in range(iters):
        w = eta + s * z
        grad = s * (j - m * link_b_dot(w)) - z
        lo = np.where(grad > 0, z, lo)
        hi = np.where(grad < 0, z, hi)
        step = z + grad / (tau * m * link_b_ddot(w) + 1.0)
        inside = (step > lo) & (step < hi)
        z_new = np.where(inside, step, 0.5 * (lo + hi))
        if np.max(np.abs(z_new - z)) < 1e-13:
            z = z_new
            break
        z = z_new
    curv = tau * m * link_b_ddot(eta + s * z) + 1.0
    return z, 1.0 / np.sqrt(curv)


def marginal_probs(eta, m: int, tau: float, rule=None, adaptive="off") -> np.ndarray:
    """pi(j) = E[P(Y = j | W = eta + sqrt(tau) Z)] for every j = 0..m.

    ``eta`` may have any shape; the result gains a trailing axis of length
    m + 1.
    """
    rule = _rule(rule)
    eta = np.asarray(eta, dtype=float)[..., None]
    j = np.arange(m + 1, dtype=float)
    if tau == 0.0:
        return np.exp(log_cond_pmf(j, eta, m))
    s = np.sqrt(tau)
    if _use_adaptive(adaptive, tau, m):
        zhat, scale = _mode_and_scale(j, eta, m, tau)
        z = zhat[..., None] + scale[..., None] * rule.nodes
        lw = (rule.log_weights + np.log(scale)[..., None]
              + 0.5 * (rule.nodes ** 2 - z ** 2))
        terms = log_cond_pmf(j[:, None], eta[..., None] + s * z, m) + lw
        return np.exp(logsumexp(terms, axis=-1))
    w = eta[..., None] + s * rule.nodes          # (..., 1, K)
    terms = log_cond_pmf(j[:, None], w, m) + rule.log_weights
    return np.exp(logsumexp(terms, axis=-1))


def marginal_prob(j: int, x, m: int, delta, rule=None, adaptive="off") -> float:
    """Probability of j successes in m trials at regressor x under
    delta = (beta, tau) with the latent effect integrated out."""
    if not 0 <= j <= m:
        raise ValueError(f"need 0 <= j <= m, got j={j}, m={m}")
    delta = np.asarray(delta, dtype=float)
    beta, tau = delta[:-1], float(delta[-1])
    if tau < 0:
        raise ValueError("tau must be >= 0")
    eta = float(np.dot(np.atleast_1d(x), beta))
    return float(marginal_probs(eta, m, tau, rule, adaptive)[j])


def bivariate_nodes(tau: float, rho: float, rule=None):
    """Tensor-product nodes for (alpha_1, alpha_2) bivariate normal with
    variance tau and correlation rho, whitened by the 2x2 Cholesky factor.

    Returns (alpha1, alpha2, weights), each of length K^2.
    """
    rule = _rule(rule)
    z1, z2 = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    w = np.outer(rule.weights, rule.weights).ravel()
    s = np.sqrt(tau)
    a1 = s * z1.ravel()
    a2 = s * (rho * z1.ravel() + np.sqrt(max(1.0 - rho * rho, 0.0)) * z2.ravel())
    return a1, a2, w


def joint_probs(eta1, eta2, m1: int, m2: int, tau: float, rho: float,
                rule=None) -> np.ndarray:
    """P(Y_1 = j1, Y_2 = j2) for all j1, j2 when the latent pair is
    bivariate normal.  Result shape (..., m1 + 1, m2 + 1)."""
    rule = _rule(rule if rule is not None else JOINT_ORDER)
    a1, a2, w = bivariate_nodes(tau, rho, rule)
    eta1 = np.asarray(eta1, dtype=float)[..., None, None]
    eta2 = np.asarray(eta2, dtype=float)[..., None, None]
    j1 = np.arange(m1 + 1, dtype=float)[:, None]
    j2 = np.arange(m2 + 1, dtype=float)[:, None]
    f1 = np.exp(log_cond_pmf(j1, eta1 + a1, m1))   # (..., m1+1, K^2)
    f2 = np.exp(log_cond_pmf(j2, eta2 + a2, m2))
    return np.einsum("...ak,...bk,k->...ab", f1, f2, w)


def joint_prob(j1: int, j2: int, x1, x2, m1: int, m2: int, params: ModelParams,
               lag: int, order: int = JOINT_ORDER) -> float:
    """P(Y_t = j1, Y_{t+lag} = j2) under the AR(1) latent process, whose
    pair correlation is phi ** lag, on an order x order tensor rule."""
    if not (0 <= j1 <= m1 and 0 <= j2 <= m2):
        raise ValueError("counts out of range")
    if not -1.0 < params.phi < 1.0:
        raise ValueError("phi must lie in (-1, 1)")
    rho = params.phi ** int(lag)
    eta1 = float(np.dot(np.atleast_1d(x1), params.beta))
    eta2 = float(np.dot(np.atleast_1d(x2), params.beta))
    probs = joint_probs(eta1, eta2, m1, m2, params.tau, rho, gauss_hermite(order))
    return float(probs[j1, j2])
