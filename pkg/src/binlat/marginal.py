"""Marginal (random-intercept, serial-independence) likelihood for delta =
(beta, tau) and its maximisation over tau >= 0.

Derivatives are exact derivatives of the quadrature approximation.  With
posterior node weights q_tk = w_k f(y_t | W_tk) / pi_t(y_t) and residuals
r_tk = y_t - m_t bdot(W_tk), W_tk = x_t'beta + sqrt(tau) z_k:

    d l_t / d beta = sum_k q_tk r_tk x_t
    d l_t / d tau  = sum_k q_tk r_tk z_k / (2 sqrt(tau))

and the Hessian is E_q[d2 log f + (d log f)(d log f)'] - g g'.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence
from .glm import GlmFit, glm_fit, glm_loglik
from .model import (BinomialSeries, TrendDesign, link_b_ddot, link_b_dot,
                    linear_trend, trial_distribution)
from .quadrature import _mode_and_scale, _rule, _use_adaptive, log_cond_pmf, marginal_probs

DEGENERACY_THRESHOLD = 1e-6
TAU_INIT = 0.5
COLLAPSE_TAU = 1e-9
MAX_ITER = 200
BETA_WANDER = 1e3
TAU_MAX = 10.0
COND_FALLBACK = 1e12


@dataclass(frozen=True)
class FitResult:
    beta_hat: np.ndarray
    tau_hat: float
    loglik: float
    degenerate: bool
    iterations: int
    converged: bool
    beta_tilde: np.ndarray = field(default=None, repr=False)
    score_at_zero: float = float("nan")
    glm_loglik: float = float("nan")
    at_upper: bool = False

    @property
    def delta_hat(self) -> np.ndarray:
        return np.append(self.beta_hat, self.tau_hat)


def _lse(a):
    """log-sum-exp over the last axis (lean version for the hot path)."""
    mx = a.max(axis=-1)
    return mx + np.log(np.exp(a - mx[..., None]).sum(axis=-1))


def _split(delta):
    delta = np.asarray(delta, dtype=float)
    return delta[:-1], float(delta[-1])


def _nodes(data, beta, tau, rule):
    eta = data.X @ beta
    W = eta[:, None] + np.sqrt(tau) * rule.nodes[None, :]
    logf = log_cond_pmf(data.y[:, None], W, data.m[:, None])
    return W, logf


def marginal_loglik(delta, data: BinomialSeries, rule=None, adaptive="off") -> float:
    """l1(delta) = sum_t log pi_t(y_t).  Equal to glm_loglik at tau = 0."""
    beta, tau = _split(delta)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0.0:
        return glm_loglik(beta, data)
    rule = _rule(rule)
    if _use_adaptive(adaptive, tau, float(np.max(data.m))):
        eta = data.X @ beta
        zhat, scale = _mode_and_scale(data.y, eta, data.m, tau)
        z = zhat[:, None] + scale[:, None] * rule.nodes
        lw = rule.log_weights + np.log(scale)[:, None] + 0.5 * (rule.nodes ** 2 - z ** 2)
        logf = log_cond_pmf(data.y[:, None], eta[:, None] + np.sqrt(tau) * z, data.m[:, None])
        return float(np.sum(_lse(logf + lw)))
    _, logf = _nodes(data, beta, tau, rule)
    return float(np.sum(_lse(logf + rule.log_weights)))


def _posterior(delta, data, rule):
    beta, tau = _split(delta)
    if not tau > 0:
        raise ValueError("the marginal score needs tau > 0; use tau_score_at_zero on the boundary")
    rule = _rule(rule)
    W, logf = _nodes(data, beta, tau, rule)
    lj = logf + rule.log_weights
    mx = lj.max(axis=1)
    e = np.exp(lj - mx[:, None])
    tot = e.sum(axis=1)
    lp = mx + np.log(tot)
    q = e / tot[:, None]
    r = data.y[:, None] - data.m[:, None] * link_b_dot(W)
    return beta, tau, rule, W, lp, q, r


def observation_scores(delta, data: BinomialSeries, rule=None) -> np.ndarray:
    """n x (r+1) matrix whose row t is the score of log pi_t(y_t)."""
    _, tau, rule, _, _, q, r = _posterior(delta, data, rule)
    s = np.sqrt(tau)
    gb = np.sum(q * r, axis=1)
    gt = (q * r) @ rule.nodes / (2.0 * s)
    return np.column_stack([gb[:, None] * data.X, gt])


def marginal_score(delta, data: BinomialSeries, rule=None) -> np.ndarray:
    """Gradient of marginal_loglik; requires tau > 0."""
    return observation_scores(delta, data, rule).sum(axis=0)


def _value_grad_hess(delta, data, rule):
    _, tau, rule, W, lp, q, r = _posterior(delta, data, rule)
    s = np.sqrt(tau)
    z = rule.nodes
    X = data.X
    v = r * r - data.m[:, None] * link_b_ddot(W)
    gb = np.sum(q * r, axis=1)
    gt = (q * r) @ z / (2.0 * s)
    a_bb = np.sum(q * v, axis=1)
    a_bt = (q * v) @ z / (2.0 * s)
    a_tt = (q * v) @ (z * z) / (4.0 * tau) - (q * r) @ z / (4.0 * tau * s)
    rr = X.shape[1]
    Hm = np.empty((rr + 1, rr + 1))
    Hm[:rr, :rr] = (X * (a_bb - gb * gb)[:, None]).T @ X
    Hm[:rr, rr] = Hm[rr, :rr] = X.T @ (a_bt - gb * gt)
    Hm[rr, rr] = np.sum(a_tt - gt * gt)
    grad = np.append(X.T @ gb, gt.sum())
    return float(lp.sum()), grad, Hm


def marginal_hessian(delta, data: BinomialSeries, rule=None) -> np.ndarray:
    """Hessian of marginal_loglik at tau > 0 (second derivatives by quadrature)."""
    return _value_grad_hess(delta, data, rule)[2]


def tau_score_at_zero(beta_tilde, data: BinomialSeries) -> float:
    """S_1n = n^-1 sum[(y_t - m_t bdot)^2 - m_t bddot] at x_t'beta_tilde.

    Twice the right derivative of n^-1 l1 in tau at tau = 0.
    """
    eta = data.X @ np.asarray(beta_tilde, dtype=float)
    res = data.y - data.m * link_b_dot(eta)
    return float(np.mean(res * res - data.m * link_b_ddot(eta)))


def _fd_hessian(delta, data, rule, h=1e-5):
    k = delta.size
    Hm = np.empty((k, k))
    for i in range(k):
        e = np.zeros(k)
        e[i] = h * max(1.0, abs(delta[i]))
        if i == k - 1:
            e[i] = min(e[i], 0.5 * delta[i])
        Hm[:, i] = (marginal_score(delta + e, data, rule)
                    - marginal_score(delta - e, data, rule)) / (2 * e[i])
    return 0.5 * (Hm + Hm.T)


def _beta_step(g_b, H_bb):
    """Newton direction for beta at fixed tau (l1 is concave in beta)."""
    try:
        L = np.linalg.cholesky(-H_bb)
        return np.linalg.solve(L.T, np.linalg.solve(L, g_b))
    except np.linalg.LinAlgError:
        return g_b / max(1e-8, float(np.max(np.abs(np.diag(H_bb)))))


def _profile_beta(data, beta, tau, rule, tol=1e-9, max_iter=50):
    """argmax over beta of l1(beta, tau) by damped Newton.

    For fixed tau the integrand is jointly log-concave in (eta, z), so the
    profile problem is concave and Newton with halving is globally safe.
    Returns (beta, loglik, gradient, Hessian) at the solution.
    """
    ll, g, Hm = _value_grad_hess(np.append(beta, tau), data, rule)
    gtol = tol * max(1.0, data.n / 100.0)
    for _ in range(max_iter):
        if np.max(np.abs(g[:-1])) < gtol:
            break
        d = _beta_step(g[:-1], Hm[:-1, :-1])
        cand = beta + d
        out = _value_grad_hess(np.append(cand, tau), data, rule)
        if out[0] < ll:
            t = 0.5
            for _ in range(30):
                cand = beta + t * d
                if marginal_loglik(np.append(cand, tau), data, rule) >= ll:
                    break
                t *= 0.5
            else:
                break
            out = _value_grad_hess(np.append(cand, tau), data, rule)
        small = np.max(np.abs(cand - beta)) < 1e-12
        beta = cand
        ll, g, Hm = out
        if small:
            break
        if np.max(np.abs(beta)) > BETA_WANDER:
            raise NoConvergence("marginal fit wandered outside the parameter region")
    return beta, ll, g, Hm


def _interior(data, beta_init, tau_init, rule, max_iter, tau_max, s0):
    """Maximise the profile p(tau) = max_beta l1(beta, tau) over (0, tau_max].

    Each outer step re-solves beta at the trial tau, so the tau move is a
    Newton step on p with curvature H_tt - H_tb H_bb^-1 H_bt (the Schur
    complement).  Where p is locally convex the step expands or contracts
    tau geometrically instead.  Returns (delta, loglik, iterations, status)
    with status one of "interior", "collapsed", "upper".
    """
    tau = min(tau_init, tau_max)
    beta, ll, g, Hm = _profile_beta(data, np.asarray(beta_init, float), tau, rule)
    for it in range(1, max_iter + 1):
        delta = np.append(beta, tau)
        if np.linalg.cond(Hm) > COND_FALLBACK:
            Hm = _fd_hessian(delta, data, rule)
        gt = g[-1]
        H_bb, h_bt = Hm[:-1, :-1], Hm[:-1, -1]
        try:
            sol = np.linalg.solve(H_bb, h_bt)
            schur = Hm[-1, -1] - h_bt @ sol
        except np.linalg.LinAlgError:
            sol, schur = np.zeros_like(h_bt), 0.0
        if schur < 0:
            dt = -gt / schur
        else:
            dt = tau if gt > 0 else -0.5 * tau
        if tau + dt <= 0.0:
            if s0 <= 0.0 or tau < COLLAPSE_TAU:
                # the boundary is a local maximum of the concave-looking profile
                return delta, ll, it, "collapsed"
            dt = -0.9 * tau
        if tau + dt >= tau_max:
            if tau >= tau_max and gt > 0:
                return delta, ll, it, "upper"
            dt = tau_max - tau
        accepted = False
        for _ in range(40):
            t_new = tau + dt
            prof = _profile_beta(data, beta - sol * dt, t_new, rule)
            if prof[1] >= ll - 1e-12 * abs(ll):
                accepted = True
                break
            dt *= 0.5
        if not accepted:
            return delta, ll, it, "interior"
        gain = prof[1] - ll
        tau = t_new
        beta, ll, g, Hm = prof
        if tau < COLLAPSE_TAU:
            return np.append(beta, tau), ll, it, "collapsed"
        if abs(dt) < 1e-10 * max(1.0, tau) or (abs(gain) <= 1e-12 * abs(ll) and abs(dt) < 1e-8):
            return np.append(beta, tau), ll, it, "interior"
    raise NoConvergence(f"marginal fit did not converge in {max_iter} iterations")


def fit_marginal(data: BinomialSeries, init=None, rule=None, tau_init: float = TAU_INIT,
                 max_iter: int = MAX_ITER, glm: GlmFit | None = None,
                 tau_max: float = TAU_MAX, boundary_rule: str = "score") -> FitResult:
    """Maximise l1 over beta in R^r and 0 <= tau <= tau_max.

    The GLM fit supplies the boundary candidate (beta_tilde, 0) and the
    default start (beta_tilde, tau_init).  With ``boundary_rule="score"``
    a non-positive boundary score S(beta_tilde) makes (beta_tilde, 0) a local
    maximum and it is returned directly; with ``"global"`` the interior
    search always runs and the better candidate wins.  Fits are flagged
    degenerate when the boundary wins or tau_hat <= 1e-6.  ``tau_max`` is the
    radius of the compact parameter space; fits that end on it have
    ``at_upper=True``.
    """
    if boundary_rule not in ("score", "global"):
        raise ValueError("boundary_rule must be 'score' or 'global'")
    rule = _rule(rule)
    glm = glm or glm_fit(data)
    bt = glm.beta_tilde
    s0 = tau_score_at_zero(bt, data)
    if boundary_rule == "score" and s0 <= 0.0:
        return FitResult(bt.copy(), 0.0, glm.loglik, True, 0, True, bt, s0, glm.loglik)
    if init is None:
        b_init, t_init = bt, tau_init
    else:
        b_init, t_init = _split(init)
        t_init = t_init if t_init > 0 else tau_init
    delta, ll, iters, status = _interior(data, b_init, t_init, rule, max_iter, tau_max, s0)
    if status == "collapsed" or delta[-1] <= DEGENERACY_THRESHOLD or ll <= glm.loglik:
        return FitResult(bt.copy(), 0.0, glm.loglik, True, iters, True, bt, s0, glm.loglik)
    return FitResult(delta[:-1], float(delta[-1]), ll, False, iters, True, bt, s0,
                     glm.loglik, status == "upper")


def limit_Q(delta, delta0, design: TrendDesign | None = None, m_dist=1, rule=None,
            mesh: float | None = None) -> float:
    """Limit objective Q(delta) = sum_m kappa_m int sum_j pi0(j) log pi(j) du.

    ``delta0`` may be a ModelParams (phi is ignored) or a (beta, tau) vector.
    """
    design = design or linear_trend()
    if mesh is not None:
        design = TrendDesign(design.h, mesh, design.name)
    beta, tau = _split(delta)
    if hasattr(delta0, "beta"):
        beta0, tau0 = delta0.beta, delta0.tau
    else:
        beta0, tau0 = _split(delta0)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    H = design.matrix()
    total = 0.0
    for m, km in trial_distribution(m_dist).items():
        p0 = marginal_probs(H @ beta0, m, tau0, rule)
        p = marginal_probs(H @ beta, m, tau, rule)
        with np.errstate(divide="ignore"):
            lp = np.log(p)
        total += km * float(np.mean(np.sum(p0 * lp, axis=1)))
    return total
