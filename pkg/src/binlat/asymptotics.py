"""Population (large-n) quantities for the marginal and GLM estimators.

Every u-integral is a midpoint rule on the design grid; inner Gaussian
expectations use a 1-D Gauss-Hermite rule, and lag-h pair expectations a
tensor rule over the whitened bivariate latent pair (alpha_t, alpha_{t+h}),
whose correlation is phi^h.  At fixed u the pair shares the same regressor
value in the limit.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp, ndtr

from .errors import NearSingularWarning
from .glm import _solve_moment_equation, mixture_mean
from .marginal import _split, marginal_hessian
from .model import (ModelParams, TrendDesign, link_b_d3, link_b_ddot, link_b_dot,
                    linear_trend, trial_distribution)
from .quadrature import JOINT_ORDER, _rule, bivariate_nodes, gauss_hermite, log_cond_pmf

LAG_TOLERANCE = 1e-8
MAX_LAG = 10_000
COND_WARN = 1e12
LINEARITY_THRESHOLD = 0.01


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def lag_truncation(phi: float, tol: float = LAG_TOLERANCE, cap: int = MAX_LAG) -> int:
    """Number of lags H kept in the double sums: the smallest H >= 0 with
    |phi|^(H+1) < tol, capped at ``cap``."""
    if not -1.0 < phi < 1.0:
        raise ValueError("phi must lie in (-1, 1)")
    a = abs(phi)
    if a == 0.0:
        return 0
    H = int(np.floor(np.log(tol) / np.log(a)))
    while a ** (H + 1) >= tol:
        H += 1
    while H > 0 and a ** H < tol:
        H -= 1
    return min(H, cap)


def _grid(design, mesh):
    design = design or linear_trend()
    if mesh is not None and mesh != design.mesh:
        design = TrendDesign(design.h, mesh, design.name)
    return design.matrix()


def _params(params0, phi=0.0) -> ModelParams:
    if isinstance(params0, ModelParams):
        return params0
    beta, tau = _split(params0)
    return ModelParams(beta, tau, phi)


def _constant_m(m_dist) -> int:
    dist = trial_distribution(m_dist)
    if len(dist) != 1:
        raise ValueError("score moments need a constant trial count m")
    return next(iter(dist))


def _spd_inverse(A, name, notes=None):
    """Inverse of a symmetric positive definite matrix via Cholesky, warning
    (not failing) when the condition number exceeds 1e12."""
    A = 0.5 * (A + A.T)
    cond = float(np.linalg.cond(A))
    if cond > COND_WARN:
        msg = f"{name} is near singular (condition number {cond:.3g})"
        warnings.warn(msg, NearSingularWarning, stacklevel=3)
        if notes is not None:
            notes.append(msg)
    L = np.linalg.cholesky(A)
    Li = np.linalg.inv(L)
    return Li.T @ Li, cond


def _outer_mean(wts, H):
    """mean over the grid of wts(u) h(u) h(u)'."""
    return (H * wts[:, None]).T @ H / H.shape[0]


def _score_table(beta, tau, m, H, rule):
    """Marginal probabilities f(y | h(u)) and per-y score vectors on the grid.

    Returns f of shape (G, m+1) and L of shape (G, m+1, r+1).
    """
    s = np.sqrt(tau)
    y = np.arange(m + 1, dtype=float)
    W = (H @ beta)[:, None] + s * rule.nodes                       # (G, K)
    lj = log_cond_pmf(y[None, :, None], W[:, None, :], m) + rule.log_weights
    lp = logsumexp(lj, axis=-1)                                     # (G, m+1)
    q = np.exp(lj - lp[..., None])
    r = y[None, :, None] - m * link_b_dot(W)[:, None, :]
    gb = np.sum(q * r, axis=-1)
    gt = (q * r) @ rule.nodes / (2.0 * s)
    L = np.concatenate([gb[..., None] * H[:, None, :], gt[..., None]], axis=-1)
    return np.exp(lp), L


# ---------------------------------------------------------------------------
# marginal estimator
# ---------------------------------------------------------------------------

def omega11(delta0, design: TrendDesign | None = None, m_dist=1, rule=None,
            mesh: float | None = None) -> np.ndarray:
    """Information matrix int sum_y f(y) l(y) l(y)' du of the marginal
    likelihood at delta0 (tau0 > 0)."""
    p = _params(delta0)
    if not p.tau > 0:
        raise ValueError("omega11 needs tau0 > 0")
    H = _grid(design, mesh)
    rule = _rule(rule)
    out = np.zeros((H.shape[1] + 1,) * 2)
    for m, km in trial_distribution(m_dist).items():
        f, L = _score_table(p.beta, p.tau, m, H, rule)
        out += km * np.einsum("uy,uyi,uyj->ij", f, L, L) / H.shape[0]
    return 0.5 * (out + out.T)


def _conditional_score_means(L, eta, m, alpha):
    """A[u, k, :] = sum_y f(y | eta_u + alpha_k) L[u, y, :], the mean of the
    score given the latent value alpha_k."""
    y = np.arange(m + 1, dtype=float)
    cf = np.exp(log_cond_pmf(y[None, :, None], eta[:, None, None] + alpha[None, None, :], m))
    return np.einsum("uyk,uyi->uki", cf, L)


def omega12(params0: ModelParams, design: TrendDesign | None = None, m_dist=1, rule=None,
            order2d: int = JOINT_ORDER, mesh: float | None = None,
            lag_tol: float = LAG_TOLERANCE, max_lag: int = MAX_LAG) -> np.ndarray:
    """Long-run score covariance Omega_11 + sum_h (C_h + C_h').

    C_h is the lag-h cross covariance of the per-observation scores, using
    the order2d x order2d tensor rule for the latent pair.
    """
    p = _params(params0)
    if not -1.0 < p.phi < 1.0:
        raise ValueError("phi must lie in (-1, 1)")
    H = _grid(design, mesh)
    rule = _rule(rule)
    out = omega11(p, design, m_dist, rule, mesh)
    nlag = lag_truncation(p.phi, lag_tol, max_lag)
    if nlag == 0:
        return out
    rule2 = gauss_hermite(order2d)
    dist = trial_distribution(m_dist)
    eta = H @ p.beta
    L = {m: _score_table(p.beta, p.tau, m, H, rule)[1] for m in dist}
    a1, _, w = bivariate_nodes(p.tau, 0.0, rule2)
    A = {m: _conditional_score_means(L[m], eta, m, a1) for m in dist}
    G = H.shape[0]
    for h in range(1, nlag + 1):
        _, a2, _ = bivariate_nodes(p.tau, p.phi ** h, rule2)
        B = {m: _conditional_score_means(L[m], eta, m, a2) for m in dist}
        cross = np.zeros_like(out)
        # u-average of E[l_t l_s'] - E l_t E l_s', trial counts independent
        for m1, k1 in dist.items():
            for m2, k2 in dist.items():
                e1 = np.einsum("uki,k->ui", A[m1], w)
                e2 = np.einsum("uki,k->ui", B[m2], w)
                cross += k1 * k2 * (np.einsum("uki,ukj,k->ij", A[m1], B[m2], w)
                                    - e1.T @ e2) / G
        out = out + cross + cross.T
    return 0.5 * (out + out.T)


def marginal_sandwich(params0, design=None, m_dist=1, rule=None, order2d=JOINT_ORDER,
                      mesh=None, lag_tol=LAG_TOLERANCE, max_lag=MAX_LAG, notes=None):
    """Omega_11^-1 Omega_12 Omega_11^-1 and its two ingredients."""
    p = _params(params0)
    O11 = omega11(p, design, m_dist, rule, mesh)
    O12 = omega12(p, design, m_dist, rule, order2d, mesh, lag_tol, max_lag)
    Oi, _ = _spd_inverse(O11, "Omega_11", notes)
    S = Oi @ O12 @ Oi
    return O11, O12, 0.5 * (S + S.T)


def empirical_omega11_hat(delta_star, data, rule=None) -> np.ndarray:
    """Observed information n^-1 (-d2 l1) at delta_star (tau > 0)."""
    _, tau = _split(delta_star)
    if not tau > 0:
        raise ValueError("empirical_omega11_hat needs tau > 0")
    Hm = -marginal_hessian(delta_star, data, rule) / data.n
    return 0.5 * (Hm + Hm.T)


# ---------------------------------------------------------------------------
# GLM estimator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlmSandwich:
    beta_prime: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    sandwich: np.ndarray


def _latent_means(H, beta0, tau0, bp, rule):
    """Per-u latent expectations used by the GLM and score moments."""
    a0 = H @ beta0
    W = a0[:, None] + np.sqrt(tau0) * rule.nodes
    P = link_b_dot(W)
    dbp = link_b_dot(H @ bp)
    return a0, W, P, dbp


def _pair_covariances(H, beta0, tau0, phi, funcs, rule2, nlag):
    """sum over lags h of u-averaged Cov(f_i(alpha_t), f_j(alpha_{t+h})) h h'
    and the scalar-weighted versions, for the callables in ``funcs``.

    Returns a dict (i, j) -> per-u array of sum_h Cov.
    """
    a0 = H @ beta0
    a1, _, w = bivariate_nodes(tau0, 0.0, rule2)
    F1 = [f(a0[:, None] + a1) for f in funcs]
    out = {(i, j): np.zeros(H.shape[0]) for i in range(len(funcs)) for j in range(len(funcs))}
    for h in range(1, nlag + 1):
        _, a2, _ = bivariate_nodes(tau0, phi ** h, rule2)
        F2 = [f(a0[:, None] + a2) for f in funcs]
        for i, j in out:
            out[i, j] += (F1[i] * F2[j]) @ w - (F1[i] @ w) * (F2[j] @ w)
    return out


def glm_sandwich(params0, design: TrendDesign | None = None, m_dist=1, rule=None,
                 order2d: int = JOINT_ORDER, mesh: float | None = None,
                 lag_tol: float = LAG_TOLERANCE, max_lag: int = MAX_LAG,
                 notes=None) -> GlmSandwich:
    """Omega_1^-1 Omega_2 Omega_1^-1 for the GLM estimator centred at beta'.

    Omega_2 is the long-run variance of n^-1/2 sum (y_t - m_t bdot') x_t:
    the per-t variance m_bar E bddot(W) + E[m^2] Var bdot(W) + Var(m)
    (pi0 - bdot')^2 plus m_bar^2 times the latent lag covariances of bdot(W).
    """
    p = _params(params0)
    H = _grid(design, mesh)
    rule = _rule(rule)
    dist = trial_distribution(m_dist)
    m1 = sum(m * k for m, k in dist.items())
    m2 = sum(m * m * k for m, k in dist.items())
    bp = _beta_prime_grid(p.beta, p.tau, H, rule)
    _, W, P, dbp = _latent_means(H, p.beta, p.tau, bp, rule)
    pi0 = P @ rule.weights
    Ebdd = (P * (1 - P)) @ rule.weights
    Edd = ((P - dbp[:, None]) ** 2) @ rule.weights
    O1 = m1 * _outer_mean(link_b_ddot(H @ bp), H)
    per_t = m1 * Ebdd + m2 * Edd - m1 * m1 * (pi0 - dbp) ** 2
    nlag = lag_truncation(p.phi, lag_tol, max_lag)
    if nlag and p.tau > 0:
        cov = _pair_covariances(H, p.beta, p.tau, p.phi, [link_b_dot],
                                gauss_hermite(order2d), nlag)
        per_t = per_t + 2.0 * m1 * m1 * cov[0, 0]
    O2 = _outer_mean(per_t, H)
    O1i, _ = _spd_inverse(O1, "Omega_1", notes)
    S = O1i @ O2 @ O1i
    return GlmSandwich(bp, O1, 0.5 * (O2 + O2.T), 0.5 * (S + S.T))


def _beta_prime_grid(beta0, tau0, H, rule):
    beta0 = np.asarray(beta0, dtype=float)
    if tau0 == 0.0:
        return beta0.copy()
    return _solve_moment_equation(H, mixture_mean(H @ beta0, tau0, rule), beta0)


# ---------------------------------------------------------------------------
# boundary score
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreMoments:
    """Mean c_S and asymptotic sd sigma_S of S_1n(beta_tilde) with the
    ingredients of sigma_S^2 = V_S - 2 J' O1^-1 K + J' O1^-1 O2 O1^-1 J."""

    c1: float
    c2: float
    c_S: float
    J_S: np.ndarray
    K_S: np.ndarray
    V_S: float
    sigma_S: float
    mode: str


def score_moments(params0, design: TrendDesign | None = None, m_dist=1, rule=None,
                  order2d: int = JOINT_ORDER, mesh: float | None = None,
                  moments: str = "binomial", lag_tol: float = LAG_TOLERANCE,
                  max_lag: int = MAX_LAG, notes=None) -> ScoreMoments:
    """Limit mean and sd of the boundary score S_1n(beta_tilde), constant m.

    ``moments="binomial"`` evaluates the lag-0 moments of e_t = y_t - m
    bdot' as if y_t were Binomial(m, pi0) marginally (the closed form used
    for the published table); ``moments="exact"`` uses the latent mixture
    moments.  Lag terms (phi != 0) always come from the latent pair
    covariances of E[e | alpha] and E[e^2 | alpha].
    """
    if moments not in ("binomial", "exact"):
        raise ValueError("moments must be 'binomial' or 'exact'")
    p = _params(params0)
    m = _constant_m(m_dist)
    H = _grid(design, mesh)
    rule = _rule(rule)
    gs = glm_sandwich(p, design, m, rule, order2d, mesh, lag_tol, max_lag, notes)
    bp = gs.beta_prime
    _, W, P, dbp = _latent_means(H, p.beta, p.tau, bp, rule)
    wq = rule.weights
    pi0 = P @ wq
    bdd = link_b_ddot(H @ bp)
    b3 = link_b_d3(H @ bp)
    c1 = float(np.mean(((P - dbp[:, None]) ** 2) @ wq))
    c2 = float(np.mean((dbp - pi0) * (2 * dbp - 1)))
    cS = m * (m - 1) * c1 + m * c2
    J = H.T @ (2 * m * m * (pi0 - dbp) * bdd + m * b3) / H.shape[0]
    if moments == "binomial":
        pq = pi0 * (1 - pi0)
        d = pi0 - dbp
        k0 = m * pq * (1 - 2 * pi0) + 2 * m * m * pq * d
        v0 = (m * pq * (1 + 2 * (m - 3) * pq) + 4 * m ** 3 * pq * d * d
              + 4 * m * m * pq * (1 - 2 * pi0) * d)
    else:
        d = m * (P - dbp[:, None])
        v = m * P * (1 - P)
        mu3 = v * (1 - 2 * P)
        mu4 = v * (1 + 3 * (m - 2) * P * (1 - P))
        e1 = d @ wq
        e2 = (v + d * d) @ wq
        e3 = (mu3 + 3 * d * v + d ** 3) @ wq
        e4 = (mu4 + 4 * d * mu3 + 6 * d * d * v + d ** 4) @ wq
        k0 = e3 - e1 * e2
        v0 = e4 - e2 * e2
    nlag = lag_truncation(p.phi, lag_tol, max_lag)
    if nlag and p.tau > 0:
        eta_p = dbp

        def mu1(a, _m=m):
            return _m * (link_b_dot(a) - np.broadcast_to(eta_p[:, None], a.shape))

        def mu2(a, _m=m):
            return _m * link_b_ddot(a) + mu1(a) ** 2

        cov = _pair_covariances(H, p.beta, p.tau, p.phi, [mu1, mu2],
                                gauss_hermite(order2d), nlag)
        v0 = v0 + 2.0 * cov[1, 1]
        k0 = k0 + cov[1, 0] + cov[0, 1]
    K = H.T @ k0 / H.shape[0]
    V = float(np.mean(v0))
    O1i, _ = _spd_inverse(gs.omega1, "Omega_1", notes)
    s2 = V - 2 * J @ O1i @ K + J @ O1i @ gs.omega2 @ O1i @ J
    return ScoreMoments(c1, c2, float(cS), J, K, V, float(np.sqrt(max(s2, 0.0))), moments)


# ---------------------------------------------------------------------------
# pile-up probabilities and the mixture
# ---------------------------------------------------------------------------

def kappa_from_ratios(n, cs_over_sigma: float, tau0: float, sigma_tau: float):
    """kappa1 = Phi(-sqrt(n) c_S / sigma_S), kappa2 = Phi(-sqrt(n) tau0 / sigma_tau)."""
    rn = np.sqrt(np.asarray(n, dtype=float))
    return ndtr(-rn * cs_over_sigma), ndtr(-rn * tau0 / sigma_tau)


def kappa_bounds(params0, design=None, m_dist=1, n=200, rule=None, order2d=JOINT_ORDER,
                 mesh=None, moments: str = "binomial", lag_tol=LAG_TOLERANCE,
                 max_lag=MAX_LAG):
    """(kappa1_bar, kappa2_bar) at sample size(s) n."""
    p = _params(params0)
    if np.any(np.asarray(n) < 1):
        raise ValueError("n must be >= 1")
    sm = score_moments(p, design, m_dist, rule, order2d, mesh, moments, lag_tol, max_lag)
    _, _, S = marginal_sandwich(p, design, m_dist, rule, order2d, mesh, lag_tol, max_lag)
    return kappa_from_ratios(n, sm.c_S / sm.sigma_S, p.tau, np.sqrt(S[-1, -1]))


@dataclass(frozen=True)
class MixtureMoments:
    """Two-moment description of beta_hat on each branch of the mixture."""

    interior_mean: np.ndarray
    interior_cov: np.ndarray
    boundary_mean: np.ndarray
    boundary_cov: np.ndarray
    tau_shift: float
    tau_var: float

    @property
    def interior_sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.interior_cov))

    @property
    def boundary_sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.boundary_cov))


def truncated_tau_moments(tau0: float, var_tau: float):
    """E(tau_hat - tau0 | tau_hat > 0) and Var(tau_hat | tau_hat > 0) when
    tau_hat ~ N(tau0, var_tau)."""
    sd = np.sqrt(var_tau)
    a = -tau0 / sd
    lam = np.exp(-0.5 * a * a) / np.sqrt(2 * np.pi) / ndtr(-a)
    return float(sd * lam), float(var_tau * (1 + a * lam - lam * lam))


def mixture_moments(params0, design=None, n: int = 200, tau_moments=None, m_dist=1,
                    rule=None, order2d=JOINT_ORDER, mesh=None, conditioned: bool = False,
                    moments: str = "binomial", lag_tol=LAG_TOLERANCE, max_lag=MAX_LAG):
    """Conditional moments of beta_hat given tau_hat > 0 (interior branch) and
    tau_hat = 0 (boundary branch).

    ``tau_moments`` = (E[tau_hat - tau0 | tau_hat > 0], Var[tau_hat | tau_hat > 0]),
    typically taken from simulation; when None the truncated-normal values
    implied by the sandwich are used.  The boundary branch is the GLM limit
    law N(beta', sandwich/n); ``conditioned=True`` conditions it instead on
    the score event {U1 - J' O1^-1 U2 <= -sqrt(n) c_S}.
    """
    p = _params(params0)
    _, _, S = marginal_sandwich(p, design, m_dist, rule, order2d, mesh, lag_tol, max_lag)
    mean_i, cov_i, shift, tvar = _interior_branch(p.beta, p.tau, S, n, tau_moments)
    gs = glm_sandwich(p, design, m_dist, rule, order2d, mesh, lag_tol, max_lag)
    mean_b, cov_b = gs.beta_prime.copy(), gs.sandwich / n
    if conditioned:
        sm = score_moments(p, design, m_dist, rule, order2d, mesh, moments, lag_tol, max_lag)
        O1i = np.linalg.inv(gs.omega1)
        gamma = O1i @ sm.K_S - O1i @ gs.omega2 @ O1i @ sm.J_S
        a = -np.sqrt(n) * sm.c_S / sm.sigma_S
        lam = np.exp(-0.5 * a * a) / np.sqrt(2 * np.pi) / ndtr(a)
        et = -sm.sigma_S * lam
        vt = sm.sigma_S ** 2 * (1 - a * lam - lam * lam)
        g = gamma / sm.sigma_S ** 2
        mean_b = mean_b + g * et / np.sqrt(n)
        cov_b = (gs.sandwich - np.outer(gamma, gamma) / sm.sigma_S ** 2
                 + np.outer(g, g) * vt) / n
    return MixtureMoments(mean_i, cov_i, mean_b, 0.5 * (cov_b + cov_b.T), shift, tvar)


def _interior_branch(beta0, tau0, sandwich, n, tau_moments):
    Sig = sandwich / n
    s_tt = Sig[-1, -1]
    if not s_tt > 0:
        raise ValueError("Sigma_tautau must be positive")
    if tau_moments is None:
        tau_moments = truncated_tau_moments(tau0, s_tt)
    shift, tvar = map(float, tau_moments)
    s_bt = Sig[:-1, -1]
    mean = np.asarray(beta0, dtype=float) + s_bt / s_tt * shift
    cov = Sig[:-1, :-1] - np.outer(s_bt, s_bt) / s_tt + np.outer(s_bt, s_bt) / s_tt ** 2 * tvar
    return mean, 0.5 * (cov + cov.T), shift, tvar


def mixture_from_report(report: "AsymptoticReport", beta0, tau0: float, n: int,
                        tau_moments=None) -> MixtureMoments:
    """Unconditioned mixture moments from an already computed report."""
    mean_i, cov_i, shift, tvar = _interior_branch(beta0, tau0, report.sandwich_marginal,
                                                  n, tau_moments)
    cov_b = report.sandwich_glm / n
    return MixtureMoments(mean_i, cov_i, report.beta_prime.copy(), cov_b, shift, tvar)


# ---------------------------------------------------------------------------
# near-linearity diagnostic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearityDiagnostic:
    a0_star: float
    a1_star: float
    max_abs_residual: float
    rms_residual: float
    near_linear: bool


def linearity_diagnostic(delta, design: TrendDesign | None = None, rule=None,
                         mesh: float | None = None,
                         threshold: float = LINEARITY_THRESHOLD) -> LinearityDiagnostic:
    """Straight-line fit of g(a) = int (1 - 2 bdot(a + sqrt(tau) z)) rho(z) dz,
    rho proportional to bddot(a + sqrt(tau) z) phi(z), against a = h(u)'beta.

    A small residual means the binary tau-score is nearly a linear
    combination of the beta-scores, so Omega_11 is close to singular.  The
    flag compares the root-mean-square residual with ``threshold``; the
    maximum residual is reported alongside.
    """
    beta, tau = _split(delta)
    H = _grid(design, mesh)
    rule = _rule(rule)
    a = H @ beta
    W = a[:, None] + np.sqrt(max(tau, 0.0)) * rule.nodes
    rho = link_b_ddot(W) * rule.weights
    g = np.sum((1 - 2 * link_b_dot(W)) * rho, axis=1) / rho.sum(axis=1)
    if np.ptp(a) < 1e-12:
        return LinearityDiagnostic(float(g.mean()), 0.0, 0.0, 0.0, True)
    A = np.column_stack([np.ones_like(a), a])
    coef, *_ = np.linalg.lstsq(A, g, rcond=None)
    res = g - A @ coef
    rms = float(np.sqrt(np.mean(res * res)))
    return LinearityDiagnostic(float(coef[0]), float(coef[1]), float(np.max(np.abs(res))),
                               rms, rms < threshold)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class AsymptoticReport:
    beta_prime: np.ndarray
    omega11: np.ndarray
    omega12: np.ndarray
    sandwich_marginal: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    sandwich_glm: np.ndarray
    c1: float
    c2: float
    c_S: float
    sigma_S: float
    J_S: np.ndarray
    K_S: np.ndarray
    V_S: float
    sigma_tau_sq: float
    n: np.ndarray
    kappa1_bar: np.ndarray
    kappa2_bar: np.ndarray
    eigenvalues_omega11: np.ndarray
    condition_numbers: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def asd(self) -> np.ndarray:
        """Asymptotic sd of (beta_hat, tau_hat) at each n, shape (len(n), r+1)."""
        return np.sqrt(np.outer(1.0 / self.n, np.diag(self.sandwich_marginal)))


def analytic_report(params0, design=None, m_dist=1, n=(200, 500, 1000, 5000), rule=None,
                    order2d=JOINT_ORDER, mesh=None, moments: str = "binomial",
                    lag_tol=LAG_TOLERANCE, max_lag=MAX_LAG) -> AsymptoticReport:
    p = _params(params0)
    notes: list = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearSingularWarning)
        O11, O12, S = marginal_sandwich(p, design, m_dist, rule, order2d, mesh,
                                        lag_tol, max_lag, notes)
        gs = glm_sandwich(p, design, m_dist, rule, order2d, mesh, lag_tol, max_lag, notes)
        sm = score_moments(p, design, m_dist, rule, order2d, mesh, moments, lag_tol,
                           max_lag, notes)
    for msg in dict.fromkeys(notes):
        warnings.warn(msg, NearSingularWarning, stacklevel=2)
    n = np.atleast_1d(np.asarray(n, dtype=float))
    k1, k2 = kappa_from_ratios(n, sm.c_S / sm.sigma_S, p.tau, np.sqrt(S[-1, -1]))
    conds = {"omega11": float(np.linalg.cond(O11)), "omega1": float(np.linalg.cond(gs.omega1))}
    return AsymptoticReport(gs.beta_prime, O11, O12, S, gs.omega1, gs.omega2, gs.sandwich,
                            sm.c1, sm.c2, sm.c_S, sm.sigma_S, sm.J_S, sm.K_S, sm.V_S,
                            float(S[-1, -1]), n, k1, k2, np.linalg.eigvalsh(O11)[::-1],
                            conds, list(dict.fromkeys(notes)))
