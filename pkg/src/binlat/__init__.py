"""Estimation, large-sample theory and pile-up diagnostics for binomial time
series regression with a latent stationary Gaussian AR(1) process."""

__version__ = "0.1.0"

from .errors import (BinlatError, DegenerateFit, NearSingularWarning, NoConvergence,
                     SeparationDetected, SingularGramMatrix, SingularHessian)
from .model import (BinomialSeries, LatentPath, ModelParams, TrendDesign, link_b, link_b_d3,
                    link_b_ddot, link_b_dot, linear_trend, linear_trend_design,
                    replication_seeds, simulate_latent, simulate_series, simulate_trials)
from .quadrature import QuadratureRule, gauss_hermite, joint_prob, marginal_prob
from .glm import GlmFit, beta_prime, beta_prime_empirical, glm_fit, glm_loglik, glm_score
from .marginal import (FitResult, fit_marginal, limit_Q, marginal_hessian, marginal_loglik,
                       marginal_score, observation_scores, tau_score_at_zero)
from .asymptotics import (AsymptoticReport, analytic_report, empirical_omega11_hat,
                          glm_sandwich, kappa_bounds, lag_truncation, linearity_diagnostic,
                          marginal_sandwich, mixture_moments, omega11, omega12, score_moments)
from .subsampling import SubsampleCovariance, block_length, subsample_covariance
from .config import ExperimentConfig, load_config, parse_config
from .harness import ExperimentResult, emit_tables, run_experiment
