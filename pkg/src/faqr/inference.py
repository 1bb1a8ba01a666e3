"""Adequacy test of the pure factor quantile regression.

Tests whether the idiosyncratic coefficients are all zero, i.e. whether
regressing the response on the latent factors alone is adequate.  The
observed statistic is the sup-norm of a rescaled marginal score: factor
effects are estimated by an unpenalized smoothed quantile fit, each
idiosyncratic column is projected so it is orthogonal to the factors in
a kernel-weighted inner product, and the score averages the projected
columns against the smoothed sign of the factor-only residuals.
Critical values come from a Gaussian multiplier bootstrap or from a
residual bootstrap that refits the null model on resampled residuals of
the full (penalized) model.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DimensionError, InputError, NumericalError, Singular
from .rng import derive_seed, stream
from .smoothed_loss import (
    KernelSpec,
    QuantileProblem,
    kernel_cdf,
    kernel_density,
    loss_gradient,
    loss_hessian,
    loss_value,
)
from .solver import SolverConfig, fit_penalized
from .tuning import LambdaRule, select_lambda

# Purpose tag separating the residual bootstrap's internal penalty
# tuning stream from the replicate streams (which use small indices).
_LAMBDA_STREAM = 2**31


@dataclass(frozen=True)
class AdequacyResult:
    """Observed statistic, bootstrap replicates, and the p-value."""

    t_n: float
    boot_stats: np.ndarray
    p_value: float
    method: str
    b: int
    gamma_null: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("boot_stats", "gamma_null"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def fit_factor_only(f_hat, y, tau, kernel, start=None, gtol=1e-9, max_iter=200):
    """Unpenalized smoothed quantile fit of y on the factors alone.

    Uses damped Newton steps with a Levenberg fallback; the dimension is
    the number of factors, so each step is tiny.  Stops when the l2 norm
    of the gradient falls below gtol.
    """
    f_hat = np.asarray(f_hat, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, m = f_hat.shape
    if m > n:
        raise DimensionError("more factors than observations")
    gram_eigs = np.linalg.eigvalsh(f_hat.T @ f_hat)
    if gram_eigs[-1] <= 0 or gram_eigs[0] < 1e-12 * gram_eigs[-1]:
        raise Singular("factor design matrix is rank-deficient")
    problem = QuantileProblem(
        f_hat, y, tau, kernel, sigma_hat=np.ones(m), n_factors=m
    )
    if start is None:
        gamma = np.linalg.solve(f_hat.T @ f_hat, f_hat.T @ y)
    else:
        gamma = np.array(start, dtype=float)
    val = loss_value(problem, gamma)
    mu = 0.0
    for _ in range(max_iter):
        g = loss_gradient(problem, gamma)
        if np.linalg.norm(g) <= gtol:
            return gamma
        hess = loss_hessian(problem, gamma)
        scale = max(np.trace(hess) / m, 1e-12)
        for _ in range(60):
            try:
                step = np.linalg.solve(hess + (mu + 1e-14 * scale) * np.eye(m), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                cand = gamma + step
                cand_val = loss_value(problem, cand)
                if cand_val <= val + 1e-12:
                    gamma, val = cand, cand_val
                    mu = mu / 4.0 if mu > 1e-10 * scale else 0.0
                    break
            mu = max(mu * 4.0, 1e-6 * scale)
        else:
            raise NumericalError("factor-only fit failed to make progress")
    g = loss_gradient(problem, gamma)
    if np.linalg.norm(g) > max(gtol, 1e-8):
        raise NumericalError(
            f"factor-only fit stopped at gradient norm {np.linalg.norm(g):.2e}"
        )
    return gamma


def weighted_project(u_hat, f_hat, k_weights):
    """Remove the weighted factor projection from each idiosyncratic column.

    Returns u* such that f_hat^T diag(w) u*_col = 0 for every column,
    where w holds the kernel weights at the factor-only residuals.
    """
    u_hat = np.asarray(u_hat, dtype=float)
    f_hat = np.asarray(f_hat, dtype=float)
    w = np.asarray(k_weights, dtype=float).ravel()
    if w.shape[0] != u_hat.shape[0] or f_hat.shape[0] != u_hat.shape[0]:
        raise DimensionError("u_hat, f_hat, and k_weights disagree on n")
    if np.any(w < 0) or not np.isfinite(w).all():
        raise DimensionError("k_weights must be finite and non-negative")
    a = f_hat * w[:, None]
    gram = a.T @ a
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= 0 or eigs[-1] / eigs[0] > 1e12:
        raise Singular("weighted factor Gram matrix is ill-conditioned")
    return u_hat - a @ np.linalg.solve(gram, a.T @ u_hat)


def score_statistic(gamma, u_star, f_hat, y, tau, kernel):
    """Rescaled marginal score vector and its sup-norm.

    s = (1/n) sum_i [Kbar_h(-r_i(gamma)) - tau] u*_i with
    r_i(gamma) = y_i - f_i^T gamma; returns (s, max_j |s_j|).
    """
    u_star = np.asarray(u_star, dtype=float)
    f_hat = np.asarray(f_hat, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    r = y - f_hat @ np.asarray(gamma, dtype=float)
    psi = kernel_cdf(kernel, -r / kernel.h) - tau
    s = u_star.T @ psi / y.shape[0]
    t_n = float(np.abs(s).max()) if s.size else 0.0
    return s, t_n


def _null_fit_pieces(factor, y, tau, kernel):
    """Factor-only fit, its residual kernel weights, and projected u."""
    gamma0 = fit_factor_only(factor.f_hat, y, tau, kernel)
    eps0 = y - factor.f_hat @ gamma0
    w = kernel_density(kernel, -eps0 / kernel.h) / kernel.h
    u_star = weighted_project(factor.u_hat, factor.f_hat, w)
    # defining identity of the projection, asserted on every run
    worst = np.abs(factor.f_hat.T @ (w[:, None] * u_star)).max()
    if worst > 1e-8 * max(1.0, np.abs(factor.u_hat).max()):
        raise Singular(
            f"weighted projection lost orthogonality (residual {worst:.2e})"
        )
    return gamma0, u_star


def adequacy_test_multiplier(data, factor, tau, kernel, b, seed):
    """Gaussian multiplier bootstrap calibration of the score test.

    Each replicate reweights simulated score contributions with
    Rademacher signs; the simulated errors are normal with tau-quantile
    zero.  Replicate i draws from the stream (seed, i).
    """
    if data.y is None:
        raise InputError("adequacy test needs a response column")
    if b < 100:
        raise DimensionError("use at least 100 bootstrap replicates")
    y = data.y
    n = y.shape[0]
    gamma0, u_star = _null_fit_pieces(factor, y, tau, kernel)
    _, t_n = score_statistic(gamma0, u_star, factor.f_hat, y, tau, kernel)
    shift = -ndtri(tau)
    boot = np.empty(b)
    for i in range(b):
        gen = stream(seed, i)
        w = 2.0 * gen.integers(0, 2, n) - 1.0
        e = gen.normal(shift, 1.0, n)
        psi = tau - kernel_cdf(kernel, e / kernel.h)
        boot[i] = np.abs(u_star.T @ (w * psi)).max() / n
    p_value = float(np.mean(boot > t_n))
    return AdequacyResult(
        t_n=t_n, boot_stats=boot, p_value=p_value, method="multiplier",
        b=int(b), gamma_null=gamma0, seed=int(seed),
    )


def adequacy_test_residual(
    data,
    factor,
    tau,
    kernel,
    b,
    seed,
    lambda_rule=None,
    solver_cfg=None,
    raw_residuals=False,
    project_stat=False,
):
    """Residual bootstrap calibration of the score test.

    Residuals come from the full penalized fit (factors plus
    idiosyncratic parts, penalty level tuned internally).  Each
    replicate resamples them, rebuilds a null-model response, refits the
    factor-only coefficients, and recomputes the score statistic using
    the raw idiosyncratic columns.  By default the residual pool is
    centered so its empirical tau-quantile is zero, which makes the null
    hold exactly in the bootstrap world; ``raw_residuals=True`` resamples
    them untouched.  ``project_stat=True`` uses the weighted-projected
    columns in the replicate statistic as well.
    """
    if data.y is None:
        raise InputError("adequacy test needs a response column")
    if b < 100:
        raise DimensionError("use at least 100 bootstrap replicates")
    y = data.y
    n = y.shape[0]
    z = np.hstack([factor.u_hat, factor.f_hat])
    problem = QuantileProblem(z, y, tau, kernel, n_factors=factor.m)
    rule = lambda_rule or LambdaRule(seed=derive_seed(seed, _LAMBDA_STREAM))
    lam = select_lambda(problem, rule)
    full_fit = fit_penalized(problem, lam, solver_cfg or SolverConfig())
    eps_full = y - z @ full_fit.theta_hat

    gamma0, u_star = _null_fit_pieces(factor, y, tau, kernel)
    _, t_n = score_statistic(gamma0, u_star, factor.f_hat, y, tau, kernel)

    pool = eps_full if raw_residuals else eps_full - np.quantile(eps_full, tau)
    fitted_null = factor.f_hat @ full_fit.gamma_hat
    u_basis = u_star if project_stat else factor.u_hat
    boot = np.empty(b)
    gamma_b = full_fit.gamma_hat
    for i in range(b):
        gen = stream(seed, i)
        idx = gen.integers(0, n, n)
        y_b = fitted_null + pool[idx]
        gamma_b = fit_factor_only(
            factor.f_hat, y_b, tau, kernel, start=gamma_b, gtol=1e-8
        )
        r_b = y_b - factor.f_hat @ gamma_b
        psi = tau - kernel_cdf(kernel, -r_b / kernel.h)
        boot[i] = np.abs(u_basis.T @ psi).max() / n
    p_value = float(np.mean(boot > t_n))
    return AdequacyResult(
        t_n=t_n, boot_stats=boot, p_value=p_value, method="residual",
        b=int(b), gamma_null=gamma0, seed=int(seed),
    )
