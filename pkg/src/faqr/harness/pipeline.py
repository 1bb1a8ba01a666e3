"""End-to-end fitting pipelines shared by the CLI, simulations, and backtests.

A pipeline run is: optional column centering, factor extraction (count
fixed or selected by the eigenvalue ratio), smoothed-problem assembly
with the default bandwidth rule, pivotal penalty tuning, and the
penalized fit.  The plain variant skips the factor step and regresses
the response on the raw columns with the same machinery.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..factor_model import DataMatrix, default_m_max, estimate_factors, select_num_factors
from ..errors import InputError
from ..smoothed_loss import KernelSpec, QuantileProblem, default_bandwidth
from ..solver import SolverConfig, fit_penalized
from ..tuning import LambdaRule, select_lambda


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a pipeline run needs besides the data and tau."""

    kernel_family: str = "gaussian"
    bandwidth: float | None = None
    num_factors: int | None = None
    m_max: int | None = None
    center: bool = False
    penalize_factors: bool = True
    lambda_rule: LambdaRule = LambdaRule()
    solver: SolverConfig = SolverConfig()

    def with_seed(self, seed):
        return replace(self, lambda_rule=replace(self.lambda_rule, seed=int(seed)))


@dataclass(frozen=True)
class PipelineResult:
    fit: "object"
    lam: float
    factor_model: "object | None"
    problem: "object"


def _prepare(data, config):
    if data.y is None:
        raise InputError("pipeline fitting needs a response column")
    x = data.x
    if config.center:
        x = x - x.mean(axis=0)
        data = DataMatrix(x=x, y=data.y, column_names=data.column_names)
    return data


def fit_faqr(data, tau, config=None):
    """Factor-augmented pipeline: PCA, tuning, penalized smoothed fit."""
    config = config or PipelineConfig()
    data = _prepare(data, config)
    n, d = data.x.shape
    m = config.num_factors
    if m is None:
        m = select_num_factors(data, config.m_max or default_m_max(n, d))
    fm = estimate_factors(data, m)
    h = config.bandwidth or default_bandwidth(n, d, m, tau)
    kernel = KernelSpec(config.kernel_family, h)
    z = np.hstack([fm.u_hat, fm.f_hat])
    problem = QuantileProblem(z, data.y, tau, kernel, n_factors=m)
    lam = select_lambda(problem, config.lambda_rule)
    if not config.penalize_factors:
        # keep the tuning statistic as-is but drop the penalty on the
        # dense factor coefficients
        sigma = problem.sigma_hat.copy()
        sigma[d:] = 0.0
        problem = QuantileProblem(z, data.y, tau, kernel, sigma_hat=sigma, n_factors=m)
    fit = fit_penalized(problem, lam, config.solver).with_varphi(fm.b_hat)
    return PipelineResult(fit=fit, lam=lam, factor_model=fm, problem=problem)


def fit_qr_plain(data, tau, config=None):
    """Plain pipeline: the response regressed on the raw columns."""
    config = config or PipelineConfig()
    data = _prepare(data, config)
    n, d = data.x.shape
    h = config.bandwidth or default_bandwidth(n, d, 0, tau)
    kernel = KernelSpec(config.kernel_family, h)
    problem = QuantileProblem(data.x, data.y, tau, kernel, n_factors=0)
    lam = select_lambda(problem, config.lambda_rule)
    fit = fit_penalized(problem, lam, config.solver)
    return PipelineResult(fit=fit, lam=lam, factor_model=None, problem=problem)


PIPELINES = {"faqr": fit_faqr, "qr_plain": fit_qr_plain}
