"""Rolling-window out-of-sample evaluation.

Each window refits the whole pipeline on the trailing observations and
predicts the next one.  A new observation's factor scores are obtained
by least-squares regression on the window's loadings,
f_t = (B^T B)^{-1} B^T x_t, and the prediction combines them with the
fitted coefficients as x_t^T beta + f_t^T varphi, which equals
f_t^T gamma + (x_t - B f_t)^T beta.  Accuracy is summarized by the mean
absolute prediction error and the out-of-sample quantile pseudo-R2
against each window's training sample quantile.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import FaqrError, NumericalError, WindowTooLarge
from ..factor_model import DataMatrix
from ..rng import derive_seed
from ..smoothed_loss import check_loss
from .pipeline import PIPELINES, PipelineConfig


@dataclass(frozen=True)
class BacktestReport:
    window: int
    predictions: np.ndarray
    actuals: np.ndarray
    benchmarks: np.ndarray
    mape: float
    pseudo_r2: float
    tau: float
    method: str
    failures: tuple

    def __post_init__(self):
        for name in ("predictions", "actuals", "benchmarks"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def prediction_metrics(actuals, predictions, benchmarks, tau):
    """Mean absolute prediction error and quantile pseudo-R2.

    The pseudo-R2 compares the check loss of the predictions against the
    check loss of each window's training-sample quantile: 1 for exact
    predictions, 0 for a predictor that just repeats the benchmark.
    """
    actuals = np.asarray(actuals, dtype=float)
    err = actuals - np.asarray(predictions, dtype=float)
    num = check_loss(err, tau).sum()
    denom = check_loss(actuals - np.asarray(benchmarks, dtype=float), tau).sum()
    if denom > 0:
        pseudo_r2 = 1.0 - num / denom
    else:
        pseudo_r2 = 1.0 if num == 0 else -np.inf
    return float(np.abs(err).mean()), float(pseudo_r2)


def _predict(result, x_new, method):
    fit = result.fit
    if method == "qr_plain":
        return float(x_new @ fit.theta_hat)
    fm = result.factor_model
    f_new = np.linalg.solve(fm.b_hat.T @ fm.b_hat, fm.b_hat.T @ x_new)
    return float(x_new @ fit.beta_hat + f_new @ fit.varphi_hat)


def rolling_backtest(data, window, tau, method="faqr", config=None, seed=0, threads=1):
    """Roll a fitting window through the series and score the predictions.

    A window whose fit fails numerically logs the failure and reuses the
    most recent successful fit instead of aborting the run.
    """
    if data.y is None:
        raise WindowTooLarge("backtesting needs a response column")
    n = data.x.shape[0]
    window = int(window)
    if not 1 < window < n:
        raise WindowTooLarge(f"window {window} leaves no observations to predict (n={n})")
    config = config or PipelineConfig()
    pipeline = PIPELINES[method]

    def fit_window(t):
        rows = slice(t - window, t)
        train = DataMatrix(x=data.x[rows], y=data.y[rows])
        cfg = config.with_seed(derive_seed(seed, t))
        try:
            return t, pipeline(train, tau, cfg), None
        except FaqrError as exc:
            return t, None, f"window ending at {t}: {type(exc).__name__}: {exc}"

    times = range(window, n)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(fit_window, times))
    else:
        fits = [fit_window(t) for t in times]

    predictions = np.empty(n - window)
    benchmarks = np.empty(n - window)
    failures = []
    last_good = None
    for t, result, failure in fits:
        if failure is not None:
            failures.append(failure)
            result = last_good
        else:
            last_good = result
        if result is None:
            # the first window failed and there is no earlier fit to reuse
            raise NumericalError(failure)
        predictions[t - window] = _predict(result, data.x[t], method)
        benchmarks[t - window] = np.quantile(data.y[t - window : t], tau)
    actuals = data.y[window:]
    mape, pseudo_r2 = prediction_metrics(actuals, predictions, benchmarks, tau)
    return BacktestReport(
        window=window,
        predictions=predictions,
        actuals=actuals,
        benchmarks=benchmarks,
        mape=mape,
        pseudo_r2=pseudo_r2,
        tau=tau,
        method=method,
        failures=tuple(failures),
    )
