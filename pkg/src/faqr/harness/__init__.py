"""Simulation, backtesting, and I/O harness around the core estimators."""

from .backtest import BacktestReport, rolling_backtest
from .dgp import DgpSpec, DgpTruth, NoiseSpec, generate_dgp, sparse_signal_spec
from .io import load_csv
from .metrics import MetricReport, evaluate_fit
from .pipeline import PipelineConfig, fit_faqr, fit_qr_plain
from .simulate import run_power_study, run_simulation

__all__ = [
    "BacktestReport",
    "DgpSpec",
    "DgpTruth",
    "MetricReport",
    "NoiseSpec",
    "PipelineConfig",
    "evaluate_fit",
    "fit_faqr",
    "fit_qr_plain",
    "generate_dgp",
    "load_csv",
    "rolling_backtest",
    "run_power_study",
    "run_simulation",
    "sparse_signal_spec",
]
