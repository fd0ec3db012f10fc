"""tickfolio: tick-to-portfolio research engine for liquidity-adjusted returns.

Pipeline: raw trade ticks -> minute bars (optional wash-trade treatment) ->
minute/daily liquidity-adjusted returns and liquidity jump/diffusion betas ->
rolling ARMA-GARCH/EGARCH mean forecasts -> constrained mean-variance
portfolios -> walk-forward backtest reports.
"""

from tickfolio._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
