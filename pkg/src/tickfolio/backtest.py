"""Walk-forward, daily-rebalanced backtest of the 12-portfolio catalog.

Portfolios 1-6 are benchmark weightings (equal, market, liquidity and inverse
liquidity, the latter two with/without wash treatment). Portfolios 7-9 are
standard mean-variance on window means; 10-12 replace the mean vector with
the rolling one-step model forecast. Estimation may run on regular or
liquidity-adjusted daily returns, but realized performance is always measured
on regular returns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from tickfolio import tsmodel
from tickfolio.optimizer import MvProblem, risk_aversion, solve_mv

log = logging.getLogger(__name__)

TRADING_DAYS_PER_YEAR = 365
RISKFREE_NAME = "USDT"
INVERSE_BETA_FLOOR = 1e-6


class BacktestError(Exception):
    """Backtest construction or execution failure."""


@dataclass(frozen=True)
class PortfolioSpec:
    id: int
    kind: str  # equal | market | liquidity_weight | inverse_liquidity_weight | mv_standard | mv_forecast
    treatment: str  # "with" | "without" | "n/a"
    return_basis: str  # "regular" | "liquidity_adjusted"

    def __post_init__(self) -> None:
        expected = PORTFOLIO_CATALOG.get(self.id)
        if expected is None:
            raise BacktestError(f"unknown portfolio id {self.id}")
        if (self.kind, self.treatment, self.return_basis) != expected:
            raise BacktestError(
                f"portfolio {self.id} must be {expected}, got "
                f"({self.kind}, {self.treatment}, {self.return_basis})"
            )

    @property
    def uses_optimizer(self) -> bool:
        return self.kind in ("mv_standard", "mv_forecast")

    @property
    def basis_key(self) -> str:
        if self.return_basis == "regular":
            return "regular"
        return "adj_treated" if self.treatment == "with" else "adj_untreated"


PORTFOLIO_CATALOG: dict[int, tuple[str, str, str]] = {
    1: ("equal", "n/a", "regular"),
    2: ("market", "n/a", "regular"),
    3: ("liquidity_weight", "with", "regular"),
    4: ("liquidity_weight", "without", "regular"),
    5: ("inverse_liquidity_weight", "with", "regular"),
    6: ("inverse_liquidity_weight", "without", "regular"),
    7: ("mv_standard", "n/a", "regular"),
    8: ("mv_standard", "with", "liquidity_adjusted"),
    9: ("mv_standard", "without", "liquidity_adjusted"),
    10: ("mv_forecast", "n/a", "regular"),
    11: ("mv_forecast", "with", "liquidity_adjusted"),
    12: ("mv_forecast", "without", "liquidity_adjusted"),
}


def portfolio_spec(pid: int) -> PortfolioSpec:
    kind, treatment, basis = PORTFOLIO_CATALOG[pid]
    return PortfolioSpec(id=pid, kind=kind, treatment=treatment, return_basis=basis)


@dataclass
class UniversePanel:
    """Per-asset daily series consumed by the backtest (shape (n_assets, n_days))."""

    assets: list[str]
    r_regular: np.ndarray
    r_adj_treated: np.ndarray
    r_adj_untreated: np.ndarray
    amount: np.ndarray  # untreated daily traded amount
    beta_jump_treated: np.ndarray
    beta_jump_untreated: np.ndarray

    def __post_init__(self) -> None:
        shape = (len(self.assets), self.n_days)
        for name in ("r_regular", "r_adj_treated", "r_adj_untreated", "amount",
                     "beta_jump_treated", "beta_jump_untreated"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            setattr(self, name, arr)
            if arr.shape != shape:
                raise BacktestError(f"panel field {name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=0))[0])
                raise BacktestError(f"panel field {name} has non-finite data at day {bad}")

    @property
    def n_days(self) -> int:
        return np.asarray(self.r_regular).shape[1]

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    def basis_matrix(self, basis_key: str) -> np.ndarray:
        return {
            "regular": self.r_regular,
            "adj_treated": self.r_adj_treated,
            "adj_untreated": self.r_adj_untreated,
        }[basis_key]

    def beta_jump(self, treatment: str) -> np.ndarray:
        return self.beta_jump_treated if treatment == "with" else self.beta_jump_untreated

    def market_returns(self) -> np.ndarray:
        """Amount-weighted daily return of the untreated market portfolio."""
        total = self.amount.sum(axis=0)
        weights = np.where(total > 0, self.amount / np.where(total > 0, total, 1.0), 1.0 / self.n_assets)
        return (weights * self.r_regular).sum(axis=0)


def panel_from_records(assets: list[str], records_by_branch: dict[str, dict[str, list]]) -> UniversePanel:
    """Build a panel from liquidity day records, keyed records_by_branch[branch][asset].

    Branches are "treated" and "untreated"; records must cover the same day
    range for every asset (a missing day is fatal and names the day index).
    """
    treated = records_by_branch["treated"]
    untreated = records_by_branch["untreated"]
    n_days = len(untreated[assets[0]])
    for asset in assets:
        for branch, recs in (("treated", treated[asset]), ("untreated", untreated[asset])):
            if len(recs) != n_days:
                raise BacktestError(f"asset {asset} {branch}: expected {n_days} day records, got {len(recs)}")
            for d, rec in enumerate(recs):
                if rec.day_index != d:
                    raise BacktestError(f"asset {asset} {branch}: missing day {d}")

    def stack(branch: dict, attr: str) -> np.ndarray:
        return np.array([[getattr(rec, attr) for rec in branch[a]] for a in assets])

    return UniversePanel(
        assets=list(assets),
        r_regular=stack(untreated, "r_daily"),
        r_adj_treated=stack(treated, "r_daily_adj"),
        r_adj_untreated=stack(untreated, "r_daily_adj"),
        amount=stack(untreated, "amount_daily"),
        beta_jump_treated=stack(treated, "beta_jump"),
        beta_jump_untreated=stack(untreated, "beta_jump"),
    )


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def benchmark_weights(spec: PortfolioSpec, amounts_day: np.ndarray, beta_jump_day: np.ndarray | None = None) -> np.ndarray:
    """Risky-asset weights for benchmark portfolios (they hold zero USDT)."""
    n = amounts_day.size
    if spec.kind == "equal":
        return np.full(n, 1.0 / n)
    if spec.kind == "market":
        total = amounts_day.sum()
        if total <= 0:
            return np.full(n, 1.0 / n)
        return amounts_day / total
    if spec.kind == "liquidity_weight":
        betas = np.asarray(beta_jump_day, dtype=np.float64)
        total = betas.sum()
        if total <= 0:
            return np.full(n, 1.0 / n)
        return betas / total
    if spec.kind == "inverse_liquidity_weight":
        betas = np.asarray(beta_jump_day, dtype=np.float64).copy()
        zero = betas <= 0.0
        if zero.any():
            log.warning("inverse-liquidity weights: %d zero betas floored", int(zero.sum()))
            betas[zero] = INVERSE_BETA_FLOOR
        inv = 1.0 / betas
        return inv / inv.sum()
    raise BacktestError(f"{spec.kind} is not a benchmark portfolio kind")


@dataclass
class BacktestReport:
    portfolio_id: int
    day_indices: np.ndarray
    daily_returns: np.ndarray
    daily_volatility: np.ndarray
    max_daily_return: float
    max_daily_volatility: float
    annualized_return: float
    annualized_volatility: float
    sharpe: float


@dataclass
class BacktestOutput:
    reports: dict[int, BacktestReport]
    weights: dict[int, np.ndarray]  # (n_oos, 1 + n_assets), column 0 = USDT
    asset_columns: list[str]
    day_indices: np.ndarray
    lambda_clamped_days: int = 0
    forecast_gap_cells: int = 0


def sharpe_annualized(daily_returns, periods_per_year: int = TRADING_DAYS_PER_YEAR) -> float:
    """Annualized Sharpe ratio with a zero risk-free rate."""
    r = np.asarray(daily_returns, dtype=np.float64)
    if r.size < 2:
        raise BacktestError("Sharpe ratio needs at least 2 observations")
    std = float(r.std(ddof=1))
    if std <= 0.0:
        raise BacktestError("Sharpe ratio undefined for zero return variance")
    annual_ret = float(r.mean()) * periods_per_year
    annual_std = std * np.sqrt(periods_per_year)
    return annual_ret / annual_std


def run_backtest(
    panel: UniversePanel,
    portfolio_ids=tuple(range(1, 13)),
    window: int = 365,
    cap: float = 0.300,
    forecasts: dict[str, tsmodel.RollingForecasts] | None = None,
    order_refit_every: int = 30,
    max_p: int = 4,
    max_q: int = 4,
) -> BacktestOutput:
    """Walk the panel forward one day at a time and rebalance every portfolio.

    For out-of-sample day d, all weights use information through day d - 1:
    window statistics over [d - window, d - 1], day d - 1 amounts/betas for
    the benchmarks, and one-step forecasts targeted at day d for portfolios
    10-12. Realized returns use regular day-d returns; reported volatility is
    sqrt(w' Sigma_regular w) on the same window.
    """
    specs = [portfolio_spec(pid) for pid in portfolio_ids]
    n_days = panel.n_days
    if n_days < window + 1:
        raise BacktestError(f"panel has {n_days} days, needs at least window + 1 = {window + 1}")
    oos_days = np.arange(window, n_days)
    n_oos = oos_days.size
    n_assets = panel.n_assets

    needed_bases = sorted({s.basis_key for s in specs if s.kind == "mv_forecast"})
    forecasts = dict(forecasts) if forecasts else {}
    for basis in needed_bases:
        if basis not in forecasts:
            series = {a: panel.basis_matrix(basis)[j] for j, a in enumerate(panel.assets)}
            forecasts[basis] = tsmodel.rolling_forecasts(
                series, window=window, order_refit_every=order_refit_every, max_p=max_p, max_q=max_q
            )
    gap_cells = sum(int((~f.converged).sum()) for f in forecasts.values())

    market = panel.market_returns()
    weights_log = {s.id: np.zeros((n_oos, 1 + n_assets)) for s in specs}
    returns = {s.id: np.zeros(n_oos) for s in specs}
    vols = {s.id: np.zeros(n_oos) for s in specs}
    lam_clamped_days = 0

    mv_specs = [s for s in specs if s.uses_optimizer]
    for k, d in enumerate(oos_days):
        t = d - 1
        win = slice(d - window, d)
        sigma_reg_full = _extended_cov(panel.r_regular[:, win])
        lam = None
        if mv_specs:
            lam, clamped = risk_aversion(market[win])
            lam_clamped_days += int(clamped)

        for spec in specs:
            if spec.uses_optimizer:
                basis = panel.basis_matrix(spec.basis_key)
                sigma = sigma_reg_full if spec.basis_key == "regular" else _extended_cov(basis[:, win])
                if spec.kind == "mv_standard":
                    mu_risky = basis[:, win].mean(axis=1)
                else:
                    fc = forecasts[spec.basis_key]
                    row = int(np.searchsorted(fc.day_indices, d))
                    if row >= fc.day_indices.size or fc.day_indices[row] != d:
                        raise BacktestError(f"no forecast available for day {d}")
                    mu_risky = fc.mu_hat[row]
                mu = np.concatenate(([0.0], mu_risky))
                problem = MvProblem(mu=mu, sigma=sigma, lam=lam, cap=cap, riskfree_index=0)
                w = solve_mv(problem).weights
            else:
                betas = panel.beta_jump(spec.treatment)[:, t] if spec.treatment != "n/a" else None
                risky = benchmark_weights(spec, panel.amount[:, t], betas)
                w = np.concatenate(([0.0], risky))
            weights_log[spec.id][k] = w
            returns[spec.id][k] = float(w[1:] @ panel.r_regular[:, d])
            vols[spec.id][k] = float(np.sqrt(max(w @ sigma_reg_full @ w, 0.0)))

    reports = {}
    for spec in specs:
        r = returns[spec.id]
        v = vols[spec.id]
        std = float(r.std(ddof=1)) if r.size > 1 else 0.0
        reports[spec.id] = BacktestReport(
            portfolio_id=spec.id,
            day_indices=oos_days,
            daily_returns=r,
            daily_volatility=v,
            max_daily_return=float(r.max()),
            max_daily_volatility=float(v.max()),
            annualized_return=float(r.mean()) * TRADING_DAYS_PER_YEAR,
            annualized_volatility=std * float(np.sqrt(TRADING_DAYS_PER_YEAR)),
            sharpe=sharpe_annualized(r) if r.size > 1 and std > 0.0 else float("nan"),
        )
    return BacktestOutput(
        reports=reports,
        weights=weights_log,
        asset_columns=[RISKFREE_NAME] + list(panel.assets),
        day_indices=oos_days,
        lambda_clamped_days=lam_clamped_days,
        forecast_gap_cells=gap_cells,
    )


def _extended_cov(window_matrix: np.ndarray) -> np.ndarray:
    """Sample covariance of the risky assets with a zero USDT row/column prepended."""
    n = window_matrix.shape[0]
    sigma = np.zeros((n + 1, n + 1))
    sigma[1:, 1:] = np.cov(window_matrix, ddof=1)
    return sigma


def table3_summary(reports: dict[int, BacktestReport]) -> dict:
    """Three-panel summary: max daily return, max daily volatility, Sharpe."""
    ids = sorted(reports)
    return {
        "panel_a_max_daily_return": {str(i): reports[i].max_daily_return for i in ids},
        "panel_b_max_daily_volatility": {str(i): reports[i].max_daily_volatility for i in ids},
        "panel_c_annualized_sharpe": {str(i): reports[i].sharpe for i in ids},
    }


def perturb_panel(panel: UniversePanel, day: int, seed: int = 0) -> UniversePanel:
    """Replace every series value at `day` with seeded noise (information-barrier audits)."""
    rng = np.random.Generator(np.random.Philox(key=seed))

    def scramble(arr: np.ndarray, scale: float) -> np.ndarray:
        out = arr.copy()
        out[:, day] = scale * (1.0 + np.abs(rng.standard_normal(arr.shape[0])))
        return out

    return UniversePanel(
        assets=list(panel.assets),
        r_regular=scramble(panel.r_regular, 0.25),
        r_adj_treated=scramble(panel.r_adj_treated, 0.2),
        r_adj_untreated=scramble(panel.r_adj_untreated, 0.2),
        amount=scramble(panel.amount, 1e9),
        beta_jump_treated=scramble(panel.beta_jump_treated, 5.0),
        beta_jump_untreated=scramble(panel.beta_jump_untreated, 5.0),
    )


def write_weights_csv(output: BacktestOutput, path) -> None:
    """Export: date_index,portfolio_id,asset,weight."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date_index,portfolio_id,asset,weight\n")
        for pid in sorted(output.weights):
            W = output.weights[pid]
            for k, d in enumerate(output.day_indices):
                for j, asset in enumerate(output.asset_columns):
                    fh.write(f"{d},{pid},{asset},{W[k, j]:.12g}\n")


def write_daily_returns_csv(output: BacktestOutput, path) -> None:
    """Export: date_index,portfolio_id,return,volatility."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date_index,portfolio_id,return,volatility\n")
        for pid in sorted(output.reports):
            rep = output.reports[pid]
            for k, d in enumerate(rep.day_indices):
                fh.write(f"{d},{pid},{rep.daily_returns[k]:.12g},{rep.daily_volatility[k]:.12g}\n")
