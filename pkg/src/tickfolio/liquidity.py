"""Minute and daily liquidity-adjusted returns, liquidity jump/diffusion betas.

The minute adjustment reweights each contributing minute by
eta * (|r_t| / mean|r|) / (A_t / mean A), with eta chosen so the weights sum
to the number of contributing minutes. The daily liquidity jump beta is the
capped ratio |r_daily / r_daily_adj|, the diffusion beta the capped ratio
sigma_daily / sigma_daily_adj.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tickfolio.ingest import DayBars

DEFAULT_BETA_CAP = 10.0
EXTREME_JUMP_THRESHOLD = 4.0
EXTREME_DIFFUSION_THRESHOLD = 2.5


@dataclass
class DayLiquidityRecord:
    """Minute-level adjustment outputs and daily aggregates for one asset-day."""

    day_index: int
    eta: float = 1.0
    r: np.ndarray | None = None
    r_adj: np.ndarray | None = None
    beta_minute: np.ndarray | None = None
    contributing: np.ndarray | None = None
    degenerate: bool = False
    amount_daily: float = 0.0
    r_daily: float = np.nan
    r_daily_adj: float = np.nan
    sigma_daily: float = np.nan
    sigma_daily_adj: float = np.nan
    beta_jump: float = np.nan
    beta_diff: float = np.nan


@dataclass
class BetaStats:
    """Descriptive statistics of one daily beta series across days."""

    count: int
    mean: float
    std: float
    min: float
    p25: float
    median: float
    p75: float
    max: float
    days_at_max: int
    pct_days_at_max: float
    weight_in_beta: float
    days_ge_mean: int
    pct_days_ge_mean: float
    days_ge_1: int
    pct_days_ge_1: float
    days_le_0_1: int
    pct_days_le_0_1: float
    cap: float = DEFAULT_BETA_CAP


def minute_liquidity(bars: DayBars) -> DayLiquidityRecord:
    """Populate the minute-level adjustment for one asset-day of bars.

    A minute contributes when it traded (count > 0, amount > 0) and moved
    (r != 0); non-contributing minutes keep r_adj = r and beta = 1. A day with
    no contributing minutes is flagged degenerate.
    """
    r = np.asarray(bars.r, dtype=np.float64)
    amount = np.asarray(bars.amount, dtype=np.float64)
    contributing = (bars.trade_count > 0) & (r != 0.0) & (amount > 0.0)

    rec = DayLiquidityRecord(
        day_index=bars.day_index,
        r=r,
        contributing=contributing,
        amount_daily=float(amount.sum()),
    )
    if not contributing.any():
        rec.degenerate = True
        rec.r_adj = r.copy()
        rec.beta_minute = np.ones_like(r)
        return rec

    abs_r = np.abs(r[contributing])
    amt = amount[contributing]
    ratio = (abs_r / abs_r.mean()) / (amt / amt.mean())
    eta = contributing.sum() / ratio.sum()
    weight = eta * ratio

    r_adj = r.copy()
    r_adj[contributing] = np.sqrt(weight) * r[contributing]
    beta_minute = np.ones_like(r)
    beta_minute[contributing] = 1.0 / np.sqrt(weight)

    rec.eta = float(eta)
    rec.r_adj = r_adj
    rec.beta_minute = beta_minute
    return rec


def daily_aggregate(rec: DayLiquidityRecord, compound: bool = False) -> DayLiquidityRecord:
    """Fill the daily return/volatility fields from the minute ones.

    Default aggregation is the first-order sum of minute returns; the
    compounded product is available for sensitivity runs.
    """
    if rec.r is None or rec.r_adj is None:
        raise ValueError("minute fields must be populated before daily aggregation")
    n = rec.r.shape[0]
    if compound:
        rec.r_daily = float(np.prod(1.0 + rec.r) - 1.0)
        rec.r_daily_adj = float(np.prod(1.0 + rec.r_adj) - 1.0)
    else:
        rec.r_daily = float(rec.r.sum())
        rec.r_daily_adj = float(rec.r_adj.sum())
    rec.sigma_daily = float(np.sqrt(n * np.mean((rec.r - rec.r.mean()) ** 2)))
    rec.sigma_daily_adj = float(np.sqrt(n * np.mean((rec.r_adj - rec.r_adj.mean()) ** 2)))
    return rec


def daily_betas(rec: DayLiquidityRecord, cap: float = DEFAULT_BETA_CAP) -> tuple[float, float]:
    """Capped liquidity jump and diffusion betas for one day.

    Degenerate ratios: 0/0 maps to the equilibrium value 1, x/0 to the cap.
    """
    rec.beta_jump = _capped_ratio(abs(rec.r_daily), abs(rec.r_daily_adj), cap)
    rec.beta_diff = _capped_ratio(rec.sigma_daily, rec.sigma_daily_adj, cap)
    return rec.beta_jump, rec.beta_diff


def _capped_ratio(num: float, den: float, cap: float) -> float:
    if den == 0.0:
        return 1.0 if num == 0.0 else cap
    return min(num / den, cap)


def classify_extreme(
    rec: DayLiquidityRecord,
    jump_threshold: float = EXTREME_JUMP_THRESHOLD,
    diffusion_threshold: float = EXTREME_DIFFUSION_THRESHOLD,
) -> dict[str, bool]:
    """Flag days whose betas reach the extreme-liquidity thresholds (inclusive)."""
    return {
        "extreme_jump": bool(rec.beta_jump >= jump_threshold),
        "extreme_diffusion": bool(rec.beta_diff >= diffusion_threshold),
    }


def day_record(bars: DayBars, cap: float = DEFAULT_BETA_CAP, compound: bool = False) -> DayLiquidityRecord:
    """Convenience: minute adjustment, daily aggregation and betas in one call."""
    rec = minute_liquidity(bars)
    daily_aggregate(rec, compound=compound)
    daily_betas(rec, cap=cap)
    return rec


def beta_stats(records: list[DayLiquidityRecord], which: str, cap: float = DEFAULT_BETA_CAP) -> BetaStats:
    """Descriptive statistics of the jump or diffusion beta across day records."""
    if not records:
        raise ValueError("beta_stats requires at least one day record")
    if which == "jump":
        betas = np.array([r.beta_jump for r in records])
    elif which == "diffusion":
        betas = np.array([r.beta_diff for r in records])
    else:
        raise ValueError(f"which must be 'jump' or 'diffusion', got {which!r}")

    n = betas.size
    mean = float(betas.mean())
    days_at_max = int((betas == cap).sum())
    total = float(betas.sum())
    days_ge_mean = int((betas >= mean).sum())
    days_ge_1 = int((betas >= 1.0).sum())
    days_le = int((betas <= 0.1).sum())
    return BetaStats(
        count=n,
        mean=mean,
        std=float(betas.std(ddof=1)) if n > 1 else 0.0,
        min=float(betas.min()),
        p25=float(np.percentile(betas, 25.0)),
        median=float(np.percentile(betas, 50.0)),
        p75=float(np.percentile(betas, 75.0)),
        max=float(betas.max()),
        days_at_max=days_at_max,
        pct_days_at_max=100.0 * days_at_max / n,
        weight_in_beta=100.0 * days_at_max * cap / total if total > 0 else 0.0,
        days_ge_mean=days_ge_mean,
        pct_days_ge_mean=100.0 * days_ge_mean / n,
        days_ge_1=days_ge_1,
        pct_days_ge_1=100.0 * days_ge_1 / n,
        days_le_0_1=days_le,
        pct_days_le_0_1=100.0 * days_le / n,
        cap=cap,
    )


# row labels as they appear in the published beta tables
_STATS_ROWS = (
    ("count", "count", None),
    ("mean", "mean", None),
    ("std", "std", None),
    ("min", "min", None),
    ("25%", "p25", None),
    ("50% (median)", "median", None),
    ("75%", "p75", None),
    ("max", "max", None),
    ("highest days (= max)", "days_at_max", "pct_days_at_max"),
    ("weight in beta", "weight_in_beta", None),
    ("highest days (>= mean)", "days_ge_mean", "pct_days_ge_mean"),
    ("highest days (>= 1)", "days_ge_1", "pct_days_ge_1"),
    ("lowest days (<= 0.10)", "days_le_0_1", "pct_days_le_0_1"),
)


def beta_stats_rows(stats: BetaStats) -> list[list]:
    """Render BetaStats as ordered [label, value] rows (with '% of total days'
    companion rows), mirroring the published table layout."""
    rows: list[list] = []
    for label, attr, pct_attr in _STATS_ROWS:
        rows.append([label, getattr(stats, attr)])
        if pct_attr is not None:
            rows.append(["% of total days", getattr(stats, pct_attr)])
    return rows


def export_beta_tables(records: list[DayLiquidityRecord]) -> list[tuple]:
    """Per-day rows (day, r_daily, r_daily_adj, sigma_daily, sigma_daily_adj,
    beta_jump, beta_diff) backing the scatter/histogram figures."""
    return [
        (
            r.day_index,
            r.r_daily,
            r.r_daily_adj,
            r.sigma_daily,
            r.sigma_daily_adj,
            r.beta_jump,
            r.beta_diff,
        )
        for r in records
    ]


DAY_RECORD_HEADER = "day,r_daily,r_daily_adj,sigma_daily,sigma_daily_adj,beta_jump,beta_diff"


def write_day_records_csv(records: list[DayLiquidityRecord], path) -> None:
    """Write the per-day export rows at 12 significant digits."""
    rows = export_beta_tables(records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DAY_RECORD_HEADER + "\n")
        for row in rows:
            day, *vals = row
            fh.write(str(day) + "," + ",".join(f"{v:.12g}" for v in vals) + "\n")


def read_day_records_csv(path) -> list[tuple]:
    """Read back rows written by write_day_records_csv."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != DAY_RECORD_HEADER:
            raise ValueError(f"unexpected day-record header in {path}")
        for line in fh:
            parts = line.strip().split(",")
            out.append((int(parts[0]), *(float(v) for v in parts[1:])))
    return out
